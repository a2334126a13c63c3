#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "bioinverse/cli.hpp"
#include "bioinverse/errors.hpp"
#include "bioinverse/io.hpp"
#include "bioinverse/models.hpp"

using namespace bioinverse;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("bioinverse-cli-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path operator/(const std::string& name) const { return path / name; }
    static int counter;
};
int TempDir::counter = 0;

json bump_config_json() {
    json j;
    j["model"] = {{"kind", "bump"}};
    j["parameters"] = json::array();
    j["parameters"].push_back({{"name", "p1"}, {"lower", -2.0}, {"upper", 2.0}});
    j["parameters"].push_back({{"name", "p2"}, {"lower", -2.0}, {"upper", 2.0}});
    json indices = json::array();
    for (std::size_t i = 15; i <= 165; i += 10) indices.push_back(i);
    j["rays"] = {{"indices", indices}};
    j["sigmas"] = {0.0, 1e-4, 1e-3, 1e-2};
    j["seed"] = 42;
    j["theta_true"] = {0.3, 0.1};
    j["initial_guesses"] = {{0.15, 0.05}, {0.45, 0.15}, {0.2, 0.14}};
    return j;
}

fs::path write_config(const TempDir& dir, const json& j,
                      const std::string& name = "config.json") {
    const auto p = dir / name;
    std::ofstream out(p);
    out << j.dump(2) << "\n";
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int count_data_rows(const fs::path& csv) {
    std::ifstream in(csv);
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        ++rows;
    }
    return rows - 1; // header
}

} // namespace

TEST_CASE("a run config loads with documented defaults") {
    TempDir dir;
    const auto path = write_config(dir, bump_config_json());
    const auto cfg = load_run_config(path);
    REQUIRE(cfg.model != nullptr);
    CHECK(cfg.model->id() == "bump");
    CHECK(cfg.parameters.names == std::vector<std::string>{"p1", "p2"});
    CHECK(cfg.parameters.lower[0] == -2.0);
    CHECK(cfg.parameters.upper[1] == 2.0);
    CHECK(cfg.lm.alpha == 1e-5);
    CHECK(cfg.lm.beta == 1e-3);
    CHECK(cfg.lm.mu0 == 1e-3);
    CHECK(cfg.lm.eps_grad == 1e-8);
    CHECK(cfg.lm.eps_res == 0.0);
    CHECK(cfg.lm.n_max == 40);
    CHECK(cfg.lm.mu_blowup == 1e6);
    CHECK(cfg.rays.indices.size() == 16);
    CHECK(cfg.rays.into_biofilm);
    CHECK(!cfg.rays.max_length.has_value());
    CHECK(cfg.sigmas == std::vector<double>{0.0, 1e-4, 1e-3, 1e-2});
    CHECK(cfg.seed == 42);
    REQUIRE(cfg.initial_guesses.size() == 3);
    CHECK(cfg.initial_guesses[0][0] == 0.15);
    CHECK(cfg.theta_true.size() == 2);
    CHECK(cfg.config_hash.substr(0, 8) == "fnv1a64:");
    CHECK(cfg.config_hash.size() == 8 + 16);
}

TEST_CASE("config validation rejects the documented mistakes") {
    TempDir dir;
    SUBCASE("unknown model kind") {
        auto j = bump_config_json();
        j["model"]["kind"] = "dragon";
        CHECK_THROWS_AS((void)load_run_config(write_config(dir, j)), ValidationError);
    }
    SUBCASE("duplicate parameter names") {
        auto j = bump_config_json();
        j["parameters"][1]["name"] = "p1";
        CHECK_THROWS_AS((void)load_run_config(write_config(dir, j)), ValidationError);
    }
    SUBCASE("parameter names must match the model") {
        auto j = bump_config_json();
        j["parameters"][0]["name"] = "q1";
        CHECK_THROWS_AS((void)load_run_config(write_config(dir, j)), ValidationError);
    }
    SUBCASE("negative sigma") {
        auto j = bump_config_json();
        j["sigmas"] = {-1e-4};
        CHECK_THROWS_AS((void)load_run_config(write_config(dir, j)), ValidationError);
    }
    SUBCASE("guess outside the box") {
        auto j = bump_config_json();
        j["initial_guesses"] = {{3.0, 0.0}};
        CHECK_THROWS_AS((void)load_run_config(write_config(dir, j)), ValidationError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS((void)load_run_config(dir / "nope.json"), ValidationError);
    }
}

TEST_CASE("forward at the identity reproduces the reference interface") {
    TempDir dir;
    const auto cfg = write_config(dir, bump_config_json());
    CliOptions opt;
    opt.config = cfg;
    opt.out = dir / "fwd";
    opt.theta = std::vector<double>{0.0, 0.0};
    REQUIRE(cmd_forward(opt) == kExitOk);
    const auto curve = read_curve_csv(dir / "fwd" / "interface.csv",
                                      dir / "fwd" / "interface.json");
    const auto want = bump_reference_curve();
    REQUIRE(curve.vertices.size() == want.vertices.size());
    for (std::size_t i = 0; i < want.vertices.size(); ++i) {
        CHECK(curve.vertices[i].x == want.vertices[i].x);
        CHECK(curve.vertices[i].y == want.vertices[i].y);
    }
    CHECK(curve.biofilm_on_right == want.biofilm_on_right);

    const auto bytes = slurp(dir / "fwd" / "interface.csv");
    CliOptions again = opt;
    again.out = dir / "fwd2";
    REQUIRE(cmd_forward(again) == kExitOk);
    CHECK(slurp(dir / "fwd2" / "interface.csv") == bytes);
}

TEST_CASE("forward rejects invalid evaluation points") {
    TempDir dir;
    const auto cfg = write_config(dir, bump_config_json());
    CliOptions opt;
    opt.config = cfg;
    opt.out = dir / "fwd";
    opt.theta = std::vector<double>{7.0, 0.0}; // beyond the injectivity box
    CHECK(cmd_forward(opt) == kExitValidation);
    opt.theta = std::vector<double>{0.0};
    CHECK(cmd_forward(opt) == kExitValidation);
}

TEST_CASE("forward rejects a missing scenario file") {
    TempDir dir;
    json j = bump_config_json();
    j["model"] = {{"kind", "fem"}, {"scenario", "missing-scenario.json"}};
    j["parameters"] = json::array();
    j["parameters"].push_back({{"name", "E"}, {"lower", 50.0}, {"upper", 2000.0}});
    j["parameters"].push_back({{"name", "nu"}, {"lower", -0.95}, {"upper", 0.45}});
    j["initial_guesses"] = {{200.0, 0.0}};
    j["theta_true"] = {400.0, 0.3};
    const auto cfg = write_config(dir, j);
    CliOptions opt;
    opt.config = cfg;
    opt.out = dir / "fwd";
    opt.theta = std::vector<double>{400.0, 0.3};
    CHECK(cmd_forward(opt) == kExitValidation);
}

TEST_CASE("synth writes one reproducible observation per noise level") {
    TempDir dir;
    const auto cfg = write_config(dir, bump_config_json());
    CliOptions opt;
    opt.config = cfg;
    opt.out = dir / "synth";
    REQUIRE(cmd_synth(opt) == kExitOk);
    for (int level = 0; level < 4; ++level) {
        const auto path = dir / "synth" / ("obs_" + std::to_string(level) + ".json");
        REQUIRE(fs::exists(path));
        const auto obs = read_observation_json(path);
        CHECK(obs.provenance.sigma ==
              std::vector<double>{0.0, 1e-4, 1e-3, 1e-2}[static_cast<std::size_t>(level)]);
        CHECK(obs.provenance.seed ==
              NoiseStream::derive(42, static_cast<std::uint64_t>(level)));
        CHECK(obs.provenance.model_id == "bump");
        CHECK(obs.rays.size() == 16);
    }
    const auto bytes = slurp(dir / "synth" / "obs_3.json");
    CliOptions again = opt;
    again.out = dir / "synth2";
    REQUIRE(cmd_synth(again) == kExitOk);
    CHECK(slurp(dir / "synth2" / "obs_3.json") == bytes);
}

TEST_CASE("invert recovers the generator parameters from clean data") {
    TempDir dir;
    const auto cfg = write_config(dir, bump_config_json());
    CliOptions synth_opt;
    synth_opt.config = cfg;
    synth_opt.out = dir / "synth";
    REQUIRE(cmd_synth(synth_opt) == kExitOk);

    CliOptions opt;
    opt.config = cfg;
    opt.out = dir / "inv";
    opt.observation = dir / "synth" / "obs_0.json";
    opt.theta = std::vector<double>{0.15, 0.05};
    REQUIRE(cmd_invert(opt) == kExitOk);

    LMResult result;
    REQUIRE(read_result_json(dir / "inv" / "result.json", result));
    CHECK(result.status == LMStatus::converged_grad);
    CHECK(std::abs(result.x[0] - 0.3) / 0.3 <= 1e-5);
    CHECK(std::abs(result.x[1] - 0.1) / 0.1 <= 1e-5);

    const auto rows = read_trace_csv(dir / "inv" / "trace.csv");
    CHECK(rows.size() >= 2);
    CHECK(rows.back().status == "terminated");
}

TEST_CASE("invert maps optimizer outcomes onto exit codes") {
    TempDir dir;
    const auto base = bump_config_json();
    const auto cfg = write_config(dir, base);
    CliOptions synth_opt;
    synth_opt.config = cfg;
    synth_opt.out = dir / "synth";
    REQUIRE(cmd_synth(synth_opt) == kExitOk);

    SUBCASE("an optimum outside the box exits 3") {
        auto j = base;
        j["parameters"][0]["lower"] = 0.5;
        j["parameters"][0]["upper"] = 2.0;
        j["parameters"][1]["lower"] = 0.5;
        j["parameters"][1]["upper"] = 2.0;
        j["initial_guesses"] = {{0.9, 0.9}};
        j["lm"] = {{"n_max", 200}};
        const auto boxed = write_config(dir, j, "boxed.json");
        CliOptions opt;
        opt.config = boxed;
        opt.out = dir / "inv3";
        opt.observation = dir / "synth" / "obs_0.json";
        CHECK(cmd_invert(opt) == kExitMuBlowup);
    }
    SUBCASE("an exhausted iteration budget exits 5") {
        auto j = base;
        j["lm"] = {{"n_max", 2}, {"eps_grad", 1e-300}};
        const auto capped = write_config(dir, j, "capped.json");
        CliOptions opt;
        opt.config = capped;
        opt.out = dir / "inv5";
        opt.observation = dir / "synth" / "obs_0.json";
        CHECK(cmd_invert(opt) == kExitMaxIterations);
    }
    SUBCASE("a model breakdown exits 4") {
        auto j = base;
        j["rays"]["max_length"] = 1e-6;
        const auto tight = write_config(dir, j, "tight.json");
        CliOptions synth_tight;
        synth_tight.config = tight;
        synth_tight.out = dir / "synth-tight";
        REQUIRE(cmd_synth(synth_tight) == kExitOk);
        CliOptions opt;
        opt.config = tight;
        opt.out = dir / "inv4";
        opt.observation = dir / "synth-tight" / "obs_0.json";
        opt.theta = std::vector<double>{0.15, 0.05};
        CHECK(cmd_invert(opt) == kExitModelFailure);
    }
    SUBCASE("an observation from another model exits 2") {
        auto path = dir / "synth" / "obs_0.json";
        auto j = json::parse(slurp(path));
        j["provenance"]["model_id"] = "growth";
        std::ofstream(dir / "alien.json") << j.dump(2);
        CliOptions opt;
        opt.config = cfg;
        opt.out = dir / "inv2";
        opt.observation = dir / "alien.json";
        CHECK(cmd_invert(opt) == kExitValidation);
    }
}

TEST_CASE("campaign writes traces, results and a summary, and resumes") {
    TempDir dir;
    auto j = bump_config_json();
    j["sigmas"] = {0.0, 1e-4};
    const auto cfg = write_config(dir, j);
    CliOptions opt;
    opt.config = cfg;
    opt.out = dir / "camp";
    REQUIRE(cmd_campaign(opt) == kExitOk);

    for (int l = 0; l < 2; ++l) {
        for (int g = 0; g < 3; ++g) {
            const auto run_dir = dir / "camp" / "runs" /
                                 ("L" + std::to_string(l) + "_g" + std::to_string(g));
            CHECK(fs::exists(run_dir / "trace.csv"));
            CHECK(fs::exists(run_dir / "result.json"));
        }
    }
    REQUIRE(fs::exists(dir / "camp" / "summary.csv"));
    CHECK(count_data_rows(dir / "camp" / "summary.csv") == 2);

    // Completed runs are left alone when the campaign is re-entered.
    const auto sentinel_path = dir / "camp" / "runs" / "L0_g1" / "result.json";
    auto sentinel = json::parse(slurp(sentinel_path));
    sentinel["x"][0] = 0.123456789;
    std::ofstream(sentinel_path) << sentinel.dump(2);
    const auto sentinel_bytes = slurp(sentinel_path);
    fs::remove(dir / "camp" / "runs" / "L1_g2" / "result.json");
    REQUIRE(cmd_campaign(opt) == kExitOk);
    CHECK(slurp(sentinel_path) == sentinel_bytes);
    CHECK(fs::exists(dir / "camp" / "runs" / "L1_g2" / "result.json"));

    SUBCASE("report turns the campaign into tidy per-run and merged files") {
        CliOptions rep;
        rep.config = cfg;
        rep.run_dir = dir / "camp";
        rep.out = dir / "rep";
        REQUIRE(cmd_report(rep) == kExitOk);
        CHECK(fs::exists(dir / "rep" / "tidy_runs_L0_g0.csv"));
        CHECK(fs::exists(dir / "rep" / "tidy_runs_L1_g2.csv"));
        REQUIRE(fs::exists(dir / "rep" / "report_all.csv"));
        std::ifstream in(dir / "rep" / "report_all.csv");
        std::string line;
        std::getline(in, line); // provenance
        std::getline(in, line);
        CHECK(line == "run,k,err_res_mm,err_grad,mu,x_0,x_1");
    }
}

TEST_CASE("report handles a single inversion directory") {
    TempDir dir;
    const auto cfg = write_config(dir, bump_config_json());
    CliOptions synth_opt;
    synth_opt.config = cfg;
    synth_opt.out = dir / "synth";
    REQUIRE(cmd_synth(synth_opt) == kExitOk);
    CliOptions inv;
    inv.config = cfg;
    inv.out = dir / "inv";
    inv.observation = dir / "synth" / "obs_0.json";
    REQUIRE(cmd_invert(inv) == kExitOk);

    CliOptions rep;
    rep.config = cfg;
    rep.run_dir = dir / "inv";
    rep.out = dir / "rep";
    REQUIRE(cmd_report(rep) == kExitOk);
    const auto tidy = dir / "rep" / "tidy_root.csv";
    REQUIRE(fs::exists(tidy));

    // One row per iteration: the trace may repeat k on declined proposals,
    // the tidy file may not.
    const auto rows = read_trace_csv(dir / "inv" / "trace.csv");
    int distinct = 0, last = -1;
    for (const auto& r : rows) {
        if (r.k != last) {
            ++distinct;
            last = r.k;
        }
    }
    CHECK(count_data_rows(tidy) == distinct);
}

TEST_CASE("report refuses a directory without traces") {
    TempDir dir;
    fs::create_directories(dir / "empty");
    CliOptions rep;
    rep.config = write_config(dir, bump_config_json());
    rep.run_dir = dir / "empty";
    rep.out = dir / "rep";
    CHECK(cmd_report(rep) == kExitValidation);
}

TEST_CASE("the binary honors the documented flag surface") {
    const char* bin = std::getenv("BIOINVERSE_BIN");
    REQUIRE(bin != nullptr);
    TempDir dir;
    const auto cfg = write_config(dir, bump_config_json());
    auto run = [&](const std::string& args) {
        const std::string cmd = std::string(bin) + " " + args + " >/dev/null 2>&1";
        const int rc = std::system(cmd.c_str());
        return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    };
    CHECK(run("") == kExitValidation);
    CHECK(run("conquer") == kExitValidation);
    CHECK(run("--help") == kExitOk);
    CHECK(run("forward --config " + (dir / "absent.json").string() + " --out " +
              (dir / "o").string() + " --theta 0,0") == kExitValidation);
    CHECK(run("forward --config " + cfg.string() + " --out " + (dir / "o").string() +
              " --theta 0,0") == kExitOk);
    CHECK(run("synth --config " + cfg.string() + " --out " + (dir / "s").string() +
              " --seed 7") == kExitOk);
    const auto obs = read_observation_json(dir / "s" / "obs_0.json");
    CHECK(obs.provenance.seed == NoiseStream::derive(7, 0));
}
