#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "bioinverse/fem.hpp"
#include "bioinverse/io.hpp"
#include "bioinverse/models.hpp"
#include "bioinverse/synth.hpp"

using namespace bioinverse;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("bioinverse-test-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path operator/(const std::string& name) const { return path / name; }
    static int counter;
};
int TempDir::counter = 0;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

Provenance prov() {
    Provenance p;
    p.subcommand = "synth";
    p.config_hash = "fnv1a64:0123456789abcdef";
    p.seed = 42;
    p.model_id = "bump";
    return p;
}

InterfaceCurve sample_curve() {
    InterfaceCurve c;
    c.vertices = {{-0.3, 0.0}, {0.1, 0.25}, {0.30000000000000004, 1e-17}};
    c.closed = false;
    c.biofilm_on_right = true;
    return c;
}

} // namespace

TEST_CASE("the fingerprint hash matches its published test vectors") {
    CHECK(fnv1a64("") == 14695981039346656037ull);
    CHECK(fnv1a64("a") == 12638187200555641996ull);
    CHECK(fnv1a64("foobar") == 9625390261332436968ull);
    CHECK(fnv1a64_hex("") == "cbf29ce484222325");
    CHECK(fnv1a64_hex("bioinverse") == "8cfe656e46af0747");
}

TEST_CASE("doubles are printed with full round-trip precision") {
    CHECK(fmt_g17(0.1) == "0.10000000000000001");
    CHECK(fmt_g17(400.0) == "400");
    CHECK(fmt_g17(0.0) == "0");
    for (double v : {1e-300, -3.5355339059327378, 2.6785714285714286e-11,
                     86400.0, 5.165856}) {
        CHECK(std::stod(fmt_g17(v)) == v);
    }
}

TEST_CASE("provenance renders as one comment line and one JSON object") {
    const auto p = prov();
    CHECK(p.comment_line() ==
          "# bioinverse 0.1.0 synth config=fnv1a64:0123456789abcdef seed=42 "
          "model=bump");
    const auto j = p.to_json();
    CHECK(j.at("tool") == "bioinverse");
    CHECK(j.at("version") == "0.1.0");
    CHECK(j.at("subcommand") == "synth");
    CHECK(j.at("config_hash") == "fnv1a64:0123456789abcdef");
    CHECK(j.at("seed") == 42);
    CHECK(j.at("model_id") == "bump");
}

TEST_CASE("curves survive the CSV round trip exactly") {
    TempDir dir;
    const auto curve = sample_curve();
    const auto csv = dir / "curve.csv";
    const auto sidecar = dir / "curve.json";
    write_curve_csv(csv, curve, prov());
    write_curve_sidecar(sidecar, curve, prov());
    CHECK(first_line(csv) == prov().comment_line());
    {
        std::ifstream in(csv);
        std::string line;
        std::getline(in, line); // comment
        std::getline(in, line);
        CHECK(line == "x_mm,y_mm");
    }
    const auto back = read_curve_csv(csv, sidecar);
    REQUIRE(back.vertices.size() == curve.vertices.size());
    for (std::size_t i = 0; i < curve.vertices.size(); ++i) {
        CHECK(back.vertices[i].x == curve.vertices[i].x);
        CHECK(back.vertices[i].y == curve.vertices[i].y);
    }
    CHECK(back.closed == curve.closed);
    CHECK(back.biofilm_on_right == curve.biofilm_on_right);
}

TEST_CASE("writing the same curve twice produces identical bytes") {
    TempDir dir;
    const auto a = dir / "a.csv";
    const auto b = dir / "b.csv";
    write_curve_csv(a, sample_curve(), prov());
    write_curve_csv(b, sample_curve(), prov());
    CHECK(slurp(a) == slurp(b));
}

TEST_CASE("rays survive the CSV round trip exactly") {
    TempDir dir;
    std::vector<MeasurementRay> rays = {
        {{0.1, 0.2}, {0.0, -1.0}, 0.8485281374238571},
        {{-0.25, 0.3}, {0.6, 0.8}, 1.25},
    };
    const auto path = dir / "rays.csv";
    write_rays_csv(path, rays, prov());
    {
        std::ifstream in(path);
        std::string line;
        std::getline(in, line);
        std::getline(in, line);
        CHECK(line == "ox_mm,oy_mm,dx,dy,max_length_mm");
    }
    const auto back = read_rays_csv(path);
    REQUIRE(back.size() == rays.size());
    for (std::size_t i = 0; i < rays.size(); ++i) {
        CHECK(back[i].origin.x == rays[i].origin.x);
        CHECK(back[i].origin.y == rays[i].origin.y);
        CHECK(back[i].direction.x == rays[i].direction.x);
        CHECK(back[i].direction.y == rays[i].direction.y);
        CHECK(back[i].max_length == rays[i].max_length);
    }
}

TEST_CASE("surface load samples survive the CSV round trip exactly") {
    TempDir dir;
    std::vector<SurfaceLoadSample> samples(2);
    samples[0] = {{0.0, 0.0}, {0.0, 1.0}, 1e-9, 1e-6, 2e-6};
    samples[1] = {{0.5, 0.1}, {0.6, 0.8}, 1.4e-9, -1e-6, 0.0};
    const auto path = dir / "samples.csv";
    write_samples_csv(path, samples, prov());
    {
        std::ifstream in(path);
        std::string line;
        std::getline(in, line);
        std::getline(in, line);
        CHECK(line == "x_mm,y_mm,nx,ny,h,snn,snt");
    }
    const auto back = read_samples_csv(path);
    REQUIRE(back.size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(back[i].position.x == samples[i].position.x);
        CHECK(back[i].normal.y == samples[i].normal.y);
        CHECK(back[i].flux_h == samples[i].flux_h);
        CHECK(back[i].sigma_nn == samples[i].sigma_nn);
        CHECK(back[i].sigma_nt == samples[i].sigma_nt);
    }
}

TEST_CASE("observations survive the JSON round trip exactly") {
    TempDir dir;
    const BumpModel model;
    ParameterVector theta(2);
    theta << 0.3, 0.1;
    RaySpec spec;
    for (std::size_t i = 20; i <= 160; i += 20) spec.indices.push_back(i);
    const auto obs = generate_observation(model, theta, spec, 1e-3, 42);
    const auto path = dir / "obs.json";
    write_observation_json(path, obs, prov());
    const auto back = read_observation_json(path);
    REQUIRE(back.rays.size() == obs.rays.size());
    REQUIRE(back.offsets.size() == obs.offsets.size());
    for (std::size_t i = 0; i < obs.rays.size(); ++i) {
        CHECK(back.rays[i].origin.x == obs.rays[i].origin.x);
        CHECK(back.rays[i].direction.y == obs.rays[i].direction.y);
        CHECK(back.rays[i].max_length == obs.rays[i].max_length);
    }
    CHECK((back.offsets - obs.offsets).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.provenance.model_id == obs.provenance.model_id);
    CHECK(back.provenance.seed == obs.provenance.seed);
    CHECK(back.provenance.sigma == obs.provenance.sigma);
    CHECK(back.provenance.generator == obs.provenance.generator);
    CHECK(back.provenance.theta_true == obs.provenance.theta_true);
}

TEST_CASE("traces keep every proposal row through the CSV round trip") {
    TempDir dir;
    LMTrace trace;
    LMRecord r0;
    r0.k = 0;
    r0.x = Eigen::Vector2d(0.15, 0.05);
    r0.err_res = 0.025;
    r0.err_grad = 0.5;
    r0.mu = 1e-3;
    r0.status = StepStatus::accepted;
    LMRecord r1 = r0;
    r1.k = 1;
    r1.x = Eigen::Vector2d(0.3, 0.1);
    r1.err_res = 1e-9;
    r1.err_grad = std::nan("");
    r1.mu = 2e-3;
    r1.status = StepStatus::terminated;
    trace.records = {r0, r1};
    const auto path = dir / "trace.csv";
    write_trace_csv(path, trace, prov());
    {
        std::ifstream in(path);
        std::string line;
        std::getline(in, line);
        CHECK(line == prov().comment_line());
        std::getline(in, line);
        CHECK(line == "k,status,mu,err_res_mm,err_grad,x_0,x_1");
    }
    const auto rows = read_trace_csv(path);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].k == 0);
    CHECK(rows[0].status == "accepted");
    CHECK(rows[0].mu == 1e-3);
    CHECK(rows[0].err_res == 0.025);
    CHECK(rows[0].err_grad == 0.5);
    REQUIRE(rows[0].x.size() == 2);
    CHECK(rows[0].x[0] == 0.15);
    CHECK(rows[0].x[1] == 0.05);
    CHECK(rows[1].status == "terminated");
    CHECK(std::isnan(rows[1].err_grad));
    CHECK(rows[1].x[0] == 0.3);
}

TEST_CASE("results survive the JSON round trip") {
    TempDir dir;
    LMResult result;
    result.status = LMStatus::converged_grad;
    result.x = Eigen::Vector2d(0.3, 0.1);
    result.iterations = 12;
    result.final_err_res = 1.5e-9;
    result.final_err_grad = 3e-10;
    result.final_mu = 2.5e-7;
    const std::vector<std::string> names = {"p1", "p2"};
    const auto path = dir / "result.json";
    write_result_json(path, result, names, prov());
    LMResult back;
    REQUIRE(read_result_json(path, back));
    CHECK(back.status == LMStatus::converged_grad);
    CHECK(back.x[0] == 0.3);
    CHECK(back.x[1] == 0.1);
    CHECK(back.iterations == 12);
    CHECK(back.final_err_res == 1.5e-9);
    CHECK(back.final_err_grad == 3e-10);
    CHECK(back.final_mu == 2.5e-7);
    LMResult missing;
    CHECK(!read_result_json(dir / "absent.json", missing));
}

TEST_CASE("status names match the documented vocabulary") {
    CHECK(std::string(to_string(LMStatus::converged_grad)) == "converged_grad");
    CHECK(std::string(to_string(LMStatus::converged_res)) == "converged_res");
    CHECK(std::string(to_string(LMStatus::max_iterations)) == "max_iterations");
    CHECK(std::string(to_string(LMStatus::mu_blowup)) == "mu_blowup");
    CHECK(std::string(to_string(LMStatus::model_failure)) == "model_failure");
    CHECK(std::string(to_string(StepStatus::accepted)) == "accepted");
    CHECK(std::string(to_string(StepStatus::declined_bounds)) == "declined_bounds");
    CHECK(std::string(to_string(StepStatus::terminated)) == "terminated");
}

TEST_CASE("meshes survive the JSON round trip") {
    TempDir dir;
    const auto mesh = make_bump_mesh(4, 2, 1.0, 0.1, 0.3);
    const auto path = dir / "mesh.json";
    write_mesh_json(path, mesh, prov());
    const auto back = read_mesh_json(path);
    REQUIRE(back.nodes.size() == mesh.nodes.size());
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
        CHECK(back.nodes[i].x == mesh.nodes[i].x);
        CHECK(back.nodes[i].y == mesh.nodes[i].y);
    }
    CHECK(back.elems == mesh.elems);
    CHECK(back.elem_material == mesh.elem_material);
    CHECK(back.node_sets == mesh.node_sets);
}

TEST_CASE("scenarios survive the JSON round trip") {
    TempDir dir;
    const auto scenario = make_heterogeneous_bump_scenario(8, 4);
    const auto j = fem_scenario_to_json(scenario);
    const auto back = fem_scenario_from_json(j, dir.path);
    CHECK(back.tag == scenario.tag);
    CHECK(back.mesh.nodes.size() == scenario.mesh.nodes.size());
    CHECK(back.mesh.node_sets == scenario.mesh.node_sets);
    REQUIRE(back.materials.size() == scenario.materials.size());
    for (std::size_t i = 0; i < scenario.materials.size(); ++i) {
        CHECK(back.materials[i].E.param == scenario.materials[i].E.param);
        CHECK(back.materials[i].E.value == scenario.materials[i].E.value);
        CHECK(back.materials[i].nu.param == scenario.materials[i].nu.param);
        CHECK(back.materials[i].nu.value == scenario.materials[i].nu.value);
    }
    REQUIRE(back.profile.size() == scenario.profile.size());
    for (std::size_t i = 0; i < scenario.profile.size(); ++i) {
        CHECK(back.profile[i].set == scenario.profile[i].set);
        CHECK(back.profile[i].span_begin == scenario.profile[i].span_begin);
        CHECK(back.profile[i].span_end == scenario.profile[i].span_end);
        CHECK(back.profile[i].t_normal == scenario.profile[i].t_normal);
        CHECK(back.profile[i].t_tangent == scenario.profile[i].t_tangent);
    }
    CHECK(back.dirichlet.size() == scenario.dirichlet.size());
    CHECK(back.options.newton_tol == scenario.options.newton_tol);
    CHECK(back.options.increments == scenario.options.increments);
}

TEST_CASE("a scenario may name a builtin instead of inlining its mesh") {
    TempDir dir;
    nlohmann::json j;
    j["builtin"] = "homogeneous-bump";
    const auto scenario = fem_scenario_from_json(j, dir.path);
    const auto want = make_homogeneous_bump_scenario();
    CHECK(scenario.tag == want.tag);
    CHECK(scenario.mesh.nodes.size() == want.mesh.nodes.size());
    CHECK(scenario.materials.size() == want.materials.size());
}

TEST_CASE("campaign summaries write the documented columns") {
    TempDir dir;
    std::vector<CampaignLevelSummary> summary(2);
    summary[0].sigma = 0.0;
    summary[0].n_completed = 5;
    summary[0].n_failed = 0;
    summary[0].mean_err_res = 1e-9;
    summary[0].std_err_res = 1e-10;
    summary[0].mean_x = Eigen::Vector2d(0.3, 0.1);
    summary[0].std_x = Eigen::Vector2d(1e-8, 2e-8);
    summary[1] = summary[0];
    summary[1].sigma = 1e-4;
    summary[1].n_failed = 1;
    const std::vector<std::string> names = {"p1", "p2"};
    const auto path = dir / "summary.csv";
    write_summary_csv(path, summary, names, prov());
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == prov().comment_line());
    std::getline(in, line);
    CHECK(line ==
          "sigma_mm,mean_err_res_mm,std_err_res_mm,mean_p1,std_p1,mean_p2,"
          "std_p2,n_completed,n_failed");
    std::getline(in, line);
    CHECK(line == "0,1.0000000000000001e-09,1e-10,0.29999999999999999,1e-08,"
                  "0.10000000000000001,2e-08,5,0");
    std::getline(in, line);
    CHECK(line.substr(0, 6) == "0.0001");
}

TEST_CASE("curve files read back without their sidecar use defaults") {
    TempDir dir;
    auto curve = sample_curve();
    curve.closed = false;
    const auto csv = dir / "c.csv";
    write_curve_csv(csv, curve, prov());
    const auto back = read_curve_csv(csv);
    CHECK(back.vertices.size() == curve.vertices.size());
    CHECK(!back.closed);
    CHECK(back.biofilm_on_right);
}
