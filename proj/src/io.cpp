#include "bioinverse/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "bioinverse/errors.hpp"
#include "bioinverse/version.hpp"

namespace bioinverse {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

std::string fnv1a64_hex(std::string_view bytes) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json Provenance::to_json() const {
    json j;
    j["tool"] = kToolName;
    j["version"] = kToolVersion;
    j["subcommand"] = subcommand;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["model_id"] = model_id;
    return j;
}

std::string Provenance::comment_line() const {
    return std::string("# ") + kToolName + " " + kToolVersion + " " + subcommand +
           " config=" + config_hash + " seed=" + std::to_string(seed) +
           " model=" + model_id;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
    if (!out) throw ValidationError("write failed for " + path.string());
}

void write_json_file(const fs::path& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

// Non-comment lines of a CSV, including the header line first.
std::vector<std::string> read_data_lines(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        lines.push_back(line);
    }
    return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

double parse_double(const std::string& s, const fs::path& path) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError(path.string() + ": bad number '" + s + "'");
    }
}

std::vector<std::vector<double>> read_numeric_csv(const fs::path& path,
                                                  std::size_t n_columns) {
    const auto lines = read_data_lines(path);
    if (lines.empty()) throw ValidationError(path.string() + ": missing header");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split_csv(lines[i]);
        if (fields.size() != n_columns)
            throw ValidationError(path.string() + ": wrong column count");
        std::vector<double> row;
        row.reserve(n_columns);
        for (const auto& f : fields) row.push_back(parse_double(f, path));
        rows.push_back(std::move(row));
    }
    return rows;
}

// NaN has no JSON representation; it is stored as null.
json json_num(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

double read_num(const json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.get<double>();
}

constexpr const char* kOrientationRight = "biofilm-right";
constexpr const char* kOrientationLeft = "biofilm-left";

} // namespace

void write_curve_csv(const fs::path& csv_path, const InterfaceCurve& curve,
                     const Provenance& prov) {
    std::string text = prov.comment_line() + "\nx_mm,y_mm\n";
    for (const auto& v : curve.vertices)
        text += fmt_g17(v.x) + "," + fmt_g17(v.y) + "\n";
    write_text(csv_path, text);
}

void write_curve_sidecar(const fs::path& json_path, const InterfaceCurve& curve,
                         const Provenance& prov) {
    json j;
    j["closed"] = curve.closed;
    j["orientation"] = curve.biofilm_on_right ? kOrientationRight : kOrientationLeft;
    j["provenance"] = prov.to_json();
    write_json_file(json_path, j);
}

InterfaceCurve read_curve_csv(const fs::path& csv_path) {
    InterfaceCurve curve;
    for (const auto& row : read_numeric_csv(csv_path, 2))
        curve.vertices.push_back({row[0], row[1]});
    return curve;
}

InterfaceCurve read_curve_csv(const fs::path& csv_path, const fs::path& sidecar_path) {
    InterfaceCurve curve = read_curve_csv(csv_path);
    if (!fs::exists(sidecar_path)) return curve;
    const json j = read_json_file(sidecar_path);
    curve.closed = j.value("closed", false);
    curve.biofilm_on_right = j.value("orientation", kOrientationRight) != kOrientationLeft;
    return curve;
}

void write_rays_csv(const fs::path& path, std::span<const MeasurementRay> rays,
                    const Provenance& prov) {
    std::string text = prov.comment_line() + "\nox_mm,oy_mm,dx,dy,max_length_mm\n";
    for (const auto& r : rays)
        text += fmt_g17(r.origin.x) + "," + fmt_g17(r.origin.y) + "," +
                fmt_g17(r.direction.x) + "," + fmt_g17(r.direction.y) + "," +
                fmt_g17(r.max_length) + "\n";
    write_text(path, text);
}

std::vector<MeasurementRay> read_rays_csv(const fs::path& path) {
    std::vector<MeasurementRay> rays;
    for (const auto& row : read_numeric_csv(path, 5))
        rays.push_back({{row[0], row[1]}, {row[2], row[3]}, row[4]});
    return rays;
}

void write_samples_csv(const fs::path& path, std::span<const SurfaceLoadSample> samples,
                       const Provenance& prov) {
    std::string text = prov.comment_line() + "\nx_mm,y_mm,nx,ny,h,snn,snt\n";
    for (const auto& s : samples)
        text += fmt_g17(s.position.x) + "," + fmt_g17(s.position.y) + "," +
                fmt_g17(s.normal.x) + "," + fmt_g17(s.normal.y) + "," +
                fmt_g17(s.flux_h) + "," + fmt_g17(s.sigma_nn) + "," +
                fmt_g17(s.sigma_nt) + "\n";
    write_text(path, text);
}

std::vector<SurfaceLoadSample> read_samples_csv(const fs::path& path) {
    std::vector<SurfaceLoadSample> samples;
    for (const auto& row : read_numeric_csv(path, 7)) {
        SurfaceLoadSample s;
        s.position = {row[0], row[1]};
        s.normal = {row[2], row[3]};
        s.flux_h = row[4];
        s.sigma_nn = row[5];
        s.sigma_nt = row[6];
        samples.push_back(s);
    }
    return samples;
}

void write_observation_json(const fs::path& path, const Observation& obs,
                            const Provenance& prov) {
    json j;
    j["provenance"] = prov.to_json();
    auto& rays = j["rays"] = json::array();
    for (const auto& r : obs.rays) {
        json jr;
        jr["ox"] = r.origin.x;
        jr["oy"] = r.origin.y;
        jr["dx"] = r.direction.x;
        jr["dy"] = r.direction.y;
        jr["max_length"] = r.max_length;
        rays.push_back(jr);
    }
    auto& offsets = j["offsets"] = json::array();
    for (Eigen::Index i = 0; i < obs.offsets.size(); ++i)
        offsets.push_back(obs.offsets[i]);
    json truth;
    truth["model_id"] = obs.provenance.model_id;
    truth["theta_true"] = obs.provenance.theta_true;
    truth["seed"] = obs.provenance.seed;
    truth["sigma"] = obs.provenance.sigma;
    truth["generator"] = obs.provenance.generator;
    j["truth"] = truth;
    write_json_file(path, j);
}

Observation read_observation_json(const fs::path& path) {
    const json j = read_json_file(path);
    try {
        Observation obs;
        for (const auto& jr : j.at("rays")) {
            MeasurementRay r;
            r.origin = {jr.at("ox").get<double>(), jr.at("oy").get<double>()};
            r.direction = {jr.at("dx").get<double>(), jr.at("dy").get<double>()};
            r.max_length = jr.at("max_length").get<double>();
            obs.rays.push_back(r);
        }
        const auto& offsets = j.at("offsets");
        obs.offsets.resize(static_cast<Eigen::Index>(offsets.size()));
        Eigen::Index i = 0;
        for (const auto& v : offsets) obs.offsets[i++] = v.get<double>();
        const auto& truth = j.at("truth");
        // The header provenance is authoritative for the generating model;
        // the truth block repeats it for self-contained files.
        obs.provenance.model_id = j.contains("provenance")
            ? j.at("provenance").at("model_id").get<std::string>()
            : truth.at("model_id").get<std::string>();
        obs.provenance.theta_true = truth.at("theta_true").get<std::vector<double>>();
        obs.provenance.seed = truth.at("seed").get<std::uint64_t>();
        obs.provenance.sigma = truth.at("sigma").get<double>();
        obs.provenance.generator = truth.at("generator").get<std::string>();
        if (obs.offsets.size() != static_cast<Eigen::Index>(obs.rays.size()))
            throw ValidationError(path.string() + ": offsets do not match rays");
        return obs;
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void write_trace_csv(const fs::path& path, const LMTrace& trace, const Provenance& prov) {
    const std::size_t n_params =
        trace.records.empty() ? 0 : static_cast<std::size_t>(trace.records.front().x.size());
    std::string text = prov.comment_line() + "\nk,status,mu,err_res_mm,err_grad";
    for (std::size_t i = 0; i < n_params; ++i) text += ",x_" + std::to_string(i);
    text += "\n";
    for (const auto& rec : trace.records) {
        text += std::to_string(rec.k);
        text += std::string(",") + to_string(rec.status);
        text += "," + fmt_g17(rec.mu);
        text += "," + fmt_g17(rec.err_res);
        text += "," + fmt_g17(rec.err_grad);
        for (Eigen::Index i = 0; i < rec.x.size(); ++i) text += "," + fmt_g17(rec.x[i]);
        text += "\n";
    }
    write_text(path, text);
}

std::vector<TraceRow> read_trace_csv(const fs::path& path) {
    const auto lines = read_data_lines(path);
    if (lines.empty()) throw ValidationError(path.string() + ": missing header");
    std::vector<TraceRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split_csv(lines[i]);
        if (fields.size() < 5)
            throw ValidationError(path.string() + ": wrong column count");
        TraceRow row;
        row.k = static_cast<int>(parse_double(fields[0], path));
        row.status = fields[1];
        row.mu = parse_double(fields[2], path);
        row.err_res = parse_double(fields[3], path);
        row.err_grad = parse_double(fields[4], path);
        for (std::size_t c = 5; c < fields.size(); ++c)
            row.x.push_back(parse_double(fields[c], path));
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_result_json(const fs::path& path, const LMResult& result,
                       std::span<const std::string> names, const Provenance& prov) {
    json j;
    j["provenance"] = prov.to_json();
    j["status"] = to_string(result.status);
    j["iterations"] = result.iterations;
    j["final_err_res"] = json_num(result.final_err_res);
    j["final_err_grad"] = json_num(result.final_err_grad);
    j["final_mu"] = json_num(result.final_mu);
    auto& params = j["parameters"] = json::array();
    for (Eigen::Index i = 0; i < result.x.size(); ++i) {
        json p;
        p["name"] = i < static_cast<Eigen::Index>(names.size())
                        ? names[static_cast<std::size_t>(i)]
                        : ("x_" + std::to_string(i));
        p["value"] = json_num(result.x[i]);
        params.push_back(p);
    }
    write_json_file(path, j);
}

bool read_result_json(const fs::path& path, LMResult& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    try {
        const json j = json::parse(in);
        const auto status = j.at("status").get<std::string>();
        bool known = false;
        for (LMStatus s : {LMStatus::converged_grad, LMStatus::converged_res,
                           LMStatus::max_iterations, LMStatus::mu_blowup,
                           LMStatus::model_failure}) {
            if (status == to_string(s)) {
                out.status = s;
                known = true;
                break;
            }
        }
        if (!known) return false;
        const auto& params = j.at("parameters");
        out.x.resize(static_cast<Eigen::Index>(params.size()));
        Eigen::Index i = 0;
        for (const auto& p : params) out.x[i++] = read_num(p.at("value"));
        out.iterations = j.at("iterations").get<int>();
        out.final_err_res = read_num(j.at("final_err_res"));
        out.final_err_grad = read_num(j.at("final_err_grad"));
        out.final_mu = read_num(j.at("final_mu"));
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

json mesh_to_json(const Mesh2D& mesh) {
    json j;
    auto& nodes = j["nodes"] = json::array();
    for (const auto& p : mesh.nodes) nodes.push_back({p.x, p.y});
    auto& elems = j["elems"] = json::array();
    for (const auto& e : mesh.elems) elems.push_back({e[0], e[1], e[2], e[3]});
    j["elem_material"] = mesh.elem_material;
    j["node_sets"] = mesh.node_sets;
    return j;
}

Mesh2D mesh_from_json(const json& j) {
    try {
        Mesh2D mesh;
        for (const auto& n : j.at("nodes"))
            mesh.nodes.push_back({n.at(0).get<double>(), n.at(1).get<double>()});
        for (const auto& e : j.at("elems")) {
            if (e.size() != 4) throw ValidationError("element is not a quadrilateral");
            mesh.elems.push_back({e.at(0).get<int>(), e.at(1).get<int>(),
                                  e.at(2).get<int>(), e.at(3).get<int>()});
        }
        mesh.elem_material = j.at("elem_material").get<std::vector<int>>();
        if (j.contains("node_sets"))
            mesh.node_sets =
                j.at("node_sets").get<std::map<std::string, std::vector<int>>>();
        return mesh;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad mesh: ") + e.what());
    }
}

void write_mesh_json(const fs::path& path, const Mesh2D& mesh, const Provenance& prov) {
    json j = mesh_to_json(mesh);
    j["provenance"] = prov.to_json();
    write_json_file(path, j);
}

Mesh2D read_mesh_json(const fs::path& path) {
    return mesh_from_json(read_json_file(path));
}

namespace {

json binding_to_json(const MaterialBinding& b) {
    if (b.is_parameter()) return b.param;
    return b.value;
}

MaterialBinding binding_from_json(const json& j) {
    if (j.is_string()) return MaterialBinding::parameter(j.get<std::string>());
    return MaterialBinding::pinned(j.get<double>());
}

} // namespace

json fem_scenario_to_json(const FemScenario& scenario) {
    json j;
    j["tag"] = scenario.tag;
    j["mesh"] = mesh_to_json(scenario.mesh);
    auto& materials = j["materials"] = json::array();
    for (const auto& m : scenario.materials) {
        json jm;
        jm["E"] = binding_to_json(m.E);
        jm["nu"] = binding_to_json(m.nu);
        materials.push_back(jm);
    }
    auto& tractions = j["tractions"] = json::array();
    for (const auto& t : scenario.profile) {
        json jt;
        jt["set"] = t.set;
        jt["span"] = {t.span_begin, t.span_end};
        jt["t_normal"] = t.t_normal;
        jt["t_tangent"] = t.t_tangent;
        tractions.push_back(jt);
    }
    auto& dirichlet = j["dirichlet"] = json::array();
    for (const auto& bc : scenario.dirichlet) {
        json jb;
        jb["node"] = bc.node;
        jb["fix_x"] = bc.fix_x;
        jb["fix_y"] = bc.fix_y;
        dirichlet.push_back(jb);
    }
    j["increments"] = scenario.options.increments;
    j["newton_tol"] = scenario.options.newton_tol;
    j["max_newton"] = scenario.options.max_newton;
    return j;
}

FemScenario fem_scenario_from_json(const json& j, const fs::path& base_dir) {
    try {
        if (j.contains("builtin")) {
            const auto name = j.at("builtin").get<std::string>();
            const int nx = j.value("nx", 16);
            const int ny = j.value("ny", 6);
            if (name == "homogeneous-bump") return make_homogeneous_bump_scenario(nx, ny);
            if (name == "heterogeneous-bump")
                return make_heterogeneous_bump_scenario(nx, ny);
            throw ValidationError("unknown builtin scenario '" + name + "'");
        }
        FemScenario s;
        s.tag = j.value("tag", std::string{});
        const auto& jm = j.at("mesh");
        if (jm.is_string())
            s.mesh = read_mesh_json(base_dir / jm.get<std::string>());
        else
            s.mesh = mesh_from_json(jm);
        for (const auto& m : j.at("materials"))
            s.materials.push_back({binding_from_json(m.at("E")), binding_from_json(m.at("nu"))});
        if (j.contains("tractions")) {
            for (const auto& t : j.at("tractions")) {
                TractionProfileEntry entry;
                entry.set = t.at("set").get<std::string>();
                if (t.contains("span")) {
                    entry.span_begin = t.at("span").at(0).get<double>();
                    entry.span_end = t.at("span").at(1).get<double>();
                }
                entry.t_normal = t.value("t_normal", 0.0);
                entry.t_tangent = t.value("t_tangent", 0.0);
                s.profile.push_back(entry);
            }
        }
        if (j.contains("dirichlet")) {
            for (const auto& b : j.at("dirichlet")) {
                DirichletBC bc;
                bc.node = b.at("node").get<int>();
                bc.fix_x = b.value("fix_x", true);
                bc.fix_y = b.value("fix_y", true);
                s.dirichlet.push_back(bc);
            }
        }
        const SolveOptions defaults;
        s.options.increments = j.value("increments", defaults.increments);
        s.options.newton_tol = j.value("newton_tol", defaults.newton_tol);
        s.options.max_newton = j.value("max_newton", defaults.max_newton);
        return s;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad scenario: ") + e.what());
    }
}

FemScenario read_fem_scenario(const fs::path& path) {
    return fem_scenario_from_json(read_json_file(path), path.parent_path());
}

void write_summary_csv(const fs::path& path,
                       std::span<const CampaignLevelSummary> summary,
                       std::span<const std::string> names, const Provenance& prov) {
    std::string text = prov.comment_line() + "\nsigma_mm,mean_err_res_mm,std_err_res_mm";
    for (const auto& name : names) text += ",mean_" + name + ",std_" + name;
    text += ",n_completed,n_failed\n";
    for (const auto& s : summary) {
        text += fmt_g17(s.sigma) + "," + fmt_g17(s.mean_err_res) + "," +
                fmt_g17(s.std_err_res);
        for (std::size_t i = 0; i < names.size(); ++i) {
            const auto idx = static_cast<Eigen::Index>(i);
            text += "," + fmt_g17(idx < s.mean_x.size() ? s.mean_x[idx] : 0.0);
            text += "," + fmt_g17(idx < s.std_x.size() ? s.std_x[idx] : 0.0);
        }
        text += "," + std::to_string(s.n_completed) + "," + std::to_string(s.n_failed) + "\n";
    }
    write_text(path, text);
}

} // namespace bioinverse
