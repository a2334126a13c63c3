#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bioinverse/fem.hpp"
#include "bioinverse/geometry.hpp"
#include "bioinverse/lm.hpp"
#include "bioinverse/models.hpp"
#include "bioinverse/synth.hpp"

namespace bioinverse {

// Stable fingerprint for provenance records.
std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);

// Attached to every output: tool identity, input fingerprint and seed. CSVs
// carry it as one leading '#' comment line, JSON files as an object.
struct Provenance {
    std::string subcommand;
    std::string config_hash; // "fnv1a64:<16 hex digits>"
    std::uint64_t seed = 0;
    std::string model_id;

    nlohmann::json to_json() const;
    std::string comment_line() const;
};

std::string fmt_g17(double v); // shortest round-trip decimal, %.17g

// --- curves ---------------------------------------------------------------
// Columns x_mm,y_mm plus a sidecar JSON descriptor {closed, orientation}.
void write_curve_csv(const std::filesystem::path& csv_path,
                     const InterfaceCurve& curve, const Provenance& prov);
void write_curve_sidecar(const std::filesystem::path& json_path,
                         const InterfaceCurve& curve, const Provenance& prov);
InterfaceCurve read_curve_csv(const std::filesystem::path& csv_path);
InterfaceCurve read_curve_csv(const std::filesystem::path& csv_path,
                              const std::filesystem::path& sidecar_path);

// --- rays and surface load samples -----------------------------------------
// Columns ox_mm,oy_mm,dx,dy,max_length_mm.
void write_rays_csv(const std::filesystem::path& path,
                    std::span<const MeasurementRay> rays, const Provenance& prov);
std::vector<MeasurementRay> read_rays_csv(const std::filesystem::path& path);

// Columns x_mm,y_mm,nx,ny,h,snn,snt.
void write_samples_csv(const std::filesystem::path& path,
                       std::span<const SurfaceLoadSample> samples,
                       const Provenance& prov);
std::vector<SurfaceLoadSample> read_samples_csv(const std::filesystem::path& path);

// --- observations -----------------------------------------------------------
void write_observation_json(const std::filesystem::path& path,
                            const Observation& obs, const Provenance& prov);
Observation read_observation_json(const std::filesystem::path& path);

// --- optimizer traces and results -------------------------------------------
// Columns k,status,mu,err_res_mm,err_grad,x_0..x_{n-1}, one row per proposal.
void write_trace_csv(const std::filesystem::path& path, const LMTrace& trace,
                     const Provenance& prov);

struct TraceRow {
    int k = 0;
    std::string status;
    double mu = 0.0;
    double err_res = 0.0;
    double err_grad = 0.0;
    std::vector<double> x;
};
std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path);

void write_result_json(const std::filesystem::path& path, const LMResult& result,
                       std::span<const std::string> names, const Provenance& prov);
// Returns the parsed result (trace not round-tripped) and reports whether the
// file exists and parses cleanly; used for campaign resume.
bool read_result_json(const std::filesystem::path& path, LMResult& out);

// --- meshes and scenarios -----------------------------------------------------
// {nodes, elems, elem_material, node_sets}
void write_mesh_json(const std::filesystem::path& path, const Mesh2D& mesh,
                     const Provenance& prov);
Mesh2D read_mesh_json(const std::filesystem::path& path);
Mesh2D mesh_from_json(const nlohmann::json& j);
nlohmann::json mesh_to_json(const Mesh2D& mesh);

// {mesh, materials, tractions, dirichlet, increments, newton_tol}; the mesh
// entry may be an inline object, a path relative to base_dir, or
// {"builtin": ...} naming a reference scenario generator.
FemScenario read_fem_scenario(const std::filesystem::path& path);
FemScenario fem_scenario_from_json(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir);
nlohmann::json fem_scenario_to_json(const FemScenario& scenario);

// --- campaign summary ----------------------------------------------------------
// Columns sigma_mm,mean_err_res_mm,std_err_res_mm,
// mean_<p>,std_<p> per parameter, n_completed,n_failed.
void write_summary_csv(const std::filesystem::path& path,
                       std::span<const CampaignLevelSummary> summary,
                       std::span<const std::string> names, const Provenance& prov);

} // namespace bioinverse
