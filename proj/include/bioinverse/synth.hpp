#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bioinverse/geometry.hpp"
#include "bioinverse/lm.hpp"
#include "bioinverse/models.hpp"

namespace bioinverse {

// Deterministic Gaussian stream: mt19937_64 driving a basic Box-Muller
// transform (53-bit uniforms). The engine is fully specified by the standard
// and the transform is written out here, so streams are identical across
// platforms; provenance pins the scheme by name().
class NoiseStream {
public:
    explicit NoiseStream(std::uint64_t seed) : engine_(seed) {}
    double normal(); // standard normal deviate
    // Per-run stream seed from (campaign seed, run index), splitmix64 mix.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t index);
    static const char* name() { return "mt19937_64/box-muller-v1"; }

private:
    double uniform01(); // [0, 1), 53-bit resolution
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// How measurement rays are placed on the observed (deformed) curve. Rays
// anchor at the given vertex indices; directions default to the vertex
// normals (into the biofilm when into_biofilm is set) and can be overridden
// per ray. max_length defaults to the observed curve's bounding-box diagonal.
struct RaySpec {
    std::vector<std::size_t> indices;
    bool into_biofilm = true;
    std::optional<double> max_length;
    std::vector<Vec2> directions; // empty, or one unit direction per index
};

struct ObservationProvenance {
    std::string model_id;
    std::vector<double> theta_true;
    std::uint64_t seed = 0;
    double sigma = 0.0; // mm
    std::string generator;
};

// Synthetic measurement: rays plus the signed offsets (mm) of the observed
// interface along them.
struct Observation {
    std::vector<MeasurementRay> rays;
    Eigen::VectorXd offsets;
    ObservationProvenance provenance;
};

// Evaluates the model at theta_true, places the rays on the deformed curve
// and draws i.i.d. N(0, sigma^2) offsets from the seeded stream (all zero
// when sigma = 0).
Observation generate_observation(const ForwardModel& model,
                                 const ParameterVector& theta_true,
                                 const RaySpec& ray_spec, double sigma,
                                 std::uint64_t seed);

// r_j(theta) = signed_distance_j(theta) - offset_j. A ray that misses the
// model curve is reported as a ModelFailure.
ResidualFn make_residual(const ForwardModel& model, const Observation& observation);

struct CampaignRun {
    std::size_t level = 0; // index into the observation list
    std::size_t guess = 0; // index into the initial-guess list
    double sigma = 0.0;
    LMResult result;
};

// Per noise level, over runs that produced a result (mu_blowup and
// model_failure runs are counted but excluded from the statistics).
struct CampaignLevelSummary {
    double sigma = 0.0;
    int n_completed = 0;
    int n_failed = 0;
    double mean_err_res = 0.0;
    double std_err_res = 0.0;
    Eigen::VectorXd mean_x;
    Eigen::VectorXd std_x;
};

struct CampaignResult {
    std::vector<CampaignRun> runs;
    std::vector<CampaignLevelSummary> summary;
};

// One LM run per (observation, initial guess), level-major run order.
// run_campaign executes the runs in parallel; run_campaign_serial is the
// reference implementation, and both produce bit-identical results.
CampaignResult run_campaign(const ForwardModel& model,
                            std::span<const Observation> observations,
                            const std::vector<ParameterVector>& guesses,
                            const ParameterSpec& bounds, const LMConfig& config);
CampaignResult run_campaign_serial(const ForwardModel& model,
                                   std::span<const Observation> observations,
                                   const std::vector<ParameterVector>& guesses,
                                   const ParameterSpec& bounds,
                                   const LMConfig& config);

// Statistics helper shared with the file-based campaign driver. Sample
// standard deviation (n - 1); zero when fewer than two completed runs.
std::vector<CampaignLevelSummary> summarize_campaign(
    std::span<const CampaignRun> runs, std::size_t n_levels, int n_params);

} // namespace bioinverse
