#include "bioinverse/synth.hpp"

#include <cmath>
#include <cstddef>
#include <exception>
#include <numbers>
#include <vector>

#include "bioinverse/errors.hpp"
#include "bioinverse/threads.hpp"

namespace bioinverse {

double NoiseStream::uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double NoiseStream::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

std::uint64_t NoiseStream::derive(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

Observation generate_observation(const ForwardModel& model,
                                 const ParameterVector& theta_true,
                                 const RaySpec& ray_spec, double sigma,
                                 std::uint64_t seed) {
    if (ray_spec.indices.empty())
        throw ValidationError("ray spec has no vertex indices");
    if (!ray_spec.directions.empty() &&
        ray_spec.directions.size() != ray_spec.indices.size())
        throw ValidationError("ray direction overrides do not match the index count");
    if (!(sigma >= 0.0))
        throw ValidationError("noise level must be non-negative");

    const InterfaceCurve observed = model.evaluate(theta_true);
    const double max_length = ray_spec.max_length.value_or(bbox_diagonal(observed));

    Observation obs;
    obs.rays.reserve(ray_spec.indices.size());
    for (std::size_t j = 0; j < ray_spec.indices.size(); ++j) {
        const std::size_t idx = ray_spec.indices[j];
        MeasurementRay ray;
        ray.origin = observed.vertices.at(idx);
        ray.direction = ray_spec.directions.empty()
                            ? vertex_normal(observed, idx, ray_spec.into_biofilm)
                            : ray_spec.directions[j];
        ray.max_length = max_length;
        ray.validate();
        obs.rays.push_back(ray);
    }

    const Eigen::Index n = static_cast<Eigen::Index>(obs.rays.size());
    obs.offsets = Eigen::VectorXd::Zero(n);
    if (sigma > 0.0) {
        NoiseStream stream(seed);
        for (Eigen::Index j = 0; j < n; ++j) obs.offsets[j] = sigma * stream.normal();
    }

    obs.provenance.model_id = model.id();
    obs.provenance.theta_true.assign(theta_true.data(),
                                     theta_true.data() + theta_true.size());
    obs.provenance.seed = seed;
    obs.provenance.sigma = sigma;
    obs.provenance.generator = NoiseStream::name();
    return obs;
}

ResidualFn make_residual(const ForwardModel& model, const Observation& observation) {
    const ForwardModel* model_ptr = &model;
    return [model_ptr, observation](const ParameterVector& theta) -> Eigen::VectorXd {
        const InterfaceCurve curve = model_ptr->evaluate(theta);
        try {
            return measure(observation.rays, curve) - observation.offsets;
        } catch (const NoIntersection& e) {
            throw ModelFailure(e.what());
        }
    };
}

namespace {

CampaignRun execute_run(const ForwardModel& model, const Observation& obs,
                        std::size_t level, std::size_t guess_index,
                        const ParameterVector& guess, const ParameterSpec& bounds,
                        const LMConfig& config) {
    CampaignRun record;
    record.level = level;
    record.guess = guess_index;
    record.sigma = obs.provenance.sigma;
    record.result = run(make_residual(model, obs), guess, bounds, config);
    return record;
}

void validate_campaign_inputs(std::span<const Observation> observations,
                              const std::vector<ParameterVector>& guesses) {
    if (observations.empty())
        throw ValidationError("campaign needs at least one observation");
    if (guesses.empty())
        throw ValidationError("campaign needs at least one initial guess");
}

} // namespace

CampaignResult run_campaign_serial(const ForwardModel& model,
                                   std::span<const Observation> observations,
                                   const std::vector<ParameterVector>& guesses,
                                   const ParameterSpec& bounds,
                                   const LMConfig& config) {
    validate_campaign_inputs(observations, guesses);
    const std::size_t n_guesses = guesses.size();
    CampaignResult result;
    result.runs.resize(observations.size() * n_guesses);
    for (std::size_t i = 0; i < result.runs.size(); ++i) {
        const std::size_t level = i / n_guesses;
        const std::size_t guess = i % n_guesses;
        result.runs[i] = execute_run(model, observations[level], level, guess,
                                     guesses[guess], bounds, config);
    }
    result.summary = summarize_campaign(result.runs, observations.size(),
                                        static_cast<int>(guesses.front().size()));
    return result;
}

CampaignResult run_campaign(const ForwardModel& model,
                            std::span<const Observation> observations,
                            const std::vector<ParameterVector>& guesses,
                            const ParameterSpec& bounds, const LMConfig& config) {
    validate_campaign_inputs(observations, guesses);
    const std::size_t n_guesses = guesses.size();
    const std::ptrdiff_t total =
        static_cast<std::ptrdiff_t>(observations.size() * n_guesses);
    CampaignResult result;
    result.runs.resize(static_cast<std::size_t>(total));

    std::exception_ptr first_error;
    std::ptrdiff_t first_error_index = total;
#pragma omp parallel for schedule(dynamic) num_threads(max_threads())
    for (std::ptrdiff_t i = 0; i < total; ++i) {
        try {
            const std::size_t level = static_cast<std::size_t>(i) / n_guesses;
            const std::size_t guess = static_cast<std::size_t>(i) % n_guesses;
            result.runs[static_cast<std::size_t>(i)] = execute_run(
                model, observations[level], level, guess, guesses[guess], bounds, config);
        } catch (...) {
#pragma omp critical(bioinverse_campaign_error)
            if (i < first_error_index) {
                first_error_index = i;
                first_error = std::current_exception();
            }
        }
    }
    if (first_error) std::rethrow_exception(first_error);

    result.summary = summarize_campaign(result.runs, observations.size(),
                                        static_cast<int>(guesses.front().size()));
    return result;
}

std::vector<CampaignLevelSummary> summarize_campaign(
    std::span<const CampaignRun> runs, std::size_t n_levels, int n_params) {
    std::vector<CampaignLevelSummary> summary(n_levels);
    for (std::size_t level = 0; level < n_levels; ++level) {
        auto& s = summary[level];
        s.mean_x = Eigen::VectorXd::Zero(n_params);
        s.std_x = Eigen::VectorXd::Zero(n_params);

        std::vector<const CampaignRun*> completed;
        bool have_sigma = false;
        for (const auto& r : runs) {
            if (r.level != level) continue;
            if (!have_sigma) {
                s.sigma = r.sigma;
                have_sigma = true;
            }
            if (r.result.status == LMStatus::mu_blowup ||
                r.result.status == LMStatus::model_failure) {
                ++s.n_failed;
                continue;
            }
            ++s.n_completed;
            completed.push_back(&r);
        }
        if (completed.empty()) continue;

        const double n = static_cast<double>(completed.size());
        for (const auto* r : completed) {
            s.mean_err_res += r->result.final_err_res;
            s.mean_x += r->result.x;
        }
        s.mean_err_res /= n;
        s.mean_x /= n;
        if (completed.size() >= 2) {
            double sq_err = 0.0;
            Eigen::VectorXd sq_x = Eigen::VectorXd::Zero(n_params);
            for (const auto* r : completed) {
                const double d = r->result.final_err_res - s.mean_err_res;
                sq_err += d * d;
                sq_x += (r->result.x - s.mean_x).cwiseAbs2();
            }
            s.std_err_res = std::sqrt(sq_err / (n - 1.0));
            s.std_x = (sq_x / (n - 1.0)).cwiseSqrt();
        }
    }
    return summary;
}

} // namespace bioinverse
