// Compares the OpenMP kernels against their serial reference implementations
// and verifies that both produce bit-identical results.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "bioinverse/geometry.hpp"
#include "bioinverse/lm.hpp"
#include "bioinverse/models.hpp"
#include "bioinverse/synth.hpp"
#include "bioinverse/threads.hpp"

using namespace bioinverse;

namespace {

double sink = 0.0;

double best_ms(const std::function<void()>& fn, int reps) {
    fn(); // warmup
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best,
                        std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

void report(const char* name, double serial_ms, double parallel_ms, bool identical) {
    std::printf("%-12s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx   %s\n",
                name, serial_ms, parallel_ms, serial_ms / parallel_ms,
                identical ? "bit-identical" : "MISMATCH");
}

void bench_measure() {
    BumpModelConfig config;
    config.vertex_count = 4001;
    const auto curve = bump_model_evaluate({0.3, 0.1}, config);
    std::vector<std::size_t> indices(curve.vertices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    const auto rays = normal_rays(curve, indices, true, bbox_diagonal(curve));

    const auto serial = measure_serial(rays, curve);
    const auto parallel = measure(rays, curve);
    const bool identical = (serial - parallel).cwiseAbs().maxCoeff() == 0.0;

    const double t_ser = best_ms([&] { sink += measure_serial(rays, curve).sum(); }, 3);
    const double t_par = best_ms([&] { sink += measure(rays, curve).sum(); }, 3);
    report("measure", t_ser, t_par, identical);
}

void bench_fd_jacobian() {
    // One diffusion solve per residual component makes the columns expensive.
    const ResidualFn fn = [](const ParameterVector& x) {
        Eigen::VectorXd r(x.size());
        DiffusionProfile profile;
        profile.phi_in = 1e-6;
        profile.grid_n = 20000;
        for (Eigen::Index i = 0; i < x.size(); ++i)
            r[i] = 1e9 * solve_flux(profile, {1e-9 * x[i], 1e-7});
        return r;
    };
    const ParameterVector x = ParameterVector::Constant(8, 1.0);
    const Eigen::VectorXd r0 = fn(x);

    const auto serial = fd_jacobian_serial(fn, x, r0, 1e-5, 1e-3);
    const auto parallel = fd_jacobian(fn, x, r0, 1e-5, 1e-3);
    const bool identical = (serial - parallel).cwiseAbs().maxCoeff() == 0.0;

    const double t_ser =
        best_ms([&] { sink += fd_jacobian_serial(fn, x, r0, 1e-5, 1e-3).sum(); }, 3);
    const double t_par =
        best_ms([&] { sink += fd_jacobian(fn, x, r0, 1e-5, 1e-3).sum(); }, 3);
    report("fd_jacobian", t_ser, t_par, identical);
}

void bench_campaign() {
    const BumpModel model;
    ParameterVector theta_true(2);
    theta_true << 0.3, 0.1;
    RaySpec spec;
    for (std::size_t i = 5; i <= 175; i += 2) spec.indices.push_back(i);

    std::vector<Observation> observations;
    for (double sigma : {0.0, 1e-4, 1e-3})
        observations.push_back(generate_observation(
            model, theta_true, spec, sigma,
            NoiseStream::derive(42, observations.size())));

    std::vector<ParameterVector> guesses;
    for (int g = 0; g < 8; ++g) {
        ParameterVector guess(2);
        guess << 0.1 + 0.05 * g, 0.02 + 0.02 * g;
        guesses.push_back(guess);
    }

    ParameterSpec bounds;
    bounds.names = {"p1", "p2"};
    bounds.lower = ParameterVector::Constant(2, -2.0);
    bounds.upper = ParameterVector::Constant(2, 2.0);
    const LMConfig config;

    const auto serial =
        run_campaign_serial(model, observations, guesses, bounds, config);
    const auto parallel = run_campaign(model, observations, guesses, bounds, config);
    bool identical = serial.runs.size() == parallel.runs.size();
    for (std::size_t i = 0; identical && i < serial.runs.size(); ++i)
        identical = serial.runs[i].result.status == parallel.runs[i].result.status &&
                    (serial.runs[i].result.x - parallel.runs[i].result.x)
                            .cwiseAbs()
                            .maxCoeff() == 0.0;

    const double t_ser = best_ms(
        [&] {
            sink += run_campaign_serial(model, observations, guesses, bounds, config)
                        .summary.front()
                        .mean_err_res;
        },
        2);
    const double t_par = best_ms(
        [&] {
            sink += run_campaign(model, observations, guesses, bounds, config)
                        .summary.front()
                        .mean_err_res;
        },
        2);
    report("campaign", t_ser, t_par, identical);
}

} // namespace

int main() {
    std::printf("thread cap: %d\n", max_threads());
    bench_measure();
    bench_fd_jacobian();
    bench_campaign();
    std::printf("(checksum %g)\n", sink);
    return 0;
}
