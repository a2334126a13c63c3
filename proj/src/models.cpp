#include "bioinverse/models.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "bioinverse/errors.hpp"

namespace bioinverse {

namespace {

void reject_short_segments(const InterfaceCurve& curve, const char* what) {
    const std::size_t nseg = curve.segment_count();
    for (std::size_t i = 0; i < nseg; ++i) {
        const auto [a, b] = curve.segment(i);
        if ((b - a).norm() < 1e-9) throw MapDegenerate(what);
    }
}

} // namespace

InterfaceCurve bump_reference_curve(const BumpModelConfig& config) {
    if (config.vertex_count < 2 || !(config.radius > 0.0))
        throw ValidationError("bump reference curve needs a positive radius and at least 2 vertices");
    InterfaceCurve curve;
    curve.closed = false;
    curve.biofilm_on_right = true;
    const int n = config.vertex_count;
    curve.vertices.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double a = std::numbers::pi * static_cast<double>(n - 1 - i) /
                         static_cast<double>(n - 1);
        curve.vertices.push_back({config.radius * std::cos(a), config.radius * std::sin(a)});
    }
    return curve;
}

InterfaceCurve bump_model_evaluate(const BumpMapParams& params,
                                   const BumpModelConfig& config) {
    const double limit = 2.0 / config.radius;
    if (std::abs(params.p1) > limit || std::abs(params.p2) > limit)
        throw MapDegenerate("bump map parameters leave the injective box");
    InterfaceCurve curve = bump_reference_curve(config);
    for (auto& v : curve.vertices) {
        const double X = v.x;
        const double Y = v.y;
        v.x = X + params.p1 * Y * Y;
        v.y = Y * (1.0 + params.p2 * X);
    }
    reject_short_segments(curve, "bump map collapsed a curve segment");
    return curve;
}

std::string BumpModel::id() const { return "bump"; }

InterfaceCurve BumpModel::evaluate(const ParameterVector& theta) const {
    if (theta.size() != 2)
        throw ValidationError("bump model expects 2 parameters");
    return bump_model_evaluate({theta[0], theta[1]}, config_);
}

double monod_rate(double phi, const MonodParams& params) {
    return params.K1R * (phi / (params.K2R + phi));
}

void DiffusionProfile::validate() const {
    if (!(L_fluid > 0.0) || !(L_solid > 0.0))
        throw ValidationError("layer thicknesses must be positive");
    if (!(D_fluid > 0.0) || !(D_solid > 0.0))
        throw ValidationError("diffusivities must be positive");
    if (!(phi_in > 0.0))
        throw ValidationError("inlet concentration must be positive");
    if (grid_n < 8)
        throw ValidationError("grid_n must be at least 8 nodes per layer");
}

namespace {

// Tridiagonal solve (Thomas algorithm); diag/rhs are consumed.
std::vector<double> solve_tridiagonal(const std::vector<double>& sub,
                                      std::vector<double> diag,
                                      const std::vector<double>& sup,
                                      std::vector<double> rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    std::vector<double> x(n);
    x[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        x[i] = (rhs[i] - sup[i] * x[i + 1]) / diag[i];
    return x;
}

} // namespace

double solve_flux(const DiffusionProfile& profile, const MonodParams& params) {
    profile.validate();
    const int N = profile.grid_n;
    const int iface = N - 1;             // shared interface node
    const int M = 2 * N - 1;             // total nodes
    const double h_f = profile.L_fluid / static_cast<double>(N - 1);
    const double h_s = profile.L_solid / static_cast<double>(N - 1);
    const double D_F = profile.D_fluid;
    const double D_S = profile.D_solid;

    // Rows are scaled to concentration units so the tolerance is meaningful
    // on every grid.
    const double iface_scale = 1.0 / (D_F / h_f + D_S / h_s);
    const double sink_scale = h_s * h_s / D_S;

    auto rate = [&](double phi) { return monod_rate(phi, params); };
    auto rate_deriv = [&](double phi) {
        const double denom = params.K2R + phi;
        return params.K1R * params.K2R / (denom * denom);
    };

    std::vector<double> phi(static_cast<std::size_t>(M), profile.phi_in);
    std::vector<double> F(static_cast<std::size_t>(M));
    const double tol = 1e-12 * profile.phi_in;

    auto assemble_residual = [&]() {
        F[0] = phi[0] - profile.phi_in;
        for (int j = 1; j < iface; ++j)
            F[static_cast<std::size_t>(j)] =
                phi[static_cast<std::size_t>(j - 1)] - 2.0 * phi[static_cast<std::size_t>(j)] +
                phi[static_cast<std::size_t>(j + 1)];
        F[static_cast<std::size_t>(iface)] =
            iface_scale * (D_F * (phi[static_cast<std::size_t>(iface - 1)] -
                                  phi[static_cast<std::size_t>(iface)]) / h_f +
                           D_S * (phi[static_cast<std::size_t>(iface + 1)] -
                                  phi[static_cast<std::size_t>(iface)]) / h_s -
                           0.5 * h_s * rate(phi[static_cast<std::size_t>(iface)]));
        for (int j = iface + 1; j < M - 1; ++j)
            F[static_cast<std::size_t>(j)] =
                phi[static_cast<std::size_t>(j - 1)] - 2.0 * phi[static_cast<std::size_t>(j)] +
                phi[static_cast<std::size_t>(j + 1)] -
                sink_scale * rate(phi[static_cast<std::size_t>(j)]);
        F[static_cast<std::size_t>(M - 1)] =
            2.0 * phi[static_cast<std::size_t>(M - 2)] -
            2.0 * phi[static_cast<std::size_t>(M - 1)] -
            sink_scale * rate(phi[static_cast<std::size_t>(M - 1)]);
    };

    auto max_abs = [&]() {
        double m = 0.0;
        for (double v : F) m = std::max(m, std::abs(v));
        return m;
    };

    bool solved = false;
    for (int iter = 0; iter <= 50; ++iter) {
        assemble_residual();
        if (max_abs() < tol) {
            solved = true;
            break;
        }
        if (iter == 50) break;
        std::vector<double> sub(static_cast<std::size_t>(M), 0.0);
        std::vector<double> diag(static_cast<std::size_t>(M), 0.0);
        std::vector<double> sup(static_cast<std::size_t>(M), 0.0);
        diag[0] = 1.0;
        for (int j = 1; j < iface; ++j) {
            sub[static_cast<std::size_t>(j)] = 1.0;
            diag[static_cast<std::size_t>(j)] = -2.0;
            sup[static_cast<std::size_t>(j)] = 1.0;
        }
        sub[static_cast<std::size_t>(iface)] = iface_scale * D_F / h_f;
        diag[static_cast<std::size_t>(iface)] =
            iface_scale * (-D_F / h_f - D_S / h_s -
                           0.5 * h_s * rate_deriv(phi[static_cast<std::size_t>(iface)]));
        sup[static_cast<std::size_t>(iface)] = iface_scale * D_S / h_s;
        for (int j = iface + 1; j < M - 1; ++j) {
            sub[static_cast<std::size_t>(j)] = 1.0;
            diag[static_cast<std::size_t>(j)] =
                -2.0 - sink_scale * rate_deriv(phi[static_cast<std::size_t>(j)]);
            sup[static_cast<std::size_t>(j)] = 1.0;
        }
        sub[static_cast<std::size_t>(M - 1)] = 2.0;
        diag[static_cast<std::size_t>(M - 1)] =
            -2.0 - sink_scale * rate_deriv(phi[static_cast<std::size_t>(M - 1)]);
        std::vector<double> rhs(static_cast<std::size_t>(M));
        for (int j = 0; j < M; ++j) rhs[static_cast<std::size_t>(j)] = -F[static_cast<std::size_t>(j)];
        const auto dphi = solve_tridiagonal(sub, std::move(diag), sup, std::move(rhs));
        for (int j = 0; j < M; ++j) phi[static_cast<std::size_t>(j)] += dphi[static_cast<std::size_t>(j)];
    }
    if (!solved)
        throw NewtonDivergence("nutrient profile solve failed to converge");
    return D_F * (profile.phi_in - phi[static_cast<std::size_t>(iface)]) / profile.L_fluid;
}

Vec2 growth_displacement(const SurfaceLoadSample& sample, const GrowthParams& params) {
    const double magnitude =
        params.dt_g * (params.K1g * sample.flux_h -
                       params.K2g * std::abs(sample.sigma_nn) -
                       params.K3g * std::abs(sample.sigma_nt));
    return sample.normal * magnitude;
}

InterfaceCurve growth_model_evaluate(const InterfaceCurve& base,
                                     std::span<const SurfaceLoadSample> samples,
                                     const GrowthParams& params) {
    if (samples.size() != base.vertices.size())
        throw ValidationError("growth needs one surface load sample per curve vertex");
    InterfaceCurve grown = base;
    for (std::size_t i = 0; i < grown.vertices.size(); ++i)
        grown.vertices[i] = grown.vertices[i] + growth_displacement(samples[i], params);
    reject_short_segments(grown, "growth collapsed a curve segment");
    return grown;
}

GrowthModel::GrowthModel(InterfaceCurve base, std::vector<SurfaceLoadSample> samples,
                         double dt_g)
    : base_(std::move(base)), samples_(std::move(samples)), dt_g_(dt_g) {}

std::string GrowthModel::id() const { return "growth"; }

InterfaceCurve GrowthModel::evaluate(const ParameterVector& theta) const {
    if (theta.size() != 3)
        throw ValidationError("growth model expects 3 parameters");
    return growth_model_evaluate(base_, samples_,
                                 {theta[0], theta[1], theta[2], dt_g_});
}

} // namespace bioinverse
