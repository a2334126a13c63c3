#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bioinverse/geometry.hpp"
#include "bioinverse/lm.hpp"

namespace bioinverse {

// Parameters-to-interface map used by the inverse problem.
class ForwardModel {
public:
    virtual ~ForwardModel() = default;
    virtual std::string id() const = 0;
    virtual std::vector<std::string> parameter_names() const = 0;
    // Throws ModelFailure when the curve cannot be produced.
    virtual InterfaceCurve evaluate(const ParameterVector& theta) const = 0;
};

// ---------------------------------------------------------------------------
// Analytic bump: a semicircular cap on the substratum, deformed by a smooth
// two-parameter map.
// ---------------------------------------------------------------------------

struct BumpModelConfig {
    double radius = 0.3;    // mm
    int vertex_count = 181; // uniform arc sampling, substratum to substratum
};

struct BumpMapParams {
    double p1 = 0.0; // 1/mm,  x <- X + p1 * Y^2
    double p2 = 0.0; // 1/mm,  y <- Y * (1 + p2 * X)
};

InterfaceCurve bump_reference_curve(const BumpModelConfig& config = {});

// Maps the reference cap vertexwise. The map is injective for
// |p1|, |p2| <= 2/R; outside that box, or when a mapped segment degenerates
// below 1e-9 mm, MapDegenerate is thrown.
InterfaceCurve bump_model_evaluate(const BumpMapParams& params,
                                   const BumpModelConfig& config = {});

class BumpModel final : public ForwardModel {
public:
    explicit BumpModel(BumpModelConfig config = {}) : config_(config) {}
    std::string id() const override;
    std::vector<std::string> parameter_names() const override { return {"p1", "p2"}; }
    InterfaceCurve evaluate(const ParameterVector& theta) const override;
    const BumpModelConfig& config() const { return config_; }

private:
    BumpModelConfig config_;
};

// ---------------------------------------------------------------------------
// 1D steady nutrient transport: pure diffusion through the fluid layer,
// diffusion with a Monod consumption sink through the biofilm layer.
// ---------------------------------------------------------------------------

struct MonodParams {
    double K1R = 0.0; // mol/(mm^3 s), maximal consumption rate
    double K2R = 0.0; // mol/mm^3, half-saturation concentration
};

// R(phi) = K1R * phi / (K2R + phi)
double monod_rate(double phi, const MonodParams& params);

struct DiffusionProfile {
    double L_fluid = 0.1;  // mm
    double L_solid = 0.1;  // mm
    double D_fluid = 2.5e-3; // mm^2/s
    double D_solid = 2.5e-3; // mm^2/s
    double phi_in = 0.0;   // mol/mm^3, bulk concentration at the inlet
    int grid_n = 64;       // nodes per layer, >= 8

    void validate() const;
};

// Interface flux into the biofilm (>= 0), from a central-difference Newton
// solve with concentration and flux continuity at the layer interface and a
// zero-flux substratum. Throws NewtonDivergence when the residual norm fails
// to drop below 1e-12 * phi_in within 50 iterations.
double solve_flux(const DiffusionProfile& profile, const MonodParams& params);

// ---------------------------------------------------------------------------
// Interface growth: normal displacement driven by nutrient flux against
// normal and tangential fluid load.
// ---------------------------------------------------------------------------

struct GrowthParams {
    double K1g = 0.0;  // mm^3/mol
    double K2g = 0.0;  // mm^2 s/g
    double K3g = 0.0;  // mm^2 s/g
    double dt_g = 0.0; // s, growth period
};

struct SurfaceLoadSample {
    Point2 position;      // mm, base-curve vertex
    Vec2 normal;          // unit, outward from the biofilm
    double flux_h = 0.0;  // mol/(mm^2 s)
    double sigma_nn = 0.0; // Pa
    double sigma_nt = 0.0; // Pa
};

// u_g = dt_g * (K1g * h - K2g * |sigma_nn| - K3g * |sigma_nt|) * normal
Vec2 growth_displacement(const SurfaceLoadSample& sample,
                         const GrowthParams& params);

// Displaces every base vertex by its sample's growth displacement. Requires
// one sample per vertex; throws MapDegenerate when a grown segment
// degenerates below 1e-9 mm.
InterfaceCurve growth_model_evaluate(const InterfaceCurve& base,
                                     std::span<const SurfaceLoadSample> samples,
                                     const GrowthParams& params);

class GrowthModel final : public ForwardModel {
public:
    GrowthModel(InterfaceCurve base, std::vector<SurfaceLoadSample> samples,
                double dt_g);
    std::string id() const override;
    std::vector<std::string> parameter_names() const override {
        return {"K1g", "K2g", "K3g"};
    }
    InterfaceCurve evaluate(const ParameterVector& theta) const override;
    const InterfaceCurve& base() const { return base_; }
    const std::vector<SurfaceLoadSample>& samples() const { return samples_; }

private:
    InterfaceCurve base_;
    std::vector<SurfaceLoadSample> samples_;
    double dt_g_;
};

} // namespace bioinverse
