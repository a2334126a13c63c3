#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "bioinverse/geometry.hpp"
#include "bioinverse/models.hpp"

namespace bioinverse {

// Saint-Venant-Kirchhoff material, plane strain.
struct Material {
    double E = 0.0;  // Pa
    double nu = 0.0;

    double lambda() const { return E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)); }
    double mu() const { return E / (2.0 * (1.0 + nu)); }
    void validate() const;
};

// 4-node quadrilaterals, counterclockwise connectivity, coordinates in mm.
struct Mesh2D {
    std::vector<Point2> nodes;
    std::vector<std::array<int, 4>> elems;
    std::vector<int> elem_material;
    // Named node lists; set order is meaningful (boundary sets are stored in
    // traversal order).
    std::map<std::string, std::vector<int>> node_sets;

    int dof_count() const { return 2 * static_cast<int>(nodes.size()); }
    void validate() const; // connectivity in range, positive reference Jacobians
};

// Dead-load traction, constant over one reference element edge. Local edge e
// connects local nodes e and (e + 1) % 4.
struct TractionEdge {
    int elem = 0;
    int edge = 0;
    Vec2 traction; // Pa, reference configuration
};

struct TractionLoad {
    std::vector<TractionEdge> edges;
};

struct DirichletBC {
    int node = 0;
    bool fix_x = true;
    bool fix_y = true;
};

struct SolveOptions {
    double newton_tol = 1e-10; // relative to the applied external force norm
    int max_newton = 40;       // per load increment
    int increments = 10;       // cosine-ramped load increments
};

struct SolidState {
    Eigen::VectorXd u; // nodal displacements, [ux0, uy0, ux1, ...]
    int newton_iterations_total = 0;
};

// Total-Lagrangian internal force and consistent tangent at displacement u,
// 2x2 Gauss quadrature. Throws ElementInverted when det F <= 0 at any
// quadrature point. K_out may be null when only the force is needed.
void assemble_internal(const Mesh2D& mesh, std::span<const Material> materials,
                       const Eigen::VectorXd& u, Eigen::VectorXd& f_int,
                       Eigen::SparseMatrix<double>* K_out);

// Second Piola-Kirchhoff stress (S11, S22, S12) at the 4 Gauss points of
// every element, element-major.
std::vector<Eigen::Vector3d> gauss_point_stresses(const Mesh2D& mesh,
                                                  std::span<const Material> materials,
                                                  const Eigen::VectorXd& u);

double total_strain_energy(const Mesh2D& mesh, std::span<const Material> materials,
                           const Eigen::VectorXd& u);

// Consistent nodal force of the traction load at full magnitude.
Eigen::VectorXd external_force(const Mesh2D& mesh, const TractionLoad& load);

// Incremental-loading Newton solve; the load factor ramps with
// (1 - cos(pi * m / increments)) / 2. Throws NewtonDivergence when an
// increment fails to converge within max_newton iterations.
SolidState solve_static(const Mesh2D& mesh, std::span<const Material> materials,
                        const TractionLoad& load, std::span<const DirichletBC> bcs,
                        const SolveOptions& options = {});

// ---------------------------------------------------------------------------
// Scenario: mesh plus load, boundary conditions and the binding of material
// constants to inverse-problem parameters.
// ---------------------------------------------------------------------------

// Either a named parameter or a pinned constant.
struct MaterialBinding {
    std::string param; // empty when pinned
    double value = 0.0;

    static MaterialBinding parameter(std::string name) { return {std::move(name), 0.0}; }
    static MaterialBinding pinned(double v) { return {{}, v}; }
    bool is_parameter() const { return !param.empty(); }
};

struct SubdomainMaterial {
    MaterialBinding E;
    MaterialBinding nu;
};

// Piecewise-constant traction along an ordered boundary node set. span is in
// normalized arc length of the set; the traction is t_normal * n +
// t_tangent * t with t the traversal direction and n its left normal
// (outward when the biofilm lies on the right of the traversal).
struct TractionProfileEntry {
    std::string set;
    double span_begin = 0.0;
    double span_end = 1.0;
    double t_normal = 0.0;  // Pa
    double t_tangent = 0.0; // Pa
};

TractionLoad expand_traction_profile(const Mesh2D& mesh,
                                     std::span<const TractionProfileEntry> profile);

struct FemScenario {
    std::string tag; // provenance label
    Mesh2D mesh;
    std::vector<SubdomainMaterial> materials; // indexed by material id
    std::vector<TractionProfileEntry> profile;
    std::vector<DirichletBC> dirichlet;
    SolveOptions options;

    void validate() const;
};

// Forward model over a scenario. theta follows the lexicographically sorted
// list of bound parameter names; the deformed interface is read from the
// ordered node set "interface" with the biofilm on the right.
class FemModel final : public ForwardModel {
public:
    explicit FemModel(FemScenario scenario);
    std::string id() const override;
    std::vector<std::string> parameter_names() const override { return names_; }
    InterfaceCurve evaluate(const ParameterVector& theta) const override;
    const FemScenario& scenario() const { return scenario_; }

private:
    FemScenario scenario_;
    std::vector<std::string> names_;
    TractionLoad load_;
};

// Structured quad mesh of a smooth dome on the substratum y = 0, nx x ny
// elements over width mm centered on x = 0. Column height blends h_edge at
// the lateral faces into h_peak at the center. Node sets: "substratum",
// "upstream", "crest", "downstream" and the ordered exposed boundary
// "interface" (up the upstream face, across the crest, down the downstream
// face).
Mesh2D make_bump_mesh(int nx, int ny, double width, double h_edge, double h_peak);

// Reassigns element materials to horizontal bands; fractions are band height
// shares from the substratum up and must sum to 1. Band b gets material id b.
void assign_row_bands(Mesh2D& mesh, int ny, std::span<const double> fractions);

// Reference inverse-problem scenarios used by tests and shipped configs.
FemScenario make_homogeneous_bump_scenario(int nx = 16, int ny = 6);
FemScenario make_heterogeneous_bump_scenario(int nx = 16, int ny = 6);

} // namespace bioinverse
