#include "bioinverse/fem.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseCholesky>

#include "bioinverse/errors.hpp"

namespace bioinverse {

void Material::validate() const {
    if (!(E > 0.0)) throw ValidationError("Young's modulus must be positive");
    if (!(nu < 0.5)) throw ValidationError("Poisson ratio must be below 0.5");
    if (!(nu > -1.0)) throw ValidationError("Poisson ratio must be above -1");
}

namespace {

constexpr double kGauss = 0.5773502691896257;

struct GaussPoint {
    double xi;
    double eta;
};

constexpr std::array<GaussPoint, 4> kGaussPoints{
    {{-kGauss, -kGauss}, {kGauss, -kGauss}, {kGauss, kGauss}, {-kGauss, kGauss}}};

// Parent-coordinate shape gradients for (bl, br, tr, tl); x holds d/dxi,
// y holds d/deta.
std::array<Vec2, 4> shape_gradients(double xi, double eta) {
    return {{{-0.25 * (1.0 - eta), -0.25 * (1.0 - xi)},
             {0.25 * (1.0 - eta), -0.25 * (1.0 + xi)},
             {0.25 * (1.0 + eta), 0.25 * (1.0 + xi)},
             {-0.25 * (1.0 + eta), 0.25 * (1.0 - xi)}}};
}

double reference_jacobian(const Mesh2D& mesh, const std::array<int, 4>& conn,
                          const GaussPoint& gp) {
    const auto dN = shape_gradients(gp.xi, gp.eta);
    double J11 = 0.0, J12 = 0.0, J21 = 0.0, J22 = 0.0;
    for (int a = 0; a < 4; ++a) {
        const auto& X = mesh.nodes[static_cast<std::size_t>(conn[static_cast<std::size_t>(a)])];
        J11 += X.x * dN[static_cast<std::size_t>(a)].x;
        J12 += X.x * dN[static_cast<std::size_t>(a)].y;
        J21 += X.y * dN[static_cast<std::size_t>(a)].x;
        J22 += X.y * dN[static_cast<std::size_t>(a)].y;
    }
    return J11 * J22 - J12 * J21;
}

struct ElementGeometry {
    std::array<Vec2, 4> grad; // material-coordinate shape gradients
    double detJ = 0.0;
};

ElementGeometry element_geometry(const Mesh2D& mesh, const std::array<int, 4>& conn,
                                 const GaussPoint& gp) {
    const auto dN = shape_gradients(gp.xi, gp.eta);
    double J11 = 0.0, J12 = 0.0, J21 = 0.0, J22 = 0.0;
    for (int a = 0; a < 4; ++a) {
        const auto& X = mesh.nodes[static_cast<std::size_t>(conn[static_cast<std::size_t>(a)])];
        J11 += X.x * dN[static_cast<std::size_t>(a)].x;
        J12 += X.x * dN[static_cast<std::size_t>(a)].y;
        J21 += X.y * dN[static_cast<std::size_t>(a)].x;
        J22 += X.y * dN[static_cast<std::size_t>(a)].y;
    }
    ElementGeometry geo;
    geo.detJ = J11 * J22 - J12 * J21;
    for (int a = 0; a < 4; ++a) {
        const auto& d = dN[static_cast<std::size_t>(a)];
        geo.grad[static_cast<std::size_t>(a)] = {(J22 * d.x - J21 * d.y) / geo.detJ,
                                                 (-J12 * d.x + J11 * d.y) / geo.detJ};
    }
    return geo;
}

struct Kinematics {
    double F11, F12, F21, F22;
    double E11, E22, E12;
};

Kinematics kinematics(const Eigen::VectorXd& u, const std::array<int, 4>& conn,
                      const std::array<Vec2, 4>& grad) {
    double H11 = 0.0, H12 = 0.0, H21 = 0.0, H22 = 0.0;
    for (int a = 0; a < 4; ++a) {
        const int node = conn[static_cast<std::size_t>(a)];
        const double ux = u[2 * node];
        const double uy = u[2 * node + 1];
        const auto& g = grad[static_cast<std::size_t>(a)];
        H11 += ux * g.x;
        H12 += ux * g.y;
        H21 += uy * g.x;
        H22 += uy * g.y;
    }
    Kinematics k{1.0 + H11, H12, H21, 1.0 + H22, 0.0, 0.0, 0.0};
    // E = 0.5 (H + H^T + H^T H) avoids the cancellation in 0.5 (F^T F - I)
    // that otherwise floors the Newton residual at machine noise.
    k.E11 = H11 + 0.5 * (H11 * H11 + H21 * H21);
    k.E22 = H22 + 0.5 * (H12 * H12 + H22 * H22);
    k.E12 = 0.5 * (H12 + H21 + H11 * H12 + H21 * H22);
    return k;
}

Eigen::Vector3d stvk_stress(const Kinematics& k, double lambda, double mu) {
    const double tr = k.E11 + k.E22;
    return {lambda * tr + 2.0 * mu * k.E11, lambda * tr + 2.0 * mu * k.E22,
            2.0 * mu * k.E12};
}

// Strain-displacement matrix of the Green-Lagrange strain in Voigt order
// (E11, E22, 2 E12).
Eigen::Matrix<double, 3, 8> strain_matrix(const Kinematics& k,
                                          const std::array<Vec2, 4>& grad) {
    Eigen::Matrix<double, 3, 8> B;
    for (int a = 0; a < 4; ++a) {
        const auto& g = grad[static_cast<std::size_t>(a)];
        B(0, 2 * a) = k.F11 * g.x;
        B(0, 2 * a + 1) = k.F21 * g.x;
        B(1, 2 * a) = k.F12 * g.y;
        B(1, 2 * a + 1) = k.F22 * g.y;
        B(2, 2 * a) = k.F11 * g.y + k.F12 * g.x;
        B(2, 2 * a + 1) = k.F21 * g.y + k.F22 * g.x;
    }
    return B;
}

} // namespace

void Mesh2D::validate() const {
    const int n_nodes = static_cast<int>(nodes.size());
    if (n_nodes < 4 || elems.empty())
        throw ValidationError("mesh needs at least one quadrilateral");
    if (elem_material.size() != elems.size())
        throw ValidationError("elem_material does not match the element count");
    for (std::size_t e = 0; e < elems.size(); ++e) {
        for (int node : elems[e])
            if (node < 0 || node >= n_nodes)
                throw ValidationError("element " + std::to_string(e) +
                                      " references a node out of range");
        for (const auto& gp : kGaussPoints)
            if (!(reference_jacobian(*this, elems[e], gp) > 0.0))
                throw ValidationError("non-positive reference Jacobian in element " +
                                      std::to_string(e));
    }
    for (const auto& [name, set] : node_sets)
        for (int node : set)
            if (node < 0 || node >= n_nodes)
                throw ValidationError("node set '" + name +
                                      "' references a node out of range");
}

void assemble_internal(const Mesh2D& mesh, std::span<const Material> materials,
                       const Eigen::VectorXd& u, Eigen::VectorXd& f_int,
                       Eigen::SparseMatrix<double>* K_out) {
    const int dofs = mesh.dof_count();
    f_int = Eigen::VectorXd::Zero(dofs);
    std::vector<Eigen::Triplet<double>> triplets;
    if (K_out != nullptr) triplets.reserve(mesh.elems.size() * 64);

    for (std::size_t e = 0; e < mesh.elems.size(); ++e) {
        const auto& conn = mesh.elems[e];
        const Material& mat = materials[static_cast<std::size_t>(mesh.elem_material[e])];
        const double lambda = mat.lambda();
        const double mu = mat.mu();
        Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
        C(0, 0) = C(1, 1) = lambda + 2.0 * mu;
        C(0, 1) = C(1, 0) = lambda;
        C(2, 2) = mu;

        Eigen::Matrix<double, 8, 1> fe = Eigen::Matrix<double, 8, 1>::Zero();
        Eigen::Matrix<double, 8, 8> Ke = Eigen::Matrix<double, 8, 8>::Zero();
        for (const auto& gp : kGaussPoints) {
            const auto geo = element_geometry(mesh, conn, gp);
            const auto kin = kinematics(u, conn, geo.grad);
            const double detF = kin.F11 * kin.F22 - kin.F12 * kin.F21;
            if (!(detF > 0.0)) throw ElementInverted(e);
            const Eigen::Vector3d S = stvk_stress(kin, lambda, mu);
            const auto B = strain_matrix(kin, geo.grad);
            fe += B.transpose() * S * geo.detJ;
            if (K_out != nullptr) {
                Ke += B.transpose() * C * B * geo.detJ;
                for (int a = 0; a < 4; ++a) {
                    const auto& ga = geo.grad[static_cast<std::size_t>(a)];
                    for (int b = 0; b < 4; ++b) {
                        const auto& gb = geo.grad[static_cast<std::size_t>(b)];
                        const double gSg = ga.x * (S[0] * gb.x + S[2] * gb.y) +
                                           ga.y * (S[2] * gb.x + S[1] * gb.y);
                        Ke(2 * a, 2 * b) += gSg * geo.detJ;
                        Ke(2 * a + 1, 2 * b + 1) += gSg * geo.detJ;
                    }
                }
            }
        }
        for (int a = 0; a < 4; ++a) {
            const int na = conn[static_cast<std::size_t>(a)];
            f_int[2 * na] += fe[2 * a];
            f_int[2 * na + 1] += fe[2 * a + 1];
            if (K_out != nullptr) {
                for (int b = 0; b < 4; ++b) {
                    const int nb = conn[static_cast<std::size_t>(b)];
                    for (int i = 0; i < 2; ++i)
                        for (int j = 0; j < 2; ++j)
                            triplets.emplace_back(2 * na + i, 2 * nb + j,
                                                  Ke(2 * a + i, 2 * b + j));
                }
            }
        }
    }
    if (K_out != nullptr) {
        K_out->resize(dofs, dofs);
        K_out->setFromTriplets(triplets.begin(), triplets.end());
    }
}

std::vector<Eigen::Vector3d> gauss_point_stresses(const Mesh2D& mesh,
                                                  std::span<const Material> materials,
                                                  const Eigen::VectorXd& u) {
    std::vector<Eigen::Vector3d> stresses;
    stresses.reserve(mesh.elems.size() * 4);
    for (std::size_t e = 0; e < mesh.elems.size(); ++e) {
        const auto& conn = mesh.elems[e];
        const Material& mat = materials[static_cast<std::size_t>(mesh.elem_material[e])];
        for (const auto& gp : kGaussPoints) {
            const auto geo = element_geometry(mesh, conn, gp);
            const auto kin = kinematics(u, conn, geo.grad);
            stresses.push_back(stvk_stress(kin, mat.lambda(), mat.mu()));
        }
    }
    return stresses;
}

double total_strain_energy(const Mesh2D& mesh, std::span<const Material> materials,
                           const Eigen::VectorXd& u) {
    double energy = 0.0;
    for (std::size_t e = 0; e < mesh.elems.size(); ++e) {
        const auto& conn = mesh.elems[e];
        const Material& mat = materials[static_cast<std::size_t>(mesh.elem_material[e])];
        const double lambda = mat.lambda();
        const double mu = mat.mu();
        for (const auto& gp : kGaussPoints) {
            const auto geo = element_geometry(mesh, conn, gp);
            const auto kin = kinematics(u, conn, geo.grad);
            const double tr = kin.E11 + kin.E22;
            const double ee = kin.E11 * kin.E11 + kin.E22 * kin.E22 +
                              2.0 * kin.E12 * kin.E12;
            energy += (0.5 * lambda * tr * tr + mu * ee) * geo.detJ;
        }
    }
    return energy;
}

Eigen::VectorXd external_force(const Mesh2D& mesh, const TractionLoad& load) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(mesh.dof_count());
    for (const auto& edge : load.edges) {
        const auto& conn = mesh.elems[static_cast<std::size_t>(edge.elem)];
        const int n0 = conn[static_cast<std::size_t>(edge.edge)];
        const int n1 = conn[static_cast<std::size_t>((edge.edge + 1) % 4)];
        const double len = (mesh.nodes[static_cast<std::size_t>(n1)] -
                            mesh.nodes[static_cast<std::size_t>(n0)]).norm();
        const Vec2 half = edge.traction * (0.5 * len);
        f[2 * n0] += half.x;
        f[2 * n0 + 1] += half.y;
        f[2 * n1] += half.x;
        f[2 * n1 + 1] += half.y;
    }
    return f;
}

SolidState solve_static(const Mesh2D& mesh, std::span<const Material> materials,
                        const TractionLoad& load, std::span<const DirichletBC> bcs,
                        const SolveOptions& options) {
    const int dofs = mesh.dof_count();
    std::vector<char> fixed(static_cast<std::size_t>(dofs), 0);
    for (const auto& bc : bcs) {
        if (bc.fix_x) fixed[static_cast<std::size_t>(2 * bc.node)] = 1;
        if (bc.fix_y) fixed[static_cast<std::size_t>(2 * bc.node + 1)] = 1;
    }
    const Eigen::VectorXd f_full = external_force(mesh, load);

    SolidState state;
    state.u = Eigen::VectorXd::Zero(dofs);
    Eigen::VectorXd f_int;
    Eigen::SparseMatrix<double> K;

    // One Newton solve toward factor * f_full, warm-started from state.u.
    // Returns false when the iteration stalls; state.u is left at the last
    // iterate and must be rewound by the caller.
    auto newton_solve = [&](double factor) -> bool {
        const Eigen::VectorXd f_target = factor * f_full;
        const double f_norm = f_target.norm();
        try {
            assemble_internal(mesh, materials, state.u, f_int, &K);
        } catch (const ElementInverted&) {
            return false;
        }
        for (int it = 0; it <= options.max_newton; ++it) {
            Eigen::VectorXd res = f_target - f_int;
            for (int i = 0; i < dofs; ++i)
                if (fixed[static_cast<std::size_t>(i)]) res[i] = 0.0;
            if (res.norm() <= options.newton_tol * f_norm) return true;
            if (it == options.max_newton) break;

            std::vector<Eigen::Triplet<double>> triplets;
            triplets.reserve(static_cast<std::size_t>(K.nonZeros()));
            for (int col = 0; col < K.outerSize(); ++col)
                for (Eigen::SparseMatrix<double>::InnerIterator entry(K, col); entry; ++entry)
                    if (!fixed[static_cast<std::size_t>(entry.row())] &&
                        !fixed[static_cast<std::size_t>(entry.col())])
                        triplets.emplace_back(entry.row(), entry.col(), entry.value());
            for (int i = 0; i < dofs; ++i)
                if (fixed[static_cast<std::size_t>(i)]) triplets.emplace_back(i, i, 1.0);
            Eigen::SparseMatrix<double> Kbc(dofs, dofs);
            Kbc.setFromTriplets(triplets.begin(), triplets.end());

            Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(Kbc);
            if (solver.info() != Eigen::Success)
                throw NewtonDivergence("tangent factorization failed");
            const Eigen::VectorXd du = solver.solve(res);

            // Backtrack on element inversion so a too-long trial step does
            // not abort a load level whose solution is well defined.
            double scale = 1.0;
            for (int attempt = 0;; ++attempt) {
                try {
                    assemble_internal(mesh, materials, state.u + scale * du, f_int, &K);
                    break;
                } catch (const ElementInverted&) {
                    if (attempt == 12) return false;
                    scale *= 0.5;
                }
            }
            state.u += scale * du;
            ++state.newton_iterations_total;
        }
        return false;
    };

    for (int m = 1; m <= options.increments; ++m) {
        auto ramp = [&](int step) {
            return (1.0 - std::cos(std::numbers::pi * static_cast<double>(step) /
                                   static_cast<double>(options.increments))) / 2.0;
        };
        // Subdivide the increment when Newton stalls; a stall at the
        // shortest substep means the equilibrium path cannot be followed.
        double reached = ramp(m - 1);
        const double target = ramp(m);
        double step = target - reached;
        const double min_step = step / 64.0;
        Eigen::VectorXd u_good = state.u;
        while (reached < target) {
            if (newton_solve(std::min(reached + step, target))) {
                reached = std::min(reached + step, target);
                u_good = state.u;
            } else {
                state.u = u_good;
                step *= 0.5;
                if (step < min_step)
                    throw NewtonDivergence("load increment " + std::to_string(m) +
                                           " failed to converge");
            }
        }
    }
    return state;
}

TractionLoad expand_traction_profile(const Mesh2D& mesh,
                                     std::span<const TractionProfileEntry> profile) {
    auto find_edge = [&](int n0, int n1) -> std::pair<int, int> {
        for (std::size_t e = 0; e < mesh.elems.size(); ++e) {
            const auto& conn = mesh.elems[e];
            for (int le = 0; le < 4; ++le) {
                const int a = conn[static_cast<std::size_t>(le)];
                const int b = conn[static_cast<std::size_t>((le + 1) % 4)];
                if ((a == n0 && b == n1) || (a == n1 && b == n0))
                    return {static_cast<int>(e), le};
            }
        }
        throw ValidationError("traction profile references a node pair that is not an element edge");
    };

    TractionLoad load;
    for (const auto& entry : profile) {
        const auto it = mesh.node_sets.find(entry.set);
        if (it == mesh.node_sets.end())
            throw ValidationError("unknown boundary node set '" + entry.set + "'");
        const auto& set = it->second;
        if (set.size() < 2)
            throw ValidationError("boundary node set '" + entry.set + "' is too short");
        std::vector<double> arc(set.size(), 0.0);
        for (std::size_t i = 1; i < set.size(); ++i)
            arc[i] = arc[i - 1] + (mesh.nodes[static_cast<std::size_t>(set[i])] -
                                   mesh.nodes[static_cast<std::size_t>(set[i - 1])]).norm();
        const double total = arc.back();
        if (!(total > 0.0))
            throw ValidationError("boundary node set '" + entry.set + "' has zero length");
        for (std::size_t i = 0; i + 1 < set.size(); ++i) {
            const double mid = 0.5 * (arc[i] + arc[i + 1]) / total;
            if (mid < entry.span_begin || mid > entry.span_end) continue;
            const Vec2 t = (mesh.nodes[static_cast<std::size_t>(set[i + 1])] -
                            mesh.nodes[static_cast<std::size_t>(set[i])]).normalized();
            const Vec2 n{-t.y, t.x};
            const Vec2 traction = n * entry.t_normal + t * entry.t_tangent;
            const auto [elem, edge] = find_edge(set[i], set[i + 1]);
            load.edges.push_back({elem, edge, traction});
        }
    }
    return load;
}

void FemScenario::validate() const {
    mesh.validate();
    if (materials.empty())
        throw ValidationError("scenario needs at least one material");
    for (int id : mesh.elem_material)
        if (id < 0 || id >= static_cast<int>(materials.size()))
            throw ValidationError("element material id out of range");
    for (const auto& entry : profile) {
        if (!mesh.node_sets.contains(entry.set))
            throw ValidationError("traction profile uses unknown node set '" +
                                  entry.set + "'");
        if (!(entry.span_begin <= entry.span_end))
            throw ValidationError("traction profile span is empty");
    }
    for (const auto& bc : dirichlet)
        if (bc.node < 0 || bc.node >= static_cast<int>(mesh.nodes.size()))
            throw ValidationError("dirichlet node out of range");
    if (options.increments < 1 || options.max_newton < 1 ||
        !(options.newton_tol > 0.0))
        throw ValidationError("bad solver options");
}

FemModel::FemModel(FemScenario scenario) : scenario_(std::move(scenario)) {
    scenario_.validate();
    if (!scenario_.mesh.node_sets.contains("interface"))
        throw ValidationError("scenario mesh has no 'interface' node set");
    std::set<std::string> names;
    for (const auto& m : scenario_.materials) {
        if (m.E.is_parameter()) names.insert(m.E.param);
        if (m.nu.is_parameter()) names.insert(m.nu.param);
    }
    if (names.empty())
        throw ValidationError("scenario binds no inverse-problem parameters");
    names_.assign(names.begin(), names.end());
    load_ = expand_traction_profile(scenario_.mesh, scenario_.profile);
}

std::string FemModel::id() const { return "fem:" + scenario_.tag; }

InterfaceCurve FemModel::evaluate(const ParameterVector& theta) const {
    if (theta.size() != static_cast<Eigen::Index>(names_.size()))
        throw ValidationError("fem model expects " + std::to_string(names_.size()) +
                              " parameters");
    auto resolve = [&](const MaterialBinding& binding) {
        if (!binding.is_parameter()) return binding.value;
        const auto it = std::lower_bound(names_.begin(), names_.end(), binding.param);
        return theta[static_cast<Eigen::Index>(it - names_.begin())];
    };
    std::vector<Material> materials;
    materials.reserve(scenario_.materials.size());
    for (const auto& m : scenario_.materials) {
        const Material mat{resolve(m.E), resolve(m.nu)};
        mat.validate();
        materials.push_back(mat);
    }
    SolidState state;
    try {
        state = solve_static(scenario_.mesh, materials, load_, scenario_.dirichlet,
                             scenario_.options);
    } catch (const ValidationError&) {
        throw;
    } catch (const Error& e) {
        throw ModelFailure(e.what());
    }
    const auto& set = scenario_.mesh.node_sets.at("interface");
    InterfaceCurve curve;
    curve.closed = false;
    curve.biofilm_on_right = true;
    curve.vertices.reserve(set.size());
    for (int node : set) {
        const auto& X = scenario_.mesh.nodes[static_cast<std::size_t>(node)];
        curve.vertices.push_back({X.x + state.u[2 * node], X.y + state.u[2 * node + 1]});
    }
    return curve;
}

Mesh2D make_bump_mesh(int nx, int ny, double width, double h_edge, double h_peak) {
    if (nx < 2 || ny < 1 || !(width > 0.0) || !(h_edge > 0.0) || !(h_peak > 0.0))
        throw ValidationError("bad dome mesh dimensions");
    Mesh2D mesh;
    auto id = [&](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            const double x = -0.5 * width + width * static_cast<double>(i) /
                                               static_cast<double>(nx);
            const double blend =
                0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * x / width));
            const double h = h_edge + (h_peak - h_edge) * blend;
            mesh.nodes.push_back({x, h * static_cast<double>(j) / static_cast<double>(ny)});
        }
    }
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            mesh.elems.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
            mesh.elem_material.push_back(0);
        }
    }
    std::vector<int> substratum, upstream, crest, downstream, interface;
    for (int i = 0; i <= nx; ++i) substratum.push_back(id(i, 0));
    for (int j = 0; j <= ny; ++j) upstream.push_back(id(0, j));
    for (int i = 0; i <= nx; ++i) crest.push_back(id(i, ny));
    for (int j = ny; j >= 0; --j) downstream.push_back(id(nx, j));
    for (int j = 0; j <= ny; ++j) interface.push_back(id(0, j));
    for (int i = 1; i <= nx; ++i) interface.push_back(id(i, ny));
    for (int j = ny - 1; j >= 0; --j) interface.push_back(id(nx, j));
    mesh.node_sets["substratum"] = std::move(substratum);
    mesh.node_sets["upstream"] = std::move(upstream);
    mesh.node_sets["crest"] = std::move(crest);
    mesh.node_sets["downstream"] = std::move(downstream);
    mesh.node_sets["interface"] = std::move(interface);
    return mesh;
}

void assign_row_bands(Mesh2D& mesh, int ny, std::span<const double> fractions) {
    if (ny < 1 || fractions.empty())
        throw ValidationError("bad band layout");
    if (mesh.elems.size() % static_cast<std::size_t>(ny) != 0)
        throw ValidationError("element count is not a whole number of rows");
    double sum = 0.0;
    for (double f : fractions) {
        if (!(f > 0.0)) throw ValidationError("band fractions must be positive");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ValidationError("band fractions must sum to 1");
    const int nx = static_cast<int>(mesh.elems.size()) / ny;
    std::vector<int> upper_row;
    double cum = 0.0;
    for (double f : fractions) {
        cum += f;
        upper_row.push_back(static_cast<int>(std::lround(cum * ny)));
    }
    upper_row.back() = ny;
    for (std::size_t e = 0; e < mesh.elems.size(); ++e) {
        const int row = static_cast<int>(e) / nx;
        std::size_t band = 0;
        while (row >= upper_row[band]) ++band;
        mesh.elem_material[e] = static_cast<int>(band);
    }
}

namespace {

FemScenario make_bump_scenario_base(int nx, int ny) {
    FemScenario s;
    s.mesh = make_bump_mesh(nx, ny, 1.0, 0.1, 0.3);
    s.profile.push_back({"upstream", 0.0, 1.0, -3.0, 0.75});
    s.profile.push_back({"crest", 0.0, 1.0, -2.0, 1.25});
    for (int n : s.mesh.node_sets.at("substratum")) s.dirichlet.push_back({n, true, true});
    return s;
}

} // namespace

FemScenario make_homogeneous_bump_scenario(int nx, int ny) {
    FemScenario s = make_bump_scenario_base(nx, ny);
    s.tag = "homogeneous-bump";
    s.materials.push_back({MaterialBinding::parameter("E"), MaterialBinding::parameter("nu")});
    return s;
}

FemScenario make_heterogeneous_bump_scenario(int nx, int ny) {
    FemScenario s = make_bump_scenario_base(nx, ny);
    s.tag = "heterogeneous-bump";
    // A thin compliant interlayer under a thick crust keeps all three moduli
    // visible from interface data, which equal thirds do not.
    const std::array<double, 3> bands{1.0 / 3.0, 1.0 / 6.0, 1.0 / 2.0};
    assign_row_bands(s.mesh, ny, bands);
    for (int b = 1; b <= 3; ++b)
        s.materials.push_back({MaterialBinding::parameter("E_" + std::to_string(b)),
                               MaterialBinding::pinned(0.3)});
    return s;
}

} // namespace bioinverse
