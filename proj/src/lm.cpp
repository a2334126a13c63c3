#include "bioinverse/lm.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "bioinverse/errors.hpp"
#include "bioinverse/threads.hpp"

namespace bioinverse {

bool ParameterSpec::strictly_inside(const ParameterVector& x) const {
    if (x.size() != lower.size()) return false;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (!(lower[i] < x[i] && x[i] < upper[i])) return false;
    return true;
}

void ParameterSpec::validate() const {
    const auto n = static_cast<Eigen::Index>(names.size());
    if (n == 0) throw ValidationError("parameter spec is empty");
    if (lower.size() != n || upper.size() != n)
        throw ValidationError("parameter bounds do not match the parameter count");
    if (!units.empty() && units.size() != names.size())
        throw ValidationError("parameter units do not match the parameter count");
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(lower[i] < upper[i]))
            throw ValidationError("empty bound interval for parameter " +
                                  names[static_cast<std::size_t>(i)]);
}

void LMConfig::validate() const {
    if (alpha < 0.0 || beta < 0.0 || (alpha == 0.0 && beta == 0.0))
        throw ValidationError("finite-difference perturbation must be positive");
    if (!(mu0 > 0.0)) throw ValidationError("mu0 must be positive");
    if (eps_grad < 0.0 || eps_res < 0.0)
        throw ValidationError("tolerances must be non-negative");
    if (n_max < 1) throw ValidationError("n_max must be at least 1");
    if (!(mu_blowup > 0.0)) throw ValidationError("mu_blowup must be positive");
}

const char* to_string(StepStatus s) {
    switch (s) {
        case StepStatus::accepted: return "accepted";
        case StepStatus::declined_bounds: return "declined_bounds";
        case StepStatus::terminated: return "terminated";
    }
    return "unknown";
}

const char* to_string(LMStatus s) {
    switch (s) {
        case LMStatus::converged_grad: return "converged_grad";
        case LMStatus::converged_res: return "converged_res";
        case LMStatus::max_iterations: return "max_iterations";
        case LMStatus::mu_blowup: return "mu_blowup";
        case LMStatus::model_failure: return "model_failure";
    }
    return "unknown";
}

std::pair<ParameterVector, double> perturb(const ParameterVector& x, int i,
                                           double alpha, double beta) {
    const double delta = alpha + beta * x[i];
    if (std::abs(delta) < 1e-300)
        throw PerturbationUnderflow("finite-difference step underflowed for component " +
                                    std::to_string(i));
    ParameterVector xt = x;
    xt[i] += delta;
    return {std::move(xt), delta};
}

namespace {

struct FdPlan {
    std::vector<ParameterVector> points;
    std::vector<double> deltas;
    std::vector<int> flips;
};

FdPlan make_fd_plan(const ParameterVector& x, double alpha, double beta,
                    const ParameterSpec* bounds) {
    const int n = static_cast<int>(x.size());
    FdPlan plan;
    plan.points.reserve(static_cast<std::size_t>(n));
    plan.deltas.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        auto [xp, delta] = perturb(x, j, alpha, beta);
        if (bounds != nullptr && !bounds->strictly_inside(xp)) {
            delta = -delta;
            xp[j] = x[j] + delta;
            plan.flips.push_back(j);
        }
        plan.points.push_back(std::move(xp));
        plan.deltas[static_cast<std::size_t>(j)] = delta;
    }
    return plan;
}

} // namespace

Eigen::MatrixXd fd_jacobian_serial(const ResidualFn& residual_fn,
                                   const ParameterVector& x,
                                   const Eigen::VectorXd& r_at_x,
                                   double alpha, double beta,
                                   const ParameterSpec* bounds,
                                   std::vector<int>* flips_out) {
    const FdPlan plan = make_fd_plan(x, alpha, beta, bounds);
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXd J(r_at_x.size(), n);
    for (int j = 0; j < n; ++j) {
        Eigen::VectorXd rp;
        try {
            rp = residual_fn(plan.points[static_cast<std::size_t>(j)]);
        } catch (const ModelFailure& e) {
            throw ModelFailure(e.what(), j);
        }
        J.col(j) = (rp - r_at_x) / plan.deltas[static_cast<std::size_t>(j)];
    }
    if (flips_out != nullptr) *flips_out = plan.flips;
    return J;
}

Eigen::MatrixXd fd_jacobian(const ResidualFn& residual_fn,
                            const ParameterVector& x,
                            const Eigen::VectorXd& r_at_x,
                            double alpha, double beta,
                            const ParameterSpec* bounds,
                            std::vector<int>* flips_out) {
    const FdPlan plan = make_fd_plan(x, alpha, beta, bounds);
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXd J(r_at_x.size(), n);
    std::exception_ptr first_error;
    int first_error_col = n;
#pragma omp parallel for schedule(static) num_threads(max_threads())
    for (int j = 0; j < n; ++j) {
        try {
            const Eigen::VectorXd rp = residual_fn(plan.points[static_cast<std::size_t>(j)]);
            J.col(j) = (rp - r_at_x) / plan.deltas[static_cast<std::size_t>(j)];
        } catch (const ModelFailure& e) {
#pragma omp critical(bioinverse_fd_jacobian_error)
            if (j < first_error_col) {
                first_error_col = j;
                first_error = std::make_exception_ptr(ModelFailure(e.what(), j));
            }
        } catch (...) {
#pragma omp critical(bioinverse_fd_jacobian_error)
            if (j < first_error_col) {
                first_error_col = j;
                first_error = std::current_exception();
            }
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    if (flips_out != nullptr) *flips_out = plan.flips;
    return J;
}

Eigen::VectorXd lm_step(const Eigen::MatrixXd& J, const Eigen::VectorXd& r,
                        double mu) {
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    Eigen::MatrixXd M = JtJ;
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        M(i, i) += mu * std::max(JtJ(i, i), 1e-30);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    if (!(smin > 0.0) || sv(0) / smin > 1e15)
        throw SingularSystem("damped normal equations are numerically singular");
    const Eigen::VectorXd rhs = -(J.transpose() * r);
    return M.ldlt().solve(rhs);
}

double err_grad(const Eigen::MatrixXd& J, const Eigen::VectorXd& r) {
    return (J.transpose() * r).norm();
}

double err_res(const Eigen::VectorXd& r) {
    return r.norm() / std::sqrt(static_cast<double>(r.size()));
}

double update_mu(double mu, double err_grad_k, double err_grad_km1, bool improved) {
    return improved ? mu * (err_grad_k / err_grad_km1) : mu;
}

LMResult run(const ResidualFn& residual_fn, const ParameterVector& x0,
             const ParameterSpec& bounds, const LMConfig& config) {
    config.validate();
    bounds.validate();
    if (x0.size() != static_cast<Eigen::Index>(bounds.size()))
        throw ValidationError("initial point does not match the parameter count");
    if (!bounds.strictly_inside(x0))
        throw ValidationError("initial point is not strictly inside the bounds");

    const double nan = std::numeric_limits<double>::quiet_NaN();

    LMTrace trace;
    ParameterVector x = x0;
    Eigen::VectorXd r;
    double mu = config.mu0;
    int k = 0;
    double e_res = nan;
    double e_grad = nan;
    std::vector<int> flips;

    auto finish = [&](LMStatus status) {
        LMRecord rec;
        rec.k = k;
        rec.x = x;
        rec.residual = r;
        rec.err_res = e_res;
        rec.err_grad = e_grad;
        rec.mu = mu;
        rec.status = StepStatus::terminated;
        rec.fd_sign_flips = flips;
        trace.records.push_back(std::move(rec));
        LMResult result;
        result.status = status;
        result.x = x;
        result.iterations = k;
        result.final_err_res = e_res;
        result.final_err_grad = e_grad;
        result.final_mu = mu;
        result.trace = std::move(trace);
        return result;
    };

    try {
        r = residual_fn(x);
    } catch (const ModelFailure&) {
        return finish(LMStatus::model_failure);
    }

    double prev_e_res = nan;
    double prev_e_grad = nan;

    while (true) {
        e_res = err_res(r);
        e_grad = nan;
        flips.clear();
        if (config.eps_res > 0.0 && e_res < config.eps_res)
            return finish(LMStatus::converged_res);

        Eigen::MatrixXd J;
        try {
            J = fd_jacobian(residual_fn, x, r, config.alpha, config.beta, &bounds,
                            &flips);
        } catch (const ModelFailure&) {
            return finish(LMStatus::model_failure);
        }
        e_grad = err_grad(J, r);
        if (k > 0 && e_grad < prev_e_grad && e_res < prev_e_res)
            mu = update_mu(mu, e_grad, prev_e_grad, true);
        prev_e_grad = e_grad;
        prev_e_res = e_res;

        if (e_grad < config.eps_grad) return finish(LMStatus::converged_grad);
        if (k > config.n_max) return finish(LMStatus::max_iterations);

        while (true) {
            const Eigen::VectorXd dx = lm_step(J, r, mu);
            const ParameterVector x_new = x + dx;
            LMRecord rec;
            rec.k = k;
            rec.x = x;
            rec.residual = r;
            rec.err_res = e_res;
            rec.err_grad = e_grad;
            rec.mu = mu;
            rec.fd_sign_flips = flips;
            if (!bounds.strictly_inside(x_new)) {
                rec.status = StepStatus::declined_bounds;
                trace.records.push_back(std::move(rec));
                mu *= 2.0;
                if (mu > config.mu0 * config.mu_blowup)
                    return finish(LMStatus::mu_blowup);
                continue;
            }
            Eigen::VectorXd r_new;
            try {
                r_new = residual_fn(x_new);
            } catch (const ModelFailure&) {
                return finish(LMStatus::model_failure);
            }
            rec.status = StepStatus::accepted;
            trace.records.push_back(std::move(rec));
            x = x_new;
            r = std::move(r_new);
            ++k;
            break;
        }
    }
}

} // namespace bioinverse
