#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bioinverse {

using ParameterVector = Eigen::VectorXd;

// Box bounds are strict: a proposal on or outside a bound is declined.
struct ParameterSpec {
    std::vector<std::string> names;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    std::vector<std::string> units; // optional, parallel to names when present

    std::size_t size() const { return names.size(); }
    bool strictly_inside(const ParameterVector& x) const;
    void validate() const;
};

struct LMConfig {
    double alpha = 1e-5;      // absolute FD perturbation
    double beta = 1e-3;       // relative FD perturbation
    double mu0 = 1e-3;        // initial regularization
    double eps_grad = 1e-8;   // gradient-norm tolerance
    double eps_res = 0.0;     // RMS-residual tolerance; 0 disables
    int n_max = 40;           // iteration cap, termination at k > n_max
    double mu_blowup = 1e6;   // terminate when mu > mu0 * mu_blowup

    void validate() const;
};

enum class StepStatus { accepted, declined_bounds, terminated };
enum class LMStatus {
    converged_grad,
    converged_res,
    max_iterations,
    mu_blowup,
    model_failure,
};

const char* to_string(StepStatus s);
const char* to_string(LMStatus s);

// One proposal. Declined proposals repeat the k, x, residual and error
// measures of their iteration; mu is the value the proposal used.
struct LMRecord {
    int k = 0;
    ParameterVector x;
    Eigen::VectorXd residual;
    double err_res = 0.0;
    double err_grad = 0.0; // NaN when the iteration terminated before the Jacobian
    double mu = 0.0;
    StepStatus status = StepStatus::accepted;
    std::vector<int> fd_sign_flips; // columns whose FD step was flipped at a bound
};

struct LMTrace {
    std::vector<LMRecord> records;
};

struct LMResult {
    LMStatus status = LMStatus::model_failure;
    ParameterVector x;         // last accepted iterate
    int iterations = 0;        // final iteration index k
    double final_err_res = 0.0;
    double final_err_grad = 0.0;
    double final_mu = 0.0;
    LMTrace trace;
};

// Residual of the inverse problem; must be re-entrant (Jacobian columns are
// evaluated concurrently). Signals failure by throwing ModelFailure.
using ResidualFn = std::function<Eigen::VectorXd(const ParameterVector&)>;

// Copy of x with component i stepped by delta = alpha + beta * x_i; returns
// the stepped vector and delta. Throws PerturbationUnderflow when |delta|
// falls below 1e-300.
std::pair<ParameterVector, double> perturb(const ParameterVector& x, int i,
                                           double alpha, double beta);

// Forward-difference Jacobian, one perturbed evaluation per column
// (n_x evaluations; r_at_x is reused). fd_jacobian runs the columns in
// parallel; fd_jacobian_serial is the reference implementation, and both
// produce bit-identical results. When bounds are given, a perturbation that
// would leave them flips sign; flipped column indices are reported through
// flips_out when non-null.
Eigen::MatrixXd fd_jacobian(const ResidualFn& residual_fn,
                            const ParameterVector& x,
                            const Eigen::VectorXd& r_at_x,
                            double alpha, double beta,
                            const ParameterSpec* bounds = nullptr,
                            std::vector<int>* flips_out = nullptr);
Eigen::MatrixXd fd_jacobian_serial(const ResidualFn& residual_fn,
                                   const ParameterVector& x,
                                   const Eigen::VectorXd& r_at_x,
                                   double alpha, double beta,
                                   const ParameterSpec* bounds = nullptr,
                                   std::vector<int>* flips_out = nullptr);

// Solves (J^T J + mu * diag(J^T J)) dx = -J^T r. Diagonal entries are
// floored at 1e-30 before damping. Throws SingularSystem when the damped
// system is numerically singular (condition estimate above 1e15).
Eigen::VectorXd lm_step(const Eigen::MatrixXd& J, const Eigen::VectorXd& r,
                        double mu);

double err_grad(const Eigen::MatrixXd& J, const Eigen::VectorXd& r);
double err_res(const Eigen::VectorXd& r);

// mu * (err_grad_k / err_grad_km1) when the improved flag is set, else mu
// unchanged. The first iteration always passes improved = false.
double update_mu(double mu, double err_grad_k, double err_grad_km1,
                 bool improved);

// Bounded Levenberg-Marquardt driver. x0 must lie strictly inside bounds.
// Every completed iteration spends exactly n_x + 1 residual evaluations;
// declined proposals reuse the iteration's J and r and cost none.
LMResult run(const ResidualFn& residual_fn, const ParameterVector& x0,
             const ParameterSpec& bounds, const LMConfig& config);

} // namespace bioinverse
