#pragma once

#include <Eigen/Dense>
#include <optional>

#include "scm/features.hpp"

namespace scm {

struct SolverOptions {
    double tol = 1e-9;   // sup-norm of the dual gradient
    int max_iter = 200;
};

// Solution of the entropy-balancing weight problem in dual form: weights on
// control units are exp(alpha + phi_i'beta) / pi_bar, zero on treated units.
struct BalanceSolution {
    double alpha = 0.0;
    Eigen::VectorXd beta;        // length p
    Eigen::VectorXd weights;     // length n, 0 on treated units
    Eigen::VectorXd imbalance;   // Pn w(1-D)phi - Pn (D/pi_bar)phi, length p
    double zeta = 0.0;
    double kkt_residual = 0.0;   // sup-norm of dual gradient at the solution
    int iterations = 0;
    bool converged = false;
};

// Thrown when Newton runs out of iterations; carries the best iterate so
// callers can inspect or report it.
class ConvergenceError : public ScmError {
public:
    ConvergenceError(const std::string& what, BalanceSolution best)
        : ScmError("convergence", what), best_iterate(std::move(best)) {}
    BalanceSolution best_iterate;
};

// Newton with Armijo backtracking on the dual objective
//   Pn (1-D_i) exp(a + phi_i'b) - Pn D_i (a + phi_i'b) + pi_bar zeta^2 / (2n) |b|^2.
// Features may have p = 0 (intercept-only problem).
BalanceSolution solve_dual(const FeatureMatrix& features, const Eigen::ArrayXd& treated,
                           double zeta, const SolverOptions& opts = {});

struct PrimalOptions {
    int max_iter = 400000;
    double step0 = 0.5;           // step_t = step0 / sqrt(t)
    double entropy_floor = 0.0;   // replaces zeta^2/n when zeta == 0
};

// Direct projected-descent minimizer of the primal weight problem
//   (zeta^2/n) Pn w log w + 1/2 | Pn w(1-D)phi - Pn (D/pi_bar)phi |^2
//   s.t. w >= 0, Pn w(1-D) = 1.
// Test oracle only; instances are capped at n <= 200.
BalanceSolution solve_primal_reference(const FeatureMatrix& features,
                                       const Eigen::ArrayXd& treated, double zeta,
                                       const PrimalOptions& opts = {});

// Primal objective value at given weights (entropy restricted to controls).
double primal_objective(const FeatureMatrix& features, const Eigen::ArrayXd& treated,
                        double zeta, const Eigen::VectorXd& weights);

struct KktReport {
    Eigen::VectorXd feature_residual;  // Pn[(1-D)e^theta - D]phi_j + pi_bar zeta^2/n beta_j
    double intercept_residual = 0.0;   // Pn[(1-D)e^theta - D]
    double max_abs = 0.0;
};

KktReport kkt_report(const BalanceSolution& solution, const FeatureMatrix& features,
                     const Eigen::ArrayXd& treated);

// Shared Newton core: minimizes over coefficients c of X = [1 | columns]
//   mean(w_exp_i exp(x_i'c)) - mean(w_lin_i x_i'c) + 1/2 c'diag(ridge)c.
// The balancer uses w_exp = 1-D, w_lin = D; the population projections of the
// theory module reuse it with pi-based weights.
struct DualCore {
    Eigen::VectorXd coef;
    double grad_max = 0.0;
    int iterations = 0;
    bool converged = false;
};
DualCore dual_newton(const Eigen::MatrixXd& X, const Eigen::ArrayXd& w_exp,
                     const Eigen::ArrayXd& w_lin, const Eigen::VectorXd& ridge,
                     Eigen::VectorXd init, const SolverOptions& opts);

}  // namespace scm
