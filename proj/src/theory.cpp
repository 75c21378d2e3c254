#include "scm/theory.hpp"

#include <cmath>

#include "scm/features.hpp"

namespace scm {

EffectivePeriods effective_periods_two_way(double v_eta, double sigma2, int t0) {
    if (t0 < 1) throw RangeError("t0 must be >= 1");
    if (v_eta < 0.0 || sigma2 < 0.0) throw RangeError("variances must be >= 0");
    EffectivePeriods out;
    out.method = TeMethod::ClosedFormTwoWay;
    double denom = v_eta * t0 + sigma2;
    out.approx_error2 = denom > 0.0 ? sigma2 * v_eta / denom : 0.0;
    out.t_e = out.approx_error2 > 0.0 ? 1.0 / out.approx_error2
                                      : std::numeric_limits<double>::infinity();
    return out;
}

EffectivePeriods effective_periods_svd(const Eigen::MatrixXd& psi,
                                       const Eigen::VectorXd& psi_next, double sigma_op) {
    if (psi.rows() != psi_next.size())
        throw ShapeError("psi and psi_next disagree on the factor dimension");
    if (sigma_op <= 0.0) throw RangeError("sigma_op must be > 0");

    Eigen::BDCSVD<Eigen::MatrixXd> svd(psi, Eigen::ComputeThinU);
    const Eigen::VectorXd& sing = svd.singularValues();
    // components of psi_next outside the left singular span keep the full
    // sigma^2(j) = 0 penalty, so accumulate the orthogonal remainder too
    Eigen::VectorXd xi = svd.matrixU().transpose() * psi_next;
    double captured = xi.squaredNorm();
    double ortho = psi_next.squaredNorm() - captured;

    double v = std::max(ortho, 0.0);  // mass outside the factor span
    for (Eigen::Index j = 0; j < sing.size(); ++j)
        v += sigma_op * xi[j] * xi[j] / (sing[j] * sing[j] + sigma_op);

    EffectivePeriods out;
    out.method = TeMethod::SvdBound;
    out.approx_error2 = v;
    out.t_e = v > 0.0 ? 1.0 / v : std::numeric_limits<double>::infinity();
    return out;
}

EffectivePeriods effective_periods_projection(const DgpSpec& spec, long population_n,
                                              std::uint64_t seed) {
    DgpSpec pop = spec;
    pop.n = static_cast<int>(population_n);
    pop.k_post = 0;
    SimulatedPanel sim = simulate(pop, seed);
    const long n = population_n;
    const int p = spec.t0;

    Eigen::MatrixXd X(n, p + 1);
    X.col(0).setOnes();
    X.rightCols(p) = sim.panel.pre_block();
    Eigen::VectorXd coef =
        (X.transpose() * X).ldlt().solve(X.transpose() * sim.mu);
    double err2 = (sim.mu - X * coef).squaredNorm() / static_cast<double>(n);

    EffectivePeriods out;
    out.method = TeMethod::MonteCarloProjection;
    out.approx_error2 = err2;
    out.t_e = err2 > 0.0 ? 1.0 / err2 : std::numeric_limits<double>::infinity();
    return out;
}

namespace {

// Minimize mean(pi exp(f - theta)) - mean(pi f) + ridge penalty over
// f = X c by reusing the balancer's Newton core with multiplier weights
// w_exp = pi e^{-theta} = 1 - pi (logistic identity), w_lin = pi.
DualCore pi_weighted_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& pi,
                         const Eigen::VectorXd& ridge, const SolverOptions& opts) {
    Eigen::ArrayXd w_exp = 1.0 - pi.array();
    Eigen::ArrayXd w_lin = pi.array();
    Eigen::VectorXd init = Eigen::VectorXd::Zero(X.cols());
    DualCore core = dual_newton(X, w_exp, w_lin, ridge, std::move(init), opts);
    if (!core.converged)
        throw ConvergenceError("population projection did not converge", BalanceSolution{});
    return core;
}

}  // namespace

Eigen::VectorXd PopulationFit::eval_theta_tilde(const Eigen::MatrixXd& phi) const {
    return (phi * theta_tilde.tail(phi.cols())).array() + theta_tilde[0];
}

Eigen::VectorXd PopulationFit::eval_theta_tilde_mu(const Eigen::MatrixXd& phi,
                                                   const Eigen::VectorXd& mu) const {
    return (phi * theta_tilde_mu.tail(phi.cols()) + beta_mu * mu).array() + theta_tilde_mu[0];
}

Eigen::VectorXd PopulationFit::eval_mu_tilde(const Eigen::MatrixXd& phi) const {
    return (phi * mu_tilde.tail(phi.cols())).array() + mu_tilde[0];
}

PopulationFit fit_population_objects(const DgpSpec& spec, double zeta, long n_experiment,
                                     long population_n, std::uint64_t seed,
                                     const SolverOptions& opts) {
    if (population_n < 1000) throw RangeError("population_n too small for a stable fit");
    if (n_experiment < 1) throw RangeError("n_experiment must be >= 1");

    DgpSpec pop = spec;
    pop.n = static_cast<int>(population_n);
    pop.k_post = 0;
    SimulatedPanel sim = simulate(pop, seed);

    const long N = population_n;
    const int p = spec.t0;
    const Eigen::MatrixXd phi = sim.panel.pre_block();
    const Eigen::VectorXd& pi = sim.pi;
    const Eigen::VectorXd& theta = sim.theta;
    const Eigen::VectorXd& mu = sim.mu;
    const double e_pi = pi.mean();
    const double ridge_coef = e_pi * zeta * zeta / static_cast<double>(n_experiment);

    PopulationFit fit;
    fit.e_pi = e_pi;
    fit.sample_size = N;
    fit.zeta = zeta;
    fit.n_experiment = n_experiment;

    // The exponential reweighting by e^{-theta} is folded into the Newton
    // weights, so fitted coefficients solve E[pi exp(f - theta) x] = E[pi x].
    // theta_tilde over span{1, F}
    {
        Eigen::MatrixXd X(N, 1 + p);
        X.col(0).setOnes();
        X.rightCols(p) = phi;
        Eigen::VectorXd ridge = Eigen::VectorXd::Zero(1 + p);
        ridge.tail(p).setConstant(ridge_coef);
        DualCore core = pi_weighted_fit(X, pi, ridge, opts);
        fit.theta_tilde = core.coef;
        fit.foc_max_abs = std::max(fit.foc_max_abs, core.grad_max);
    }
    // theta_tilde_mu over span{1, F, mu}; the mu coefficient is unpenalized
    {
        Eigen::MatrixXd X(N, 2 + p);
        X.col(0).setOnes();
        X.middleCols(1, p) = phi;
        X.col(1 + p) = mu;
        Eigen::VectorXd ridge = Eigen::VectorXd::Zero(2 + p);
        ridge.segment(1, p).setConstant(ridge_coef);
        DualCore core = pi_weighted_fit(X, pi, ridge, opts);
        fit.theta_tilde_mu = core.coef.head(1 + p);
        fit.beta_mu = core.coef[1 + p];
        fit.foc_max_abs = std::max(fit.foc_max_abs, core.grad_max);
    }

    Eigen::VectorXd th_t = fit.eval_theta_tilde(phi);
    Eigen::VectorXd th_tm = fit.eval_theta_tilde_mu(phi, mu);
    Eigen::ArrayXd tilt = (th_tm - theta).array().exp();
    Eigen::ArrayXd w = pi.array() * tilt;  // pi exp(theta_tilde_mu - theta)

    // mu_tilde: weighted least squares of mu on [1, phi] under the tilt
    {
        Eigen::MatrixXd X(N, 1 + p);
        X.col(0).setOnes();
        X.rightCols(p) = phi;
        Eigen::MatrixXd Xw = w.matrix().asDiagonal() * X;
        Eigen::VectorXd coef =
            (X.transpose() * Xw).ldlt().solve(Xw.transpose() * mu);
        fit.mu_tilde = coef;
        Eigen::VectorXd resid_foc =
            Xw.transpose() * (mu - X * coef) / static_cast<double>(N);
        fit.foc_max_abs =
            std::max(fit.foc_max_abs, resid_foc.lpNorm<Eigen::Infinity>());
    }

    Eigen::VectorXd mu_t = fit.eval_mu_tilde(phi);
    Eigen::ArrayXd u = tilt - 1.0;
    fit.u_mean = (pi.array() * u).mean() / e_pi;
    fit.u_sq_mean = u.square().mean();

    // bias plug-in, oriented so that tau_hat - tau = bias + noise + remainder
    fit.bias = (w * (th_tm - th_t).array() * (mu - mu_t).array()).mean() / e_pi;
    return fit;
}

NoiseTerms oracle_noise_terms(const SimulatedPanel& sim, const PopulationFit& fit) {
    const Eigen::MatrixXd phi = sim.panel.pre_block();
    const Eigen::ArrayXd& D = sim.panel.treated();
    const Eigen::ArrayXd pi = sim.pi.array();

    Eigen::ArrayXd eps = sim.y0_post.col(0).array() - sim.mu.array();
    Eigen::VectorXd th_tm = fit.eval_theta_tilde_mu(phi, sim.mu);
    Eigen::ArrayXd u = (th_tm.array() - sim.theta.array()).exp() - 1.0;

    NoiseTerms out;
    out.term1 =
        ((D - pi) / (1.0 - pi) * (pi * u + 1.0) / fit.e_pi * eps).mean();
    out.term2 = (pi * u / fit.e_pi * eps).mean();
    return out;
}

double oracle_bias_on_sample(const SimulatedPanel& sim, const PopulationFit& fit) {
    const Eigen::MatrixXd phi = sim.panel.pre_block();
    Eigen::VectorXd th_t = fit.eval_theta_tilde(phi);
    Eigen::VectorXd th_tm = fit.eval_theta_tilde_mu(phi, sim.mu);
    Eigen::VectorXd mu_t = fit.eval_mu_tilde(phi);
    Eigen::ArrayXd w = sim.pi.array() * (th_tm - sim.theta).array().exp();
    return (w * (th_tm - th_t).array() * (sim.mu - mu_t).array()).mean() / fit.e_pi;
}

}  // namespace scm
