#include "scm/balancer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace scm {

namespace {

constexpr double kExpClamp = 700.0;  // beyond this exp(theta) overflows

void check_exponents(const Eigen::ArrayXd& theta, const Eigen::ArrayXd& treated) {
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        if (treated[i] == 0.0 && std::abs(theta[i]) > kExpClamp)
            throw OverflowError(
                "dual exponent exceeded 700; treated and control features appear "
                "separated (no overlap)");
    }
}

}  // namespace

DualCore dual_newton(const Eigen::MatrixXd& X, const Eigen::ArrayXd& w_exp,
                     const Eigen::ArrayXd& w_lin, const Eigen::VectorXd& ridge,
                     Eigen::VectorXd init, const SolverOptions& opts) {
    const double n = static_cast<double>(X.rows());
    const Eigen::Index q = X.cols();
    Eigen::VectorXd coef = std::move(init);

    auto objective = [&](const Eigen::VectorXd& c) {
        Eigen::ArrayXd f = (X * c).array();
        double val = 0.0;
        for (Eigen::Index i = 0; i < f.size(); ++i) {
            if (w_exp[i] != 0.0) {
                if (f[i] > kExpClamp) return std::numeric_limits<double>::infinity();
                val += w_exp[i] * std::exp(f[i]);
            }
            val -= w_lin[i] * f[i];
        }
        val /= n;
        val += 0.5 * c.dot(ridge.asDiagonal() * c);
        return val;
    };

    DualCore out;
    double fcur = objective(coef);
    Eigen::VectorXd grad(q), step(q);
    Eigen::MatrixXd H(q, q);
    int it = 0;
    for (; it < opts.max_iter; ++it) {
        Eigen::ArrayXd f = (X * coef).array();
        Eigen::ArrayXd we = w_exp * f.min(kExpClamp).exp();
        grad = X.transpose() * (we - w_lin).matrix() / n + ridge.asDiagonal() * coef;
        out.grad_max = grad.lpNorm<Eigen::Infinity>();
        if (out.grad_max <= opts.tol) {
            out.converged = true;
            break;
        }
        H = X.transpose() * we.matrix().asDiagonal() * X / n;
        H += Eigen::MatrixXd(ridge.asDiagonal());
        Eigen::LLT<Eigen::MatrixXd> llt(H);
        if (llt.info() != Eigen::Success) {
            // rank-deficient curvature (e.g. zero-variance feature with zeta=0)
            H.diagonal().array() += 1e-10 * H.trace();
            llt.compute(H);
            if (llt.info() != Eigen::Success)
                break;
        }
        step = llt.solve(grad);
        double slope = grad.dot(step);
        if (slope <= 1e-12) {
            // quadratic regime: the predicted decrease is below objective
            // rounding noise, so backtracking would only see float dust
            coef -= step;
            fcur = objective(coef);
            continue;
        }
        double t = 1.0;
        double fnext = 0.0;
        while (true) {
            fnext = objective(coef - t * step);
            if (fnext <= fcur - 1e-4 * t * slope) break;
            t *= 0.5;
            if (t < 1e-14) { fnext = fcur; t = 0.0; break; }
        }
        if (t == 0.0) break;  // no descent possible at working precision
        coef -= t * step;
        fcur = fnext;
    }
    out.coef = std::move(coef);
    out.iterations = it;
    return out;
}

BalanceSolution solve_dual(const FeatureMatrix& features, const Eigen::ArrayXd& treated,
                           double zeta, const SolverOptions& opts) {
    const int n = static_cast<int>(treated.size());
    const int p = features.p();
    if (features.n() != 0 && features.n() != n)
        throw ShapeError("features and treated vector disagree on n");
    if (p > 0 && !features.values.allFinite())
        throw ParseError("non-finite feature value");
    if (zeta < 0.0) throw RangeError("zeta must be >= 0");

    const double n1 = treated.sum();
    if (n1 == 0.0) throw BalanceError("no treated units");
    if (n1 == n) throw BalanceError("no control units");
    const double pi_bar = n1 / n;
    const double ridge = pi_bar * zeta * zeta / n;
    const Eigen::MatrixXd& phi = features.values;

    // Damped Newton on beta with the intercept profiled out: for fixed beta
    // the optimal alpha is log(pi_bar) - log(Pn (1-D) exp(phi'beta)), which
    // makes Pn w(1-D) = 1 hold exactly at every iterate. Initialization
    // beta = 0 is the uniform-weights start alpha = log(pi_bar/(1-pi_bar)).
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd treated_mean =
        p > 0 ? Eigen::VectorXd(phi.transpose() * (treated / pi_bar).matrix() / n)
              : Eigen::VectorXd(0);

    double alpha = 0.0;
    Eigen::ArrayXd omega(n);  // normalized weights: Pn omega(1-D) = 1, 0 on treated
    auto refresh = [&](const Eigen::VectorXd& b) {
        Eigen::ArrayXd lin =
            p > 0 ? Eigen::ArrayXd((phi * b).array()) : Eigen::ArrayXd(Eigen::ArrayXd::Zero(n));
        double shift = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i)
            if (treated[i] == 0.0) shift = std::max(shift, lin[i]);
        // clamp at 0 so treated rows cannot produce inf * 0; controls are
        // <= shift by construction and pass through unchanged
        Eigen::ArrayXd ez = (lin - shift).min(0.0).exp();
        double s = ((1.0 - treated) * ez).sum() / n;  // S / e^shift
        alpha = std::log(pi_bar) - shift - std::log(s);
        omega = (1.0 - treated) * ez / s;  // = e^lin / S
        // profiled objective, up to a beta-independent constant
        double lin_part = p > 0 ? (treated * lin).sum() / n : 0.0;
        return pi_bar * (shift + std::log(s)) - lin_part + 0.5 * ridge * b.squaredNorm();
    };

    double fcur = refresh(beta);
    Eigen::VectorXd grad(p), step(p), wmean(p);
    double grad_max = 0.0;
    int it = 0;
    bool converged = false;
    for (;; ++it) {
        // gradient = pi_bar * imbalance + ridge * beta
        if (p > 0) {
            wmean = phi.transpose() * omega.matrix() / n;
            grad = pi_bar * (wmean - treated_mean) + ridge * beta;
            grad_max = grad.lpNorm<Eigen::Infinity>();
        } else {
            grad_max = 0.0;
        }
        if (grad_max <= opts.tol) {
            converged = true;
            break;
        }
        if (it >= opts.max_iter) break;

        // Hessian = pi_bar * (weighted second moment - wmean wmean') + ridge I
        Eigen::MatrixXd H =
            pi_bar * (Eigen::MatrixXd(phi.transpose() * omega.matrix().asDiagonal() * phi / n) -
                      wmean * wmean.transpose());
        H.diagonal().array() += ridge;
        Eigen::LLT<Eigen::MatrixXd> llt(H);
        if (llt.info() != Eigen::Success) {
            H.diagonal().array() += 1e-10 * H.trace();
            llt.compute(H);
            if (llt.info() != Eigen::Success) break;
        }
        step = llt.solve(grad);
        double slope = grad.dot(step);
        if (slope <= 1e-12) {
            beta -= step;  // quadratic regime, see dual_newton
            fcur = refresh(beta);
            continue;
        }
        double t = 1.0;
        Eigen::VectorXd beta_next;
        double fnext = fcur;
        while (true) {
            beta_next = beta - t * step;
            fnext = refresh(beta_next);
            if (fnext <= fcur - 1e-4 * t * slope) break;
            t *= 0.5;
            if (t < 1e-14) { t = 0.0; break; }
        }
        if (t == 0.0) { refresh(beta); break; }
        beta = beta_next;
        fcur = fnext;
    }

    Eigen::ArrayXd theta =
        p > 0 ? Eigen::ArrayXd((phi * beta).array() + alpha) : Eigen::ArrayXd::Constant(n, alpha);
    check_exponents(theta, treated);

    BalanceSolution sol;
    sol.alpha = alpha;
    sol.beta = beta;
    sol.zeta = zeta;
    sol.kkt_residual = grad_max;
    sol.iterations = it;
    sol.converged = converged;
    sol.weights = omega.matrix();
    if (p > 0) {
        sol.imbalance = phi.transpose() * omega.matrix() / n - treated_mean;
    } else {
        sol.imbalance.resize(0);
    }

    if (!sol.converged)
        throw ConvergenceError("dual Newton did not reach tolerance " +
                                   std::to_string(opts.tol) + " in " +
                                   std::to_string(opts.max_iter) + " iterations",
                               sol);
    return sol;
}

double primal_objective(const FeatureMatrix& features, const Eigen::ArrayXd& treated,
                        double zeta, const Eigen::VectorXd& weights) {
    const double n = static_cast<double>(treated.size());
    double entropy = 0.0;
    for (Eigen::Index i = 0; i < treated.size(); ++i) {
        if (treated[i] == 0.0 && weights[i] > 0.0)
            entropy += weights[i] * std::log(weights[i]);
    }
    entropy /= n;
    Eigen::VectorXd v;
    if (features.p() > 0) {
        Eigen::VectorXd control_mean =
            features.values.transpose() * ((1.0 - treated) * weights.array()).matrix() / n;
        Eigen::VectorXd treated_mean =
            features.values.transpose() * (treated / treated.mean()).matrix() / n;
        v = control_mean - treated_mean;
    } else {
        v.resize(0);
    }
    return zeta * zeta / n * entropy + 0.5 * v.squaredNorm();
}

BalanceSolution solve_primal_reference(const FeatureMatrix& features,
                                       const Eigen::ArrayXd& treated, double zeta,
                                       const PrimalOptions& opts) {
    const int n = static_cast<int>(treated.size());
    if (n > 200) throw RangeError("primal reference solver capped at n <= 200");
    const double n1 = treated.sum();
    if (n1 == 0.0 || n1 == n) throw BalanceError("need both treated and control units");
    const double pi_bar = n1 / n;
    const int p = features.p();

    std::vector<int> controls;
    for (int i = 0; i < n; ++i)
        if (treated[i] == 0.0) controls.push_back(i);
    const int m = static_cast<int>(controls.size());

    Eigen::MatrixXd phi_c(m, p);
    for (int j = 0; j < m; ++j) phi_c.row(j) = features.values.row(controls[j]);
    Eigen::VectorXd treated_mean = Eigen::VectorXd::Zero(p);
    if (p > 0)
        treated_mean = features.values.transpose() * (treated / pi_bar).matrix() / n;

    // entropy coefficient; a small floor keeps zeta = 0 runs strictly convex
    double ent = zeta * zeta / n;
    if (ent == 0.0) ent = opts.entropy_floor;

    Eigen::VectorXd w = Eigen::VectorXd::Constant(m, static_cast<double>(n) / m);
    auto objective = [&](const Eigen::VectorXd& omega) {
        double e = 0.0;
        for (int j = 0; j < m; ++j)
            if (omega[j] > 0.0) e += omega[j] * std::log(omega[j]);
        e /= n;
        if (p == 0) return ent * e;
        Eigen::VectorXd v = phi_c.transpose() * omega / n - treated_mean;
        return ent * e + 0.5 * v.squaredNorm();
    };

    // First-order descent in the simplex's natural (entropy) geometry:
    // multiplicative trial steps w_j exp(-eta g_j) rescaled back onto the
    // feasible set, with backtracking on eta and relaxation after accepted
    // moves. Euclidean steps cannot cross the many decades the optimal
    // weights span; multiplicative ones can.
    Eigen::VectorXd best = w;
    double fbest = objective(w);
    double fcur = fbest;
    const double wfloor = 1e-12;
    double eta = opts.step0;
    Eigen::VectorXd grad(m), trial(m);
    for (int t = 1; t <= opts.max_iter; ++t) {
        for (int j = 0; j < m; ++j)
            grad[j] = ent / n * (std::log(std::max(w[j], wfloor)) + 1.0);
        if (p > 0) {
            Eigen::VectorXd v = phi_c.transpose() * w / n - treated_mean;
            grad.noalias() += phi_c * v / n;
        }
        double ftrial = fcur;
        bool accepted = false;
        for (int halving = 0; halving < 60 && !accepted; ++halving) {
            double shift = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < m; ++j) shift = std::max(shift, -eta * grad[j]);
            double total = 0.0;
            for (int j = 0; j < m; ++j) {
                trial[j] = std::max(w[j], wfloor) * std::exp(-eta * grad[j] - shift);
                total += trial[j];
            }
            trial *= static_cast<double>(n) / total;  // feasibility projection
            ftrial = objective(trial);
            if (ftrial < fcur) {
                accepted = true;
            } else {
                eta *= 0.5;
            }
        }
        if (!accepted) {
            if (eta < 1e-18) break;  // stationary at working precision
            continue;
        }
        w = trial;
        fcur = ftrial;
        if (fcur < fbest) {
            fbest = fcur;
            best = w;
        }
        eta = std::min(eta * 2.0, 1e4);
    }

    BalanceSolution sol;
    sol.zeta = zeta;
    sol.converged = true;
    sol.iterations = opts.max_iter;
    sol.weights = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < m; ++j) sol.weights[controls[j]] = best[j];
    sol.alpha = std::numeric_limits<double>::quiet_NaN();  // primal has no dual coefs
    sol.beta = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
    if (p > 0) {
        sol.imbalance = phi_c.transpose() * best / n - treated_mean;
        sol.kkt_residual = sol.imbalance.lpNorm<Eigen::Infinity>();
    } else {
        sol.imbalance.resize(0);
        sol.kkt_residual = 0.0;
    }
    return sol;
}

KktReport kkt_report(const BalanceSolution& solution, const FeatureMatrix& features,
                     const Eigen::ArrayXd& treated) {
    const double n = static_cast<double>(treated.size());
    const double pi_bar = treated.mean();
    const int p = features.p();

    // exp(theta_i) = pi_bar * w_i on controls by the dual representation
    Eigen::ArrayXd expth = pi_bar * solution.weights.array();
    Eigen::ArrayXd resid_vec = (1.0 - treated) * expth - treated;

    KktReport rep;
    rep.intercept_residual = resid_vec.sum() / n;
    rep.feature_residual.resize(p);
    for (int j = 0; j < p; ++j) {
        rep.feature_residual[j] =
            (resid_vec * features.values.col(j).array()).sum() / n +
            pi_bar * solution.zeta * solution.zeta / n * solution.beta[j];
    }
    rep.max_abs = std::abs(rep.intercept_residual);
    if (p > 0)
        rep.max_abs = std::max(rep.max_abs, rep.feature_residual.lpNorm<Eigen::Infinity>());
    return rep;
}

}  // namespace scm
