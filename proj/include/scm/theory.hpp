#pragma once

#include <cstdint>

#include "scm/balancer.hpp"
#include "scm/dgp.hpp"

namespace scm {

enum class TeMethod { ClosedFormTwoWay, SvdBound, MonteCarloProjection };

// Effective number of periods: reciprocal of the best squared approximation
// error of the conditional mean by span{1, features}.
struct EffectivePeriods {
    double t_e = 0.0;
    double approx_error2 = 0.0;  // t_e * approx_error2 == 1
    TeMethod method = TeMethod::ClosedFormTwoWay;
};

// Two-way closed form: 1/T_e = sigma^2 V[eta] / (V[eta] t0 + sigma^2).
EffectivePeriods effective_periods_two_way(double v_eta, double sigma2, int t0);

// Ridge-regression bound through the SVD of the factor matrix:
// approx_error^2 = sigma_op * sum_j xi_j^2 / (sigma(j)^2 + sigma_op) with
// xi = U' psi_next. A zero factor matrix yields |psi_next|^2, not an error.
EffectivePeriods effective_periods_svd(const Eigen::MatrixXd& psi,
                                       const Eigen::VectorXd& psi_next, double sigma_op);

// Monte Carlo counterpart: least-squares projection of the latent mu on
// span{1, lagged levels} over a simulated population.
EffectivePeriods effective_periods_projection(const DgpSpec& spec, long population_n,
                                              std::uint64_t seed);

// Population projections behind the bias decomposition, realized on a
// large synthetic population: theta_tilde over span{1,F}, theta_tilde_mu over span{1,F,mu}
// (mu coefficient unpenalized), mu_tilde by tilted weighted least squares,
// plus the plug-in bias and the u-residual moments.
struct PopulationFit {
    Eigen::VectorXd theta_tilde;     // intercept + p coefficients
    Eigen::VectorXd theta_tilde_mu;  // intercept + p coefficients (F part)
    double beta_mu = 0.0;            // separated mu coefficient
    Eigen::VectorXd mu_tilde;        // intercept + p coefficients
    double e_pi = 0.0;               // population mean of pi
    double bias = 0.0;               // bias plug-in on the population sample
    double u_mean = 0.0;             // E[pi u] / E[pi]
    double u_sq_mean = 0.0;          // E[u^2]
    double foc_max_abs = 0.0;        // largest FOC residual across the three fits
    long sample_size = 0;
    double zeta = 0.0;
    long n_experiment = 0;

    // Evaluate the fitted functions at feature rows / latent mu.
    Eigen::VectorXd eval_theta_tilde(const Eigen::MatrixXd& phi) const;
    Eigen::VectorXd eval_theta_tilde_mu(const Eigen::MatrixXd& phi,
                                        const Eigen::VectorXd& mu) const;
    Eigen::VectorXd eval_mu_tilde(const Eigen::MatrixXd& phi) const;
};

// The ridge inside the population objectives is zeta^2/(2 n_experiment) with
// the experiment's sample size, not the oracle population size.
PopulationFit fit_population_objects(const DgpSpec& spec, double zeta, long n_experiment,
                                     long population_n, std::uint64_t seed,
                                     const SolverOptions& opts = {});

struct NoiseTerms {
    double term1 = 0.0;  // Pn (D-pi)/(1-pi) (pi u + 1)/E[pi] eps
    double term2 = 0.0;  // Pn pi u / E[pi] eps
    double total() const { return term1 + term2; }
};

// Evaluate the two oracle noise averages on a realized sample using
// the population fit; eps_i = Y_i(0) at t0+1 minus the latent mu_i.
NoiseTerms oracle_noise_terms(const SimulatedPanel& sim, const PopulationFit& fit);

// Bias plug-in evaluated on the realized sample (Pn over its units).
double oracle_bias_on_sample(const SimulatedPanel& sim, const PopulationFit& fit);

}  // namespace scm
