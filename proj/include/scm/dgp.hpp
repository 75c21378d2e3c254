#pragma once

#include <cstdint>
#include <vector>

#include "scm/panel.hpp"

#include "json.hpp"

namespace scm {

enum class DgpKind { TwoWayAR, TwoWayRW, Mixture, InteractiveFE };

// Full parameterization of a simulation design: outcome model, assignment
// model, and the linear treatment-effect path tau * (t - t0 - 1).
struct DgpSpec {
    DgpKind kind = DgpKind::TwoWayAR;
    int n = 400;
    int t0 = 8;
    int k_post = 5;
    double tau = 1.0;

    double sigma_eta2 = 1.0;
    double rho = 0.5;
    double sigma_ar2 = 1.0;
    double sigma_rw2 = 0.125;
    double beta_ar_t0 = 0.5;
    double beta_ar_t0m1 = 0.25;
    double beta_rw_t0 = 0.1;
    double sigma_nu2 = 0.25;
    std::vector<double> lambda_t;  // empty = all zero

    // interactive fixed effects: singular values sigma(j)^2 = t0 * j^-kappa,
    // f_dim factors, iid outcome noise with variance sigma_eps2
    double kappa = 4.0;
    int f_dim = 1;
    double sigma_eps2 = 1.0;

    void validate() const;
    nlohmann::json to_json() const;
    static DgpSpec from_json(const nlohmann::json& j);
};

// Simulated panel plus every latent quantity the oracle needs.
struct SimulatedPanel {
    PanelDataset panel;
    Eigen::MatrixXd eta;        // n x d unit heterogeneity (d = 1 for two-way)
    Eigen::MatrixXd eps;        // n x T time-varying errors
    Eigen::VectorXd theta;      // log-odds, inclusive of the nu_i noise
    Eigen::VectorXd pi;         // logistic(theta)
    Eigen::VectorXd nu;         // assignment misspecification draw
    Eigen::VectorXd mu;         // E[Y(0)_{t0+1} | eta, X]
    Eigen::MatrixXd y0_post;    // n x (k_post+1) untreated potential outcomes
    std::vector<std::uint8_t> component;  // mixture tag: 0 = AR, 1 = RW
};

// Deterministic in (spec, seed); per-cell draws are keyed by (unit, period),
// so growing n or k_post extends existing draws instead of reshuffling.
SimulatedPanel simulate(const DgpSpec& spec, std::uint64_t seed);
SimulatedPanel simulate_interactive(const DgpSpec& spec, std::uint64_t seed);

// Factor matrix construction shared with the theory module: d x t0 matrix
// with singular values sqrt(t0) * j^(-kappa/2) on random orthonormal bases,
// plus the next-period loading psi_{t0+1} with xi_j^2 = sigma^2(j)/t0.
struct FactorStructure {
    Eigen::MatrixXd psi;        // d x t0
    Eigen::VectorXd psi_next;   // d
    Eigen::MatrixXd u_basis;    // d x d left singular vectors
    Eigen::VectorXd sing;       // d singular values
};
FactorStructure build_factor_structure(int t0, int f_dim, double kappa, std::uint64_t seed);

}  // namespace scm
