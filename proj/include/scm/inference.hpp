#pragma once

#include <cstdint>

#include "scm/estimators.hpp"

#include "json.hpp"

namespace scm {

struct BootstrapResult {
    double point = 0.0;
    double se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int b_boot = 0;
    int skipped = 0;      // replicates with no treated or no control units
    bool skip_warning = false;  // skipped/b_boot >= 5%
};

struct BootstrapOptions {
    int b_boot = 1000;
    double level = 0.9;
    std::uint64_t seed = 0;  // mandatory; per-replicate stream is seed ^ replicate
    int horizon = 0;         // event time whose estimate is bootstrapped
    bool stratified = false; // resample treated and control pools separately
    bool normal_ci = false;  // point +- z se instead of percentile
    int threads = 0;         // 0 = hardware concurrency
};

// Unit-level iid bootstrap of the SC estimate: resample units with
// replacement, re-solve the weights, recompute the path. Percentile CI by
// default. Throws DegenerateDesignError when more than 20% of replicates
// have single-group resamples.
BootstrapResult bootstrap_sc(const PanelDataset& data, const nlohmann::json& feature_recipe,
                             double zeta, const BootstrapOptions& opts);

// Plug-in variance of tau_hat under the vanishing-share normal limit:
// mean of squared treated residuals divided by pi_bar * n.
double plugin_variance_van(const PanelDataset& data, const Eigen::VectorXd& treated_residuals);

// Plug-in variance under the constant-share limit: treated average of
// residual variances inflated by 1/(1-pi), divided by pi_bar * n. Latent
// inputs come from the oracle in simulations.
double plugin_variance_as(const Eigen::VectorXd& residual_variances, const Eigen::VectorXd& pi,
                          const Eigen::ArrayXd& treated);

}  // namespace scm
