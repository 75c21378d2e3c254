#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "scm/balancer.hpp"
#include "scm/panel.hpp"

namespace scm {

enum class EstimatorTag { SC, TWFE };

// Event-study coefficient path indexed by event time k = t - t0 - 1.
// Reported horizons run from -t0+1 to K; k = -1 is present for SC (the
// weighted pre-period contrast is defined there) and absent for TWFE,
// where it is the omitted category.
struct EventStudyResult {
    std::vector<int> event_time;
    Eigen::VectorXd tau;
    EstimatorTag tag = EstimatorTag::SC;
    std::string normalization;

    double at(int k) const;
    bool has(int k) const;
};

// Per-horizon treatment effect path, shared by the estimate CLI and the
// staggered estimator.
struct EstimateResult {
    std::vector<int> horizons;
    Eigen::VectorXd tau_hat;
    int n1 = 0;
    double pi_bar = 0.0;
    std::optional<BalanceSolution> weights;
};

// tau_hat(c) = Pn (D/pi_bar) Y_c - Pn w(1-D) Y_c for every period column c,
// reported at event times -t0+1..K.
EventStudyResult sc_effect_path(const PanelDataset& data, const BalanceSolution& weights);

// OLS event study with unit and period fixed effects plus treated x
// event-time dummies for every k != -1, solved by exact two-way
// within-demeaning followed by least squares on the demeaned dummies.
EventStudyResult twfe_event_study(const PanelDataset& data);

// Staggered adoption panel: adoption(i, t) = 1 once unit i is treated,
// nondecreasing along each row.
struct StaggeredPanel {
    Eigen::MatrixXd outcomes;   // n x T
    Eigen::MatrixXi adoption;   // n x T in {0,1}, nondecreasing per row

    int n() const { return static_cast<int>(outcomes.rows()); }
    int periods() const { return static_cast<int>(outcomes.cols()); }
    void validate() const;
};

// Contemporaneous effect for period-t adopters (t is 1-based): restrict to
// units untreated at t-1, treat adoption at t as D, balance on levels of
// periods 1..t-1, and evaluate the weighted contrast at period t.
EstimateResult staggered_tau_t(const StaggeredPanel& panel, int t, double zeta,
                               const SolverOptions& opts = {});

}  // namespace scm
