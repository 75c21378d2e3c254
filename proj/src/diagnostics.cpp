#include "scm/diagnostics.hpp"

namespace scm {

BalanceDiagnostic autocorr_imbalance(const PanelDataset& data,
                                     const BalanceSolution* weights, bool demean) {
    if (data.t0() < 3) throw RangeError("autocorrelation imbalance needs t0 >= 3");
    const int n = data.n();
    const Eigen::ArrayXd& D = data.treated();
    const double pi_bar = data.pi_bar();

    BalanceDiagnostic out;
    Eigen::ArrayXd rho(n);
    for (int i = 0; i < n; ++i) {
        bool degen = false;
        rho[i] = lag1_autocorrelation(
            data.outcomes().row(i).head(data.t0()).transpose(), demean, &degen);
        if (degen) ++out.n_degenerate;
    }

    Eigen::ArrayXd w;
    if (weights != nullptr) {
        if (weights->weights.size() != n) throw ShapeError("weights do not match panel");
        w = weights->weights.array();
        out.weight_kind = WeightKind::SC;
    } else {
        w = (1.0 - D) * (static_cast<double>(n) / (n - data.n_treated()));
        out.weight_kind = WeightKind::Uniform;
    }

    double treated_avg = (D / pi_bar * rho).mean();
    double control_avg = ((1.0 - D) * w * rho).mean();
    out.rho_hat = treated_avg - control_avg;
    return out;
}

EventStudyResult placebo_shift(const PanelDataset& data, EstimatorTag estimator,
                               double zeta, const SolverOptions& opts) {
    if (data.t0() < 4) throw RangeError("placebo shift needs t0 >= 4");
    const int t0 = data.t0();

    // keep periods 1..t0 only and move the adoption date to t0-1
    PanelDataset shifted = PanelDataset::create(data.outcomes().leftCols(t0),
                                                data.treated(), t0 - 2, data.unit_ids());

    EventStudyResult out;
    if (estimator == EstimatorTag::SC) {
        FeatureMatrix phi = lagged_levels(shifted);
        BalanceSolution w = solve_dual(phi, shifted.treated(), zeta, opts);
        EventStudyResult path = sc_effect_path(shifted, w);
        out.tag = EstimatorTag::SC;
        out.event_time = {0, 1};
        out.tau.resize(2);
        out.tau << path.at(0), path.at(1);
    } else {
        EventStudyResult path = twfe_event_study(shifted);
        out.tag = EstimatorTag::TWFE;
        out.event_time = {0, 1};
        out.tau.resize(2);
        out.tau << path.at(0), path.at(1);
    }
    out.normalization = "placebo adoption at period t0-1";
    return out;
}

}  // namespace scm
