#pragma once

#include "scm/estimators.hpp"

namespace scm {

enum class WeightKind { Uniform, SC };

// Raw autocorrelation-imbalance statistic behind the balance table: the
// treated-vs-weighted-control gap in per-unit lag-1 autocorrelations over
// the t0 pretreatment periods. Normalization by the cross-simulation SD
// happens in the Monte Carlo aggregation, not here.
struct BalanceDiagnostic {
    double rho_hat = 0.0;
    WeightKind weight_kind = WeightKind::Uniform;
    int n_degenerate = 0;  // units with zero pretreatment variance
};

// weights == nullptr selects uniform control weights 1/#controls scaled so
// Pn w(1-D) = 1. demean toggles the per-unit centering of the series before
// the autocorrelation; raw (false) matches the balance-table convention.
BalanceDiagnostic autocorr_imbalance(const PanelDataset& data,
                                     const BalanceSolution* weights,
                                     bool demean = false);

// Shift the placebo adoption date to period t0-1: weights come from periods
// 1..t0-2 and the two placebo horizons are periods t0-1 and t0. The TWFE
// analog refits the event study on periods 1..t0 with the shifted date.
// Returned event times are 0 (period t0-1) and 1 (period t0).
EventStudyResult placebo_shift(const PanelDataset& data, EstimatorTag estimator,
                               double zeta, const SolverOptions& opts = {});

}  // namespace scm
