#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "scm/panel.hpp"

#include "json.hpp"

namespace scm {

// n x p matrix of balancing features phi(X_i), built from pretreatment
// data only. The l2 ball over the coefficients of these columns is the
// functional class the balancer works with.
struct FeatureMatrix {
    Eigen::MatrixXd values;            // n x p
    std::vector<std::string> names;    // length p
    bool standardized = false;
    Eigen::VectorXd centers;           // length p, zeros when raw
    Eigen::VectorXd scales;            // length p, ones when raw
    std::vector<std::uint8_t> zero_variance;  // flagged, never dropped
    int degenerate_units = 0;          // autocorrelation fallback counter

    int n() const { return static_cast<int>(values.rows()); }
    int p() const { return static_cast<int>(values.cols()); }
};

// Column t = Y_{i,t} for t = 1..t0; never reads post-treatment columns.
FeatureMatrix lagged_levels(const PanelDataset& data);

// Lag-1 sample autocorrelation of one series; sets *degenerate and returns 0
// when the (demeaned) sum of squares falls below 1e-12.
double lag1_autocorrelation(const Eigen::VectorXd& series, bool demean,
                            bool* degenerate = nullptr);

// Single column of per-unit lag-1 autocorrelations of (Y_{i,1..end_period}).
// demean=true removes the unit mean first (standard sample autocorrelation).
// Units with variance below 1e-12 get 0 and bump degenerate_units.
FeatureMatrix unit_autocorrelation(const PanelDataset& data, int end_period,
                                   bool demean = true);

FeatureMatrix concat(const std::vector<FeatureMatrix>& parts);

// Center/scale each column to mean 0, variance 1; zero-variance columns are
// centered only and flagged. Produces a different estimator than the raw
// default, so callers opt in explicitly.
FeatureMatrix standardize(const FeatureMatrix& f);

// Recipe-driven construction, e.g.
//   [{"kind":"lags"}, {"kind":"autocorr","end":8}]
// An optional {"kind":"standardize"} item standardizes the assembled matrix.
FeatureMatrix build_features(const PanelDataset& data, const nlohmann::json& recipe);

}  // namespace scm
