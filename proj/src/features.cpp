#include "scm/features.hpp"

#include <cmath>
#include <unordered_set>

namespace scm {

FeatureMatrix lagged_levels(const PanelDataset& data) {
    FeatureMatrix f;
    f.values = data.pre_block();
    f.names.reserve(data.t0());
    for (int t = 1; t <= data.t0(); ++t) f.names.push_back("lag_level_" + std::to_string(t));
    f.centers = Eigen::VectorXd::Zero(f.p());
    f.scales = Eigen::VectorXd::Ones(f.p());
    f.zero_variance.assign(f.p(), 0);
    return f;
}

double lag1_autocorrelation(const Eigen::VectorXd& series, bool demean, bool* degenerate) {
    const auto len = series.size();
    Eigen::VectorXd z = series;
    if (demean) z.array() -= series.mean();
    double den = z.squaredNorm();
    if (degenerate) *degenerate = false;
    if (den < 1e-12) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    double num = z.head(len - 1).dot(z.tail(len - 1));
    return num / den;
}

FeatureMatrix unit_autocorrelation(const PanelDataset& data, int end_period, bool demean) {
    if (end_period > data.t0() || end_period < 3)
        throw RangeError("autocorrelation end_period must be in [3, t0]");
    FeatureMatrix f;
    f.values.resize(data.n(), 1);
    f.names = {"autocorr_" + std::to_string(end_period)};
    for (int i = 0; i < data.n(); ++i) {
        bool degen = false;
        f.values(i, 0) = lag1_autocorrelation(
            data.outcomes().row(i).head(end_period).transpose(), demean, &degen);
        if (degen) ++f.degenerate_units;
    }
    f.centers = Eigen::VectorXd::Zero(1);
    f.scales = Eigen::VectorXd::Ones(1);
    f.zero_variance.assign(1, 0);
    return f;
}

FeatureMatrix concat(const std::vector<FeatureMatrix>& parts) {
    if (parts.empty()) throw ShapeError("concat of zero feature matrices");
    const int n = parts.front().n();
    int p = 0;
    for (const auto& part : parts) {
        if (part.n() != n) throw ShapeError("concat: feature matrices differ in n");
        p += part.p();
    }
    FeatureMatrix out;
    out.values.resize(n, p);
    out.centers.resize(p);
    out.scales.resize(p);
    out.zero_variance.reserve(p);
    std::unordered_set<std::string> used;
    int col = 0;
    for (const auto& part : parts) {
        out.values.middleCols(col, part.p()) = part.values;
        out.centers.segment(col, part.p()) = part.centers;
        out.scales.segment(col, part.p()) = part.scales;
        out.zero_variance.insert(out.zero_variance.end(), part.zero_variance.begin(),
                                 part.zero_variance.end());
        out.degenerate_units += part.degenerate_units;
        for (const auto& name : part.names) {
            std::string candidate = name;
            int suffix = 2;
            while (!used.insert(candidate).second)
                candidate = name + "_" + std::to_string(suffix++);
            out.names.push_back(candidate);
        }
        col += part.p();
    }
    return out;
}

FeatureMatrix standardize(const FeatureMatrix& f) {
    FeatureMatrix out = f;
    out.standardized = true;
    const double n = f.n();
    for (int j = 0; j < f.p(); ++j) {
        double mean = f.values.col(j).mean();
        double var = (f.values.col(j).array() - mean).square().sum() / (n - 1.0);
        out.centers[j] = mean;
        out.values.col(j).array() -= mean;
        if (var < 1e-12) {
            out.zero_variance[j] = 1;
            out.scales[j] = 1.0;
        } else {
            out.scales[j] = std::sqrt(var);
            out.values.col(j) /= out.scales[j];
        }
    }
    return out;
}

FeatureMatrix build_features(const PanelDataset& data, const nlohmann::json& recipe) {
    if (!recipe.is_array() || recipe.empty())
        throw ParseError("feature recipe must be a non-empty array");
    std::vector<FeatureMatrix> parts;
    bool want_standardize = false;
    for (const auto& item : recipe) {
        const std::string kind = item.at("kind").get<std::string>();
        if (kind == "lags") {
            parts.push_back(lagged_levels(data));
        } else if (kind == "autocorr") {
            int end = item.value("end", data.t0());
            parts.push_back(unit_autocorrelation(data, end, item.value("demean", true)));
        } else if (kind == "standardize") {
            want_standardize = true;  // applied to the assembled matrix
        } else {
            throw ParseError("unknown feature kind '" + kind + "'");
        }
    }
    if (parts.empty()) throw ParseError("feature recipe produced no columns");
    FeatureMatrix out = parts.size() == 1 ? std::move(parts.front()) : concat(parts);
    if (want_standardize) out = standardize(out);
    return out;
}

}  // namespace scm
