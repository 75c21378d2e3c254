#include "scm/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "scm/rng.hpp"
#include "scm/threads.hpp"

namespace scm {

namespace {

double percentile_nearest_rank(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size())));
    rank = std::max<std::size_t>(rank, 1);
    return v[std::min(rank, v.size()) - 1];
}

}  // namespace

BootstrapResult bootstrap_sc(const PanelDataset& data, const nlohmann::json& feature_recipe,
                             double zeta, const BootstrapOptions& opts) {
    if (opts.b_boot < 100) throw RangeError("b_boot must be >= 100");
    if (!(opts.level > 0.0 && opts.level < 1.0)) throw RangeError("level must be in (0,1)");

    const int n = data.n();
    {
        FeatureMatrix phi = build_features(data, feature_recipe);
        BalanceSolution w = solve_dual(phi, data.treated(), zeta);
        EventStudyResult path = sc_effect_path(data, w);
        BootstrapResult out;
        out.point = path.at(opts.horizon);
        out.b_boot = opts.b_boot;

        std::vector<int> treated_idx, control_idx;
        for (int i = 0; i < n; ++i)
            (data.treated()[i] == 1.0 ? treated_idx : control_idx).push_back(i);

        std::vector<double> stats(opts.b_boot, std::numeric_limits<double>::quiet_NaN());
        std::atomic<int> skipped{0};

        parallel_for(opts.b_boot, opts.threads, [&](int b) {
            const std::uint64_t s = opts.seed ^ static_cast<std::uint64_t>(b);
            std::vector<int> idx(n);
            if (opts.stratified) {
                const auto nt = treated_idx.size(), nc = control_idx.size();
                for (std::size_t j = 0; j < nt; ++j)
                    idx[j] = treated_idx[rng::below(s, rng::kBootstrap, 0, j, nt)];
                for (std::size_t j = 0; j < nc; ++j)
                    idx[nt + j] = control_idx[rng::below(s, rng::kBootstrap, 1, j, nc)];
            } else {
                for (int j = 0; j < n; ++j)
                    idx[j] = static_cast<int>(rng::below(s, rng::kBootstrap, 0, j, n));
            }
            double n1 = 0;
            for (int i : idx) n1 += data.treated()[i];
            if (n1 == 0 || n1 == n) {
                skipped.fetch_add(1);
                return;
            }
            Eigen::MatrixXd Y(n, data.periods());
            Eigen::ArrayXd D(n);
            for (int j = 0; j < n; ++j) {
                Y.row(j) = data.outcomes().row(idx[j]);
                D[j] = data.treated()[idx[j]];
            }
            PanelDataset resampled = PanelDataset::create(std::move(Y), std::move(D), data.t0());
            try {
                FeatureMatrix phi_b = build_features(resampled, feature_recipe);
                BalanceSolution w_b = solve_dual(phi_b, resampled.treated(), zeta);
                stats[b] = sc_effect_path(resampled, w_b).at(opts.horizon);
            } catch (const ScmError&) {
                skipped.fetch_add(1);
            }
        });

        out.skipped = skipped.load();
        if (out.skipped > opts.b_boot / 5)
            throw DegenerateDesignError("more than 20% of bootstrap replicates degenerate");
        out.skip_warning = out.skipped * 20 >= opts.b_boot;

        std::vector<double> kept;
        kept.reserve(stats.size());
        for (double v : stats)
            if (std::isfinite(v)) kept.push_back(v);

        double mean = 0.0;
        for (double v : kept) mean += v;
        mean /= static_cast<double>(kept.size());
        double var = 0.0;
        for (double v : kept) var += (v - mean) * (v - mean);
        var = kept.size() > 1 ? var / static_cast<double>(kept.size() - 1) : 0.0;
        out.se = std::sqrt(var);

        const double tail = (1.0 - opts.level) / 2.0;
        if (opts.normal_ci) {
            // two-sided normal quantile via Acklam-style inverse is overkill;
            // the fixed 90/95/99 levels cover CLI usage
            double z = 1.6448536269514722;
            if (std::abs(opts.level - 0.95) < 1e-12) z = 1.959963984540054;
            if (std::abs(opts.level - 0.99) < 1e-12) z = 2.5758293035489004;
            out.ci_low = out.point - z * out.se;
            out.ci_high = out.point + z * out.se;
        } else {
            out.ci_low = percentile_nearest_rank(kept, tail);
            out.ci_high = percentile_nearest_rank(kept, 1.0 - tail);
        }
        return out;
    }
}

double plugin_variance_van(const PanelDataset& data, const Eigen::VectorXd& treated_residuals) {
    const int n1 = data.n_treated();
    if (n1 == 0) throw EmptyCohortError("no treated units");
    if (treated_residuals.size() != n1)
        throw ShapeError("expected one residual per treated unit");
    double mean_sq = treated_residuals.squaredNorm() / n1;
    return mean_sq / (data.pi_bar() * data.n());
}

double plugin_variance_as(const Eigen::VectorXd& residual_variances, const Eigen::VectorXd& pi,
                          const Eigen::ArrayXd& treated) {
    const auto n = treated.size();
    if (residual_variances.size() != n || pi.size() != n)
        throw ShapeError("inputs must align with the panel");
    double acc = 0.0;
    double n1 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (treated[i] == 1.0) {
            acc += residual_variances[i] / (1.0 - pi[i]);
            n1 += 1.0;
        }
    }
    if (n1 == 0.0) throw EmptyCohortError("no treated units");
    double sigma2_as = acc / n1;
    return sigma2_as / ((n1 / static_cast<double>(n)) * static_cast<double>(n));
}

}  // namespace scm
