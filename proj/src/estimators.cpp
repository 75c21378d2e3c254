#include "scm/estimators.hpp"

#include <algorithm>
#include <cmath>

namespace scm {

double EventStudyResult::at(int k) const {
    for (std::size_t i = 0; i < event_time.size(); ++i)
        if (event_time[i] == k) return tau[static_cast<Eigen::Index>(i)];
    throw RangeError("event time " + std::to_string(k) + " not in result");
}

bool EventStudyResult::has(int k) const {
    return std::find(event_time.begin(), event_time.end(), k) != event_time.end();
}

EventStudyResult sc_effect_path(const PanelDataset& data, const BalanceSolution& weights) {
    const int n = data.n();
    if (weights.weights.size() != n)
        throw ShapeError("weight vector does not match panel size");
    const double pi_bar = data.pi_bar();
    const Eigen::ArrayXd& D = data.treated();
    const Eigen::MatrixXd& Y = data.outcomes();

    Eigen::VectorXd treated_avg = Y.transpose() * (D / pi_bar).matrix() / n;
    Eigen::VectorXd control_avg =
        Y.transpose() * ((1.0 - D) * weights.weights.array()).matrix() / n;
    Eigen::VectorXd path = treated_avg - control_avg;  // per period column

    EventStudyResult out;
    out.tag = EstimatorTag::SC;
    out.normalization = "none (weighted contrast defined at every period)";
    for (int t = 2; t <= data.periods(); ++t) {  // report k = -t0+1 .. K
        out.event_time.push_back(t - data.t0() - 1);
    }
    out.tau.resize(static_cast<Eigen::Index>(out.event_time.size()));
    for (std::size_t i = 0; i < out.event_time.size(); ++i)
        out.tau[static_cast<Eigen::Index>(i)] = path[out.event_time[i] + data.t0()];
    return out;
}

namespace {

// Exact two-way demeaning for balanced panels, iterated until the sweep no
// longer moves anything (one pass suffices when the panel is balanced).
void demean_two_way(Eigen::MatrixXd& M) {
    const double tol = 1e-12;
    for (int pass = 0; pass < 64; ++pass) {
        double moved = 0.0;
        Eigen::VectorXd rmean = M.rowwise().mean();
        M.colwise() -= rmean;
        moved = std::max(moved, rmean.lpNorm<Eigen::Infinity>());
        Eigen::RowVectorXd cmean = M.colwise().mean();
        M.rowwise() -= cmean;
        moved = std::max(moved, cmean.lpNorm<Eigen::Infinity>());
        if (moved < tol) return;
    }
}

}  // namespace

EventStudyResult twfe_event_study(const PanelDataset& data) {
    const int n = data.n();
    const int T = data.periods();
    const int t0 = data.t0();
    const Eigen::ArrayXd& D = data.treated();

    Eigen::MatrixXd Ydd = data.outcomes();
    demean_two_way(Ydd);

    // dummies for every event time except k = -1 (period t0)
    std::vector<int> ks;
    for (int t = 1; t <= T; ++t)
        if (t != t0) ks.push_back(t - t0 - 1);
    const int q = static_cast<int>(ks.size());

    Eigen::MatrixXd G(q, q);
    Eigen::VectorXd b(q);
    std::vector<Eigen::MatrixXd> dummies(q);
    for (int j = 0; j < q; ++j) {
        Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, T);
        X.col(ks[j] + t0) = D.matrix();
        demean_two_way(X);
        dummies[j] = std::move(X);
    }
    for (int j = 0; j < q; ++j) {
        b[j] = (dummies[j].array() * Ydd.array()).sum();
        for (int l = j; l < q; ++l) {
            G(j, l) = (dummies[j].array() * dummies[l].array()).sum();
            G(l, j) = G(j, l);
        }
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
    if (ldlt.info() != Eigen::Success)
        throw RankError("event-time dummies collinear after demeaning");
    Eigen::VectorXd coef = ldlt.solve(b);
    if ((G * coef - b).lpNorm<Eigen::Infinity>() > 1e-6 * (1.0 + b.lpNorm<Eigen::Infinity>()))
        throw RankError("event-time dummy system is singular");

    EventStudyResult out;
    out.tag = EstimatorTag::TWFE;
    out.normalization = "k = -1 omitted (t = t0 is the reference period)";
    for (int j = 0; j < q; ++j) {
        if (ks[j] < -t0 + 1) continue;  // estimated but outside the reported range
        out.event_time.push_back(ks[j]);
    }
    out.tau.resize(static_cast<Eigen::Index>(out.event_time.size()));
    Eigen::Index w = 0;
    for (int j = 0; j < q; ++j)
        if (ks[j] >= -t0 + 1) out.tau[w++] = coef[j];
    return out;
}

void StaggeredPanel::validate() const {
    if (adoption.rows() != outcomes.rows() || adoption.cols() != outcomes.cols())
        throw ShapeError("adoption matrix does not match outcomes");
    for (int i = 0; i < n(); ++i) {
        for (int t = 0; t < periods(); ++t) {
            int w = adoption(i, t);
            if (w != 0 && w != 1) throw ConsistencyError("adoption entries must be 0/1");
            if (t > 0 && w < adoption(i, t - 1))
                throw ConsistencyError("adoption must be nondecreasing (unit " +
                                       std::to_string(i + 1) + ")");
        }
    }
}

EstimateResult staggered_tau_t(const StaggeredPanel& panel, int t, double zeta,
                               const SolverOptions& opts) {
    panel.validate();
    if (t < 3 || t > panel.periods())
        throw RangeError("staggered period t must be in [3, T]");

    // not-yet-treated at t-1
    std::vector<int> keep;
    for (int i = 0; i < panel.n(); ++i)
        if (panel.adoption(i, t - 2) == 0) keep.push_back(i);
    const int m = static_cast<int>(keep.size());

    int adopters = 0;
    for (int i : keep) adopters += panel.adoption(i, t - 1);
    if (adopters == 0) throw EmptyCohortError("no adopters at period " + std::to_string(t));
    if (adopters == m)
        throw EmptyCohortError("no not-yet-treated controls at period " + std::to_string(t));

    Eigen::MatrixXd Y(m, t);
    Eigen::ArrayXd D(m);
    for (int j = 0; j < m; ++j) {
        Y.row(j) = panel.outcomes.row(keep[j]).head(t);
        D[j] = panel.adoption(keep[j], t - 1);
    }
    PanelDataset sub = PanelDataset::create(std::move(Y), std::move(D), t - 1);
    FeatureMatrix phi = lagged_levels(sub);
    BalanceSolution w = solve_dual(phi, sub.treated(), zeta, opts);
    EventStudyResult path = sc_effect_path(sub, w);

    EstimateResult out;
    out.horizons = {0};
    out.tau_hat.resize(1);
    out.tau_hat[0] = path.at(0);
    out.n1 = sub.n_treated();
    out.pi_bar = sub.pi_bar();
    out.weights = std::move(w);
    return out;
}

}  // namespace scm
