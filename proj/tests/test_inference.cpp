#include "doctest.h"

#include "helpers.hpp"
#include "scm/dgp.hpp"
#include "scm/inference.hpp"

using namespace scm;
using testutil::make_panel;

namespace {

nlohmann::json lags_recipe() { return nlohmann::json::array({{{"kind", "lags"}}}); }

}  // namespace

TEST_CASE("no outcome variation collapses the bootstrap to a point") {
    Eigen::MatrixXd y(6, 4);
    for (int i = 0; i < 6; ++i) y.row(i) << 2, 2, 2, 2;
    PanelDataset d = make_panel(y, {1.0, 1.0, 0.0, 0.0, 0.0, 0.0}, 3);
    BootstrapOptions opts;
    opts.b_boot = 200;
    opts.seed = 5;
    BootstrapResult r = bootstrap_sc(d, lags_recipe(), 1.0, opts);
    CHECK(r.point == doctest::Approx(0.0));
    CHECK(r.se == doctest::Approx(0.0));
    CHECK(r.ci_low == doctest::Approx(r.ci_high));
}

TEST_CASE("duplicating every unit leaves the point estimate unchanged") {
    DgpSpec spec;
    spec.n = 200;
    SimulatedPanel sim = simulate(spec, 8);
    // zeta = 0 keeps the weight problem a pure Pn functional; with zeta > 0
    // the ridge scales as zeta^2/n and the estimate moves by O(1/n)
    FeatureMatrix phi = lagged_levels(sim.panel);
    BalanceSolution w = solve_dual(phi, sim.panel.treated(), 0.0);
    double point = sc_effect_path(sim.panel, w).at(0);

    Eigen::MatrixXd y2(400, sim.panel.periods());
    Eigen::ArrayXd d2(400);
    y2 << sim.panel.outcomes(), sim.panel.outcomes();
    d2 << sim.panel.treated(), sim.panel.treated();
    PanelDataset doubled = PanelDataset::create(y2, d2, spec.t0);
    BalanceSolution w2 = solve_dual(lagged_levels(doubled), doubled.treated(), 0.0);
    double point2 = sc_effect_path(doubled, w2).at(0);
    CHECK(point2 == doctest::Approx(point).epsilon(1e-6));
}

TEST_CASE("plug-in variance arithmetic") {
    Eigen::MatrixXd y(4, 3);
    y.setRandom();
    PanelDataset d = make_panel(y, {1.0, 1.0, 0.0, 0.0}, 2);

    Eigen::VectorXd zeros = Eigen::VectorXd::Zero(2);
    CHECK(plugin_variance_van(d, zeros) == 0.0);

    Eigen::VectorXd pm(2);
    pm << 1.0, -1.0;
    // mean square 1, scaled by 1/(pi_bar n) = 1/(0.5 * 4)
    CHECK(plugin_variance_van(d, pm) == doctest::Approx(0.5).epsilon(1e-12));

    Eigen::VectorXd wrong(3);
    wrong.setZero();
    CHECK_THROWS_AS(plugin_variance_van(d, wrong), ShapeError);
}

TEST_CASE("constant-share plug-in inflates by 1/(1-pi)") {
    Eigen::ArrayXd treated(4);
    treated << 1, 1, 0, 0;
    Eigen::VectorXd var = Eigen::VectorXd::Constant(4, 2.0);
    Eigen::VectorXd pi = Eigen::VectorXd::Constant(4, 0.5);
    // E[V/(1-pi)|D=1] = 4, over pi_bar*n = 2
    CHECK(plugin_variance_as(var, pi, treated) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("adding a constant effect shifts point and percentile CI by that constant") {
    DgpSpec spec;
    spec.kind = DgpKind::TwoWayRW;
    spec.n = 80;
    SimulatedPanel sim = simulate(spec, 14);
    BootstrapOptions opts;
    opts.b_boot = 150;
    opts.seed = 99;
    BootstrapResult base = bootstrap_sc(sim.panel, lags_recipe(), 1.0, opts);

    const double shift = 4.25;
    Eigen::MatrixXd y = sim.panel.outcomes();
    for (int i = 0; i < spec.n; ++i)
        if (sim.panel.treated()[i] == 1.0)
            y.row(i).tail(spec.k_post + 1).array() += shift;
    PanelDataset shifted = PanelDataset::create(y, sim.panel.treated(), spec.t0);
    BootstrapResult moved = bootstrap_sc(shifted, lags_recipe(), 1.0, opts);

    CHECK(moved.point == doctest::Approx(base.point + shift).epsilon(1e-9));
    CHECK(moved.ci_low == doctest::Approx(base.ci_low + shift).epsilon(1e-9));
    CHECK(moved.ci_high == doctest::Approx(base.ci_high + shift).epsilon(1e-9));
    // percentile interval brackets the point on this symmetric design
    CHECK(base.ci_low <= base.point);
    CHECK(base.point <= base.ci_high);

    // a global location shift of all outcomes cancels entirely; near-separated
    // resamples can land on a different order statistic, so allow a margin
    PanelDataset global = PanelDataset::create(
        sim.panel.outcomes().array() + 11.0, sim.panel.treated(), spec.t0);
    BootstrapResult same = bootstrap_sc(global, lags_recipe(), 1.0, opts);
    CHECK(same.point == doctest::Approx(base.point).epsilon(1e-8));
    CHECK(same.ci_low == doctest::Approx(base.ci_low).epsilon(0.05));
}

TEST_CASE("relabeling units moves the SE only by resampling noise") {
    DgpSpec spec;
    spec.n = 100;
    SimulatedPanel sim = simulate(spec, 23);
    BootstrapOptions opts;
    opts.b_boot = 400;
    opts.seed = 7;
    BootstrapResult a = bootstrap_sc(sim.panel, lags_recipe(), 1.0, opts);

    std::vector<int> perm(100);
    for (int i = 0; i < 100; ++i) perm[i] = (i * 37 + 11) % 100;
    Eigen::MatrixXd y(100, sim.panel.periods());
    Eigen::ArrayXd d(100);
    for (int i = 0; i < 100; ++i) {
        y.row(i) = sim.panel.outcomes().row(perm[i]);
        d[i] = sim.panel.treated()[perm[i]];
    }
    BootstrapResult b =
        bootstrap_sc(PanelDataset::create(y, d, spec.t0), lags_recipe(), 1.0, opts);
    CHECK(b.se == doctest::Approx(a.se).epsilon(0.25));
}

TEST_CASE("degenerate resampling designs are rejected or flagged") {
    Eigen::MatrixXd y(4, 4);
    y.setRandom();
    PanelDataset tiny = make_panel(y, {1.0, 0.0, 0.0, 0.0}, 3);
    BootstrapOptions opts;
    opts.b_boot = 200;
    opts.seed = 3;
    // P(resample misses the single treated unit) = (3/4)^4 > 20%
    CHECK_THROWS_AS(bootstrap_sc(tiny, lags_recipe(), 1.0, opts), DegenerateDesignError);

    // stratified resampling keeps both groups by construction
    opts.stratified = true;
    BootstrapResult r = bootstrap_sc(tiny, lags_recipe(), 1.0, opts);
    CHECK(r.skipped == 0);
}

TEST_CASE("bootstrap options are validated") {
    Eigen::MatrixXd y(4, 4);
    y.setRandom();
    PanelDataset d = make_panel(y, {1.0, 1.0, 0.0, 0.0}, 3);
    BootstrapOptions opts;
    opts.b_boot = 50;
    opts.seed = 1;
    CHECK_THROWS_AS(bootstrap_sc(d, lags_recipe(), 1.0, opts), RangeError);
    opts.b_boot = 100;
    opts.level = 1.5;
    CHECK_THROWS_AS(bootstrap_sc(d, lags_recipe(), 1.0, opts), RangeError);
}
