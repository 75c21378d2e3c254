#include "doctest.h"

#include "helpers.hpp"
#include "scm/dgp.hpp"
#include "scm/diagnostics.hpp"

using namespace scm;
using testutil::make_panel;

TEST_CASE("identical treated and control series give a zero statistic") {
    Eigen::MatrixXd y(4, 5);
    for (int i = 0; i < 4; ++i) y.row(i) << 1.0, 3.0, 2.0, 4.0, 0.0;
    PanelDataset d = make_panel(y, {1.0, 1.0, 0.0, 0.0}, 4);
    CHECK(autocorr_imbalance(d, nullptr).rho_hat == doctest::Approx(0.0).epsilon(1e-12));
    BalanceSolution w = solve_dual(lagged_levels(d), d.treated(), 1.0);
    CHECK(autocorr_imbalance(d, &w).rho_hat == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("t0 below 3 is rejected and degenerate units are counted") {
    Eigen::MatrixXd y(4, 3);
    y.setRandom();
    CHECK_THROWS_AS(autocorr_imbalance(make_panel(y, {1.0, 0.0, 0.0, 0.0}, 2), nullptr),
                    RangeError);

    Eigen::MatrixXd flat(4, 5);
    flat.setRandom();
    flat.row(2).setConstant(3.0);  // zero-variance control
    PanelDataset d = make_panel(flat, {1.0, 0.0, 0.0, 0.0}, 4);
    BalanceDiagnostic diag = autocorr_imbalance(d, nullptr, /*demean=*/true);
    CHECK(diag.n_degenerate == 1);
}

TEST_CASE("uniform statistic has null mean under label exchange") {
    // permute treatment labels independently of the data: the gap is pure noise
    double acc = 0.0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
        DgpSpec spec;
        spec.kind = DgpKind::Mixture;
        spec.n = 100;
        spec.t0 = 8;
        spec.k_post = 0;
        SimulatedPanel sim = simulate(spec, 9000 + r);
        Eigen::ArrayXd d(100);
        int n1 = 0;
        for (int i = 0; i < 100; ++i) {
            d[i] = rng::uniform(9000 + r, rng::kTestData, i, 1) < 0.5 ? 1.0 : 0.0;
            n1 += d[i] == 1.0;
        }
        if (n1 == 0) d[0] = 1.0;
        if (n1 == 100) d[0] = 0.0;
        PanelDataset relabeled =
            PanelDataset::create(sim.panel.outcomes(), d, spec.t0);
        acc += autocorr_imbalance(relabeled, nullptr).rho_hat;
    }
    CHECK(std::abs(acc / reps) < 0.01);
}

TEST_CASE("placebo ignores data after period t0") {
    DgpSpec spec;
    spec.n = 120;
    SimulatedPanel sim = simulate(spec, 77);
    EventStudyResult base = placebo_shift(sim.panel, EstimatorTag::SC, 1.0);
    EventStudyResult base_tw = placebo_shift(sim.panel, EstimatorTag::TWFE, 1.0);

    Eigen::MatrixXd y = sim.panel.outcomes();
    y.rightCols(spec.k_post + 1).array() += 1e5;  // post periods must not matter
    PanelDataset poked = PanelDataset::create(y, sim.panel.treated(), spec.t0);
    EventStudyResult after = placebo_shift(poked, EstimatorTag::SC, 1.0);
    EventStudyResult after_tw = placebo_shift(poked, EstimatorTag::TWFE, 1.0);
    for (int k : {0, 1}) {
        CHECK(after.at(k) == doctest::Approx(base.at(k)).epsilon(1e-10));
        CHECK(after_tw.at(k) == doctest::Approx(base_tw.at(k)).epsilon(1e-8));
    }
}

TEST_CASE("noiseless two-way data produce exactly zero placebo effects") {
    const int n = 12, T = 8, t0 = 6;
    Eigen::MatrixXd y(n, T);
    Eigen::ArrayXd d(n);
    for (int i = 0; i < n; ++i) {
        d[i] = i < 4 ? 1.0 : 0.0;
        for (int t = 0; t < T; ++t) y(i, t) = 0.4 * (i % 5) + std::sin(0.9 * t);
    }
    PanelDataset panel = PanelDataset::create(y, d, t0);
    EventStudyResult sc = placebo_shift(panel, EstimatorTag::SC, 0.0);
    EventStudyResult tw = placebo_shift(panel, EstimatorTag::TWFE, 0.0);
    for (int k : {0, 1}) {
        CHECK(std::abs(sc.at(k)) < 1e-7);
        CHECK(std::abs(tw.at(k)) < 1e-8);
    }
}

TEST_CASE("placebo needs at least four pretreatment periods") {
    Eigen::MatrixXd y(4, 4);
    y.setRandom();
    PanelDataset d = make_panel(y, {1.0, 0.0, 0.0, 0.0}, 3);
    CHECK_THROWS_AS(placebo_shift(d, EstimatorTag::SC, 1.0), RangeError);
}
