#include "doctest.h"

#include "helpers.hpp"
#include "scm/dgp.hpp"
#include "scm/features.hpp"

using namespace scm;

TEST_CASE("lagged levels copy the pretreatment block and nothing else") {
    Eigen::MatrixXd y(2, 3);
    y << 1, 2, 9, 3, 4, 9;
    PanelDataset d = testutil::make_panel(y, {1.0, 0.0}, 2);
    FeatureMatrix f = lagged_levels(d);
    CHECK(f.p() == 2);
    CHECK(f.values(0, 0) == 1);
    CHECK(f.values(1, 1) == 4);

    Eigen::MatrixXd y2 = y;
    y2.col(2).array() += 1e6;  // post column perturbation must not matter
    FeatureMatrix f2 = lagged_levels(testutil::make_panel(y2, {1.0, 0.0}, 2));
    CHECK(f.values == f2.values);
}

TEST_CASE("autocorrelation of a constant series is zero with a warning") {
    Eigen::MatrixXd y(2, 4);
    y << 5, 5, 5, 5, 1, 2, 1, 2;
    PanelDataset d = testutil::make_panel(y, {1.0, 0.0}, 3);
    FeatureMatrix f = unit_autocorrelation(d, 3);
    CHECK(f.values(0, 0) == 0.0);
    CHECK(f.degenerate_units == 1);
}

TEST_CASE("alternating series matches the direct formula") {
    // brute-force oracle: rho = sum z_t z_{t-1} / sum z_t^2 on the demeaned series
    Eigen::VectorXd series(8);
    series << 1, -1, 1, -1, 1, -1, 1, -1;
    double mean = series.mean();
    Eigen::VectorXd z = series.array() - mean;
    double expected = z.head(7).dot(z.tail(7)) / z.squaredNorm();
    CHECK(expected == doctest::Approx(-7.0 / 8.0).epsilon(1e-14));

    Eigen::MatrixXd y(2, 9);
    y.row(0) = Eigen::VectorXd::LinSpaced(9, 1, 9);
    y.row(1).head(8) = series;
    y(1, 8) = 0;
    PanelDataset d = testutil::make_panel(y, {1.0, 0.0}, 8);
    FeatureMatrix f = unit_autocorrelation(d, 8);
    CHECK(f.values(1, 0) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("autocorrelation is location and positive-scale invariant") {
    Eigen::MatrixXd y(2, 6);
    y << 1.3, 0.2, 2.7, 1.1, 0.4, 9, 2, 5, 3, 7, 1, 9;
    PanelDataset d = testutil::make_panel(y, {1.0, 0.0}, 5);
    FeatureMatrix base = unit_autocorrelation(d, 5);

    Eigen::MatrixXd y2 = y;
    y2.row(0).array() += 42.0;
    y2.row(1).array() *= 3.5;
    FeatureMatrix shifted = unit_autocorrelation(testutil::make_panel(y2, {1.0, 0.0}, 5), 5);
    CHECK(shifted.values(0, 0) == doctest::Approx(base.values(0, 0)).epsilon(1e-12));
    CHECK(shifted.values(1, 0) == doctest::Approx(base.values(1, 0)).epsilon(1e-12));
}

TEST_CASE("autocorrelation end_period is range-checked") {
    Eigen::MatrixXd y(2, 5);
    y.setRandom();
    PanelDataset d = testutil::make_panel(y, {1.0, 0.0}, 4);
    CHECK_THROWS_AS(unit_autocorrelation(d, 5), RangeError);
    CHECK_THROWS_AS(unit_autocorrelation(d, 2), RangeError);
}

TEST_CASE("concat stacks columns, uniquifies names, checks n") {
    Eigen::MatrixXd y(3, 9);
    y.setRandom();
    PanelDataset d = testutil::make_panel(y, {1.0, 0.0, 0.0}, 8);
    FeatureMatrix lags = lagged_levels(d);
    FeatureMatrix ac = unit_autocorrelation(d, 8);
    FeatureMatrix both = concat({lags, ac});
    CHECK(both.p() == 9);
    CHECK(both.values.leftCols(8) == lags.values);
    CHECK(both.values.col(8) == ac.values.col(0));

    FeatureMatrix twice = concat({ac, ac});
    CHECK(twice.names[0] != twice.names[1]);

    FeatureMatrix single = concat({lags});
    CHECK(single.values == lags.values);

    Eigen::MatrixXd y2(4, 9);
    y2.setRandom();
    FeatureMatrix other = lagged_levels(testutil::make_panel(y2, {1.0, 0.0, 0.0, 0.0}, 8));
    CHECK_THROWS_AS(concat({lags, other}), ShapeError);
}

TEST_CASE("standardize centers and scales, flags zero variance") {
    Eigen::MatrixXd y(4, 4);
    y << 1, 7, 2, 0, 2, 7, 4, 0, 3, 7, 8, 0, 4, 7, 16, 0;
    PanelDataset d = testutil::make_panel(y, {1.0, 0.0, 0.0, 0.0}, 3);
    FeatureMatrix f = standardize(lagged_levels(d));
    CHECK(f.standardized);
    for (int j : {0, 2}) {
        CHECK(std::abs(f.values.col(j).mean()) < 1e-10);
        double var = f.values.col(j).squaredNorm() / 3.0;
        CHECK(var == doctest::Approx(1.0).epsilon(1e-10));
    }
    CHECK(f.zero_variance[1] == 1);
    CHECK(std::abs(f.values.col(1).mean()) < 1e-12);  // centered only
}

TEST_CASE("AR-design feature means track the configured time effects") {
    DgpSpec spec;
    spec.n = 40000;
    spec.t0 = 4;
    spec.k_post = 0;
    spec.lambda_t = {1.0, -2.0, 0.5, 3.0, 0.0};
    SimulatedPanel sim = simulate(spec, 3);
    FeatureMatrix f = lagged_levels(sim.panel);
    for (int t = 0; t < 4; ++t)
        CHECK(f.values.col(t).mean() == doctest::Approx(spec.lambda_t[t]).epsilon(0.05));
}

TEST_CASE("RW units carry higher autocorrelation than AR units at t0=24") {
    DgpSpec spec;
    spec.kind = DgpKind::Mixture;
    spec.n = 4000;
    spec.t0 = 24;
    spec.k_post = 0;
    SimulatedPanel sim = simulate(spec, 5);
    FeatureMatrix f = unit_autocorrelation(sim.panel, 24);
    double ar_mean = 0.0, rw_mean = 0.0;
    int ar_n = 0, rw_n = 0;
    for (int i = 0; i < spec.n; ++i) {
        if (sim.component[i] == 0) { ar_mean += f.values(i, 0); ++ar_n; }
        else { rw_mean += f.values(i, 0); ++rw_n; }
    }
    ar_mean /= ar_n;
    rw_mean /= rw_n;
    CHECK(rw_mean > ar_mean + 0.1);
}

TEST_CASE("recipe builder wires lags and autocorr together") {
    Eigen::MatrixXd y(3, 9);
    y.setRandom();
    PanelDataset d = testutil::make_panel(y, {1.0, 0.0, 0.0}, 8);
    nlohmann::json recipe = nlohmann::json::parse(
        R"([{"kind":"lags"},{"kind":"autocorr","end":8}])");
    FeatureMatrix f = build_features(d, recipe);
    CHECK(f.p() == 9);
    CHECK_THROWS_AS(build_features(d, nlohmann::json::parse(R"([{"kind":"nope"}])")),
                    ParseError);
}
