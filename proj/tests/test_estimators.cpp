#include "doctest.h"

#include "helpers.hpp"
#include "scm/dgp.hpp"
#include "scm/estimators.hpp"

using namespace scm;
using testutil::make_panel;

namespace {

BalanceSolution fit_weights(const PanelDataset& d, double zeta) {
    return solve_dual(lagged_levels(d), d.treated(), zeta);
}

}  // namespace

TEST_CASE("identical outcome columns give a zero path") {
    Eigen::MatrixXd y(4, 5);
    for (int i = 0; i < 4; ++i) y.row(i) << 1, 2, 3, 4, 5;
    PanelDataset d = make_panel(y, {1.0, 1.0, 0.0, 0.0}, 3);
    EventStudyResult path = sc_effect_path(d, fit_weights(d, 0.0));
    CHECK(path.tau.lpNorm<Eigen::Infinity>() < 1e-9);
    CHECK(path.has(-1));
    CHECK(path.event_time.front() == -2);
    CHECK(path.event_time.back() == 1);
}

TEST_CASE("uniform weights reduce the post contrast to a difference of means") {
    // identical pre rows force uniform weights; post outcomes 1 and 3 vs 5
    Eigen::MatrixXd y(3, 3);
    y << 7, 7, 5, 7, 7, 1, 7, 7, 3;
    PanelDataset d = make_panel(y, {1.0, 0.0, 0.0}, 2);
    EventStudyResult path = sc_effect_path(d, fit_weights(d, 0.0));
    CHECK(path.at(0) == doctest::Approx(5.0 - 2.0).epsilon(1e-10));
}

TEST_CASE("sc path is linear in outcomes for fixed weights") {
    DgpSpec spec;
    spec.n = 60;
    SimulatedPanel sim = simulate(spec, 42);
    BalanceSolution w = fit_weights(sim.panel, 1.0);
    EventStudyResult base = sc_effect_path(sim.panel, w);

    Eigen::MatrixXd z = Eigen::MatrixXd::Random(60, sim.panel.periods());
    PanelDataset shifted = PanelDataset::create(sim.panel.outcomes() + z,
                                                sim.panel.treated(), spec.t0);
    PanelDataset zonly = PanelDataset::create(z, sim.panel.treated(), spec.t0);
    EventStudyResult sum = sc_effect_path(shifted, w);
    EventStudyResult zpath = sc_effect_path(zonly, w);
    for (std::size_t i = 0; i < base.event_time.size(); ++i) {
        auto k = base.event_time[i];
        CHECK(sum.at(k) == doctest::Approx(base.at(k) + zpath.at(k)).epsilon(1e-9));
    }
}

TEST_CASE("exact balance zeroes the pre path when zeta = 0") {
    DgpSpec spec;
    spec.n = 200;
    SimulatedPanel sim = simulate(spec, 5);
    EventStudyResult path = sc_effect_path(sim.panel, fit_weights(sim.panel, 0.0));
    for (int k = -spec.t0 + 1; k <= -1; ++k) CHECK(std::abs(path.at(k)) < 1e-6);
}

TEST_CASE("twfe recovers exact two-way structure") {
    const int n = 10, T = 8, t0 = 5;
    Eigen::MatrixXd y(n, T);
    Eigen::ArrayXd d(n);
    for (int i = 0; i < n; ++i) {
        d[i] = i < 3 ? 1.0 : 0.0;
        for (int t = 0; t < T; ++t) y(i, t) = 0.7 * i - 1.3 * t + 0.1 * t * t;
    }
    PanelDataset clean = PanelDataset::create(y, d, t0);
    EventStudyResult zero = twfe_event_study(clean);
    CHECK(zero.tau.lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK(!zero.has(-1));

    Eigen::MatrixXd y2 = y;
    for (int i = 0; i < n; ++i)
        if (d[i] == 1.0) y2(i, t0) += 2.0;  // effect 2 at k = 0
    EventStudyResult bump = twfe_event_study(PanelDataset::create(y2, d, t0));
    CHECK(bump.at(0) == doctest::Approx(2.0).epsilon(1e-8));
    for (int k : bump.event_time)
        if (k != 0) CHECK(std::abs(bump.at(k)) < 1e-8);
}

TEST_CASE("twfe is invariant to unit, period and global shifts") {
    DgpSpec spec;
    spec.n = 50;
    SimulatedPanel sim = simulate(spec, 9);
    EventStudyResult base = twfe_event_study(sim.panel);

    Eigen::MatrixXd y = sim.panel.outcomes();
    Eigen::VectorXd unit_fx = Eigen::VectorXd::Random(50) * 10.0;
    Eigen::RowVectorXd time_fx = Eigen::RowVectorXd::Random(sim.panel.periods()) * 10.0;
    y.colwise() += unit_fx;
    y.rowwise() += time_fx;
    y.array() += 3.25;
    EventStudyResult shifted =
        twfe_event_study(PanelDataset::create(y, sim.panel.treated(), spec.t0));
    for (int k : base.event_time)
        CHECK(shifted.at(k) == doctest::Approx(base.at(k)).epsilon(1e-8));
}

TEST_CASE("staggered estimator reduces to the block design when adoption is shared") {
    DgpSpec spec;
    spec.n = 120;
    spec.t0 = 4;
    spec.k_post = 0;
    SimulatedPanel sim = simulate(spec, 3);

    StaggeredPanel st;
    st.outcomes = sim.panel.outcomes();
    st.adoption = Eigen::MatrixXi::Zero(120, 5);
    for (int i = 0; i < 120; ++i)
        if (sim.panel.treated()[i] == 1.0) st.adoption(i, 4) = 1;

    EstimateResult staggered = staggered_tau_t(st, 5, 0.5);
    EventStudyResult block = sc_effect_path(sim.panel, fit_weights(sim.panel, 0.5));
    CHECK(staggered.tau_hat[0] == doctest::Approx(block.at(0)).epsilon(1e-10));
    CHECK(staggered.n1 == sim.panel.n_treated());
}

TEST_CASE("staggered two-cohort noiseless panel recovers the unit effect") {
    // two-way noiseless outcomes, effect 1 at adoption, two adoption dates
    const int n = 8, T = 6;
    Eigen::MatrixXd y(n, T);
    Eigen::MatrixXi w = Eigen::MatrixXi::Zero(n, T);
    Eigen::VectorXd eta(n);
    eta << 0.0, 3.0, 2.0, 3.0, 1.0, 2.0, 2.5, 1.0;  // cohort means inside control hull
    Eigen::VectorXd lam(T);
    lam << 0.3, -0.2, 0.7, 0.1, -0.5, 0.4;
    for (int i = 0; i < n; ++i)
        for (int t = 0; t < T; ++t) y(i, t) = eta[i] + lam[t];
    // units 0,1 adopt at period 4; units 4,5 adopt at period 5; rest never
    for (int i : {0, 1})
        for (int t = 3; t < T; ++t) w(i, t) = 1;
    for (int i : {4, 5})
        for (int t = 4; t < T; ++t) w(i, t) = 1;
    for (int i = 0; i < n; ++i)
        for (int t = 0; t < T; ++t)
            if (w(i, t) == 1) y(i, t) += 1.0;

    StaggeredPanel st{y, w};
    EstimateResult tau4 = staggered_tau_t(st, 4, 0.0);
    CHECK(tau4.tau_hat[0] == doctest::Approx(1.0).epsilon(1e-7));
    EstimateResult tau5 = staggered_tau_t(st, 5, 0.0);
    CHECK(tau5.tau_hat[0] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(tau5.n1 == 2);
}

TEST_CASE("staggered estimator rejects bad designs") {
    StaggeredPanel st;
    st.outcomes = Eigen::MatrixXd::Random(4, 5);
    st.adoption = Eigen::MatrixXi::Zero(4, 5);
    st.adoption(0, 2) = 1;  // switches back off afterwards
    CHECK_THROWS_AS(staggered_tau_t(st, 4, 1.0), ConsistencyError);

    st.adoption.setZero();
    CHECK_THROWS_AS(staggered_tau_t(st, 4, 1.0), EmptyCohortError);
}

TEST_CASE("zero-effect staggered DGP centers tau_t near zero") {
    double acc = 0.0;
    const int reps = 60;
    const int t0 = 10;
    for (int r = 0; r < reps; ++r) {
        DgpSpec spec;
        spec.n = 200;
        spec.t0 = t0;
        spec.k_post = 1;
        spec.tau = 0.0;
        SimulatedPanel sim = simulate(spec, 500 + r);
        StaggeredPanel st;
        st.outcomes = sim.panel.outcomes();
        st.adoption = Eigen::MatrixXi::Zero(spec.n, t0 + 2);
        for (int i = 0; i < spec.n; ++i) {
            // stochastic absorbing adoption driven by permanent heterogeneity,
            // with interior adoption probabilities (overlap holds each period)
            double p_adopt = 1.0 / (1.0 + std::exp(-(0.5 * sim.eta(i, 0) - 1.0)));
            bool on = rng::uniform(600 + r, rng::kTestData, i, 5) < p_adopt;
            st.adoption(i, t0) = on ? 1 : 0;
            bool on2 = on || rng::uniform(600 + r, rng::kTestData, i, 6) < p_adopt;
            st.adoption(i, t0 + 1) = on2 ? 1 : 0;
        }
        double tau = 0.0;
        try {
            tau = staggered_tau_t(st, t0 + 2, 1.0).tau_hat[0];
        } catch (const EmptyCohortError&) {
            continue;
        }
        acc += tau;
    }
    CHECK(std::abs(acc / reps) < 0.1);
}
