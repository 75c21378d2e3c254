#include "scm/dgp.hpp"

#include <cmath>

#include "scm/rng.hpp"

namespace scm {

namespace {

const char* kind_name(DgpKind k) {
    switch (k) {
        case DgpKind::TwoWayAR: return "two_way_ar";
        case DgpKind::TwoWayRW: return "two_way_rw";
        case DgpKind::Mixture: return "mixture";
        case DgpKind::InteractiveFE: return "interactive_fe";
    }
    return "?";
}

DgpKind kind_from_name(const std::string& s) {
    if (s == "two_way_ar" || s == "ar") return DgpKind::TwoWayAR;
    if (s == "two_way_rw" || s == "rw") return DgpKind::TwoWayRW;
    if (s == "mixture") return DgpKind::Mixture;
    if (s == "interactive_fe" || s == "ife") return DgpKind::InteractiveFE;
    throw ParseError("unknown dgp kind '" + s + "'");
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void DgpSpec::validate() const {
    if (n < 2) throw RangeError("n must be >= 2");
    if (t0 < 2) throw RangeError("t0 must be >= 2");
    if (k_post < 0) throw RangeError("k_post must be >= 0");
    if (std::abs(rho) >= 1.0) throw RangeError("|rho| must be < 1 for the AR design");
    if (sigma_eta2 <= 0 || sigma_ar2 <= 0 || sigma_rw2 <= 0 || sigma_eps2 <= 0)
        throw RangeError("variances must be positive");
    if (sigma_nu2 < 0) throw RangeError("sigma_nu2 must be >= 0");
    if (!lambda_t.empty() && static_cast<int>(lambda_t.size()) != t0 + k_post + 1)
        throw ShapeError("lambda_t must have t0 + k_post + 1 entries");
    if (kind == DgpKind::InteractiveFE) {
        if (kappa <= 1.0) throw RangeError("kappa must be > 1");
        if (f_dim < 1) throw RangeError("f_dim must be >= 1");
        if (f_dim > t0) throw RangeError("f_dim must be <= t0");
    }
}

nlohmann::json DgpSpec::to_json() const {
    nlohmann::json j{{"kind", kind_name(kind)},
                     {"n", n},
                     {"t0", t0},
                     {"k_post", k_post},
                     {"tau", tau},
                     {"sigma_eta2", sigma_eta2},
                     {"rho", rho},
                     {"sigma_ar2", sigma_ar2},
                     {"sigma_rw2", sigma_rw2},
                     {"beta_ar_t0", beta_ar_t0},
                     {"beta_ar_t0m1", beta_ar_t0m1},
                     {"beta_rw_t0", beta_rw_t0},
                     {"sigma_nu2", sigma_nu2}};
    if (!lambda_t.empty()) j["lambda_t"] = lambda_t;
    if (kind == DgpKind::InteractiveFE) {
        j["kappa"] = kappa;
        j["f_dim"] = f_dim;
        j["sigma_eps2"] = sigma_eps2;
    }
    return j;
}

DgpSpec DgpSpec::from_json(const nlohmann::json& j) {
    DgpSpec s;
    s.kind = kind_from_name(j.at("kind").get<std::string>());
    s.n = j.value("n", s.n);
    s.t0 = j.value("t0", s.t0);
    s.k_post = j.value("k_post", s.k_post);
    s.tau = j.value("tau", s.tau);
    s.sigma_eta2 = j.value("sigma_eta2", s.sigma_eta2);
    s.rho = j.value("rho", s.rho);
    s.sigma_ar2 = j.value("sigma_ar2", s.sigma_ar2);
    s.sigma_rw2 = j.value("sigma_rw2", s.sigma_rw2);
    s.beta_ar_t0 = j.value("beta_ar_t0", s.beta_ar_t0);
    s.beta_ar_t0m1 = j.value("beta_ar_t0m1", s.beta_ar_t0m1);
    s.beta_rw_t0 = j.value("beta_rw_t0", s.beta_rw_t0);
    s.sigma_nu2 = j.value("sigma_nu2", s.sigma_nu2);
    if (j.contains("lambda_t")) s.lambda_t = j.at("lambda_t").get<std::vector<double>>();
    s.kappa = j.value("kappa", s.kappa);
    s.f_dim = j.value("f_dim", s.f_dim);
    s.sigma_eps2 = j.value("sigma_eps2", s.sigma_eps2);
    s.validate();
    return s;
}

SimulatedPanel simulate(const DgpSpec& spec, std::uint64_t seed) {
    spec.validate();
    if (spec.kind == DgpKind::InteractiveFE) return simulate_interactive(spec, seed);

    const int n = spec.n;
    const int T = spec.t0 + spec.k_post + 1;
    const int t0 = spec.t0;
    const double s_eta = std::sqrt(spec.sigma_eta2);
    const double s_ar = std::sqrt(spec.sigma_ar2);
    const double s_ar0 = std::sqrt(spec.sigma_ar2 / (1.0 - spec.rho * spec.rho));
    const double s_rw = std::sqrt(spec.sigma_rw2);
    const double s_nu = std::sqrt(spec.sigma_nu2);

    SimulatedPanel out;
    out.eta.resize(n, 1);
    out.eps.resize(n, T);
    out.theta.resize(n);
    out.pi.resize(n);
    out.nu.resize(n);
    out.mu.resize(n);
    out.y0_post.resize(n, spec.k_post + 1);
    out.component.assign(n, 0);

    Eigen::MatrixXd Y(n, T);
    Eigen::ArrayXd D(n);
    for (int i = 0; i < n; ++i) {
        bool rw_unit = spec.kind == DgpKind::TwoWayRW ||
                       (spec.kind == DgpKind::Mixture && (i % 2) == 1);
        out.component[i] = rw_unit ? 1 : 0;
        const auto ui = static_cast<std::uint64_t>(i);

        double eta = s_eta * rng::normal(seed, rng::kEta, ui, 0);
        out.eta(i, 0) = eta;

        // time-varying errors: stationary AR(1) or random walk from 0
        if (rw_unit) {
            double level = 0.0;
            for (int t = 0; t < T; ++t) {
                level += s_rw * rng::normal(seed, rng::kInnovation, ui, static_cast<std::uint64_t>(t));
                out.eps(i, t) = level;
            }
        } else {
            double level = s_ar0 * rng::normal(seed, rng::kArInit, ui, 0);
            out.eps(i, 0) = level;
            for (int t = 1; t < T; ++t) {
                level = spec.rho * level +
                        s_ar * rng::normal(seed, rng::kInnovation, ui, static_cast<std::uint64_t>(t));
                out.eps(i, t) = level;
            }
        }

        double nu = s_nu * rng::normal(seed, rng::kNu, ui, 0);
        out.nu[i] = nu;
        double theta = rw_unit
                           ? spec.beta_rw_t0 * out.eps(i, t0 - 1) + nu
                           : eta + spec.beta_ar_t0 * out.eps(i, t0 - 1) +
                                 spec.beta_ar_t0m1 * out.eps(i, t0 - 2) + nu;
        out.theta[i] = theta;
        out.pi[i] = logistic(theta);
        D[i] = rng::uniform(seed, rng::kAssign, ui, 0) < out.pi[i] ? 1.0 : 0.0;

        // E[eps_{t0+1} | past] is rho * eps_{t0} for AR units, eps_{t0} for RW
        double lambda_next = spec.lambda_t.empty() ? 0.0 : spec.lambda_t[t0];
        out.mu[i] = eta + lambda_next + (rw_unit ? 1.0 : spec.rho) * out.eps(i, t0 - 1);

        for (int t = 0; t < T; ++t) {
            double lambda = spec.lambda_t.empty() ? 0.0 : spec.lambda_t[t];
            double y0 = eta + lambda + out.eps(i, t);
            if (t >= t0) out.y0_post(i, t - t0) = y0;
            double effect = (t >= t0 && D[i] == 1.0) ? spec.tau * (t - t0) : 0.0;
            Y(i, t) = y0 + effect;
        }
    }

    out.panel = PanelDataset::create(std::move(Y), std::move(D), t0);
    return out;
}

namespace {

// Orthonormalize columns by Gram-Schmidt; each new direction keeps the sign
// of its gaussian seed vector, so the basis is deterministic in the seed.
Eigen::MatrixXd orthonormalize(Eigen::MatrixXd G) {
    for (Eigen::Index j = 0; j < G.cols(); ++j) {
        for (Eigen::Index l = 0; l < j; ++l) G.col(j) -= G.col(l).dot(G.col(j)) * G.col(l);
        G.col(j).normalize();
    }
    return G;
}

}  // namespace

FactorStructure build_factor_structure(int t0, int f_dim, double kappa, std::uint64_t seed) {
    const int d = f_dim;

    // Right singular vectors: the leading one is the constant direction (the
    // dominant factor loads evenly over time), the rest are random in its
    // orthogonal complement. Left singular vectors: identity for the leading
    // one, random rotations after it. With d = 1 this makes psi_t identically
    // 1 and psi_next = 1, i.e. exactly the two-way model.
    Eigen::MatrixXd GV(t0, d);
    GV.col(0) = Eigen::VectorXd::Constant(t0, 1.0 / std::sqrt(static_cast<double>(t0)));
    for (int j = 1; j < d; ++j)
        for (int i = 0; i < t0; ++i)
            GV(i, j) = rng::normal(seed, rng::kFactorBasis, static_cast<std::uint64_t>(1000000 + i),
                                   static_cast<std::uint64_t>(j));
    Eigen::MatrixXd V = orthonormalize(std::move(GV));

    Eigen::MatrixXd GU(d, d);
    GU.col(0) = Eigen::VectorXd::Unit(d, 0);
    for (int j = 1; j < d; ++j)
        for (int i = 0; i < d; ++i)
            GU(i, j) = rng::normal(seed, rng::kFactorBasis, static_cast<std::uint64_t>(i),
                                   static_cast<std::uint64_t>(j));

    FactorStructure fs;
    fs.u_basis = orthonormalize(std::move(GU));
    fs.sing.resize(d);
    Eigen::VectorXd xi(d);
    for (int j = 0; j < d; ++j) {
        fs.sing[j] = std::sqrt(static_cast<double>(t0)) * std::pow(j + 1.0, -kappa / 2.0);
        xi[j] = fs.sing[j] / std::sqrt(static_cast<double>(t0));  // xi_j^2 = sigma^2(j)/t0
    }
    fs.psi = fs.u_basis * fs.sing.asDiagonal() * V.transpose();
    fs.psi_next = fs.u_basis * xi;
    return fs;
}

SimulatedPanel simulate_interactive(const DgpSpec& spec, std::uint64_t seed) {
    spec.validate();
    if (spec.kind != DgpKind::InteractiveFE)
        throw RangeError("simulate_interactive requires kind = interactive_fe");

    const int n = spec.n;
    const int T = spec.t0 + spec.k_post + 1;
    const int t0 = spec.t0;
    const int d = spec.f_dim;
    const double s_eps = std::sqrt(spec.sigma_eps2);
    const double s_nu = std::sqrt(spec.sigma_nu2);

    FactorStructure fs = build_factor_structure(t0, d, spec.kappa, seed);
    // selection loadings aligned like the outcome factor: xi_sel = xi
    Eigen::VectorXd alpha_sel = fs.psi_next;

    SimulatedPanel out;
    out.eta.resize(n, d);
    out.eps.resize(n, T);
    out.theta.resize(n);
    out.pi.resize(n);
    out.nu.resize(n);
    out.mu.resize(n);
    out.y0_post.resize(n, spec.k_post + 1);
    out.component.assign(n, 0);

    Eigen::MatrixXd Y(n, T);
    Eigen::ArrayXd D(n);
    for (int i = 0; i < n; ++i) {
        const auto ui = static_cast<std::uint64_t>(i);
        for (int j = 0; j < d; ++j)
            out.eta(i, j) = rng::normal(seed, rng::kEta, ui, static_cast<std::uint64_t>(j));
        for (int t = 0; t < T; ++t)
            out.eps(i, t) =
                s_eps * rng::normal(seed, rng::kInnovation, ui, static_cast<std::uint64_t>(t));

        double nu = s_nu * rng::normal(seed, rng::kNu, ui, 0);
        out.nu[i] = nu;
        double theta = alpha_sel.dot(out.eta.row(i)) +
                       spec.beta_ar_t0 * out.eps(i, t0 - 1) +
                       spec.beta_ar_t0m1 * out.eps(i, t0 - 2) + nu;
        out.theta[i] = theta;
        out.pi[i] = logistic(theta);
        D[i] = rng::uniform(seed, rng::kAssign, ui, 0) < out.pi[i] ? 1.0 : 0.0;

        double load_next = fs.psi_next.dot(out.eta.row(i));
        double lambda_next = spec.lambda_t.empty() ? 0.0 : spec.lambda_t[t0];
        out.mu[i] = lambda_next + load_next;

        for (int t = 0; t < T; ++t) {
            double lambda = spec.lambda_t.empty() ? 0.0 : spec.lambda_t[t];
            double load = t < t0 ? fs.psi.col(t).dot(out.eta.row(i)) : load_next;
            double y0 = lambda + load + out.eps(i, t);
            if (t >= t0) out.y0_post(i, t - t0) = y0;
            double effect = (t >= t0 && D[i] == 1.0) ? spec.tau * (t - t0) : 0.0;
            Y(i, t) = y0 + effect;
        }
    }

    out.panel = PanelDataset::create(std::move(Y), std::move(D), t0);
    return out;
}

}  // namespace scm
