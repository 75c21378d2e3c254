// Command-line front end: simulate | estimate | event-study | diagnose |
// placebo | effective-periods | montecarlo | oracle.
//
// Conventions shared by all subcommands:
//   - JSON config files merged with flags; flags win; the effective config
//     is echoed into every output together with seed, digest and version.
//   - exit 0 on success, 1 on a domain error (one line "error:<tag> ..." on
//     stderr), 2 on usage errors.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "scm/diagnostics.hpp"
#include "scm/dgp.hpp"
#include "scm/inference.hpp"
#include "scm/montecarlo.hpp"
#include "scm/theory.hpp"
#include "scm/version.hpp"

namespace {

using nlohmann::json;

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw scm::IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw scm::ParseError(std::string("bad JSON in ") + path + ": " + e.what());
    }
    return j;
}

void write_output(const json& j, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << std::endl;
        return;
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw scm::IoError("cannot write " + path);
    out << j.dump(2) << '\n';
}

json provenance(const json& effective, std::optional<std::uint64_t> seed) {
    json j{{"tool_version", scm::kVersion},
           {"config", effective},
           {"config_digest", scm::config_digest(effective)}};
    if (seed) j["seed"] = *seed;
    return j;
}

json default_feature_recipe() { return json::array({json{{"kind", "lags"}}}); }

// --features accepts full recipe JSON or the shorthands "lags",
// "autocorr[:end]", "standardize", comma-separated.
json parse_feature_arg(const std::string& arg) {
    if (arg.empty()) return default_feature_recipe();
    if (arg.front() == '[') return json::parse(arg);
    json recipe = json::array();
    std::stringstream ss(arg);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        auto colon = tok.find(':');
        std::string kind = tok.substr(0, colon);
        json item{{"kind", kind}};
        if (colon != std::string::npos && kind == "autocorr")
            item["end"] = std::stoi(tok.substr(colon + 1));
        recipe.push_back(item);
    }
    return recipe;
}

struct EstimateArgs {
    std::string input, out, features_arg, config_path;
    int t0 = 0;
    double zeta = 1.0;
    int bootstrap = 0;
    double level = 0.9;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    bool stratified = false;
    // which flags were set explicitly (flags override the config file)
    bool zeta_set = false, level_set = false, bootstrap_set = false;
};

void run_estimate(EstimateArgs a) {
    if (!a.config_path.empty()) {
        json cfg = load_json_file(a.config_path);
        if (!a.zeta_set) a.zeta = cfg.value("zeta", a.zeta);
        if (!a.level_set) a.level = cfg.value("level", a.level);
        if (!a.bootstrap_set) a.bootstrap = cfg.value("bootstrap", a.bootstrap);
        if (a.features_arg.empty() && cfg.contains("features"))
            a.features_arg = cfg.at("features").dump();
        if (!a.seed && cfg.contains("seed"))
            a.seed = cfg.at("seed").get<std::uint64_t>();
    }
    scm::PanelDataset data = scm::load_panel_csv(a.input, a.t0);
    json recipe = parse_feature_arg(a.features_arg);
    scm::FeatureMatrix phi = scm::build_features(data, recipe);
    scm::BalanceSolution w = scm::solve_dual(phi, data.treated(), a.zeta);
    scm::EventStudyResult path = scm::sc_effect_path(data, w);

    json effective{{"command", "estimate"}, {"input", a.input},      {"t0", a.t0},
                   {"zeta", a.zeta},        {"features", recipe},    {"bootstrap", a.bootstrap},
                   {"level", a.level},      {"stratified", a.stratified}};
    json out = provenance(effective, a.seed);
    out["n1"] = data.n_treated();
    out["pi_bar"] = data.pi_bar();
    out["event_time"] = path.event_time;
    std::vector<double> tau(path.tau.data(), path.tau.data() + path.tau.size());
    out["tau_hat"] = tau;
    out["kkt_residual"] = w.kkt_residual;
    out["iterations"] = w.iterations;
    std::vector<double> imb(w.imbalance.data(), w.imbalance.data() + w.imbalance.size());
    out["imbalance"] = imb;

    if (a.bootstrap > 0) {
        if (!a.seed) throw scm::RangeError("--seed is required with --bootstrap");
        scm::BootstrapOptions bo;
        bo.b_boot = a.bootstrap;
        bo.level = a.level;
        bo.seed = *a.seed;
        bo.threads = a.threads;
        bo.stratified = a.stratified;
        scm::BootstrapResult br = scm::bootstrap_sc(data, recipe, a.zeta, bo);
        out["bootstrap"] = {{"point", br.point},   {"se", br.se},
                            {"ci_low", br.ci_low}, {"ci_high", br.ci_high},
                            {"b_boot", br.b_boot}, {"skipped", br.skipped},
                            {"skip_warning", br.skip_warning}};
    }
    write_output(out, a.out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic-control panel toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", scm::kVersion);

    // ---- simulate ----------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "draw a panel from a DGP spec");
    std::string sim_spec, sim_out, sim_latent;
    std::uint64_t sim_seed = 0;
    sim->add_option("--spec", sim_spec, "DGP spec JSON file")->required();
    sim->add_option("--seed", sim_seed, "RNG seed")->required();
    sim->add_option("--out", sim_out, "panel CSV path")->required();
    sim->add_option("--latent", sim_latent, "optional latent JSON path");

    // ---- estimate ----------------------------------------------------
    auto* est = app.add_subcommand("estimate", "SC effect path on a panel CSV");
    EstimateArgs ea;
    std::uint64_t est_seed = 0;
    est->add_option("--input", ea.input, "panel CSV")->required();
    est->add_option("--t0", ea.t0, "number of pretreatment periods")->required();
    est->add_option("--config", ea.config_path, "JSON config file (flags override)");
    auto* est_zeta = est->add_option("--zeta", ea.zeta, "entropy/imbalance tuning (default 1.0)");
    est->add_option("--features", ea.features_arg,
                    "recipe JSON or shorthand, e.g. lags,autocorr:8");
    auto* est_boot = est->add_option("--bootstrap", ea.bootstrap, "bootstrap replicates (0 = off)");
    auto* est_level = est->add_option("--level", ea.level, "CI level (default 0.9)");
    auto* est_seed_opt = est->add_option("--seed", est_seed, "bootstrap seed");
    est->add_flag("--stratified", ea.stratified, "hold group sizes fixed when resampling");
    est->add_option("--threads", ea.threads, "worker threads (0 = all)");
    est->add_option("--out", ea.out, "output JSON ('-' = stdout)");

    // ---- event-study ---------------------------------------------------
    auto* ev = app.add_subcommand("event-study", "SC or TWFE event-study path");
    std::string ev_input, ev_estimator = "twfe", ev_out;
    int ev_t0 = 0;
    double ev_zeta = 1.0;
    ev->add_option("--input", ev_input, "panel CSV")->required();
    ev->add_option("--t0", ev_t0, "pretreatment periods")->required();
    ev->add_option("--estimator", ev_estimator, "twfe|sc (default twfe)");
    ev->add_option("--zeta", ev_zeta, "zeta for the SC variant");
    ev->add_option("--out", ev_out, "output JSON");

    // ---- diagnose ------------------------------------------------------
    auto* dg = app.add_subcommand("diagnose", "autocorrelation balance statistic");
    std::string dg_input, dg_weights = "sc", dg_out;
    int dg_t0 = 0;
    double dg_zeta = 1.0;
    bool dg_demean = false;
    dg->add_option("--input", dg_input, "panel CSV")->required();
    dg->add_option("--t0", dg_t0, "pretreatment periods")->required();
    dg->add_option("--weights", dg_weights, "sc|uniform");
    dg->add_option("--zeta", dg_zeta, "zeta for SC weights");
    dg->add_flag("--demean", dg_demean, "demean series before the autocorrelation");
    dg->add_option("--out", dg_out, "output JSON");

    // ---- placebo -------------------------------------------------------
    auto* pl = app.add_subcommand("placebo", "shift the adoption date to t0-1");
    std::string pl_input, pl_out;
    int pl_t0 = 0;
    double pl_zeta = 1.0;
    pl->add_option("--input", pl_input, "panel CSV")->required();
    pl->add_option("--t0", pl_t0, "pretreatment periods")->required();
    pl->add_option("--zeta", pl_zeta, "zeta for SC weights");
    pl->add_option("--out", pl_out, "output JSON");

    // ---- effective-periods ----------------------------------------------
    auto* ep = app.add_subcommand("effective-periods", "T_e bound over a t0 grid");
    std::string ep_spec, ep_grid, ep_out;
    std::uint64_t ep_seed = 1;
    ep->add_option("--spec", ep_spec, "interactive-FE DGP spec JSON")->required();
    ep->add_option("--t0-grid", ep_grid, "comma-separated t0 values")->required();
    ep->add_option("--seed", ep_seed, "basis seed");
    ep->add_option("--out", ep_out, "output CSV (t0,t_e,bound)");

    // ---- montecarlo -----------------------------------------------------
    auto* mc = app.add_subcommand("montecarlo", "B-replication study");
    std::string mc_spec, mc_pipeline, mc_out, mc_json_out;
    int mc_b = 200;
    std::uint64_t mc_seed = 0;
    int mc_threads = 0;
    mc->add_option("--spec", mc_spec, "DGP spec JSON file")->required();
    mc->add_option("--pipeline", mc_pipeline, "pipeline config JSON file");
    mc->add_option("--B", mc_b, "replications (default 200)");
    mc->add_option("--seed", mc_seed, "study seed")->required();
    mc->add_option("--threads", mc_threads, "worker threads (0 = all)");
    mc->add_option("--out", mc_out, "summary CSV path")->required();
    mc->add_option("--json-out", mc_json_out, "JSON mirror path");

    // ---- oracle ----------------------------------------------------------
    auto* orc = app.add_subcommand("oracle", "population projections and bias plug-in");
    std::string orc_spec, orc_out;
    double orc_zeta = 1.0;
    long orc_nexp = 0, orc_pop = 200000;
    std::uint64_t orc_seed = 0;
    orc->add_option("--spec", orc_spec, "DGP spec JSON file")->required();
    orc->add_option("--zeta", orc_zeta, "experiment zeta (ridge scale)");
    orc->add_option("--n-exp", orc_nexp, "experiment sample size (ridge scale)")->required();
    orc->add_option("--population", orc_pop, "population size (default 2e5)");
    orc->add_option("--seed", orc_seed, "population seed")->required();
    orc->add_option("--out", orc_out, "output JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) {
            scm::DgpSpec spec = scm::DgpSpec::from_json(load_json_file(sim_spec));
            scm::SimulatedPanel panel = scm::simulate(spec, sim_seed);
            scm::write_panel_csv(panel.panel, sim_out);
            json effective{{"command", "simulate"}, {"spec", spec.to_json()},
                           {"out", sim_out}};
            if (!sim_latent.empty()) {
                json latent = provenance(effective, sim_seed);
                auto vec = [](const Eigen::VectorXd& v) {
                    return std::vector<double>(v.data(), v.data() + v.size());
                };
                latent["theta"] = vec(panel.theta);
                latent["pi"] = vec(panel.pi);
                latent["mu"] = vec(panel.mu);
                latent["nu"] = vec(panel.nu);
                latent["component"] = panel.component;
                write_output(latent, sim_latent);
            }
            // seed/digest/version echo so the run is reproducible from stdout
            std::cout << provenance(effective, sim_seed).dump(2) << std::endl;
        } else if (est->parsed()) {
            if (*est_seed_opt) ea.seed = est_seed;
            ea.zeta_set = est_zeta->count() > 0;
            ea.level_set = est_level->count() > 0;
            ea.bootstrap_set = est_boot->count() > 0;
            run_estimate(ea);
        } else if (ev->parsed()) {
            scm::PanelDataset data = scm::load_panel_csv(ev_input, ev_t0);
            scm::EventStudyResult path;
            if (ev_estimator == "twfe") {
                path = scm::twfe_event_study(data);
            } else if (ev_estimator == "sc") {
                scm::FeatureMatrix phi = scm::lagged_levels(data);
                scm::BalanceSolution w = scm::solve_dual(phi, data.treated(), ev_zeta);
                path = scm::sc_effect_path(data, w);
            } else {
                throw CLI::ValidationError("--estimator must be twfe or sc");
            }
            json effective{{"command", "event-study"},
                           {"input", ev_input},
                           {"t0", ev_t0},
                           {"estimator", ev_estimator},
                           {"zeta", ev_zeta}};
            json out = provenance(effective, std::nullopt);
            out["event_time"] = path.event_time;
            std::vector<double> tau(path.tau.data(), path.tau.data() + path.tau.size());
            out["tau"] = tau;
            out["normalization"] = path.normalization;
            write_output(out, ev_out);
        } else if (dg->parsed()) {
            scm::PanelDataset data = scm::load_panel_csv(dg_input, dg_t0);
            json effective{{"command", "diagnose"}, {"input", dg_input}, {"t0", dg_t0},
                           {"weights", dg_weights}, {"zeta", dg_zeta},
                           {"demean", dg_demean}};
            json out = provenance(effective, std::nullopt);
            scm::BalanceDiagnostic diag;
            if (dg_weights == "sc") {
                scm::FeatureMatrix phi = scm::lagged_levels(data);
                scm::BalanceSolution w = scm::solve_dual(phi, data.treated(), dg_zeta);
                diag = scm::autocorr_imbalance(data, &w, dg_demean);
            } else if (dg_weights == "uniform") {
                diag = scm::autocorr_imbalance(data, nullptr, dg_demean);
            } else {
                throw CLI::ValidationError("--weights must be sc or uniform");
            }
            out["rho_hat"] = diag.rho_hat;
            out["weight_kind"] = dg_weights;
            out["n_degenerate"] = diag.n_degenerate;
            write_output(out, dg_out);
        } else if (pl->parsed()) {
            scm::PanelDataset data = scm::load_panel_csv(pl_input, pl_t0);
            scm::EventStudyResult sc_path =
                scm::placebo_shift(data, scm::EstimatorTag::SC, pl_zeta);
            scm::EventStudyResult tw_path =
                scm::placebo_shift(data, scm::EstimatorTag::TWFE, pl_zeta);
            json effective{{"command", "placebo"}, {"input", pl_input},
                           {"t0", pl_t0}, {"zeta", pl_zeta}};
            json out = provenance(effective, std::nullopt);
            out["sc"] = {{"k0", sc_path.at(0)}, {"k1", sc_path.at(1)}};
            out["twfe"] = {{"k0", tw_path.at(0)}, {"k1", tw_path.at(1)}};
            write_output(out, pl_out);
        } else if (ep->parsed()) {
            json raw = load_json_file(ep_spec);
            scm::DgpSpec spec = scm::DgpSpec::from_json(raw);
            // an explicit f_dim is honored (capped at t0); omitting it makes
            // the factor count track the growing t0 grid
            bool fixed_f = raw.contains("f_dim");
            std::vector<int> grid;
            std::stringstream ss(ep_grid);
            std::string tok;
            while (std::getline(ss, tok, ',')) grid.push_back(std::stoi(tok));
            std::ofstream out_csv;
            std::ostream* os = &std::cout;
            if (!ep_out.empty()) {
                out_csv.open(ep_out, std::ios::trunc);
                if (!out_csv) throw scm::IoError("cannot write " + ep_out);
                os = &out_csv;
            }
            *os << "t0,t_e,bound\n";
            for (int t0 : grid) {
                scm::DgpSpec s = spec;
                s.t0 = t0;
                s.f_dim = fixed_f ? std::min(spec.f_dim, t0) : t0;
                scm::FactorStructure fs =
                    scm::build_factor_structure(s.t0, s.f_dim, s.kappa, ep_seed);
                scm::EffectivePeriods te =
                    scm::effective_periods_svd(fs.psi, fs.psi_next, s.sigma_eps2);
                *os << t0 << ',' << te.t_e << ',' << te.approx_error2 << '\n';
            }
            json effective{{"command", "effective-periods"}, {"spec", spec.to_json()},
                           {"t0_grid", ep_grid}, {"f_dim_tracks_t0", !fixed_f}};
            std::cerr << provenance(effective, ep_seed).dump() << '\n';
        } else if (mc->parsed()) {
            scm::DgpSpec spec = scm::DgpSpec::from_json(load_json_file(mc_spec));
            scm::PipelineConfig pipeline;
            if (!mc_pipeline.empty())
                pipeline = scm::PipelineConfig::from_json(load_json_file(mc_pipeline));
            pipeline.threads = mc_threads;
            scm::McSummary summary = scm::run_study(spec, pipeline, mc_b, mc_seed);
            scm::emit_summary_csv(summary, mc_out);
            // the JSON mirror always exists; it carries the config provenance
            std::string mirror = mc_json_out.empty() ? mc_out + ".json" : mc_json_out;
            write_output(summary_to_json(summary), mirror);
            std::cerr << "wrote " << mc_out << " and " << mirror << " (B=" << summary.b
                      << ", excluded=" << summary.excluded << ")\n";
        } else if (orc->parsed()) {
            scm::DgpSpec spec = scm::DgpSpec::from_json(load_json_file(orc_spec));
            scm::PopulationFit fit =
                scm::fit_population_objects(spec, orc_zeta, orc_nexp, orc_pop, orc_seed);
            json effective{{"command", "oracle"},   {"spec", spec.to_json()},
                           {"zeta", orc_zeta},      {"n_exp", orc_nexp},
                           {"population", orc_pop}};
            json out = provenance(effective, orc_seed);
            out["bias"] = fit.bias;
            out["e_pi"] = fit.e_pi;
            out["beta_mu"] = fit.beta_mu;
            out["u_mean"] = fit.u_mean;
            out["u_sq_mean"] = fit.u_sq_mean;
            out["foc_max_abs"] = fit.foc_max_abs;
            write_output(out, orc_out);
        }
    } catch (const scm::ScmError& e) {
        std::cerr << "error:" << e.tag() << ' ' << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error:internal " << e.what() << '\n';
        return 1;
    }
    return 0;
}
