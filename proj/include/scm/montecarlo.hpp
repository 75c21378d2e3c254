#pragma once

#include <map>
#include <string>

#include "scm/diagnostics.hpp"
#include "scm/dgp.hpp"
#include "scm/theory.hpp"

#include "json.hpp"

namespace scm {

// What each replication computes. Diagnostics and placebo runs are opt-in
// because the balance-table designs skip the estimators entirely.
struct PipelineConfig {
    bool run_sc = true;
    bool run_twfe = true;
    bool run_diagnostics = false;
    bool run_placebo = false;
    double zeta = 1.0;
    bool diag_demean = false;  // balance-table convention: raw autocorrelations
    int threads = 0;
    SolverOptions solver;

    nlohmann::json to_json() const;
    static PipelineConfig from_json(const nlohmann::json& j);
};

struct SeriesSummary {
    double mean = 0.0;
    double sd = 0.0;
    double q05 = 0.0;
    double q95 = 0.0;
};

// Per-estimator event-study statistics plus normalized diagnostics over B
// replications. Quantiles use the nearest-rank convention, which matters at
// B = 200 for the 5%/95% points.
struct McSummary {
    int b = 0;
    int excluded = 0;  // replications dropped on ConvergenceError
    std::uint64_t seed = 0;
    std::string spec_hash;
    nlohmann::json effective_config;

    // "sc" / "twfe" -> event time -> summary
    std::map<std::string, std::map<int, SeriesSummary>> estimators;
    // "autocorr_sc" / "autocorr_uniform" -> summary of per-rep statistic
    // divided by its cross-replication SD
    std::map<std::string, SeriesSummary> diagnostics;
    // "placebo_sc_k0" etc -> fraction of replications with a positive value
    std::map<std::string, double> positive_fraction;
};

// B independent simulate -> estimate -> diagnose replications, replication r
// seeded with seed ^ r. Deterministic for any thread count. Replications on
// which the solver fails are excluded and counted; a failure rate above 5%
// raises StudyError.
McSummary run_study(const DgpSpec& spec, const PipelineConfig& pipeline, int b,
                    std::uint64_t seed);

void emit_summary_csv(const McSummary& summary, const std::string& path);
nlohmann::json summary_to_json(const McSummary& summary);
McSummary summary_numbers_from_csv(const std::string& path);  // round-trip check helper

SeriesSummary summarize_series(const std::vector<double>& values);

// FNV-1a digest of the canonical spec+config serialization.
std::string config_digest(const nlohmann::json& j);

}  // namespace scm
