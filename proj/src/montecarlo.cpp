#include "scm/montecarlo.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "scm/threads.hpp"

namespace scm {

nlohmann::json PipelineConfig::to_json() const {
    return {{"run_sc", run_sc},
            {"run_twfe", run_twfe},
            {"run_diagnostics", run_diagnostics},
            {"run_placebo", run_placebo},
            {"zeta", zeta},
            {"diag_demean", diag_demean},
            {"tol", solver.tol},
            {"max_iter", solver.max_iter}};
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
    PipelineConfig c;
    c.run_sc = j.value("run_sc", c.run_sc);
    c.run_twfe = j.value("run_twfe", c.run_twfe);
    c.run_diagnostics = j.value("run_diagnostics", c.run_diagnostics);
    c.run_placebo = j.value("run_placebo", c.run_placebo);
    c.zeta = j.value("zeta", c.zeta);
    c.diag_demean = j.value("diag_demean", c.diag_demean);
    c.solver.tol = j.value("tol", c.solver.tol);
    c.solver.max_iter = j.value("max_iter", c.solver.max_iter);
    return c;
}

std::string config_digest(const nlohmann::json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

SeriesSummary summarize_series(const std::vector<double>& values) {
    SeriesSummary s;
    const auto n = values.size();
    if (n == 0) return s;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    s.mean = mean;
    s.sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    auto rank = [&](double p) {
        auto r = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
        return sorted[std::min(std::max<std::size_t>(r, 1), n) - 1];
    };
    s.q05 = rank(0.05);
    s.q95 = rank(0.95);
    return s;
}

namespace {

struct RepResult {
    bool ok = false;
    std::map<int, double> sc;
    std::map<int, double> twfe;
    double diag_sc = 0.0;
    double diag_uniform = 0.0;
    double placebo_sc[2] = {0.0, 0.0};
    double placebo_twfe[2] = {0.0, 0.0};
};

}  // namespace

McSummary run_study(const DgpSpec& spec, const PipelineConfig& pipeline, int b,
                    std::uint64_t seed) {
    if (b < 2) throw RangeError("need at least 2 replications");
    spec.validate();

    std::vector<RepResult> reps(b);
    std::vector<std::uint8_t> failed(b, 0);

    parallel_for(b, pipeline.threads, [&](int r) {
        const std::uint64_t rep_seed = seed ^ static_cast<std::uint64_t>(r);
        SimulatedPanel sim = simulate(spec, rep_seed);
        RepResult& out = reps[r];
        try {
            std::optional<BalanceSolution> w;
            if (pipeline.run_sc || pipeline.run_diagnostics) {
                FeatureMatrix phi = lagged_levels(sim.panel);
                w = solve_dual(phi, sim.panel.treated(), pipeline.zeta, pipeline.solver);
            }
            if (pipeline.run_sc) {
                EventStudyResult path = sc_effect_path(sim.panel, *w);
                for (std::size_t i = 0; i < path.event_time.size(); ++i)
                    out.sc[path.event_time[i]] = path.tau[static_cast<Eigen::Index>(i)];
            }
            if (pipeline.run_twfe) {
                EventStudyResult path = twfe_event_study(sim.panel);
                for (std::size_t i = 0; i < path.event_time.size(); ++i)
                    out.twfe[path.event_time[i]] = path.tau[static_cast<Eigen::Index>(i)];
            }
            if (pipeline.run_diagnostics) {
                out.diag_sc =
                    autocorr_imbalance(sim.panel, &*w, pipeline.diag_demean).rho_hat;
                out.diag_uniform =
                    autocorr_imbalance(sim.panel, nullptr, pipeline.diag_demean).rho_hat;
            }
            if (pipeline.run_placebo) {
                EventStudyResult ps = placebo_shift(sim.panel, EstimatorTag::SC,
                                                    pipeline.zeta, pipeline.solver);
                EventStudyResult pt = placebo_shift(sim.panel, EstimatorTag::TWFE,
                                                    pipeline.zeta, pipeline.solver);
                out.placebo_sc[0] = ps.at(0);
                out.placebo_sc[1] = ps.at(1);
                out.placebo_twfe[0] = pt.at(0);
                out.placebo_twfe[1] = pt.at(1);
            }
            out.ok = true;
        } catch (const ConvergenceError&) {
            failed[r] = 1;
        } catch (const OverflowError&) {
            failed[r] = 1;
        }
    });

    McSummary summary;
    summary.b = b;
    summary.seed = seed;
    for (auto f : failed) summary.excluded += f;
    if (summary.excluded * 20 > b)
        throw StudyError("solver failure rate above 5%: " + std::to_string(summary.excluded) +
                         "/" + std::to_string(b));

    nlohmann::json cfg{{"dgp", spec.to_json()}, {"pipeline", pipeline.to_json()}, {"B", b}};
    summary.effective_config = cfg;
    summary.effective_config["seed"] = seed;
    summary.spec_hash = config_digest(cfg);

    auto collect = [&](auto getter) {
        std::vector<double> v;
        v.reserve(b);
        for (int r = 0; r < b; ++r)
            if (reps[r].ok) v.push_back(getter(reps[r]));
        return v;
    };

    if (pipeline.run_sc || pipeline.run_twfe) {
        for (auto [name, member] :
             {std::pair{std::string("sc"), &RepResult::sc},
              std::pair{std::string("twfe"), &RepResult::twfe}}) {
            if ((name == "sc" && !pipeline.run_sc) || (name == "twfe" && !pipeline.run_twfe))
                continue;
            const auto& first = [&]() -> const std::map<int, double>& {
                for (const auto& rep : reps)
                    if (rep.ok) return rep.*member;
                throw StudyError("all replications failed");
            }();
            for (const auto& [k, unused] : first) {
                (void)unused;
                int kk = k;
                summary.estimators[name][kk] =
                    summarize_series(collect([&, kk](const RepResult& r) {
                        return (r.*member).at(kk);
                    }));
            }
        }
    }

    if (pipeline.run_diagnostics) {
        for (auto [name, member] :
             {std::pair{std::string("autocorr_sc"), &RepResult::diag_sc},
              std::pair{std::string("autocorr_uniform"), &RepResult::diag_uniform}}) {
            std::vector<double> raw = collect([member](const RepResult& r) { return r.*member; });
            SeriesSummary rawsum = summarize_series(raw);
            if (rawsum.sd > 0.0)
                for (double& v : raw) v /= rawsum.sd;
            summary.diagnostics[name] = summarize_series(raw);
        }
    }

    if (pipeline.run_placebo) {
        auto frac_positive = [&](auto getter) {
            std::vector<double> v = collect(getter);
            double c = 0.0;
            for (double x : v) c += x > 0.0;
            return v.empty() ? 0.0 : c / static_cast<double>(v.size());
        };
        summary.positive_fraction["placebo_sc_k0"] =
            frac_positive([](const RepResult& r) { return r.placebo_sc[0]; });
        summary.positive_fraction["placebo_sc_k1"] =
            frac_positive([](const RepResult& r) { return r.placebo_sc[1]; });
        summary.positive_fraction["placebo_twfe_k0"] =
            frac_positive([](const RepResult& r) { return r.placebo_twfe[0]; });
        summary.positive_fraction["placebo_twfe_k1"] =
            frac_positive([](const RepResult& r) { return r.placebo_twfe[1]; });
        for (auto [name, member] :
             {std::pair{std::string("placebo_sc"), &RepResult::placebo_sc},
              std::pair{std::string("placebo_twfe"), &RepResult::placebo_twfe}}) {
            for (int k = 0; k < 2; ++k)
                summary.estimators[name][k] = summarize_series(
                    collect([member, k](const RepResult& r) { return (r.*member)[k]; }));
        }
    }

    return summary;
}

void emit_summary_csv(const McSummary& summary, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << "section,name,event_time,statistic,value\n";
    out << "meta,spec_hash,,," << summary.spec_hash << '\n';
    out << "meta,seed,,count," << summary.seed << '\n';
    out << "meta,b,,count," << summary.b << '\n';
    out << "meta,excluded,,count," << summary.excluded << '\n';
    char buf[32];
    auto fmt = [&](double v) {
        auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
        (void)ec;
        return std::string(buf, p);
    };
    for (const auto& [est, series] : summary.estimators) {
        for (const auto& [k, s] : series) {
            out << "estimator," << est << ',' << k << ",mean," << fmt(s.mean) << '\n';
            out << "estimator," << est << ',' << k << ",sd," << fmt(s.sd) << '\n';
            out << "estimator," << est << ',' << k << ",q05," << fmt(s.q05) << '\n';
            out << "estimator," << est << ',' << k << ",q95," << fmt(s.q95) << '\n';
        }
    }
    for (const auto& [name, s] : summary.diagnostics) {
        out << "diagnostic," << name << ",,mean," << fmt(s.mean) << '\n';
        out << "diagnostic," << name << ",,sd," << fmt(s.sd) << '\n';
        out << "diagnostic," << name << ",,q05," << fmt(s.q05) << '\n';
        out << "diagnostic," << name << ",,q95," << fmt(s.q95) << '\n';
    }
    for (const auto& [name, v] : summary.positive_fraction)
        out << "scalar," << name << ",,positive_fraction," << fmt(v) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

nlohmann::json summary_to_json(const McSummary& summary) {
    nlohmann::json j;
    j["b"] = summary.b;
    j["excluded"] = summary.excluded;
    j["seed"] = summary.seed;
    j["spec_hash"] = summary.spec_hash;
    j["config"] = summary.effective_config;
    for (const auto& [est, series] : summary.estimators)
        for (const auto& [k, s] : series)
            j["estimators"][est][std::to_string(k)] = {
                {"mean", s.mean}, {"sd", s.sd}, {"q05", s.q05}, {"q95", s.q95}};
    for (const auto& [name, s] : summary.diagnostics)
        j["diagnostics"][name] = {
            {"mean", s.mean}, {"sd", s.sd}, {"q05", s.q05}, {"q95", s.q95}};
    for (const auto& [name, v] : summary.positive_fraction)
        j["positive_fraction"][name] = v;
    return j;
}

McSummary summary_numbers_from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    McSummary s;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string section, name, k, stat, value;
        std::getline(ss, section, ',');
        std::getline(ss, name, ',');
        std::getline(ss, k, ',');
        std::getline(ss, stat, ',');
        std::getline(ss, value, ',');
        if (section == "meta") {
            if (name == "spec_hash") s.spec_hash = value;
            if (name == "seed") s.seed = std::stoull(value);
            if (name == "b") s.b = std::stoi(value);
            if (name == "excluded") s.excluded = std::stoi(value);
            continue;
        }
        double v = std::stod(value);
        auto put = [&](SeriesSummary& tgt) {
            if (stat == "mean") tgt.mean = v;
            else if (stat == "sd") tgt.sd = v;
            else if (stat == "q05") tgt.q05 = v;
            else if (stat == "q95") tgt.q95 = v;
        };
        if (section == "estimator") put(s.estimators[name][std::stoi(k)]);
        else if (section == "diagnostic") put(s.diagnostics[name]);
        else if (section == "scalar") s.positive_fraction[name] = v;
    }
    return s;
}

}  // namespace scm
