#pragma once

// Builder-critic discovery loop: iteratively propose candidate models, fit
// them to a historical price path, score fit quality plus structural novelty,
// and keep an append-only memory of everything tried.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdekit/agents.hpp"
#include "sdekit/calibrate.hpp"
#include "sdekit/metrics.hpp"
#include "sdekit/model.hpp"
#include "sdekit/rng.hpp"
#include "sdekit/simulate.hpp"
#include "sdekit/stats.hpp"
#include "sdekit/symbolic.hpp"

namespace sdekit {

class DiscoveryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class CandidateStatus { Ok, ImplementFailed, CalibrateFailed };

inline std::string to_string(CandidateStatus s) {
    switch (s) {
        case CandidateStatus::Ok: return "ok";
        case CandidateStatus::ImplementFailed: return "implement-failed";
        case CandidateStatus::CalibrateFailed: return "calibrate-failed";
    }
    throw std::invalid_argument("unknown candidate status");
}

inline CandidateStatus candidate_status_from(const std::string& name) {
    if (name == "ok") return CandidateStatus::Ok;
    if (name == "implement-failed") return CandidateStatus::ImplementFailed;
    if (name == "calibrate-failed") return CandidateStatus::CalibrateFailed;
    throw std::invalid_argument("unknown candidate status: " + name);
}

struct ScorerWeights {
    double decay = 1.0;  // exponent scale on the normalized metric gap
    double floor = 1.0;  // denominator floor so near-zero metrics stay comparable
};

struct ScoreParts {
    int novelty_sub = 0;  // 0..50
    int metrics_sub = 0;  // 0..50
    int combined = 0;     // 0..100
};

// Uniform mean of the per-metric relative gaps and the KS statistic.
inline double metric_gap(const CandidateEvaluation& ev, const ScorerWeights& w = {}) {
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& [name, member] : metric_fields()) {
        auto it = ev.comparison.metric_deltas.find(name);
        if (it == ev.comparison.metric_deltas.end())
            throw std::invalid_argument(std::string("metric_gap: missing delta for ") + name);
        double reference = std::abs(ev.historical.*member);
        acc += it->second / (reference + w.floor);
        ++n;
    }
    acc += ev.comparison.ks_statistic;
    ++n;
    return acc / static_cast<double>(n);
}

inline ScoreParts score_candidate(const CandidateEvaluation& ev, int novelty,
                                  const ScorerWeights& w = {}) {
    novelty = std::clamp(novelty, 0, 100);
    ScoreParts parts;
    parts.novelty_sub = static_cast<int>(std::llround(novelty / 2.0));
    double gap = metric_gap(ev, w);
    parts.metrics_sub = static_cast<int>(std::llround(50.0 * std::exp(-w.decay * gap)));
    parts.combined = parts.novelty_sub + parts.metrics_sub;
    return parts;
}

struct CandidateRecord {
    int iteration = 0;  // 1-based
    std::string source;  // canonical DSL render
    CandidateStatus status = CandidateStatus::Ok;
    std::vector<double> init_params;
    std::vector<double> fitted_params;  // empty unless status == Ok
    double loss = std::numeric_limits<double>::quiet_NaN();
    DistComparison comparison;  // zeroed unless status == Ok
    int novelty = 0;      // 0..100
    int novelty_sub = 0;  // 0..50
    int metrics_sub = 0;  // 0..50
    int combined = 0;     // 0..100
    std::string summary;

    [[nodiscard]] bool ok() const { return status == CandidateStatus::Ok; }
};

struct DiscoveryMemory {
    std::vector<CandidateRecord> records;
    std::vector<Proposal> pool;  // proposed but not yet tested
    bool loop_failed = false;

    [[nodiscard]] std::vector<std::string> tested_sources() const {
        std::vector<std::string> out;
        out.reserve(records.size());
        for (const auto& r : records) out.push_back(r.source);
        return out;
    }
};

struct DiscoveryConfig {
    int iterations = 15;
    int retry_budget = 3;  // build retries per candidate, and proposer retries
    CalibConfig calib;
    ScorerWeights scorer;
    std::uint64_t seed = 0;
    std::vector<CandidateRecord> initial_records;  // resume from an earlier run
    std::function<void(const CandidateRecord&)> on_record;
    // Optional critic overrides; the defaults are the deterministic offline ones.
    std::function<int(const SdeModel&, const std::vector<SdeModel>&)> novelty;
    std::function<std::string(const CandidateRecord&)> summarize;
};

// Structural novelty against everything already tested: 100 for the first
// candidate, otherwise 100 * (1 - mean pairwise similarity), clamped.
inline int offline_novelty(const SdeModel& candidate, const std::vector<SdeModel>& tested) {
    if (tested.empty()) return 100;
    double acc = 0.0;
    for (const auto& m : tested) acc += similarity(candidate, m);
    double mean_sim = acc / static_cast<double>(tested.size());
    auto score = std::llround(100.0 * (1.0 - mean_sim));
    return static_cast<int>(std::clamp<long long>(score, 0, 100));
}

inline std::string offline_summary(const CandidateRecord& r) {
    if (!r.ok()) return r.source + ": " + to_string(r.status) + (r.summary.empty() ? "" : ": " + r.summary);
    std::string out = r.source + ": loss " + detail::render_number(r.loss);
    out += ", ks " + detail::render_number(r.comparison.ks_statistic);
    out += ", novelty " + std::to_string(r.novelty) + "/100";
    out += ", score " + std::to_string(r.combined) + "/100";
    return out;
}

// Short textual digest of the historical window, for proposer prompts.
inline std::string stats_digest(std::span<const double> prices) {
    if (prices.empty()) return "(no data)";
    double lo = prices[0];
    double hi = prices[0];
    double acc = 0.0;
    for (double p : prices) {
        lo = std::min(lo, p);
        hi = std::max(hi, p);
        acc += p;
    }
    double mean = acc / static_cast<double>(prices.size());
    std::string out = std::to_string(prices.size()) + " prices";
    out += ", first " + detail::render_number(prices.front());
    out += ", last " + detail::render_number(prices.back());
    out += ", mean " + detail::render_number(mean);
    out += ", min " + detail::render_number(lo);
    out += ", max " + detail::render_number(hi);
    return out;
}

// Next candidate to test: the pool entry maximizing structural novelty per
// unit complexity; ties keep pool order. Throws when the pool is empty.
inline std::size_t choose_next(const std::vector<Proposal>& pool,
                               const std::vector<SdeModel>& tested) {
    if (pool.empty()) throw DiscoveryError("choose_next: candidate pool is exhausted");
    std::size_t best = 0;
    double best_priority = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pool.size(); ++i) {
        double mean_sim = 0.0;
        if (!tested.empty()) {
            double acc = 0.0;
            for (const auto& m : tested) acc += similarity(pool[i].model, m);
            mean_sim = acc / static_cast<double>(tested.size());
        }
        double priority = (1.0 - mean_sim) / complexity(pool[i].model);
        if (priority > best_priority) {
            best_priority = priority;
            best = i;
        }
    }
    return best;
}

// Lowest-loss successful record; ties prefer higher combined score, then the
// earlier iteration. Throws when no candidate ever succeeded.
inline const CandidateRecord& best_model(const DiscoveryMemory& memory) {
    const CandidateRecord* best = nullptr;
    for (const auto& r : memory.records) {
        if (!r.ok()) continue;
        if (best == nullptr || r.loss < best->loss ||
            (r.loss == best->loss && r.combined > best->combined)) {
            best = &r;
        }
    }
    if (best == nullptr)
        throw DiscoveryError("best_model: no candidate was successfully calibrated");
    return *best;
}

// --- JSONL persistence -------------------------------------------------------

inline nlohmann::json record_to_json(const CandidateRecord& r) {
    nlohmann::json j;
    j["iteration"] = r.iteration;
    j["source"] = r.source;
    j["status"] = to_string(r.status);
    j["init_params"] = r.init_params;
    j["fitted_params"] = r.fitted_params;
    if (std::isfinite(r.loss)) j["loss"] = r.loss;
    j["novelty"] = r.novelty;
    j["novelty_sub"] = r.novelty_sub;
    j["metrics_sub"] = r.metrics_sub;
    j["combined"] = r.combined;
    j["summary"] = r.summary;
    if (r.ok()) {
        nlohmann::json cmp;
        cmp["ks_statistic"] = r.comparison.ks_statistic;
        cmp["wasserstein_1"] = r.comparison.wasserstein_1;
        cmp["mape"] = r.comparison.mape;
        cmp["metric_deltas"] = r.comparison.metric_deltas;
        j["comparison"] = std::move(cmp);
    }
    return j;
}

inline CandidateRecord record_from_json(const nlohmann::json& j) {
    CandidateRecord r;
    r.iteration = j.at("iteration").get<int>();
    r.source = j.at("source").get<std::string>();
    r.status = candidate_status_from(j.at("status").get<std::string>());
    r.init_params = j.at("init_params").get<std::vector<double>>();
    r.fitted_params = j.at("fitted_params").get<std::vector<double>>();
    r.loss = j.contains("loss") ? j.at("loss").get<double>()
                                : std::numeric_limits<double>::quiet_NaN();
    r.novelty = j.at("novelty").get<int>();
    r.novelty_sub = j.at("novelty_sub").get<int>();
    r.metrics_sub = j.at("metrics_sub").get<int>();
    r.combined = j.at("combined").get<int>();
    r.summary = j.at("summary").get<std::string>();
    if (j.contains("comparison")) {
        const auto& cmp = j.at("comparison");
        r.comparison.ks_statistic = cmp.at("ks_statistic").get<double>();
        r.comparison.wasserstein_1 = cmp.at("wasserstein_1").get<double>();
        r.comparison.mape = cmp.at("mape").get<double>();
        r.comparison.metric_deltas =
            cmp.at("metric_deltas").get<std::map<std::string, double>>();
    }
    return r;
}

inline void append_record(std::ostream& out, const CandidateRecord& r) {
    out << record_to_json(r).dump() << '\n';
}

// Parses one JSON record per non-empty line.
inline std::vector<CandidateRecord> load_records(std::istream& in) {
    std::vector<CandidateRecord> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw std::runtime_error("memory line " + std::to_string(line_no) +
                                     ": malformed JSON record");
        try {
            out.push_back(record_from_json(j));
        } catch (const std::exception& e) {
            throw std::runtime_error("memory line " + std::to_string(line_no) + ": " +
                                     e.what());
        }
    }
    return out;
}

// --- The loop ----------------------------------------------------------------

namespace detail {

struct BuildOutcome {
    CandidateStatus status = CandidateStatus::Ok;
    std::vector<double> init;
    CalibResult fit;
    CandidateEvaluation evaluation;
    std::string error;
};

inline std::vector<double> jitter_params(std::vector<double> theta, Rng& rng) {
    for (double& v : theta) v += (0.5 * std::abs(v) + 0.1) * rng.next_gaussian();
    return theta;
}

// Calibrate + re-simulate + evaluate, retrying with perturbed starts.
inline BuildOutcome build_candidate(const SdeModel& model, const std::vector<double>& init,
                                    const std::vector<double>& historical, int iteration,
                                    const DiscoveryConfig& cfg) {
    BuildOutcome outcome;
    std::string label = "discovery/iter" + std::to_string(iteration);
    CalibConfig calib = cfg.calib;
    calib.seed = derive_seed(cfg.seed, label + "/calib");
    int attempts = std::max(1, cfg.retry_budget);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        std::vector<double> theta0 = init;
        if (attempt > 0) {
            Rng rng(derive_seed(cfg.seed, label + "/retry" + std::to_string(attempt)));
            theta0 = jitter_params(theta0, rng);
        }
        outcome.init = theta0;
        try {
            CalibResult fit = calibrate(model, historical, theta0, calib);
            if (!std::isfinite(fit.loss))
                throw std::invalid_argument("calibrated loss is not finite");
            SimConfig sim;
            sim.s0 = historical.front();
            sim.horizon = historical.size() - 1;
            sim.n_paths = calib.n_paths;
            sim.seed = derive_seed(cfg.seed, label + "/eval");
            Ensemble ens = simulate(model, fit.params, sim);
            outcome.evaluation = evaluate_candidate(ens, historical);
            outcome.fit = std::move(fit);
            outcome.status = CandidateStatus::Ok;
            outcome.error.clear();
            return outcome;
        } catch (const SimulationError& e) {
            outcome.status = CandidateStatus::ImplementFailed;
            outcome.error = e.what();
        } catch (const std::invalid_argument& e) {
            outcome.status = CandidateStatus::CalibrateFailed;
            outcome.error = e.what();
        }
    }
    return outcome;
}

}  // namespace detail

inline DiscoveryMemory run_discovery(const std::vector<double>& historical,
                                     ModelProposer& proposer, const DiscoveryConfig& cfg) {
    if (historical.size() < 60)
        throw std::invalid_argument("run_discovery: need at least 60 historical prices");
    if (cfg.iterations < 1)
        throw std::invalid_argument("run_discovery: iterations must be >= 1");

    DiscoveryMemory memory;
    memory.records = cfg.initial_records;

    std::vector<SdeModel> tested_models;
    std::set<std::string> seen;  // tested plus pooled sources
    for (const auto& r : memory.records) {
        tested_models.push_back(parse_model(r.source));
        seen.insert(r.source);
    }

    auto novelty_of = [&](const SdeModel& m) {
        return cfg.novelty ? cfg.novelty(m, tested_models) : offline_novelty(m, tested_models);
    };
    auto summarize = [&](const CandidateRecord& r) {
        return cfg.summarize ? cfg.summarize(r) : offline_summary(r);
    };

    std::string digest = stats_digest(historical);
    bool proposer_failed = false;

    // Asks the proposer (with retries) and merges unseen proposals into the pool.
    auto refill_pool = [&]() {
        if (proposer_failed) return;
        ProposerContext ctx;
        ctx.tested_sources.assign(seen.begin(), seen.end());
        ctx.stats_digest = digest;
        std::vector<Proposal> fresh;
        int attempts = std::max(1, cfg.retry_budget);
        bool got = false;
        std::string last_error;
        for (int attempt = 0; attempt < attempts && !got; ++attempt) {
            try {
                fresh = proposer.suggest(ctx);
                got = true;
            } catch (const TransportError&) {
                throw;  // infrastructure failures abort the run
            } catch (const AgentError& e) {
                last_error = e.what();
            }
        }
        if (!got) {
            proposer_failed = true;
            return;
        }
        for (auto& p : fresh) {
            std::string source = render_model(p.model);
            if (!seen.insert(source).second) continue;  // exact re-tests are forbidden
            memory.pool.push_back(std::move(p));
        }
    };

    while (static_cast<int>(memory.records.size()) < cfg.iterations) {
        Proposal candidate;
        if (memory.records.empty()) {
            // The loop always starts from the standard lognormal baseline.
            candidate.model = parse_model("dS = a*S dt + b*S dW");
            candidate.init = {0.05, 0.2};
            seen.insert(render_model(candidate.model));
        } else {
            if (memory.pool.empty()) refill_pool();
            if (proposer_failed) break;
            if (memory.pool.empty()) break;  // proposer has nothing left to offer
            std::size_t pick = choose_next(memory.pool, tested_models);
            candidate = std::move(memory.pool[pick]);
            memory.pool.erase(memory.pool.begin() +
                              static_cast<std::ptrdiff_t>(pick));
        }

        int iteration = static_cast<int>(memory.records.size()) + 1;
        std::vector<double> init = candidate.init;
        if (init.empty()) init = default_init(candidate.model, mean(historical));

        auto outcome =
            detail::build_candidate(candidate.model, init, historical, iteration, cfg);

        CandidateRecord record;
        record.iteration = iteration;
        record.source = render_model(candidate.model);
        record.status = outcome.status;
        record.init_params = outcome.init;
        if (outcome.status == CandidateStatus::Ok) {
            record.fitted_params = outcome.fit.params;
            record.loss = outcome.fit.loss;
            record.comparison = outcome.evaluation.comparison;
            record.novelty = novelty_of(candidate.model);
            ScoreParts parts = score_candidate(outcome.evaluation, record.novelty, cfg.scorer);
            record.novelty_sub = parts.novelty_sub;
            record.metrics_sub = parts.metrics_sub;
            record.combined = parts.combined;
        } else {
            record.summary = outcome.error;
        }
        record.summary = summarize(record);

        tested_models.push_back(candidate.model);
        memory.records.push_back(record);
        if (cfg.on_record) cfg.on_record(memory.records.back());

        if (static_cast<int>(memory.records.size()) < cfg.iterations) refill_pool();
    }

    bool any_ok = std::any_of(memory.records.begin(), memory.records.end(),
                              [](const CandidateRecord& r) { return r.ok(); });
    memory.loop_failed = proposer_failed || !any_ok;
    return memory;
}

}  // namespace sdekit
