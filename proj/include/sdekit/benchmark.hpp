#pragma once

// Ground-truth recovery harness: simulate data from a known SDE, run the
// discovery loop against it repeatedly, and report loss / similarity-to-target
// / diversity / complexity per run with mean +/- stddev aggregates.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdekit/discovery.hpp"
#include "sdekit/model.hpp"
#include "sdekit/rng.hpp"
#include "sdekit/simulate.hpp"
#include "sdekit/stats.hpp"
#include "sdekit/symbolic.hpp"

namespace sdekit {

struct GroundTruthSpec {
    std::string target_source;            // must parse as an SDE model
    std::vector<double> generating_params;  // arity must match the target
    SimConfig sim;                          // data-generation settings; seed is the base
    int runs = 1;
};

struct BenchRun {
    int run = 0;
    bool completed = false;
    std::string failure_reason;
    std::string best_source;
    double loss = std::numeric_limits<double>::quiet_NaN();
    double score = std::numeric_limits<double>::quiet_NaN();       // best record's 0-100 score
    double similarity = std::numeric_limits<double>::quiet_NaN();  // K(best, target)
    double combined = std::numeric_limits<double>::quiet_NaN();    // scale * score * similarity
    double diversity = std::numeric_limits<double>::quiet_NaN();   // over tested models
    double complexity = std::numeric_limits<double>::quiet_NaN();  // of the best model
    std::vector<CandidateRecord> records;
    std::vector<double> record_similarity;  // K(record, target), aligned with records
};

struct BenchAggregate {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double stddev = std::numeric_limits<double>::quiet_NaN();
};

struct BenchReport {
    std::string target_source;
    double combined_scale = 0.0;
    std::vector<BenchRun> runs;
    int completed = 0;
    int failed = 0;
    BenchAggregate loss, score, similarity, combined, diversity, complexity;
};

// Weight applied to score * similarity for the combined column; the paper's
// exact weighting is unpublished, so it stays configurable.
inline constexpr double kDefaultCombinedScale = 20.0;

namespace detail {

inline BenchAggregate aggregate_column(const std::vector<BenchRun>& runs,
                                       double BenchRun::*column) {
    std::vector<double> values;
    for (const auto& r : runs)
        if (r.completed) values.push_back(r.*column);
    if (values.empty()) return {};
    return {mean(values), stddev(values)};
}

}  // namespace detail

inline BenchReport run_benchmark(const GroundTruthSpec& spec, ModelProposer& proposer,
                                 const DiscoveryConfig& config,
                                 double combined_scale = kDefaultCombinedScale) {
    if (spec.runs < 1) throw std::invalid_argument("run_benchmark: runs must be >= 1");
    SdeModel target = parse_model(spec.target_source);  // throws if malformed
    if (spec.generating_params.size() != target.n_params())
        throw std::invalid_argument("run_benchmark: generating params arity mismatch");
    if (spec.sim.horizon + 1 < 60)
        throw std::invalid_argument("run_benchmark: horizon too short for discovery");

    const SymbolicGraph target_graph = to_symbolic_graph(target);

    BenchReport report;
    report.target_source = render_model(target);
    report.combined_scale = combined_scale;

    for (int r = 0; r < spec.runs; ++r) {
        BenchRun row;
        row.run = r;

        SimConfig data_cfg = spec.sim;
        data_cfg.n_paths = 1;
        data_cfg.seed = derive_seed(spec.sim.seed, "bench/run" + std::to_string(r) + "/data");
        std::vector<double> historical =
            simulate_path(target, spec.generating_params, data_cfg, 0);

        DiscoveryConfig run_cfg = config;
        run_cfg.seed = derive_seed(config.seed, "bench/run" + std::to_string(r));

        try {
            DiscoveryMemory memory = run_discovery(historical, proposer, run_cfg);
            std::vector<SymbolicGraph> tested;
            tested.reserve(memory.records.size());
            for (const auto& rec : memory.records)
                tested.push_back(to_symbolic_graph(parse_model(rec.source)));
            for (const auto& g : tested)
                row.record_similarity.push_back(similarity(g, target_graph));
            if (memory.loop_failed) {
                row.failure_reason = "discovery loop failed";
            } else {
                const CandidateRecord& best = best_model(memory);
                const auto best_idx =
                    static_cast<std::size_t>(&best - memory.records.data());
                row.completed = true;
                row.best_source = best.source;
                row.loss = best.loss;
                row.score = static_cast<double>(best.combined);
                row.similarity = row.record_similarity[best_idx];
                row.combined = combined_scale * row.score * row.similarity;
                row.complexity = complexity(tested[best_idx]);
                row.diversity = tested.size() < 2 ? 0.0 : diversity(tested);
            }
            row.records = std::move(memory.records);
        } catch (const DiscoveryError& e) {
            row.failure_reason = e.what();
        }

        if (row.completed)
            ++report.completed;
        else
            ++report.failed;
        report.runs.push_back(std::move(row));
    }

    report.loss = detail::aggregate_column(report.runs, &BenchRun::loss);
    report.score = detail::aggregate_column(report.runs, &BenchRun::score);
    report.similarity = detail::aggregate_column(report.runs, &BenchRun::similarity);
    report.combined = detail::aggregate_column(report.runs, &BenchRun::combined);
    report.diversity = detail::aggregate_column(report.runs, &BenchRun::diversity);
    report.complexity = detail::aggregate_column(report.runs, &BenchRun::complexity);
    return report;
}

namespace detail {

inline std::string bench_cell(double v, int precision = 6) {
    if (std::isnan(v)) return "-";
    std::ostringstream out;
    out << std::setprecision(precision) << v;
    return out.str();
}

}  // namespace detail

// Markdown table: one row per run, then a mean +/- stddev row over completed runs.
inline void bench_markdown(const BenchReport& report, std::ostream& out) {
    out << "# Ground-truth recovery: `" << report.target_source << "`\n\n";
    out << "Runs: " << report.runs.size() << " (" << report.completed << " completed, "
        << report.failed << " failed). Combined = " << report.combined_scale
        << " x score x similarity.\n\n";
    out << "| Run | Best model | Loss | Score | Similarity | Combined | Diversity | "
           "Complexity |\n";
    out << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : report.runs) {
        if (!r.completed) {
            out << "| " << r.run << " | failed: " << r.failure_reason
                << " | - | - | - | - | - | - |\n";
            continue;
        }
        out << "| " << r.run << " | `" << r.best_source << "` | " << detail::bench_cell(r.loss)
            << " | " << detail::bench_cell(r.score) << " | "
            << detail::bench_cell(r.similarity) << " | " << detail::bench_cell(r.combined)
            << " | " << detail::bench_cell(r.diversity) << " | "
            << detail::bench_cell(r.complexity) << " |\n";
    }
    auto pm = [&](const BenchAggregate& a) {
        return detail::bench_cell(a.mean, 4) + " (+/-" + detail::bench_cell(a.stddev, 3) + ")";
    };
    out << "| mean | | " << pm(report.loss) << " | " << pm(report.score) << " | "
        << pm(report.similarity) << " | " << pm(report.combined) << " | "
        << pm(report.diversity) << " | " << pm(report.complexity) << " |\n";
}

inline void bench_csv(const BenchReport& report, std::ostream& out) {
    out << "run,completed,best_model,loss,score,similarity,combined,diversity,complexity\n";
    for (const auto& r : report.runs) {
        out << r.run << ',' << (r.completed ? 1 : 0) << ',' << '"' << r.best_source << '"'
            << ',' << detail::bench_cell(r.loss, 17) << ',' << detail::bench_cell(r.score, 17)
            << ',' << detail::bench_cell(r.similarity, 17) << ','
            << detail::bench_cell(r.combined, 17) << ',' << detail::bench_cell(r.diversity, 17)
            << ',' << detail::bench_cell(r.complexity, 17) << '\n';
    }
    out << "mean,,," << detail::bench_cell(report.loss.mean, 17) << ','
        << detail::bench_cell(report.score.mean, 17) << ','
        << detail::bench_cell(report.similarity.mean, 17) << ','
        << detail::bench_cell(report.combined.mean, 17) << ','
        << detail::bench_cell(report.diversity.mean, 17) << ','
        << detail::bench_cell(report.complexity.mean, 17) << '\n';
    out << "stddev,,," << detail::bench_cell(report.loss.stddev, 17) << ','
        << detail::bench_cell(report.score.stddev, 17) << ','
        << detail::bench_cell(report.similarity.stddev, 17) << ','
        << detail::bench_cell(report.combined.stddev, 17) << ','
        << detail::bench_cell(report.diversity.stddev, 17) << ','
        << detail::bench_cell(report.complexity.stddev, 17) << '\n';
}

}  // namespace sdekit
