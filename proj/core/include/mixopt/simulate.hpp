#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mixopt/baselines.hpp"
#include "mixopt/loop.hpp"
#include "mixopt/run_table.hpp"
#include "mixopt/trace.hpp"

namespace mixopt {

/// One entry in a method-comparison experiment. The embedded configs carry
/// the algorithmic knobs; simulate() stamps budget, step cap, and seed onto a
/// copy per run, so those fields here are placeholders.
struct MethodSpec {
    enum class Kind { kBo, kMfbo, kBaseline };

    Kind kind = Kind::kMfbo;
    LoopConfig loop{};          // used for kBo / kMfbo
    BaselineConfig baseline{};  // used for kBaseline
    std::string label;          // trace/method column; empty -> kind default

    static MethodSpec bo(LoopConfig config = {});
    static MethodSpec mfbo(LoopConfig config = {});
    static MethodSpec make_baseline(BaselineConfig config);

    std::string resolved_label() const;
};

/// All traces for one (method, target) cell, one per seed.
struct MethodRun {
    std::string method;
    std::string target;
    std::vector<Trace> traces;
};

struct AggregatePoint {
    double cost = 0.0;
    double mean_score = 0.0;
    double std_score = 0.0;  // sample std across seeds; 0 for a single seed
    int n_seeds = 0;
};

/// Mean/std of cumulative-best target score vs cumulative cost for one
/// (method, target) cell, sampled on a cost grid shared across methods.
struct AggregateCurve {
    std::string method;
    std::string target;
    std::vector<AggregatePoint> points;
};

struct SimulationResult {
    std::vector<MethodRun> runs;
    std::vector<AggregateCurve> curves;
};

/// Runs every (method, target, seed) cell sequentially and aggregates the
/// curves. The seed is passed straight through to each run so baseline
/// methods sharing a seed also share their query sequence. Cells are
/// independent, so a caller needing parallelism can run them individually
/// and aggregate() afterwards.
SimulationResult simulate(std::span<const MethodSpec> methods, const RunTable& table,
                          std::span<const MetricTarget> targets, const CostModel& costs,
                          double budget_total, int max_steps,
                          std::span<const std::uint64_t> seeds);

/// Aggregates cumulative-best scores onto a per-target cost grid: the union
/// of every trace's cumulative-cost breakpoints, step-interpolated with
/// last-value carry-forward. A curve starts at the first grid point every
/// seed has reached, which keeps the seed set fixed along the curve and the
/// mean non-decreasing.
std::vector<AggregateCurve> aggregate(std::span<const MethodRun> runs);

/// Writes one per-step trace CSV per (method, target) cell plus a combined
/// summary.csv of the aggregate curves into `directory`. Returns the paths
/// written (summary last). Trace CSV columns: method, seed, step,
/// fidelity_id, cost, cumulative_cost, observed_score, recommended_mixture
/// (semicolon-joined), realized_target_score, cumulative_best_target_score.
/// Summary columns: method, target, cost, mean_score, std_score, n_seeds.
std::vector<std::string> export_results(const SimulationResult& result,
                                        const std::string& directory);

/// Reads back a summary.csv written by export_results.
std::vector<AggregateCurve> load_aggregate_csv(const std::string& path);

/// Reads a per-step trace CSV back into runs labeled with `target_label`,
/// grouping consecutive rows by (method, seed). The schema does not carry
/// queried mixtures, so those fields are filled with the recommended mixture
/// (aggregation never reads them).
std::vector<MethodRun> load_trace_csv(const std::string& path, const std::string& target_label);

}  // namespace mixopt
