#include "mixopt/simulate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include "csv_util.hpp"
#include "mixopt/problem.hpp"

namespace mixopt {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join_mixture(const MixtureWeights& pi) {
    std::string out;
    for (std::size_t k = 0; k < pi.dim(); ++k) {
        if (k) out += ';';
        out += format_double(pi[k]);
    }
    return out;
}

// File-name fragment from a free-form label.
std::string sanitize(const std::string& s) {
    std::string out;
    for (const char c : s) {
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    }
    return out.empty() ? std::string("unnamed") : out;
}

}  // namespace

MethodSpec MethodSpec::bo(LoopConfig config) {
    config.mode = LoopMode::kBO;
    return MethodSpec{Kind::kBo, std::move(config), {}, {}};
}

MethodSpec MethodSpec::mfbo(LoopConfig config) {
    config.mode = LoopMode::kMFBO;
    return MethodSpec{Kind::kMfbo, std::move(config), {}, {}};
}

MethodSpec MethodSpec::make_baseline(BaselineConfig config) {
    return MethodSpec{Kind::kBaseline, {}, std::move(config), {}};
}

std::string MethodSpec::resolved_label() const {
    if (!label.empty()) return label;
    switch (kind) {
        case Kind::kBo: return "bo";
        case Kind::kMfbo: return "mfbo";
        case Kind::kBaseline: return std::string(baseline_method_name(baseline.method));
    }
    throw std::invalid_argument("unknown method kind");
}

SimulationResult simulate(std::span<const MethodSpec> methods, const RunTable& table,
                          std::span<const MetricTarget> targets, const CostModel& costs,
                          double budget_total, int max_steps,
                          std::span<const std::uint64_t> seeds) {
    if (methods.empty()) throw std::invalid_argument("simulate: no methods");
    if (targets.empty()) throw std::invalid_argument("simulate: no targets");
    if (seeds.empty()) throw std::invalid_argument("simulate: no seeds");

    SimulationResult result;
    for (const MetricTarget& target : targets) {
        const ReplayProblem problem(table, target, costs);
        for (const MethodSpec& spec : methods) {
            MethodRun run{spec.resolved_label(), target.name(), {}};
            for (const std::uint64_t seed : seeds) {
                if (spec.kind == MethodSpec::Kind::kBaseline) {
                    BaselineConfig config = spec.baseline;
                    config.budget_total = budget_total;
                    config.max_steps = max_steps;
                    config.seed = seed;
                    Trace trace = run_baseline(problem, config);
                    trace.method = run.method;
                    run.traces.push_back(std::move(trace));
                } else {
                    LoopConfig config = spec.loop;
                    config.budget_total = budget_total;
                    config.max_steps = max_steps;
                    config.seed = seed;
                    config.method_name = run.method;
                    Trace trace = spec.kind == MethodSpec::Kind::kBo ? run_bo(problem, config)
                                                                     : run_mfbo(problem, config);
                    run.traces.push_back(std::move(trace));
                }
            }
            result.runs.push_back(std::move(run));
        }
    }
    result.curves = aggregate(result.runs);
    return result;
}

std::vector<AggregateCurve> aggregate(std::span<const MethodRun> runs) {
    // One cost grid per target so different methods are sampled at the same
    // abscissae.
    std::map<std::string, std::vector<double>> grids;
    for (const MethodRun& run : runs) {
        std::vector<double>& grid = grids[run.target];
        for (const Trace& trace : run.traces) {
            for (const TraceStep& step : trace.steps) grid.push_back(step.cumulative_cost);
        }
    }
    for (auto& [target, grid] : grids) {
        std::sort(grid.begin(), grid.end());
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    }

    std::vector<AggregateCurve> curves;
    for (const MethodRun& run : runs) {
        AggregateCurve curve{run.method, run.target, {}};
        std::vector<const Trace*> traces;
        double start_cost = 0.0;
        for (const Trace& trace : run.traces) {
            if (trace.steps.empty()) continue;  // budget below the first query
            traces.push_back(&trace);
            start_cost = std::max(start_cost, trace.steps.front().cumulative_cost);
        }
        if (!traces.empty()) {
            const std::vector<double>& grid = grids[run.target];
            std::vector<std::size_t> cursor(traces.size(), 0);
            for (const double cost : grid) {
                // The curve begins once every seed has spent at least one
                // query; before that the seed set would vary with cost.
                if (cost < start_cost) continue;
                double sum = 0.0, sum_sq = 0.0;
                for (std::size_t t = 0; t < traces.size(); ++t) {
                    const auto& steps = traces[t]->steps;
                    std::size_t& i = cursor[t];
                    while (i + 1 < steps.size() && steps[i + 1].cumulative_cost <= cost) ++i;
                    const double v = steps[i].cumulative_best_target_score;
                    sum += v;
                    sum_sq += v * v;
                }
                const double n = static_cast<double>(traces.size());
                const double mean = sum / n;
                const double var = n > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1))
                                         : 0.0;
                curve.points.push_back(AggregatePoint{cost, mean, std::sqrt(var),
                                                      static_cast<int>(traces.size())});
            }
        }
        curves.push_back(std::move(curve));
    }
    return curves;
}

std::vector<std::string> export_results(const SimulationResult& result,
                                        const std::string& directory) {
    if (result.runs.empty()) throw std::invalid_argument("export_results: nothing to write");
    namespace fs = std::filesystem;
    fs::create_directories(directory);

    std::vector<std::string> written;
    for (const MethodRun& run : result.runs) {
        const fs::path path = fs::path(directory) /
                              ("trace_" + sanitize(run.method) + "_" + sanitize(run.target) +
                               ".csv");
        std::ofstream out(path);
        if (!out) throw std::runtime_error("export_results: cannot write " + path.string());
        out << "method,seed,step,fidelity_id,cost,cumulative_cost,observed_score,"
               "recommended_mixture,realized_target_score,cumulative_best_target_score\n";
        for (const Trace& trace : run.traces) {
            for (const TraceStep& step : trace.steps) {
                out << csv::escape_field(trace.method) << ',' << trace.seed << ',' << step.step
                    << ',' << csv::escape_field(step.fidelity_id) << ','
                    << format_double(step.cost) << ',' << format_double(step.cumulative_cost)
                    << ',' << format_double(step.observed_score) << ',';
                if (step.recommendation) {
                    out << join_mixture(step.recommendation->mixture) << ',';
                    if (step.recommendation->realized_target_score) {
                        out << format_double(*step.recommendation->realized_target_score);
                    }
                } else {
                    out << ',';
                }
                out << ',' << format_double(step.cumulative_best_target_score) << '\n';
            }
        }
        written.push_back(path.string());
    }

    const fs::path summary = fs::path(directory) / "summary.csv";
    std::ofstream out(summary);
    if (!out) throw std::runtime_error("export_results: cannot write " + summary.string());
    out << "method,target,cost,mean_score,std_score,n_seeds\n";
    for (const AggregateCurve& curve : result.curves) {
        for (const AggregatePoint& p : curve.points) {
            out << csv::escape_field(curve.method) << ',' << csv::escape_field(curve.target)
                << ',' << format_double(p.cost) << ',' << format_double(p.mean_score) << ','
                << format_double(p.std_score) << ',' << p.n_seeds << '\n';
        }
    }
    written.push_back(summary.string());
    return written;
}

std::vector<AggregateCurve> load_aggregate_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    const std::vector<std::string> header = csv::split_line(line);
    const std::vector<std::string> expected = {"method",     "target",    "cost",
                                               "mean_score", "std_score", "n_seeds"};
    if (header != expected) throw std::runtime_error(path + ": unexpected summary header");

    std::vector<AggregateCurve> curves;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = csv::split_line(line);
        if (fields.size() != expected.size()) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad field count");
        }
        const auto cost = csv::parse_double(fields[2]);
        const auto mean = csv::parse_double(fields[3]);
        const auto sd = csv::parse_double(fields[4]);
        const auto n = csv::parse_double(fields[5]);
        if (!cost || !mean || !sd || !n) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad number");
        }
        if (curves.empty() || curves.back().method != fields[0] ||
            curves.back().target != fields[1]) {
            curves.push_back(AggregateCurve{fields[0], fields[1], {}});
        }
        curves.back().points.push_back(
            AggregatePoint{*cost, *mean, *sd, static_cast<int>(*n)});
    }
    return curves;
}

std::vector<MethodRun> load_trace_csv(const std::string& path, const std::string& target_label) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    const std::vector<std::string> expected = {
        "method",         "seed",
        "step",           "fidelity_id",
        "cost",           "cumulative_cost",
        "observed_score", "recommended_mixture",
        "realized_target_score", "cumulative_best_target_score"};
    if (csv::split_line(line) != expected) {
        throw std::runtime_error(path + ": unexpected trace header");
    }

    std::vector<MethodRun> runs;
    Trace* trace = nullptr;
    std::string trace_method;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> f = csv::split_line(line);
        const auto bad = [&](const std::string& what) {
            return std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
        };
        if (f.size() != expected.size()) throw bad("bad field count");

        const auto seed = csv::parse_double(f[1]);
        const auto step = csv::parse_double(f[2]);
        const auto cost = csv::parse_double(f[4]);
        const auto cum_cost = csv::parse_double(f[5]);
        const auto observed = csv::parse_double(f[6]);
        const auto cum_best = csv::parse_double(f[9]);
        if (!seed || !step || !cost || !cum_cost || !observed || !cum_best) {
            throw bad("bad number");
        }

        std::optional<RecommendationRecord> rec;
        if (!f[7].empty()) {
            std::vector<double> weights;
            std::size_t start = 0;
            while (start <= f[7].size()) {
                const std::size_t end = f[7].find(';', start);
                const std::string piece =
                    f[7].substr(start, end == std::string::npos ? std::string::npos : end - start);
                const auto w = csv::parse_double(piece);
                if (!w) throw bad("bad mixture entry '" + piece + "'");
                weights.push_back(*w);
                if (end == std::string::npos) break;
                start = end + 1;
            }
            std::optional<double> realized;
            if (!f[8].empty()) {
                const auto r = csv::parse_double(f[8]);
                if (!r) throw bad("bad realized score");
                realized = *r;
            }
            // Predicted scores are not serialized; reuse the realized value.
            rec = RecommendationRecord{make_mixture(weights), realized.value_or(0.0), realized};
        }

        MethodRun* run = nullptr;
        for (MethodRun& r : runs) {
            if (r.method == f[0]) run = &r;
        }
        if (!run) {
            runs.push_back(MethodRun{f[0], target_label, {}});
            run = &runs.back();
            trace = nullptr;
        }
        const auto seed_value = static_cast<std::uint64_t>(*seed);
        if (!trace || trace_method != f[0] || trace->seed != seed_value) {
            run->traces.push_back(Trace{f[0], seed_value, {}});
            trace = &run->traces.back();
            trace_method = f[0];
        }
        const MixtureWeights queried = rec ? rec->mixture : make_mixture({0.5, 0.5});
        trace->steps.push_back(TraceStep{static_cast<int>(*step), queried, f[3], *cost, *cum_cost,
                                         *observed, std::move(rec), *cum_best});
    }
    for (MethodRun& run : runs) {
        for (Trace& t : run.traces) t.validate();
    }
    return runs;
}

}  // namespace mixopt
