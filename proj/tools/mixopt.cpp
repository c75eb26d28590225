// Command-line front end: table ingestion, optimization replays, baseline
// comparisons, domain-importance analysis, and synthetic-table generation.
// Campaigns can come from a JSON config file; explicit flags override it.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mixopt/ard.hpp"
#include "mixopt/baselines.hpp"
#include "mixopt/loop.hpp"
#include "mixopt/problem.hpp"
#include "mixopt/rng.hpp"
#include "mixopt/run_table.hpp"
#include "mixopt/simulate.hpp"

namespace {

using namespace mixopt;

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

// Everything a `run` campaign needs, before flag overrides are applied.
struct Campaign {
    std::string table;
    std::string manifest;
    bool synthetic = false;
    SyntheticSpec synth;
    std::string mode = "mfbo";  // mfbo | bo | zero-shot
    std::optional<std::string> query_fidelity;
    std::vector<std::string> targets;  // "name:col1+col2" or "col"; empty -> all metrics
    std::vector<std::string> methods;  // empty -> mode's GP method + random
    double budget = std::numeric_limits<double>::infinity();
    int steps = 50;
    int seeds = 5;
    std::uint64_t seed = 0;
    std::string out = "results";
    int init_count = 1;
    int refit_every = 1;
    int fit_restarts = 10;
    int mes_samples = 10;
};

void load_campaign_json(const std::string& path, Campaign& c) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    nlohmann::json j;
    in >> j;
    const auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("table", c.table);
    get("manifest", c.manifest);
    get("synthetic", c.synthetic);
    get("mode", c.mode);
    if (j.contains("query_fidelity")) c.query_fidelity = j.at("query_fidelity").get<std::string>();
    get("targets", c.targets);
    get("methods", c.methods);
    get("budget", c.budget);
    get("steps", c.steps);
    get("seeds", c.seeds);
    get("seed", c.seed);
    get("out", c.out);
    get("init_count", c.init_count);
    get("refit_every", c.refit_every);
    get("fit_restarts", c.fit_restarts);
    get("mes_samples", c.mes_samples);
    if (j.contains("synth")) {
        const auto& s = j.at("synth");
        if (s.contains("dims")) c.synth.dims = s.at("dims").get<int>();
        if (s.contains("counts")) c.synth.counts = s.at("counts").get<std::vector<std::size_t>>();
        if (s.contains("correlation")) {
            c.synth.correlation = s.at("correlation").get<std::vector<double>>();
        }
        if (s.contains("noise_sd")) c.synth.noise_sd = s.at("noise_sd").get<double>();
    }
}

// "name:col1+col2" or a bare column name.
MetricTarget parse_target(const RunTable& table, const std::string& spec) {
    std::string name = spec;
    std::string columns = spec;
    if (const auto colon = spec.find(':'); colon != std::string::npos) {
        name = spec.substr(0, colon);
        columns = spec.substr(colon + 1);
    }
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= columns.size()) {
        const std::size_t end = columns.find('+', start);
        parts.push_back(columns.substr(
            start, end == std::string::npos ? std::string::npos : end - start));
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return MetricTarget::create(table, name, std::move(parts));
}

std::vector<MetricTarget> resolve_targets(const RunTable& table,
                                          const std::vector<std::string>& specs) {
    std::vector<MetricTarget> targets;
    if (specs.empty()) {
        // Default: unweighted mean over every metric column.
        std::vector<std::string> all;
        for (const auto& [name, orientation] : table.metric_columns) all.push_back(name);
        targets.push_back(MetricTarget::create(table, "target", std::move(all)));
    } else {
        for (const std::string& spec : specs) targets.push_back(parse_target(table, spec));
    }
    return targets;
}

RunTable load_campaign_table(const Campaign& c, std::optional<SyntheticTable>* synth_out) {
    if (c.synthetic) {
        SyntheticTable synth = make_synthetic_table(c.synth, c.seed);
        RunTable table = synth.table;
        if (synth_out) *synth_out = std::move(synth);
        return table;
    }
    if (c.table.empty() || c.manifest.empty()) {
        throw std::runtime_error("need --table and --manifest (or --synthetic)");
    }
    return load_run_table(c.table, load_manifest(c.manifest));
}

std::vector<MethodSpec> build_methods(const Campaign& c, const RunTable& table) {
    const bool zero_shot = c.mode == "zero-shot";
    if (c.mode != "mfbo" && c.mode != "bo" && !zero_shot) {
        throw std::runtime_error("unknown mode '" + c.mode + "' (mfbo, bo, zero-shot)");
    }
    if (zero_shot && !c.query_fidelity) {
        throw std::runtime_error("zero-shot mode needs --query-fidelity");
    }
    if (c.query_fidelity && !table.fidelities.contains(*c.query_fidelity)) {
        throw std::runtime_error("query fidelity '" + *c.query_fidelity +
                                 "' is not in the table");
    }

    std::vector<std::string> names = c.methods;
    if (names.empty()) names = {c.mode == "mfbo" ? "mfbo" : "bo", "random"};

    LoopConfig loop;
    loop.query_fidelity = c.query_fidelity;
    loop.init_count = c.init_count;
    loop.refit_every = c.refit_every;
    loop.fit.restarts = c.fit_restarts;
    loop.max_values.n_samples = c.mes_samples;

    std::vector<MethodSpec> methods;
    for (const std::string& name : names) {
        if (name == "mfbo") {
            if (table.fidelities.size() < 2) {
                throw std::runtime_error(
                    "mfbo needs a multi-fidelity table; this one has a single fidelity "
                    "(use --mode bo)");
            }
            methods.push_back(MethodSpec::mfbo(loop));
        } else if (name == "bo") {
            methods.push_back(MethodSpec::bo(loop));
        } else {
            BaselineConfig baseline;
            baseline.query_fidelity = c.query_fidelity;
            if (name == "random") {
                baseline.method = BaselineMethod::kRandom;
            } else if (name == "linear") {
                baseline.method = BaselineMethod::kLinear;
            } else if (name == "exponential") {
                baseline.method = BaselineMethod::kExponential;
            } else if (name == "svr") {
                baseline.method = BaselineMethod::kSvr;
            } else {
                throw std::runtime_error("unknown method '" + name + "'");
            }
            methods.push_back(MethodSpec::make_baseline(baseline));
        }
    }
    return methods;
}

int cmd_ingest(const std::string& table_path, const std::string& manifest_path) {
    const RunTable table = load_run_table(table_path, load_manifest(manifest_path));
    std::cout << "table: " << table_path << "\n";
    std::cout << "domains (" << table.domain_names.size() << "):";
    for (const std::string& d : table.domain_names) std::cout << ' ' << d;
    std::cout << "\nfidelities (" << table.fidelities.size() << "):\n";
    for (const FidelitySpec& f : table.fidelities.levels()) {
        std::cout << "  " << f.id << ": " << table.count_at(f.id) << " rows, "
                  << f.parameter_count << " params, cost " << f.cost << "\n";
    }
    std::cout << "metrics (" << table.metric_columns.size() << "):\n";
    for (const auto& [name, orientation] : table.metric_columns) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        double sum = 0.0;
        for (const RunRow& row : table.rows) {
            const double v = row.metrics.at(name);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
        }
        std::cout << "  " << name << " ("
                  << (orientation == Orientation::kHigherIsBetter ? "higher" : "lower")
                  << " is better): min " << lo << ", mean "
                  << sum / static_cast<double>(table.rows.size()) << ", max " << hi << "\n";
    }
    std::cout << "total rows: " << table.rows.size() << "\n";
    return 0;
}

int cmd_run(const Campaign& c) {
    std::optional<SyntheticTable> synth;
    const RunTable table = load_campaign_table(c, &synth);
    const std::vector<MetricTarget> targets = resolve_targets(table, c.targets);
    const CostModel costs = CostModel::from_table(table);
    const std::vector<MethodSpec> methods = build_methods(c, table);

    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < c.seeds; ++i) {
        seeds.push_back(substream(c.seed, "campaign", static_cast<std::uint64_t>(i)));
    }

    const SimulationResult result =
        simulate(methods, table, targets, costs, c.budget, c.steps, seeds);
    const std::vector<std::string> files = export_results(result, c.out);

    if (synth) {
        std::cout << "synthetic optimum: " << format_double(synth->target_optimum_value)
                  << " at row " << synth->target_optimum_row << "\n";
    }
    for (const MethodRun& run : result.runs) {
        double final_sum = 0.0;
        int finished = 0;
        for (const Trace& trace : run.traces) {
            if (trace.steps.empty()) continue;
            final_sum += trace.steps.back().cumulative_best_target_score;
            ++finished;
        }
        std::cout << "[" << run.method << " / " << run.target << "] ";
        if (finished == 0) {
            std::cout << "no steps ran (budget below the cheapest query)\n";
            continue;
        }
        const Trace& first = run.traces.front();
        if (!first.steps.empty() && first.steps.back().recommendation) {
            const RecommendationRecord& rec = *first.steps.back().recommendation;
            std::cout << "recommends " << join_mixture(rec.mixture);
            if (rec.realized_target_score) {
                std::cout << " (realized " << format_double(*rec.realized_target_score) << ")";
            }
        }
        std::cout << ", mean cumulative best over " << finished
                  << " seed(s): " << format_double(final_sum / finished) << "\n";
    }
    std::cout << "wrote " << files.size() << " files under " << c.out << "\n";
    return 0;
}

int cmd_compare(const std::vector<std::string>& trace_files, const std::string& target_label,
                const std::string& out_dir) {
    std::vector<MethodRun> runs;
    for (const std::string& path : trace_files) {
        for (MethodRun& run : load_trace_csv(path, target_label)) {
            runs.push_back(std::move(run));
        }
    }
    SimulationResult result;
    result.runs = std::move(runs);
    result.curves = aggregate(result.runs);
    const std::vector<std::string> files = export_results(result, out_dir);
    for (const AggregateCurve& curve : result.curves) {
        if (curve.points.empty()) continue;
        std::cout << curve.method << " / " << curve.target << ": final mean "
                  << format_double(curve.points.back().mean_score) << " over "
                  << curve.points.back().n_seeds << " seed(s)\n";
    }
    std::cout << "wrote " << files.back() << "\n";
    return 0;
}

int cmd_importance(const std::string& table_path, const std::string& manifest_path,
                   const std::string& fidelity, std::vector<std::string> columns,
                   const std::string& out_file, std::uint64_t seed, int restarts) {
    const RunTable table = load_run_table(table_path, load_manifest(manifest_path));
    if (columns.empty()) {
        for (const auto& [name, orientation] : table.metric_columns) columns.push_back(name);
    }
    FitConfig config;
    config.seed = seed;
    config.restarts = restarts;
    const ImportanceMatrix matrix = importance_matrix(table, fidelity, columns, config);
    write_importance_csv(matrix, out_file);
    for (std::size_t j = 0; j < matrix.benchmarks.size(); ++j) {
        Eigen::Index top = 0;
        matrix.values.col(static_cast<Eigen::Index>(j)).maxCoeff(&top);
        std::cout << matrix.benchmarks[j] << ": most influential domain is "
                  << matrix.domains[static_cast<std::size_t>(top)] << "\n";
    }
    std::cout << "wrote " << out_file << "\n";
    return 0;
}

int cmd_synth(const SyntheticSpec& spec, std::uint64_t seed, const std::string& out_dir) {
    const SyntheticTable synth = make_synthetic_table(spec, seed);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path table_path = std::filesystem::path(out_dir) / "table.csv";
    const std::filesystem::path manifest_path = std::filesystem::path(out_dir) / "manifest.json";
    write_run_table_csv(synth.table, table_path);
    save_manifest(manifest_for(synth.table), manifest_path);
    std::cout << "wrote " << table_path.string() << " and " << manifest_path.string() << "\n";
    std::cout << "target optimum: " << format_double(synth.target_optimum_value) << " at row "
              << synth.target_optimum_row << " (mixture "
              << join_mixture(synth.table.rows[synth.target_optimum_row].mixture) << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-mixture optimization over tabular benchmark replays"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Validate a run table and print a summary");
    std::string in_table, in_manifest;
    ingest->add_option("--table", in_table, "run table CSV")->required();
    ingest->add_option("--manifest", in_manifest, "column manifest JSON")->required();

    // run
    auto* run = app.add_subcommand("run", "Replay optimization methods over a table");
    std::string config_path;
    run->add_option("--config", config_path, "campaign config JSON; flags override it");
    std::optional<std::string> r_table, r_manifest, r_mode, r_query, r_out;
    std::optional<double> r_budget;
    std::optional<int> r_steps, r_seeds;
    std::optional<std::uint64_t> r_seed;
    std::vector<std::string> r_targets, r_methods;
    bool r_synthetic = false;
    run->add_option("--table", r_table, "run table CSV");
    run->add_option("--manifest", r_manifest, "column manifest JSON");
    run->add_flag("--synthetic", r_synthetic, "use a generated synthetic table");
    run->add_option("--mode", r_mode, "mfbo | bo | zero-shot");
    run->add_option("--query-fidelity", r_query, "restrict queries to one fidelity");
    run->add_option("--target", r_targets, "metric target 'name:col1+col2' (repeatable)");
    run->add_option("--methods", r_methods, "mfbo,bo,random,linear,exponential,svr")
        ->delimiter(',');
    run->add_option("--budget", r_budget, "total cost budget (default unlimited)");
    run->add_option("--steps", r_steps, "max queries per run");
    run->add_option("--seeds", r_seeds, "number of seeds");
    run->add_option("--seed", r_seed, "global seed");
    run->add_option("--out", r_out, "output directory");
    std::optional<int> r_dims;
    std::vector<std::size_t> r_counts;
    std::vector<double> r_rho;
    std::optional<double> r_noise;
    run->add_option("--dims", r_dims, "synthetic: mixture dimensions");
    run->add_option("--counts", r_counts, "synthetic: rows per fidelity")->delimiter(',');
    run->add_option("--rho", r_rho, "synthetic: cross-fidelity correlation")->delimiter(',');
    run->add_option("--noise", r_noise, "synthetic: observation noise sd");

    // compare
    auto* compare = app.add_subcommand("compare", "Aggregate existing trace CSVs");
    std::vector<std::string> cmp_files;
    std::string cmp_target = "target", cmp_out = "results";
    compare->add_option("traces", cmp_files, "trace CSV files")->required();
    compare->add_option("--target", cmp_target, "target label for the summary");
    compare->add_option("--out", cmp_out, "output directory");

    // importance
    auto* importance = app.add_subcommand("importance", "Domain-importance matrix from ARD fits");
    std::string imp_table, imp_manifest, imp_fidelity, imp_out = "importance.csv";
    std::vector<std::string> imp_columns;
    std::uint64_t imp_seed = 0;
    int imp_restarts = 10;
    importance->add_option("--table", imp_table, "run table CSV")->required();
    importance->add_option("--manifest", imp_manifest, "column manifest JSON")->required();
    importance->add_option("--fidelity", imp_fidelity, "fidelity id to fit at")->required();
    importance->add_option("--columns", imp_columns, "benchmark columns (default: all)")
        ->delimiter(',');
    importance->add_option("--out", imp_out, "output CSV");
    importance->add_option("--seed", imp_seed, "fit seed");
    importance->add_option("--restarts", imp_restarts, "fit restarts per column");

    // synth
    auto* synth = app.add_subcommand("synth", "Emit a synthetic run table + manifest");
    SyntheticSpec sy_spec;
    std::uint64_t sy_seed = 0;
    std::string sy_out = "synthetic";
    synth->add_option("--dims", sy_spec.dims, "mixture dimensions");
    synth->add_option("--counts", sy_spec.counts, "rows per fidelity, low to high")
        ->delimiter(',');
    synth->add_option("--rho", sy_spec.correlation, "correlation with the target truth")
        ->delimiter(',');
    synth->add_option("--noise", sy_spec.noise_sd, "observation noise sd");
    synth->add_option("--seed", sy_seed, "generation seed");
    synth->add_option("--out", sy_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) return cmd_ingest(in_table, in_manifest);
        if (run->parsed()) {
            Campaign c;
            if (!config_path.empty()) load_campaign_json(config_path, c);
            if (r_table) c.table = *r_table;
            if (r_manifest) c.manifest = *r_manifest;
            if (r_synthetic) c.synthetic = true;
            if (r_mode) c.mode = *r_mode;
            if (r_query) c.query_fidelity = r_query;
            if (!r_targets.empty()) c.targets = r_targets;
            if (!r_methods.empty()) c.methods = r_methods;
            if (r_budget) c.budget = *r_budget;
            if (r_steps) c.steps = *r_steps;
            if (r_seeds) c.seeds = *r_seeds;
            if (r_seed) c.seed = *r_seed;
            if (r_out) c.out = *r_out;
            if (r_dims) c.synth.dims = *r_dims;
            if (!r_counts.empty()) c.synth.counts = r_counts;
            if (!r_rho.empty()) c.synth.correlation = r_rho;
            if (r_noise) c.synth.noise_sd = *r_noise;
            return cmd_run(c);
        }
        if (compare->parsed()) return cmd_compare(cmp_files, cmp_target, cmp_out);
        if (importance->parsed()) {
            return cmd_importance(imp_table, imp_manifest, imp_fidelity, imp_columns, imp_out,
                                  imp_seed, imp_restarts);
        }
        if (synth->parsed()) return cmd_synth(sy_spec, sy_seed, sy_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
