#include "mixopt/run_table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "csv_util.hpp"
#include "mixopt/log.hpp"
#include "mixopt/rng.hpp"

namespace mixopt {

namespace {

[[noreturn]] void fail(const std::string& context, const std::vector<std::string>& offenders) {
    std::ostringstream msg;
    msg << context << ": ";
    const std::size_t shown = std::min<std::size_t>(offenders.size(), 8);
    for (std::size_t i = 0; i < shown; ++i) {
        if (i) msg << ", ";
        msg << offenders[i];
    }
    if (offenders.size() > shown) msg << ", ... and " << (offenders.size() - shown) << " more";
    throw std::runtime_error(msg.str());
}

Orientation parse_orientation(const std::string& s, const std::string& column) {
    if (s == "higher_is_better") return Orientation::kHigherIsBetter;
    if (s == "lower_is_better") return Orientation::kLowerIsBetter;
    throw std::runtime_error("manifest: metric column '" + column +
                             "' has unknown orientation '" + s +
                             "' (expected higher_is_better or lower_is_better)");
}

using csv::parse_double;
using csv::split_line;

// Cost precedence applied once, at load time.
std::map<std::string, double> resolve_costs(const std::vector<RunRow>& rows,
                                            const std::map<std::string, std::uint64_t>& params,
                                            bool has_time_column,
                                            const std::map<std::string, double>& explicit_costs) {
    std::map<std::string, double> costs;
    std::uint64_t max_params = 0;
    for (const auto& [id, count] : params) max_params = std::max(max_params, count);

    for (const auto& [id, count] : params) {
        if (const auto it = explicit_costs.find(id); it != explicit_costs.end()) {
            if (!(it->second > 0.0)) {
                throw std::runtime_error("cost model: explicit cost for '" + id +
                                         "' must be positive");
            }
            costs[id] = it->second;
            continue;
        }
        if (has_time_column) {
            double sum = 0.0;
            std::size_t n = 0;
            for (const RunRow& row : rows) {
                if (row.fidelity_id == id && row.time_minutes) {
                    sum += *row.time_minutes;
                    ++n;
                }
            }
            if (n > 0 && sum > 0.0) {
                costs[id] = sum / static_cast<double>(n);
                continue;
            }
        }
        costs[id] = static_cast<double>(count) / static_cast<double>(max_params);
    }
    return costs;
}

}  // namespace

void Manifest::validate() const {
    if (mixture_columns.size() < 2) {
        throw std::runtime_error("manifest: need at least two mixture columns");
    }
    if (fidelity_column.empty()) throw std::runtime_error("manifest: fidelity_column is empty");
    if (metric_columns.empty()) throw std::runtime_error("manifest: no metric columns");
    if (fidelity_parameter_counts.empty()) {
        throw std::runtime_error("manifest: no fidelities declared");
    }
    for (const auto& [id, cost] : explicit_costs) {
        if (!fidelity_parameter_counts.count(id)) {
            throw std::runtime_error("manifest: cost given for undeclared fidelity '" + id + "'");
        }
        if (!(cost > 0.0)) {
            throw std::runtime_error("manifest: cost for fidelity '" + id + "' must be positive");
        }
    }
    for (const auto& [id, n] : expected_counts) {
        (void)n;
        if (!fidelity_parameter_counts.count(id)) {
            throw std::runtime_error("manifest: expected count for undeclared fidelity '" + id +
                                     "'");
        }
    }
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("manifest " + path.string() + " is not valid JSON: " + e.what());
    }

    Manifest m;
    try {
        m.mixture_columns = j.at("mixture_columns").get<std::vector<std::string>>();
        m.fidelity_column = j.at("fidelity_column").get<std::string>();
        for (const auto& [name, orient] : j.at("metric_columns").items()) {
            m.metric_columns.emplace_back(name,
                                          parse_orientation(orient.get<std::string>(), name));
        }
        for (const auto& [id, count] : j.at("fidelities").items()) {
            m.fidelity_parameter_counts[id] = count.get<std::uint64_t>();
        }
        if (j.contains("time_column")) m.time_column = j.at("time_column").get<std::string>();
        if (j.contains("costs")) {
            for (const auto& [id, cost] : j.at("costs").items()) {
                m.explicit_costs[id] = cost.get<double>();
            }
        }
        if (j.contains("expected_counts")) {
            for (const auto& [id, n] : j.at("expected_counts").items()) {
                m.expected_counts[id] = n.get<std::size_t>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("manifest " + path.string() + ": " + e.what());
    }
    m.validate();
    return m;
}

Orientation RunTable::orientation_of(const std::string& metric) const {
    for (const auto& [name, orientation] : metric_columns) {
        if (name == metric) return orientation;
    }
    throw std::out_of_range("unknown metric column: " + metric);
}

bool RunTable::has_metric(const std::string& metric) const {
    return std::any_of(metric_columns.begin(), metric_columns.end(),
                       [&](const auto& c) { return c.first == metric; });
}

std::size_t RunTable::count_at(const std::string& fidelity_id) const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(),
                      [&](const RunRow& r) { return r.fidelity_id == fidelity_id; }));
}

MetricTarget MetricTarget::create(const RunTable& table, std::string name,
                                  std::vector<std::string> columns) {
    if (columns.empty()) throw std::invalid_argument("metric target has no columns");
    MetricTarget t;
    t.name_ = std::move(name);
    std::vector<std::string> missing;
    for (const std::string& c : columns) {
        if (!table.has_metric(c)) {
            missing.push_back(c);
            continue;
        }
        t.orientations_.push_back(table.orientation_of(c));
    }
    if (!missing.empty()) fail("metric target references unknown columns", missing);
    t.columns_ = std::move(columns);
    return t;
}

double MetricTarget::score(const RunRow& row) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        const auto it = row.metrics.find(columns_[i]);
        if (it == row.metrics.end()) {
            throw std::runtime_error("row is missing metric column '" + columns_[i] + "'");
        }
        sum += oriented_score(it->second, orientations_[i]);
    }
    return sum / static_cast<double>(columns_.size());
}

double CostModel::cost(const std::string& fidelity_id) const {
    const auto it = cost_by_fidelity.find(fidelity_id);
    if (it == cost_by_fidelity.end()) {
        throw std::out_of_range("cost model has no fidelity '" + fidelity_id + "'");
    }
    return it->second;
}

CostModel CostModel::from_table(const RunTable& table,
                                const std::map<std::string, double>& overrides) {
    CostModel model;
    for (const FidelitySpec& f : table.fidelities.levels()) {
        const auto it = overrides.find(f.id);
        if (it != overrides.end() && !(it->second > 0.0)) {
            throw std::runtime_error("cost model: override for '" + f.id + "' must be positive");
        }
        model.cost_by_fidelity[f.id] = it != overrides.end() ? it->second : f.cost;
    }
    for (const auto& [id, cost] : overrides) {
        (void)cost;
        if (!table.fidelities.contains(id)) {
            throw std::runtime_error("cost model: override for unknown fidelity '" + id + "'");
        }
    }
    return model;
}

RunTable load_run_table(const std::filesystem::path& table_path, const Manifest& manifest) {
    manifest.validate();
    std::ifstream in(table_path);
    if (!in) throw std::runtime_error("cannot open table: " + table_path.string());

    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("table " + table_path.string() + " is empty");
    }
    const std::vector<std::string> header = split_line(line);
    const auto column_index = [&](const std::string& name) -> std::optional<std::size_t> {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return static_cast<std::size_t>(it - header.begin());
    };

    std::vector<std::string> missing;
    std::vector<std::size_t> mixture_idx;
    for (const std::string& c : manifest.mixture_columns) {
        if (const auto idx = column_index(c)) {
            mixture_idx.push_back(*idx);
        } else {
            missing.push_back(c);
        }
    }
    const auto fidelity_idx = column_index(manifest.fidelity_column);
    if (!fidelity_idx) missing.push_back(manifest.fidelity_column);
    std::vector<std::size_t> metric_idx;
    for (const auto& [c, orientation] : manifest.metric_columns) {
        (void)orientation;
        if (const auto idx = column_index(c)) {
            metric_idx.push_back(*idx);
        } else {
            missing.push_back(c);
        }
    }
    std::optional<std::size_t> time_idx;
    if (manifest.time_column) {
        time_idx = column_index(*manifest.time_column);
        if (!time_idx) missing.push_back(*manifest.time_column);
    }
    if (!missing.empty()) {
        fail("table " + table_path.string() + " is missing columns", missing);
    }

    std::vector<RunRow> rows;
    std::vector<std::string> bad_cells;
    std::vector<std::string> bad_fidelities;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = split_line(line);
        if (fields.size() != header.size()) {
            bad_cells.push_back("line " + std::to_string(line_no) + " has " +
                                std::to_string(fields.size()) + " fields (header has " +
                                std::to_string(header.size()) + ")");
            continue;
        }

        std::vector<double> weights;
        bool row_ok = true;
        for (std::size_t k = 0; k < mixture_idx.size(); ++k) {
            auto v = parse_double(fields[mixture_idx[k]]);
            if (!v || std::isnan(*v)) {
                bad_cells.push_back("line " + std::to_string(line_no) + " column '" +
                                    manifest.mixture_columns[k] + "'");
                row_ok = false;
                continue;
            }
            // Exported tables occasionally carry -0.0000000001-style noise.
            if (*v < 0.0 && *v >= -1e-9) *v = 0.0;
            weights.push_back(*v);
        }

        const std::string& fid = fields[*fidelity_idx];
        if (!manifest.fidelity_parameter_counts.count(fid)) {
            bad_fidelities.push_back("line " + std::to_string(line_no) + ": '" + fid + "'");
            row_ok = false;
        }

        std::map<std::string, double> metrics;
        for (std::size_t k = 0; k < metric_idx.size(); ++k) {
            const auto v = parse_double(fields[metric_idx[k]]);
            if (!v || std::isnan(*v)) {
                bad_cells.push_back("line " + std::to_string(line_no) + " column '" +
                                    manifest.metric_columns[k].first + "'");
                row_ok = false;
                continue;
            }
            metrics[manifest.metric_columns[k].first] = *v;
        }

        std::optional<double> minutes;
        if (time_idx) {
            const auto v = parse_double(fields[*time_idx]);
            if (!v || std::isnan(*v)) {
                bad_cells.push_back("line " + std::to_string(line_no) + " column '" +
                                    *manifest.time_column + "'");
                row_ok = false;
            } else {
                minutes = *v;
            }
        }
        if (!row_ok) continue;

        try {
            rows.push_back(RunRow{make_mixture(weights), fid, std::move(metrics), minutes});
        } catch (const std::invalid_argument& e) {
            bad_cells.push_back("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!bad_fidelities.empty()) {
        fail("table " + table_path.string() + " has fidelity labels not in the manifest",
             bad_fidelities);
    }
    if (!bad_cells.empty()) {
        fail("table " + table_path.string() + " has invalid cells", bad_cells);
    }
    if (rows.empty()) {
        throw std::runtime_error("table " + table_path.string() + " has no data rows");
    }

    const std::map<std::string, double> costs = resolve_costs(
        rows, manifest.fidelity_parameter_counts, manifest.time_column.has_value(),
        manifest.explicit_costs);
    std::vector<FidelitySpec> specs;
    for (const auto& [id, count] : manifest.fidelity_parameter_counts) {
        specs.push_back(FidelitySpec{id, count, 1.0, costs.at(id)});
    }

    RunTable table;
    table.domain_names = manifest.mixture_columns;
    table.fidelities = FidelitySet::create(std::move(specs));
    table.metric_columns = manifest.metric_columns;
    table.time_column = manifest.time_column;
    table.rows = std::move(rows);

    for (const auto& [id, expected] : manifest.expected_counts) {
        const std::size_t actual = table.count_at(id);
        if (actual != expected) {
            log_warn("table " + table_path.string() + ": fidelity '" + id + "' has " +
                     std::to_string(actual) + " rows, manifest expects " +
                     std::to_string(expected));
        }
    }
    return table;
}

void write_run_table_csv(const RunTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    char buf[40];
    const auto number = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };

    for (const std::string& d : table.domain_names) out << d << ',';
    out << "fidelity";
    for (const auto& [name, orientation] : table.metric_columns) out << ',' << name;
    if (table.time_column) out << ',' << *table.time_column;
    out << '\n';

    std::size_t row_no = 0;
    for (const RunRow& row : table.rows) {
        ++row_no;
        for (std::size_t k = 0; k < row.mixture.dim(); ++k) out << number(row.mixture[k]) << ',';
        out << row.fidelity_id;
        for (const auto& [name, orientation] : table.metric_columns) {
            out << ',' << number(row.metrics.at(name));
        }
        if (table.time_column) {
            if (!row.time_minutes) {
                throw std::runtime_error("row " + std::to_string(row_no) +
                                         " has no time value; cannot serialize the time column");
            }
            out << ',' << number(*row.time_minutes);
        }
        out << '\n';
    }
}

Manifest manifest_for(const RunTable& table) {
    Manifest m;
    m.mixture_columns = table.domain_names;
    m.fidelity_column = "fidelity";
    m.metric_columns = table.metric_columns;
    m.time_column = table.time_column;
    for (const FidelitySpec& spec : table.fidelities.levels()) {
        m.fidelity_parameter_counts[spec.id] = spec.parameter_count;
        m.explicit_costs[spec.id] = spec.cost;
    }
    return m;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    manifest.validate();
    nlohmann::json j;
    j["mixture_columns"] = manifest.mixture_columns;
    j["fidelity_column"] = manifest.fidelity_column;
    for (const auto& [name, orientation] : manifest.metric_columns) {
        j["metric_columns"][name] = orientation == Orientation::kHigherIsBetter
                                        ? "higher_is_better"
                                        : "lower_is_better";
    }
    j["fidelities"] = manifest.fidelity_parameter_counts;
    if (manifest.time_column) j["time_column"] = *manifest.time_column;
    if (!manifest.explicit_costs.empty()) j["costs"] = manifest.explicit_costs;
    if (!manifest.expected_counts.empty()) j["expected_counts"] = manifest.expected_counts;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void SyntheticSpec::validate() const {
    if (dims < 2) throw std::invalid_argument("synthetic spec: dims >= 2");
    if (counts.empty()) throw std::invalid_argument("synthetic spec: counts is empty");
    for (const std::size_t c : counts) {
        if (c < 1) throw std::invalid_argument("synthetic spec: each fidelity needs >= 1 row");
    }
    if (correlation.size() != 1 && correlation.size() != counts.size()) {
        throw std::invalid_argument("synthetic spec: correlation is one shared value or one "
                                    "per fidelity");
    }
    for (const double rho : correlation) {
        if (!(rho >= 0.0 && rho <= 1.0)) {
            throw std::invalid_argument("synthetic spec: correlation must lie in [0, 1]");
        }
    }
    if (!(noise_sd >= 0.0)) throw std::invalid_argument("synthetic spec: noise_sd >= 0");
    if (!parameter_counts.empty()) {
        if (parameter_counts.size() != counts.size()) {
            throw std::invalid_argument("synthetic spec: parameter_counts size mismatch");
        }
        // counts/correlation are indexed lowest fidelity first, so the
        // parameter counts must already be in ascending order.
        if (std::adjacent_find(parameter_counts.begin(), parameter_counts.end(),
                               std::greater_equal<>{}) != parameter_counts.end()) {
            throw std::invalid_argument(
                "synthetic spec: parameter_counts must be strictly increasing");
        }
    }
    if (!costs.empty() && costs.size() != counts.size()) {
        throw std::invalid_argument("synthetic spec: costs size mismatch");
    }
    for (const double c : costs) {
        if (!(c > 0.0)) throw std::invalid_argument("synthetic spec: costs must be positive");
    }
}

SyntheticTable make_synthetic_table(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();
    const std::size_t n_fidelities = spec.counts.size();

    std::vector<std::uint64_t> params = spec.parameter_counts;
    if (params.empty()) {
        params.resize(n_fidelities);
        std::iota(params.begin(), params.end(), std::uint64_t{1});
    }
    std::vector<double> costs = spec.costs;
    if (costs.empty()) {
        const std::uint64_t max_params = *std::max_element(params.begin(), params.end());
        for (const std::uint64_t p : params) {
            costs.push_back(static_cast<double>(p) / static_cast<double>(max_params));
        }
    }

    // One shared candidate pool; fidelity k keeps the first counts[k]
    // mixtures, so every smaller pool nests inside the larger ones.
    const std::size_t pool_size = *std::max_element(spec.counts.begin(), spec.counts.end());
    const std::vector<double> alpha(static_cast<std::size_t>(spec.dims), 1.0);
    auto mix_rng = make_rng(seed, "synthetic-mixtures");
    std::vector<MixtureWeights> pool;
    pool.reserve(pool_size);
    for (std::size_t i = 0; i < pool_size; ++i) pool.push_back(sample_dirichlet(alpha, mix_rng));

    // Ground truth g and one independent distractor h_k per fidelity, all
    // quadratic-plus-linear with a Dirichlet-placed peak.
    auto truth_rng = make_rng(seed, "synthetic-truth");
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto draw_landscape = [&]() {
        MixtureWeights peak = sample_dirichlet(alpha, truth_rng);
        std::vector<double> slope(static_cast<std::size_t>(spec.dims));
        for (double& w : slope) w = normal(truth_rng);
        return [peak = std::move(peak), slope = std::move(slope)](const MixtureWeights& pi) {
            double quad = 0.0, lin = 0.0;
            for (std::size_t k = 0; k < pi.dim(); ++k) {
                const double diff = pi[k] - peak[k];
                quad += diff * diff;
                lin += slope[k] * pi[k];
            }
            return 1.0 - quad + 0.05 * lin;
        };
    };
    const auto g = draw_landscape();
    std::vector<std::function<double(const MixtureWeights&)>> distractors;
    for (std::size_t k = 0; k < n_fidelities; ++k) distractors.push_back(draw_landscape());

    auto noise_rng = make_rng(seed, "synthetic-noise");
    RunTable table;
    table.domain_names.reserve(static_cast<std::size_t>(spec.dims));
    for (int k = 0; k < spec.dims; ++k) table.domain_names.push_back("d" + std::to_string(k));
    table.metric_columns = {{kSyntheticMetric, Orientation::kHigherIsBetter}};

    std::vector<FidelitySpec> specs;
    for (std::size_t k = 0; k < n_fidelities; ++k) {
        specs.push_back(FidelitySpec{"f" + std::to_string(k), params[k], 1.0, costs[k]});
    }
    table.fidelities = FidelitySet::create(std::move(specs));

    for (std::size_t k = 0; k < n_fidelities; ++k) {
        const double rho = spec.correlation.size() == 1 ? spec.correlation[0]
                                                        : spec.correlation[k];
        const std::string id = "f" + std::to_string(k);
        for (std::size_t i = 0; i < spec.counts[k]; ++i) {
            const double value = rho * g(pool[i]) + (1.0 - rho) * distractors[k](pool[i]) +
                                 spec.noise_sd * normal(noise_rng);
            table.rows.push_back(
                RunRow{pool[i], id, {{kSyntheticMetric, value}}, std::nullopt});
        }
    }

    const std::string target_id = table.fidelities[table.fidelities.target_index()].id;
    SyntheticTable out{std::move(table), 0, -std::numeric_limits<double>::infinity()};
    for (std::size_t r = 0; r < out.table.rows.size(); ++r) {
        const RunRow& row = out.table.rows[r];
        if (row.fidelity_id != target_id) continue;
        const double score = row.metrics.at(kSyntheticMetric);
        if (score > out.target_optimum_value) {
            out.target_optimum_value = score;
            out.target_optimum_row = r;
        }
    }
    return out;
}

}  // namespace mixopt
