#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mixopt/fidelity.hpp"
#include "mixopt/mixture.hpp"
#include "mixopt/observation.hpp"

namespace mixopt {

/// Declarative description of a delimited run-table file: which columns hold
/// the mixture weights, the fidelity label, the metrics (with orientation),
/// and the optional wall-clock time, plus the parameter count behind each
/// fidelity label. Loaded from a small JSON file so external table layouts
/// never get hard-coded.
struct Manifest {
    std::vector<std::string> mixture_columns;
    std::string fidelity_column;
    std::vector<std::pair<std::string, Orientation>> metric_columns;
    std::optional<std::string> time_column;
    std::map<std::string, std::uint64_t> fidelity_parameter_counts;
    // Optional overrides / checks.
    std::map<std::string, double> explicit_costs;
    std::map<std::string, std::size_t> expected_counts;  // mismatch warns, never fails

    void validate() const;
};

Manifest load_manifest(const std::filesystem::path& path);

/// One completed run: a (renormalized) mixture trained at one fidelity and
/// its raw metric values.
struct RunRow {
    MixtureWeights mixture;
    std::string fidelity_id;
    std::map<std::string, double> metrics;
    std::optional<double> time_minutes;
};

/// In-memory benchmark table. Immutable once loaded; shared read-only by
/// concurrent replay jobs.
struct RunTable {
    std::vector<std::string> domain_names;
    FidelitySet fidelities;
    std::vector<std::pair<std::string, Orientation>> metric_columns;
    std::optional<std::string> time_column;
    std::vector<RunRow> rows;

    Orientation orientation_of(const std::string& metric) const;
    bool has_metric(const std::string& metric) const;
    std::size_t count_at(const std::string& fidelity_id) const;
};

/// A named subset of metric columns scored as their unweighted mean, after
/// flipping lower-is-better columns so that larger is always better
/// internally.
class MetricTarget {
  public:
    static MetricTarget create(const RunTable& table, std::string name,
                               std::vector<std::string> columns);

    const std::string& name() const { return name_; }
    std::span<const std::string> columns() const { return columns_; }
    double score(const RunRow& row) const;

  private:
    std::string name_;
    std::vector<std::string> columns_;
    std::vector<Orientation> orientations_;
};

/// Per-fidelity query price. The table's fidelity specs already carry
/// resolved costs (the loader applies the precedence manifest costs >
/// time-column mean > parameter-count ratio), so this just lifts them out,
/// with optional per-fidelity overrides on top.
struct CostModel {
    std::map<std::string, double> cost_by_fidelity;

    double cost(const std::string& fidelity_id) const;
    static CostModel from_table(const RunTable& table,
                                const std::map<std::string, double>& overrides = {});
};

/// Reads a comma-separated table (UTF-8, header row) through a manifest.
/// Rejects missing columns, non-numeric or NaN cells, and fidelity labels
/// absent from the manifest, naming the offenders. Mixture entries within
/// -1e-9 of zero are clamped to zero before simplex renormalization.
/// Per-fidelity row counts are checked against manifest expectations with a
/// warning on mismatch.
RunTable load_run_table(const std::filesystem::path& table_path, const Manifest& manifest);

/// Writes the table back out with columns: domains..., "fidelity",
/// metrics..., and the time column when present. manifest_for() describes
/// exactly this layout, so write + manifest_for + load round-trips.
void write_run_table_csv(const RunTable& table, const std::filesystem::path& path);

/// Manifest matching write_run_table_csv's layout, carrying the table's
/// parameter counts and per-fidelity costs.
Manifest manifest_for(const RunTable& table);

void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Synthetic-table recipe. The ground truth on the simplex is
/// quadratic-plus-linear, g(pi) = 1 - |pi - pi_peak|^2 + 0.05 * w . pi, with
/// pi_peak Dirichlet(1)-distributed and w standard normal. Fidelity k
/// observes correlation[k] * g + (1 - correlation[k]) * h_k + noise with h_k
/// an independent draw from the same family. Candidate mixtures are drawn
/// once and fidelity k keeps the first counts[k] of them, so smaller pools
/// nest inside larger ones and every target candidate exists at every
/// fidelity.
struct SyntheticSpec {
    int dims = 3;
    // Rows per fidelity, ordered from lowest to highest fidelity; the last
    // entry is the target.
    std::vector<std::size_t> counts = {32, 16, 10};
    // Either one shared value or one per fidelity.
    std::vector<double> correlation = {0.9};
    double noise_sd = 0.0;
    // Defaults: parameter counts 1..M and costs parameter_count / max.
    std::vector<std::uint64_t> parameter_counts;
    std::vector<double> costs;

    void validate() const;
};

struct SyntheticTable {
    RunTable table;
    std::size_t target_optimum_row = 0;   // row index into table.rows
    double target_optimum_value = 0.0;    // best internal score at the target fidelity
};

/// Deterministic per seed: identical spec + seed always produces an
/// identical table.
SyntheticTable make_synthetic_table(const SyntheticSpec& spec, std::uint64_t seed);

/// Single metric column name used by synthetic tables.
inline constexpr const char* kSyntheticMetric = "score";

}  // namespace mixopt
