#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixopt/run_table.hpp"

using namespace mixopt;
namespace fs = std::filesystem;

namespace {

// Scratch directory removed when the test ends.
struct TempDir {
    fs::path path;

    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() /
               ("mixopt-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }

    fs::path file(const std::string& name, const std::string& contents) const {
        const fs::path p = path / name;
        std::ofstream out(p);
        out << contents;
        return p;
    }
};

Manifest two_level_manifest() {
    Manifest m;
    m.mixture_columns = {"web", "code"};
    m.fidelity_column = "fidelity";
    m.metric_columns = {{"ppl", Orientation::kLowerIsBetter},
                        {"acc", Orientation::kHigherIsBetter}};
    m.fidelity_parameter_counts = {{"small", 100}, {"large", 400}};
    return m;
}

constexpr const char* kBasicCsv =
    "web,code,fidelity,ppl,acc,minutes\n"
    "0.3,0.7,small,10.5,0.61,5.0\n"
    "\"0.5\",\"0.5\",small,9.8,0.64,5.2\r\n"
    "-0.0000000001,1.0,small,11.0,0.55,4.8\n"
    "0.6,0.6,large,8.0,0.70,20.0\n";

}  // namespace

TEST_CASE("loading handles quoting, CRLF, clamping and renormalization") {
    TempDir dir;
    Manifest m = two_level_manifest();
    m.time_column = "minutes";
    const fs::path csv = dir.file("runs.csv", kBasicCsv);

    const RunTable table = load_run_table(csv, m);
    REQUIRE(table.rows.size() == 4);
    CHECK(table.domain_names == std::vector<std::string>{"web", "code"});
    CHECK(table.orientation_of("ppl") == Orientation::kLowerIsBetter);
    CHECK(table.orientation_of("acc") == Orientation::kHigherIsBetter);
    CHECK_THROWS_AS(table.orientation_of("nope"), std::out_of_range);
    CHECK(table.has_metric("acc"));
    CHECK(!table.has_metric("nope"));
    CHECK(table.count_at("small") == 3);

    // Quoted fields parse like bare ones; CRLF is tolerated.
    CHECK(table.rows[1].mixture == make_mixture({0.5, 0.5}));
    // Tiny negative export noise clamps to zero.
    CHECK(table.rows[2].mixture[0] == 0.0);
    CHECK(table.rows[2].mixture[1] == 1.0);
    // Weights renormalize onto the simplex.
    CHECK(table.rows[3].mixture == make_mixture({0.5, 0.5}));
    CHECK(table.rows[0].metrics.at("ppl") == 10.5);
    CHECK(table.rows[0].time_minutes == 5.0);
}

TEST_CASE("cost precedence: explicit beats time beats parameter ratio") {
    TempDir dir;
    const fs::path csv = dir.file("runs.csv", kBasicCsv);

    Manifest no_time = two_level_manifest();
    {
        // No time column, no explicit costs: parameter-count ratio.
        const RunTable t = load_run_table(csv, no_time);
        const CostModel costs = CostModel::from_table(t);
        CHECK(costs.cost("small") == doctest::Approx(0.25));
        CHECK(costs.cost("large") == doctest::Approx(1.0));
    }
    {
        // Time column present: per-fidelity mean minutes.
        Manifest m = two_level_manifest();
        m.time_column = "minutes";
        const RunTable t = load_run_table(csv, m);
        const CostModel costs = CostModel::from_table(t);
        CHECK(costs.cost("small") == doctest::Approx(5.0));
        CHECK(costs.cost("large") == doctest::Approx(20.0));
    }
    {
        // Explicit costs win over everything.
        Manifest m = two_level_manifest();
        m.time_column = "minutes";
        m.explicit_costs = {{"small", 2.0}, {"large", 3.0}};
        const RunTable t = load_run_table(csv, m);
        const CostModel costs = CostModel::from_table(t);
        CHECK(costs.cost("small") == doctest::Approx(2.0));
        CHECK(costs.cost("large") == doctest::Approx(3.0));
    }
    {
        // Call-site overrides sit on top of the loaded costs.
        const RunTable t = load_run_table(csv, no_time);
        const CostModel costs = CostModel::from_table(t, {{"small", 0.1}});
        CHECK(costs.cost("small") == doctest::Approx(0.1));
        CHECK(costs.cost("large") == doctest::Approx(1.0));
        CHECK_THROWS_WITH_AS(CostModel::from_table(t, {{"huge", 1.0}}),
                             doctest::Contains("unknown fidelity"), std::runtime_error);
    }
}

TEST_CASE("loading rejects malformed tables with named offenders") {
    TempDir dir;
    const Manifest m = two_level_manifest();

    SUBCASE("missing column") {
        const fs::path csv = dir.file("t.csv", "web,fidelity,ppl,acc\n0.3,small,1,2\n");
        CHECK_THROWS_WITH_AS(load_run_table(csv, m), doctest::Contains("code"),
                             std::runtime_error);
    }
    SUBCASE("non-numeric cell") {
        const fs::path csv = dir.file(
            "t.csv", "web,code,fidelity,ppl,acc\n0.3,0.7,small,oops,0.6\n");
        CHECK_THROWS_WITH_AS(load_run_table(csv, m), doctest::Contains("line 2"),
                             std::runtime_error);
    }
    SUBCASE("nan cell") {
        const fs::path csv = dir.file(
            "t.csv", "web,code,fidelity,ppl,acc\n0.3,0.7,small,nan,0.6\n");
        CHECK_THROWS_AS(load_run_table(csv, m), std::runtime_error);
    }
    SUBCASE("unknown fidelity label") {
        const fs::path csv = dir.file(
            "t.csv", "web,code,fidelity,ppl,acc\n0.3,0.7,medium,9.0,0.6\n");
        CHECK_THROWS_WITH_AS(load_run_table(csv, m), doctest::Contains("medium"),
                             std::runtime_error);
    }
    SUBCASE("ragged row") {
        const fs::path csv = dir.file(
            "t.csv", "web,code,fidelity,ppl,acc\n0.3,0.7,small,9.0\n");
        CHECK_THROWS_WITH_AS(load_run_table(csv, m), doctest::Contains("fields"),
                             std::runtime_error);
    }
    SUBCASE("negative weight beyond the clamp") {
        const fs::path csv = dir.file(
            "t.csv", "web,code,fidelity,ppl,acc\n-0.2,1.2,small,9.0,0.6\n");
        CHECK_THROWS_AS(load_run_table(csv, m), std::runtime_error);
    }
    SUBCASE("header only") {
        const fs::path csv = dir.file("t.csv", "web,code,fidelity,ppl,acc\n");
        CHECK_THROWS_WITH_AS(load_run_table(csv, m), doctest::Contains("no data rows"),
                             std::runtime_error);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_WITH_AS(load_run_table(dir.path / "absent.csv", m),
                             doctest::Contains("cannot open"), std::runtime_error);
    }
}

TEST_CASE("manifest validation and JSON parsing errors") {
    TempDir dir;

    SUBCASE("rejects a single mixture column") {
        Manifest m = two_level_manifest();
        m.mixture_columns = {"web"};
        CHECK_THROWS_WITH_AS(m.validate(), doctest::Contains("two mixture columns"),
                             std::runtime_error);
    }
    SUBCASE("rejects costs for undeclared fidelities") {
        Manifest m = two_level_manifest();
        m.explicit_costs = {{"medium", 1.0}};
        CHECK_THROWS_WITH_AS(m.validate(), doctest::Contains("medium"), std::runtime_error);
    }
    SUBCASE("rejects non-positive costs") {
        Manifest m = two_level_manifest();
        m.explicit_costs = {{"small", 0.0}};
        CHECK_THROWS_AS(m.validate(), std::runtime_error);
    }
    SUBCASE("rejects invalid JSON") {
        const fs::path p = dir.file("m.json", "{ not json");
        CHECK_THROWS_WITH_AS(load_manifest(p), doctest::Contains("not valid JSON"),
                             std::runtime_error);
    }
    SUBCASE("rejects missing keys") {
        const fs::path p = dir.file("m.json", R"({"mixture_columns": ["a", "b"]})");
        CHECK_THROWS_AS(load_manifest(p), std::runtime_error);
    }
    SUBCASE("rejects unknown orientation strings") {
        const fs::path p = dir.file("m.json", R"({
            "mixture_columns": ["a", "b"],
            "fidelity_column": "fidelity",
            "metric_columns": {"acc": "bigly"},
            "fidelities": {"small": 100}
        })");
        CHECK_THROWS_WITH_AS(load_manifest(p), doctest::Contains("bigly"), std::runtime_error);
    }
}

TEST_CASE("metric targets average oriented columns") {
    TempDir dir;
    Manifest m = two_level_manifest();
    const RunTable table = load_run_table(dir.file("t.csv", kBasicCsv), m);

    const MetricTarget both = MetricTarget::create(table, "mix", {"acc", "ppl"});
    CHECK(both.name() == "mix");
    // acc stays, ppl is negated (lower is better).
    CHECK(both.score(table.rows[0]) == doctest::Approx(0.5 * (0.61 - 10.5)));

    CHECK_THROWS_WITH_AS(MetricTarget::create(table, "bad", {"acc", "nope"}),
                         doctest::Contains("nope"), std::runtime_error);
    CHECK_THROWS_AS(MetricTarget::create(table, "empty", {}), std::invalid_argument);
}

TEST_CASE("synthetic tables are deterministic and nested across fidelities") {
    SyntheticSpec spec;
    spec.dims = 4;
    spec.counts = {20, 10, 6};
    spec.correlation = {0.8};

    const SyntheticTable a = make_synthetic_table(spec, 42);
    const SyntheticTable b = make_synthetic_table(spec, 42);
    REQUIRE(a.table.rows.size() == b.table.rows.size());
    for (std::size_t i = 0; i < a.table.rows.size(); ++i) {
        CHECK(a.table.rows[i].mixture == b.table.rows[i].mixture);
        CHECK(a.table.rows[i].metrics.at(kSyntheticMetric) ==
              b.table.rows[i].metrics.at(kSyntheticMetric));
    }
    CHECK(a.target_optimum_row == b.target_optimum_row);

    const SyntheticTable c = make_synthetic_table(spec, 43);
    bool identical = true;
    for (std::size_t i = 0; i < a.table.rows.size(); ++i) {
        identical = identical && a.table.rows[i].metrics.at(kSyntheticMetric) ==
                                     c.table.rows[i].metrics.at(kSyntheticMetric);
    }
    CHECK(!identical);

    // Candidate pools nest: every target mixture exists at every fidelity.
    std::set<std::vector<double>> f0_pool;
    for (const RunRow& row : a.table.rows) {
        if (row.fidelity_id == "f0") f0_pool.insert(row.mixture.vec());
    }
    for (const RunRow& row : a.table.rows) {
        CHECK(f0_pool.count(row.mixture.vec()) == 1);
    }

    // The recorded optimum is the target-fidelity max.
    CHECK(a.table.rows[a.target_optimum_row].fidelity_id == "f2");
    for (const RunRow& row : a.table.rows) {
        if (row.fidelity_id == "f2") {
            CHECK(row.metrics.at(kSyntheticMetric) <= a.target_optimum_value);
        }
    }
}

TEST_CASE("perfectly correlated fidelities agree on shared mixtures") {
    SyntheticSpec spec;
    spec.dims = 3;
    spec.counts = {12, 7};
    spec.correlation = {1.0};

    const SyntheticTable synth = make_synthetic_table(spec, 5);
    for (const RunRow& row : synth.table.rows) {
        if (row.fidelity_id != "f1") continue;
        for (const RunRow& other : synth.table.rows) {
            if (other.fidelity_id == "f0" && other.mixture == row.mixture) {
                CHECK(other.metrics.at(kSyntheticMetric) ==
                      doctest::Approx(row.metrics.at(kSyntheticMetric)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("synthetic spec validation") {
    SyntheticSpec spec;
    spec.dims = 1;
    CHECK_THROWS_AS(make_synthetic_table(spec, 0), std::invalid_argument);

    spec = SyntheticSpec{};
    spec.correlation = {0.5, 0.6};  // 3 fidelities by default
    CHECK_THROWS_AS(make_synthetic_table(spec, 0), std::invalid_argument);

    spec = SyntheticSpec{};
    spec.correlation = {1.5};
    CHECK_THROWS_AS(make_synthetic_table(spec, 0), std::invalid_argument);

    spec = SyntheticSpec{};
    spec.parameter_counts = {5, 5, 7};  // not strictly increasing
    CHECK_THROWS_AS(make_synthetic_table(spec, 0), std::invalid_argument);

    spec = SyntheticSpec{};
    spec.costs = {1.0};  // size mismatch
    CHECK_THROWS_AS(make_synthetic_table(spec, 0), std::invalid_argument);
}

TEST_CASE("write + manifest_for + load round-trips a table exactly") {
    SyntheticSpec spec;
    spec.dims = 3;
    spec.counts = {9, 5};
    spec.correlation = {0.7};
    spec.costs = {0.37, 1.13};  // exercises explicit costs in the manifest
    const RunTable original = make_synthetic_table(spec, 17).table;

    TempDir dir;
    const fs::path csv = dir.path / "table.csv";
    const fs::path manifest_path = dir.path / "manifest.json";
    write_run_table_csv(original, csv);
    save_manifest(manifest_for(original), manifest_path);

    const RunTable loaded = load_run_table(csv, load_manifest(manifest_path));
    CHECK(loaded.domain_names == original.domain_names);
    REQUIRE(loaded.fidelities.size() == original.fidelities.size());
    for (std::size_t k = 0; k < loaded.fidelities.size(); ++k) {
        CHECK(loaded.fidelities[k].id == original.fidelities[k].id);
        CHECK(loaded.fidelities[k].parameter_count == original.fidelities[k].parameter_count);
        CHECK(loaded.fidelities[k].cost == original.fidelities[k].cost);
        CHECK(loaded.fidelities[k].scale == original.fidelities[k].scale);
    }
    REQUIRE(loaded.rows.size() == original.rows.size());
    for (std::size_t i = 0; i < loaded.rows.size(); ++i) {
        // 17-significant-digit formatting makes the round-trip bit-exact.
        CHECK(loaded.rows[i].mixture == original.rows[i].mixture);
        CHECK(loaded.rows[i].fidelity_id == original.rows[i].fidelity_id);
        CHECK(loaded.rows[i].metrics.at(kSyntheticMetric) ==
              original.rows[i].metrics.at(kSyntheticMetric));
    }
}

TEST_CASE("tables with time columns round-trip and reject incomplete rows") {
    TempDir dir;
    Manifest m = two_level_manifest();
    m.time_column = "minutes";
    RunTable table = load_run_table(dir.file("t.csv", kBasicCsv), m);

    const fs::path out = dir.path / "echo.csv";
    write_run_table_csv(table, out);
    const RunTable loaded = load_run_table(out, manifest_for(table));
    REQUIRE(loaded.rows.size() == table.rows.size());
    for (std::size_t i = 0; i < loaded.rows.size(); ++i) {
        CHECK(loaded.rows[i].time_minutes == table.rows[i].time_minutes);
    }

    table.rows[1].time_minutes.reset();
    CHECK_THROWS_WITH_AS(write_run_table_csv(table, out), doctest::Contains("time"),
                         std::runtime_error);
}
