#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

// End-to-end checks against the command-line binary. The build bakes in the
// target path; MIXOPT_CLI overrides it, and the tests no-op when neither is
// available.
const char* cli_path() {
    if (const char* env = std::getenv("MIXOPT_CLI")) return env;
#ifdef MIXOPT_CLI_PATH
    return MIXOPT_CLI_PATH;
#else
    return nullptr;
#endif
}

struct TempDir {
    fs::path path;

    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() /
               ("mixopt-cli-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

struct CliResult {
    int status = -1;
    std::string output;  // stdout + stderr
};

CliResult run_cli(const TempDir& dir, const std::string& args) {
    const fs::path log = dir.path / "cli-output.txt";
    const std::string command =
        std::string(cli_path()) + " " + args + " > " + log.string() + " 2>&1";
    CliResult result;
    result.status = std::system(command.c_str());
    std::ifstream in(log);
    std::stringstream buf;
    buf << in.rdbuf();
    result.output = buf.str();
    return result;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("cli: synth then ingest round-trip") {
    if (!cli_path()) return;
    TempDir dir;
    const fs::path synth_dir = dir.path / "synthetic";

    const CliResult synth = run_cli(
        dir, "synth --dims 3 --counts 12,6 --rho 0.9 --seed 7 --out " + synth_dir.string());
    CHECK(synth.status == 0);
    CHECK(synth.output.find("target optimum") != std::string::npos);
    CHECK(fs::exists(synth_dir / "table.csv"));
    CHECK(fs::exists(synth_dir / "manifest.json"));

    const CliResult ingest = run_cli(dir, "ingest --table " + (synth_dir / "table.csv").string() +
                                              " --manifest " +
                                              (synth_dir / "manifest.json").string());
    CHECK(ingest.status == 0);
    CHECK(ingest.output.find("fidelities (2)") != std::string::npos);
    CHECK(ingest.output.find("total rows: 18") != std::string::npos);
}

TEST_CASE("cli: replay runs are deterministic per seed") {
    if (!cli_path()) return;
    TempDir dir;
    const std::string base =
        "run --synthetic --dims 3 --counts 10,6 --rho 0.9 --steps 8 --seeds 2 "
        "--methods mfbo,random ";

    const CliResult a = run_cli(dir, base + "--seed 3 --out " + (dir.path / "a").string());
    REQUIRE(a.status == 0);
    const CliResult b = run_cli(dir, base + "--seed 3 --out " + (dir.path / "b").string());
    REQUIRE(b.status == 0);

    for (const char* name : {"trace_mfbo_target.csv", "trace_random_target.csv",
                             "summary.csv"}) {
        const std::string left = slurp(dir.path / "a" / name);
        const std::string right = slurp(dir.path / "b" / name);
        REQUIRE(!left.empty());
        CHECK(left == right);
    }

    const CliResult c = run_cli(dir, base + "--seed 4 --out " + (dir.path / "c").string());
    REQUIRE(c.status == 0);
    CHECK(slurp(dir.path / "a" / "summary.csv") != slurp(dir.path / "c" / "summary.csv"));
}

TEST_CASE("cli: compare rebuilds a summary from trace files") {
    if (!cli_path()) return;
    TempDir dir;
    const CliResult run = run_cli(
        dir, "run --synthetic --dims 2 --counts 8,5 --steps 6 --seeds 2 --seed 1 "
             "--methods mfbo,random --out " + (dir.path / "results").string());
    REQUIRE(run.status == 0);

    const CliResult compare = run_cli(
        dir, "compare " + (dir.path / "results" / "trace_mfbo_target.csv").string() + " " +
                 (dir.path / "results" / "trace_random_target.csv").string() +
                 " --target target --out " + (dir.path / "cmp").string());
    CHECK(compare.status == 0);
    CHECK(fs::exists(dir.path / "cmp" / "summary.csv"));
    CHECK(compare.output.find("mfbo") != std::string::npos);
    CHECK(compare.output.find("random") != std::string::npos);
}

TEST_CASE("cli: importance writes a loadable csv") {
    if (!cli_path()) return;
    TempDir dir;
    const fs::path synth_dir = dir.path / "synthetic";
    REQUIRE(run_cli(dir, "synth --dims 3 --counts 24 --rho 1.0 --seed 5 --out " +
                             synth_dir.string())
                .status == 0);

    const fs::path out = dir.path / "importance.csv";
    const CliResult imp = run_cli(
        dir, "importance --table " + (synth_dir / "table.csv").string() + " --manifest " +
                 (synth_dir / "manifest.json").string() +
                 " --fidelity f0 --restarts 3 --out " + out.string());
    CHECK(imp.status == 0);
    CHECK(fs::exists(out));
    const std::string csv = slurp(out);
    CHECK(csv.find("domain") != std::string::npos);
    CHECK(csv.find("score") != std::string::npos);
}

TEST_CASE("cli: bad inputs exit nonzero with a diagnostic") {
    if (!cli_path()) return;
    TempDir dir;

    SUBCASE("mfbo on a single-fidelity table") {
        const CliResult r = run_cli(
            dir, "run --synthetic --dims 2 --counts 9 --steps 4 --seeds 1 --methods mfbo "
                 "--out " + (dir.path / "x").string());
        CHECK(r.status != 0);
        CHECK(r.output.find("--mode bo") != std::string::npos);
    }
    SUBCASE("zero-shot without a query fidelity") {
        const CliResult r = run_cli(
            dir, "run --synthetic --dims 2 --counts 8,4 --mode zero-shot --steps 4 "
                 "--seeds 1 --out " + (dir.path / "x").string());
        CHECK(r.status != 0);
        CHECK(r.output.find("query-fidelity") != std::string::npos);
    }
    SUBCASE("missing table file") {
        const CliResult r = run_cli(dir, "ingest --table " + (dir.path / "nope.csv").string() +
                                             " --manifest " + (dir.path / "nope.json").string());
        CHECK(r.status != 0);
        CHECK(r.output.find("error:") != std::string::npos);
    }
    SUBCASE("manifest column absent from the table") {
        std::ofstream(dir.path / "t.csv") << "a,b,fidelity,m\n0.5,0.5,f0,1.0\n";
        std::ofstream(dir.path / "m.json") << R"({
            "mixture_columns": ["a", "b", "c"],
            "fidelity_column": "fidelity",
            "metric_columns": {"m": "higher_is_better"},
            "fidelities": {"f0": 1}
        })";
        const CliResult r = run_cli(dir, "ingest --table " + (dir.path / "t.csv").string() +
                                             " --manifest " + (dir.path / "m.json").string());
        CHECK(r.status != 0);
        CHECK(r.output.find("c") != std::string::npos);
    }
}
