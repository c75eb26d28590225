#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixopt/ard.hpp"
#include "mixopt/rng.hpp"

using namespace mixopt;
namespace fs = std::filesystem;

namespace {

// Simplex design plus scores that depend on two of the five domains only.
struct Planted {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
};

Planted planted_two_relevant(int n, std::uint64_t seed) {
    const int d = 5;
    const std::vector<double> alpha(static_cast<std::size_t>(d), 1.0);
    Planted p;
    p.X.resize(n, d);
    p.y.resize(n);
    for (int i = 0; i < n; ++i) {
        const MixtureWeights pi = sample_dirichlet(alpha, seed + static_cast<std::uint64_t>(i));
        for (int j = 0; j < d; ++j) p.X(i, j) = pi[static_cast<std::size_t>(j)];
        p.y[i] = std::sin(6.0 * std::numbers::pi * p.X(i, 1)) + 2.0 * p.X(i, 3);
    }
    return p;
}

FitConfig quick_fit(std::uint64_t seed = 0) {
    FitConfig config;
    config.restarts = 3;
    config.seed = seed;
    return config;
}

}  // namespace

TEST_CASE("ard shortens lengthscales on the dimensions that matter") {
    const Planted p = planted_two_relevant(96, 1000);
    const ArdFit fit = fit_ard_lengthscales(p.X, p.y, quick_fit());

    REQUIRE(fit.lengthscales.size() == 5);
    // The oscillating dimension needs the shortest lengthscale by far, and
    // the two planted dimensions both beat every irrelevant one.
    Eigen::Index shortest;
    fit.lengthscales.minCoeff(&shortest);
    CHECK(shortest == 1);
    const double relevant_max = std::max(fit.lengthscales[1], fit.lengthscales[3]);
    for (const Eigen::Index j : {0, 2, 4}) {
        CHECK(fit.lengthscales[j] > relevant_max);
    }
}

TEST_CASE("the ard fit never trails the shared fit that seeded it") {
    const Planted p = planted_two_relevant(64, 2000);
    const ArdFit fit = fit_ard_lengthscales(p.X, p.y, quick_fit());
    CHECK(fit.log_marginal >= fit.shared_log_marginal - 1e-6);
}

TEST_CASE("lengthscales ignore affine rescaling of the scores") {
    const Planted p = planted_two_relevant(48, 3000);
    const ArdFit base = fit_ard_lengthscales(p.X, p.y, quick_fit(4));
    const ArdFit scaled = fit_ard_lengthscales(p.X, (7.0 * p.y.array() + 11.0).matrix(),
                                               quick_fit(4));
    for (Eigen::Index j = 0; j < base.lengthscales.size(); ++j) {
        CHECK(scaled.lengthscales[j] ==
              doctest::Approx(base.lengthscales[j]).epsilon(1e-6));
    }
}

TEST_CASE("fitting requires at least four observations") {
    Eigen::MatrixXd X(3, 2);
    X << 0.2, 0.8, 0.5, 0.5, 0.9, 0.1;
    Eigen::VectorXd y(3);
    y << 0.1, 0.2, 0.3;
    CHECK_THROWS_AS(fit_ard_lengthscales(X, y), std::invalid_argument);
}

TEST_CASE("importance matrices normalize each benchmark column to max 1") {
    SyntheticSpec spec;
    spec.dims = 3;
    spec.counts = {40};
    spec.correlation = {1.0};
    const SyntheticTable synth = make_synthetic_table(spec, 77);

    FitConfig config = quick_fit(9);
    const ImportanceMatrix m =
        importance_matrix(synth.table, "f0", std::vector<std::string>{kSyntheticMetric}, config);
    CHECK(m.domains == synth.table.domain_names);
    REQUIRE(m.benchmarks == std::vector<std::string>{kSyntheticMetric});
    REQUIRE(m.values.rows() == 3);
    REQUIRE(m.values.cols() == 1);
    CHECK(m.values.col(0).maxCoeff() == 1.0);
    for (Eigen::Index k = 0; k < m.values.rows(); ++k) {
        CHECK(m.values(k, 0) > 0.0);
        CHECK(m.values(k, 0) <= 1.0);
    }

    // Determinism: same seed, same matrix.
    const ImportanceMatrix again =
        importance_matrix(synth.table, "f0", std::vector<std::string>{kSyntheticMetric}, config);
    CHECK((m.values - again.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("importance csv round-trips") {
    ImportanceMatrix m;
    m.domains = {"web", "code", "math"};
    m.benchmarks = {"acc", "ppl"};
    m.values.resize(3, 2);
    m.values << 1.0, 0.25, 0.125, 1.0, 0.5, 1.0 / 3.0;

    const fs::path path =
        fs::temp_directory_path() / ("mixopt-ard-" + std::to_string(std::random_device{}()) +
                                     ".csv");
    write_importance_csv(m, path.string());
    const ImportanceMatrix loaded = load_importance_csv(path.string());
    fs::remove(path);

    CHECK(loaded.domains == m.domains);
    CHECK(loaded.benchmarks == m.benchmarks);
    REQUIRE(loaded.values.rows() == m.values.rows());
    REQUIRE(loaded.values.cols() == m.values.cols());
    CHECK((loaded.values - m.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("importance requires rows at the requested fidelity") {
    SyntheticSpec spec;
    spec.dims = 2;
    spec.counts = {8};
    spec.correlation = {1.0};
    const SyntheticTable synth = make_synthetic_table(spec, 3);
    CHECK_THROWS(importance_matrix(synth.table, "f9",
                                   std::vector<std::string>{kSyntheticMetric}, quick_fit()));
}
