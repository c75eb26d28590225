#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "mixopt/acquisition.hpp"
#include "mixopt/math.hpp"
#include "mixopt/rng.hpp"

using namespace mixopt;

namespace {

// Direct long-double evaluation of gamma*phi/(2*Phi) - log(Phi), usable
// where Phi(gamma) is comfortably above underflow.
double mes_term_direct(double gamma) {
    const long double g = gamma;
    const long double phi = expl(-0.5L * g * g) / sqrtl(2.0L * std::numbers::pi_v<long double>);
    const long double Phi = 0.5L * erfcl(-g / sqrtl(2.0L));
    return static_cast<double>(g * phi / (2.0L * Phi) - logl(Phi));
}

FittedGP flat_gp() {
    GPInputs inputs;
    inputs.mixtures.resize(2, 2);
    inputs.mixtures << 0.5, 0.5, 0.3, 0.7;
    inputs.scales = Eigen::VectorXd::Ones(2);
    Eigen::VectorXd y(2);
    y << 0.0, 0.0;
    GPHyperparams hp;
    hp.noise_var = 1e-2;
    return FittedGP::with_hyperparams(std::move(inputs), std::move(y), hp,
                                      /*use_scale_kernel=*/false);
}

}  // namespace

TEST_CASE("expected improvement matches Monte Carlo") {
    auto rng = make_rng(123);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int n_draws = 200000;
    for (int trial = 0; trial < 5; ++trial) {
        const double mu = 2.0 * unif(rng) - 1.0;
        const double sigma = 0.1 + unif(rng);
        const double best = 2.0 * unif(rng) - 1.0;

        double sum = 0.0, sum_sq = 0.0;
        for (int i = 0; i < n_draws; ++i) {
            const double imp = std::max(0.0, mu + sigma * normal(rng) - best);
            sum += imp;
            sum_sq += imp * imp;
        }
        const double mc = sum / n_draws;
        const double se =
            std::sqrt((sum_sq / n_draws - mc * mc) / static_cast<double>(n_draws));

        const double ei = expected_improvement({mu, sigma * sigma}, best);
        CHECK(std::abs(ei - mc) <= 3.5 * se + 1e-12);
    }
}

TEST_CASE("expected improvement degenerate and clamp behavior") {
    CHECK(expected_improvement({1.5, 0.0}, 1.0) == 0.5);  // deterministic improvement
    CHECK(expected_improvement({0.5, 0.0}, 1.0) == 0.0);  // deterministic, worse
    CHECK(expected_improvement({-5.0, 1e-4}, 5.0) >= 0.0);
    // EI grows with sigma at fixed mean below the incumbent.
    const double narrow = expected_improvement({0.0, 0.01}, 1.0);
    const double wide = expected_improvement({0.0, 1.0}, 1.0);
    CHECK(wide > narrow);
}

TEST_CASE("mes term matches a direct evaluation and is decreasing") {
    for (const double gamma : {-3.0, -1.0, 0.0, 1.0, 3.0}) {
        CHECK(mes_term(gamma) == doctest::Approx(mes_term_direct(gamma)).epsilon(1e-11));
    }
    CHECK(mes_term(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

    double prev = mes_term(-12.0);
    for (double gamma = -11.5; gamma <= 6.0; gamma += 0.5) {
        const double cur = mes_term(gamma);
        CHECK(cur < prev);
        CHECK(cur >= 0.0);
        prev = cur;
    }
}

TEST_CASE("mes term far-tail branch joins the direct branch smoothly") {
    // The implementation switches formulas at gamma = -35; values on either
    // side must agree with the long-double reference (which stays usable
    // well past the double-precision underflow of Phi).
    for (const double gamma : {-34.9, -35.0, -35.1, -37.0, -40.0}) {
        CHECK(mes_term(gamma) == doctest::Approx(mes_term_direct(gamma)).epsilon(1e-9));
    }
    // Deep tail stays finite and keeps growing as gamma -> -inf, even where
    // the direct form would divide 0 by 0.
    CHECK(std::isfinite(mes_term(-60.0)));
    CHECK(mes_term(-60.0) > mes_term(-40.0));
}

TEST_CASE("mes score averages over samples and divides by cost") {
    const PosteriorGaussian post{0.0, 1.0};
    const std::vector<double> maxima = {0.5, 1.0, 2.0};
    const double expected =
        (mes_term(0.5) + mes_term(1.0) + mes_term(2.0)) / 3.0;
    CHECK(mes_score(post, maxima, 1.0) == doctest::Approx(expected).epsilon(1e-14));
    // Halving the cost doubles the score exactly.
    CHECK(mes_score(post, maxima, 0.5) == 2.0 * mes_score(post, maxima, 1.0));
    CHECK_THROWS_AS(mes_score(post, maxima, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(mes_score(post, {}, 1.0), std::invalid_argument);
}

TEST_CASE("sampled maxima are deterministic per rng state and plausibly large") {
    const FittedGP gp = flat_gp();
    Eigen::MatrixXd grid(3, 2);
    grid << 0.9, 0.1, 0.5, 0.5, 0.1, 0.9;

    for (const MaxValueSampler sampler :
         {MaxValueSampler::kGumbel, MaxValueSampler::kPosteriorGrid}) {
        MaxValueConfig config;
        config.n_samples = 64;
        config.sampler = sampler;
        auto rng1 = make_rng(9);
        auto rng2 = make_rng(9);
        const std::vector<double> a = sample_max_values(gp, grid, 1.0, config, rng1);
        const std::vector<double> b = sample_max_values(gp, grid, 1.0, config, rng2);
        REQUIRE(a.size() == 64);
        CHECK(a == b);

        // The max over the grid can't concentrate below the largest
        // posterior mean (0 everywhere here): most draws land above it.
        int above = 0;
        for (const double v : a) above += v > 0.0;
        CHECK(above > 32);
    }
}

TEST_CASE("ei selection requires a single fidelity") {
    const FittedGP gp = flat_gp();
    const std::vector<AcquisitionCandidate> mixed = {
        {make_mixture({0.5, 0.5}), "small", 0.0, 1.0},
        {make_mixture({0.3, 0.7}), "big", 1.0, 10.0},
    };
    const std::vector<bool> observed(2, false);
    CHECK_THROWS_AS(select_next_ei(gp, mixed, observed, 0.0), std::invalid_argument);
}

TEST_CASE("ei selection prefers optimistic candidates and skips observed ones") {
    GPInputs inputs;
    inputs.mixtures.resize(2, 2);
    inputs.mixtures << 0.9, 0.1, 0.1, 0.9;
    inputs.scales = Eigen::VectorXd::Ones(2);
    Eigen::VectorXd y(2);
    y << 1.0, -1.0;  // high score near (0.9, 0.1)
    GPHyperparams hp;
    hp.lengthscale = Eigen::VectorXd::Constant(1, 0.4);
    hp.noise_var = 1e-4;
    const FittedGP gp = FittedGP::with_hyperparams(std::move(inputs), std::move(y), hp, false);

    const std::vector<AcquisitionCandidate> candidates = {
        {make_mixture({0.8, 0.2}), "f", 1.0, 1.0},   // near the good point
        {make_mixture({0.2, 0.8}), "f", 1.0, 1.0},   // near the bad point
    };
    std::vector<bool> observed(2, false);
    const auto pick = select_next_ei(gp, candidates, observed, 0.5);
    REQUIRE(pick.has_value());
    CHECK(pick->index == 0);
    CHECK(pick->score > 0.0);

    observed[0] = true;
    const auto second = select_next_ei(gp, candidates, observed, 0.5);
    REQUIRE(second.has_value());
    CHECK(second->index == 1);

    observed[1] = true;
    CHECK(!select_next_ei(gp, candidates, observed, 0.5).has_value());
}

TEST_CASE("mes selection picks the cheapest fidelity when posteriors agree") {
    // With the scale kernel off every fidelity is exchangeable, so the
    // cost-normalized score must send the first query to the cheapest level.
    const FittedGP gp = flat_gp();
    const std::vector<AcquisitionCandidate> candidates = {
        {make_mixture({0.5, 0.5}), "big", 1.0, 100.0},
        {make_mixture({0.5, 0.5}), "mid", 0.5, 10.0},
        {make_mixture({0.5, 0.5}), "small", 0.0, 1.0},
    };
    const std::vector<bool> observed(3, false);
    const std::vector<double> maxima = {0.4, 0.8, 1.3};
    const auto pick = select_next_mes(gp, candidates, observed, maxima);
    REQUIRE(pick.has_value());
    CHECK(candidates[pick->index].fidelity_id == "small");
}

TEST_CASE("score ties break toward cost then lexicographic mixture") {
    const FittedGP gp = flat_gp();
    const std::vector<bool> open(2, false);

    // Identical mixtures at one fidelity tie exactly on EI; the cheaper
    // candidate must win.
    const std::vector<AcquisitionCandidate> by_cost = {
        {make_mixture({0.5, 0.5}), "a", 1.0, 2.0},
        {make_mixture({0.5, 0.5}), "a", 1.0, 1.0},
    };
    const auto cost_pick = select_next_ei(gp, by_cost, open, 0.0);
    REQUIRE(cost_pick.has_value());
    CHECK(cost_pick->index == 1);

    // A GP trained on the symmetric point (0.5, 0.5) gives bitwise-equal
    // posteriors at the two mirror mixtures, so the score and cost both tie
    // and the lexicographically smaller mixture wins.
    GPInputs one;
    one.mixtures.resize(1, 2);
    one.mixtures << 0.5, 0.5;
    one.scales = Eigen::VectorXd::Ones(1);
    Eigen::VectorXd y0(1);
    y0 << 0.0;
    GPHyperparams hp;
    hp.noise_var = 1e-2;
    const FittedGP symmetric =
        FittedGP::with_hyperparams(std::move(one), std::move(y0), hp, false);
    const std::vector<AcquisitionCandidate> by_mixture = {
        {make_mixture({0.6, 0.4}), "a", 1.0, 1.0},
        {make_mixture({0.4, 0.6}), "a", 1.0, 1.0},
    };
    const auto mix_pick = select_next_ei(symmetric, by_mixture, open, 0.0);
    REQUIRE(mix_pick.has_value());
    CHECK(mix_pick->index == 1);
}

TEST_CASE("ei selection rejects candidate sets that span fidelities") {
    const FittedGP gp = flat_gp();
    const std::vector<AcquisitionCandidate> mixed = {
        {make_mixture({0.5, 0.5}), "small", 0.0, 1.0},
        {make_mixture({0.5, 0.5}), "big", 1.0, 4.0},
    };
    CHECK_THROWS_AS(select_next_ei(gp, mixed, std::vector<bool>(2, false), 0.0),
                    std::invalid_argument);
}
