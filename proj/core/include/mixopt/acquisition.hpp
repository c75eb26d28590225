#pragma once

#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mixopt/gp.hpp"
#include "mixopt/mixture.hpp"

namespace mixopt {

/// EI of a Gaussian posterior over the incumbent `best_observed`:
/// sigma * (z Phi(z) + phi(z)) with z = (mu - best) / sigma. Degenerate
/// posteriors (sigma below 1e-12) fall back to max(0, mu - best).
double expected_improvement(const PosteriorGaussian& posterior, double best_observed);

/// One summand of the max-value entropy-search score at
/// gamma = (y_star - mu) / sigma:
///
///   gamma * phi(gamma) / (2 Phi(gamma)) - log Phi(gamma)
///
/// Evaluated in the log domain for gamma << 0 where Phi underflows. The
/// value is non-negative, decreasing in gamma, log(2) at gamma = 0, and
/// tends to 0 as gamma -> +inf.
double mes_term(double gamma);

/// Average of mes_term over sampled maxima, divided by the query cost.
double mes_score(const PosteriorGaussian& posterior, std::span<const double> max_values,
                 double cost);

enum class MaxValueSampler {
    // Fit a Gumbel to the CDF of the max of independent per-candidate
    // posteriors by quantile matching, then draw from it. Cheap; the default.
    kGumbel,
    // Draw joint posterior samples over the candidate grid and take each
    // draw's max. Exact (up to Monte Carlo), cubic in grid size.
    kPosteriorGrid,
};

struct MaxValueConfig {
    int n_samples = 10;
    MaxValueSampler sampler = MaxValueSampler::kGumbel;
};

/// Samples plausible values of the objective's maximum at `target_scale`
/// over a finite candidate grid (one row per mixture).
std::vector<double> sample_max_values(const FittedGP& gp, const Eigen::MatrixXd& candidate_mixtures,
                                      double target_scale, const MaxValueConfig& config,
                                      std::mt19937_64& rng);

/// One queryable (mixture, fidelity) pair and its price.
struct AcquisitionCandidate {
    MixtureWeights mixture;
    std::string fidelity_id;
    double scale = 1.0;
    double cost = 1.0;
};

struct SelectionResult {
    std::size_t index = 0;
    double score = 0.0;
};

/// Argmax of EI over unobserved candidates. All candidates must share one
/// fidelity (EI has no cost/fidelity trade-off). Returns nullopt when every
/// candidate is already observed. Score ties within 1e-12 break toward lower
/// cost, then lexicographically smaller mixture, then fidelity id.
std::optional<SelectionResult> select_next_ei(const FittedGP& gp,
                                              std::span<const AcquisitionCandidate> candidates,
                                              const std::vector<bool>& observed,
                                              double best_observed);

/// Argmax of the cost-normalized MES score over unobserved candidates, same
/// tie-breaking and exhaustion behavior as select_next_ei.
std::optional<SelectionResult> select_next_mes(const FittedGP& gp,
                                               std::span<const AcquisitionCandidate> candidates,
                                               const std::vector<bool>& observed,
                                               std::span<const double> max_values);

}  // namespace mixopt
