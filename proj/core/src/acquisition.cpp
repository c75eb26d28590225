#include "mixopt/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mixopt/math.hpp"

namespace mixopt {

double expected_improvement(const PosteriorGaussian& posterior, double best_observed) {
    const double sigma = posterior.stddev();
    if (sigma < 1e-12) return std::max(0.0, posterior.mean - best_observed);
    const double z = (posterior.mean - best_observed) / sigma;
    return std::max(0.0, sigma * (z * norm_cdf(z) + norm_pdf(z)));
}

double mes_term(double gamma) {
    double term;
    if (gamma >= -35.0) {
        // erfc keeps full relative accuracy in the tail, so the direct form
        // is good until Phi itself underflows (around gamma = -37).
        const double cdf = norm_cdf(gamma);
        term = 0.5 * gamma * norm_pdf(gamma) / cdf - std::log(cdf);
    } else {
        // Deeper in the left tail Phi underflows and the two summands cancel
        // at order gamma^2/2, so substitute the Mills-ratio expansion
        // Phi(g) ~ phi(g)/|g| * (1 - 1/g^2 + 3/g^4 - 15/g^6 + 105/g^8) and
        // simplify; every surviving term is O(log|gamma|). The truncation
        // error, ~500/gamma^8, is below 1e-9 past the branch point.
        const double g2 = gamma * gamma;
        const double g4 = g2 * g2;
        const double series = 1.0 - 1.0 / g2 + 3.0 / g4 - 15.0 / (g2 * g4) + 105.0 / (g4 * g4);
        term = 0.5 * kLog2Pi + std::log(-gamma) - std::log(series) +
               0.5 * (-1.0 + 3.0 / g2 - 15.0 / g4 + 105.0 / (g2 * g4)) / series;
    }
    return std::max(term, 0.0);
}

double mes_score(const PosteriorGaussian& posterior, std::span<const double> max_values,
                 double cost) {
    if (!(cost > 0.0)) throw std::invalid_argument("mes_score: cost must be positive");
    if (max_values.empty()) throw std::invalid_argument("mes_score: no max-value samples");
    const double sigma = posterior.stddev();
    double sum = 0.0;
    for (const double y_star : max_values) {
        sum += mes_term((y_star - posterior.mean) / sigma);
    }
    return sum / (cost * static_cast<double>(max_values.size()));
}

std::vector<double> sample_max_values(const FittedGP& gp, const Eigen::MatrixXd& candidate_mixtures,
                                      double target_scale, const MaxValueConfig& config,
                                      std::mt19937_64& rng) {
    if (config.n_samples < 1) throw std::invalid_argument("sample_max_values: n_samples >= 1");
    if (candidate_mixtures.rows() < 1) {
        throw std::invalid_argument("sample_max_values: empty candidate grid");
    }
    const Eigen::VectorXd scales =
        Eigen::VectorXd::Constant(candidate_mixtures.rows(), target_scale);
    std::vector<double> out;
    out.reserve(static_cast<size_t>(config.n_samples));

    if (config.sampler == MaxValueSampler::kPosteriorGrid) {
        Eigen::VectorXd mean;
        Eigen::MatrixXd cov;
        gp.posterior_joint(candidate_mixtures, scales, &mean, &cov);
        // A vanishing nugget keeps the factorization honest when some grid
        // points are (numerically) fully observed.
        cov.diagonal().array() += kMinPosteriorVariance;
        const Eigen::MatrixXd L = jittered_cholesky_lower(cov);
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::VectorXd xi(mean.size());
        for (int k = 0; k < config.n_samples; ++k) {
            for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = normal(rng);
            out.push_back((mean + L * xi).maxCoeff());
        }
        return out;
    }

    // Gumbel approximation: treat candidates as independent, so the max has
    // CDF F(z) = prod_i Phi((z - mu_i) / sigma_i); fit a Gumbel through the
    // quartiles and median of F and sample from it.
    const auto posteriors = gp.posterior_batch(candidate_mixtures, scales);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& p : posteriors) {
        lo = std::min(lo, p.mean - 8.0 * p.stddev());
        hi = std::max(hi, p.mean + 8.0 * p.stddev());
    }
    const auto log_cdf_max = [&](double z) {
        double s = 0.0;
        for (const auto& p : posteriors) s += log_norm_cdf((z - p.mean) / p.stddev());
        return s;
    };
    const auto quantile = [&](double q) {
        const double target = std::log(q);
        double a = lo, b = hi;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (a + b);
            if (b - a <= 1e-12 * std::max(1.0, std::abs(mid))) break;
            (log_cdf_max(mid) < target ? a : b) = mid;
        }
        return 0.5 * (a + b);
    };
    const double y25 = quantile(0.25);
    const double y50 = quantile(0.50);
    const double y75 = quantile(0.75);
    const double denom = std::log(std::log(4.0)) - std::log(std::log(4.0 / 3.0));
    const double gumbel_b = std::max(0.0, (y75 - y25) / denom);
    const double gumbel_a = y50 + gumbel_b * std::log(std::log(2.0));
    std::uniform_real_distribution<double> unif(std::numeric_limits<double>::min(), 1.0);
    for (int k = 0; k < config.n_samples; ++k) {
        out.push_back(gumbel_a - gumbel_b * std::log(-std::log(unif(rng))));
    }
    return out;
}

namespace {

// Resolves a score tie (within 1e-12): prefer cheaper, then the
// lexicographically smaller mixture, then the smaller fidelity id.
bool tie_break_wins(const AcquisitionCandidate& cand, const AcquisitionCandidate& best) {
    if (cand.cost != best.cost) return cand.cost < best.cost;
    const int c = compare_lex(cand.mixture, best.mixture);
    if (c != 0) return c < 0;
    return cand.fidelity_id < best.fidelity_id;
}

// Batched posterior over the unobserved candidates, then a deterministic
// argmax scan. `score_of(k, posterior)` sees the k-th unobserved candidate.
template <typename ScoreFn>
std::optional<SelectionResult> select_best(const FittedGP& gp,
                                           std::span<const AcquisitionCandidate> candidates,
                                           const std::vector<bool>& observed, ScoreFn&& score_of) {
    if (observed.size() != candidates.size()) {
        throw std::invalid_argument("select_next: observed mask size mismatch");
    }
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!observed[i]) open.push_back(i);
    }
    if (open.empty()) return std::nullopt;

    const Eigen::Index d = static_cast<Eigen::Index>(candidates[open[0]].mixture.dim());
    Eigen::MatrixXd Q(static_cast<Eigen::Index>(open.size()), d);
    Eigen::VectorXd s(static_cast<Eigen::Index>(open.size()));
    for (std::size_t k = 0; k < open.size(); ++k) {
        const auto& cand = candidates[open[k]];
        if (static_cast<Eigen::Index>(cand.mixture.dim()) != d) {
            throw std::invalid_argument("select_next: inconsistent mixture dimensions");
        }
        for (Eigen::Index j = 0; j < d; ++j) Q(static_cast<Eigen::Index>(k), j) = cand.mixture[j];
        s[static_cast<Eigen::Index>(k)] = cand.scale;
    }
    const auto posteriors = gp.posterior_batch(Q, s);

    std::optional<SelectionResult> best;
    for (std::size_t k = 0; k < open.size(); ++k) {
        const std::size_t i = open[k];
        const double score = score_of(i, posteriors[k]);
        if (!best) {
            best = SelectionResult{i, score};
        } else if (score > best->score + 1e-12) {
            best = SelectionResult{i, score};
        } else if (score >= best->score - 1e-12 &&
                   tie_break_wins(candidates[i], candidates[best->index])) {
            best = SelectionResult{i, std::max(score, best->score)};
        }
    }
    return best;
}

}  // namespace

std::optional<SelectionResult> select_next_ei(const FittedGP& gp,
                                              std::span<const AcquisitionCandidate> candidates,
                                              const std::vector<bool>& observed,
                                              double best_observed) {
    for (const auto& cand : candidates) {
        if (cand.fidelity_id != candidates.front().fidelity_id) {
            throw std::invalid_argument(
                "select_next_ei: candidate set spans multiple fidelities; EI cannot trade off "
                "cost, use the cost-normalized entropy score instead");
        }
    }
    return select_best(gp, candidates, observed,
                       [&](std::size_t, const PosteriorGaussian& p) {
                           return expected_improvement(p, best_observed);
                       });
}

std::optional<SelectionResult> select_next_mes(const FittedGP& gp,
                                               std::span<const AcquisitionCandidate> candidates,
                                               const std::vector<bool>& observed,
                                               std::span<const double> max_values) {
    return select_best(gp, candidates, observed,
                       [&](std::size_t i, const PosteriorGaussian& p) {
                           return mes_score(p, max_values, candidates[i].cost);
                       });
}

}  // namespace mixopt
