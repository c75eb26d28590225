#pragma once

#include <Eigen/Dense>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mixopt/mixture.hpp"
#include "mixopt/problem.hpp"
#include "mixopt/trace.hpp"

namespace mixopt {

/// y = w . pi + w0
struct LinearLaw {
    Eigen::VectorXd weights;
    double intercept = 0.0;

    double predict(const Eigen::VectorXd& pi) const { return weights.dot(pi) + intercept; }
    double predict(const MixtureWeights& pi) const;
};

/// y = scale * exp(w . pi) + w0
struct ExponentialLaw {
    double scale = 1.0;
    Eigen::VectorXd weights;
    double intercept = 0.0;

    double predict(const Eigen::VectorXd& pi) const {
        return scale * std::exp(weights.dot(pi)) + intercept;
    }
    double predict(const MixtureWeights& pi) const;
};

/// Least squares on the intercept-augmented design with a 1e-8 ridge. The
/// ridge is not optional: simplex rows satisfy sum(pi) = 1 exactly, so the
/// augmented design is always rank-deficient and the plain normal equations
/// are singular. Requires n >= 2; one observation per row of X.
LinearLaw fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Nonlinear least squares for the exponential law by multi-start gradient
/// descent with backtracking: 16 restarts, scale cycling +-{0.1, 1}, weights
/// standard normal, intercept at mean(y). Deterministic per seed. Requires
/// n >= d + 2. Throws if no restart reaches a finite loss.
ExponentialLaw fit_exponential(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               std::uint64_t seed = 0);

struct SvrOptions {
    // Tube half-width in standardized target units.
    double epsilon = 0.01;
    double regularization_weight = 1.0;  // hinge-term weight C in C*sum(loss) + |w|^2/2
    int steps = 5000;
};

/// Epsilon-insensitive linear SVR, solved with projected subgradient descent
/// on standardized targets and mapped back to raw units. Deterministic
/// (full-batch subgradients). Requires n >= 2.
LinearLaw fit_svr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const SvrOptions& options = {});

/// Argmax of the law's prediction over candidate mixtures (one per row).
/// Ties within 1e-12 break toward the lexicographically smaller mixture.
std::size_t baseline_recommend_index(const LinearLaw& law, const Eigen::MatrixXd& candidates);
std::size_t baseline_recommend_index(const ExponentialLaw& law,
                                     const Eigen::MatrixXd& candidates);
MixtureWeights baseline_recommend(const LinearLaw& law, std::span<const MixtureWeights> candidates);
MixtureWeights baseline_recommend(const ExponentialLaw& law,
                                  std::span<const MixtureWeights> candidates);

/// Uniform draw over the unobserved candidate indices; nullopt once all are
/// observed.
std::optional<std::size_t> random_select(std::size_t n_candidates,
                                         const std::vector<bool>& observed,
                                         std::mt19937_64& rng);
/// Convenience form: one seeded uniform draw over the whole candidate list.
MixtureWeights random_select(std::span<const MixtureWeights> candidates, std::uint64_t seed);

/// Spearman rank correlation (average ranks on ties); diagnostic used to
/// report predicted-vs-actual agreement on held-out rows.
double spearman_rank_correlation(std::span<const double> a, std::span<const double> b);

enum class BaselineMethod { kRandom, kLinear, kExponential, kSvr };

std::string_view baseline_method_name(BaselineMethod method);

struct BaselineConfig {
    BaselineMethod method = BaselineMethod::kRandom;
    // Baselines query one fidelity; defaults to the target.
    std::optional<std::string> query_fidelity;
    double budget_total = 10.0;
    int max_steps = 100;
    std::uint64_t seed = 0;
    SvrOptions svr;

    void validate() const;
};

/// Sequential replay with uniform-random queries (without replacement) and
/// per-step recommendations from the method's fitted law over the target
/// pool. The query stream depends only on the seed, never on the method, so
/// different baselines see identical data for the same seed. The random
/// method — and any model-based method before its law has enough points to
/// fit — recommends the best mixture observed so far (the random method
/// recommends its latest draw); such steps carry the realized score as the
/// predicted score since no model exists.
Trace run_baseline(const ReplayProblem& problem, const BaselineConfig& config);

}  // namespace mixopt
