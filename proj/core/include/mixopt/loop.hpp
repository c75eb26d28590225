#pragma once

#include <optional>
#include <string>

#include "mixopt/acquisition.hpp"
#include "mixopt/observation.hpp"
#include "mixopt/problem.hpp"
#include "mixopt/trace.hpp"

namespace mixopt {

enum class LoopMode { kBO, kMFBO };

struct LoopConfig {
    LoopMode mode = LoopMode::kMFBO;
    // BO queries exactly one fidelity (usually the target); required in BO
    // mode, ignored in MFBO mode.
    std::optional<std::string> query_fidelity;
    double budget_total = 10.0;
    int max_steps = 100;
    int init_count = 1;
    // Refit hyperparameters every this many observations; internally relaxed
    // by 5x once more than 200 points are in the model. Between refits the
    // GP is re-conditioned on all data with the latest hyperparameters.
    int refit_every = 1;
    std::uint64_t seed = 0;
    FitConfig fit;               // fit.seed is derived from `seed` per refit
    MaxValueConfig max_values;   // MFBO only
    std::string method_name;     // trace label; defaults to "bo" / "mfbo"

    void validate() const;
};

/// Single-fidelity loop: EI over the query-fidelity candidates.
Trace run_bo(const ReplayProblem& problem, const LoopConfig& config);

/// Multi-fidelity loop: cost-normalized max-value entropy search over all
/// (mixture, fidelity) candidates.
Trace run_mfbo(const ReplayProblem& problem, const LoopConfig& config);

/// Index of the posterior-mean argmax over target-fidelity candidates (one
/// mixture per row). Ties within 1e-12 break toward the lexicographically
/// smaller mixture.
std::size_t recommend_index(const FittedGP& gp, const Eigen::MatrixXd& candidates,
                            double target_scale);

MixtureWeights recommend(const FittedGP& gp, std::span<const MixtureWeights> candidates,
                         double target_scale);

}  // namespace mixopt
