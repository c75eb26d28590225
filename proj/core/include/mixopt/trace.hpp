#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixopt/mixture.hpp"

namespace mixopt {

/// Mixture the optimizer would deploy at the target fidelity after a given
/// step: the GP's pick, its predicted score, and what the pick actually
/// achieves. The realized score is absent only when the table lacks the
/// recommended mixture at the target fidelity (recommendations are normally
/// restricted to the target pool, so in replay it is always present).
struct RecommendationRecord {
    MixtureWeights mixture;
    double predicted_score = 0.0;
    std::optional<double> realized_target_score;
};

/// One optimizer step: what was queried, what it cost, what came back, and
/// what the optimizer would recommend afterwards.
struct TraceStep {
    int step = 0;
    MixtureWeights queried_mixture;
    std::string fidelity_id;
    double cost = 0.0;
    double cumulative_cost = 0.0;
    double observed_score = 0.0;
    std::optional<RecommendationRecord> recommendation;
    double cumulative_best_target_score = 0.0;
};

/// Full run history for one (method, seed) pair.
struct Trace {
    std::string method;
    uint64_t seed = 0;
    std::vector<TraceStep> steps;

    /// Internal consistency checks; used by tests and before CSV export.
    void validate() const {
        double running = 0.0;
        double best = -std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < steps.size(); ++i) {
            const TraceStep& s = steps[i];
            if (s.step != static_cast<int>(i)) {
                throw std::logic_error("trace steps are not consecutively numbered");
            }
            running += s.cost;
            if (std::abs(s.cumulative_cost - running) > 1e-9 * std::max(1.0, std::abs(running))) {
                throw std::logic_error("trace cumulative cost does not match sum of step costs");
            }
            if (s.recommendation && s.recommendation->realized_target_score) {
                best = std::max(best, *s.recommendation->realized_target_score);
                if (std::abs(s.cumulative_best_target_score - best) >
                    1e-12 * std::max(1.0, std::abs(best))) {
                    throw std::logic_error(
                        "trace cumulative best is not the running max of realized scores");
                }
            }
        }
    }

    double total_cost() const { return steps.empty() ? 0.0 : steps.back().cumulative_cost; }
};

}  // namespace mixopt
