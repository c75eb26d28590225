#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "mixopt/mixture.hpp"

namespace mixopt {

/// Everything downstream of ingestion works in maximization orientation.
/// Lower-is-better metrics (perplexity, error rates) are negated on entry.
enum class Orientation { kHigherIsBetter, kLowerIsBetter };

inline double oriented_score(double raw_value, Orientation orientation) {
    return orientation == Orientation::kHigherIsBetter ? raw_value : -raw_value;
}

/// One completed training run: a mixture trained at one fidelity and its
/// measured validation value. `score` is the internal maximization score.
struct Observation {
    MixtureWeights mixture;
    std::string fidelity_id;
    double score;
    double raw_value;
    Orientation orientation;

    static Observation make(MixtureWeights mixture, std::string fidelity_id, double raw_value,
                            Orientation orientation) {
        if (!std::isfinite(raw_value)) {
            throw std::invalid_argument("observation value is not finite");
        }
        const double score = oriented_score(raw_value, orientation);
        return Observation{std::move(mixture), std::move(fidelity_id), score, raw_value, orientation};
    }
};

/// Hard budget accounting: a query is admissible only when its full cost
/// still fits.
struct Budget {
    double total = 0.0;
    double consumed = 0.0;
    int max_steps = 100;

    static Budget create(double total, int max_steps) {
        if (!(total > 0.0)) throw std::invalid_argument("budget total must be positive");
        if (max_steps < 1) throw std::invalid_argument("budget max_steps must be >= 1");
        return Budget{total, 0.0, max_steps};
    }

    double remaining() const { return total - consumed; }
    bool can_afford(double cost) const { return cost <= remaining() + 1e-12; }

    void charge(double cost) {
        if (!can_afford(cost)) {
            throw std::runtime_error("budget exceeded: cost " + std::to_string(cost) +
                                     " vs remaining " + std::to_string(remaining()));
        }
        consumed += cost;
    }
};

}  // namespace mixopt
