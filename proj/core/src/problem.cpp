#include "mixopt/problem.hpp"

#include <limits>
#include <stdexcept>

#include "mixopt/log.hpp"

namespace mixopt {

ReplayProblem::ReplayProblem(const RunTable& table, const MetricTarget& target,
                             const CostModel& costs) {
    if (table.rows.empty()) throw std::invalid_argument("replay problem: empty table");
    dims_ = table.rows.front().mixture.dim();

    std::size_t duplicates = 0;
    for (const RunRow& row : table.rows) {
        bool seen = false;
        for (const AcquisitionCandidate& c : candidates_) {
            if (c.fidelity_id == row.fidelity_id && c.mixture == row.mixture) {
                seen = true;
                break;
            }
        }
        if (seen) {
            ++duplicates;
            continue;
        }
        const FidelitySpec& fid = table.fidelities[table.fidelities.index_of(row.fidelity_id)];
        candidates_.push_back(
            AcquisitionCandidate{row.mixture, row.fidelity_id, fid.scale,
                                 costs.cost(row.fidelity_id)});
        scores_.push_back(target.score(row));
    }
    if (duplicates > 0) {
        log_warn("replay table has " + std::to_string(duplicates) +
                 " duplicate (mixture, fidelity) rows; keeping first occurrences");
    }

    const FidelitySpec& tf = table.fidelities[table.fidelities.target_index()];
    target_fidelity_ = tf.id;
    target_scale_ = tf.scale;
    for (std::size_t i = 0; i < candidates_.size(); ++i) {
        if (candidates_[i].fidelity_id == target_fidelity_) target_pool_.push_back(i);
    }
    if (target_pool_.empty()) {
        throw std::invalid_argument("replay problem: no candidates at target fidelity '" +
                                    target_fidelity_ + "'");
    }
    target_matrix_.resize(static_cast<Eigen::Index>(target_pool_.size()),
                          static_cast<Eigen::Index>(dims_));
    for (std::size_t k = 0; k < target_pool_.size(); ++k) {
        const MixtureWeights& m = candidates_[target_pool_[k]].mixture;
        for (std::size_t j = 0; j < dims_; ++j) {
            target_matrix_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = m[j];
        }
    }
}

ReplayProblem::Realized ReplayProblem::realize_target(const MixtureWeights& mixture) const {
    for (const std::size_t i : target_pool_) {
        if (candidates_[i].mixture == mixture) {
            return Realized{scores_[i], true, i};
        }
    }
    // Zero-shot guard: the recommendation is off-table at the target
    // fidelity; score its nearest on-table neighbor instead.
    double best_dist = std::numeric_limits<double>::infinity();
    std::size_t best = target_pool_.front();
    for (const std::size_t i : target_pool_) {
        const double dist = squared_distance(candidates_[i].mixture, mixture);
        if (dist < best_dist) {
            best_dist = dist;
            best = i;
        }
    }
    log_warn("recommended mixture is not in the target-fidelity table; scoring nearest "
             "candidate at squared distance " +
             std::to_string(best_dist));
    return Realized{scores_[best], false, best};
}

}  // namespace mixopt
