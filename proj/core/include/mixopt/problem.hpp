#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "mixopt/acquisition.hpp"
#include "mixopt/run_table.hpp"

namespace mixopt {

/// A run table flattened into the optimizer's view of the world: a finite
/// candidate list of unique (mixture, fidelity) pairs with prices, exact
/// table lookup for observations, and target-fidelity scoring for
/// recommendations. Duplicated (mixture, fidelity) rows keep their first
/// occurrence (with a warning). Immutable and safe to share across
/// concurrently running seeds.
class ReplayProblem {
  public:
    ReplayProblem(const RunTable& table, const MetricTarget& target, const CostModel& costs);

    std::span<const AcquisitionCandidate> candidates() const { return candidates_; }
    std::size_t dims() const { return dims_; }

    /// Internal (maximization) score of querying candidate `index`, i.e. the
    /// metric target evaluated on that candidate's own table row.
    double observe(std::size_t index) const { return scores_.at(index); }

    const std::string& target_fidelity() const { return target_fidelity_; }
    double target_scale() const { return target_scale_; }
    /// Candidate indices at the target fidelity, in candidate order.
    const std::vector<std::size_t>& target_pool() const { return target_pool_; }
    /// Target-pool mixtures, one row each; shares indexing with target_pool().
    const Eigen::MatrixXd& target_pool_matrix() const { return target_matrix_; }

    struct Realized {
        double score = 0.0;
        bool exact = true;            // false when the nearest-candidate guard fired
        std::size_t candidate_index = 0;
    };
    /// Target-fidelity score of an arbitrary mixture: exact row when present,
    /// otherwise the closest target candidate in Euclidean distance (logged).
    Realized realize_target(const MixtureWeights& mixture) const;

  private:
    std::vector<AcquisitionCandidate> candidates_;
    std::vector<double> scores_;
    std::vector<std::size_t> target_pool_;
    Eigen::MatrixXd target_matrix_;
    std::string target_fidelity_;
    double target_scale_ = 1.0;
    std::size_t dims_ = 0;
};

}  // namespace mixopt
