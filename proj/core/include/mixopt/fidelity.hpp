#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mixopt {

/// One model level in a multi-fidelity setup. `scale` is the parameter count
/// min-max normalized to [0, 1] within its fidelity set; the level with
/// scale 1.0 is the target model. `cost` is in whatever cost unit the
/// benchmark uses (wall-clock minutes, model-size units, ...).
struct FidelitySpec {
    std::string id;
    std::uint64_t parameter_count = 0;
    double scale = 1.0;
    double cost = 1.0;
};

/// Min-max rescaling of parameter counts: the largest count maps to 1.0 and
/// the smallest to 0.0. A single count maps to {1.0} (that model is the
/// target). Repeated counts with more than one level are rejected: the
/// fidelity axis would be degenerate.
std::vector<double> normalize_scales(std::span<const std::uint64_t> parameter_counts);

/// An ordered set of fidelity levels, sorted by ascending parameter count,
/// with scales computed by normalize_scales. Immutable after construction.
class FidelitySet {
  public:
    /// Builds from (id, parameter_count, cost) triples. Ids must be unique,
    /// costs positive.
    static FidelitySet create(std::vector<FidelitySpec> levels);

    std::size_t size() const { return levels_.size(); }
    const FidelitySpec& operator[](std::size_t i) const { return levels_[i]; }
    std::span<const FidelitySpec> levels() const { return levels_; }

    /// Index of the level with scale 1.0.
    std::size_t target_index() const { return levels_.size() - 1; }
    const FidelitySpec& target() const { return levels_.back(); }

    /// Index lookup by id; throws if unknown.
    std::size_t index_of(const std::string& id) const;
    bool contains(const std::string& id) const;

  private:
    std::vector<FidelitySpec> levels_;
};

}  // namespace mixopt
