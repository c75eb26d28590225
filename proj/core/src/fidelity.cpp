#include "mixopt/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace mixopt {

std::vector<double> normalize_scales(std::span<const std::uint64_t> parameter_counts) {
    if (parameter_counts.empty()) {
        throw std::invalid_argument("normalize_scales: empty parameter count list");
    }
    const auto [lo_it, hi_it] = std::minmax_element(parameter_counts.begin(), parameter_counts.end());
    const std::uint64_t lo = *lo_it, hi = *hi_it;
    if (parameter_counts.size() == 1) {
        return {1.0};
    }
    if (lo == hi) {
        throw std::invalid_argument("normalize_scales: all parameter counts equal; "
                                    "fidelity axis is degenerate");
    }
    std::set<std::uint64_t> distinct(parameter_counts.begin(), parameter_counts.end());
    if (distinct.size() != parameter_counts.size()) {
        throw std::invalid_argument("normalize_scales: duplicate parameter counts");
    }
    std::vector<double> scales;
    scales.reserve(parameter_counts.size());
    const double span = static_cast<double>(hi - lo);
    for (std::uint64_t c : parameter_counts) {
        scales.push_back(static_cast<double>(c - lo) / span);
    }
    return scales;
}

FidelitySet FidelitySet::create(std::vector<FidelitySpec> levels) {
    if (levels.empty()) {
        throw std::invalid_argument("fidelity set is empty");
    }
    std::sort(levels.begin(), levels.end(), [](const FidelitySpec& a, const FidelitySpec& b) {
        return a.parameter_count < b.parameter_count;
    });
    std::vector<std::uint64_t> counts;
    counts.reserve(levels.size());
    std::set<std::string> ids;
    for (const FidelitySpec& f : levels) {
        if (f.id.empty()) throw std::invalid_argument("fidelity id is empty");
        if (!ids.insert(f.id).second) {
            throw std::invalid_argument("duplicate fidelity id: " + f.id);
        }
        if (f.parameter_count == 0) {
            throw std::invalid_argument("fidelity " + f.id + " has zero parameter count");
        }
        if (!(f.cost > 0.0) || !std::isfinite(f.cost)) {
            throw std::invalid_argument("fidelity " + f.id + " needs a positive finite cost");
        }
        counts.push_back(f.parameter_count);
    }
    const std::vector<double> scales = normalize_scales(counts);
    for (std::size_t i = 0; i < levels.size(); ++i) {
        levels[i].scale = scales[i];
    }
    FidelitySet set;
    set.levels_ = std::move(levels);
    return set;
}

std::size_t FidelitySet::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        if (levels_[i].id == id) return i;
    }
    throw std::invalid_argument("unknown fidelity id: " + id);
}

bool FidelitySet::contains(const std::string& id) const {
    for (const FidelitySpec& f : levels_) {
        if (f.id == id) return true;
    }
    return false;
}

}  // namespace mixopt
