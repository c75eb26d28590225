#include "mixopt/mixture.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mixopt/rng.hpp"

namespace mixopt {

MixtureWeights make_mixture(std::span<const double> raw) {
    if (raw.size() < 2) {
        throw std::invalid_argument("mixture needs at least 2 domains, got " +
                                    std::to_string(raw.size()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double w = raw[i];
        if (!std::isfinite(w) || w < 0.0) {
            throw std::invalid_argument("mixture weight " + std::to_string(i) +
                                        " is negative or non-finite: " + std::to_string(w));
        }
        sum += w;
    }
    if (sum <= 0.0) {
        throw std::invalid_argument("mixture weights are all zero");
    }
    std::vector<double> w(raw.begin(), raw.end());
    // Renormalization must be idempotent at the bit level so that a mixture
    // survives a write/parse cycle unchanged: weights that already sum to 1
    // (up to accumulated rounding) are kept as-is rather than divided by
    // 1 +- 1ulp.
    if (std::abs(sum - 1.0) > 1e-12) {
        for (double& x : w) x /= sum;
    }
    return MixtureWeights(std::move(w));
}

MixtureWeights make_mixture(std::initializer_list<double> raw) {
    return make_mixture(std::span<const double>(raw.begin(), raw.size()));
}

MixtureWeights sample_dirichlet(std::span<const double> alpha, std::mt19937_64& rng) {
    if (alpha.size() < 2) {
        throw std::invalid_argument("dirichlet needs at least 2 concentrations");
    }
    std::vector<double> draw(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (!(alpha[i] > 0.0)) {
            throw std::invalid_argument("dirichlet concentration " + std::to_string(i) +
                                        " must be positive, got " + std::to_string(alpha[i]));
        }
        std::gamma_distribution<double> gamma(alpha[i], 1.0);
        draw[i] = gamma(rng);
    }
    // A gamma draw can underflow to exactly 0 for tiny shape; the all-zero
    // case would fail normalization, so nudge one coordinate.
    double sum = 0.0;
    for (double x : draw) sum += x;
    if (sum <= 0.0) draw[0] = 1e-300;
    return make_mixture(draw);
}

MixtureWeights sample_dirichlet(std::span<const double> alpha, std::uint64_t seed) {
    auto rng = make_rng(seed, "dirichlet");
    return sample_dirichlet(alpha, rng);
}

double squared_distance(const MixtureWeights& a, const MixtureWeights& b) {
    if (a.dim() != b.dim()) {
        throw std::invalid_argument("mixture dimension mismatch: " + std::to_string(a.dim()) +
                                    " vs " + std::to_string(b.dim()));
    }
    double d = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

int compare_lex(const MixtureWeights& a, const MixtureWeights& b) {
    const std::size_t n = std::min(a.dim(), b.dim());
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i] < b[i]) return -1;
        if (a[i] > b[i]) return 1;
    }
    if (a.dim() < b.dim()) return -1;
    if (a.dim() > b.dim()) return 1;
    return 0;
}

}  // namespace mixopt
