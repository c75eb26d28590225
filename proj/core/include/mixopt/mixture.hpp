#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace mixopt {

/// A point on the probability simplex: nonnegative domain proportions
/// summing to one. Immutable after construction; construction renormalizes.
class MixtureWeights {
  public:
    std::size_t dim() const { return weights_.size(); }
    double operator[](std::size_t i) const { return weights_[i]; }
    std::span<const double> weights() const { return weights_; }
    const std::vector<double>& vec() const { return weights_; }

    bool operator==(const MixtureWeights& other) const = default;

  private:
    friend MixtureWeights make_mixture(std::span<const double> raw);
    explicit MixtureWeights(std::vector<double> w) : weights_(std::move(w)) {}

    std::vector<double> weights_;
};

/// Validates and renormalizes a raw nonnegative vector to the simplex.
/// Rejects negative entries, all-zero vectors, and dimension < 2. A vector
/// whose sum is already within 1e-12 of 1 is kept bit-for-bit, which makes
/// the operation idempotent across serialization round-trips.
MixtureWeights make_mixture(std::span<const double> raw);
MixtureWeights make_mixture(std::initializer_list<double> raw);

/// Seeded Dirichlet draw; all concentrations must be positive.
MixtureWeights sample_dirichlet(std::span<const double> alpha, std::mt19937_64& rng);
MixtureWeights sample_dirichlet(std::span<const double> alpha, std::uint64_t seed);

double squared_distance(const MixtureWeights& a, const MixtureWeights& b);

/// Three-way lexicographic comparison, the final acquisition tie-break.
int compare_lex(const MixtureWeights& a, const MixtureWeights& b);

}  // namespace mixopt
