#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mixopt/gp.hpp"
#include "mixopt/run_table.hpp"

namespace mixopt {

/// Per-dimension lengthscales from a single-fidelity ARD fit, together with
/// the log marginals of the ARD fit and of the shared-lengthscale fit whose
/// solution seeded it. Both marginals are in standardized-target space, so
/// they are directly comparable (ARD nests the shared model, so
/// log_marginal >= shared_log_marginal up to optimizer slack).
struct ArdFit {
    Eigen::VectorXd lengthscales;
    double log_marginal = 0.0;
    double shared_log_marginal = 0.0;
};

/// Fits mixture -> score with one lengthscale per domain. Targets are
/// standardized inside the fit, so the lengthscales are invariant to
/// positive affine rescaling of the scores. Requires n >= 4.
ArdFit fit_ard_lengthscales(const Eigen::MatrixXd& mixtures, const Eigen::VectorXd& scores,
                            FitConfig config = {});

/// Domain-by-benchmark relevance scores: entry (k, j) is the inverse fitted
/// lengthscale of domain k for benchmark j, normalized so every column's
/// maximum is exactly 1 (smaller lengthscale = more influence).
struct ImportanceMatrix {
    std::vector<std::string> domains;     // row labels
    std::vector<std::string> benchmarks;  // column labels
    Eigen::MatrixXd values;               // domains.size() x benchmarks.size()
};

/// One independent ARD fit per benchmark column over the rows at the given
/// fidelity. Per-column fit seeds derive from config.seed, so the matrix is
/// deterministic per seed.
ImportanceMatrix importance_matrix(const RunTable& table, const std::string& fidelity_id,
                                   std::span<const std::string> benchmark_columns,
                                   const FitConfig& config = {});

/// CSV with a "domain" label column followed by one column per benchmark.
void write_importance_csv(const ImportanceMatrix& matrix, const std::string& path);
ImportanceMatrix load_importance_csv(const std::string& path);

}  // namespace mixopt
