#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "mixopt/kernels.hpp"

namespace mixopt {

/// Floor applied to every posterior variance before it is handed to an
/// acquisition function.
inline constexpr double kMinPosteriorVariance = 1e-12;

struct PosteriorGaussian {
    double mean = 0.0;
    double variance = kMinPosteriorVariance;
    double stddev() const { return std::sqrt(variance); }
};

/// Training/query locations: one row of `mixtures` per point, matching entry
/// of `scales` (normalized model size in [0, 1]; ignored when the scale
/// kernel is off).
struct GPInputs {
    Eigen::MatrixXd mixtures;
    Eigen::VectorXd scales;

    Eigen::Index size() const { return mixtures.rows(); }
    void validate() const;
};

/// Box constraints for hyperparameter search, enforced by projection.
struct HyperBounds {
    double output_scale_min = 1e-3, output_scale_max = 10.0;
    double lengthscale_min = 1e-3, lengthscale_max = 10.0;
    double ds_offset_min = 1e-4, ds_offset_max = 10.0;
    // The exponent is searched in log space, so its lower bound is a small
    // positive floor rather than exactly zero; (1-s)^(1+1e-6) is
    // indistinguishable from (1-s) at double precision for s in [0, 1].
    double ds_exponent_min = 1e-6, ds_exponent_max = 5.0;
    double noise_var_min = 1e-8, noise_var_max = 1.0;
};

struct FitConfig {
    int restarts = 10;
    int max_iters = 200;
    bool ard = false;
    // Whether the downsampling factor participates. Unset = decide from the
    // data: on iff the training scales are not all identical.
    std::optional<bool> fit_scale_kernel;
    HyperBounds bounds;
    std::uint64_t seed = 0;
    // Additional ascent starting points appended after the random restarts
    // (e.g. a shared-lengthscale solution to warm-start an ARD fit).
    std::vector<GPHyperparams> extra_inits;
};

struct RestartDiagnostic {
    int index = 0;
    double initial_lml = 0.0;
    double final_lml = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct FitResult {
    GPHyperparams hyperparams;
    bool use_scale_kernel = true;
    double log_marginal = 0.0;
    std::vector<RestartDiagnostic> restarts;
};

/// Lower Cholesky factor of a symmetric PSD matrix, adding an escalating
/// diagonal jitter (1e-8 to 1e-2 of the mean diagonal, x10 per attempt) when
/// plain factorization fails; throws once the ladder is exhausted. If
/// `jitter` is non-null it receives the amount that was added.
Eigen::MatrixXd jittered_cholesky_lower(const Eigen::MatrixXd& A, double* jitter = nullptr);

/// Log marginal likelihood of `y` under the product-kernel GP, optionally
/// with its gradient. The gradient order is fixed:
///
///   [output_scale, lengthscale..., ds_offset, ds_exponent, noise_var, prior_mean]
///
/// (lengthscale contributes 1 or d entries depending on hp.lengthscale).
/// When `use_scale_kernel` is false the ds_offset/ds_exponent entries are
/// exactly zero: those parameters do not enter the model.
double log_marginal_likelihood(const GPInputs& inputs, const Eigen::VectorXd& y,
                               const GPHyperparams& hp, bool use_scale_kernel,
                               Eigen::VectorXd* gradient = nullptr);

/// Maximizes the log marginal likelihood by projected gradient ascent in log
/// parameter space, multi-start. `prior_mean` is held at its default of zero;
/// callers are expected to center/standardize `y` first (FittedGP::fit does).
FitResult fit_hyperparameters(const GPInputs& inputs, const Eigen::VectorXd& y,
                              const FitConfig& config);

/// GP conditioned on observed runs, with a cached Cholesky factor. Fitting
/// standardizes the targets internally and folds the transform back into the
/// hyperparameters, so predictions are in the original units.
class FittedGP {
  public:
    static FittedGP fit(GPInputs inputs, Eigen::VectorXd y, const FitConfig& config = {});
    /// Conditions on the data with the given hyperparameters as-is (no
    /// standardization, no fitting).
    static FittedGP with_hyperparams(GPInputs inputs, Eigen::VectorXd y, GPHyperparams hp,
                                     bool use_scale_kernel);

    PosteriorGaussian posterior(const Eigen::VectorXd& mixture, double scale) const;
    std::vector<PosteriorGaussian> posterior_batch(const Eigen::MatrixXd& mixtures,
                                                   const Eigen::VectorXd& scales) const;
    /// Joint posterior over a set of points (full covariance), for samplers
    /// that need correlated draws.
    void posterior_joint(const Eigen::MatrixXd& mixtures, const Eigen::VectorXd& scales,
                         Eigen::VectorXd* mean, Eigen::MatrixXd* cov) const;

    const GPHyperparams& hyperparams() const { return hp_; }
    bool use_scale_kernel() const { return use_scale_kernel_; }
    Eigen::Index size() const { return y_.size(); }
    const std::optional<FitResult>& fit_result() const { return fit_result_; }
    /// Jitter that had to be added to the training covariance diagonal to
    /// factorize it (0 when plain Cholesky succeeded).
    double jitter() const { return jitter_; }

  private:
    FittedGP() = default;
    void factorize();
    Eigen::MatrixXd cross_kernel(const Eigen::MatrixXd& mixtures,
                                 const Eigen::VectorXd& scales) const;

    GPInputs inputs_;
    Eigen::VectorXd y_;
    GPHyperparams hp_;
    bool use_scale_kernel_ = true;
    std::optional<FitResult> fit_result_;
    Eigen::MatrixXd chol_lower_;
    Eigen::VectorXd alpha_;
    double jitter_ = 0.0;
};

}  // namespace mixopt
