#pragma once

#include <Eigen/Dense>
#include <span>

namespace mixopt {

/// Hyperparameters of the product kernel
///
///   k((pi, s), (pi', s')) = output_scale * k_rbf(pi, pi') * k_ds(s, s')
///
/// with an RBF over mixture weights and a downsampling kernel over the
/// normalized model-size scale:
///
///   k_rbf(pi, pi') = exp(-0.5 * sum_k (pi_k - pi'_k)^2 / l_k^2)
///   k_ds(s, s')    = ds_offset + (1 - s)^(1 + ds_exponent) * (1 - s')^(1 + ds_exponent)
///
/// `lengthscale` has one entry (shared across mixture dimensions) or one per
/// dimension (ARD). Single-fidelity models simply never multiply by k_ds.
struct GPHyperparams {
    double output_scale = 1.0;
    Eigen::VectorXd lengthscale = Eigen::VectorXd::Ones(1);
    double ds_offset = 1.0;
    double ds_exponent = 1.0;
    double noise_var = 1e-6;
    double prior_mean = 0.0;

    bool ard() const { return lengthscale.size() > 1; }
    void validate(int mixture_dim) const;
};

/// RBF value for a pair of mixture-weight vectors.
double rbf_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                  const Eigen::VectorXd& lengthscale);

/// Downsampling-kernel value for a pair of normalized scales in [0, 1].
double downsampling_kernel(double s_a, double s_b, double ds_offset, double ds_exponent);

/// Full product-kernel value for a pair of (mixture, scale) inputs.
double product_kernel(const Eigen::VectorXd& a, double s_a, const Eigen::VectorXd& b, double s_b,
                      const GPHyperparams& hp, bool use_scale_kernel);

/// Per-dimension squared-difference matrices D_k with
/// (D_k)_ij = (X_ik - Z_jk)^2, where X is n x d and Z is m x d. These are
/// hyperparameter-independent, so the GP precomputes them once per fit and
/// reuses them across optimizer iterations.
std::vector<Eigen::MatrixXd> per_dim_sqdist(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z);

/// RBF Gram matrix from precomputed per-dimension squared distances.
/// With a shared lengthscale the single entry applies to every dimension.
Eigen::MatrixXd rbf_matrix(const std::vector<Eigen::MatrixXd>& sqdist,
                           const Eigen::VectorXd& lengthscale);

/// Downsampling Gram matrix between two scale vectors.
Eigen::MatrixXd downsampling_matrix(const Eigen::VectorXd& s_a, const Eigen::VectorXd& s_b,
                                    double ds_offset, double ds_exponent);

/// Product-kernel Gram matrix. `use_scale_kernel` = false drops the
/// downsampling factor (single-fidelity model).
Eigen::MatrixXd kernel_matrix(const std::vector<Eigen::MatrixXd>& sqdist,
                              const Eigen::VectorXd& s_a, const Eigen::VectorXd& s_b,
                              const GPHyperparams& hp, bool use_scale_kernel);

}  // namespace mixopt
