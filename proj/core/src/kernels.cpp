#include "mixopt/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace mixopt {

void GPHyperparams::validate(int mixture_dim) const {
    if (!(output_scale > 0.0) || !std::isfinite(output_scale)) {
        throw std::invalid_argument("output_scale must be positive and finite");
    }
    if (lengthscale.size() != 1 && lengthscale.size() != mixture_dim) {
        throw std::invalid_argument("lengthscale must be shared (size 1) or per-dimension");
    }
    for (Eigen::Index k = 0; k < lengthscale.size(); ++k) {
        if (!(lengthscale[k] > 0.0) || !std::isfinite(lengthscale[k])) {
            throw std::invalid_argument("lengthscales must be positive and finite");
        }
    }
    if (!(ds_offset > 0.0) || !std::isfinite(ds_offset)) {
        throw std::invalid_argument("ds_offset must be positive and finite");
    }
    if (!(ds_exponent >= 0.0) || !std::isfinite(ds_exponent)) {
        throw std::invalid_argument("ds_exponent must be non-negative and finite");
    }
    if (!(noise_var >= 0.0) || !std::isfinite(noise_var)) {
        throw std::invalid_argument("noise_var must be non-negative and finite");
    }
    if (!std::isfinite(prior_mean)) {
        throw std::invalid_argument("prior_mean must be finite");
    }
}

double rbf_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                  const Eigen::VectorXd& lengthscale) {
    if (a.size() != b.size()) throw std::invalid_argument("rbf_kernel: dimension mismatch");
    double q = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        const double l = lengthscale.size() == 1 ? lengthscale[0] : lengthscale[k];
        const double diff = a[k] - b[k];
        q += diff * diff / (l * l);
    }
    return std::exp(-0.5 * q);
}

namespace {

// (1 - s)^(1 + delta), with the base clamped at zero so s = 1 (and any
// round-off slightly above it) contributes exactly nothing.
double ds_feature(double s, double ds_exponent) {
    const double base = 1.0 - s;
    if (base <= 0.0) return 0.0;
    return std::pow(base, 1.0 + ds_exponent);
}

}  // namespace

double downsampling_kernel(double s_a, double s_b, double ds_offset, double ds_exponent) {
    return ds_offset + ds_feature(s_a, ds_exponent) * ds_feature(s_b, ds_exponent);
}

double product_kernel(const Eigen::VectorXd& a, double s_a, const Eigen::VectorXd& b, double s_b,
                      const GPHyperparams& hp, bool use_scale_kernel) {
    double v = hp.output_scale * rbf_kernel(a, b, hp.lengthscale);
    if (use_scale_kernel) v *= downsampling_kernel(s_a, s_b, hp.ds_offset, hp.ds_exponent);
    return v;
}

std::vector<Eigen::MatrixXd> per_dim_sqdist(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z) {
    if (X.cols() != Z.cols()) throw std::invalid_argument("per_dim_sqdist: dimension mismatch");
    std::vector<Eigen::MatrixXd> out;
    out.reserve(static_cast<size_t>(X.cols()));
    for (Eigen::Index k = 0; k < X.cols(); ++k) {
        Eigen::MatrixXd diff =
            X.col(k).replicate(1, Z.rows()) - Z.col(k).transpose().replicate(X.rows(), 1);
        out.push_back(diff.array().square().matrix());
    }
    return out;
}

Eigen::MatrixXd rbf_matrix(const std::vector<Eigen::MatrixXd>& sqdist,
                           const Eigen::VectorXd& lengthscale) {
    if (sqdist.empty()) throw std::invalid_argument("rbf_matrix: no distance matrices");
    const Eigen::Index d = static_cast<Eigen::Index>(sqdist.size());
    if (lengthscale.size() != 1 && lengthscale.size() != d) {
        throw std::invalid_argument("rbf_matrix: lengthscale size mismatch");
    }
    Eigen::ArrayXXd q = Eigen::ArrayXXd::Zero(sqdist[0].rows(), sqdist[0].cols());
    for (Eigen::Index k = 0; k < d; ++k) {
        const double l = lengthscale.size() == 1 ? lengthscale[0] : lengthscale[k];
        q += sqdist[static_cast<size_t>(k)].array() / (l * l);
    }
    return (-0.5 * q).exp().matrix();
}

Eigen::MatrixXd downsampling_matrix(const Eigen::VectorXd& s_a, const Eigen::VectorXd& s_b,
                                    double ds_offset, double ds_exponent) {
    Eigen::VectorXd u(s_a.size());
    Eigen::VectorXd v(s_b.size());
    for (Eigen::Index i = 0; i < s_a.size(); ++i) u[i] = ds_feature(s_a[i], ds_exponent);
    for (Eigen::Index j = 0; j < s_b.size(); ++j) v[j] = ds_feature(s_b[j], ds_exponent);
    return (u * v.transpose()).array() + ds_offset;
}

Eigen::MatrixXd kernel_matrix(const std::vector<Eigen::MatrixXd>& sqdist,
                              const Eigen::VectorXd& s_a, const Eigen::VectorXd& s_b,
                              const GPHyperparams& hp, bool use_scale_kernel) {
    Eigen::MatrixXd K = hp.output_scale * rbf_matrix(sqdist, hp.lengthscale);
    if (use_scale_kernel) {
        K = K.cwiseProduct(downsampling_matrix(s_a, s_b, hp.ds_offset, hp.ds_exponent));
    }
    return K;
}

}  // namespace mixopt
