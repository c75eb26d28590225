#include "mixopt/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mixopt/math.hpp"
#include "mixopt/rng.hpp"

namespace mixopt {

void GPInputs::validate() const {
    if (mixtures.rows() < 1) throw std::invalid_argument("GP inputs: need at least one point");
    if (mixtures.cols() < 1) throw std::invalid_argument("GP inputs: need at least one dimension");
    if (scales.size() != mixtures.rows()) {
        throw std::invalid_argument("GP inputs: scales/mixtures row count mismatch");
    }
    if (!mixtures.allFinite() || !scales.allFinite()) {
        throw std::invalid_argument("GP inputs must be finite");
    }
}

Eigen::MatrixXd jittered_cholesky_lower(const Eigen::MatrixXd& A, double* jitter_out) {
    const double mean_diag = A.diagonal().mean();
    double jitter = 0.0;
    for (;;) {
        Eigen::MatrixXd Aj = A;
        if (jitter > 0.0) Aj.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(Aj);
        if (llt.info() == Eigen::Success) {
            if (jitter_out) *jitter_out = jitter;
            return llt.matrixL();
        }
        jitter = jitter == 0.0 ? 1e-8 * mean_diag : 10.0 * jitter;
        if (jitter > 1e-2 * mean_diag) {
            throw std::runtime_error(
                "GP covariance is not positive definite even with maximum jitter");
        }
    }
}

namespace {

struct CholFactor {
    Eigen::MatrixXd lower;
    double jitter = 0.0;
};

CholFactor robust_cholesky(const Eigen::MatrixXd& A) {
    CholFactor out;
    out.lower = jittered_cholesky_lower(A, &out.jitter);
    return out;
}

// Downsampling feature u_i = (1 - s_i)^(1 + delta) and its derivative in
// delta, v_i = u_i * log(1 - s_i); both defined as 0 at s_i >= 1.
void ds_features(const Eigen::VectorXd& scales, double ds_exponent, Eigen::VectorXd* u,
                 Eigen::VectorXd* v) {
    const Eigen::Index n = scales.size();
    u->resize(n);
    if (v) v->resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double base = 1.0 - scales[i];
        if (base <= 0.0) {
            (*u)[i] = 0.0;
            if (v) (*v)[i] = 0.0;
        } else {
            (*u)[i] = std::pow(base, 1.0 + ds_exponent);
            if (v) (*v)[i] = (*u)[i] * std::log(base);
        }
    }
}

struct LmlWork {
    const std::vector<Eigen::MatrixXd>& sqdist;
    const Eigen::VectorXd& scales;
    const Eigen::VectorXd& y;
    bool use_scale_kernel;
};

// Log marginal likelihood on pre-computed distance matrices; gradient (if
// requested) in the fixed order documented in the header.
double lml_value(const LmlWork& w, const GPHyperparams& hp, Eigen::VectorXd* gradient) {
    const Eigen::Index n = w.y.size();
    const Eigen::Index n_len = hp.lengthscale.size();
    const Eigen::MatrixXd E = rbf_matrix(w.sqdist, hp.lengthscale);

    Eigen::VectorXd u, v;
    Eigen::MatrixXd K = hp.output_scale * E;
    if (w.use_scale_kernel) {
        ds_features(w.scales, hp.ds_exponent, &u, gradient ? &v : nullptr);
        K = K.cwiseProduct(((u * u.transpose()).array() + hp.ds_offset).matrix());
    }

    Eigen::MatrixXd A = K;
    A.diagonal().array() += hp.noise_var;
    const CholFactor chol = robust_cholesky(A);
    const auto L = chol.lower.triangularView<Eigen::Lower>();

    const Eigen::VectorXd r = w.y.array() - hp.prior_mean;
    const Eigen::VectorXd half = L.solve(r);  // L^{-1} r
    const double value = -0.5 * half.squaredNorm() -
                         chol.lower.diagonal().array().log().sum() -
                         0.5 * static_cast<double>(n) * kLog2Pi;
    if (!gradient) return value;

    const Eigen::VectorXd alpha = L.transpose().solve(half);  // A^{-1} r
    const Eigen::MatrixXd Linv = L.solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd Ainv = Linv.transpose() * Linv;
    // dL/dp = 0.5 * sum(W .* dK/dp) for symmetric dK/dp.
    const Eigen::MatrixXd W = alpha * alpha.transpose() - Ainv;

    Eigen::VectorXd g = Eigen::VectorXd::Zero(n_len + 5);
    const Eigen::ArrayXXd WK = W.array() * K.array();
    g[0] = 0.5 * WK.sum() / hp.output_scale;  // dK/d(output_scale) = K / output_scale
    if (n_len == 1) {
        Eigen::ArrayXXd dsum = Eigen::ArrayXXd::Zero(n, n);
        for (const auto& D : w.sqdist) dsum += D.array();
        g[1] = 0.5 * (WK * dsum).sum() / std::pow(hp.lengthscale[0], 3);
    } else {
        for (Eigen::Index k = 0; k < n_len; ++k) {
            g[1 + k] = 0.5 * (WK * w.sqdist[static_cast<size_t>(k)].array()).sum() /
                       std::pow(hp.lengthscale[k], 3);
        }
    }
    if (w.use_scale_kernel) {
        // dK/d(ds_offset) = output_scale * E; dK/d(ds_exponent) uses the
        // product rule on u u^T.
        g[1 + n_len] = 0.5 * hp.output_scale * (W.array() * E.array()).sum();
        const Eigen::MatrixXd dUU = u * v.transpose() + v * u.transpose();
        g[2 + n_len] = 0.5 * hp.output_scale * (W.array() * E.array() * dUU.array()).sum();
    }
    g[3 + n_len] = 0.5 * (alpha.squaredNorm() - Ainv.trace());
    g[4 + n_len] = alpha.sum();
    *gradient = std::move(g);
    return value;
}

bool has_multiple_scales(const Eigen::VectorXd& scales) {
    for (Eigen::Index i = 1; i < scales.size(); ++i) {
        if (scales[i] != scales[0]) return true;
    }
    return false;
}

// Active optimizer parameters, all searched in log space:
// [output_scale, lengthscale..., (ds_offset, ds_exponent,) noise_var].
// prior_mean stays at zero; callers standardize targets first.
struct ParamSpace {
    bool use_scale_kernel;
    Eigen::Index n_len;
    HyperBounds bounds;

    Eigen::Index size() const { return 1 + n_len + (use_scale_kernel ? 2 : 0) + 1; }

    Eigen::VectorXd lower() const {
        Eigen::VectorXd lo(size());
        Eigen::Index i = 0;
        lo[i++] = std::log(bounds.output_scale_min);
        for (Eigen::Index k = 0; k < n_len; ++k) lo[i++] = std::log(bounds.lengthscale_min);
        if (use_scale_kernel) {
            lo[i++] = std::log(bounds.ds_offset_min);
            lo[i++] = std::log(bounds.ds_exponent_min);
        }
        lo[i++] = std::log(bounds.noise_var_min);
        return lo;
    }

    Eigen::VectorXd upper() const {
        Eigen::VectorXd hi(size());
        Eigen::Index i = 0;
        hi[i++] = std::log(bounds.output_scale_max);
        for (Eigen::Index k = 0; k < n_len; ++k) hi[i++] = std::log(bounds.lengthscale_max);
        if (use_scale_kernel) {
            hi[i++] = std::log(bounds.ds_offset_max);
            hi[i++] = std::log(bounds.ds_exponent_max);
        }
        hi[i++] = std::log(bounds.noise_var_max);
        return hi;
    }

    Eigen::VectorXd pack(const GPHyperparams& hp) const {
        Eigen::VectorXd t(size());
        Eigen::Index i = 0;
        t[i++] = std::log(hp.output_scale);
        for (Eigen::Index k = 0; k < n_len; ++k) t[i++] = std::log(hp.lengthscale[k]);
        if (use_scale_kernel) {
            t[i++] = std::log(hp.ds_offset);
            t[i++] = std::log(std::max(hp.ds_exponent, bounds.ds_exponent_min));
        }
        t[i++] = std::log(hp.noise_var);
        return t;
    }

    GPHyperparams unpack(const Eigen::VectorXd& t) const {
        GPHyperparams hp;
        Eigen::Index i = 0;
        hp.output_scale = std::exp(t[i++]);
        hp.lengthscale.resize(n_len);
        for (Eigen::Index k = 0; k < n_len; ++k) hp.lengthscale[k] = std::exp(t[i++]);
        if (use_scale_kernel) {
            hp.ds_offset = std::exp(t[i++]);
            hp.ds_exponent = std::exp(t[i++]);
        }
        hp.noise_var = std::exp(t[i++]);
        hp.prior_mean = 0.0;
        return hp;
    }

    // Chain rule from the full fixed-order natural gradient to the active
    // log-space gradient: d/d(log p) = p * d/dp.
    Eigen::VectorXd grad_to_log(const GPHyperparams& hp, const Eigen::VectorXd& g_nat) const {
        Eigen::VectorXd g(size());
        Eigen::Index i = 0;
        g[i++] = g_nat[0] * hp.output_scale;
        for (Eigen::Index k = 0; k < n_len; ++k) g[i++] = g_nat[1 + k] * hp.lengthscale[k];
        if (use_scale_kernel) {
            g[i++] = g_nat[1 + n_len] * hp.ds_offset;
            g[i++] = g_nat[2 + n_len] * hp.ds_exponent;
        }
        g[i++] = g_nat[3 + n_len] * hp.noise_var;
        return g;
    }
};

struct AscentOutcome {
    Eigen::VectorXd theta;
    double value = -std::numeric_limits<double>::infinity();
    double initial_value = -std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

// Projected gradient ascent with a self-tuning step size: grow on accepted
// steps, halve on rejected proposals, stop when no uphill move remains.
AscentOutcome ascend(const LmlWork& w, const ParamSpace& ps, Eigen::VectorXd theta,
                     int max_iters) {
    const Eigen::VectorXd lo = ps.lower();
    const Eigen::VectorXd hi = ps.upper();
    const auto clamp = [&](const Eigen::VectorXd& t) -> Eigen::VectorXd {
        return t.cwiseMax(lo).cwiseMin(hi);
    };
    const auto eval = [&](const Eigen::VectorXd& t, Eigen::VectorXd* g) -> double {
        GPHyperparams hp = ps.unpack(t);
        double value;
        try {
            Eigen::VectorXd g_nat;
            value = lml_value(w, hp, g ? &g_nat : nullptr);
            if (g) *g = ps.grad_to_log(hp, g_nat);
        } catch (const std::runtime_error&) {
            return -std::numeric_limits<double>::infinity();
        }
        return std::isfinite(value) ? value : -std::numeric_limits<double>::infinity();
    };

    AscentOutcome out;
    theta = clamp(theta);
    Eigen::VectorXd grad;
    double value = eval(theta, &grad);
    out.initial_value = value;
    if (!std::isfinite(value)) {
        out.theta = theta;
        return out;
    }

    double eta = 0.1;
    int stall = 0;
    int iter = 0;
    for (; iter < max_iters; ++iter) {
        if (grad.lpNorm<Eigen::Infinity>() < 1e-6) {
            out.converged = true;
            break;
        }
        bool accepted = false;
        Eigen::VectorXd proposal;
        double proposal_value = value;
        for (int halvings = 0; halvings < 20; ++halvings) {
            proposal = clamp(theta + eta * grad);
            if ((proposal - theta).lpNorm<Eigen::Infinity>() < 1e-14) break;
            proposal_value = eval(proposal, nullptr);
            if (proposal_value > value) {
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if (!accepted) {
            out.converged = true;
            break;
        }
        const double gain = proposal_value - value;
        theta = proposal;
        value = eval(theta, &grad);
        eta = std::min(eta * 1.3, 2.0);
        if (gain < 1e-7 * std::max(1.0, std::abs(value))) {
            if (++stall >= 3) {
                ++iter;
                out.converged = true;
                break;
            }
        } else {
            stall = 0;
        }
    }
    out.theta = std::move(theta);
    out.value = value;
    out.iterations = iter;
    return out;
}

}  // namespace

double log_marginal_likelihood(const GPInputs& inputs, const Eigen::VectorXd& y,
                               const GPHyperparams& hp, bool use_scale_kernel,
                               Eigen::VectorXd* gradient) {
    inputs.validate();
    if (y.size() != inputs.size()) {
        throw std::invalid_argument("log_marginal_likelihood: y size mismatch");
    }
    hp.validate(static_cast<int>(inputs.mixtures.cols()));
    const auto sqdist = per_dim_sqdist(inputs.mixtures, inputs.mixtures);
    return lml_value(LmlWork{sqdist, inputs.scales, y, use_scale_kernel}, hp, gradient);
}

FitResult fit_hyperparameters(const GPInputs& inputs, const Eigen::VectorXd& y,
                              const FitConfig& config) {
    inputs.validate();
    if (y.size() != inputs.size()) {
        throw std::invalid_argument("fit_hyperparameters: y size mismatch");
    }
    if (inputs.size() < 2) {
        throw std::invalid_argument("fit_hyperparameters: need at least two points");
    }
    if (config.restarts < 1) throw std::invalid_argument("fit_hyperparameters: restarts >= 1");
    if (config.max_iters < 0) throw std::invalid_argument("fit_hyperparameters: max_iters >= 0");

    const Eigen::Index d = inputs.mixtures.cols();
    const bool use_scale =
        config.fit_scale_kernel.value_or(has_multiple_scales(inputs.scales));
    const ParamSpace ps{use_scale, config.ard ? d : 1, config.bounds};
    const auto sqdist = per_dim_sqdist(inputs.mixtures, inputs.mixtures);
    const LmlWork work{sqdist, inputs.scales, y, use_scale};

    // Per-dimension median pairwise distance: the classic RBF lengthscale
    // heuristic. Starting where the kernel actually varies across the data
    // matters a lot for ARD fits; a fixed mid-range start (or a draw from the
    // full bounds box) often lands where the likelihood surface is flat and
    // ascent stalls in a "y is white noise" solution.
    const auto median_sqdist = [](const Eigen::MatrixXd& M) {
        std::vector<double> v;
        const Eigen::Index n = M.rows();
        v.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) v.push_back(M(i, j));
        }
        const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
        std::nth_element(v.begin(), mid, v.end());
        return *mid;
    };
    Eigen::VectorXd median_log_ls(ps.n_len);
    for (Eigen::Index k = 0; k < ps.n_len; ++k) {
        double m2;
        if (ps.n_len == 1) {
            Eigen::MatrixXd total = sqdist[0];
            for (std::size_t kk = 1; kk < sqdist.size(); ++kk) total += sqdist[kk];
            m2 = median_sqdist(total);
        } else {
            m2 = median_sqdist(sqdist[static_cast<std::size_t>(k)]);
        }
        const double ls = m2 > 0.0 ? std::sqrt(m2) : 1.0;
        median_log_ls[k] = std::log(
            std::clamp(ls, config.bounds.lengthscale_min, config.bounds.lengthscale_max));
    }

    std::vector<Eigen::VectorXd> inits;
    {
        GPHyperparams hp;
        hp.lengthscale = median_log_ls.array().exp();
        hp.noise_var = 1e-2;
        inits.push_back(ps.pack(hp));
    }
    if (config.restarts > 1) {
        // Neutral mid-range start, useful when the median heuristic is off.
        GPHyperparams hp;
        hp.lengthscale = Eigen::VectorXd::Ones(ps.n_len);
        hp.noise_var = 1e-2;
        inits.push_back(ps.pack(hp));
    }
    const Eigen::VectorXd lo = ps.lower();
    const Eigen::VectorXd hi = ps.upper();
    // Remaining restarts: log-uniform over the bounds for everything except
    // the lengthscales, which draw from a +-1.5-decade window around the
    // median heuristic so they start where gradients are informative.
    const double kLsWindow = std::log(30.0);
    for (int r = 2; r < config.restarts; ++r) {
        auto rng = make_rng(config.seed, "gp-fit-init", static_cast<uint64_t>(r));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        Eigen::VectorXd t(ps.size());
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            const bool is_ls = i >= 1 && i <= ps.n_len;
            if (is_ls) {
                const double center = median_log_ls[i - 1];
                t[i] = std::clamp(center + (2.0 * unif(rng) - 1.0) * kLsWindow, lo[i], hi[i]);
            } else {
                t[i] = lo[i] + unif(rng) * (hi[i] - lo[i]);
            }
        }
        inits.push_back(t);
    }
    for (const GPHyperparams& extra : config.extra_inits) {
        GPHyperparams hp = extra;
        if (hp.lengthscale.size() == 1 && ps.n_len > 1) {
            hp.lengthscale = Eigen::VectorXd::Constant(ps.n_len, extra.lengthscale[0]);
        }
        if (hp.lengthscale.size() != ps.n_len) {
            throw std::invalid_argument("fit_hyperparameters: extra init lengthscale size mismatch");
        }
        inits.push_back(ps.pack(hp));
    }

    FitResult out;
    out.use_scale_kernel = use_scale;
    double best = -std::numeric_limits<double>::infinity();
    for (size_t r = 0; r < inits.size(); ++r) {
        const AscentOutcome res = ascend(work, ps, inits[r], config.max_iters);
        out.restarts.push_back(RestartDiagnostic{static_cast<int>(r), res.initial_value,
                                                 res.value, res.iterations, res.converged});
        if (res.value > best) {
            best = res.value;
            out.hyperparams = ps.unpack(res.theta);
            out.log_marginal = res.value;
        }
    }
    if (!std::isfinite(best)) {
        throw std::runtime_error(
            "fit_hyperparameters: no restart reached a finite log marginal likelihood");
    }
    return out;
}

FittedGP FittedGP::fit(GPInputs inputs, Eigen::VectorXd y, const FitConfig& config) {
    inputs.validate();
    if (y.size() != inputs.size()) throw std::invalid_argument("FittedGP::fit: y size mismatch");
    if (!y.allFinite()) throw std::invalid_argument("FittedGP::fit: y must be finite");

    FittedGP gp;
    const double mean = y.mean();
    if (inputs.size() >= 2) {
        double sd = std::sqrt((y.array() - mean).square().mean());
        if (!(sd > 1e-12)) sd = 1.0;
        const Eigen::VectorXd z = (y.array() - mean) / sd;
        FitResult fr = fit_hyperparameters(inputs, z, config);
        GPHyperparams hp = fr.hyperparams;
        // Standardizing targets is an affine map, so un-doing it is a kernel
        // rescale plus a mean shift; the fitted GP predicts in raw units.
        hp.output_scale *= sd * sd;
        hp.noise_var *= sd * sd;
        hp.prior_mean = mean;
        gp.hp_ = std::move(hp);
        gp.use_scale_kernel_ = fr.use_scale_kernel;
        gp.fit_result_ = std::move(fr);
    } else {
        // Too little data to fit anything: condition with defaults centered
        // on the single observation.
        GPHyperparams hp;
        hp.lengthscale = Eigen::VectorXd::Ones(config.ard ? inputs.mixtures.cols() : 1);
        hp.prior_mean = mean;
        gp.hp_ = std::move(hp);
        gp.use_scale_kernel_ = config.fit_scale_kernel.value_or(false);
    }
    gp.inputs_ = std::move(inputs);
    gp.y_ = std::move(y);
    gp.factorize();
    return gp;
}

FittedGP FittedGP::with_hyperparams(GPInputs inputs, Eigen::VectorXd y, GPHyperparams hp,
                                    bool use_scale_kernel) {
    inputs.validate();
    if (y.size() != inputs.size()) {
        throw std::invalid_argument("FittedGP::with_hyperparams: y size mismatch");
    }
    if (!y.allFinite()) throw std::invalid_argument("FittedGP::with_hyperparams: y must be finite");
    FittedGP gp;
    gp.inputs_ = std::move(inputs);
    gp.y_ = std::move(y);
    gp.hp_ = std::move(hp);
    gp.use_scale_kernel_ = use_scale_kernel;
    gp.factorize();
    return gp;
}

void FittedGP::factorize() {
    hp_.validate(static_cast<int>(inputs_.mixtures.cols()));
    const auto sqdist = per_dim_sqdist(inputs_.mixtures, inputs_.mixtures);
    Eigen::MatrixXd A = kernel_matrix(sqdist, inputs_.scales, inputs_.scales, hp_, use_scale_kernel_);
    A.diagonal().array() += hp_.noise_var;
    CholFactor chol = robust_cholesky(A);
    chol_lower_ = std::move(chol.lower);
    jitter_ = chol.jitter;
    const Eigen::VectorXd r = y_.array() - hp_.prior_mean;
    alpha_ = chol_lower_.transpose().triangularView<Eigen::Upper>().solve(
        chol_lower_.triangularView<Eigen::Lower>().solve(r));
}

Eigen::MatrixXd FittedGP::cross_kernel(const Eigen::MatrixXd& mixtures,
                                       const Eigen::VectorXd& scales) const {
    if (mixtures.cols() != inputs_.mixtures.cols()) {
        throw std::invalid_argument("GP query: mixture dimension mismatch");
    }
    if (scales.size() != mixtures.rows()) {
        throw std::invalid_argument("GP query: scales/mixtures row count mismatch");
    }
    const auto sqdist = per_dim_sqdist(inputs_.mixtures, mixtures);
    return kernel_matrix(sqdist, inputs_.scales, scales, hp_, use_scale_kernel_);
}

PosteriorGaussian FittedGP::posterior(const Eigen::VectorXd& mixture, double scale) const {
    Eigen::MatrixXd one(1, mixture.size());
    one.row(0) = mixture;
    Eigen::VectorXd s(1);
    s[0] = scale;
    return posterior_batch(one, s).front();
}

std::vector<PosteriorGaussian> FittedGP::posterior_batch(const Eigen::MatrixXd& mixtures,
                                                         const Eigen::VectorXd& scales) const {
    const Eigen::MatrixXd Ks = cross_kernel(mixtures, scales);
    const Eigen::VectorXd mean = (Ks.transpose() * alpha_).array() + hp_.prior_mean;
    const Eigen::MatrixXd V = chol_lower_.triangularView<Eigen::Lower>().solve(Ks);
    std::vector<PosteriorGaussian> out(static_cast<size_t>(mixtures.rows()));
    for (Eigen::Index j = 0; j < mixtures.rows(); ++j) {
        const double prior_var =
            hp_.output_scale *
            (use_scale_kernel_
                 ? downsampling_kernel(scales[j], scales[j], hp_.ds_offset, hp_.ds_exponent)
                 : 1.0);
        const double var = prior_var - V.col(j).squaredNorm();
        out[static_cast<size_t>(j)] =
            PosteriorGaussian{mean[j], std::max(var, kMinPosteriorVariance)};
    }
    return out;
}

void FittedGP::posterior_joint(const Eigen::MatrixXd& mixtures, const Eigen::VectorXd& scales,
                               Eigen::VectorXd* mean, Eigen::MatrixXd* cov) const {
    if (!mean || !cov) throw std::invalid_argument("posterior_joint: null output");
    const Eigen::MatrixXd Ks = cross_kernel(mixtures, scales);
    *mean = (Ks.transpose() * alpha_).array() + hp_.prior_mean;
    const auto qq = per_dim_sqdist(mixtures, mixtures);
    const Eigen::MatrixXd Kqq = kernel_matrix(qq, scales, scales, hp_, use_scale_kernel_);
    const Eigen::MatrixXd V = chol_lower_.triangularView<Eigen::Lower>().solve(Ks);
    *cov = Kqq - V.transpose() * V;
}

}  // namespace mixopt
