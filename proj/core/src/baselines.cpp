#include "mixopt/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mixopt/observation.hpp"
#include "mixopt/rng.hpp"

namespace mixopt {

namespace {

Eigen::VectorXd to_vector(const MixtureWeights& pi) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(pi.dim()));
    for (std::size_t k = 0; k < pi.dim(); ++k) v[static_cast<Eigen::Index>(k)] = pi[k];
    return v;
}

void check_design(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Eigen::Index min_rows,
                  const char* who) {
    if (X.rows() != y.size()) {
        throw std::invalid_argument(std::string(who) + ": X/y row count mismatch");
    }
    if (X.rows() < min_rows) {
        throw std::invalid_argument(std::string(who) + ": need at least " +
                                    std::to_string(min_rows) + " observations");
    }
    if (!X.allFinite() || !y.allFinite()) {
        throw std::invalid_argument(std::string(who) + ": non-finite inputs");
    }
}

// Shared prediction argmax with the usual lexicographic tie-break.
template <typename PredictFn>
std::size_t argmax_prediction(const Eigen::MatrixXd& candidates, PredictFn&& predict) {
    if (candidates.rows() < 1) throw std::invalid_argument("recommend: no candidates");
    const auto lex_less = [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index j = 0; j < candidates.cols(); ++j) {
            if (candidates(a, j) != candidates(b, j)) return candidates(a, j) < candidates(b, j);
        }
        return false;
    };
    Eigen::Index best = 0;
    double best_score = predict(Eigen::VectorXd(candidates.row(0)));
    for (Eigen::Index i = 1; i < candidates.rows(); ++i) {
        const double score = predict(Eigen::VectorXd(candidates.row(i)));
        if (score > best_score + 1e-12) {
            best = i;
            best_score = score;
        } else if (score >= best_score - 1e-12 && lex_less(i, best)) {
            best = i;
            best_score = std::max(score, best_score);
        }
    }
    return static_cast<std::size_t>(best);
}

template <typename Law>
MixtureWeights recommend_from_list(const Law& law, std::span<const MixtureWeights> candidates) {
    if (candidates.empty()) throw std::invalid_argument("recommend: no candidates");
    const Eigen::Index d = static_cast<Eigen::Index>(candidates.front().dim());
    Eigen::MatrixXd Q(static_cast<Eigen::Index>(candidates.size()), d);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        Q.row(static_cast<Eigen::Index>(i)) = to_vector(candidates[i]).transpose();
    }
    return candidates[baseline_recommend_index(law, Q)];
}

}  // namespace

double LinearLaw::predict(const MixtureWeights& pi) const { return predict(to_vector(pi)); }

double ExponentialLaw::predict(const MixtureWeights& pi) const { return predict(to_vector(pi)); }

LinearLaw fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    check_design(X, y, 2, "fit_linear");
    const Eigen::Index d = X.cols();
    Eigen::MatrixXd A(X.rows(), d + 1);
    A.leftCols(d) = X;
    A.col(d).setOnes();
    Eigen::MatrixXd G = A.transpose() * A;
    G.diagonal().array() += 1e-8;
    const Eigen::VectorXd beta = G.ldlt().solve(A.transpose() * y);
    if (!beta.allFinite()) throw std::runtime_error("fit_linear: solve produced non-finite result");
    return LinearLaw{beta.head(d), beta[d]};
}

ExponentialLaw fit_exponential(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               std::uint64_t seed) {
    check_design(X, y, X.cols() + 2, "fit_exponential");
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();

    // Sum-of-squares loss and gradient in (scale, weights..., intercept).
    const auto loss_and_grad = [&](const Eigen::VectorXd& p, Eigen::VectorXd* grad) {
        const double theta = p[0];
        const auto w = p.segment(1, d);
        const double w0 = p[d + 1];
        const Eigen::ArrayXd e = (X * w).array().exp();
        const Eigen::ArrayXd r = theta * e + w0 - y.array();
        const double loss = r.square().sum();
        if (grad) {
            grad->resize(d + 2);
            (*grad)[0] = 2.0 * (r * e).sum();
            grad->segment(1, d) = 2.0 * theta * (X.transpose() * (r * e).matrix());
            (*grad)[d + 1] = 2.0 * r.sum();
        }
        return std::isfinite(loss) ? loss : std::numeric_limits<double>::infinity();
    };

    const double theta_inits[4] = {0.1, -0.1, 1.0, -1.0};
    Eigen::VectorXd best_params;
    double best_loss = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < 16; ++restart) {
        auto rng = make_rng(seed, "exp-fit", static_cast<std::uint64_t>(restart));
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::VectorXd p(d + 2);
        p[0] = theta_inits[restart % 4];
        for (Eigen::Index k = 0; k < d; ++k) p[1 + k] = normal(rng);
        p[d + 1] = y.mean();

        Eigen::VectorXd grad;
        double loss = loss_and_grad(p, &grad);
        if (!std::isfinite(loss)) continue;
        double eta = 1e-2 / static_cast<double>(n);
        int stall = 0;
        for (int iter = 0; iter < 800; ++iter) {
            if (grad.lpNorm<Eigen::Infinity>() < 1e-12) break;
            bool accepted = false;
            Eigen::VectorXd proposal;
            double proposal_loss = loss;
            for (int halvings = 0; halvings < 30; ++halvings) {
                proposal = p - eta * grad;
                proposal_loss = loss_and_grad(proposal, nullptr);
                if (proposal_loss < loss) {
                    accepted = true;
                    break;
                }
                eta *= 0.5;
            }
            if (!accepted) break;
            const double gain = loss - proposal_loss;
            p = std::move(proposal);
            loss = loss_and_grad(p, &grad);
            eta = std::min(eta * 1.3, 1.0);
            if (gain < 1e-14 * std::max(1.0, loss)) {
                if (++stall >= 3) break;
            } else {
                stall = 0;
            }
        }
        if (loss < best_loss) {
            best_loss = loss;
            best_params = p;
        }
    }
    if (!std::isfinite(best_loss)) {
        throw std::runtime_error("fit_exponential: every restart diverged");
    }
    ExponentialLaw law{best_params[0], best_params.segment(1, d), best_params[d + 1]};
    if (law.scale == 0.0) throw std::runtime_error("fit_exponential: degenerate zero scale");
    return law;
}

LinearLaw fit_svr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const SvrOptions& options) {
    check_design(X, y, 2, "fit_svr");
    if (!(options.epsilon >= 0.0)) throw std::invalid_argument("fit_svr: epsilon >= 0");
    if (!(options.regularization_weight > 0.0)) {
        throw std::invalid_argument("fit_svr: regularization weight must be positive");
    }
    if (options.steps < 1) throw std::invalid_argument("fit_svr: steps >= 1");

    const Eigen::Index d = X.cols();
    const double mean = y.mean();
    double sd = std::sqrt((y.array() - mean).square().mean());
    if (!(sd > 1e-12)) sd = 1.0;
    const Eigen::VectorXd z = (y.array() - mean) / sd;
    const double C = options.regularization_weight;

    // Subgradient descent on 0.5|w|^2 + C sum_i max(0, |w.x_i + b - z_i| - eps)
    // with the 1/t step schedule the quadratic term affords; the returned
    // iterate is the tail average, which damps the terminal oscillation.
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    double b = 0.0;
    Eigen::VectorXd w_sum = Eigen::VectorXd::Zero(d);
    double b_sum = 0.0;
    const int tail_start = options.steps / 2;
    for (int t = 0; t < options.steps; ++t) {
        const Eigen::ArrayXd r = (X * w).array() + b - z.array();
        Eigen::VectorXd g = w;
        double gb = 0.0;
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            if (std::abs(r[i]) > options.epsilon) {
                const double s = r[i] > 0.0 ? C : -C;
                g += s * X.row(i).transpose();
                gb += s;
            }
        }
        const double eta = 1.0 / static_cast<double>(t + 1);
        w -= eta * g;
        b -= eta * gb;
        if (t >= tail_start) {
            w_sum += w;
            b_sum += b;
        }
    }
    const double tail = static_cast<double>(options.steps - tail_start);
    w = w_sum / tail;
    b = b_sum / tail;
    return LinearLaw{sd * w, sd * b + mean};
}

std::size_t baseline_recommend_index(const LinearLaw& law, const Eigen::MatrixXd& candidates) {
    return argmax_prediction(candidates,
                             [&](const Eigen::VectorXd& pi) { return law.predict(pi); });
}

std::size_t baseline_recommend_index(const ExponentialLaw& law,
                                     const Eigen::MatrixXd& candidates) {
    return argmax_prediction(candidates,
                             [&](const Eigen::VectorXd& pi) { return law.predict(pi); });
}

MixtureWeights baseline_recommend(const LinearLaw& law,
                                  std::span<const MixtureWeights> candidates) {
    return recommend_from_list(law, candidates);
}

MixtureWeights baseline_recommend(const ExponentialLaw& law,
                                  std::span<const MixtureWeights> candidates) {
    return recommend_from_list(law, candidates);
}

std::optional<std::size_t> random_select(std::size_t n_candidates,
                                         const std::vector<bool>& observed,
                                         std::mt19937_64& rng) {
    if (observed.size() != n_candidates) {
        throw std::invalid_argument("random_select: observed mask size mismatch");
    }
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < n_candidates; ++i) {
        if (!observed[i]) open.push_back(i);
    }
    if (open.empty()) return std::nullopt;
    std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
    return open[pick(rng)];
}

MixtureWeights random_select(std::span<const MixtureWeights> candidates, std::uint64_t seed) {
    if (candidates.empty()) throw std::invalid_argument("random_select: no candidates");
    auto rng = make_rng(seed, "random-select");
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    return candidates[pick(rng)];
}

double spearman_rank_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw std::invalid_argument("spearman: need two equally sized samples of length >= 2");
    }
    const auto ranks = [](std::span<const double> v) {
        const std::size_t n = v.size();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
            return v[i] < v[j];
        });
        std::vector<double> rank(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // ranks are 1-based
            for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
            i = j + 1;
        }
        return rank;
    };
    const std::vector<double> ra = ranks(a);
    const std::vector<double> rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

std::string_view baseline_method_name(BaselineMethod method) {
    switch (method) {
        case BaselineMethod::kRandom: return "random";
        case BaselineMethod::kLinear: return "linear";
        case BaselineMethod::kExponential: return "exponential";
        case BaselineMethod::kSvr: return "svr";
    }
    throw std::invalid_argument("unknown baseline method");
}

void BaselineConfig::validate() const {
    if (!(budget_total > 0.0)) throw std::invalid_argument("budget must be positive");
    if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
}

Trace run_baseline(const ReplayProblem& problem, const BaselineConfig& config) {
    config.validate();
    const std::string query_fid = config.query_fidelity.value_or(problem.target_fidelity());
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < problem.candidates().size(); ++i) {
        if (problem.candidates()[i].fidelity_id == query_fid) active.push_back(i);
    }
    if (active.empty()) {
        throw std::invalid_argument("no candidates at query fidelity '" + query_fid + "'");
    }

    Trace trace;
    trace.method = std::string(baseline_method_name(config.method));
    trace.seed = config.seed;

    Budget budget = Budget::create(config.budget_total, config.max_steps);
    std::vector<bool> observed(active.size(), false);
    // One query stream shared by every method: draws depend on the seed only.
    auto query_rng = make_rng(config.seed, "baseline-queries");

    const Eigen::Index d = static_cast<Eigen::Index>(problem.dims());
    Eigen::MatrixXd X(0, d);
    Eigen::VectorXd y(0);
    double best_score = -std::numeric_limits<double>::infinity();
    const MixtureWeights* best_mixture = nullptr;
    double cumulative_best = -std::numeric_limits<double>::infinity();

    const Eigen::Index fit_threshold =
        config.method == BaselineMethod::kExponential ? d + 2 : Eigen::Index{2};

    for (int step = 0; step < config.max_steps; ++step) {
        const auto pick = random_select(active.size(), observed, query_rng);
        if (!pick) break;
        const AcquisitionCandidate& cand = problem.candidates()[active[*pick]];
        if (!budget.can_afford(cand.cost)) break;
        budget.charge(cand.cost);

        const double score = problem.observe(active[*pick]);
        observed[*pick] = true;
        const Eigen::Index n = X.rows();
        X.conservativeResize(n + 1, d);
        y.conservativeResize(n + 1);
        for (Eigen::Index j = 0; j < d; ++j) X(n, j) = cand.mixture[static_cast<std::size_t>(j)];
        y[n] = score;
        if (score > best_score) {
            best_score = score;
            best_mixture = &cand.mixture;
        }

        RecommendationRecord rec{cand.mixture, 0.0, std::nullopt};
        const bool model_based = config.method != BaselineMethod::kRandom;
        if (model_based && y.size() >= fit_threshold) {
            std::size_t local = 0;
            double predicted = 0.0;
            const Eigen::MatrixXd& pool = problem.target_pool_matrix();
            if (config.method == BaselineMethod::kLinear) {
                const LinearLaw law = fit_linear(X, y);
                local = baseline_recommend_index(law, pool);
                predicted = law.predict(Eigen::VectorXd(pool.row(static_cast<Eigen::Index>(local))));
            } else if (config.method == BaselineMethod::kSvr) {
                const LinearLaw law = fit_svr(X, y, config.svr);
                local = baseline_recommend_index(law, pool);
                predicted = law.predict(Eigen::VectorXd(pool.row(static_cast<Eigen::Index>(local))));
            } else {
                const ExponentialLaw law = fit_exponential(
                    X, y, substream(config.seed, "baseline-fit", static_cast<std::uint64_t>(step)));
                local = baseline_recommend_index(law, pool);
                predicted = law.predict(Eigen::VectorXd(pool.row(static_cast<Eigen::Index>(local))));
            }
            const std::size_t rec_idx = problem.target_pool()[local];
            rec = RecommendationRecord{problem.candidates()[rec_idx].mixture, predicted,
                                       problem.observe(rec_idx)};
        } else {
            // No model (random method, or not enough points yet): recommend
            // the latest draw / best observation, scored through the table.
            const MixtureWeights& pick_mixture =
                config.method == BaselineMethod::kRandom ? cand.mixture : *best_mixture;
            const ReplayProblem::Realized realized = problem.realize_target(pick_mixture);
            rec = RecommendationRecord{pick_mixture, realized.score, realized.score};
        }

        cumulative_best = std::max(cumulative_best, *rec.realized_target_score);
        trace.steps.push_back(TraceStep{step, cand.mixture, cand.fidelity_id, cand.cost,
                                        budget.consumed, score, std::move(rec), cumulative_best});
    }

    trace.validate();
    return trace;
}

}  // namespace mixopt
