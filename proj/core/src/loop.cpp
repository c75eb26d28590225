#include "mixopt/loop.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "mixopt/log.hpp"
#include "mixopt/rng.hpp"

namespace mixopt {

void LoopConfig::validate() const {
    if (mode == LoopMode::kBO && !query_fidelity) {
        throw std::invalid_argument("BO mode needs a query fidelity");
    }
    if (!(budget_total > 0.0)) throw std::invalid_argument("budget must be positive");
    if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
    if (init_count < 1) throw std::invalid_argument("init_count must be >= 1");
    if (refit_every < 1) throw std::invalid_argument("refit_every must be >= 1");
}

std::size_t recommend_index(const FittedGP& gp, const Eigen::MatrixXd& candidates,
                            double target_scale) {
    if (candidates.rows() < 1) throw std::invalid_argument("recommend: no candidates");
    const Eigen::VectorXd scales = Eigen::VectorXd::Constant(candidates.rows(), target_scale);
    const auto posteriors = gp.posterior_batch(candidates, scales);

    const auto lex_less = [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index j = 0; j < candidates.cols(); ++j) {
            if (candidates(a, j) != candidates(b, j)) return candidates(a, j) < candidates(b, j);
        }
        return false;
    };
    Eigen::Index best = 0;
    double best_mean = posteriors[0].mean;
    for (Eigen::Index i = 1; i < candidates.rows(); ++i) {
        const double mean = posteriors[static_cast<size_t>(i)].mean;
        if (mean > best_mean + 1e-12) {
            best = i;
            best_mean = mean;
        } else if (mean >= best_mean - 1e-12 && lex_less(i, best)) {
            best = i;
            best_mean = std::max(mean, best_mean);
        }
    }
    return static_cast<std::size_t>(best);
}

MixtureWeights recommend(const FittedGP& gp, std::span<const MixtureWeights> candidates,
                         double target_scale) {
    if (candidates.empty()) throw std::invalid_argument("recommend: no candidates");
    const Eigen::Index d = static_cast<Eigen::Index>(candidates.front().dim());
    Eigen::MatrixXd Q(static_cast<Eigen::Index>(candidates.size()), d);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            Q(static_cast<Eigen::Index>(i), j) = candidates[i][static_cast<std::size_t>(j)];
        }
    }
    return candidates[recommend_index(gp, Q, target_scale)];
}

namespace {

Trace run_loop(const ReplayProblem& problem, const LoopConfig& config) {
    config.validate();

    // The working candidate set: everything for MFBO, one fidelity for BO.
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < problem.candidates().size(); ++i) {
        if (config.mode == LoopMode::kMFBO ||
            problem.candidates()[i].fidelity_id == *config.query_fidelity) {
            active.push_back(i);
        }
    }
    if (active.empty()) {
        throw std::invalid_argument(config.mode == LoopMode::kBO
                                        ? "no candidates at query fidelity '" +
                                              *config.query_fidelity + "'"
                                        : "no candidates");
    }
    std::vector<AcquisitionCandidate> cands;
    cands.reserve(active.size());
    for (const std::size_t i : active) cands.push_back(problem.candidates()[i]);

    Trace trace;
    trace.method = !config.method_name.empty()
                       ? config.method_name
                       : (config.mode == LoopMode::kBO ? "bo" : "mfbo");
    trace.seed = config.seed;

    Budget budget = Budget::create(config.budget_total, config.max_steps);
    std::vector<bool> observed(cands.size(), false);
    auto init_rng = make_rng(config.seed, "loop-init");
    auto acq_rng = make_rng(config.seed, "loop-acquisition");

    // Accumulated observations, also the GP training set.
    const Eigen::Index d = static_cast<Eigen::Index>(problem.dims());
    Eigen::MatrixXd X(0, d);
    Eigen::VectorXd scales(0), y(0);
    std::optional<FittedGP> gp;
    bool have_hyperparams = false;
    int observations_since_fit = 0;
    double best_observed = -std::numeric_limits<double>::infinity();
    double cumulative_best = -std::numeric_limits<double>::infinity();

    for (int step = 0; step < config.max_steps; ++step) {
        // Choose what to train next.
        std::optional<std::size_t> chosen;  // index into cands
        if (step < config.init_count) {
            std::vector<std::size_t> open;
            for (std::size_t i = 0; i < cands.size(); ++i) {
                if (!observed[i]) open.push_back(i);
            }
            if (open.empty()) break;
            std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
            chosen = open[pick(init_rng)];
        } else if (config.mode == LoopMode::kBO) {
            const auto sel = select_next_ei(*gp, cands, observed, best_observed);
            if (!sel) break;
            chosen = sel->index;
        } else {
            const std::vector<double> max_values = sample_max_values(
                *gp, problem.target_pool_matrix(), problem.target_scale(), config.max_values,
                acq_rng);
            const auto sel = select_next_mes(*gp, cands, observed, max_values);
            if (!sel) break;
            chosen = sel->index;
        }

        // Hard budget: admit the query only if its full cost fits.
        const AcquisitionCandidate& cand = cands[*chosen];
        if (!budget.can_afford(cand.cost)) break;
        budget.charge(cand.cost);

        const double score = problem.observe(active[*chosen]);
        observed[*chosen] = true;
        best_observed = std::max(best_observed, score);

        const Eigen::Index n = X.rows();
        X.conservativeResize(n + 1, d);
        scales.conservativeResize(n + 1);
        y.conservativeResize(n + 1);
        for (Eigen::Index j = 0; j < d; ++j) X(n, j) = cand.mixture[static_cast<std::size_t>(j)];
        scales[n] = cand.scale;
        y[n] = score;

        // Refit on cadence (relaxed once the model is large); otherwise only
        // re-condition on the grown data set with the current hyperparameters.
        const int effective_refit = config.refit_every * (y.size() > 200 ? 5 : 1);
        ++observations_since_fit;
        if (y.size() < 2) {
            gp = FittedGP::fit(GPInputs{X, scales}, y, config.fit);
        } else if (!have_hyperparams || observations_since_fit >= effective_refit) {
            FitConfig fc = config.fit;
            fc.seed = substream(config.seed, "loop-fit", static_cast<std::uint64_t>(step));
            gp = FittedGP::fit(GPInputs{X, scales}, y, fc);
            have_hyperparams = true;
            observations_since_fit = 0;
        } else {
            gp = FittedGP::with_hyperparams(GPInputs{X, scales}, y, gp->hyperparams(),
                                            gp->use_scale_kernel());
        }

        // Deployment pick after this step: posterior-mean argmax over the
        // target pool, scored against the table.
        const std::size_t rec_local =
            recommend_index(*gp, problem.target_pool_matrix(), problem.target_scale());
        const std::size_t rec_idx = problem.target_pool()[rec_local];
        const AcquisitionCandidate& rec = problem.candidates()[rec_idx];
        const double predicted =
            gp->posterior(problem.target_pool_matrix().row(static_cast<Eigen::Index>(rec_local))
                              .transpose(),
                          problem.target_scale())
                .mean;
        const double realized = problem.observe(rec_idx);
        cumulative_best = std::max(cumulative_best, realized);

        TraceStep ts{step,
                     cand.mixture,
                     cand.fidelity_id,
                     cand.cost,
                     budget.consumed,
                     score,
                     RecommendationRecord{rec.mixture, predicted, realized},
                     cumulative_best};
        trace.steps.push_back(std::move(ts));
    }

    trace.validate();
    return trace;
}

}  // namespace

Trace run_bo(const ReplayProblem& problem, const LoopConfig& config) {
    if (config.mode != LoopMode::kBO) throw std::invalid_argument("run_bo: config.mode != BO");
    return run_loop(problem, config);
}

Trace run_mfbo(const ReplayProblem& problem, const LoopConfig& config) {
    if (config.mode != LoopMode::kMFBO) {
        throw std::invalid_argument("run_mfbo: config.mode != MFBO");
    }
    return run_loop(problem, config);
}

}  // namespace mixopt
