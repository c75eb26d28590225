// Microbenchmarks for the hot paths: conditioning a GP, posterior sweeps
// over a candidate pool, hyperparameter fitting, and a full optimizer step
// on a synthetic table. Run with --benchmark_filter=... to narrow.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mixopt/acquisition.hpp"
#include "mixopt/gp.hpp"
#include "mixopt/kernels.hpp"
#include "mixopt/loop.hpp"
#include "mixopt/problem.hpp"
#include "mixopt/rng.hpp"
#include "mixopt/run_table.hpp"

namespace {

using namespace mixopt;

struct Dataset {
    GPInputs inputs;
    Eigen::VectorXd y;
    GPHyperparams hp;
};

Dataset make_dataset(int n, int d) {
    auto rng = make_rng(7, "bench-data");
    std::gamma_distribution<double> gamma(1.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    Dataset data;
    data.inputs.mixtures.resize(n, d);
    data.inputs.scales.resize(n);
    const std::vector<double> scales = normalize_scales(std::vector<std::uint64_t>{60, 250, 1000});
    std::uniform_int_distribution<int> level(0, 2);
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int j = 0; j < d; ++j) {
            data.inputs.mixtures(i, j) = gamma(rng);
            sum += data.inputs.mixtures(i, j);
        }
        data.inputs.mixtures.row(i) /= sum;
        data.inputs.scales[i] = scales[static_cast<std::size_t>(level(rng))];
    }
    data.y.resize(n);
    for (int i = 0; i < n; ++i) data.y[i] = normal(rng);

    data.hp.output_scale = 1.3;
    data.hp.lengthscale = Eigen::VectorXd::Constant(d, 0.7);
    data.hp.ds_offset = 0.4;
    data.hp.ds_exponent = 1.1;
    data.hp.noise_var = 1e-3;
    return data;
}

void BM_Condition(benchmark::State& state) {
    const Dataset data = make_dataset(static_cast<int>(state.range(0)), 5);
    for (auto _ : state) {
        FittedGP gp = FittedGP::with_hyperparams(data.inputs, data.y, data.hp, true);
        benchmark::DoNotOptimize(gp.jitter());
    }
}
BENCHMARK(BM_Condition)->Arg(32)->Arg(128)->Arg(512);

void BM_PosteriorBatch(benchmark::State& state) {
    const Dataset data = make_dataset(128, 5);
    const FittedGP gp = FittedGP::with_hyperparams(data.inputs, data.y, data.hp, true);
    const Dataset queries = make_dataset(static_cast<int>(state.range(0)), 5);
    for (auto _ : state) {
        auto out = gp.posterior_batch(queries.inputs.mixtures, queries.inputs.scales);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_PosteriorBatch)->Arg(64)->Arg(512)->Arg(4096);

void BM_LogMarginalGradient(benchmark::State& state) {
    const Dataset data = make_dataset(static_cast<int>(state.range(0)), 5);
    Eigen::VectorXd grad;
    for (auto _ : state) {
        const double lml = log_marginal_likelihood(data.inputs, data.y, data.hp, true, &grad);
        benchmark::DoNotOptimize(lml);
        benchmark::DoNotOptimize(grad.data());
    }
}
BENCHMARK(BM_LogMarginalGradient)->Arg(32)->Arg(128)->Arg(512);

void BM_Fit(benchmark::State& state) {
    const Dataset data = make_dataset(static_cast<int>(state.range(0)), 5);
    FitConfig config;
    config.restarts = 3;
    config.max_iters = 50;
    for (auto _ : state) {
        FittedGP gp = FittedGP::fit(data.inputs, data.y, config);
        benchmark::DoNotOptimize(gp.hyperparams().output_scale);
    }
}
BENCHMARK(BM_Fit)->Unit(benchmark::kMillisecond)->Arg(32)->Arg(96);

void BM_MaxValueSampling(benchmark::State& state) {
    const Dataset data = make_dataset(96, 5);
    const FittedGP gp = FittedGP::with_hyperparams(data.inputs, data.y, data.hp, true);
    const Dataset pool = make_dataset(static_cast<int>(state.range(0)), 5);
    MaxValueConfig config;
    auto rng = make_rng(7, "bench-mes");
    for (auto _ : state) {
        auto maxima = sample_max_values(gp, pool.inputs.mixtures, 1.0, config, rng);
        benchmark::DoNotOptimize(maxima.data());
    }
}
BENCHMARK(BM_MaxValueSampling)->Arg(64)->Arg(256);

void BM_OptimizerRun(benchmark::State& state) {
    SyntheticSpec spec;
    spec.dims = 4;
    spec.counts = {48, 24, 12};
    const SyntheticTable synth = make_synthetic_table(spec, 99);
    const MetricTarget target = MetricTarget::create(synth.table, "score", {kSyntheticMetric});
    const ReplayProblem problem(synth.table, target, CostModel::from_table(synth.table));

    LoopConfig config;
    config.budget_total = 6.0;
    config.max_steps = static_cast<int>(state.range(0));
    config.fit.restarts = 2;
    config.fit.max_iters = 50;
    config.refit_every = 2;
    for (auto _ : state) {
        const Trace trace = run_mfbo(problem, config);
        benchmark::DoNotOptimize(trace.steps.size());
    }
}
BENCHMARK(BM_OptimizerRun)->Unit(benchmark::kMillisecond)->Arg(10)->Arg(25);

}  // namespace

BENCHMARK_MAIN();
