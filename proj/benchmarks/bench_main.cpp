#include <benchmark/benchmark.h>

#include <random>

#include "gmarl/policy.hpp"
#include "gmarl/scenario.hpp"
#include "gmarl/trainer.hpp"

using namespace gmarl;

namespace {

Scenario bench_scenario(std::size_t cells) {
    Scenario sc;
    const double side = 3000.0 * std::sqrt(double(cells) / 11.0);
    sc.topology = generate_topology(cells, {0, 0, side, side}, 500, 1);
    sc.lambda = TrafficIntensity::uniform(cells, sc.categories.size(), 2.0);
    return sc;
}

PolicySpec bench_spec(Strategy s, const Scenario& sc) {
    PolicySpec spec;
    spec.strategy = s;
    spec.input_dim = sc.feature_dim();
    spec.actions = sc.power.size();
    return spec;
}

void BM_PolicyForward(benchmark::State& state) {
    const auto strategy = static_cast<Strategy>(state.range(0));
    const Scenario sc = bench_scenario(static_cast<std::size_t>(state.range(1)));
    const RadioEnv env(sc);
    const PolicySpec spec = bench_spec(strategy, sc);
    const ParamStore p = init_policy_params(spec, 1);
    const GraphContext ctx = make_graph_context(strategy, sc, spec.aux);
    const Tensor x = env.features(env.sample(7));
    for (auto _ : state) {
        Tape tape;
        benchmark::DoNotOptimize(policy_forward(tape, p, spec, ctx, x).probs);
    }
    state.SetLabel(to_string(strategy));
}

void BM_PolicyForwardBackward(benchmark::State& state) {
    const auto strategy = static_cast<Strategy>(state.range(0));
    const Scenario sc = bench_scenario(static_cast<std::size_t>(state.range(1)));
    const RadioEnv env(sc);
    const PolicySpec spec = bench_spec(strategy, sc);
    const ParamStore p = init_policy_params(spec, 1);
    const GraphContext ctx = make_graph_context(strategy, sc, spec.aux);
    const Tensor x = env.features(env.sample(7));
    const std::vector<std::size_t> actions(sc.agents(), 2);
    for (auto _ : state) {
        Tape tape;
        const Var lp = softmax_logprob(policy_forward(tape, p, spec, ctx, x).logits, actions);
        benchmark::DoNotOptimize(tape.backward(lp, p));
    }
    state.SetLabel(to_string(strategy));
}

void BM_EnvStep(benchmark::State& state) {
    const Scenario sc = bench_scenario(static_cast<std::size_t>(state.range(0)));
    const RadioEnv env(sc);
    const UserSet users = env.sample(3);
    std::mt19937_64 rng(5);
    std::vector<std::size_t> levels(sc.agents());
    for (auto _ : state) {
        for (auto& l : levels) l = rng() % sc.power.size();
        benchmark::DoNotOptimize(env.step(users, levels).reward_bps);
    }
    state.counters["users"] = double(users.size());
}

void BM_SampleAndObserve(benchmark::State& state) {
    const Scenario sc = bench_scenario(static_cast<std::size_t>(state.range(0)));
    const RadioEnv env(sc);
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(env.features(env.sample(++seed)));
}

void BM_RelationEdges(benchmark::State& state) {
    const Scenario sc = bench_scenario(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(build_comm_graph(Strategy::relation, sc));
}

void BM_TrainEpoch(benchmark::State& state) {
    const auto strategy = static_cast<Strategy>(state.range(0));
    const Scenario sc = bench_scenario(11);
    const PolicySpec spec = bench_spec(strategy, sc);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.eval_episodes = 0;
    cfg.optimizer = OptimizerKind::adam;
    for (auto _ : state) benchmark::DoNotOptimize(train(sc, spec, cfg, 1).final_checkpoint);
    state.SetLabel(to_string(strategy));
}

void strategies_and_sizes(benchmark::internal::Benchmark* b) {
    for (int s = 0; s < 5; ++s)
        for (int m : {11, 20}) b->Args({s, m});
}

} // namespace

BENCHMARK(BM_PolicyForward)->Apply(strategies_and_sizes)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PolicyForwardBackward)->Apply(strategies_and_sizes)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EnvStep)->Arg(3)->Arg(11)->Arg(20)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SampleAndObserve)->Arg(11)->Arg(20)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_RelationEdges)->Arg(11)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainEpoch)->DenseRange(0, 4)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
