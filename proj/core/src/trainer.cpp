#include "gmarl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "gmarl/error.hpp"

namespace gmarl {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (batch < 1) throw ConfigError("batch size must be at least 1");
    if (!(baseline_decay >= 0.0 && baseline_decay < 1.0)) throw ConfigError("baseline decay must lie in [0, 1)");
    if (entropy_coef < 0.0) throw ConfigError("entropy coefficient must be non-negative");
    if (baseline == BaselineMode::group && (group_size < 2 || batch % group_size != 0)) {
        throw ConfigError("group baseline needs group_size >= 2 dividing the batch size");
    }
}

TrainConfig train_config_from_config(const Config& c) {
    TrainConfig t;
    t.epochs = static_cast<std::size_t>(c.get_int("train.epochs", static_cast<std::int64_t>(t.epochs)));
    t.batch = static_cast<std::size_t>(c.get_int("train.batch", static_cast<std::int64_t>(t.batch)));
    t.learning_rate = c.get_double("train.learning_rate", t.learning_rate);
    const auto baseline = c.get_string("train.baseline", "moving_average");
    if (baseline == "none") {
        t.baseline = BaselineMode::none;
    } else if (baseline == "moving_average") {
        t.baseline = BaselineMode::moving_average;
    } else if (baseline == "group") {
        t.baseline = BaselineMode::group;
    } else {
        throw ConfigError("unknown baseline mode '" + baseline + "'");
    }
    t.baseline_decay = c.get_double("train.baseline_decay", t.baseline_decay);
    t.group_size = static_cast<std::size_t>(c.get_int("train.group_size", static_cast<std::int64_t>(t.group_size)));
    t.entropy_coef = c.get_double("train.entropy_coef", t.entropy_coef);
    const auto opt = c.get_string("train.optimizer", "sgd");
    if (opt == "sgd") {
        t.optimizer = OptimizerKind::sgd;
    } else if (opt == "adam") {
        t.optimizer = OptimizerKind::adam;
    } else {
        throw ConfigError("unknown optimizer '" + opt + "'");
    }
    t.eval_episodes = static_cast<std::size_t>(c.get_int("train.eval_episodes", static_cast<std::int64_t>(t.eval_episodes)));
    t.checkpoint_every =
        static_cast<std::size_t>(c.get_int("train.checkpoint_every", static_cast<std::int64_t>(t.checkpoint_every)));
    t.record_wallclock = c.get_bool("train.record_wallclock", false);
    t.validate();
    return t;
}

std::uint64_t stream_seed(std::uint64_t seed, SeedStream stream, std::uint64_t index) {
    return derive_seed(seed, static_cast<std::uint64_t>(stream), index);
}

PolicyModel PolicyModel::build(const PolicySpec& spec, const Scenario& scenario) {
    return {spec, make_graph_context(spec.strategy, scenario, spec.aux)};
}

namespace {

// Summed Shannon entropy of the per-agent distributions, on the tape.
Var policy_entropy(Var logits) {
    const Var logp = log_softmax(logits);
    return neg(sum(mul(exp(logp), logp)));
}

} // namespace

EpisodeSample run_episode(const RadioEnv& env, const PolicyModel& policy, const ParamStore& params,
                          std::uint64_t traffic_seed, std::mt19937_64& action_rng, SampleMode mode,
                          bool with_gradients, double entropy_coef) {
    EpisodeSample out;
    const UserSet users = env.sample(traffic_seed);
    const Tensor x = env.features(users);

    Tape tape;
    const PolicyOutput po = policy_forward(tape, params, policy.spec, policy.graph, x);
    const ActionSample act = sample_actions(po.probs, action_rng, mode);
    const StepResult res = env.step(users, act.actions);

    out.record.traffic_seed = traffic_seed;
    out.record.users = users.size();
    out.record.actions = act.actions;
    out.record.reward_bps = res.reward_bps;
    out.record.normalized_return = res.normalized_reward;
    out.record.log_prob = act.log_prob;

    if (with_gradients) {
        const Var logp = softmax_logprob(po.logits, act.actions);
        out.record.log_prob = logp.value().item();
        out.grad_log_prob = tape.backward(logp, params);
        if (entropy_coef > 0.0) {
            Tape etape;
            const PolicyOutput eo = policy_forward(etape, params, policy.spec, policy.graph, x);
            out.grad_entropy = etape.backward(policy_entropy(eo.logits), params);
        }
    }
    return out;
}

namespace {

class SgdOptimizer final : public Optimizer {
public:
    explicit SgdOptimizer(double lr) : lr_(lr) {}
    void apply(ParamStore& params, const Gradients& direction) override {
        for (const auto& [name, g] : direction) params.axpy(name, lr_, g);
    }

private:
    double lr_;
};

class AdamOptimizer final : public Optimizer {
public:
    explicit AdamOptimizer(double lr) : lr_(lr) {}
    void apply(ParamStore& params, const Gradients& direction) override {
        ++t_;
        const double c1 = 1.0 - std::pow(kBeta1, double(t_));
        const double c2 = 1.0 - std::pow(kBeta2, double(t_));
        for (const auto& [name, g] : direction) {
            auto [mit, fresh] = m_.try_emplace(name, Tensor::zeros_like(g));
            auto& v = v_.try_emplace(name, Tensor::zeros_like(g)).first->second;
            auto& m = mit->second;
            Tensor step = Tensor::zeros_like(g);
            for (std::size_t i = 0; i < g.size(); ++i) {
                m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
                v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
                step[i] = (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
            }
            params.axpy(name, lr_, step);
        }
    }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;
    double lr_;
    std::size_t t_ = 0;
    std::map<std::string, Tensor> m_, v_;
};

} // namespace

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, double learning_rate) {
    if (kind == OptimizerKind::adam) return std::make_unique<AdamOptimizer>(learning_rate);
    return std::make_unique<SgdOptimizer>(learning_rate);
}

UpdateStats reinforce_update(ParamStore& params, std::span<const EpisodeSample> batch, double baseline,
                             const TrainConfig& config, Optimizer& optimizer) {
    const std::vector<double> b(batch.size(), baseline);
    return reinforce_update(params, batch, b, config, optimizer);
}

std::vector<double> group_baselines(std::span<const EpisodeSample> batch, std::size_t group_size) {
    if (group_size < 2 || batch.size() % group_size != 0) {
        throw ConfigError("group baseline needs group_size >= 2 dividing the batch size");
    }
    std::vector<double> out(batch.size());
    for (std::size_t g = 0; g < batch.size(); g += group_size) {
        double total = 0.0;
        for (std::size_t i = g; i < g + group_size; ++i) total += batch[i].record.normalized_return;
        for (std::size_t i = g; i < g + group_size; ++i)
            out[i] = (total - batch[i].record.normalized_return) / double(group_size - 1);
    }
    return out;
}

UpdateStats reinforce_update(ParamStore& params, std::span<const EpisodeSample> batch,
                             std::span<const double> baselines, const TrainConfig& config, Optimizer& optimizer) {
    if (batch.empty()) throw ConfigError("reinforce_update needs a non-empty batch");
    if (baselines.size() != batch.size()) throw DimensionError("one baseline per episode expected");
    UpdateStats stats;
    for (const auto& [name, t] : params.entries()) stats.direction.emplace(name, Tensor::zeros_like(t));
    const double inv = 1.0 / double(batch.size());
    for (std::size_t k = 0; k < batch.size(); ++k) {
        const auto& s = batch[k];
        const double advantage = (s.record.normalized_return - baselines[k]) * inv;
        for (const auto& [name, g] : s.grad_log_prob) {
            auto dst = stats.direction.at(name).data();
            auto src = g.data();
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += advantage * src[i];
        }
        if (config.entropy_coef > 0.0) {
            for (const auto& [name, g] : s.grad_entropy) {
                auto dst = stats.direction.at(name).data();
                auto src = g.data();
                for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += config.entropy_coef * inv * src[i];
            }
        }
    }
    double sq = 0.0;
    for (const auto& [name, g] : stats.direction) {
        if (!g.all_finite()) throw NumericError("non-finite policy gradient for parameter '" + name + "'");
        for (double v : g.data()) sq += v * v;
    }
    stats.grad_norm = std::sqrt(sq);
    optimizer.apply(params, stats.direction);
    return stats;
}

double MovingAverageBaseline::value() const { return weight_ > 0.0 ? ema_ / weight_ : 0.0; }

void MovingAverageBaseline::observe(double batch_mean) {
    ema_ = decay_ * ema_ + (1.0 - decay_) * batch_mean;
    weight_ = decay_ * weight_ + (1.0 - decay_);
}

RunResult train(const Scenario& scenario, const PolicySpec& spec, const TrainConfig& config, std::uint64_t seed,
                const std::string& config_digest) {
    config.validate();
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();

    const RadioEnv env(scenario);
    const PolicyModel model = PolicyModel::build(spec, scenario);
    ParamStore params = init_policy_params(spec, stream_seed(seed, SeedStream::init));
    auto optimizer = make_optimizer(config.optimizer, config.learning_rate);
    MovingAverageBaseline baseline(config.baseline_decay);
    std::mt19937_64 action_rng(stream_seed(seed, SeedStream::action));

    RunResult run;
    run.seed = seed;
    std::vector<EpisodeSample> batch;
    batch.reserve(config.batch);
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        batch.clear();
        for (std::size_t i = 0; i < config.batch; ++i) {
            const std::size_t ep = (epoch - 1) * config.batch + i;
            const std::size_t draw = config.baseline == BaselineMode::group ? ep / config.group_size : ep;
            auto sample = run_episode(env, model, params, stream_seed(seed, SeedStream::traffic, draw), action_rng,
                                      SampleMode::sample, true, config.entropy_coef);
            sample.record.seed = seed;
            sample.record.epoch = epoch;
            sample.record.episode = ep;
            if (!std::isfinite(sample.record.normalized_return)) throw NumericError("non-finite episode return");
            batch.push_back(std::move(sample));
        }

        double mean = 0.0;
        for (const auto& s : batch) mean += s.record.normalized_return;
        mean /= double(batch.size());
        double var = 0.0;
        for (const auto& s : batch) var += std::pow(s.record.normalized_return - mean, 2);
        const double sd = batch.size() > 1 ? std::sqrt(var / double(batch.size() - 1)) : 0.0;

        std::vector<double> b(batch.size(), 0.0);
        if (config.baseline == BaselineMode::moving_average) {
            std::fill(b.begin(), b.end(), baseline.value());
        } else if (config.baseline == BaselineMode::group) {
            b = group_baselines(batch, config.group_size);
        }
        const UpdateStats upd = reinforce_update(params, batch, b, config, *optimizer);
        baseline.observe(mean);

        EpochMetrics m;
        m.epoch = epoch;
        m.mean_reward = mean;
        m.std_reward = sd;
        m.grad_norm = upd.grad_norm;
        m.eval_reward = config.eval_episodes
                            ? evaluate(params, spec, scenario, config.eval_episodes, stream_seed(seed, SeedStream::eval))
                                  .mean_normalized
                            : std::numeric_limits<double>::quiet_NaN();
        if (config.record_wallclock) m.wallclock_s = std::chrono::duration<double>(clock::now() - start).count();
        run.epochs.push_back(m);
        for (auto& s : batch) run.episodes.push_back(std::move(s.record));

        if (config.checkpoint_every && epoch % config.checkpoint_every == 0) {
            run.snapshots.emplace(epoch, make_checkpoint(params, spec, config_digest, seed));
        }
    }
    run.final_checkpoint = make_checkpoint(params, spec, config_digest, seed);
    return run;
}

EvalResult evaluate(const ParamStore& params, const PolicySpec& spec, const Scenario& scenario,
                    std::size_t episodes, std::uint64_t eval_seed, SampleMode mode) {
    if (spec.input_dim != scenario.feature_dim()) {
        throw DimensionError("policy expects " + std::to_string(spec.input_dim) + " input features but the scenario provides " +
                             std::to_string(scenario.feature_dim()) +
                             (spec.strategy == Strategy::mlp ? " (the MLP baseline cannot transfer across input sizes)" : ""));
    }
    if (spec.actions != scenario.power.size()) {
        throw DimensionError("policy has " + std::to_string(spec.actions) + " actions but the scenario has " +
                             std::to_string(scenario.power.size()) + " power levels");
    }
    const RadioEnv env(scenario);
    const PolicyModel model = PolicyModel::build(spec, scenario);
    std::mt19937_64 action_rng(stream_seed(eval_seed, SeedStream::action));
    EvalResult out;
    for (std::size_t i = 0; i < episodes; ++i) {
        auto s = run_episode(env, model, params, stream_seed(eval_seed, SeedStream::eval, i), action_rng, mode, false);
        s.record.seed = eval_seed;
        s.record.episode = i;
        out.mean_reward_bps += s.record.reward_bps;
        out.mean_normalized += s.record.normalized_return;
        out.episodes.push_back(std::move(s.record));
    }
    if (episodes) {
        out.mean_reward_bps /= double(episodes);
        out.mean_normalized /= double(episodes);
    }
    return out;
}

EvalResult evaluate(const Checkpoint& checkpoint, const Scenario& scenario, std::size_t episodes,
                    std::uint64_t eval_seed, SampleMode mode) {
    return evaluate(checkpoint.params, spec_from_checkpoint(checkpoint), scenario, episodes, eval_seed, mode);
}

} // namespace gmarl
