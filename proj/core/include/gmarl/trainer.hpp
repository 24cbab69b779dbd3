#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gmarl/checkpoint.hpp"
#include "gmarl/config.hpp"
#include "gmarl/policy.hpp"
#include "gmarl/scenario.hpp"

namespace gmarl {

/// `group`: every traffic draw is rolled out group_size times and each rollout
/// is baselined by the mean return of its siblings (leave-one-out).
enum class BaselineMode { none, moving_average, group };
enum class OptimizerKind { sgd, adam };

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch = 16;
    double learning_rate = 1e-3;
    BaselineMode baseline = BaselineMode::moving_average;
    double baseline_decay = 0.95;
    std::size_t group_size = 4;
    double entropy_coef = 0.0;
    OptimizerKind optimizer = OptimizerKind::sgd;
    /// Greedy evaluation episodes after every epoch; 0 disables it.
    std::size_t eval_episodes = 16;
    /// Keep a parameter snapshot every N epochs; 0 keeps only the final one.
    std::size_t checkpoint_every = 0;
    /// Wall-clock is nondeterministic, so metrics carry 0 unless this is set.
    bool record_wallclock = false;

    void validate() const;
};

/// Reads train.* keys.
TrainConfig train_config_from_config(const Config& config);

/// Seed streams; every random draw of a run derives from (run seed, stream, index).
enum class SeedStream : std::uint64_t { init = 1, traffic = 2, action = 3, eval = 4, topology = 5, perturb = 6 };

std::uint64_t stream_seed(std::uint64_t seed, SeedStream stream, std::uint64_t index = 0);

struct EpisodeRecord {
    std::uint64_t seed = 0;
    std::size_t epoch = 0;
    std::size_t episode = 0;
    std::uint64_t traffic_seed = 0;
    std::size_t users = 0;
    std::vector<std::size_t> actions;
    double reward_bps = 0.0;
    double normalized_return = 0.0;
    double log_prob = 0.0;
};

/// One rollout plus the tape products the update needs.
struct EpisodeSample {
    EpisodeRecord record;
    Gradients grad_log_prob;
    /// Gradient of the summed per-agent policy entropy; empty when unused.
    Gradients grad_entropy;
};

/// A policy bound to the graph of one scenario.
struct PolicyModel {
    PolicySpec spec;
    GraphContext graph;

    static PolicyModel build(const PolicySpec& spec, const Scenario& scenario);
};

/// Sample users, observe, act, step. Stateless: nothing carries to the next episode.
EpisodeSample run_episode(const RadioEnv& env, const PolicyModel& policy, const ParamStore& params,
                          std::uint64_t traffic_seed, std::mt19937_64& action_rng,
                          SampleMode mode = SampleMode::sample, bool with_gradients = true,
                          double entropy_coef = 0.0);

/// Applies an ascent direction to the parameters.
class Optimizer {
public:
    virtual ~Optimizer() = default;
    virtual void apply(ParamStore& params, const Gradients& direction) = 0;
};

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, double learning_rate);

struct UpdateStats {
    double grad_norm = 0.0;
    Gradients direction;
};

/// theta += lr * mean_i[(R_i - baseline) * grad ln pi_i + entropy_coef * grad H_i].
/// Throws NumericError naming the first parameter with a non-finite gradient.
UpdateStats reinforce_update(ParamStore& params, std::span<const EpisodeSample> batch, double baseline,
                             const TrainConfig& config, Optimizer& optimizer);
/// Same with one baseline per episode.
UpdateStats reinforce_update(ParamStore& params, std::span<const EpisodeSample> batch,
                             std::span<const double> baselines, const TrainConfig& config, Optimizer& optimizer);

/// Leave-one-out means over consecutive groups of `group_size` episodes.
std::vector<double> group_baselines(std::span<const EpisodeSample> batch, std::size_t group_size);

/// Exponential moving average of batch-mean returns with start-up bias correction.
class MovingAverageBaseline {
public:
    explicit MovingAverageBaseline(double decay) : decay_(decay) {}
    double value() const;
    void observe(double batch_mean);

private:
    double decay_;
    double ema_ = 0.0;
    double weight_ = 0.0;
};

struct EpochMetrics {
    std::size_t epoch = 0;
    double mean_reward = 0.0;
    double std_reward = 0.0;
    double eval_reward = 0.0;
    double grad_norm = 0.0;
    double wallclock_s = 0.0;
};

struct RunResult {
    std::uint64_t seed = 0;
    std::vector<EpochMetrics> epochs;
    std::vector<EpisodeRecord> episodes;
    Checkpoint final_checkpoint;
    std::map<std::size_t, Checkpoint> snapshots;
};

RunResult train(const Scenario& scenario, const PolicySpec& spec, const TrainConfig& config, std::uint64_t seed,
                const std::string& config_digest = {});

struct EvalResult {
    double mean_reward_bps = 0.0;
    double mean_normalized = 0.0;
    std::vector<EpisodeRecord> episodes;
};

/// Rollouts on freshly sampled traffic without updates. Agent counts may
/// differ from training; a feature-width mismatch is a DimensionError.
EvalResult evaluate(const ParamStore& params, const PolicySpec& spec, const Scenario& scenario,
                    std::size_t episodes, std::uint64_t eval_seed, SampleMode mode = SampleMode::greedy);
EvalResult evaluate(const Checkpoint& checkpoint, const Scenario& scenario, std::size_t episodes,
                    std::uint64_t eval_seed, SampleMode mode = SampleMode::greedy);

} // namespace gmarl
