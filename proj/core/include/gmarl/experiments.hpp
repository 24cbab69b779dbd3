#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "gmarl/config.hpp"
#include "gmarl/policy.hpp"
#include "gmarl/scenario.hpp"
#include "gmarl/trainer.hpp"

namespace gmarl {

struct StudyOptions {
    std::vector<Strategy> strategies = all_strategies();
    std::vector<std::uint64_t> seeds{1};
    TrainConfig train;
    /// Greedy episodes per sweep evaluation.
    std::size_t eval_episodes = 32;
    std::uint64_t eval_seed = 9001;
    std::size_t workers = 1;
    /// The resolved config; policy.* and aux.* keys are read from it.
    Config config;
};

/// Reads study.* keys (strategies, seeds or seed_count + seed_base,
/// eval_episodes, eval_seed, workers) plus train.*.
StudyOptions study_options_from_config(const Config& config);

/// Runs fn(0..count-1) on up to `workers` threads. Results must be written
/// into per-index slots; the first exception is rethrown after joining.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

struct StrategyRuns {
    Strategy strategy = Strategy::learned;
    PolicySpec spec;
    std::vector<RunResult> runs;
};

struct CompareResult {
    std::vector<StrategyRuns> strategies;

    const StrategyRuns& at(Strategy s) const;
    bool contains(Strategy s) const;
};

/// Trains every strategy on the same scenario and seed list.
CompareResult train_compare(const Scenario& scenario, const StudyOptions& options);

/// Final-epoch batch-mean reward of every run, in seed order.
std::vector<double> final_rewards(const StrategyRuns& runs);

/// Same scenario with `cells` base stations. Bounds grow with sqrt(cells / M)
/// to keep site density; every cell gets the base per-category mean rate.
/// Returns `base` unchanged when the size already matches.
Scenario resize_scenario(const Scenario& base, std::size_t cells, std::uint64_t topology_seed,
                         double min_separation_m = 500.0);

/// Same scenario with the rates replaced by `rates` (cells x categories, row-major).
Scenario with_traffic(const Scenario& base, std::vector<double> rates);

struct SweepRecord {
    double point = 0.0;
    Strategy strategy = Strategy::learned;
    std::uint64_t seed = 0;
    double score = 0.0;
    double reference = 0.0;
    double ratio = 0.0;
};

struct SweepRow {
    double point = 0.0;
    Strategy strategy = Strategy::learned;
    bool applicable = true;
    double mean_ratio = 0.0;
    double ci99 = 0.0;
    std::size_t n = 0;
};

struct SweepPoint {
    double point = 0.0;
    bool feasible = true;
    /// Achieved axis value (e.g. the realised cosine similarity).
    double achieved = 0.0;
};

struct SweepResult {
    std::string axis;
    std::vector<SweepPoint> points;
    std::vector<SweepRow> rows;
    std::vector<SweepRecord> records;

    const SweepRow* find(double point, Strategy s) const;
};

/// Evaluates the checkpoints of `trained` on resized networks and normalises
/// each by a learned-edges model trained from scratch there for the same epochs.
SweepResult scale_sweep(const Scenario& base, const CompareResult& trained, const std::vector<std::size_t>& sizes,
                        const StudyOptions& options, std::uint64_t topology_seed, double min_separation_m = 500.0);

/// As scale_sweep, over traffic matrices at target cosine similarities to the base rates.
SweepResult traffic_sweep(const Scenario& base, const CompareResult& trained, const std::vector<double>& cosines,
                          const StudyOptions& options, std::uint64_t perturb_seed);

std::string run_id(Strategy s, std::uint64_t seed);
std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, const std::string& text);
void write_metrics_csv(const std::filesystem::path& path, const CompareResult& result);
void write_episodes_csv(const std::filesystem::path& path, const CompareResult& result);
/// Per strategy and epoch: mean and CI99 across seeds of the batch and eval rewards.
void write_curves_csv(const std::filesystem::path& path, const CompareResult& result);
/// Final-epoch table with CI99 and paired one-sided tests between strategies.
std::string compare_summary(const CompareResult& result);
void write_checkpoints(const std::filesystem::path& dir, const CompareResult& result);

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& result);
void write_sweep_records_csv(const std::filesystem::path& path, const SweepResult& result);
std::string sweep_summary(const SweepResult& result);

} // namespace gmarl
