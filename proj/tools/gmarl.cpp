// gmarl: train, evaluate and sweep graph-based power-control policies.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gmarl/error.hpp"
#include "gmarl/experiments.hpp"
#include "gmarl/log.hpp"
#include "gmarl/stats.hpp"

namespace fs = std::filesystem;
using namespace gmarl;

namespace {

struct Common {
    std::string config;
    std::vector<std::string> overrides;
    std::string out_dir;
    bool verbose = false;
};

void add_common(CLI::App* app, Common& c, bool with_out_dir = true) {
    app->add_option("--config,-c", c.config, "Config file")->check(CLI::ExistingFile)->required();
    app->add_option("--set", c.overrides, "Override a config entry, key=value (repeatable)");
    if (with_out_dir) app->add_option("--out-dir,-o", c.out_dir, "Output directory");
    app->add_flag("--verbose,-v", c.verbose, "Log progress to stderr");
}

Config load_config(const Common& c) {
    Config cfg = c.config.empty() ? Config{} : Config::load(c.config);
    for (const auto& kv : c.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
    return cfg;
}

fs::path out_dir(const Common& c, const std::string& command) {
    if (!c.out_dir.empty()) return c.out_dir;
    const char* root = std::getenv("GMARL_OUT_ROOT");
    return fs::path(root && *root ? root : "runs") / command;
}

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
    return s;
}

template <typename T>
std::string join_numbers(const std::vector<T>& v) {
    std::ostringstream s;
    for (std::size_t i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
    return s.str();
}

void write_study(const fs::path& dir, const Config& cfg, const CompareResult& r) {
    write_text_file(dir / "config.resolved.cfg", cfg.resolved_text());
    write_metrics_csv(dir / "metrics.csv", r);
    write_episodes_csv(dir / "episodes.csv", r);
    write_curves_csv(dir / "curves.csv", r);
    write_text_file(dir / "summary.txt", compare_summary(r));
    write_checkpoints(dir / "checkpoints", r);
}

void write_timing(const fs::path& dir, const CompareResult& r) {
    std::ofstream f(dir / "timing.csv");
    f << "run_id,epoch,wallclock_s\n";
    for (const auto& sr : r.strategies)
        for (const auto& run : sr.runs)
            for (const auto& m : run.epochs) f << run_id(sr.strategy, run.seed) << ',' << m.epoch << ',' << m.wallclock_s << '\n';
}

/// Final checkpoints "<strategy>-s<seed>.json" from an earlier comparison study.
CompareResult load_trained(const fs::path& dir, const StudyOptions& opt) {
    CompareResult r;
    for (Strategy s : opt.strategies) {
        StrategyRuns sr;
        sr.strategy = s;
        for (auto seed : opt.seeds) {
            RunResult run;
            run.seed = seed;
            run.final_checkpoint = load_checkpoint(dir / (run_id(s, seed) + ".json"));
            sr.spec = spec_from_checkpoint(run.final_checkpoint);
            sr.runs.push_back(std::move(run));
        }
        r.strategies.push_back(std::move(sr));
    }
    return r;
}

void print_sweep(const SweepResult& s) {
    std::cout << s.axis << "\tstrategy\tmean_ratio\tci99\tn\n";
    for (const auto& row : s.rows) {
        std::cout << row.point << '\t' << to_string(row.strategy) << '\t';
        if (!row.applicable) {
            std::cout << "n/a\n";
            continue;
        }
        std::cout << row.mean_ratio << '\t' << row.ci99 << '\t' << row.n << '\n';
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph-based multi-agent power control: training and evaluation"};
    app.require_subcommand(1);
    const std::vector<std::string> strategy_names{"mlp", "binary", "distance", "relation", "learned"};

    Common common;
    std::uint64_t seed = 1;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> strategies;
    std::string strategy = "learned";
    std::int64_t epochs = -1;
    std::size_t workers = 0;
    bool timing = false;

    auto* train_cmd = app.add_subcommand("train", "Train one strategy for one or more seeds");
    add_common(train_cmd, common);
    train_cmd->add_option("--strategy,-s", strategy, "Policy strategy")->check(CLI::IsMember(strategy_names));
    train_cmd->add_option("--seed", seed, "Run seed");
    train_cmd->add_option("--seeds", seeds, "Run seeds (overrides --seed)")->delimiter(',');
    train_cmd->add_option("--epochs,-e", epochs, "Training epochs");
    train_cmd->add_flag("--timing", timing, "Record wall-clock per epoch (metrics stop being byte-reproducible)");

    std::string checkpoint_path;
    std::size_t episodes = 32;
    std::string mode = "greedy";
    auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on freshly sampled traffic");
    add_common(eval_cmd, common);
    eval_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--episodes,-n", episodes, "Evaluation episodes");
    eval_cmd->add_option("--seed", seed, "Evaluation seed");
    eval_cmd->add_option("--mode", mode, "greedy or sample")->check(CLI::IsMember({"greedy", "sample"}));
    std::string expect_strategy;
    eval_cmd->add_option("--strategy,-s", expect_strategy, "Fail unless the checkpoint holds this strategy")
        ->check(CLI::IsMember(strategy_names));

    auto add_study = [&](CLI::App* cmd) {
        add_common(cmd, common);
        cmd->add_option("--strategy,-s", strategies, "Strategies (repeatable; default from config)")
            ->check(CLI::IsMember(strategy_names))
            ->delimiter(',');
        cmd->add_option("--seeds", seeds, "Run seeds, comma separated (default from config)")->delimiter(',');
        cmd->add_option("--epochs,-e", epochs, "Training epochs");
        cmd->add_option("--workers,-j", workers, "Worker threads");
        cmd->add_flag("--timing", timing, "Also write timing.csv with wall-clock per epoch");
    };
    auto* compare_cmd = app.add_subcommand("train-compare", "Train every strategy on the same scenario and seeds");
    add_study(compare_cmd);

    std::vector<std::size_t> sizes;
    std::vector<double> cosines;
    std::string from_dir;
    auto* scale_cmd = app.add_subcommand("scale-sweep", "Evaluate trained policies on larger networks");
    add_study(scale_cmd);
    scale_cmd->add_option("--sizes", sizes, "Network sizes (default sweep.sizes)")->delimiter(',');
    scale_cmd->add_option("--from", from_dir, "Checkpoint directory of an earlier train-compare run")
        ->check(CLI::ExistingDirectory);
    auto* traffic_cmd = app.add_subcommand("traffic-sweep", "Evaluate trained policies under shifted traffic");
    add_study(traffic_cmd);
    traffic_cmd->add_option("--cosines", cosines, "Target cosine similarities (default sweep.cosines)")->delimiter(',');
    traffic_cmd->add_option("--from", from_dir, "Checkpoint directory of an earlier train-compare run")
        ->check(CLI::ExistingDirectory);

    std::size_t cells = 11;
    std::vector<double> bounds{0, 0, 3000, 3000};
    double min_sep = 500;
    std::string out_file;
    auto* gen_cmd = app.add_subcommand("gen-topology", "Write a random base-station layout");
    gen_cmd->add_option("--cells,-m", cells, "Number of base stations");
    gen_cmd->add_option("--bounds", bounds, "x_min,y_min,x_max,y_max in meters")->delimiter(',')->expected(4);
    gen_cmd->add_option("--min-sep", min_sep, "Minimum site separation in meters");
    gen_cmd->add_option("--seed", seed, "Placement seed");
    gen_cmd->add_option("--out,-o", out_file, "Output file")->required();

    auto* dump_cmd = app.add_subcommand("dump-graph", "Write the communication graph of a strategy");
    add_common(dump_cmd, common, false);
    dump_cmd->add_option("--strategy,-s", strategy, "Graph strategy")
        ->check(CLI::IsMember({"binary", "distance", "relation", "learned"}));
    dump_cmd->add_option("--checkpoint", checkpoint_path, "Learned-edges checkpoint; weights come from its auxiliary network")
        ->check(CLI::ExistingFile);
    dump_cmd->add_option("--out,-o", out_file, "Output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (common.verbose) set_log_level(LogLevel::info);

        if (*gen_cmd) {
            const auto topo = generate_topology(cells, {bounds[0], bounds[1], bounds[2], bounds[3]}, min_sep, seed);
            save_topology(out_file, topo);
            return 0;
        }

        Config cfg = load_config(common);
        if (epochs >= 0) cfg.set("train.epochs", std::to_string(epochs));
        if (!seeds.empty()) cfg.set("study.seeds", join_numbers(seeds));
        if (!strategies.empty()) cfg.set("study.strategies", join(strategies));
        if (workers > 0) cfg.set("study.workers", std::to_string(workers));
        if (timing) cfg.set("train.record_wallclock", "true");
        if (!sizes.empty()) cfg.set("sweep.sizes", join_numbers(sizes));
        if (!cosines.empty()) cfg.set("sweep.cosines", join_numbers(cosines));

        if (*dump_cmd) {
            const Scenario sc = scenario_from_config(cfg);
            CommGraph g = build_comm_graph(strategy_from_string(strategy), sc);
            if (!checkpoint_path.empty()) {
                if (strategy != "learned") throw ConfigError("--checkpoint only applies to the learned strategy");
                const Checkpoint ck = load_checkpoint(checkpoint_path);
                const PolicySpec spec = spec_from_checkpoint(ck);
                const GraphContext ctx = make_graph_context(Strategy::learned, sc, spec.aux);
                if (ctx.edges.size() > 0) {
                    Tape tape;
                    const Tensor w = aux_forward(tape, ck.params, spec.aux, ctx).value();
                    for (std::size_t e = 0; e < ctx.edges.size(); ++e)
                        g.adjacency[ctx.edges.src[e] * g.nodes + ctx.edges.dst[e]] = w[e];
                }
            }
            const std::string text = graph_dump(g);
            if (out_file.empty()) {
                std::cout << text;
            } else {
                write_text_file(out_file, text);
            }
            return 0;
        }

        const Scenario sc = scenario_from_config(cfg);

        if (*eval_cmd) {
            const Checkpoint ck = load_checkpoint(checkpoint_path);
            if (!expect_strategy.empty() && ck.strategy != expect_strategy) {
                throw ConfigError("checkpoint holds strategy '" + ck.strategy + "', not '" + expect_strategy + "'");
            }
            const EvalResult r =
                evaluate(ck, sc, episodes, seed, mode == "greedy" ? SampleMode::greedy : SampleMode::sample);
            std::cout << "episodes = " << r.episodes.size() << "\nmean_reward_bps = " << format_double(r.mean_reward_bps)
                      << "\nmean_normalized = " << format_double(r.mean_normalized) << '\n';
            if (!common.out_dir.empty()) {
                const fs::path dir = common.out_dir;
                std::ostringstream csv;
                csv << "episode,traffic_seed,users,reward_bps,normalized_return\n";
                for (const auto& e : r.episodes)
                    csv << e.episode << ',' << e.traffic_seed << ',' << e.users << ',' << format_double(e.reward_bps) << ','
                        << format_double(e.normalized_return) << '\n';
                write_text_file(dir / "eval.csv", csv.str());
            }
            return 0;
        }

        if (*train_cmd) {
            if (seeds.empty()) cfg.set("study.seeds", std::to_string(seed));
            cfg.set("study.strategies", strategy);
        }
        const StudyOptions opt = study_options_from_config(cfg);
        const std::string command = *train_cmd     ? "train"
                                    : *compare_cmd ? "train-compare"
                                    : *scale_cmd   ? "scale-sweep"
                                                   : "traffic-sweep";
        const fs::path dir = out_dir(common, command);

        auto trained_study = [&]() {
            if (!from_dir.empty()) return load_trained(from_dir, opt);
            CompareResult r = train_compare(sc, opt);
            write_study(dir, cfg, r);
            if (timing) write_timing(dir, r);
            return r;
        };

        if (*train_cmd || *compare_cmd) {
            const CompareResult r = trained_study();
            std::cout << compare_summary(r);
            std::cerr << "wrote " << dir.string() << '\n';
            return 0;
        }

        const CompareResult trained = trained_study();
        SweepResult sweep;
        if (*scale_cmd) {
            std::vector<std::size_t> sz;
            for (double v : cfg.get_doubles("sweep.sizes", {11, 15, 20, 25})) sz.push_back(static_cast<std::size_t>(v));
            sweep = scale_sweep(sc, trained, sz, opt, cfg.get_uint("sweep.topology_seed", 17),
                                cfg.get_double("topology.min_separation_m", 500.0));
        } else {
            sweep = traffic_sweep(sc, trained, cfg.get_doubles("sweep.cosines", {1.0, 0.9, 0.8, 0.7, 0.6}), opt,
                                  cfg.get_uint("sweep.perturb_seed", 5));
        }
        write_text_file(dir / "config.resolved.cfg", cfg.resolved_text());
        write_sweep_csv(dir / "sweep.csv", sweep);
        write_sweep_records_csv(dir / "sweep_records.csv", sweep);
        write_text_file(dir / "sweep_summary.txt", sweep_summary(sweep));
        print_sweep(sweep);
        std::cerr << "wrote " << dir.string() << '\n';
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "gmarl: configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "gmarl: " << e.what() << '\n';
        return 1;
    }
}
