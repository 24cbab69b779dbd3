#include "gmarl/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "gmarl/error.hpp"
#include "gmarl/log.hpp"
#include "gmarl/stats.hpp"

namespace gmarl {

StudyOptions study_options_from_config(const Config& c) {
    StudyOptions o;
    if (c.has("study.strategies")) {
        o.strategies.clear();
        for (const auto& name : c.get_strings("study.strategies", {})) o.strategies.push_back(strategy_from_string(name));
        if (o.strategies.empty()) throw ConfigError("study.strategies is empty");
    }
    if (c.has("study.seeds")) {
        o.seeds.clear();
        for (double v : c.get_doubles("study.seeds", {})) {
            if (v < 0.0 || v != std::floor(v)) throw ConfigError("study.seeds must hold non-negative integers");
            o.seeds.push_back(static_cast<std::uint64_t>(v));
        }
    } else {
        const auto count = c.get_int("study.seed_count", 1);
        const auto base = c.get_uint("study.seed_base", 1);
        if (count < 1) throw ConfigError("study.seed_count must be at least 1");
        o.seeds.clear();
        for (std::int64_t i = 0; i < count; ++i) o.seeds.push_back(base + static_cast<std::uint64_t>(i));
    }
    o.train = train_config_from_config(c);
    o.eval_episodes = static_cast<std::size_t>(c.get_int("study.eval_episodes", static_cast<std::int64_t>(o.eval_episodes)));
    o.eval_seed = c.get_uint("study.eval_seed", o.eval_seed);
    o.workers = static_cast<std::size_t>(c.get_int("study.workers", 1));
    if (o.workers < 1) o.workers = 1;
    o.config = c;
    return o;
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, count); ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = count;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

const StrategyRuns& CompareResult::at(Strategy s) const {
    for (const auto& r : strategies)
        if (r.strategy == s) return r;
    throw ConfigError("strategy '" + to_string(s) + "' was not trained");
}

bool CompareResult::contains(Strategy s) const {
    for (const auto& r : strategies)
        if (r.strategy == s) return true;
    return false;
}

CompareResult train_compare(const Scenario& scenario, const StudyOptions& options) {
    CompareResult out;
    for (Strategy s : options.strategies) {
        StrategyRuns r;
        r.strategy = s;
        r.spec = policy_spec_from_config(options.config, s, scenario);
        r.runs.resize(options.seeds.size());
        out.strategies.push_back(std::move(r));
    }
    const std::size_t n_seeds = options.seeds.size();
    const std::string digest = options.config.digest();
    parallel_for(out.strategies.size() * n_seeds, options.workers, [&](std::size_t task) {
        auto& sr = out.strategies[task / n_seeds];
        const std::uint64_t seed = options.seeds[task % n_seeds];
        log_message(LogLevel::info, "training " + run_id(sr.strategy, seed));
        sr.runs[task % n_seeds] = train(scenario, sr.spec, options.train, seed, digest);
    });
    return out;
}

std::vector<double> final_rewards(const StrategyRuns& runs) {
    std::vector<double> out;
    for (const auto& r : runs.runs) out.push_back(r.epochs.empty() ? 0.0 : r.epochs.back().mean_reward);
    return out;
}

Scenario resize_scenario(const Scenario& base, std::size_t cells, std::uint64_t topology_seed,
                         double min_separation_m) {
    if (cells == base.agents()) return base;
    if (cells == 0) throw ConfigError("cannot resize a scenario to zero cells");
    Scenario s = base;
    const double f = std::sqrt(double(cells) / double(base.agents()));
    const Bounds& b = base.topology.bounds;
    const Bounds nb{b.x_min, b.y_min, b.x_min + b.width() * f, b.y_min + b.height() * f};
    s.topology = generate_topology(cells, nb, min_separation_m, topology_seed);
    const std::size_t cats = base.categories.size();
    std::vector<double> per_cat(cats, 0.0);
    for (std::size_t i = 0; i < base.agents(); ++i)
        for (std::size_t k = 0; k < cats; ++k) per_cat[k] += base.lambda.at(i, k) / double(base.agents());
    s.lambda = TrafficIntensity{cells, cats, std::vector<double>(cells * cats, 0.0)};
    for (std::size_t i = 0; i < cells; ++i)
        for (std::size_t k = 0; k < cats; ++k) s.lambda.at(i, k) = per_cat[k];
    s.validate();
    return s;
}

Scenario with_traffic(const Scenario& base, std::vector<double> rates) {
    if (rates.size() != base.lambda.rates.size()) throw DimensionError("traffic vector does not match cells x categories");
    Scenario s = base;
    s.lambda.rates = std::move(rates);
    s.validate();
    return s;
}

const SweepRow* SweepResult::find(double point, Strategy s) const {
    for (const auto& r : rows)
        if (r.point == point && r.strategy == s) return &r;
    return nullptr;
}

namespace {

struct PointTask {
    double point = 0.0;
    bool is_base = false;
    Scenario scenario;
};

std::uint64_t eval_seed_for(const StudyOptions& o, std::uint64_t seed) { return derive_seed(o.eval_seed, seed); }

SweepResult run_sweep(std::string axis, const std::vector<PointTask>& points, const CompareResult& trained,
                      const StudyOptions& options) {
    if (!trained.contains(Strategy::learned)) throw ConfigError("sweeps normalise by learned edges, which was not trained");
    const auto& base_learned = trained.at(Strategy::learned);
    const std::size_t n_seeds = base_learned.runs.size();
    const std::size_t n_strat = trained.strategies.size();

    // records[(point * seeds + seed) * strategies + strategy]
    std::vector<SweepRecord> records(points.size() * n_seeds * n_strat);
    std::vector<std::uint8_t> applicable(points.size() * n_strat, 1);
    for (std::size_t p = 0; p < points.size(); ++p)
        for (std::size_t k = 0; k < n_strat; ++k)
            applicable[p * n_strat + k] = trained.strategies[k].spec.input_dim == points[p].scenario.feature_dim();

    parallel_for(points.size() * n_seeds, options.workers, [&](std::size_t task) {
        const std::size_t p = task / n_seeds;
        const std::size_t si = task % n_seeds;
        const PointTask& pt = points[p];
        const std::uint64_t seed = base_learned.runs[si].seed;
        const std::uint64_t es = eval_seed_for(options, seed);

        Checkpoint reference_ckpt;
        if (pt.is_base) {
            reference_ckpt = base_learned.runs[si].final_checkpoint;
        } else {
            log_message(LogLevel::info, axis + "=" + format_double(pt.point) + ": reference " + run_id(Strategy::learned, seed));
            const PolicySpec spec = policy_spec_from_config(options.config, Strategy::learned, pt.scenario);
            reference_ckpt = train(pt.scenario, spec, options.train, seed, options.config.digest()).final_checkpoint;
        }
        const double reference = evaluate(reference_ckpt, pt.scenario, options.eval_episodes, es).mean_normalized;
        for (std::size_t k = 0; k < n_strat; ++k) {
            SweepRecord& rec = records[task * n_strat + k];
            rec.point = pt.point;
            rec.strategy = trained.strategies[k].strategy;
            rec.seed = seed;
            rec.reference = reference;
            if (!applicable[p * n_strat + k]) {
                rec.score = rec.ratio = std::nan("");
                continue;
            }
            rec.score = evaluate(trained.strategies[k].runs[si].final_checkpoint, pt.scenario, options.eval_episodes, es)
                            .mean_normalized;
            rec.ratio = reference > 0.0 ? rec.score / reference : std::nan("");
        }
    });

    SweepResult out;
    out.axis = std::move(axis);
    out.records = std::move(records);
    for (std::size_t p = 0; p < points.size(); ++p) {
        for (std::size_t k = 0; k < n_strat; ++k) {
            SweepRow row;
            row.point = points[p].point;
            row.strategy = trained.strategies[k].strategy;
            row.applicable = applicable[p * n_strat + k];
            if (row.applicable) {
                std::vector<double> ratios;
                for (std::size_t si = 0; si < n_seeds; ++si) {
                    const double r = out.records[(p * n_seeds + si) * n_strat + k].ratio;
                    if (std::isfinite(r)) ratios.push_back(r);
                }
                row.mean_ratio = mean(ratios);
                row.ci99 = ci99_half_width(ratios);
                row.n = ratios.size();
            }
            out.rows.push_back(row);
        }
    }
    return out;
}

} // namespace

SweepResult scale_sweep(const Scenario& base, const CompareResult& trained, const std::vector<std::size_t>& sizes,
                        const StudyOptions& options, std::uint64_t topology_seed, double min_separation_m) {
    if (sizes.empty()) throw ConfigError("scale sweep needs at least one size");
    std::vector<PointTask> points;
    SweepResult shell;
    for (std::size_t m : sizes) {
        PointTask pt;
        pt.point = double(m);
        pt.is_base = m == base.agents();
        pt.scenario = resize_scenario(base, m, derive_seed(topology_seed, m), min_separation_m);
        points.push_back(std::move(pt));
        shell.points.push_back({double(m), true, double(m)});
    }
    SweepResult out = run_sweep("cells", points, trained, options);
    out.points = std::move(shell.points);
    return out;
}

SweepResult traffic_sweep(const Scenario& base, const CompareResult& trained, const std::vector<double>& cosines,
                          const StudyOptions& options, std::uint64_t perturb_seed) {
    if (cosines.empty()) throw ConfigError("traffic sweep needs at least one similarity value");
    std::vector<PointTask> points;
    std::vector<SweepPoint> meta;
    for (std::size_t i = 0; i < cosines.size(); ++i) {
        const double c = cosines[i];
        const Perturbation pert = perturb_to_cosine(base.lambda.rates, c, derive_seed(perturb_seed, i));
        meta.push_back({c, pert.feasible, pert.cosine});
        if (!pert.feasible) {
            log_message(LogLevel::warning, "cosine similarity " + format_double(c) + " is unattainable; point skipped");
            continue;
        }
        PointTask pt;
        pt.point = c;
        pt.is_base = pert.values == base.lambda.rates;
        pt.scenario = with_traffic(base, pert.values);
        points.push_back(std::move(pt));
    }
    SweepResult out = run_sweep("cosine", points, trained, options);
    out.points = std::move(meta);
    return out;
}

std::string run_id(Strategy s, std::uint64_t seed) { return to_string(s) + "-s" + std::to_string(seed); }

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    return f;
}

void close_checked(std::ofstream& f, const std::filesystem::path& path) {
    f.close();
    if (!f) throw IoError("failed writing " + path.string());
}

} // namespace

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    auto f = open_out(path);
    f << text;
    close_checked(f, path);
}

void write_metrics_csv(const std::filesystem::path& path, const CompareResult& result) {
    auto f = open_out(path);
    f << "run_id,seed,epoch,mean_reward,std_reward,eval_reward,grad_norm,wallclock_s\n";
    for (const auto& sr : result.strategies)
        for (const auto& run : sr.runs)
            for (const auto& m : run.epochs)
                f << run_id(sr.strategy, run.seed) << ',' << run.seed << ',' << m.epoch << ',' << format_double(m.mean_reward)
                  << ',' << format_double(m.std_reward) << ',' << format_double(m.eval_reward) << ','
                  << format_double(m.grad_norm) << ',' << format_double(m.wallclock_s) << '\n';
    close_checked(f, path);
}

void write_episodes_csv(const std::filesystem::path& path, const CompareResult& result) {
    auto f = open_out(path);
    f << "run_id,seed,epoch,episode,traffic_seed,users,actions,reward_bps,normalized_return,log_prob\n";
    for (const auto& sr : result.strategies)
        for (const auto& run : sr.runs)
            for (const auto& e : run.episodes) {
                f << run_id(sr.strategy, run.seed) << ',' << e.seed << ',' << e.epoch << ',' << e.episode << ','
                  << e.traffic_seed << ',' << e.users << ',';
                for (std::size_t i = 0; i < e.actions.size(); ++i) f << (i ? " " : "") << e.actions[i];
                f << ',' << format_double(e.reward_bps) << ',' << format_double(e.normalized_return) << ','
                  << format_double(e.log_prob) << '\n';
            }
    close_checked(f, path);
}

void write_curves_csv(const std::filesystem::path& path, const CompareResult& result) {
    auto f = open_out(path);
    f << "strategy,epoch,mean_reward,ci99,eval_reward,eval_ci99,n\n";
    for (const auto& sr : result.strategies) {
        if (sr.runs.empty()) continue;
        const std::size_t epochs = sr.runs.front().epochs.size();
        for (std::size_t e = 0; e < epochs; ++e) {
            std::vector<double> batch, eval;
            for (const auto& run : sr.runs) {
                batch.push_back(run.epochs[e].mean_reward);
                eval.push_back(run.epochs[e].eval_reward);
            }
            f << to_string(sr.strategy) << ',' << e + 1 << ',' << format_double(mean(batch)) << ','
              << format_double(ci99_half_width(batch)) << ',' << format_double(mean(eval)) << ','
              << format_double(ci99_half_width(eval)) << ',' << batch.size() << '\n';
        }
    }
    close_checked(f, path);
}

std::string compare_summary(const CompareResult& result) {
    std::ostringstream s;
    s << "[final_epoch]\n";
    for (const auto& sr : result.strategies) {
        const auto r = final_rewards(sr);
        s << to_string(sr.strategy) << ".mean = " << format_double(mean(r)) << '\n';
        s << to_string(sr.strategy) << ".ci99 = " << format_double(ci99_half_width(r)) << '\n';
        s << to_string(sr.strategy) << ".n = " << r.size() << '\n';
    }
    s << "\n[paired_one_sided]\n";
    for (const auto& a : result.strategies)
        for (const auto& b : result.strategies) {
            if (&a == &b) continue;
            const auto t = paired_t_greater(final_rewards(a), final_rewards(b));
            s << to_string(a.strategy) << "_gt_" << to_string(b.strategy) << ".p = " << format_double(t.p_value) << '\n';
        }
    return s.str();
}

void write_checkpoints(const std::filesystem::path& dir, const CompareResult& result) {
    for (const auto& sr : result.strategies)
        for (const auto& run : sr.runs) {
            save_checkpoint(dir / (run_id(sr.strategy, run.seed) + ".json"), run.final_checkpoint);
            for (const auto& [epoch, ck] : run.snapshots)
                save_checkpoint(dir / (run_id(sr.strategy, run.seed) + "-e" + std::to_string(epoch) + ".json"), ck);
        }
}

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& result) {
    auto f = open_out(path);
    f << result.axis << ",strategy,applicable,mean_ratio,ci99,n\n";
    for (const auto& r : result.rows)
        f << format_double(r.point) << ',' << to_string(r.strategy) << ',' << (r.applicable ? 1 : 0) << ','
          << format_double(r.mean_ratio) << ',' << format_double(r.ci99) << ',' << r.n << '\n';
    close_checked(f, path);
}

void write_sweep_records_csv(const std::filesystem::path& path, const SweepResult& result) {
    auto f = open_out(path);
    f << result.axis << ",strategy,seed,score,reference,ratio\n";
    for (const auto& r : result.records)
        f << format_double(r.point) << ',' << to_string(r.strategy) << ',' << r.seed << ',' << format_double(r.score)
          << ',' << format_double(r.reference) << ',' << format_double(r.ratio) << '\n';
    close_checked(f, path);
}

std::string sweep_summary(const SweepResult& result) {
    std::ostringstream s;
    s << "axis = " << result.axis << "\n\n[points]\n";
    for (const auto& p : result.points)
        s << format_double(p.point) << ".feasible = " << (p.feasible ? "true" : "false") << '\n'
          << format_double(p.point) << ".achieved = " << format_double(p.achieved) << '\n';
    s << "\n[ratios]\n";
    for (const auto& r : result.rows) {
        const std::string key = format_double(r.point) + "." + to_string(r.strategy);
        if (!r.applicable) {
            s << key << " = not_applicable\n";
            continue;
        }
        s << key << ".mean = " << format_double(r.mean_ratio) << '\n'
          << key << ".ci99 = " << format_double(r.ci99) << '\n'
          << key << ".n = " << r.n << '\n';
    }
    return s.str();
}

} // namespace gmarl
