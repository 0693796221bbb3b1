// Command-line front end: gen, run, train, eval, exact, compare, heatmap, curves.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dpdp/baselines.hpp"
#include "dpdp/env.hpp"
#include "dpdp/harness.hpp"
#include "dpdp/instance.hpp"
#include "dpdp/policy.hpp"
#include "dpdp/st_demand.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path out_dir(const std::string& given, const std::string& sub) {
    return given.empty() ? dpdp::output_root() / sub : fs::path(given);
}

std::string instance_name(const std::string& path) { return fs::path(path).stem().string(); }

// Learned policies are evaluated greedily.
struct LearnedPolicy {
    dpdp::LoadedCheckpoint checkpoint;
    std::mt19937_64 rng;
    std::unique_ptr<dpdp::QPolicy> policy;

    LearnedPolicy(const std::string& path, std::uint64_t seed) : checkpoint(dpdp::load_checkpoint(path)), rng(seed) {
        const std::string name = checkpoint.network.config().use_attention ? "st-ddgn" : "ddqn";
        policy = std::make_unique<dpdp::QPolicy>(checkpoint.network, 0.0, rng, name);
    }
};

std::unique_ptr<dpdp::DispatchPolicy> make_baseline(const std::string& name, std::uint64_t seed) {
    if (name == "greedy1") return std::make_unique<dpdp::GreedyPolicy>(dpdp::GreedyKind::incremental);
    if (name == "greedy2") return std::make_unique<dpdp::GreedyPolicy>(dpdp::GreedyKind::total);
    if (name == "greedy3") return std::make_unique<dpdp::GreedyPolicy>(dpdp::GreedyKind::max_orders);
    if (name == "random") return std::make_unique<dpdp::RandomPolicy>(seed);
    throw CliError("unknown policy '" + name + "' (expected greedy1, greedy2, greedy3, random or model)");
}

void check_report(const dpdp::EpisodeReport& report, const dpdp::Instance& instance) {
    const dpdp::Verdict v = dpdp::validate_routes(report, instance);
    if (v.kind != dpdp::Violation::none) {
        throw CliError("validator: " + dpdp::to_string(v.kind) + " at stop " + std::to_string(v.stop) + " order " +
                       std::to_string(v.order) + ": " + v.detail);
    }
}

dpdp::ResultRow row_of(const std::string& instance, const dpdp::EpisodeReport& r, int repetition) {
    return {instance, r.policy, repetition, r.nuv, r.ttl, r.tc};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic pickup and delivery dispatch: simulator, learned dispatcher, baselines and exact oracle"};
    app.require_subcommand(1);

    // gen
    dpdp::GeneratorOptions gen;
    std::string gen_out;
    auto* cmd_gen = app.add_subcommand("gen", "Generate a synthetic instance");
    cmd_gen->add_option("--seed", gen.seed, "RNG seed");
    cmd_gen->add_option("--factories", gen.n_factories, "Number of factories")->check(CLI::PositiveNumber);
    cmd_gen->add_option("--orders", gen.n_orders, "Number of orders")->check(CLI::NonNegativeNumber);
    cmd_gen->add_option("--vehicles", gen.n_vehicles, "Number of vehicles")->check(CLI::PositiveNumber);
    cmd_gen->add_option("--depots", gen.n_depots, "Number of depots (0: 1 + vehicles/10)");
    cmd_gen->add_option("--horizon", gen.horizon, "Time intervals per day")->check(CLI::PositiveNumber);
    cmd_gen->add_option("--history-days", gen.history_days, "Historical days for demand prediction");
    cmd_gen->add_option("--capacity", gen.capacity, "Vehicle capacity")->check(CLI::PositiveNumber);
    cmd_gen->add_option("--fixed-cost", gen.fixed_cost, "Cost per used vehicle");
    cmd_gen->add_option("--unit-cost", gen.unit_cost, "Cost per km");
    cmd_gen->add_option("--out", gen_out, "Output instance file");

    // run
    std::string run_instance, run_policy = "greedy1", run_checkpoint, run_out;
    std::uint64_t run_seed = 0;
    double run_alpha = 0.01;
    auto* cmd_run = app.add_subcommand("run", "Run one policy on one instance");
    cmd_run->add_option("--instance", run_instance, "Instance file")->required()->check(CLI::ExistingFile);
    cmd_run->add_option("--policy", run_policy, "greedy1 | greedy2 | greedy3 | random | model");
    cmd_run->add_option("--checkpoint", run_checkpoint, "Checkpoint for --policy model");
    cmd_run->add_option("--seed", run_seed, "Seed for the random policy");
    cmd_run->add_option("--alpha", run_alpha, "Reward scale");
    cmd_run->add_option("--out", run_out, "Output directory");

    // train
    std::string train_instance, train_out;
    int train_episodes = 200;
    bool train_no_attention = false, train_no_st = false, train_generate = false;
    dpdp::GeneratorOptions train_gen;
    dpdp::QNetworkConfig net;
    dpdp::TrainerConfig trainer;
    auto* cmd_train = app.add_subcommand("train", "Train the learned dispatcher");
    cmd_train->add_option("--instance", train_instance, "Train on this fixed instance")->check(CLI::ExistingFile);
    cmd_train->add_flag("--generate", train_generate, "Draw a fresh generated instance per episode");
    cmd_train->add_option("--orders", train_gen.n_orders, "Orders per generated instance");
    cmd_train->add_option("--vehicles", train_gen.n_vehicles, "Vehicles per generated instance");
    cmd_train->add_option("--factories", train_gen.n_factories, "Factories per generated instance");
    cmd_train->add_option("--episodes", train_episodes, "Training episodes")->check(CLI::NonNegativeNumber);
    cmd_train->add_option("--seed", trainer.seed, "Trainer seed (network init uses the same seed)");
    cmd_train->add_flag("--no-attention", train_no_attention, "Plain per-vehicle Q network");
    cmd_train->add_flag("--no-st", train_no_st, "Zero the ST score feature");
    cmd_train->add_option("--hidden", net.hidden, "Hidden width");
    cmd_train->add_option("--heads", net.heads, "Attention heads");
    cmd_train->add_option("--head-dim", net.head_dim, "Width per attention head");
    cmd_train->add_option("--neighbors", net.neighbors, "Neighbour count upper bound");
    cmd_train->add_option("--gamma", trainer.gamma, "Discount");
    cmd_train->add_option("--lr", trainer.learning_rate, "Adam learning rate");
    cmd_train->add_option("--batch", trainer.batch_size, "Mini-batch size");
    cmd_train->add_option("--buffer", trainer.buffer_capacity, "Replay capacity");
    cmd_train->add_option("--target-period", trainer.target_period, "Episodes between target syncs");
    cmd_train->add_option("--steps", trainer.steps_per_episode, "Gradient steps per episode");
    cmd_train->add_option("--epsilon-end", trainer.epsilon_end, "Final exploration rate");
    cmd_train->add_option("--alpha", trainer.alpha, "Reward scale");
    cmd_train->add_option("--out", train_out, "Output directory");

    // eval
    std::vector<std::string> eval_checkpoints, eval_instances;
    std::string eval_out;
    auto* cmd_eval = app.add_subcommand("eval", "Evaluate checkpoints greedily on test instances");
    cmd_eval->add_option("--checkpoint", eval_checkpoints, "Checkpoint file (repeatable)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_eval->add_option("--instance", eval_instances, "Instance file (repeatable)")->required()->check(CLI::ExistingFile);
    cmd_eval->add_option("--out", eval_out, "Output directory");

    // exact
    std::string exact_instance, exact_out;
    double exact_budget = 60.0;
    auto* cmd_exact = app.add_subcommand("exact", "Solve the static relaxation exactly");
    cmd_exact->add_option("--instance", exact_instance, "Instance file")->required()->check(CLI::ExistingFile);
    cmd_exact->add_option("--budget", exact_budget, "Wall-time budget in seconds");
    cmd_exact->add_option("--out", exact_out, "Output directory");

    // compare
    std::vector<std::string> cmp_instances, cmp_checkpoints;
    std::vector<std::string> cmp_policies{"greedy1", "greedy2", "greedy3"};
    bool cmp_exact = false;
    double cmp_budget = 60.0;
    std::string cmp_out;
    auto* cmd_cmp = app.add_subcommand("compare", "NUV/TC table per policy");
    cmd_cmp->add_option("--instance", cmp_instances, "Instance file (repeatable)")->required()->check(CLI::ExistingFile);
    cmd_cmp->add_option("--policies", cmp_policies, "Baseline policies")->delimiter(',');
    cmd_cmp->add_option("--checkpoint", cmp_checkpoints, "Learned checkpoints, one per repetition")
        ->check(CLI::ExistingFile);
    cmd_cmp->add_flag("--exact", cmp_exact, "Add the exact oracle row");
    cmd_cmp->add_option("--budget", cmp_budget, "Exact oracle budget per instance");
    cmd_cmp->add_option("--out", cmp_out, "Output directory");

    // heatmap
    std::string hm_instance, hm_out, hm_source = "predicted";
    auto* cmd_hm = app.add_subcommand("heatmap", "Demand matrix as CSV and SVG");
    cmd_hm->add_option("--instance", hm_instance, "Instance file")->required()->check(CLI::ExistingFile);
    cmd_hm->add_option("--source", hm_source, "predicted | actual | day:<k>");
    cmd_hm->add_option("--out", hm_out, "Output directory");

    // curves
    std::vector<std::string> cv_csvs;
    std::string cv_column = "tc", cv_out;
    int cv_window = 10;
    auto* cmd_cv = app.add_subcommand("curves", "Learning curves as SVG");
    cmd_cv->add_option("--csv", cv_csvs, "Learning-curve CSV (repeatable)")->required()->check(CLI::ExistingFile);
    cmd_cv->add_option("--column", cv_column, "Column to plot");
    cmd_cv->add_option("--window", cv_window, "Moving-average window")->check(CLI::PositiveNumber);
    cmd_cv->add_option("--out", cv_out, "Output SVG file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_gen) {
            const dpdp::Instance inst = dpdp::generate_instance(gen);
            const fs::path path = gen_out.empty() ? dpdp::output_root() / "instance.json" : fs::path(gen_out);
            if (path.has_parent_path()) fs::create_directories(path.parent_path());
            dpdp::save_instance(inst, path);
            std::cout << path.string() << "\n";
        } else if (*cmd_run) {
            const dpdp::Instance inst = dpdp::load_instance(run_instance);
            const fs::path dir = out_dir(run_out, "run");
            dpdp::write_config_snapshot(dir, {{"command", "run"},
                                              {"instance", run_instance},
                                              {"policy", run_policy},
                                              {"checkpoint", run_checkpoint},
                                              {"seed", run_seed},
                                              {"alpha", run_alpha}});
            std::unique_ptr<LearnedPolicy> learned;
            std::unique_ptr<dpdp::DispatchPolicy> baseline;
            dpdp::DispatchPolicy* policy = nullptr;
            if (run_policy == "model") {
                if (run_checkpoint.empty()) throw CliError("--policy model needs --checkpoint");
                learned = std::make_unique<LearnedPolicy>(run_checkpoint, run_seed);
                policy = learned->policy.get();
            } else {
                baseline = make_baseline(run_policy, run_seed);
                policy = baseline.get();
            }
            const auto result = dpdp::run_episode(inst, *policy, dpdp::EpisodeOptions{run_alpha, false});
            check_report(result.report, inst);
            dpdp::write_text(dir / "report.json", dpdp::report_to_json(result.report));
            dpdp::write_text(dir / "trace.txt", dpdp::trace_lines(result.report));
            dpdp::append_metrics_row(dir / "metrics.csv", 0, result.report);
            std::printf("%s NUV=%d TTL=%.2f TC=%.2f\n", result.report.policy.c_str(), result.report.nuv,
                        result.report.ttl, result.report.tc);
        } else if (*cmd_train) {
            if (train_instance.empty() == !train_generate) throw CliError("train needs exactly one of --instance or --generate");
            net.use_attention = !train_no_attention;
            net.use_st_score = !train_no_st;
            net.seed = trainer.seed;
            std::vector<dpdp::Instance> fixed;
            if (!train_instance.empty()) {
                fixed.push_back(dpdp::load_instance(train_instance));
                net.horizon = fixed.front().horizon;
            } else {
                net.horizon = train_gen.horizon;
            }
            const fs::path dir = out_dir(train_out, "train");
            json cfg{{"command", "train"},
                     {"instance", train_instance},
                     {"generate", train_generate},
                     {"episodes", train_episodes},
                     {"network",
                      {{"hidden", net.hidden},
                       {"heads", net.heads},
                       {"head_dim", net.head_dim},
                       {"neighbors", net.neighbors},
                       {"use_attention", net.use_attention},
                       {"use_st_score", net.use_st_score},
                       {"seed", net.seed}}},
                     {"trainer",
                      {{"gamma", trainer.gamma},
                       {"learning_rate", trainer.learning_rate},
                       {"batch_size", trainer.batch_size},
                       {"buffer_capacity", trainer.buffer_capacity},
                       {"target_period", trainer.target_period},
                       {"steps_per_episode", trainer.steps_per_episode},
                       {"epsilon_start", trainer.epsilon_start},
                       {"epsilon_end", trainer.epsilon_end},
                       {"epsilon_decay_fraction", trainer.epsilon_decay_fraction},
                       {"alpha", trainer.alpha},
                       {"seed", trainer.seed}}}};
            if (train_generate) {
                cfg["generator"] = {{"orders", train_gen.n_orders},
                                    {"vehicles", train_gen.n_vehicles},
                                    {"factories", train_gen.n_factories}};
            }
            dpdp::write_config_snapshot(dir, cfg);

            dpdp::Trainer tr(net, trainer);
            dpdp::Instance current;
            const dpdp::EpisodeSource source = [&](int ep) -> const dpdp::Instance& {
                if (!fixed.empty()) return fixed.front();
                dpdp::GeneratorOptions g = train_gen;
                g.seed = trainer.seed * 1000003ULL + static_cast<std::uint64_t>(ep);
                current = dpdp::generate_instance(g);
                return current;
            };
            const auto log = tr.train(source, train_episodes);
            tr.save_checkpoint(dir / "checkpoint.bin");
            dpdp::write_text(dir / "learning_curve.csv", dpdp::learning_curve_csv(log));
            std::printf("trained %d episodes, checkpoint %s sha256 %s\n", train_episodes,
                        (dir / "checkpoint.bin").string().c_str(), dpdp::checkpoint_hash(tr.online()).c_str());
        } else if (*cmd_eval) {
            const fs::path dir = out_dir(eval_out, "eval");
            dpdp::write_config_snapshot(dir, {{"command", "eval"},
                                              {"checkpoints", eval_checkpoints},
                                              {"instances", eval_instances}});
            std::vector<dpdp::ResultRow> rows;
            for (const auto& ipath : eval_instances) {
                const dpdp::Instance inst = dpdp::load_instance(ipath);
                for (std::size_t c = 0; c < eval_checkpoints.size(); ++c) {
                    LearnedPolicy learned(eval_checkpoints[c], 0);
                    const auto result = dpdp::run_episode(inst, *learned.policy);
                    check_report(result.report, inst);
                    rows.push_back(row_of(instance_name(ipath), result.report, static_cast<int>(c)));
                }
            }
            dpdp::write_text(dir / "results.csv", dpdp::results_csv(rows));
            dpdp::write_text(dir / "summary.csv", dpdp::compare_csv(rows));
            std::cout << dpdp::compare_csv(rows);
        } else if (*cmd_exact) {
            const dpdp::Instance inst = dpdp::load_instance(exact_instance);
            const fs::path dir = out_dir(exact_out, "exact");
            dpdp::write_config_snapshot(dir, {{"command", "exact"}, {"instance", exact_instance}, {"budget", exact_budget}});
            const auto res = dpdp::solve_exact(inst, exact_budget);
            json assignment = json::object();
            for (const auto& [o, k] : res.assignment) assignment[std::to_string(o)] = k;
            dpdp::write_text(dir / "exact.json", json{{"tc", res.tc},
                                                      {"nuv", res.nuv},
                                                      {"ttl", res.ttl},
                                                      {"proven_optimal", res.proven_optimal},
                                                      {"seconds", res.seconds},
                                                      {"nodes", res.nodes},
                                                      {"assignment", assignment}}
                                                         .dump(1) +
                                                     "\n");
            dpdp::write_text(dir / "plan.txt", dpdp::dump_plan(res));
            std::printf("exact NUV=%d TTL=%.2f TC=%.2f %s (%.2fs)\n", res.nuv, res.ttl, res.tc,
                        res.proven_optimal ? "optimal" : "budget exhausted, not proven optimal", res.seconds);
        } else if (*cmd_cmp) {
            const fs::path dir = out_dir(cmp_out, "compare");
            dpdp::write_config_snapshot(dir, {{"command", "compare"},
                                              {"instances", cmp_instances},
                                              {"policies", cmp_policies},
                                              {"checkpoints", cmp_checkpoints},
                                              {"exact", cmp_exact},
                                              {"budget", cmp_budget}});
            std::vector<dpdp::ResultRow> rows;
            for (const auto& ipath : cmp_instances) {
                const dpdp::Instance inst = dpdp::load_instance(ipath);
                const std::string name = instance_name(ipath);
                for (const auto& p : cmp_policies) {
                    auto policy = make_baseline(p, 0);
                    const auto result = dpdp::run_episode(inst, *policy);
                    check_report(result.report, inst);
                    rows.push_back(row_of(name, result.report, 0));
                }
                for (std::size_t c = 0; c < cmp_checkpoints.size(); ++c) {
                    LearnedPolicy learned(cmp_checkpoints[c], 0);
                    const auto result = dpdp::run_episode(inst, *learned.policy);
                    check_report(result.report, inst);
                    rows.push_back(row_of(name, result.report, static_cast<int>(c)));
                }
                if (cmp_exact) {
                    const auto res = dpdp::solve_exact(inst, cmp_budget);
                    rows.push_back({name, res.proven_optimal ? "exact" : "exact-incumbent", 0, res.nuv, res.ttl, res.tc});
                }
            }
            dpdp::write_text(dir / "results.csv", dpdp::results_csv(rows));
            dpdp::write_text(dir / "compare.csv", dpdp::compare_csv(rows));
            std::cout << dpdp::compare_csv(rows);
        } else if (*cmd_hm) {
            const dpdp::Instance inst = dpdp::load_instance(hm_instance);
            const fs::path dir = out_dir(hm_out, "heatmap");
            dpdp::write_config_snapshot(dir, {{"command", "heatmap"}, {"instance", hm_instance}, {"source", hm_source}});
            dpdp::StdMatrix m;
            if (hm_source == "predicted") {
                m = dpdp::predicted_demand(inst);
            } else if (hm_source == "actual") {
                m = dpdp::build_std_matrix(inst.orders, inst.network, inst.horizon);
            } else if (hm_source.rfind("day:", 0) == 0) {
                const int day = std::stoi(hm_source.substr(4));
                if (day < 0 || day >= static_cast<int>(inst.history.size())) {
                    throw CliError("history day " + std::to_string(day) + " out of range (instance has " +
                                   std::to_string(inst.history.size()) + ")");
                }
                m = dpdp::build_std_matrix(inst.history[day], inst.network, inst.horizon);
            } else {
                throw CliError("unknown --source '" + hm_source + "' (predicted, actual or day:<k>)");
            }
            dpdp::write_text(dir / "std.csv", dpdp::to_csv(m));
            dpdp::write_text(dir / "std.svg", dpdp::heatmap_svg(m, "Demand by factory and time interval (" + hm_source + ")"));
            std::printf("total demand %.2f\n", m.total());
        } else if (*cmd_cv) {
            std::vector<dpdp::Series> series;
            for (const auto& csv : cv_csvs) {
                dpdp::Series s = dpdp::read_curve(csv, cv_column);
                s.y = dpdp::moving_average(s.y, cv_window);
                if (cv_csvs.size() > 1 && s.name == "learning_curve") s.name = fs::path(csv).parent_path().filename().string();
                series.push_back(std::move(s));
            }
            const fs::path path = cv_out.empty() ? dpdp::output_root() / "curves.svg" : fs::path(cv_out);
            dpdp::write_text(path, dpdp::curves_svg(series, "Learning curve", "episode", cv_column));
            std::cout << path.string() << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
