#include "oran/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "oran/csv.hpp"
#include "oran/gradcheck.hpp"
#include "oran/oracle.hpp"

namespace oran::experiment {

namespace fs = std::filesystem;

std::string code_version() {
#ifdef ORAN_CODE_VERSION
  return ORAN_CODE_VERSION;
#else
  return "unknown";
#endif
}

EvalResult evaluate_policy(const net::NetworkConfig& config, const nn::Mlp& actor,
                           std::uint64_t seed, int episodes,
                           const std::string& trace_csv_path) {
  env::Environment environment(config, seed, 5000);
  nn::Workspace ws;
  EvalResult result;
  long ttis = 0;
  double embb_rate_sum = 0.0;
  long arrived = 0, dropped = 0;

  std::unique_ptr<csv::Writer> trace;
  if (!trace_csv_path.empty())
    trace = std::make_unique<csv::Writer>(
        trace_csv_path,
        std::vector<std::string>{"tti", "agent", "reward", "ee_bit_per_joule", "sum_rate_bps",
                                 "urllc_outage", "psi", "phi"});

  for (int ep = 0; ep < episodes; ++ep) {
    environment.reset();
    while (!environment.episode_done()) {
      environment.prepare_tti();
      std::vector<env::AllocationAction> actions;
      for (int ru = 0; ru < environment.num_rus(); ++ru) {
        const std::vector<double> state = environment.observe(ru).flatten(config);
        nn::forward(actor, state, ws);
        std::vector<int> choices(actor.heads.size());
        for (std::size_t h = 0; h < actor.heads.size(); ++h)
          choices[h] = nn::argmax(ws.head_out[h]);
        actions.push_back(env::decode_action(choices, config));
      }
      const int tti = environment.tti();
      const std::vector<env::StepOutcome> outcomes = environment.step(actions);
      for (std::size_t du = 0; du < outcomes.size(); ++du) {
        const env::StepOutcome& oc = outcomes[du];
        result.mean_reward += oc.reward;
        result.mean_ee += oc.ee;
        embb_rate_sum += oc.embb_rate_bps / config.rus_per_du;
        arrived += oc.packets_arrived;
        dropped += oc.packets_dropped;
        ttis += 1;
        if (trace)
          trace->row({std::to_string(tti), std::to_string(du), csv::format(oc.reward),
                      csv::format(oc.ee), csv::format(oc.sum_rate_bps),
                      std::to_string(oc.outage_flag ? 1 : 0), csv::format(oc.psi),
                      csv::format(oc.phi)});
      }
    }
  }
  if (ttis > 0) {
    result.mean_reward /= static_cast<double>(ttis);
    result.mean_ee /= static_cast<double>(ttis);
    result.mean_embb_rate_per_ru_bps = embb_rate_sum / static_cast<double>(ttis);
  }
  result.outage_rate =
      arrived > 0 ? static_cast<double>(dropped) / static_cast<double>(arrived) : 0.0;
  return result;
}

void save_master(const transfer::MasterPolicy& master, const std::string& path,
                 const std::string& config_hash) {
  nlohmann::json j{{"format", "green-oran-master-v1"},
                   {"config_hash", config_hash},
                   {"source_task_id", master.source_task_id},
                   {"actor", nn::mlp_to_json(master.actor)},
                   {"critic", nn::mlp_to_json(master.critic)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("master checkpoint: cannot open '" + path + "'");
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("master checkpoint: write to '" + path + "' failed");
}

transfer::MasterPolicy load_master(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("master checkpoint: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("master checkpoint: parse error in '" + path + "': " + e.what());
  }
  transfer::MasterPolicy master;
  try {
    if (j.at("format").get<std::string>() != "green-oran-master-v1")
      throw std::runtime_error("unknown format tag");
    master.source_task_id = j.at("source_task_id").get<std::string>();
    master.actor = nn::mlp_from_json(j.at("actor"));
    master.critic = nn::mlp_from_json(j.at("critic"));
  } catch (const std::exception& e) {
    throw std::runtime_error("master checkpoint: invalid content in '" + path + "': " +
                             e.what());
  }
  return master;
}

namespace {

void write_resolved_config(const config::ExperimentSpec& spec, const fs::path& dir) {
  nlohmann::json j = config::dump_config(spec);
  j["mode"] = spec.mode;
  j["config_hash"] = config::config_hash(spec);
  j["code_version"] = code_version();
  std::ofstream out(dir / "resolved_config.json");
  if (!out) throw std::runtime_error("run: cannot write resolved config");
  out << j.dump(2) << "\n";
}

void write_curve_csv(const std::vector<transfer::CurvePoint>& curve, const std::string& path) {
  csv::Writer w(path, {"update_idx", "mean_episode_reward", "mean_ee"});
  for (const transfer::CurvePoint& p : curve)
    w.row({std::to_string(p.update_idx), csv::format(p.mean_episode_reward),
           csv::format(p.mean_ee)});
}

void write_training_log_csv(const std::vector<transfer::TrainLogRow>& log,
                            const std::string& path) {
  csv::Writer w(path, {"update_idx", "mean_reward", "mean_ee", "policy_loss", "critic_loss",
                       "clip_fraction", "psi_mean", "outage_rate"});
  for (const transfer::TrainLogRow& r : log)
    w.row({std::to_string(r.update_idx), csv::format(r.mean_reward), csv::format(r.mean_ee),
           csv::format(r.policy_loss), csv::format(r.critic_loss), csv::format(r.clip_fraction),
           csv::format(r.psi_mean), csv::format(r.outage_rate)});
}

struct SeedStats {
  double mean = 0.0;
  double stddev = 0.0;
};

SeedStats stats(const std::vector<double>& values) {
  SeedStats s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  for (double v : values) s.stddev += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(s.stddev / static_cast<double>(values.size()));
  return s;
}

int run_training(const config::ExperimentSpec& spec, bool master_mode) {
  const fs::path out_dir(spec.output_dir);
  fs::create_directories(out_dir);
  write_resolved_config(spec, out_dir);
  const std::string hash = config::config_hash(spec);

  const transfer::Mode mode =
      master_mode ? transfer::Mode::random_init : transfer::parse_mode(spec.transfer_mode);
  transfer::MasterPolicy master;
  const transfer::MasterPolicy* master_ptr = nullptr;
  if (!master_mode && mode != transfer::Mode::random_init) {
    if (spec.master_checkpoint.empty())
      throw std::runtime_error("run: transfer mode '" + spec.transfer_mode +
                               "' requires --master-checkpoint");
    master = load_master(spec.master_checkpoint);
    master_ptr = &master;
  }

  const net::NetworkConfig& task = master_mode ? spec.source() : spec.network;
  std::vector<double> final_ee, final_reward;
  for (std::uint64_t seed : spec.seeds) {
    transfer::TrainOptions options;
    options.updates = master_mode ? spec.run.master_updates : spec.run.updates;
    options.num_envs = spec.run.num_envs;
    options.hidden_dims = spec.run.hidden_dims;
    options.seed = seed;

    transfer::TrainResult result =
        transfer::train_policy(task, spec.ppo, spec.transfer, options, mode, master_ptr);

    const fs::path seed_dir = out_dir / ("seed_" + std::to_string(seed));
    fs::create_directories(seed_dir);
    write_training_log_csv(result.log, (seed_dir / "training_log.csv").string());
    write_curve_csv(result.curve, (seed_dir / "learning_curve.csv").string());
    nn::save(nn::Checkpoint{result.actor, result.actor_opt, hash},
             (seed_dir / "actor.json").string());
    nn::save(nn::Checkpoint{result.critic, result.critic_opt, hash},
             (seed_dir / "critic.json").string());
    if (master_mode) {
      transfer::MasterPolicy trained;
      trained.actor = result.actor;
      trained.critic = result.critic;
      trained.source_task_id = "source";
      save_master(trained, (seed_dir / "master.json").string(), hash);
      if (seed == spec.seeds.front())
        save_master(trained, (out_dir / "master.json").string(), hash);
    }

    const EvalResult eval =
        evaluate_policy(task, result.actor, mix64(seed ^ 0x6576616cULL), spec.run.eval_episodes,
                        (seed_dir / "eval_trace.csv").string());
    final_ee.push_back(eval.mean_ee);
    final_reward.push_back(eval.mean_reward);
  }

  const SeedStats ee_stats = stats(final_ee);
  const SeedStats reward_stats = stats(final_reward);
  nlohmann::json summary{{"mode", spec.mode},
                         {"transfer_mode", master_mode ? "random_init" : spec.transfer_mode},
                         {"seeds", spec.seeds},
                         {"final_ee", {{"mean", ee_stats.mean}, {"std", ee_stats.stddev},
                                       {"per_seed", final_ee}}},
                         {"final_reward", {{"mean", reward_stats.mean},
                                           {"std", reward_stats.stddev},
                                           {"per_seed", final_reward}}},
                         {"config_hash", hash},
                         {"code_version", code_version()}};
  std::ofstream out(out_dir / "summary.json");
  out << summary.dump(2) << "\n";
  return 0;
}

int run_eval(const config::ExperimentSpec& spec) {
  if (spec.master_checkpoint.empty())
    throw std::runtime_error("run: eval mode requires --master-checkpoint (the policy to load)");
  const fs::path out_dir(spec.output_dir);
  fs::create_directories(out_dir);
  write_resolved_config(spec, out_dir);

  const transfer::MasterPolicy policy = load_master(spec.master_checkpoint);
  std::vector<double> ees, rewards;
  for (std::uint64_t seed : spec.seeds) {
    const fs::path seed_dir = out_dir / ("seed_" + std::to_string(seed));
    fs::create_directories(seed_dir);
    const EvalResult eval = evaluate_policy(spec.network, policy.actor, seed,
                                            spec.run.eval_episodes,
                                            (seed_dir / "eval_trace.csv").string());
    ees.push_back(eval.mean_ee);
    rewards.push_back(eval.mean_reward);
  }
  const SeedStats ee_stats = stats(ees);
  const SeedStats reward_stats = stats(rewards);
  nlohmann::json summary{{"mode", "eval"},
                         {"final_ee", {{"mean", ee_stats.mean}, {"std", ee_stats.stddev},
                                       {"per_seed", ees}}},
                         {"final_reward", {{"mean", reward_stats.mean},
                                           {"std", reward_stats.stddev},
                                           {"per_seed", rewards}}},
                         {"config_hash", config::config_hash(spec)},
                         {"code_version", code_version()}};
  std::ofstream out(out_dir / "summary.json");
  out << summary.dump(2) << "\n";
  return 0;
}

int run_sweep(const config::ExperimentSpec& spec) {
  const fs::path out_dir(spec.output_dir);
  fs::create_directories(out_dir);
  write_resolved_config(spec, out_dir);

  if (spec.master_checkpoint.empty())
    throw std::runtime_error("run: sweep_arrival requires --master-checkpoint");
  const transfer::MasterPolicy master = load_master(spec.master_checkpoint);

  const std::vector<transfer::Mode> modes{transfer::Mode::on_policy, transfer::Mode::off_policy,
                                          transfer::Mode::random_init};
  nlohmann::json summary;
  for (transfer::Mode mode : modes) {
    csv::Writer w((out_dir / ("sweep_" + transfer::mode_name(mode) + ".csv")).string(),
                  {"rate", "mean_ee", "std_ee"});
    for (double rate : spec.run.sweep_rates) {
      net::NetworkConfig task = spec.network;
      task.urllc_arrival_rate = rate;
      std::vector<double> ees;
      for (std::uint64_t seed : spec.seeds) {
        transfer::TrainOptions options;
        options.updates = spec.run.sweep_updates;
        options.num_envs = spec.run.num_envs;
        options.hidden_dims = spec.run.hidden_dims;
        options.seed = seed;
        transfer::TrainResult result = transfer::train_policy(
            task, spec.ppo, spec.transfer, options, mode,
            mode == transfer::Mode::random_init ? nullptr : &master);
        const EvalResult eval = evaluate_policy(task, result.actor,
                                                mix64(seed ^ 0x6576616cULL),
                                                spec.run.eval_episodes);
        ees.push_back(eval.mean_ee);
      }
      const SeedStats s = stats(ees);
      w.row({csv::format(rate), csv::format(s.mean), csv::format(s.stddev)});
      summary[transfer::mode_name(mode)].push_back(
          {{"rate", rate}, {"mean_ee", s.mean}, {"std_ee", s.stddev}});
    }
  }
  std::ofstream out(out_dir / "summary.json");
  out << summary.dump(2) << "\n";
  return 0;
}

int run_oracle(const config::ExperimentSpec& spec) {
  const fs::path out_dir(spec.output_dir);
  fs::create_directories(out_dir);
  write_resolved_config(spec, out_dir);

  const oracle::TinyInstance instance = oracle::default_tiny_instance();
  const oracle::BruteForceResult best = oracle::brute_force_best(instance, true);

  csv::Writer w((out_dir / "ee_table.csv").string(), {"action_index", "ee_bit_per_joule"});
  for (std::size_t i = 0; i < best.ee_table.size(); ++i)
    w.row({std::to_string(i), csv::format(best.ee_table[i])});

  nlohmann::json action_json = nlohmann::json::array();
  for (const env::AllocationAction& a : best.best_action.per_ru)
    action_json.push_back({{"rb_user", a.rb_user},
                           {"rb_power_level", a.rb_power_level},
                           {"rb_power_w", a.rb_power_w},
                           {"puncture", a.puncture}});
  nlohmann::json j{{"best_index", best.best_index},
                   {"best_ee", best.best_ee},
                   {"action_count", best.ee_table.size()},
                   {"best_action", action_json},
                   {"code_version", code_version()}};
  std::ofstream out(out_dir / "argmax.json");
  out << j.dump(2) << "\n";
  std::cout << "oracle: " << best.ee_table.size() << " actions, best EE " << best.best_ee
            << " bit/J at index " << best.best_index << "\n";
  return 0;
}

int run_gradcheck(const config::ExperimentSpec& spec) {
  const fs::path out_dir(spec.output_dir);
  fs::create_directories(out_dir);
  const gradcheck::Report report = gradcheck::run_all();
  nlohmann::json j = nlohmann::json::array();
  for (const gradcheck::Entry& e : report.entries) {
    std::cout << (e.pass ? "[PASS] " : "[FAIL] ") << e.name << " max_rel_err=" << e.max_rel_err
              << " (" << e.params_checked << " params)\n";
    j.push_back({{"name", e.name},
                 {"max_rel_err", e.max_rel_err},
                 {"params_checked", e.params_checked},
                 {"pass", e.pass}});
  }
  std::ofstream out(out_dir / "gradcheck_report.json");
  out << j.dump(2) << "\n";
  return report.all_pass() ? 0 : 1;
}

}  // namespace

int run(const config::ExperimentSpec& spec) {
  spec.validate();
  if (spec.mode == "train_master") return run_training(spec, true);
  if (spec.mode == "train") return run_training(spec, false);
  if (spec.mode == "eval") return run_eval(spec);
  if (spec.mode == "sweep_arrival") return run_sweep(spec);
  if (spec.mode == "oracle") return run_oracle(spec);
  if (spec.mode == "gradcheck") return run_gradcheck(spec);
  throw std::runtime_error("run: unknown mode '" + spec.mode + "'");
}

}  // namespace oran::experiment
