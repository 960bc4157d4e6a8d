#include "oran/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace oran::config {

namespace {

// Tracks consumed keys so anything left over is reported as unknown.
class StrictObject {
 public:
  StrictObject(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object())
      throw std::runtime_error("config: '" + path_ + "' must be a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    try {
      it->get_to(out);
    } catch (const nlohmann::json::exception&) {
      throw std::runtime_error("config: key '" + path_ + key + "' has the wrong type");
    }
  }

  bool has(const char* key) const { return j_.find(key) != j_.end(); }

  const nlohmann::json& child(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw std::runtime_error("config: unknown key '" + path_ + it.key() + "'");
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void parse_phy(const nlohmann::json& j, phy::PhyConstants& out, const std::string& path) {
  StrictObject o(j, path);
  o.get("rb_bandwidth_hz", out.rb_bandwidth_hz);
  o.get("minislots_per_tti", out.minislots_per_tti);
  o.get("noise_power_w", out.noise_power_w);
  o.get("symbols_per_minislot", out.symbols_per_minislot);
  o.get("subcarriers_per_rb", out.subcarriers_per_rb);
  o.get("urllc_error_target", out.urllc_error_target);
  o.get("tti_duration_s", out.tti_duration_s);
  o.finish();
}

void parse_power(const nlohmann::json& j, energy::PowerConfig& out, const std::string& path) {
  StrictObject o(j, path);
  o.get("p_max_w", out.p_max_w);
  o.get("ru_circuit_power_w", out.ru_circuit_power_w);
  o.get("du_power_w", out.du_power_w);
  o.finish();
}

void parse_network(const nlohmann::json& j, net::NetworkConfig& out, const std::string& path) {
  StrictObject o(j, path);
  o.get("num_dus", out.num_dus);
  o.get("rus_per_du", out.rus_per_du);
  o.get("embb_users_per_ru", out.embb_users_per_ru);
  o.get("urllc_users_per_ru", out.urllc_users_per_ru);
  o.get("num_rbs", out.num_rbs);
  o.get("system_bandwidth_hz", out.system_bandwidth_hz);
  o.get("cell_radius_m", out.cell_radius_m);
  o.get("min_link_distance_m", out.min_link_distance_m);
  o.get("pathloss_fixed_db", out.pathloss_fixed_db);
  o.get("pathloss_slope_db", out.pathloss_slope_db);
  o.get("shadowing_sigma_db", out.shadowing_sigma_db);
  if (o.has("phy")) parse_phy(o.child("phy"), out.phy, path + "phy.");
  if (o.has("power")) parse_power(o.child("power"), out.power, path + "power.");
  o.get("urllc_arrival_rate", out.urllc_arrival_rate);
  o.get("urllc_packet_bytes", out.urllc_packet_bytes);
  o.get("harq_rtt_ttis", out.harq_rtt_ttis);
  o.get("harq_max_retx", out.harq_max_retx);
  o.get("urllc_outage_target", out.urllc_outage_target);
  o.get("embb_min_rate_bps", out.embb_min_rate_bps);
  o.get("rng_seed", out.rng_seed);
  o.get("num_power_levels", out.num_power_levels);
  o.get("ee_scale", out.ee_scale);
  o.get("kappa_e", out.kappa_e);
  o.get("outage_window_ttis", out.outage_window_ttis);
  o.get("episode_ttis", out.episode_ttis);
  o.get("pinned_channel", out.pinned_channel);
  std::string reward_term;
  o.get("embb_reward_term", reward_term);
  if (!reward_term.empty()) {
    if (reward_term == "shortfall_penalty")
      out.embb_reward_term = net::EmbbRewardTerm::shortfall_penalty;
    else if (reward_term == "verbatim")
      out.embb_reward_term = net::EmbbRewardTerm::verbatim;
    else
      throw std::runtime_error("config: key '" + path +
                               "embb_reward_term' must be shortfall_penalty or verbatim");
  }
  o.finish();
}

void parse_ppo(const nlohmann::json& j, ppo::PpoConfig& out, const std::string& path) {
  StrictObject o(j, path);
  o.get("clip_epsilon", out.clip_epsilon);
  o.get("discount", out.discount);
  o.get("gae_lambda", out.gae_lambda);
  o.get("epochs_per_batch", out.epochs_per_batch);
  o.get("minibatch_size", out.minibatch_size);
  o.get("actor_lr", out.actor_lr);
  o.get("critic_lr", out.critic_lr);
  o.get("rollout_ttis", out.rollout_ttis);
  o.get("grad_clip_norm", out.grad_clip_norm);
  o.finish();
}

void parse_transfer(const nlohmann::json& j, transfer::TransferConfig& out,
                    const std::string& path) {
  StrictObject o(j, path);
  o.get("eta_initial", out.eta_initial);
  o.get("eta_decay", out.eta_decay);
  o.get("advantage_threshold", out.advantage_threshold);
  o.get("offpolicy_min_samples", out.offpolicy_min_samples);
  o.get("replay_capacity", out.replay_capacity);
  o.finish();
}

void parse_run(const nlohmann::json& j, RunConfig& out, const std::string& path) {
  StrictObject o(j, path);
  o.get("updates", out.updates);
  o.get("master_updates", out.master_updates);
  o.get("num_envs", out.num_envs);
  o.get("eval_episodes", out.eval_episodes);
  o.get("hidden_dims", out.hidden_dims);
  o.get("sweep_rates", out.sweep_rates);
  o.get("sweep_updates", out.sweep_updates);
  o.finish();
}

nlohmann::json phy_to_json(const phy::PhyConstants& p) {
  return {{"rb_bandwidth_hz", p.rb_bandwidth_hz},
          {"minislots_per_tti", p.minislots_per_tti},
          {"noise_power_w", p.noise_power_w},
          {"symbols_per_minislot", p.symbols_per_minislot},
          {"subcarriers_per_rb", p.subcarriers_per_rb},
          {"urllc_error_target", p.urllc_error_target},
          {"tti_duration_s", p.tti_duration_s}};
}

nlohmann::json network_to_json(const net::NetworkConfig& n) {
  return {{"num_dus", n.num_dus},
          {"rus_per_du", n.rus_per_du},
          {"embb_users_per_ru", n.embb_users_per_ru},
          {"urllc_users_per_ru", n.urllc_users_per_ru},
          {"num_rbs", n.num_rbs},
          {"system_bandwidth_hz", n.system_bandwidth_hz},
          {"cell_radius_m", n.cell_radius_m},
          {"min_link_distance_m", n.min_link_distance_m},
          {"pathloss_fixed_db", n.pathloss_fixed_db},
          {"pathloss_slope_db", n.pathloss_slope_db},
          {"shadowing_sigma_db", n.shadowing_sigma_db},
          {"phy", phy_to_json(n.phy)},
          {"power",
           {{"p_max_w", n.power.p_max_w},
            {"ru_circuit_power_w", n.power.ru_circuit_power_w},
            {"du_power_w", n.power.du_power_w}}},
          {"urllc_arrival_rate", n.urllc_arrival_rate},
          {"urllc_packet_bytes", n.urllc_packet_bytes},
          {"harq_rtt_ttis", n.harq_rtt_ttis},
          {"harq_max_retx", n.harq_max_retx},
          {"urllc_outage_target", n.urllc_outage_target},
          {"embb_min_rate_bps", n.embb_min_rate_bps},
          {"rng_seed", n.rng_seed},
          {"num_power_levels", n.num_power_levels},
          {"ee_scale", n.ee_scale},
          {"kappa_e", n.kappa_e},
          {"outage_window_ttis", n.outage_window_ttis},
          {"episode_ttis", n.episode_ttis},
          {"pinned_channel", n.pinned_channel},
          {"embb_reward_term",
           n.embb_reward_term == net::EmbbRewardTerm::shortfall_penalty ? "shortfall_penalty"
                                                                        : "verbatim"}};
}

}  // namespace

void ExperimentSpec::validate() const {
  network.validate();
  if (has_source_network) source_network.validate();
  ppo.validate();
  transfer.validate();
  if (seeds.empty()) throw std::domain_error("config: seeds must be non-empty");
  if (run.updates < 1 || run.master_updates < 1 || run.sweep_updates < 1)
    throw std::domain_error("config: update counts must be >= 1");
  if (run.num_envs < 1) throw std::domain_error("config: num_envs must be >= 1");
  if (run.eval_episodes < 1) throw std::domain_error("config: eval_episodes must be >= 1");
  if (run.hidden_dims.empty()) throw std::domain_error("config: hidden_dims must be non-empty");
  for (int h : run.hidden_dims)
    if (h < 1) throw std::domain_error("config: hidden_dims entries must be >= 1");
  for (double r : run.sweep_rates)
    if (r < 0.0) throw std::domain_error("config: sweep_rates entries must be >= 0");
  (void)transfer::parse_mode(transfer_mode);
}

ExperimentSpec parse_config(const nlohmann::json& j) {
  ExperimentSpec spec;
  StrictObject o(j, "");
  if (o.has("network")) parse_network(o.child("network"), spec.network, "network.");
  if (o.has("source_network")) {
    spec.source_network = spec.network;
    parse_network(o.child("source_network"), spec.source_network, "source_network.");
    spec.has_source_network = true;
  }
  if (o.has("ppo")) parse_ppo(o.child("ppo"), spec.ppo, "ppo.");
  if (o.has("transfer")) parse_transfer(o.child("transfer"), spec.transfer, "transfer.");
  if (o.has("run")) parse_run(o.child("run"), spec.run, "run.");
  o.get("seeds", spec.seeds);
  o.get("transfer_mode", spec.transfer_mode);
  o.finish();
  spec.validate();
  return spec;
}

ExperimentSpec load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config: parse error in '" + path + "': " + e.what());
  }
  return parse_config(j);
}

nlohmann::json dump_config(const ExperimentSpec& spec) {
  nlohmann::json j;
  j["network"] = network_to_json(spec.network);
  if (spec.has_source_network) j["source_network"] = network_to_json(spec.source_network);
  j["ppo"] = {{"clip_epsilon", spec.ppo.clip_epsilon},
              {"discount", spec.ppo.discount},
              {"gae_lambda", spec.ppo.gae_lambda},
              {"epochs_per_batch", spec.ppo.epochs_per_batch},
              {"minibatch_size", spec.ppo.minibatch_size},
              {"actor_lr", spec.ppo.actor_lr},
              {"critic_lr", spec.ppo.critic_lr},
              {"rollout_ttis", spec.ppo.rollout_ttis},
              {"grad_clip_norm", spec.ppo.grad_clip_norm}};
  j["transfer"] = {{"eta_initial", spec.transfer.eta_initial},
                   {"eta_decay", spec.transfer.eta_decay},
                   {"advantage_threshold", spec.transfer.advantage_threshold},
                   {"offpolicy_min_samples", spec.transfer.offpolicy_min_samples},
                   {"replay_capacity", spec.transfer.replay_capacity}};
  j["run"] = {{"updates", spec.run.updates},
              {"master_updates", spec.run.master_updates},
              {"num_envs", spec.run.num_envs},
              {"eval_episodes", spec.run.eval_episodes},
              {"hidden_dims", spec.run.hidden_dims},
              {"sweep_rates", spec.run.sweep_rates},
              {"sweep_updates", spec.run.sweep_updates}};
  j["seeds"] = spec.seeds;
  j["transfer_mode"] = spec.transfer_mode;
  return j;
}

std::string config_hash(const ExperimentSpec& spec) {
  const std::string dump = dump_config(spec).dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    hash ^= static_cast<std::uint64_t>(c);
    hash *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace oran::config
