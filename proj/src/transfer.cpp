#include "oran/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "oran/parallel.hpp"

namespace oran::transfer {

void TransferConfig::validate() const {
  if (eta_initial < 0.0) throw std::domain_error("transfer: eta_initial must be >= 0");
  if (!(eta_decay > 0.0 && eta_decay <= 1.0))
    throw std::domain_error("transfer: eta_decay must be in (0, 1]");
  if (offpolicy_min_samples < 1)
    throw std::domain_error("transfer: offpolicy_min_samples must be >= 1");
  if (replay_capacity < 1) throw std::domain_error("transfer: replay_capacity must be >= 1");
}

double eta_at(const TransferConfig& cfg, int update_idx) {
  return cfg.eta_initial * std::pow(cfg.eta_decay, static_cast<double>(update_idx));
}

double distill_loss(const std::vector<std::vector<double>>& master_probs,
                    const std::vector<std::vector<double>>& learner_probs) {
  if (master_probs.size() != learner_probs.size())
    throw std::domain_error("distill_loss: head count mismatch");
  double loss = 0.0;
  for (std::size_t h = 0; h < master_probs.size(); ++h) {
    if (master_probs[h].size() != learner_probs[h].size())
      throw std::domain_error("distill_loss: head size mismatch");
    for (std::size_t a = 0; a < master_probs[h].size(); ++a)
      loss -= master_probs[h][a] * std::log(std::max(learner_probs[h][a], 1e-12));
  }
  return loss;
}

DistillBatchResult distill_loss_batch(const std::vector<std::vector<double>>& states,
                                      const nn::Mlp& master, const nn::Mlp& learner) {
  DistillBatchResult result;
  result.grad = nn::Grad::zeros_like(learner);
  if (states.empty()) return result;
  const int n = static_cast<int>(states.size());

  std::vector<nn::Workspace> master_ws, learner_ws;
  nn::forward_batch(master, states, master_ws);
  nn::forward_batch(learner, states, learner_ws);

  std::vector<double> losses(states.size());
  std::vector<std::vector<std::vector<double>>> upstream(states.size());
#pragma omp parallel for schedule(static) num_threads(parallel::max_threads()) \
    if (parallel::enabled())
  for (int i = 0; i < n; ++i) {
    const auto& p = master_ws[static_cast<std::size_t>(i)].head_out;
    const auto& q = learner_ws[static_cast<std::size_t>(i)].head_out;
    double loss = 0.0;
    auto& u = upstream[static_cast<std::size_t>(i)];
    u.resize(q.size());
    for (std::size_t h = 0; h < q.size(); ++h) {
      u[h].assign(q[h].size(), 0.0);
      if (learner.heads[h].kind != nn::HeadKind::categorical) continue;  // distributions only
      for (std::size_t a = 0; a < q[h].size(); ++a) {
        loss -= p[h][a] * std::log(std::max(q[h][a], 1e-12));
        u[h][a] = (q[h][a] - p[h][a]) / static_cast<double>(n);
      }
    }
    losses[static_cast<std::size_t>(i)] = loss;
  }
  double total = 0.0;
  for (double l : losses) total += l;
  result.loss = total / static_cast<double>(n);
  nn::backward_batch(learner, learner_ws, upstream, result.grad);
  return result;
}

double on_policy_objective(double clip_objective, double distill, double eta) {
  if (eta < 0.0) throw std::domain_error("on_policy_objective: eta must be >= 0");
  return clip_objective - eta * distill;
}

void ReplayBuffer::push_episode(std::vector<ppo::Transition> episode) {
  if (episode.empty()) return;
  size_ += episode.size();
  episodes_.push_back(std::move(episode));
  while (size_ > capacity_ && episodes_.size() > 1) {
    size_ -= episodes_.front().size();
    episodes_.pop_front();
  }
}

void ReplayBuffer::recompute_advantages(const nn::Mlp& critic, double discount, double lambda) {
  nn::Workspace ws;
  for (std::vector<ppo::Transition>& episode : episodes_) {
    for (ppo::Transition& tr : episode) {
      nn::forward(critic, tr.state, ws);
      tr.value = ws.head_out[0][0];
    }
    ppo::RolloutStream stream;
    stream.transitions = std::move(episode);
    stream.bootstrap_value = 0.0;
    ppo::compute_gae(stream, discount, lambda);
    episode = std::move(stream.transitions);
  }
}

std::vector<ppo::Transition> select_by_advantage(const ReplayBuffer& buffer, double threshold) {
  std::vector<ppo::Transition> selected;
  for (const auto& episode : buffer.episodes())
    for (const ppo::Transition& tr : episode)
      if (tr.advantage > threshold) selected.push_back(tr);
  return selected;
}

OffPolicyLoss off_policy_objective(const std::vector<ppo::Transition>& batch,
                                   const nn::Mlp& actor, double epsilon) {
  OffPolicyLoss result;
  result.grad = nn::Grad::zeros_like(actor);
  result.samples_used = batch.size();
  if (batch.empty()) return result;
  const int n = static_cast<int>(batch.size());

  std::vector<std::vector<double>> states(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) states[i] = batch[i].state;
  std::vector<nn::Workspace> ws;
  nn::forward_batch(actor, states, ws);

  std::vector<double> objective(batch.size());
  std::vector<double> ratios(batch.size());
  std::vector<std::vector<std::vector<double>>> upstream(batch.size());
#pragma omp parallel for schedule(static) num_threads(parallel::max_threads()) \
    if (parallel::enabled())
  for (int i = 0; i < n; ++i) {
    const ppo::Transition& tr = batch[static_cast<std::size_t>(i)];
    const double logp = ppo::action_log_prob(ws[static_cast<std::size_t>(i)], tr.action);
    const double ratio = std::exp(logp - tr.log_prob_behavior);
    const double unclipped = ratio * tr.advantage;
    const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon) * tr.advantage;
    objective[static_cast<std::size_t>(i)] = std::min(unclipped, clipped);
    ratios[static_cast<std::size_t>(i)] = ratio;
    const double dobj_dlogp = unclipped <= clipped ? ratio * tr.advantage : 0.0;
    const double coef = -dobj_dlogp / static_cast<double>(n);
    auto& u = upstream[static_cast<std::size_t>(i)];
    u.resize(actor.heads.size());
    for (std::size_t h = 0; h < actor.heads.size(); ++h) {
      const std::vector<double>& probs = ws[static_cast<std::size_t>(i)].head_out[h];
      u[h].resize(probs.size());
      for (std::size_t a = 0; a < probs.size(); ++a) u[h][a] = coef * (0.0 - probs[a]);
      u[h][static_cast<std::size_t>(tr.action[h])] += coef;
    }
  }

  double obj_sum = 0.0, ratio_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    obj_sum += objective[static_cast<std::size_t>(i)];
    ratio_sum += ratios[static_cast<std::size_t>(i)];
  }
  result.objective = obj_sum / static_cast<double>(n);
  result.loss = -result.objective;
  result.mean_ratio = ratio_sum / static_cast<double>(n);
  nn::backward_batch(actor, ws, upstream, result.grad);
  return result;
}

Mode parse_mode(const std::string& name) {
  if (name == "on_policy") return Mode::on_policy;
  if (name == "off_policy") return Mode::off_policy;
  if (name == "random_init") return Mode::random_init;
  throw std::domain_error("transfer: unknown mode '" + name + "'");
}

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::on_policy: return "on_policy";
    case Mode::off_policy: return "off_policy";
    case Mode::random_init: return "random_init";
  }
  return "unknown";
}

namespace {

// ppo::update plus the eta-weighted distillation pull toward the master.
ppo::UpdateDiagnostics update_with_distill(nn::Mlp& actor, nn::AdamState& actor_opt,
                                           nn::Mlp& critic, nn::AdamState& critic_opt,
                                           std::vector<ppo::Transition>& batch,
                                           const ppo::PpoConfig& cfg, double eta,
                                           const nn::Mlp& master_actor, Rng& rng) {
  ppo::UpdateDiagnostics diag;
  if (batch.empty()) return diag;

  std::vector<std::size_t> order(batch.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  long minibatches = 0;
  for (int epoch = 0; epoch < cfg.epochs_per_batch; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.minibatch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.minibatch_size));
      std::vector<ppo::Transition> minibatch;
      minibatch.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) minibatch.push_back(batch[order[i]]);

      ppo::PolicyLoss pl = ppo::policy_loss(minibatch, actor, cfg.clip_epsilon);
      if (eta > 0.0) {
        std::vector<std::vector<double>> states(minibatch.size());
        for (std::size_t i = 0; i < minibatch.size(); ++i) states[i] = minibatch[i].state;
        const DistillBatchResult distill = distill_loss_batch(states, master_actor, actor);
        pl.grad.add(distill.grad, eta);
        pl.loss += eta * distill.loss;
      }
      ppo::CriticLoss cl = ppo::critic_loss(minibatch, critic);
      if (!std::isfinite(pl.loss) || !std::isfinite(cl.loss))
        throw std::runtime_error("transfer: non-finite loss in distillation update");
      nn::clip_grad_norm(pl.grad, cfg.grad_clip_norm);
      nn::clip_grad_norm(cl.grad, cfg.grad_clip_norm);
      nn::adam_step(actor, pl.grad, actor_opt);
      nn::adam_step(critic, cl.grad, critic_opt);

      diag.policy_loss += pl.loss;
      diag.critic_loss += cl.loss;
      diag.mean_ratio += pl.mean_ratio;
      diag.clip_fraction += pl.clip_fraction;
      minibatches += 1;
    }
  }
  if (minibatches > 0) {
    const double inv = 1.0 / static_cast<double>(minibatches);
    diag.policy_loss *= inv;
    diag.critic_loss *= inv;
    diag.mean_ratio *= inv;
    diag.clip_fraction *= inv;
  }
  return diag;
}

}  // namespace

TrainResult train_policy(const net::NetworkConfig& config, const ppo::PpoConfig& ppo_cfg,
                         const TransferConfig& transfer_cfg, const TrainOptions& options,
                         Mode mode, const MasterPolicy* master) {
  config.validate();
  ppo_cfg.validate();
  transfer_cfg.validate();
  if (mode != Mode::random_init && master == nullptr)
    throw std::domain_error("transfer: mode '" + mode_name(mode) +
                            "' requires a master policy checkpoint");

  Rng rng = Rng::stream(options.seed, {0x747261696eULL});
  std::vector<env::Environment> envs;
  envs.reserve(static_cast<std::size_t>(options.num_envs));
  for (int e = 0; e < options.num_envs; ++e)
    envs.emplace_back(config, options.seed, static_cast<std::uint64_t>(e));

  TrainResult result;
  if (mode == Mode::on_policy) {
    // Warm start from the teacher; the distillation term keeps the learner
    // anchored while eta decays.
    result.actor = master->actor;
    result.critic = master->critic;
  } else {
    Rng init_rng = Rng::stream(options.seed, {0x696e6974ULL});
    result.actor = nn::init(ppo::actor_dims(config, options.hidden_dims), ppo::actor_heads(config),
                            init_rng);
    result.critic = nn::init(ppo::critic_dims(config, options.hidden_dims),
                             {nn::HeadSpec{1, nn::HeadKind::scalar}}, init_rng);
  }
  result.actor_opt = nn::AdamState::create(result.actor, ppo_cfg.actor_lr);
  result.critic_opt = nn::AdamState::create(result.critic, ppo_cfg.critic_lr);

  ReplayBuffer buffer(transfer_cfg.replay_capacity);
  if (mode == Mode::off_policy) {
    // Fill the buffer with master-policy experience gathered on the target
    // task before any learner update.
    std::vector<env::Environment> collect_envs;
    for (int e = 0; e < options.num_envs; ++e)
      collect_envs.emplace_back(config, options.seed, 1000 + static_cast<std::uint64_t>(e));
    Rng collect_rng = Rng::stream(options.seed, {0x627566ULL});
    while (buffer.size() < static_cast<std::size_t>(transfer_cfg.offpolicy_min_samples)) {
      ppo::RolloutBatch rb = ppo::collect_rollout(collect_envs, master->actor, master->critic,
                                                  config.episode_ttis, collect_rng);
      for (ppo::RolloutStream& stream : rb.streams)
        buffer.push_episode(std::move(stream.transitions));
    }
  }

  for (int j = 0; j < options.updates; ++j) {
    ppo::RolloutBatch batch =
        ppo::collect_rollout(envs, result.actor, result.critic, ppo_cfg.rollout_ttis, rng);
    for (ppo::RolloutStream& stream : batch.streams)
      ppo::compute_gae(stream, ppo_cfg.discount, ppo_cfg.gae_lambda);
    std::vector<ppo::Transition> flat = batch.flatten();
    ppo::normalize_advantages(flat);

    ppo::UpdateDiagnostics diag;
    if (mode == Mode::on_policy) {
      diag = update_with_distill(result.actor, result.actor_opt, result.critic,
                                 result.critic_opt, flat, ppo_cfg, eta_at(transfer_cfg, j),
                                 master->actor, rng);
    } else {
      diag = ppo::update(result.actor, result.actor_opt, result.critic, result.critic_opt,
                         flat, ppo_cfg, rng);
    }

    if (mode == Mode::off_policy &&
        buffer.size() >= static_cast<std::size_t>(transfer_cfg.offpolicy_min_samples)) {
      buffer.recompute_advantages(result.critic, ppo_cfg.discount, ppo_cfg.gae_lambda);
      std::vector<ppo::Transition> selected =
          select_by_advantage(buffer, transfer_cfg.advantage_threshold);
      if (!selected.empty()) {
        std::vector<std::size_t> order(selected.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(ppo_cfg.minibatch_size)) {
          const std::size_t stop =
              std::min(order.size(), start + static_cast<std::size_t>(ppo_cfg.minibatch_size));
          std::vector<ppo::Transition> minibatch;
          minibatch.reserve(stop - start);
          for (std::size_t i = start; i < stop; ++i) minibatch.push_back(selected[order[i]]);
          OffPolicyLoss ol = off_policy_objective(minibatch, result.actor, ppo_cfg.clip_epsilon);
          nn::clip_grad_norm(ol.grad, ppo_cfg.grad_clip_norm);
          nn::adam_step(result.actor, ol.grad, result.actor_opt);
          result.offpolicy_samples_consumed += ol.samples_used;
        }
      }
    }

    result.curve.push_back(CurvePoint{j, batch.mean_reward, batch.mean_ee});
    result.log.push_back(TrainLogRow{j, batch.mean_reward, batch.mean_ee, diag.policy_loss,
                                     diag.critic_loss, diag.clip_fraction, batch.mean_psi,
                                     batch.outage_rate});
  }
  return result;
}

net::NetworkConfig shifted_channel_config(const net::NetworkConfig& source) {
  net::NetworkConfig target = source;
  target.pathloss_slope_db = 41.0;
  target.shadowing_sigma_db = 8.0;
  target.rng_seed = mix64(source.rng_seed ^ 0x74617267ULL);
  return target;
}

MasterPolicy train_master(const net::NetworkConfig& source_config,
                          const ppo::PpoConfig& ppo_cfg, const TrainOptions& options,
                          const std::string& task_id) {
  TransferConfig dummy;
  TrainResult r = train_policy(source_config, ppo_cfg, dummy, options, Mode::random_init,
                               nullptr);
  MasterPolicy master;
  master.actor = std::move(r.actor);
  master.critic = std::move(r.critic);
  master.source_task_id = task_id;
  return master;
}

ExperimentCurves run_transfer_experiment(const std::vector<Mode>& modes,
                                         const net::NetworkConfig& source_config,
                                         const net::NetworkConfig& target_config,
                                         const ppo::PpoConfig& ppo_cfg,
                                         const TransferConfig& transfer_cfg,
                                         const TrainOptions& options,
                                         const std::vector<std::uint64_t>& seeds,
                                         const MasterPolicy* master) {
  ExperimentCurves out;
  out.modes = modes;
  out.seeds = seeds;

  MasterPolicy local_master;
  if (master == nullptr) {
    TrainOptions master_opts = options;
    master_opts.seed = mix64(options.seed ^ 0x6d617374ULL);
    local_master = train_master(source_config, ppo_cfg, master_opts, "source");
    master = &local_master;
  }

  out.curves.resize(modes.size());
  for (std::size_t m = 0; m < modes.size(); ++m) {
    out.curves[m].resize(seeds.size());
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      TrainOptions opts = options;
      opts.seed = seeds[s];
      TrainResult r = train_policy(target_config, ppo_cfg, transfer_cfg, opts, modes[m],
                                   modes[m] == Mode::random_init ? nullptr : master);
      out.curves[m][s] = std::move(r.curve);
    }
  }
  return out;
}

}  // namespace oran::transfer
