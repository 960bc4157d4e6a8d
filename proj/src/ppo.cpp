#include "oran/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "oran/parallel.hpp"

namespace oran::ppo {

void PpoConfig::validate() const {
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0))
    throw std::domain_error("ppo: clip_epsilon must be in (0, 1)");
  if (!(discount >= 0.0 && discount <= 1.0))
    throw std::domain_error("ppo: discount must be in [0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0))
    throw std::domain_error("ppo: gae_lambda must be in [0, 1]");
  if (epochs_per_batch < 1) throw std::domain_error("ppo: epochs_per_batch must be >= 1");
  if (minibatch_size < 1) throw std::domain_error("ppo: minibatch_size must be >= 1");
  if (!(actor_lr > 0.0)) throw std::domain_error("ppo: actor_lr must be > 0");
  if (!(critic_lr > 0.0)) throw std::domain_error("ppo: critic_lr must be > 0");
  if (rollout_ttis < 1) throw std::domain_error("ppo: rollout_ttis must be >= 1");
  if (!(grad_clip_norm > 0.0)) throw std::domain_error("ppo: grad_clip_norm must be > 0");
}

std::vector<Transition> RolloutBatch::flatten() const {
  std::vector<Transition> flat;
  flat.reserve(size());
  for (const RolloutStream& s : streams)
    flat.insert(flat.end(), s.transitions.begin(), s.transitions.end());
  return flat;
}

std::size_t RolloutBatch::size() const {
  std::size_t n = 0;
  for (const RolloutStream& s : streams) n += s.transitions.size();
  return n;
}

double action_log_prob(const nn::Workspace& ws, std::span<const int> choices) {
  if (choices.size() != ws.head_logits.size())
    throw std::domain_error("action_log_prob: choice count mismatch");
  double logp = 0.0;
  for (std::size_t h = 0; h < choices.size(); ++h) {
    const std::vector<double>& logits = ws.head_logits[h];
    double max_logit = logits[0];
    for (double x : logits) max_logit = std::max(max_logit, x);
    double sum = 0.0;
    for (double x : logits) sum += std::exp(x - max_logit);
    logp += logits[static_cast<std::size_t>(choices[h])] - max_logit - std::log(sum);
  }
  return logp;
}

std::vector<nn::HeadSpec> actor_heads(const net::NetworkConfig& config) {
  const env::ActionLayout layout = env::action_layout(config);
  std::vector<nn::HeadSpec> heads;
  for (int size : layout.head_sizes())
    heads.push_back(nn::HeadSpec{size, nn::HeadKind::categorical});
  return heads;
}

std::vector<int> actor_dims(const net::NetworkConfig& config, const std::vector<int>& hidden) {
  std::vector<int> dims{env::AgentState::dim(config)};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  return dims;
}

std::vector<int> critic_dims(const net::NetworkConfig& config, const std::vector<int>& hidden) {
  return actor_dims(config, hidden);
}

RolloutBatch collect_rollout(std::span<env::Environment> envs, const nn::Mlp& actor,
                             const nn::Mlp& critic, int rollout_ttis, Rng& rng) {
  RolloutBatch batch;
  if (envs.empty()) return batch;
  const int num_rus = envs[0].num_rus();
  batch.streams.resize(envs.size() * static_cast<std::size_t>(num_rus));

  double reward_sum = 0.0, ee_sum = 0.0, psi_sum = 0.0;
  long outcome_count = 0, arrived = 0, dropped = 0;

  nn::Workspace actor_ws, critic_ws;
  for (std::size_t e = 0; e < envs.size(); ++e) {
    env::Environment& environment = envs[e];
    for (int t = 0; t < rollout_ttis; ++t) {
      environment.prepare_tti();
      std::vector<env::AllocationAction> actions;
      actions.reserve(static_cast<std::size_t>(num_rus));
      std::vector<Transition> pending(static_cast<std::size_t>(num_rus));
      for (int ru = 0; ru < num_rus; ++ru) {
        Transition& tr = pending[static_cast<std::size_t>(ru)];
        tr.state = environment.observe(ru).flatten(environment.config());
        nn::forward(actor, tr.state, actor_ws);
        tr.action.resize(actor.heads.size());
        for (std::size_t h = 0; h < actor.heads.size(); ++h)
          tr.action[h] = nn::sample_categorical(actor_ws.head_out[h], rng);
        tr.log_prob_behavior = action_log_prob(actor_ws, tr.action);
        nn::forward(critic, tr.state, critic_ws);
        tr.value = critic_ws.head_out[0][0];
        actions.push_back(env::decode_action(tr.action, environment.config()));
      }
      const std::vector<env::StepOutcome> outcomes = environment.step(actions);
      const bool done = environment.episode_done();
      for (int ru = 0; ru < num_rus; ++ru) {
        const env::StepOutcome& oc = outcomes[static_cast<std::size_t>(environment.du_of_ru(ru))];
        Transition& tr = pending[static_cast<std::size_t>(ru)];
        tr.reward = oc.reward;
        tr.ee = oc.ee;
        tr.done = done;
        batch.streams[e * static_cast<std::size_t>(num_rus) + ru].transitions.push_back(
            std::move(tr));
      }
      for (const env::StepOutcome& oc : outcomes) {
        reward_sum += oc.reward;
        ee_sum += oc.ee;
        psi_sum += oc.psi;
        arrived += oc.packets_arrived;
        dropped += oc.packets_dropped;
        outcome_count += 1;
      }
      if (done) environment.reset();
    }
    // value bootstrap for unfinished tails
    environment.prepare_tti();
    for (int ru = 0; ru < num_rus; ++ru) {
      RolloutStream& stream = batch.streams[e * static_cast<std::size_t>(num_rus) + ru];
      if (!stream.transitions.empty() && stream.transitions.back().done) {
        stream.bootstrap_value = 0.0;
      } else {
        nn::forward(critic, environment.observe(ru).flatten(environment.config()), critic_ws);
        stream.bootstrap_value = critic_ws.head_out[0][0];
      }
    }
  }

  const double scale = outcome_count > 0 ? 1.0 / static_cast<double>(outcome_count) : 0.0;
  batch.mean_reward = reward_sum * scale;
  batch.mean_ee = ee_sum * scale;
  batch.mean_psi = psi_sum * scale;
  batch.outage_rate =
      arrived > 0 ? static_cast<double>(dropped) / static_cast<double>(arrived) : 0.0;
  return batch;
}

void compute_gae(RolloutStream& stream, double discount, double lambda) {
  double gae = 0.0;
  double next_value = stream.bootstrap_value;
  for (int t = static_cast<int>(stream.transitions.size()) - 1; t >= 0; --t) {
    Transition& tr = stream.transitions[static_cast<std::size_t>(t)];
    const double nonterminal = tr.done ? 0.0 : 1.0;
    const double delta = tr.reward + discount * next_value * nonterminal - tr.value;
    gae = delta + discount * lambda * nonterminal * gae;
    tr.advantage = gae;
    tr.return_target = gae + tr.value;
    next_value = tr.value;
  }
}

void normalize_advantages(std::vector<Transition>& batch) {
  if (batch.empty()) return;
  double mean = 0.0;
  for (const Transition& tr : batch) mean += tr.advantage;
  mean /= static_cast<double>(batch.size());
  double var = 0.0;
  for (const Transition& tr : batch) {
    const double d = tr.advantage - mean;
    var += d * d;
  }
  var /= static_cast<double>(batch.size());
  const double inv = 1.0 / (std::sqrt(var) + 1e-8);
  for (Transition& tr : batch) tr.advantage = (tr.advantage - mean) * inv;
}

double clipped_objective(double ratio, double advantage, double epsilon) {
  if (!(ratio > 0.0)) throw std::domain_error("clipped_objective: ratio must be > 0");
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

PolicyLoss policy_loss(const std::vector<Transition>& batch, const nn::Mlp& actor,
                       double epsilon) {
  PolicyLoss result;
  result.grad = nn::Grad::zeros_like(actor);
  if (batch.empty()) return result;
  const int n = static_cast<int>(batch.size());

  std::vector<std::vector<double>> states(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) states[i] = batch[i].state;
  std::vector<nn::Workspace> ws;
  nn::forward_batch(actor, states, ws);

  std::vector<double> objective(batch.size());
  std::vector<double> ratios(batch.size());
  std::vector<char> clipped_flag(batch.size());
  std::vector<std::vector<std::vector<double>>> upstream(batch.size());

#pragma omp parallel for schedule(static) num_threads(parallel::max_threads()) \
    if (parallel::enabled())
  for (int i = 0; i < n; ++i) {
    const Transition& tr = batch[static_cast<std::size_t>(i)];
    const double logp = action_log_prob(ws[static_cast<std::size_t>(i)], tr.action);
    const double ratio = std::exp(logp - tr.log_prob_behavior);
    const double unclipped = ratio * tr.advantage;
    const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon) * tr.advantage;
    objective[static_cast<std::size_t>(i)] = std::min(unclipped, clipped);
    ratios[static_cast<std::size_t>(i)] = ratio;
    clipped_flag[static_cast<std::size_t>(i)] = ratio < 1.0 - epsilon || ratio > 1.0 + epsilon;

    // d(objective)/d(logp): the clipped branch has zero gradient when it wins
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
  long clipped_count = 0;
  for (int i = 0; i < n; ++i) {
    obj_sum += objective[static_cast<std::size_t>(i)];
    ratio_sum += ratios[static_cast<std::size_t>(i)];
    clipped_count += clipped_flag[static_cast<std::size_t>(i)] ? 1 : 0;
  }
  result.loss = -obj_sum / static_cast<double>(n);
  result.mean_ratio = ratio_sum / static_cast<double>(n);
  result.clip_fraction = static_cast<double>(clipped_count) / static_cast<double>(n);
  nn::backward_batch(actor, ws, upstream, result.grad);
  return result;
}

CriticLoss critic_loss(const std::vector<Transition>& batch, const nn::Mlp& critic) {
  CriticLoss result;
  result.grad = nn::Grad::zeros_like(critic);
  if (batch.empty()) return result;
  const int n = static_cast<int>(batch.size());

  std::vector<std::vector<double>> states(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) states[i] = batch[i].state;
  std::vector<nn::Workspace> ws;
  nn::forward_batch(critic, states, ws);

  std::vector<double> sq_err(batch.size());
  std::vector<std::vector<std::vector<double>>> upstream(batch.size());
#pragma omp parallel for schedule(static) num_threads(parallel::max_threads()) \
    if (parallel::enabled())
  for (int i = 0; i < n; ++i) {
    const double v = ws[static_cast<std::size_t>(i)].head_out[0][0];
    const double err = v - batch[static_cast<std::size_t>(i)].return_target;
    sq_err[static_cast<std::size_t>(i)] = err * err;
    upstream[static_cast<std::size_t>(i)] = {{2.0 * err / static_cast<double>(n)}};
  }
  double loss = 0.0;
  for (int i = 0; i < n; ++i) loss += sq_err[static_cast<std::size_t>(i)];
  result.loss = loss / static_cast<double>(n);
  nn::backward_batch(critic, ws, upstream, result.grad);
  return result;
}

UpdateDiagnostics update(nn::Mlp& actor, nn::AdamState& actor_opt, nn::Mlp& critic,
                         nn::AdamState& critic_opt, std::vector<Transition>& batch,
                         const PpoConfig& cfg, Rng& rng) {
  cfg.validate();
  UpdateDiagnostics diag;
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
      std::vector<Transition> minibatch;
      minibatch.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) minibatch.push_back(batch[order[i]]);

      PolicyLoss pl = policy_loss(minibatch, actor, cfg.clip_epsilon);
      CriticLoss cl = critic_loss(minibatch, critic);
      if (!std::isfinite(pl.loss) || !std::isfinite(cl.loss)) {
        std::ostringstream oss;
        oss << "ppo::update: non-finite loss (policy=" << pl.loss << ", critic=" << cl.loss
            << ") at epoch " << epoch << ", minibatch offset " << start;
        throw std::runtime_error(oss.str());
      }
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

}  // namespace oran::ppo
