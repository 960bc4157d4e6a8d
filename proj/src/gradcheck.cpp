#include "oran/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "oran/transfer.hpp"

namespace oran::gradcheck {

bool Report::all_pass() const {
  for (const Entry& e : entries)
    if (!e.pass) return false;
  return !entries.empty();
}

std::vector<double*> parameter_pointers(nn::Mlp& net) {
  std::vector<double*> ptrs;
  auto grab = [&ptrs](std::vector<std::vector<double>>& arrays) {
    for (auto& a : arrays)
      for (double& x : a) ptrs.push_back(&x);
  };
  grab(net.weights);
  grab(net.biases);
  grab(net.head_weights);
  grab(net.head_biases);
  return ptrs;
}

std::vector<const double*> gradient_pointers(const nn::Grad& grad) {
  std::vector<const double*> ptrs;
  auto grab = [&ptrs](const std::vector<std::vector<double>>& arrays) {
    for (const auto& a : arrays)
      for (const double& x : a) ptrs.push_back(&x);
  };
  grab(grad.weights);
  grab(grad.biases);
  grab(grad.head_weights);
  grab(grad.head_biases);
  return ptrs;
}

namespace {

// Evenly spread parameter subset over the flattened vector.
std::vector<std::size_t> pick_indices(std::size_t total, int wanted) {
  std::vector<std::size_t> idx;
  if (total == 0) return idx;
  const std::size_t n = std::min<std::size_t>(total, static_cast<std::size_t>(wanted));
  for (std::size_t i = 0; i < n; ++i) idx.push_back(i * total / n);
  return idx;
}

template <typename LossFn>
Entry fd_check(const std::string& name, nn::Mlp& net, const nn::Grad& analytic, LossFn&& loss,
               int params_per_check) {
  Entry entry;
  entry.name = name;
  std::vector<double*> params = parameter_pointers(net);
  std::vector<const double*> grads = gradient_pointers(analytic);
  const std::vector<std::size_t> idx = pick_indices(params.size(), params_per_check);
  entry.params_checked = static_cast<int>(idx.size());
  for (std::size_t i : idx) {
    const double saved = *params[i];
    *params[i] = saved + kFdStep;
    const double up = loss();
    *params[i] = saved - kFdStep;
    const double down = loss();
    *params[i] = saved;
    const double fd = (up - down) / (2.0 * kFdStep);
    const double an = *grads[i];
    const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-7});
    entry.max_rel_err = std::max(entry.max_rel_err, rel);
  }
  entry.pass = entry.max_rel_err < kRelTolerance;
  return entry;
}

nn::Mlp pinned_net(std::uint64_t seed) {
  Rng rng = Rng::stream(seed, {0x6e6574ULL});
  return nn::init({5, 12, 8},
                  {nn::HeadSpec{3, nn::HeadKind::categorical},
                   nn::HeadSpec{4, nn::HeadKind::categorical},
                   nn::HeadSpec{1, nn::HeadKind::scalar}},
                  rng);
}

}  // namespace

std::vector<ppo::Transition> pinned_batch(const nn::Mlp& actor, std::uint64_t seed,
                                          int batch_size) {
  Rng rng = Rng::stream(seed, {0x6261746368ULL});
  nn::Mlp behavior = actor;
  for (double* p : parameter_pointers(behavior)) *p += 0.05 * rng.normal();

  std::vector<ppo::Transition> batch;
  nn::Workspace ws;
  for (int i = 0; i < batch_size; ++i) {
    ppo::Transition tr;
    tr.state.resize(static_cast<std::size_t>(actor.input_dim()));
    for (double& x : tr.state) x = rng.uniform(-1.0, 1.0);
    nn::forward(behavior, tr.state, ws);
    tr.action.resize(actor.heads.size(), 0);
    for (std::size_t h = 0; h < actor.heads.size(); ++h)
      if (actor.heads[h].kind == nn::HeadKind::categorical)
        tr.action[h] = nn::sample_categorical(ws.head_out[h], rng);
    tr.log_prob_behavior = ppo::action_log_prob(ws, tr.action);
    tr.advantage = rng.normal();
    tr.return_target = rng.normal();
    batch.push_back(std::move(tr));
  }
  return batch;
}

Entry check_backward(std::uint64_t seed, int params_per_check) {
  nn::Mlp net = pinned_net(seed);
  Rng rng = Rng::stream(seed, {0x75707374ULL});
  std::vector<double> input(static_cast<std::size_t>(net.input_dim()));
  for (double& x : input) x = rng.uniform(-1.0, 1.0);
  std::vector<std::vector<double>> head_coeffs;
  for (const nn::HeadSpec& h : net.heads) {
    head_coeffs.emplace_back(static_cast<std::size_t>(h.size));
    for (double& c : head_coeffs.back()) c = rng.normal();
  }

  // L = sum_h <coeff_h, out_h>; categorical upstream folds the softmax
  // Jacobian: dL/dlogit = p .* (coeff - <coeff, p>)
  auto loss = [&]() {
    nn::Workspace ws;
    nn::forward(net, input, ws);
    double total = 0.0;
    for (std::size_t h = 0; h < net.heads.size(); ++h)
      for (std::size_t a = 0; a < head_coeffs[h].size(); ++a)
        total += head_coeffs[h][a] * ws.head_out[h][a];
    return total;
  };

  nn::Workspace ws;
  nn::forward(net, input, ws);
  std::vector<std::vector<double>> upstream(net.heads.size());
  for (std::size_t h = 0; h < net.heads.size(); ++h) {
    if (net.heads[h].kind == nn::HeadKind::categorical) {
      const std::vector<double>& p = ws.head_out[h];
      double dot = 0.0;
      for (std::size_t a = 0; a < p.size(); ++a) dot += head_coeffs[h][a] * p[a];
      upstream[h].resize(p.size());
      for (std::size_t a = 0; a < p.size(); ++a) upstream[h][a] = p[a] * (head_coeffs[h][a] - dot);
    } else {
      upstream[h] = head_coeffs[h];
    }
  }
  nn::Grad grad = nn::Grad::zeros_like(net);
  nn::backward(net, ws, upstream, grad);
  return fd_check("nn_backward", net, grad, loss, params_per_check);
}

Entry check_policy_loss(std::uint64_t seed, int params_per_check) {
  nn::Mlp actor = pinned_net(seed);
  const std::vector<ppo::Transition> batch = pinned_batch(actor, seed, 8);
  const double epsilon = 0.2;
  const nn::Grad analytic = ppo::policy_loss(batch, actor, epsilon).grad;
  auto loss = [&]() { return ppo::policy_loss(batch, actor, epsilon).loss; };
  return fd_check("ppo_policy_loss", actor, analytic, loss, params_per_check);
}

Entry check_critic_loss(std::uint64_t seed, int params_per_check) {
  Rng rng = Rng::stream(seed, {0x637274ULL});
  nn::Mlp critic = nn::init({5, 12, 8}, {nn::HeadSpec{1, nn::HeadKind::scalar}}, rng);
  std::vector<ppo::Transition> batch;
  for (int i = 0; i < 8; ++i) {
    ppo::Transition tr;
    tr.state.resize(5);
    for (double& x : tr.state) x = rng.uniform(-1.0, 1.0);
    tr.return_target = rng.normal();
    batch.push_back(std::move(tr));
  }
  const nn::Grad analytic = ppo::critic_loss(batch, critic).grad;
  auto loss = [&]() { return ppo::critic_loss(batch, critic).loss; };
  return fd_check("ppo_critic_loss", critic, analytic, loss, params_per_check);
}

Entry check_off_policy(std::uint64_t seed, int params_per_check) {
  nn::Mlp actor = pinned_net(seed);
  std::vector<ppo::Transition> batch = pinned_batch(actor, seed ^ 0xABCDULL, 8);
  for (ppo::Transition& tr : batch) tr.advantage = std::abs(tr.advantage) + 0.1;
  const double epsilon = 0.2;
  const nn::Grad analytic = transfer::off_policy_objective(batch, actor, epsilon).grad;
  auto loss = [&]() { return transfer::off_policy_objective(batch, actor, epsilon).loss; };
  return fd_check("transfer_off_policy_objective", actor, analytic, loss, params_per_check);
}

Entry check_distill(std::uint64_t seed, int params_per_check) {
  Rng learner_rng = Rng::stream(seed, {0x6c72ULL});
  Rng master_rng = Rng::stream(seed ^ 0x5555ULL, {0x6d72ULL});
  const std::vector<nn::HeadSpec> heads{nn::HeadSpec{3, nn::HeadKind::categorical},
                                        nn::HeadSpec{4, nn::HeadKind::categorical}};
  nn::Mlp learner = nn::init({5, 12, 8}, heads, learner_rng);
  nn::Mlp master = nn::init({5, 12, 8}, heads, master_rng);
  Rng rng = Rng::stream(seed, {0x646973ULL});
  std::vector<std::vector<double>> states(6);
  for (auto& s : states) {
    s.resize(static_cast<std::size_t>(learner.input_dim()));
    for (double& x : s) x = rng.uniform(-1.0, 1.0);
  }
  const nn::Grad analytic = transfer::distill_loss_batch(states, master, learner).grad;
  auto loss = [&]() { return transfer::distill_loss_batch(states, master, learner).loss; };
  return fd_check("transfer_distill_loss", learner, analytic, loss, params_per_check);
}

Report run_all(int params_per_check) {
  Report report;
  report.entries.push_back(check_backward(11, params_per_check));
  report.entries.push_back(check_policy_loss(23, params_per_check));
  report.entries.push_back(check_critic_loss(37, params_per_check));
  report.entries.push_back(check_off_policy(53, params_per_check));
  report.entries.push_back(check_distill(71, params_per_check));
  return report;
}

}  // namespace oran::gradcheck
