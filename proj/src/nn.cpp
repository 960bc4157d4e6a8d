#include "oran/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "oran/parallel.hpp"

namespace oran::nn {

namespace {

void matvec(std::span<const double> w, std::span<const double> x, std::span<const double> b,
            std::span<double> out) {
  const std::size_t rows = out.size();
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = b[r];
    const double* row = w.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
}

void softmax_inplace(std::vector<double>& v) {
  double max_logit = v[0];
  for (double x : v) max_logit = std::max(max_logit, x);
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - max_logit);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

}  // namespace

std::size_t Mlp::num_params() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += w.size();
  for (const auto& b : biases) n += b.size();
  for (const auto& w : head_weights) n += w.size();
  for (const auto& b : head_biases) n += b.size();
  return n;
}

void Mlp::validate() const {
  if (layer_dims.size() < 1) throw std::domain_error("mlp: need at least an input dim");
  if (weights.size() != layer_dims.size() - 1 || biases.size() != weights.size())
    throw std::domain_error("mlp: layer parameter count mismatch");
  for (std::size_t i = 0; i + 1 < layer_dims.size(); ++i) {
    if (layer_dims[i] < 1 || layer_dims[i + 1] < 1)
      throw std::domain_error("mlp: non-positive layer dim");
    if (weights[i].size() !=
        static_cast<std::size_t>(layer_dims[i]) * static_cast<std::size_t>(layer_dims[i + 1]))
      throw std::domain_error("mlp: weight shape mismatch");
    if (biases[i].size() != static_cast<std::size_t>(layer_dims[i + 1]))
      throw std::domain_error("mlp: bias shape mismatch");
  }
  if (heads.empty()) throw std::domain_error("mlp: need at least one head");
  if (head_weights.size() != heads.size() || head_biases.size() != heads.size())
    throw std::domain_error("mlp: head parameter count mismatch");
  for (std::size_t h = 0; h < heads.size(); ++h) {
    if (heads[h].size < 1) throw std::domain_error("mlp: non-positive head size");
    if (head_weights[h].size() !=
        static_cast<std::size_t>(heads[h].size) * static_cast<std::size_t>(feature_dim()))
      throw std::domain_error("mlp: head weight shape mismatch");
    if (head_biases[h].size() != static_cast<std::size_t>(heads[h].size))
      throw std::domain_error("mlp: head bias shape mismatch");
  }
}

Mlp init(const std::vector<int>& dims, const std::vector<HeadSpec>& heads, Rng& rng) {
  Mlp net;
  net.layer_dims = dims;
  net.heads = heads;
  auto xavier = [&rng](int fan_in, int fan_out, std::vector<double>& w) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    w.resize(static_cast<std::size_t>(fan_in) * fan_out);
    for (double& x : w) x = rng.uniform(-limit, limit);
  };
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    net.weights.emplace_back();
    xavier(dims[i], dims[i + 1], net.weights.back());
    net.biases.emplace_back(static_cast<std::size_t>(dims[i + 1]), 0.0);
  }
  for (const HeadSpec& head : heads) {
    net.head_weights.emplace_back();
    xavier(net.feature_dim(), head.size, net.head_weights.back());
    net.head_biases.emplace_back(static_cast<std::size_t>(head.size), 0.0);
  }
  net.validate();
  return net;
}

void forward(const Mlp& net, std::span<const double> input, Workspace& ws) {
  if (static_cast<int>(input.size()) != net.input_dim())
    throw std::domain_error("forward: input length mismatch");
  ws.input.assign(input.begin(), input.end());
  ws.activations.resize(net.weights.size());
  const std::vector<double>* prev = &ws.input;
  for (std::size_t i = 0; i < net.weights.size(); ++i) {
    ws.activations[i].resize(static_cast<std::size_t>(net.layer_dims[i + 1]));
    matvec(net.weights[i], *prev, net.biases[i], ws.activations[i]);
    for (double& x : ws.activations[i]) x = std::tanh(x);
    prev = &ws.activations[i];
  }
  const std::vector<double>& features = net.weights.empty() ? ws.input : ws.activations.back();
  ws.head_logits.resize(net.heads.size());
  ws.head_out.resize(net.heads.size());
  for (std::size_t h = 0; h < net.heads.size(); ++h) {
    ws.head_logits[h].resize(static_cast<std::size_t>(net.heads[h].size));
    matvec(net.head_weights[h], features, net.head_biases[h], ws.head_logits[h]);
    ws.head_out[h] = ws.head_logits[h];
    if (net.heads[h].kind == HeadKind::categorical) softmax_inplace(ws.head_out[h]);
  }
}

Grad Grad::zeros_like(const Mlp& net) {
  Grad g;
  for (const auto& w : net.weights) g.weights.emplace_back(w.size(), 0.0);
  for (const auto& b : net.biases) g.biases.emplace_back(b.size(), 0.0);
  for (const auto& w : net.head_weights) g.head_weights.emplace_back(w.size(), 0.0);
  for (const auto& b : net.head_biases) g.head_biases.emplace_back(b.size(), 0.0);
  return g;
}

namespace {
template <typename F>
void for_each_array(Grad& g, F&& f) {
  for (auto& v : g.weights) f(v);
  for (auto& v : g.biases) f(v);
  for (auto& v : g.head_weights) f(v);
  for (auto& v : g.head_biases) f(v);
}
template <typename F>
void for_each_array(const Grad& g, F&& f) {
  for (const auto& v : g.weights) f(v);
  for (const auto& v : g.biases) f(v);
  for (const auto& v : g.head_weights) f(v);
  for (const auto& v : g.head_biases) f(v);
}
}  // namespace

void Grad::zero() {
  for_each_array(*this, [](std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); });
}

void Grad::add(const Grad& other, double s) {
  auto axpy = [s](std::vector<double>& dst, const std::vector<double>& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s * src[i];
  };
  for (std::size_t i = 0; i < weights.size(); ++i) axpy(weights[i], other.weights[i]);
  for (std::size_t i = 0; i < biases.size(); ++i) axpy(biases[i], other.biases[i]);
  for (std::size_t i = 0; i < head_weights.size(); ++i)
    axpy(head_weights[i], other.head_weights[i]);
  for (std::size_t i = 0; i < head_biases.size(); ++i) axpy(head_biases[i], other.head_biases[i]);
}

void Grad::scale(double s) {
  for_each_array(*this, [s](std::vector<double>& v) {
    for (double& x : v) x *= s;
  });
}

double Grad::squared_norm() const {
  double total = 0.0;
  for_each_array(*this, [&total](const std::vector<double>& v) {
    for (double x : v) total += x * x;
  });
  return total;
}

void backward(const Mlp& net, const Workspace& ws,
              const std::vector<std::vector<double>>& upstream, Grad& accum) {
  if (upstream.size() != net.heads.size())
    throw std::domain_error("backward: upstream head count mismatch");
  const std::vector<double>& features = net.weights.empty() ? ws.input : ws.activations.back();
  std::vector<double> delta(features.size(), 0.0);

  for (std::size_t h = 0; h < net.heads.size(); ++h) {
    const std::vector<double>& u = upstream[h];
    if (static_cast<int>(u.size()) != net.heads[h].size)
      throw std::domain_error("backward: upstream head size mismatch");
    std::vector<double>& gw = accum.head_weights[h];
    std::vector<double>& gb = accum.head_biases[h];
    for (std::size_t r = 0; r < u.size(); ++r) {
      gb[r] += u[r];
      const std::size_t base = r * features.size();
      for (std::size_t c = 0; c < features.size(); ++c) gw[base + c] += u[r] * features[c];
      const double* wrow = net.head_weights[h].data() + base;
      for (std::size_t c = 0; c < features.size(); ++c) delta[c] += u[r] * wrow[c];
    }
  }

  for (int layer = static_cast<int>(net.weights.size()) - 1; layer >= 0; --layer) {
    const std::vector<double>& act = ws.activations[layer];
    for (std::size_t r = 0; r < delta.size(); ++r) delta[r] *= 1.0 - act[r] * act[r];

    const std::vector<double>& below =
        layer == 0 ? ws.input : ws.activations[static_cast<std::size_t>(layer - 1)];
    std::vector<double>& gw = accum.weights[layer];
    std::vector<double>& gb = accum.biases[layer];
    for (std::size_t r = 0; r < delta.size(); ++r) {
      gb[r] += delta[r];
      const std::size_t base = r * below.size();
      for (std::size_t c = 0; c < below.size(); ++c) gw[base + c] += delta[r] * below[c];
    }
    if (layer > 0) {
      std::vector<double> next(below.size(), 0.0);
      for (std::size_t r = 0; r < delta.size(); ++r) {
        const double* wrow = net.weights[layer].data() + r * below.size();
        for (std::size_t c = 0; c < below.size(); ++c) next[c] += delta[r] * wrow[c];
      }
      delta = std::move(next);
    }
  }
}

void forward_batch(const Mlp& net, const std::vector<std::vector<double>>& inputs,
                   std::vector<Workspace>& ws) {
  ws.resize(inputs.size());
  const int n = static_cast<int>(inputs.size());
#pragma omp parallel for schedule(static) num_threads(parallel::max_threads()) \
    if (parallel::enabled())
  for (int i = 0; i < n; ++i) forward(net, inputs[static_cast<std::size_t>(i)], ws[i]);
}

void backward_batch(const Mlp& net, const std::vector<Workspace>& ws,
                    const std::vector<std::vector<std::vector<double>>>& upstream, Grad& out) {
  if (ws.size() != upstream.size())
    throw std::domain_error("backward_batch: workspace/upstream size mismatch");
  const int n = static_cast<int>(ws.size());
  const int num_blocks = (n + kReduceBlock - 1) / kReduceBlock;
  std::vector<Grad> partial(static_cast<std::size_t>(num_blocks));
#pragma omp parallel for schedule(static) num_threads(parallel::max_threads()) \
    if (parallel::enabled())
  for (int b = 0; b < num_blocks; ++b) {
    partial[b] = Grad::zeros_like(net);
    const int lo = b * kReduceBlock;
    const int hi = std::min(n, lo + kReduceBlock);
    for (int i = lo; i < hi; ++i)
      backward(net, ws[static_cast<std::size_t>(i)], upstream[static_cast<std::size_t>(i)],
               partial[b]);
  }
  out = Grad::zeros_like(net);
  for (int b = 0; b < num_blocks; ++b) out.add(partial[b]);
}

AdamState AdamState::create(const Mlp& net, double lr) {
  AdamState s;
  s.first_moment = Grad::zeros_like(net);
  s.second_moment = Grad::zeros_like(net);
  s.lr = lr;
  return s;
}

void adam_step(Mlp& net, const Grad& grad, AdamState& opt) {
  opt.step_count += 1;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step_count));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step_count));
  auto update = [&](std::vector<double>& w, std::vector<double>& m, std::vector<double>& v,
                    const std::vector<double>& g) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
      v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
    }
  };
  for (std::size_t i = 0; i < net.weights.size(); ++i)
    update(net.weights[i], opt.first_moment.weights[i], opt.second_moment.weights[i],
           grad.weights[i]);
  for (std::size_t i = 0; i < net.biases.size(); ++i)
    update(net.biases[i], opt.first_moment.biases[i], opt.second_moment.biases[i],
           grad.biases[i]);
  for (std::size_t i = 0; i < net.head_weights.size(); ++i)
    update(net.head_weights[i], opt.first_moment.head_weights[i],
           opt.second_moment.head_weights[i], grad.head_weights[i]);
  for (std::size_t i = 0; i < net.head_biases.size(); ++i)
    update(net.head_biases[i], opt.first_moment.head_biases[i],
           opt.second_moment.head_biases[i], grad.head_biases[i]);
}

double clip_grad_norm(Grad& grad, double max_norm) {
  const double norm = std::sqrt(grad.squared_norm());
  if (norm > max_norm && norm > 0.0) grad.scale(max_norm / norm);
  return norm;
}

namespace {

nlohmann::json grad_to_json(const Grad& g) {
  return nlohmann::json{{"weights", g.weights},
                        {"biases", g.biases},
                        {"head_weights", g.head_weights},
                        {"head_biases", g.head_biases}};
}

void grad_from_json(const nlohmann::json& j, Grad& g) {
  j.at("weights").get_to(g.weights);
  j.at("biases").get_to(g.biases);
  j.at("head_weights").get_to(g.head_weights);
  j.at("head_biases").get_to(g.head_biases);
}

}  // namespace

nlohmann::json mlp_to_json(const Mlp& net) {
  nlohmann::json heads = nlohmann::json::array();
  for (const HeadSpec& h : net.heads)
    heads.push_back({{"size", h.size},
                     {"kind", h.kind == HeadKind::categorical ? "categorical" : "scalar"}});
  return nlohmann::json{{"layer_dims", net.layer_dims},
                        {"heads", heads},
                        {"weights", net.weights},
                        {"biases", net.biases},
                        {"head_weights", net.head_weights},
                        {"head_biases", net.head_biases}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp net;
  j.at("layer_dims").get_to(net.layer_dims);
  for (const auto& h : j.at("heads")) {
    HeadSpec spec;
    spec.size = h.at("size").get<int>();
    const std::string kind = h.at("kind").get<std::string>();
    if (kind == "categorical")
      spec.kind = HeadKind::categorical;
    else if (kind == "scalar")
      spec.kind = HeadKind::scalar;
    else
      throw std::runtime_error("checkpoint: unknown head kind '" + kind + "'");
    net.heads.push_back(spec);
  }
  j.at("weights").get_to(net.weights);
  j.at("biases").get_to(net.biases);
  j.at("head_weights").get_to(net.head_weights);
  j.at("head_biases").get_to(net.head_biases);
  net.validate();
  return net;
}

void save(const Checkpoint& checkpoint, const std::string& path) {
  nlohmann::json j{{"format", "green-oran-checkpoint-v1"},
                   {"config_hash", checkpoint.config_hash},
                   {"net", mlp_to_json(checkpoint.net)},
                   {"adam",
                    {{"step_count", checkpoint.opt.step_count},
                     {"lr", checkpoint.opt.lr},
                     {"beta1", checkpoint.opt.beta1},
                     {"beta2", checkpoint.opt.beta2},
                     {"eps", checkpoint.opt.eps},
                     {"first_moment", grad_to_json(checkpoint.opt.first_moment)},
                     {"second_moment", grad_to_json(checkpoint.opt.second_moment)}}}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("checkpoint: write to '" + path + "' failed");
}

Checkpoint load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint: parse error in '" + path + "': " + e.what());
  }
  Checkpoint cp;
  try {
    if (j.at("format").get<std::string>() != "green-oran-checkpoint-v1")
      throw std::runtime_error("unknown format tag");
    cp.config_hash = j.at("config_hash").get<std::string>();
    cp.net = mlp_from_json(j.at("net"));
    const nlohmann::json& a = j.at("adam");
    cp.opt.step_count = a.at("step_count").get<long>();
    cp.opt.lr = a.at("lr").get<double>();
    cp.opt.beta1 = a.at("beta1").get<double>();
    cp.opt.beta2 = a.at("beta2").get<double>();
    cp.opt.eps = a.at("eps").get<double>();
    grad_from_json(a.at("first_moment"), cp.opt.first_moment);
    grad_from_json(a.at("second_moment"), cp.opt.second_moment);
  } catch (const std::exception& e) {
    throw std::runtime_error("checkpoint: invalid content in '" + path + "': " + e.what());
  }
  return cp;
}

int sample_categorical(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = static_cast<int>(i);
  return best;
}

}  // namespace oran::nn
