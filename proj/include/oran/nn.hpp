#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "oran/rng.hpp"

namespace oran::nn {

enum class HeadKind { categorical, scalar };

struct HeadSpec {
  int size = 0;
  HeadKind kind = HeadKind::categorical;
};

// Dense tanh network with independent output heads. 64-bit parameters.
struct Mlp {
  std::vector<int> layer_dims;                    // input + hidden widths
  std::vector<std::vector<double>> weights;       // layer i: dims[i+1] x dims[i], row-major
  std::vector<std::vector<double>> biases;
  std::vector<HeadSpec> heads;
  std::vector<std::vector<double>> head_weights;  // head h: size x feature_dim, row-major
  std::vector<std::vector<double>> head_biases;

  int input_dim() const { return layer_dims.front(); }
  int feature_dim() const { return layer_dims.back(); }
  std::size_t num_params() const;
  void validate() const;
};

// Xavier-uniform weights, zero biases; deterministic under the rng state.
Mlp init(const std::vector<int>& dims, const std::vector<HeadSpec>& heads, Rng& rng);

struct Workspace {
  std::vector<double> input;
  std::vector<std::vector<double>> activations;  // tanh outputs per hidden layer
  std::vector<std::vector<double>> head_logits;
  std::vector<std::vector<double>> head_out;     // softmax probabilities / raw scalar
};

// Categorical heads emit max-stabilized softmax distributions.
void forward(const Mlp& net, std::span<const double> input, Workspace& ws);

// Gradient container mirroring the parameter shapes.
struct Grad {
  std::vector<std::vector<double>> weights, biases, head_weights, head_biases;

  static Grad zeros_like(const Mlp& net);
  void zero();
  void add(const Grad& other, double scale = 1.0);
  void scale(double s);
  double squared_norm() const;
};

// Exact reverse-mode gradients, accumulated (+=) into `accum`.
// `upstream[h]` is dL/d(logits) for categorical heads and dL/d(output) for
// scalar heads; softmax Jacobians are the caller's responsibility, which
// lets cross-entropy-style losses feed (q - p) directly.
void backward(const Mlp& net, const Workspace& ws,
              const std::vector<std::vector<double>>& upstream, Grad& accum);

// Batch kernels. Rows are independent; the gradient reduction runs over
// fixed blocks of kReduceBlock rows in index order, so results are
// bit-identical for any thread count.
inline constexpr int kReduceBlock = 16;

void forward_batch(const Mlp& net, const std::vector<std::vector<double>>& inputs,
                   std::vector<Workspace>& ws);
void backward_batch(const Mlp& net, const std::vector<Workspace>& ws,
                    const std::vector<std::vector<std::vector<double>>>& upstream, Grad& out);

struct AdamState {
  Grad first_moment, second_moment;
  long step_count = 0;
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999;
  double eps = 1e-8;

  static AdamState create(const Mlp& net, double lr);
};

void adam_step(Mlp& net, const Grad& grad, AdamState& opt);

// Rescales grad to max_norm when exceeded; returns the pre-clip norm.
double clip_grad_norm(Grad& grad, double max_norm);

struct Checkpoint {
  Mlp net;
  AdamState opt;
  std::string config_hash;
};

// JSON round trip; doubles survive bit-exactly. Malformed or truncated
// files raise std::runtime_error naming the path, leaving no partial state.
void save(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load(const std::string& path);

nlohmann::json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

// Categorical sampling / argmax over a probability vector.
int sample_categorical(std::span<const double> probs, Rng& rng);
int argmax(std::span<const double> values);

}  // namespace oran::nn
