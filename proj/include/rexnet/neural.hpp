#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rexnet/rng.hpp"

namespace rexnet {

struct NetworkConfig {
  int input_dim = 100;
  std::vector<int> tower_layers = {30, 20, 10, 5};
  int shared_layer = 5;  // 0 disables the shared layer (linear fusion only)
  float dropout_tower = 0.4f;   // after the last tower layer
  float dropout_shared = 0.2f;  // after the shared layer
  double learning_rate = 0.01;
  double momentum = 0.9;
  // cap on the global L2 norm of the mean batch gradient; keeps training
  // stable for large unnormalized user vectors (long profiles). 0 disables.
  double grad_clip = 5.0;
  int epochs = 30;
  int batch_size = 64;
  std::uint64_t seed = 1;
};

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<float> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c) {}
  float& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  float at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
};

struct DenseLayer {
  Matrix W;
  std::vector<float> b;
};

struct TowerNetworkParams {
  NetworkConfig config;
  std::vector<DenseLayer> user_tower;
  std::vector<DenseLayer> item_tower;
  DenseLayer shared;            // empty when config.shared_layer == 0
  std::vector<float> output_w;  // V
  float output_b = 0.0f;        // b_{n+1}

  bool all_finite() const;
};

// Glorot-uniform weights (scale sqrt(6/(fan_in+fan_out))), zero biases.
TowerNetworkParams init_network(const NetworkConfig& config, std::uint64_t seed);

enum class ForwardMode { train, infer };

struct ForwardTrace {
  // pre-activations and post-ReLU activations per tower layer
  std::vector<std::vector<float>> user_pre, user_act;
  std::vector<std::vector<float>> item_pre, item_act;
  std::vector<float> shared_pre, shared_act;
  // inverted-dropout scales actually applied (0 or 1/(1-p); 1 in infer mode)
  std::vector<float> user_mask, item_mask, shared_mask;
  float prediction = 0.0f;
};

// In train mode `rng` drives the dropout masks and must be non-null when
// a dropout rate is nonzero. Trace output is optional.
float forward(const TowerNetworkParams& params, std::span<const float> user_vec,
              std::span<const float> item_vec, ForwardMode mode,
              Rng* rng = nullptr, ForwardTrace* trace = nullptr);

double loss(double prediction, double target);
double loss_gradient(double prediction, double target);

// Accumulates d(loss)/d(param) for one example into `grads` (same shapes
// as params, zero-initialized via init_zero_like). Uses the masks stored
// in the trace, so it is exact for both dropout and no-dropout passes.
void backward(const TowerNetworkParams& params, std::span<const float> user_vec,
              std::span<const float> item_vec, const ForwardTrace& trace,
              double target, TowerNetworkParams& grads);

TowerNetworkParams zero_like(const TowerNetworkParams& params);

// Applies fn to every parameter scalar of each struct in lockstep.
template <typename F>
void zip_params(TowerNetworkParams& a, TowerNetworkParams& b, F&& fn) {
  auto layer = [&](DenseLayer& la, DenseLayer& lb) {
    for (std::size_t i = 0; i < la.W.a.size(); ++i) fn(la.W.a[i], lb.W.a[i]);
    for (std::size_t i = 0; i < la.b.size(); ++i) fn(la.b[i], lb.b[i]);
  };
  for (std::size_t l = 0; l < a.user_tower.size(); ++l)
    layer(a.user_tower[l], b.user_tower[l]);
  for (std::size_t l = 0; l < a.item_tower.size(); ++l)
    layer(a.item_tower[l], b.item_tower[l]);
  if (a.config.shared_layer > 0) layer(a.shared, b.shared);
  for (std::size_t i = 0; i < a.output_w.size(); ++i)
    fn(a.output_w[i], b.output_w[i]);
  fn(a.output_b, b.output_b);
}

template <typename F>
void for_each_param(TowerNetworkParams& p, F&& fn) {
  zip_params(p, p, [&](float& v, float&) { fn(v); });
}

struct TrainExample {
  std::vector<float> user_vec;
  std::vector<float> item_vec;
  float target = 0.0f;  // rating - user mean
};

// Mini-batch SGD with momentum; examples reshuffled per epoch (seeded).
// Returns per-epoch mean training loss. Throws TrainingError (with the
// epoch index) if the loss goes non-finite.
std::vector<double> train_network(TowerNetworkParams& params,
                                  const std::vector<TrainExample>& examples,
                                  const NetworkConfig& config);

float predict_preference(const TowerNetworkParams& params,
                         std::span<const float> user_vec,
                         std::span<const float> item_vec);

// Versioned structured-text checkpoint; round-trips bit-exactly.
void save_checkpoint(const TowerNetworkParams& params, std::ostream& out);
void save_checkpoint_file(const TowerNetworkParams& params,
                          const std::string& path);
TowerNetworkParams load_checkpoint(std::istream& in);
TowerNetworkParams load_checkpoint_file(const std::string& path);

}  // namespace rexnet
