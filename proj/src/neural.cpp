#include "rexnet/neural.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "rexnet/errors.hpp"

namespace rexnet {

namespace {

void affine(const DenseLayer& layer, std::span<const float> x,
            std::vector<float>& out) {
  out.assign(layer.b.begin(), layer.b.end());
  for (int r = 0; r < layer.W.rows; ++r) {
    double acc = 0.0;
    const float* wr = layer.W.a.data() + static_cast<std::size_t>(r) * layer.W.cols;
    for (int c = 0; c < layer.W.cols; ++c) acc += static_cast<double>(wr[c]) * x[c];
    out[r] += static_cast<float>(acc);
  }
}

void relu(const std::vector<float>& pre, std::vector<float>& act) {
  act.resize(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) act[i] = pre[i] > 0.0f ? pre[i] : 0.0f;
}

// inverted dropout: scale 0 with probability p, else 1/(1-p)
void draw_mask(std::vector<float>& mask, std::size_t n, float p, ForwardMode mode,
               Rng* rng) {
  mask.assign(n, 1.0f);
  if (mode != ForwardMode::train || p <= 0.0f) return;
  if (!rng) throw ValidationError("train-mode forward with dropout needs an rng");
  const float keep_scale = 1.0f / (1.0f - p);
  for (auto& m : mask) m = rng->uniform() < p ? 0.0f : keep_scale;
}

void run_tower(const std::vector<DenseLayer>& tower, std::span<const float> x,
               std::vector<std::vector<float>>& pre,
               std::vector<std::vector<float>>& act) {
  pre.resize(tower.size());
  act.resize(tower.size());
  for (std::size_t l = 0; l < tower.size(); ++l) {
    affine(tower[l], l == 0 ? x : std::span<const float>(act[l - 1]), pre[l]);
    relu(pre[l], act[l]);
  }
}

}  // namespace

bool TowerNetworkParams::all_finite() const {
  bool ok = true;
  auto& self = const_cast<TowerNetworkParams&>(*this);
  for_each_param(self, [&](float& v) { ok = ok && std::isfinite(v); });
  return ok;
}

TowerNetworkParams init_network(const NetworkConfig& config, std::uint64_t seed) {
  if (config.tower_layers.empty()) {
    throw ValidationError("tower_layers must be non-empty");
  }
  for (std::size_t l = 1; l < config.tower_layers.size(); ++l) {
    if (config.tower_layers[l] > config.tower_layers[l - 1]) {
      throw ValidationError("tower_layers must be non-increasing");
    }
  }
  TowerNetworkParams params;
  params.config = config;
  Rng rng(derive_seed(seed, 3));

  auto make_layer = [&](int in, int out) {
    DenseLayer layer;
    layer.W = Matrix(out, in);
    layer.b.assign(out, 0.0f);
    const double scale = std::sqrt(6.0 / (in + out));
    for (auto& v : layer.W.a) v = static_cast<float>(rng.uniform(-scale, scale));
    return layer;
  };

  auto make_tower = [&] {
    std::vector<DenseLayer> tower;
    int in = config.input_dim;
    for (int width : config.tower_layers) {
      tower.push_back(make_layer(in, width));
      in = width;
    }
    return tower;
  };

  params.user_tower = make_tower();
  params.item_tower = make_tower();
  const int concat = 2 * config.tower_layers.back();
  int fusion_width = concat;
  if (config.shared_layer > 0) {
    params.shared = make_layer(concat, config.shared_layer);
    fusion_width = config.shared_layer;
  }
  params.output_w.assign(fusion_width, 0.0f);
  const double out_scale = std::sqrt(6.0 / (fusion_width + 1));
  for (auto& v : params.output_w) v = static_cast<float>(rng.uniform(-out_scale, out_scale));
  params.output_b = 0.0f;
  return params;
}

float forward(const TowerNetworkParams& params, std::span<const float> user_vec,
              std::span<const float> item_vec, ForwardMode mode, Rng* rng,
              ForwardTrace* trace) {
  const auto& cfg = params.config;
  if (static_cast<int>(user_vec.size()) != cfg.input_dim ||
      static_cast<int>(item_vec.size()) != cfg.input_dim) {
    throw ValidationError("forward: input dimension mismatch");
  }
  ForwardTrace local;
  ForwardTrace& t = trace ? *trace : local;

  run_tower(params.user_tower, user_vec, t.user_pre, t.user_act);
  run_tower(params.item_tower, item_vec, t.item_pre, t.item_act);

  const std::size_t tower_out = t.user_act.back().size();
  draw_mask(t.user_mask, tower_out, cfg.dropout_tower, mode, rng);
  draw_mask(t.item_mask, tower_out, cfg.dropout_tower, mode, rng);

  std::vector<float> fused(2 * tower_out);
  for (std::size_t i = 0; i < tower_out; ++i) {
    fused[i] = t.user_act.back()[i] * t.user_mask[i];
    fused[tower_out + i] = t.item_act.back()[i] * t.item_mask[i];
  }

  std::span<const float> head_input = fused;
  std::vector<float> shared_masked;
  if (cfg.shared_layer > 0) {
    affine(params.shared, fused, t.shared_pre);
    relu(t.shared_pre, t.shared_act);
    draw_mask(t.shared_mask, t.shared_act.size(), cfg.dropout_shared, mode, rng);
    shared_masked.resize(t.shared_act.size());
    for (std::size_t i = 0; i < shared_masked.size(); ++i) {
      shared_masked[i] = t.shared_act[i] * t.shared_mask[i];
    }
    head_input = shared_masked;
  }

  double y = params.output_b;
  for (std::size_t i = 0; i < head_input.size(); ++i) {
    y += static_cast<double>(params.output_w[i]) * head_input[i];
  }
  t.prediction = static_cast<float>(y);
  return t.prediction;
}

double loss(double prediction, double target) {
  const double r = prediction - target;
  return r * r;
}

double loss_gradient(double prediction, double target) {
  return 2.0 * (prediction - target);
}

TowerNetworkParams zero_like(const TowerNetworkParams& params) {
  TowerNetworkParams zero = params;
  for_each_param(zero, [](float& v) { v = 0.0f; });
  return zero;
}

void backward(const TowerNetworkParams& params, std::span<const float> user_vec,
              std::span<const float> item_vec, const ForwardTrace& trace,
              double target, TowerNetworkParams& grads) {
  const auto& cfg = params.config;
  const double dy = loss_gradient(trace.prediction, target);
  const std::size_t tower_out = trace.user_act.back().size();

  std::vector<float> fused(2 * tower_out);
  for (std::size_t i = 0; i < tower_out; ++i) {
    fused[i] = trace.user_act.back()[i] * trace.user_mask[i];
    fused[tower_out + i] = trace.item_act.back()[i] * trace.item_mask[i];
  }

  std::vector<float> d_fused(2 * tower_out, 0.0f);
  if (cfg.shared_layer > 0) {
    // output head over the masked shared activation
    std::vector<float> d_shared_pre(trace.shared_act.size());
    for (std::size_t i = 0; i < trace.shared_act.size(); ++i) {
      const float masked = trace.shared_act[i] * trace.shared_mask[i];
      grads.output_w[i] += static_cast<float>(dy) * masked;
      const double d_masked = dy * params.output_w[i];
      const double d_act = d_masked * trace.shared_mask[i];
      d_shared_pre[i] =
          trace.shared_pre[i] > 0.0f ? static_cast<float>(d_act) : 0.0f;
    }
    grads.output_b += static_cast<float>(dy);
    for (std::size_t r = 0; r < d_shared_pre.size(); ++r) {
      grads.shared.b[r] += d_shared_pre[r];
      for (int c = 0; c < params.shared.W.cols; ++c) {
        grads.shared.W.at(static_cast<int>(r), c) += d_shared_pre[r] * fused[c];
        d_fused[c] += params.shared.W.at(static_cast<int>(r), c) * d_shared_pre[r];
      }
    }
  } else {
    for (std::size_t i = 0; i < fused.size(); ++i) {
      grads.output_w[i] += static_cast<float>(dy) * fused[i];
      d_fused[i] = static_cast<float>(dy) * params.output_w[i];
    }
    grads.output_b += static_cast<float>(dy);
  }

  auto back_tower = [&](const std::vector<DenseLayer>& tower,
                        std::vector<DenseLayer>& tower_grads,
                        const std::vector<std::vector<float>>& pre,
                        const std::vector<std::vector<float>>& act,
                        const std::vector<float>& mask,
                        std::span<const float> input, std::size_t fused_offset) {
    std::vector<float> d_act(tower_out);
    for (std::size_t i = 0; i < tower_out; ++i) {
      d_act[i] = d_fused[fused_offset + i] * mask[i];
    }
    for (int l = static_cast<int>(tower.size()) - 1; l >= 0; --l) {
      std::vector<float> d_pre(pre[l].size());
      for (std::size_t i = 0; i < d_pre.size(); ++i) {
        d_pre[i] = pre[l][i] > 0.0f ? d_act[i] : 0.0f;
      }
      std::span<const float> layer_input =
          l == 0 ? input : std::span<const float>(act[l - 1]);
      std::vector<float> d_below(layer_input.size(), 0.0f);
      for (int r = 0; r < tower[l].W.rows; ++r) {
        tower_grads[l].b[r] += d_pre[r];
        for (int c = 0; c < tower[l].W.cols; ++c) {
          tower_grads[l].W.at(r, c) += d_pre[r] * layer_input[c];
          d_below[c] += tower[l].W.at(r, c) * d_pre[r];
        }
      }
      d_act = std::move(d_below);
    }
  };

  back_tower(params.user_tower, grads.user_tower, trace.user_pre, trace.user_act,
             trace.user_mask, user_vec, 0);
  back_tower(params.item_tower, grads.item_tower, trace.item_pre, trace.item_act,
             trace.item_mask, item_vec, tower_out);
}

std::vector<double> train_network(TowerNetworkParams& params,
                                  const std::vector<TrainExample>& examples,
                                  const NetworkConfig& config) {
  if (examples.empty()) throw ValidationError("train_network: no examples");

  TowerNetworkParams velocity = zero_like(params);
  TowerNetworkParams grads = zero_like(params);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<double> trace;
  trace.reserve(config.epochs);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(config.seed, 70000 + epoch));
    shuffle_rng.shuffle(order.begin(), order.end());
    Rng dropout_rng(derive_seed(config.seed, 80000 + epoch));

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(
          order.size(), start + static_cast<std::size_t>(config.batch_size));
      const auto batch_n = static_cast<double>(end - start);
      for_each_param(grads, [](float& v) { v = 0.0f; });

      for (std::size_t k = start; k < end; ++k) {
        const TrainExample& ex = examples[order[k]];
        ForwardTrace t;
        forward(params, ex.user_vec, ex.item_vec, ForwardMode::train,
                &dropout_rng, &t);
        epoch_loss += loss(t.prediction, ex.target);
        backward(params, ex.user_vec, ex.item_vec, t, ex.target, grads);
      }

      const float lr = static_cast<float>(config.learning_rate);
      const float mom = static_cast<float>(config.momentum);
      float scale = static_cast<float>(1.0 / batch_n);
      if (config.grad_clip > 0.0) {
        double sq = 0.0;
        for_each_param(grads, [&](float& g) {
          sq += static_cast<double>(g) * static_cast<double>(g);
        });
        const double norm = std::sqrt(sq) / batch_n;
        if (norm > config.grad_clip) {
          scale = static_cast<float>(config.grad_clip / (norm * batch_n));
        }
      }
      zip_params(velocity, grads, [&](float& v, float& g) {
        v = mom * v - lr * g * scale;
      });
      zip_params(params, velocity, [](float& p, float& v) { p += v; });
    }

    const double mean_loss = epoch_loss / static_cast<double>(examples.size());
    if (!std::isfinite(mean_loss)) {
      throw TrainingError("network training diverged at epoch " +
                          std::to_string(epoch + 1));
    }
    trace.push_back(mean_loss);
  }
  return trace;
}

float predict_preference(const TowerNetworkParams& params,
                         std::span<const float> user_vec,
                         std::span<const float> item_vec) {
  return forward(params, user_vec, item_vec, ForwardMode::infer);
}

namespace {

constexpr const char* kCheckpointMagic = "rexnet-checkpoint";
constexpr int kCheckpointVersion = 1;

void append_float(std::string& out, float v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

void write_tensor(std::ostream& out, const std::string& name,
                  std::span<const float> data, int rows, int cols) {
  out << "tensor " << name << ' ' << rows << ' ' << cols << '\n';
  std::string line;
  for (int r = 0; r < rows; ++r) {
    line.clear();
    for (int c = 0; c < cols; ++c) {
      if (c) line += ' ';
      append_float(line, data[static_cast<std::size_t>(r) * cols + c]);
    }
    line += '\n';
    out << line;
  }
}

std::vector<float> read_tensor(std::istream& in, const std::string& expect_name,
                               int expect_rows, int expect_cols) {
  std::string tag, name;
  int rows = 0, cols = 0;
  if (!(in >> tag >> name >> rows >> cols) || tag != "tensor") {
    throw ParseError("checkpoint: expected tensor header for " + expect_name);
  }
  if (name != expect_name || rows != expect_rows || cols != expect_cols) {
    throw ParseError("checkpoint: tensor mismatch, got " + name + " " +
                     std::to_string(rows) + "x" + std::to_string(cols) +
                     ", expected " + expect_name + " " +
                     std::to_string(expect_rows) + "x" +
                     std::to_string(expect_cols));
  }
  std::vector<float> data(static_cast<std::size_t>(rows) * cols);
  std::string field;
  for (auto& v : data) {
    if (!(in >> field)) throw ParseError("checkpoint: truncated tensor " + name);
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
      throw ParseError("checkpoint: bad float '" + field + "' in " + name);
    }
  }
  return data;
}

}  // namespace

void save_checkpoint(const TowerNetworkParams& params, std::ostream& out) {
  const auto& cfg = params.config;
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "input_dim " << cfg.input_dim << '\n';
  out << "tower_layers";
  for (int w : cfg.tower_layers) out << ' ' << w;
  out << '\n';
  out << "shared_layer " << cfg.shared_layer << '\n';
  std::string line;
  line = "dropout_tower ";
  append_float(line, cfg.dropout_tower);
  line += "\ndropout_shared ";
  append_float(line, cfg.dropout_shared);
  out << line << '\n';
  auto write_double = [&](const char* name, double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out << name << ' ' << std::string_view(buf, ptr) << '\n';
  };
  write_double("learning_rate", cfg.learning_rate);
  write_double("momentum", cfg.momentum);
  write_double("grad_clip", cfg.grad_clip);
  out << "epochs " << cfg.epochs << '\n';
  out << "batch_size " << cfg.batch_size << '\n';
  out << "seed " << cfg.seed << '\n';

  auto write_layer = [&](const std::string& prefix, const DenseLayer& layer) {
    write_tensor(out, prefix + ".W", layer.W.a, layer.W.rows, layer.W.cols);
    write_tensor(out, prefix + ".b", layer.b, 1, static_cast<int>(layer.b.size()));
  };
  for (std::size_t l = 0; l < params.user_tower.size(); ++l) {
    write_layer("user_tower." + std::to_string(l), params.user_tower[l]);
  }
  for (std::size_t l = 0; l < params.item_tower.size(); ++l) {
    write_layer("item_tower." + std::to_string(l), params.item_tower[l]);
  }
  if (cfg.shared_layer > 0) write_layer("shared", params.shared);
  write_tensor(out, "output.V", params.output_w, 1,
               static_cast<int>(params.output_w.size()));
  const float b_out[1] = {params.output_b};
  write_tensor(out, "output.b", b_out, 1, 1);
}

void save_checkpoint_file(const TowerNetworkParams& params,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  save_checkpoint(params, out);
}

TowerNetworkParams load_checkpoint(std::istream& in) {
  std::string magic, key, line;
  int version = 0;
  if (!(in >> magic >> version) || magic != kCheckpointMagic) {
    throw ParseError("checkpoint: bad magic");
  }
  if (version != kCheckpointVersion) {
    throw ParseError("checkpoint: unsupported version " + std::to_string(version));
  }
  NetworkConfig cfg;
  cfg.tower_layers.clear();
  in >> key >> cfg.input_dim;
  if (key != "input_dim") throw ParseError("checkpoint: expected input_dim");
  in >> key;
  if (key != "tower_layers") throw ParseError("checkpoint: expected tower_layers");
  std::getline(in, line);
  {
    std::istringstream widths(line);
    int w;
    while (widths >> w) cfg.tower_layers.push_back(w);
  }
  in >> key >> cfg.shared_layer;
  if (key != "shared_layer") throw ParseError("checkpoint: expected shared_layer");
  in >> key >> cfg.dropout_tower;
  in >> key >> cfg.dropout_shared;
  in >> key >> cfg.learning_rate;
  in >> key >> cfg.momentum;
  in >> key >> cfg.grad_clip;
  in >> key >> cfg.epochs;
  in >> key >> cfg.batch_size;
  in >> key >> cfg.seed;
  if (key != "seed" || !in) throw ParseError("checkpoint: bad config block");

  TowerNetworkParams params;
  params.config = cfg;
  auto read_layer = [&](const std::string& prefix, int in_w, int out_w) {
    DenseLayer layer;
    layer.W = Matrix(out_w, in_w);
    layer.W.a = read_tensor(in, prefix + ".W", out_w, in_w);
    layer.b = read_tensor(in, prefix + ".b", 1, out_w);
    return layer;
  };
  auto read_tower = [&](const std::string& name) {
    std::vector<DenseLayer> tower;
    int in_w = cfg.input_dim;
    for (std::size_t l = 0; l < cfg.tower_layers.size(); ++l) {
      tower.push_back(read_layer(name + "." + std::to_string(l), in_w,
                                 cfg.tower_layers[l]));
      in_w = cfg.tower_layers[l];
    }
    return tower;
  };
  params.user_tower = read_tower("user_tower");
  params.item_tower = read_tower("item_tower");
  const int concat = 2 * cfg.tower_layers.back();
  int fusion_width = concat;
  if (cfg.shared_layer > 0) {
    params.shared = read_layer("shared", concat, cfg.shared_layer);
    fusion_width = cfg.shared_layer;
  }
  params.output_w = read_tensor(in, "output.V", 1, fusion_width);
  params.output_b = read_tensor(in, "output.b", 1, 1)[0];
  return params;
}

TowerNetworkParams load_checkpoint_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  return load_checkpoint(in);
}

}  // namespace rexnet
