#include <cmath>
#include <numeric>
#include <thread>

#include "rexnet/embeddings.hpp"
#include "rexnet/errors.hpp"

namespace rexnet {

VectorTable EmbeddingTable::exported(bool input_only) const {
  if (input_only) return input;
  VectorTable combined(input.dim());
  for (std::size_t r = 0; r < input.size(); ++r) {
    const int row = combined.add(input.ids()[r]);
    auto dest = combined.row(row);
    auto in = input.row(static_cast<int>(r));
    auto out = output.row(static_cast<int>(r));
    for (int c = 0; c < input.dim(); ++c) dest[c] = in[c] + out[c];
  }
  return combined;
}

double glove_weight(double x, double x_max, double alpha) {
  if (x >= x_max) return 1.0;
  if (x <= 0.0) return 0.0;
  return std::pow(x / x_max, alpha);
}

double glove_entry_loss(std::span<const float> w, std::span<const float> w_tilde,
                        float b, float b_tilde, double x, double x_max,
                        double alpha, std::span<float> grad_w,
                        std::span<float> grad_w_tilde, float* grad_b,
                        float* grad_b_tilde) {
  double dot = 0.0;
  for (std::size_t c = 0; c < w.size(); ++c) dot += static_cast<double>(w[c]) * w_tilde[c];
  const double diff = dot + b + b_tilde - std::log(x);
  const double f = glove_weight(x, x_max, alpha);
  const double scale = 2.0 * f * diff;
  if (!grad_w.empty()) {
    for (std::size_t c = 0; c < w.size(); ++c) {
      grad_w[c] = static_cast<float>(scale * w_tilde[c]);
    }
  }
  if (!grad_w_tilde.empty()) {
    for (std::size_t c = 0; c < w.size(); ++c) {
      grad_w_tilde[c] = static_cast<float>(scale * w[c]);
    }
  }
  if (grad_b) *grad_b = static_cast<float>(scale);
  if (grad_b_tilde) *grad_b_tilde = static_cast<float>(scale);
  return f * diff * diff;
}

namespace {

struct GloveState {
  int dim;
  std::vector<float> w, w_tilde, b, b_tilde;
  // AdaGrad accumulators, initialized to 1 so early steps stay bounded
  std::vector<float> gw, gw_tilde, gb, gb_tilde;
};

// one SGD/AdaGrad step on a single matrix entry; returns its loss
double glove_step(GloveState& s, int row, int col, double x, double x_max,
                  double alpha, double lr) {
  const int d = s.dim;
  float* w = s.w.data() + static_cast<std::size_t>(row) * d;
  float* wt = s.w_tilde.data() + static_cast<std::size_t>(col) * d;
  float* gw = s.gw.data() + static_cast<std::size_t>(row) * d;
  float* gwt = s.gw_tilde.data() + static_cast<std::size_t>(col) * d;

  double dot = 0.0;
  for (int c = 0; c < d; ++c) dot += static_cast<double>(w[c]) * wt[c];
  const double diff = dot + s.b[row] + s.b_tilde[col] - std::log(x);
  const double f = glove_weight(x, x_max, alpha);
  const double scale = 2.0 * f * diff;

  for (int c = 0; c < d; ++c) {
    const float grad_w = static_cast<float>(scale * wt[c]);
    const float grad_wt = static_cast<float>(scale * w[c]);
    w[c] -= static_cast<float>(lr) * grad_w / std::sqrt(gw[c]);
    wt[c] -= static_cast<float>(lr) * grad_wt / std::sqrt(gwt[c]);
    gw[c] += grad_w * grad_w;
    gwt[c] += grad_wt * grad_wt;
  }
  const float grad_b = static_cast<float>(scale);
  s.b[row] -= static_cast<float>(lr) * grad_b / std::sqrt(s.gb[row]);
  s.b_tilde[col] -= static_cast<float>(lr) * grad_b / std::sqrt(s.gb_tilde[col]);
  s.gb[row] += grad_b * grad_b;
  s.gb_tilde[col] += grad_b * grad_b;

  return f * diff * diff;
}

}  // namespace

GloveResult train_glove(const CooccurrenceMatrix& cooc,
                        const EmbeddingConfig& config) {
  if (config.method != EmbeddingMethod::glove) {
    throw ValidationError("train_glove called with non-glove config");
  }
  if (cooc.empty()) throw ValidationError("empty co-occurrence matrix");

  const int d = config.dim;
  const auto vocab = cooc.vocab_size();
  const double lr = config.effective_learning_rate();

  GloveState state;
  state.dim = d;
  state.w.resize(vocab * d);
  state.w_tilde.resize(vocab * d);
  state.b.assign(vocab, 0.0f);
  state.b_tilde.assign(vocab, 0.0f);
  state.gw.assign(vocab * d, 1.0f);
  state.gw_tilde.assign(vocab * d, 1.0f);
  state.gb.assign(vocab, 1.0f);
  state.gb_tilde.assign(vocab, 1.0f);

  Rng init_rng(derive_seed(config.seed, 17));
  const double bound = 0.5 / d;
  for (auto& v : state.w) v = static_cast<float>(init_rng.uniform(-bound, bound));
  for (auto& v : state.w_tilde) v = static_cast<float>(init_rng.uniform(-bound, bound));

  auto entries = cooc.entries();
  std::vector<double> loss_trace;
  loss_trace.reserve(config.epochs);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng order_rng(derive_seed(config.seed, 500 + epoch));
    order_rng.shuffle(entries.begin(), entries.end());

    double loss_sum = 0.0;
    if (config.threads <= 1) {
      for (const auto& e : entries) {
        loss_sum += glove_step(state, e.row, e.col, e.count, config.x_max,
                               config.alpha, lr);
      }
    } else {
      // hogwild-style: shards update shared parameters without locks
      std::vector<double> shard_loss(config.threads, 0.0);
      std::vector<std::thread> workers;
      const std::size_t per = (entries.size() + config.threads - 1) / config.threads;
      for (int t = 0; t < config.threads; ++t) {
        workers.emplace_back([&, t] {
          const std::size_t lo = t * per;
          const std::size_t hi = std::min(entries.size(), lo + per);
          double local = 0.0;
          for (std::size_t k = lo; k < hi; ++k) {
            local += glove_step(state, entries[k].row, entries[k].col,
                                entries[k].count, config.x_max, config.alpha, lr);
          }
          shard_loss[t] = local;
        });
      }
      for (auto& w : workers) w.join();
      loss_sum = std::accumulate(shard_loss.begin(), shard_loss.end(), 0.0);
    }

    const double mean_loss = loss_sum / static_cast<double>(entries.size());
    if (!std::isfinite(mean_loss)) {
      throw TrainingError("glove diverged at epoch " + std::to_string(epoch + 1));
    }
    loss_trace.push_back(mean_loss);
  }

  GloveResult result;
  result.table.input = VectorTable(d);
  result.table.output = VectorTable(d);
  result.biases.b = state.b;
  result.biases.b_tilde = state.b_tilde;
  result.loss_trace = std::move(loss_trace);
  // row order matches token index order
  for (std::size_t i = 0; i < vocab; ++i) {
    const int r_in = result.table.input.add(cooc.vocabulary()[i]);
    const int r_out = result.table.output.add(cooc.vocabulary()[i]);
    auto in = result.table.input.row(r_in);
    auto out = result.table.output.row(r_out);
    for (int c = 0; c < d; ++c) {
      in[c] = state.w[i * d + c];
      out[c] = state.w_tilde[i * d + c];
    }
  }
  return result;
}

}  // namespace rexnet
