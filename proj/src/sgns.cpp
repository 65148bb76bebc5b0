#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "rexnet/embeddings.hpp"
#include "rexnet/errors.hpp"

namespace rexnet {

namespace {
double log_sigmoid(double x) {
  // log(1/(1+e^-x)), stable on both tails
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

double sgns_pair_objective(std::span<const float> center,
                           std::span<const float> context_out,
                           const std::vector<std::span<const float>>& negative_outs) {
  auto dot = [&](std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) s += static_cast<double>(a[c]) * b[c];
    return s;
  };
  double objective = log_sigmoid(dot(context_out, center));
  for (const auto& neg : negative_outs) {
    objective += log_sigmoid(-dot(neg, center));
  }
  return objective;
}

void sgns_pair_gradients(std::span<const float> center,
                         std::span<const float> context_out,
                         const std::vector<std::span<const float>>& negative_outs,
                         std::span<float> grad_center,
                         std::span<float> grad_context,
                         std::vector<std::vector<float>>& grad_negatives) {
  const std::size_t d = center.size();
  auto dot = [&](std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += static_cast<double>(a[c]) * b[c];
    return s;
  };
  for (std::size_t c = 0; c < d; ++c) grad_center[c] = 0.0f;

  const double g_pos = 1.0 - sigmoid(dot(context_out, center));
  for (std::size_t c = 0; c < d; ++c) {
    grad_context[c] = static_cast<float>(g_pos * center[c]);
    grad_center[c] += static_cast<float>(g_pos * context_out[c]);
  }
  grad_negatives.assign(negative_outs.size(), std::vector<float>(d, 0.0f));
  for (std::size_t i = 0; i < negative_outs.size(); ++i) {
    const double g_neg = -sigmoid(dot(negative_outs[i], center));
    for (std::size_t c = 0; c < d; ++c) {
      grad_negatives[i][c] = static_cast<float>(g_neg * center[c]);
      grad_center[c] += static_cast<float>(g_neg * negative_outs[i][c]);
    }
  }
}

NoiseTable::NoiseTable(const std::vector<std::int64_t>& counts,
                       double noise_power) {
  if (counts.empty()) throw ValidationError("noise table needs a nonempty vocabulary");
  cumulative_.resize(counts.size());
  double running = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    running += std::pow(static_cast<double>(counts[i]), noise_power);
    cumulative_[i] = running;
  }
  if (running <= 0.0) throw ValidationError("noise table has zero total mass");
  for (auto& v : cumulative_) v /= running;
}

int NoiseTable::draw(Rng& rng) const {
  const double u = rng.uniform();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return static_cast<int>(it - cumulative_.begin());
}

double NoiseTable::probability(int token) const {
  const double hi = cumulative_[token];
  const double lo = token == 0 ? 0.0 : cumulative_[token - 1];
  return hi - lo;
}

namespace {

struct SgnsState {
  int dim;
  std::vector<float> input;   // v_w
  std::vector<float> output;  // v'_w
};

// gradient-ascent step for one (center, context) pair plus k negatives;
// returns the pair objective before the update
double sgns_step(SgnsState& s, int center, int context, int k,
                 const NoiseTable& noise, Rng& rng, double lr,
                 std::vector<float>& center_accum) {
  const int d = s.dim;
  float* v_center = s.input.data() + static_cast<std::size_t>(center) * d;
  std::fill(center_accum.begin(), center_accum.end(), 0.0f);
  double objective = 0.0;

  auto update_one = [&](int out_token, double label) {
    float* v_out = s.output.data() + static_cast<std::size_t>(out_token) * d;
    double dot = 0.0;
    for (int c = 0; c < d; ++c) dot += static_cast<double>(v_out[c]) * v_center[c];
    objective += label > 0.5 ? log_sigmoid(dot) : log_sigmoid(-dot);
    const float g = static_cast<float>(lr * (label - sigmoid(dot)));
    for (int c = 0; c < d; ++c) {
      center_accum[c] += g * v_out[c];
      v_out[c] += g * v_center[c];
    }
  };

  update_one(context, 1.0);
  for (int i = 0; i < k; ++i) {
    int neg = noise.draw(rng);
    update_one(neg, 0.0);
  }
  for (int c = 0; c < d; ++c) v_center[c] += center_accum[c];
  return objective;
}

std::int64_t count_pairs(const Corpus& corpus, int window) {
  std::int64_t pairs = 0;
  for (const auto& sentence : corpus.sentences()) {
    const auto len = static_cast<std::int64_t>(sentence.tokens.size());
    for (std::int64_t t = 0; t < len; ++t) {
      pairs += std::min<std::int64_t>(t, window) +
               std::min<std::int64_t>(len - 1 - t, window);
    }
  }
  return pairs;
}

}  // namespace

SgnsResult train_sgns(const Corpus& corpus, const EmbeddingConfig& config) {
  if (config.method != EmbeddingMethod::sgns) {
    throw ValidationError("train_sgns called with non-sgns config");
  }
  if (corpus.vocab_size() == 0) throw ValidationError("empty corpus vocabulary");

  const int d = config.dim;
  const std::size_t vocab = corpus.vocab_size();
  const double lr0 = config.effective_learning_rate();

  SgnsState state;
  state.dim = d;
  state.input.resize(vocab * d);
  state.output.assign(vocab * d, 0.0f);  // word2vec convention
  Rng init_rng(derive_seed(config.seed, 29));
  const double bound = 0.5 / d;
  for (auto& v : state.input) v = static_cast<float>(init_rng.uniform(-bound, bound));

  NoiseTable noise(corpus.counts(), config.noise_power);

  const std::int64_t pairs_per_epoch = count_pairs(corpus, config.window);
  const std::int64_t total_pairs =
      std::max<std::int64_t>(1, pairs_per_epoch * config.epochs);
  std::int64_t processed = 0;

  auto run_sentences = [&](const Corpus& epoch_corpus, std::size_t lo,
                           std::size_t hi, Rng& rng, std::int64_t& local_processed,
                           double& objective_sum, std::int64_t& pair_count) {
    std::vector<float> center_accum(d, 0.0f);
    for (std::size_t s = lo; s < hi; ++s) {
      const auto& tokens = epoch_corpus.sentences()[s].tokens;
      const auto len = static_cast<std::ptrdiff_t>(tokens.size());
      for (std::ptrdiff_t t = 0; t < len; ++t) {
        const std::ptrdiff_t a = std::max<std::ptrdiff_t>(0, t - config.window);
        const std::ptrdiff_t b = std::min<std::ptrdiff_t>(len - 1, t + config.window);
        for (std::ptrdiff_t j = a; j <= b; ++j) {
          if (j == t) continue;
          const double progress =
              static_cast<double>(processed + local_processed) / total_pairs;
          const double lr = lr0 * std::max(1e-4, 1.0 - progress);
          objective_sum += sgns_step(state, tokens[t], tokens[j],
                                     config.negatives_k, noise, rng, lr,
                                     center_accum);
          ++pair_count;
          ++local_processed;
        }
      }
    }
  };

  std::vector<double> trace;
  trace.reserve(config.epochs);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const Corpus epoch_corpus =
        config.reshuffle_per_epoch
            ? shuffle_corpus(corpus, derive_seed(config.seed, 9000 + epoch))
            : corpus;

    double objective_sum = 0.0;
    std::int64_t pair_count = 0;
    if (config.threads <= 1) {
      Rng rng(derive_seed(config.seed, 40000 + epoch));
      std::int64_t local = 0;
      run_sentences(epoch_corpus, 0, epoch_corpus.sentences().size(), rng,
                    local, objective_sum, pair_count);
      processed += local;
    } else {
      const std::size_t n = epoch_corpus.sentences().size();
      const std::size_t per = (n + config.threads - 1) / config.threads;
      std::vector<double> shard_obj(config.threads, 0.0);
      std::vector<std::int64_t> shard_pairs(config.threads, 0);
      std::vector<std::thread> workers;
      for (int t = 0; t < config.threads; ++t) {
        workers.emplace_back([&, t] {
          Rng rng(derive_seed(config.seed, 40000 + epoch * 131 + t));
          std::int64_t local = 0;
          run_sentences(epoch_corpus, t * per, std::min(n, (t + 1) * per), rng,
                        local, shard_obj[t], shard_pairs[t]);
        });
      }
      for (auto& w : workers) w.join();
      objective_sum = std::accumulate(shard_obj.begin(), shard_obj.end(), 0.0);
      pair_count = std::accumulate(shard_pairs.begin(), shard_pairs.end(),
                                   std::int64_t{0});
      processed += pair_count;
    }

    const double mean_objective =
        pair_count > 0 ? objective_sum / static_cast<double>(pair_count) : 0.0;
    if (!std::isfinite(mean_objective)) {
      throw TrainingError("sgns diverged at epoch " + std::to_string(epoch + 1));
    }
    trace.push_back(mean_objective);
  }

  SgnsResult result;
  result.table.input = VectorTable(d);
  result.table.output = VectorTable(d);
  for (std::size_t i = 0; i < vocab; ++i) {
    const int r_in = result.table.input.add(corpus.vocabulary()[i]);
    const int r_out = result.table.output.add(corpus.vocabulary()[i]);
    auto in = result.table.input.row(r_in);
    auto out = result.table.output.row(r_out);
    for (int c = 0; c < d; ++c) {
      in[c] = state.input[i * d + c];
      out[c] = state.output[i * d + c];
    }
  }
  result.objective_trace = std::move(trace);
  return result;
}

EmbeddingRunResult train_embeddings(const Corpus& corpus,
                                    const EmbeddingConfig& config) {
  EmbeddingRunResult result;
  if (config.method == EmbeddingMethod::sgns) {
    auto sgns = train_sgns(corpus, config);
    result.items = sgns.table.exported(/*input_only=*/true);
    result.trace = std::move(sgns.objective_trace);
  } else {
    // GloVe reads the corpus once; per-epoch reshuffling shows up as the
    // shuffled entry visit order inside train_glove.
    auto cooc = build_cooccurrence(corpus, config.window);
    auto glove = train_glove(cooc, config);
    result.items = glove.table.exported(config.glove_export_input_only);
    result.trace = std::move(glove.loss_trace);
  }
  return result;
}

}  // namespace rexnet
