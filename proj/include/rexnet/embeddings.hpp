#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rexnet/corpus.hpp"
#include "rexnet/rng.hpp"
#include "rexnet/vector_table.hpp"

namespace rexnet {

enum class EmbeddingMethod { sgns, glove };

struct EmbeddingConfig {
  int dim = 100;
  int window = 25;  // half-width: distances 1..window on each side
  EmbeddingMethod method = EmbeddingMethod::sgns;
  int epochs = 15;
  // 0 selects the method default: 0.025 for SGNS, 0.05 for GloVe
  double learning_rate = 0.0;
  int negatives_k = 5;       // SGNS
  double noise_power = 0.75;  // SGNS
  double x_max = 100.0;  // GloVe
  double alpha = 0.75;   // GloVe
  bool reshuffle_per_epoch = true;
  bool glove_export_input_only = false;
  int threads = 1;  // >1: hogwild-style, non-deterministic
  std::uint64_t seed = 1;

  double effective_learning_rate() const {
    if (learning_rate > 0.0) return learning_rate;
    return method == EmbeddingMethod::sgns ? 0.025 : 0.05;
  }
};

/// Input (v_w) and output/context (v'_w) vectors over the corpus
/// vocabulary; row r corresponds to corpus token index r.
struct EmbeddingTable {
  VectorTable input;
  VectorTable output;

  int dim() const { return input.dim(); }

  // Item vectors handed to the rest of the pipeline: the input table for
  // SGNS, input + output sum for GloVe (switchable for ablation).
  VectorTable exported(bool input_only) const;
};

struct GloveBiases {
  std::vector<float> b;
  std::vector<float> b_tilde;
};

/// Sparse symmetric co-occurrence counts; zero entries are not stored.
class CooccurrenceMatrix {
 public:
  struct Entry {
    int row;
    int col;
    double count;
  };

  CooccurrenceMatrix() = default;
  explicit CooccurrenceMatrix(std::vector<std::string> vocabulary)
      : vocab_(std::move(vocabulary)) {}

  const std::vector<std::string>& vocabulary() const { return vocab_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  std::size_t nnz() const { return counts_.size(); }
  bool empty() const { return counts_.empty(); }

  void add(int row, int col, double amount);
  double at(int row, int col) const;

  // entries in (row, col) order — deterministic iteration for training
  std::vector<Entry> entries() const;

  void dump(std::ostream& out) const;  // `<row> <col> <count>` triples

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::uint64_t, double> counts_;
};

// +1 per (token, neighbor) pair within distance 1..window inside a
// sentence, both directions, unweighted. Windows never cross sentences.
CooccurrenceMatrix build_cooccurrence(const Corpus& corpus, int window);

// piecewise GloVe weighting: (x/x_max)^alpha below x_max, else 1
double glove_weight(double x, double x_max, double alpha);

// Weighted squared residual of one matrix entry:
//   f(x) * (w . w_tilde + b + b_tilde - log x)^2
// When grad spans are non-empty, writes the analytic gradients.
double glove_entry_loss(std::span<const float> w, std::span<const float> w_tilde,
                        float b, float b_tilde, double x, double x_max,
                        double alpha, std::span<float> grad_w = {},
                        std::span<float> grad_w_tilde = {},
                        float* grad_b = nullptr, float* grad_b_tilde = nullptr);

struct GloveResult {
  EmbeddingTable table;
  GloveBiases biases;
  std::vector<double> loss_trace;  // mean weighted residual per epoch
};

// AdaGrad-style per-parameter steps over the nonzero entries.
// Throws TrainingError (naming the epoch) on divergence.
GloveResult train_glove(const CooccurrenceMatrix& cooc,
                        const EmbeddingConfig& config);

// Eq-style negative-sampling pair objective:
//   log s(ctx . center) + sum_i log s(-neg_i . center)
double sgns_pair_objective(std::span<const float> center,
                           std::span<const float> context_out,
                           const std::vector<std::span<const float>>& negative_outs);

// Analytic gradients of the pair objective with respect to every
// argument; each grad span must match the vector dimension.
void sgns_pair_gradients(std::span<const float> center,
                         std::span<const float> context_out,
                         const std::vector<std::span<const float>>& negative_outs,
                         std::span<float> grad_center,
                         std::span<float> grad_context,
                         std::vector<std::vector<float>>& grad_negatives);

/// Unigram noise distribution, counts raised to noise_power.
class NoiseTable {
 public:
  NoiseTable(const std::vector<std::int64_t>& counts, double noise_power);

  int draw(Rng& rng) const;
  double probability(int token) const;

 private:
  std::vector<double> cumulative_;
};

inline int draw_negative(const NoiseTable& noise, Rng& rng) {
  return noise.draw(rng);
}

struct SgnsResult {
  EmbeddingTable table;
  std::vector<double> objective_trace;  // mean pair objective per epoch
};

// One SGD ascent step per in-window (center, context) pair, k noise
// draws each. Deterministic for threads == 1.
SgnsResult train_sgns(const Corpus& corpus, const EmbeddingConfig& config);

// Dispatches on config.method; returns the exported item vectors plus the
// per-epoch trace.
struct EmbeddingRunResult {
  VectorTable items;
  std::vector<double> trace;
};
EmbeddingRunResult train_embeddings(const Corpus& corpus,
                                    const EmbeddingConfig& config);

}  // namespace rexnet
