#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rexnet/dataset.hpp"

namespace rexnet {

/// One user's profile rendered as a token sequence. Tokens are dense item
/// indices into the corpus vocabulary; each rated item appears `rating`
/// times.
struct Sentence {
  std::string owner;
  std::vector<int> tokens;
};

class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<Sentence> sentences, std::vector<std::string> vocab,
         std::vector<std::int64_t> counts)
      : sentences_(std::move(sentences)),
        vocab_(std::move(vocab)),
        counts_(std::move(counts)) {}

  const std::vector<Sentence>& sentences() const { return sentences_; }
  const std::vector<std::string>& vocabulary() const { return vocab_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  std::size_t vocab_size() const { return vocab_.size(); }

  std::int64_t total_tokens() const;

 private:
  std::vector<Sentence> sentences_;
  std::vector<std::string> vocab_;  // index -> item id
  std::vector<std::int64_t> counts_;  // index -> corpus occurrence count
};

// One sentence per train user, items repeated `rating` times, appended in
// profile iteration order (deterministic, pre-shuffle). Vocabulary indices
// coincide with the train dataset's item indices.
Corpus build_corpus(const RatingDataset& train);

// Permutes each sentence's tokens independently; sentence-to-user
// assignment and per-sentence multisets are unchanged. Per-sentence
// streams derive from (seed, sentence index), so the result is a pure
// function of (corpus, seed).
Corpus shuffle_corpus(const Corpus& corpus, std::uint64_t seed);

// One line per sentence, space-separated item ids.
void write_corpus(const Corpus& corpus, std::ostream& out);

}  // namespace rexnet
