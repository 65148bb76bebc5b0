#include "rexnet/corpus.hpp"

#include <numeric>
#include <ostream>

#include "rexnet/errors.hpp"
#include "rexnet/rng.hpp"

namespace rexnet {

std::int64_t Corpus::total_tokens() const {
  std::int64_t total = 0;
  for (const auto& s : sentences_) total += static_cast<std::int64_t>(s.tokens.size());
  return total;
}

Corpus build_corpus(const RatingDataset& train) {
  if (train.empty()) throw ValidationError("cannot build corpus from empty train split");
  std::vector<std::string> vocab(train.item_count());
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    vocab[i] = train.item_id(static_cast<int>(i));
  }
  std::vector<std::int64_t> counts(vocab.size(), 0);
  std::vector<Sentence> sentences;
  sentences.reserve(train.user_count());
  for (std::size_t u = 0; u < train.user_count(); ++u) {
    Sentence sentence;
    sentence.owner = train.user_id(static_cast<int>(u));
    for (const auto& [item, rating] : train.profile(static_cast<int>(u))) {
      for (int r = 0; r < rating; ++r) sentence.tokens.push_back(item);
      counts[item] += rating;
    }
    sentences.push_back(std::move(sentence));
  }
  return Corpus(std::move(sentences), std::move(vocab), std::move(counts));
}

Corpus shuffle_corpus(const Corpus& corpus, std::uint64_t seed) {
  std::vector<Sentence> shuffled = corpus.sentences();
  for (std::size_t s = 0; s < shuffled.size(); ++s) {
    Rng rng(derive_seed(seed, s));
    rng.shuffle(shuffled[s].tokens.begin(), shuffled[s].tokens.end());
  }
  return Corpus(std::move(shuffled), corpus.vocabulary(), corpus.counts());
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& sentence : corpus.sentences()) {
    for (std::size_t t = 0; t < sentence.tokens.size(); ++t) {
      if (t) out << ' ';
      out << corpus.vocabulary()[sentence.tokens[t]];
    }
    out << '\n';
  }
}

}  // namespace rexnet
