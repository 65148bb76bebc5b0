#include <algorithm>
#include <ostream>

#include "rexnet/embeddings.hpp"
#include "rexnet/errors.hpp"

namespace rexnet {

namespace {
std::uint64_t key_of(int row, int col) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(row)) << 32) |
         static_cast<std::uint32_t>(col);
}
}  // namespace

void CooccurrenceMatrix::add(int row, int col, double amount) {
  counts_[key_of(row, col)] += amount;
}

double CooccurrenceMatrix::at(int row, int col) const {
  auto it = counts_.find(key_of(row, col));
  return it == counts_.end() ? 0.0 : it->second;
}

std::vector<CooccurrenceMatrix::Entry> CooccurrenceMatrix::entries() const {
  std::vector<Entry> result;
  result.reserve(counts_.size());
  for (const auto& [key, count] : counts_) {
    result.push_back({static_cast<int>(key >> 32),
                      static_cast<int>(key & 0xffffffffULL), count});
  }
  std::sort(result.begin(), result.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  return result;
}

void CooccurrenceMatrix::dump(std::ostream& out) const {
  for (const auto& e : entries()) {
    out << e.row << ' ' << e.col << ' ' << e.count << '\n';
  }
}

CooccurrenceMatrix build_cooccurrence(const Corpus& corpus, int window) {
  if (window < 1) throw ValidationError("window must be >= 1");
  CooccurrenceMatrix matrix(corpus.vocabulary());
  for (const auto& sentence : corpus.sentences()) {
    const auto& tokens = sentence.tokens;
    const auto len = static_cast<std::ptrdiff_t>(tokens.size());
    for (std::ptrdiff_t t = 0; t < len; ++t) {
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(t + window, len - 1);
      for (std::ptrdiff_t j = t + 1; j <= hi; ++j) {
        matrix.add(tokens[t], tokens[j], 1.0);
        matrix.add(tokens[j], tokens[t], 1.0);
      }
    }
  }
  return matrix;
}

}  // namespace rexnet
