#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "rexnet/dataset.hpp"
#include "rexnet/neural.hpp"
#include "rexnet/vector_table.hpp"

namespace rexnet {

enum class NdcgDenominator {
  standard,  // log2(i + 1)
  paper,     // log2(i) + 1
};

// NDCG@n with gain 2^r - 1 over the first min(n, len) positions,
// normalized by the ideal (descending-rating) ordering. Returns 1 when
// the ideal DCG is zero. Throws ValidationError for n < 1 or an empty
// list.
double ndcg_at_n(const std::vector<int>& true_ratings_in_predicted_order, int n,
                 NdcgDenominator denominator = NdcgDenominator::standard);

struct RankedList {
  std::string user;
  std::vector<std::string> items;  // descending predicted preference
  std::vector<int> ratings;        // aligned true ratings
  std::size_t cold_items = 0;      // test items skipped for lack of embedding
};

// Scores each test item with the model and sorts descending; ties break
// by ascending row index in the item table. Items without embeddings are
// skipped and counted.
RankedList rank_test_items(const TowerNetworkParams& model,
                           std::span<const float> user_vec,
                           const std::vector<std::pair<std::string, int>>& test_items,
                           const VectorTable& items);

struct SingleRunEval {
  std::map<int, double> mean_ndcg;  // cutoff -> mean over evaluated users
  std::size_t evaluated_users = 0;
  std::size_t cold_items = 0;
};

// Mean NDCG per cutoff over every test user with at least one embeddable
// test item. Throws ValidationError on an empty test split.
SingleRunEval evaluate(const TowerNetworkParams& model, const SplitPair& split,
                       const VectorTable& items, const VectorTable& users,
                       const std::vector<int>& cutoffs,
                       NdcgDenominator denominator = NdcgDenominator::standard);

/// Aggregates single-run means across seeds into the mean +/- std layout.
class EvalReport {
 public:
  void add_run(std::uint64_t seed, const SingleRunEval& run);

  std::size_t runs() const { return seeds_.size(); }
  const std::vector<std::uint64_t>& seeds() const { return seeds_; }
  std::vector<int> cutoffs() const;
  double mean(int cutoff) const;
  double stddev(int cutoff) const;  // sample stddev; 0 for a single run

  // machine-parseable key/value lines followed by an aligned table
  void write(std::ostream& out, const std::string& label) const;

 private:
  std::vector<std::uint64_t> seeds_;
  std::map<int, std::vector<double>> values_;  // cutoff -> per-run means
  std::vector<std::size_t> evaluated_users_;
  std::vector<std::size_t> cold_items_;
};

}  // namespace rexnet
