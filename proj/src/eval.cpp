#include "rexnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "rexnet/errors.hpp"

namespace rexnet {

namespace {

double position_discount(int position, NdcgDenominator denominator) {
  // position is 1-based
  if (denominator == NdcgDenominator::standard) {
    return std::log2(static_cast<double>(position) + 1.0);
  }
  return std::log2(static_cast<double>(position)) + 1.0;
}

double dcg(const std::vector<int>& ratings, int n, NdcgDenominator denominator) {
  const int limit = std::min<int>(n, static_cast<int>(ratings.size()));
  double sum = 0.0;
  for (int i = 1; i <= limit; ++i) {
    sum += (std::exp2(static_cast<double>(ratings[i - 1])) - 1.0) /
           position_discount(i, denominator);
  }
  return sum;
}

}  // namespace

double ndcg_at_n(const std::vector<int>& true_ratings_in_predicted_order, int n,
                 NdcgDenominator denominator) {
  if (n < 1) throw ValidationError("ndcg_at_n: n must be >= 1");
  if (true_ratings_in_predicted_order.empty()) {
    throw ValidationError("ndcg_at_n: empty rating list");
  }
  std::vector<int> ideal = true_ratings_in_predicted_order;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double ideal_dcg = dcg(ideal, n, denominator);
  if (ideal_dcg == 0.0) return 1.0;  // all-zero gains carry no ranking signal
  return dcg(true_ratings_in_predicted_order, n, denominator) / ideal_dcg;
}

RankedList rank_test_items(const TowerNetworkParams& model,
                           std::span<const float> user_vec,
                           const std::vector<std::pair<std::string, int>>& test_items,
                           const VectorTable& items) {
  struct Scored {
    float score;
    int table_index;
    const std::string* id;
    int rating;
  };
  RankedList ranked;
  std::vector<Scored> scored;
  scored.reserve(test_items.size());
  for (const auto& [id, rating] : test_items) {
    const int index = items.index_of(id);
    if (index < 0) {
      ++ranked.cold_items;
      continue;
    }
    const float score = predict_preference(model, user_vec, items.row(index));
    scored.push_back({score, index, &id, rating});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.table_index < b.table_index;
  });
  ranked.items.reserve(scored.size());
  ranked.ratings.reserve(scored.size());
  for (const auto& s : scored) {
    ranked.items.push_back(*s.id);
    ranked.ratings.push_back(s.rating);
  }
  return ranked;
}

SingleRunEval evaluate(const TowerNetworkParams& model, const SplitPair& split,
                       const VectorTable& items, const VectorTable& users,
                       const std::vector<int>& cutoffs,
                       NdcgDenominator denominator) {
  if (split.test.empty()) throw ValidationError("evaluate: empty test split");
  SingleRunEval result;
  std::map<int, double> sums;
  for (int n : cutoffs) sums[n] = 0.0;

  for (std::size_t u = 0; u < split.test.user_count(); ++u) {
    const std::string& user = split.test.user_id(static_cast<int>(u));
    std::vector<std::pair<std::string, int>> test_items;
    for (const auto& [item, rating] : split.test.profile(static_cast<int>(u))) {
      test_items.emplace_back(split.test.item_id(item), rating);
    }
    RankedList ranked =
        rank_test_items(model, users.vector_of(user), test_items, items);
    result.cold_items += ranked.cold_items;
    if (ranked.ratings.empty()) continue;
    ++result.evaluated_users;
    for (int n : cutoffs) sums[n] += ndcg_at_n(ranked.ratings, n, denominator);
  }
  if (result.evaluated_users == 0) {
    throw ValidationError("evaluate: no user has an embeddable test item");
  }
  for (int n : cutoffs) {
    result.mean_ndcg[n] = sums[n] / static_cast<double>(result.evaluated_users);
  }
  return result;
}

void EvalReport::add_run(std::uint64_t seed, const SingleRunEval& run) {
  seeds_.push_back(seed);
  evaluated_users_.push_back(run.evaluated_users);
  cold_items_.push_back(run.cold_items);
  for (const auto& [cutoff, mean] : run.mean_ndcg) {
    values_[cutoff].push_back(mean);
  }
}

std::vector<int> EvalReport::cutoffs() const {
  std::vector<int> result;
  for (const auto& [cutoff, _] : values_) result.push_back(cutoff);
  return result;
}

double EvalReport::mean(int cutoff) const {
  const auto& v = values_.at(cutoff);
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double EvalReport::stddev(int cutoff) const {
  const auto& v = values_.at(cutoff);
  if (v.size() < 2) return 0.0;
  const double m = mean(cutoff);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

void EvalReport::write(std::ostream& out, const std::string& label) const {
  out << "label = " << label << '\n';
  out << "runs = " << runs() << '\n';
  out << "seeds =";
  for (auto s : seeds_) out << ' ' << s;
  out << '\n';
  for (std::size_t r = 0; r < runs(); ++r) {
    out << "run." << r << ".evaluated_users = " << evaluated_users_[r] << '\n';
    out << "run." << r << ".cold_items = " << cold_items_[r] << '\n';
    for (const auto& [cutoff, v] : values_) {
      out << "run." << r << ".ndcg@" << cutoff << " = " << std::setprecision(10)
          << v[r] << '\n';
    }
  }
  for (const auto& [cutoff, _] : values_) {
    out << "ndcg@" << cutoff << ".mean = " << std::setprecision(10)
        << mean(cutoff) << '\n';
    out << "ndcg@" << cutoff << ".std = " << std::setprecision(10)
        << stddev(cutoff) << '\n';
  }
  out << '\n';
  out << std::left << std::setw(24) << "metric" << std::setw(20) << "mean +/- std"
      << '\n';
  for (const auto& [cutoff, _] : values_) {
    std::ostringstream cell;
    cell << std::fixed << std::setprecision(3) << mean(cutoff) << " +/- "
         << stddev(cutoff);
    out << std::left << std::setw(24) << ("NDCG@" + std::to_string(cutoff))
        << cell.str() << '\n';
  }
}

}  // namespace rexnet
