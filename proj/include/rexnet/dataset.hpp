#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace rexnet {

struct RatingTriple {
  std::string user;
  std::string item;
  int rating = 0;

  friend bool operator==(const RatingTriple&, const RatingTriple&) = default;
};

struct RatingScale {
  int min_rating = 1;
  int max_rating = 5;
};

enum class RatingFormat {
  tab_separated,  // ML-100K u.data: user<TAB>item<TAB>rating<TAB>timestamp
  double_colon,   // ML-1M ratings.dat: user::item::rating::timestamp
};

/// Sparse rating matrix. External ids stay strings; dense indices are
/// assigned in first-appearance order and used by everything downstream.
class RatingDataset {
 public:
  RatingDataset() = default;
  explicit RatingDataset(RatingScale scale) : scale_(scale) {}

  // Appends a triple, assigning dense indices as needed.
  // Throws ValidationError on out-of-scale rating or duplicate (user, item).
  void add(std::string user, std::string item, int rating);

  const std::vector<RatingTriple>& triples() const { return triples_; }
  std::size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }

  std::size_t user_count() const { return user_ids_.size(); }
  std::size_t item_count() const { return item_ids_.size(); }

  const std::string& user_id(int index) const { return user_ids_[index]; }
  const std::string& item_id(int index) const { return item_ids_[index]; }

  // -1 when the id is unknown
  int user_index(const std::string& id) const;
  int item_index(const std::string& id) const;

  // (item index, rating) pairs of one user, in insertion order
  const std::vector<std::pair<int, int>>& profile(int user_index) const {
    return profiles_[user_index];
  }

  RatingScale scale() const { return scale_; }

  // ratings / (users * items); 0 for an empty dataset
  double density() const;

 private:
  RatingScale scale_;
  std::vector<RatingTriple> triples_;
  std::vector<std::string> user_ids_, item_ids_;
  std::unordered_map<std::string, int> user_lookup_, item_lookup_;
  std::vector<std::vector<std::pair<int, int>>> profiles_;
};

// Throws ParseError (with line number) on malformed lines and
// ValidationError on scale/duplicate violations.
RatingDataset parse_ratings(std::istream& in, RatingFormat format,
                            RatingScale scale = {});

RatingDataset load_ratings(const std::string& path, RatingFormat format,
                           RatingScale scale = {});

// Inverse of parse_ratings up to line order; timestamps are written as 0.
void write_ratings(const RatingDataset& dataset, std::ostream& out,
                   RatingFormat format);

struct SplitPair {
  RatingDataset train;
  RatingDataset test;
  int upl = 0;
  std::uint64_t seed = 0;
};

// Fixed-UPL split: users with more than `upl` ratings contribute a seeded
// uniform subset of exactly `upl` ratings to train and the rest to test;
// users with <= upl ratings are dropped from both sides.
// Throws ValidationError if no user is retained.
SplitPair split_by_upl(const RatingDataset& dataset, int upl,
                       std::uint64_t seed);

using UserAverages = std::unordered_map<std::string, double>;

// Mean train rating per user. Throws ValidationError on an empty input.
UserAverages user_average(const RatingDataset& train);

}  // namespace rexnet
