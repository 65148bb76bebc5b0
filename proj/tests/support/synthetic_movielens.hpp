#pragma once

#include <cstdint>
#include <string>

#include "rexnet/dataset.hpp"

namespace rexnet::testsupport {

// Seeded latent-factor rating generator producing MovieLens-shaped data:
// a fixed user/item/rating census, every user above a minimum profile
// length, unique (user, item) pairs, integer ratings 1..5 with planted
// low-rank preference structure plus noise. Defaults mirror the ML-100K
// census (943 users, 1682 items, 100,000 ratings, >= 20 per user).
struct SyntheticSpec {
  std::size_t users = 943;
  std::size_t items = 1682;
  std::size_t ratings = 100000;
  int min_profile = 20;
  int max_profile = 600;
  int latent_dim = 6;
  double signal = 1.5;   // stddev of the latent contribution to a rating
  double quality = 0.9;  // stddev of the per-item quality offset
  double noise = 0.6;    // stddev of the iid noise term
  std::uint64_t seed = 42;

  static SyntheticSpec ml100k() { return SyntheticSpec{}; }
  static SyntheticSpec ml1m() {
    SyntheticSpec spec;
    spec.users = 6040;
    spec.items = 3706;
    spec.ratings = 1000000;
    spec.max_profile = 1500;
    return spec;
  }
};

RatingDataset make_synthetic_movielens(const SyntheticSpec& spec);

// Renders the dataset in the requested file format at `path`.
void write_synthetic_file(const SyntheticSpec& spec, const std::string& path,
                          RatingFormat format);

// Two disjoint user groups rating two disjoint item blocks; used for the
// embedding separation checks.
RatingDataset make_two_block_dataset(std::size_t users_per_block,
                                     std::size_t items_per_block,
                                     int ratings_per_user, std::uint64_t seed);

}  // namespace rexnet::testsupport
