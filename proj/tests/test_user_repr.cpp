#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "rexnet/errors.hpp"
#include "rexnet/rng.hpp"
#include "rexnet/user_repr.hpp"

using namespace rexnet;

namespace {

VectorTable make_items(const std::vector<std::pair<std::string, std::vector<float>>>& rows) {
  VectorTable table(static_cast<int>(rows[0].second.size()));
  for (const auto& [id, values] : rows) {
    auto dest = table.row(table.add(id));
    for (std::size_t c = 0; c < values.size(); ++c) dest[c] = values[c];
  }
  return table;
}

}  // namespace

TEST_CASE("two-term hand expansion") {
  RatingDataset train{RatingScale{1, 5}};
  train.add("u", "A", 5);
  train.add("u", "B", 3);
  auto items = make_items({{"A", {1, 0}}, {"B", {0, 1}}});
  UserAverages averages{{"u", 4.0}};
  auto users = derive_user_vectors(train, averages, items);
  auto u = users.vector_of("u");
  CHECK(u[0] == doctest::Approx(1.0f));
  CHECK(u[1] == doctest::Approx(-1.0f));
}

TEST_CASE("constant-rating profiles map to the zero vector") {
  RatingDataset train{RatingScale{1, 5}};
  train.add("u", "A", 4);
  train.add("u", "B", 4);
  train.add("u", "C", 4);
  auto items = make_items({{"A", {1, 2}}, {"B", {-3, 5}}, {"C", {0.5f, 7}}});
  auto users = derive_user_vectors(train, user_average(train), items);
  auto u = users.vector_of("u");
  CHECK(u[0] == 0.0f);
  CHECK(u[1] == 0.0f);
}

TEST_CASE("missing item embedding names the item") {
  RatingDataset train{RatingScale{1, 5}};
  train.add("u", "A", 5);
  train.add("u", "MISSING", 2);
  auto items = make_items({{"A", {1, 0}}});
  try {
    derive_user_vectors(train, user_average(train), items);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("MISSING") != std::string::npos);
  }
}

namespace {

// brute-force oracle: independent double-precision re-summation
std::vector<double> oracle_user_vector(const RatingDataset& train, int user,
                                       const UserAverages& averages,
                                       const VectorTable& items) {
  const std::string& id = train.user_id(user);
  std::vector<double> sum(items.dim(), 0.0);
  for (const auto& t : train.triples()) {
    if (t.user != id) continue;
    auto v = items.vector_of(t.item);
    for (int c = 0; c < items.dim(); ++c) {
      sum[c] += (t.rating - averages.at(id)) * static_cast<double>(v[c]);
    }
  }
  return sum;
}

}  // namespace

TEST_CASE("random profiles match the brute-force oracle") {
  Rng rng(55);
  RatingDataset train{RatingScale{1, 5}};
  const int d = 3;
  VectorTable items(d);
  for (int i = 0; i < 10; ++i) {
    auto row = items.row(items.add("i" + std::to_string(i)));
    for (int c = 0; c < d; ++c) row[c] = static_cast<float>(rng.uniform(-2, 2));
  }
  for (int u = 0; u < 6; ++u) {
    for (int i = 0; i < 5; ++i) {
      train.add("u" + std::to_string(u), "i" + std::to_string((u + i * 2) % 10),
                1 + static_cast<int>(rng.below(5)));
    }
  }
  auto averages = user_average(train);
  auto users = derive_user_vectors(train, averages, items);
  for (int u = 0; u < 6; ++u) {
    auto expected = oracle_user_vector(train, u, averages, items);
    auto actual = users.vector_of(train.user_id(u));
    for (int c = 0; c < d; ++c) {
      CHECK(std::fabs(actual[c] - expected[c]) < 1e-6);
    }
  }
}

TEST_CASE("scaling item vectors scales user vectors linearly") {
  RatingDataset train{RatingScale{1, 5}};
  train.add("u", "A", 5);
  train.add("u", "B", 2);
  train.add("u", "C", 1);
  auto items = make_items({{"A", {1, 2}}, {"B", {3, -1}}, {"C", {0, 4}}});
  auto scaled = make_items({{"A", {2.5f, 5}}, {"B", {7.5f, -2.5f}}, {"C", {0, 10}}});
  auto averages = user_average(train);
  auto u1 = derive_user_vectors(train, averages, items);
  auto u2 = derive_user_vectors(train, averages, scaled);
  for (int c = 0; c < 2; ++c) {
    CHECK(u2.vector_of("u")[c] ==
          doctest::Approx(2.5f * u1.vector_of("u")[c]).epsilon(1e-5));
  }
}

TEST_CASE("translation shifts by the coefficient sum") {
  RatingDataset train{RatingScale{1, 5}};
  // asymmetric profile: coefficient sum is nonzero
  train.add("u", "A", 5);
  train.add("u", "B", 5);
  train.add("u", "C", 1);
  // symmetric profile: ratings symmetric around the mean
  train.add("s", "A", 5);
  train.add("s", "B", 1);
  auto averages = user_average(train);

  auto items = make_items({{"A", {1, 0}}, {"B", {0, 1}}, {"C", {1, 1}}});
  const float tx = 10.0f, ty = -3.0f;
  auto translated =
      make_items({{"A", {1 + tx, 0 + ty}}, {"B", {0 + tx, 1 + ty}}, {"C", {1 + tx, 1 + ty}}});

  auto base = derive_user_vectors(train, averages, items);
  auto moved = derive_user_vectors(train, averages, translated);

  const double lambda_u = averages.at("u");
  const double coeff_sum = (5 - lambda_u) + (5 - lambda_u) + (1 - lambda_u);
  CHECK(moved.vector_of("u")[0] ==
        doctest::Approx(base.vector_of("u")[0] + coeff_sum * tx).epsilon(1e-4));
  CHECK(moved.vector_of("u")[1] ==
        doctest::Approx(base.vector_of("u")[1] + coeff_sum * ty).epsilon(1e-4));

  // symmetric user is translation-invariant
  CHECK(moved.vector_of("s")[0] == doctest::Approx(base.vector_of("s")[0]).epsilon(1e-5));
  CHECK(moved.vector_of("s")[1] == doctest::Approx(base.vector_of("s")[1]).epsilon(1e-5));
}
