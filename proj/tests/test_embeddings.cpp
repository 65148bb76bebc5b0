#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "rexnet/embeddings.hpp"
#include "rexnet/errors.hpp"
#include "support/finite_diff.hpp"
#include "support/synthetic_movielens.hpp"

using namespace rexnet;
using rexnet::testsupport::central_difference;
using rexnet::testsupport::relative_error;

namespace {

Corpus corpus_from_sentences(const std::vector<std::vector<int>>& sentences,
                             int vocab) {
  std::vector<Sentence> out;
  std::vector<std::string> ids;
  std::vector<std::int64_t> counts(vocab, 0);
  for (int i = 0; i < vocab; ++i) ids.push_back("i" + std::to_string(i));
  int owner = 0;
  for (const auto& tokens : sentences) {
    Sentence s;
    s.owner = "u" + std::to_string(owner++);
    s.tokens = tokens;
    for (int t : tokens) ++counts[t];
    out.push_back(std::move(s));
  }
  return Corpus(std::move(out), std::move(ids), std::move(counts));
}

// O(L^2) per-sentence pair enumerator, independent of build_cooccurrence
std::map<std::pair<int, int>, double> brute_force_cooc(const Corpus& corpus,
                                                       int window) {
  std::map<std::pair<int, int>, double> counts;
  for (const auto& s : corpus.sentences()) {
    const int len = static_cast<int>(s.tokens.size());
    for (int a = 0; a < len; ++a) {
      for (int b = 0; b < len; ++b) {
        if (a == b) continue;
        if (std::abs(a - b) <= window) counts[{s.tokens[a], s.tokens[b]}] += 1.0;
      }
    }
  }
  return counts;
}

}  // namespace

TEST_CASE("adjacent pair counts once in each direction") {
  auto corpus = corpus_from_sentences({{0, 1}}, 2);
  auto x = build_cooccurrence(corpus, 3);
  CHECK(x.at(0, 1) == 1.0);
  CHECK(x.at(1, 0) == 1.0);
  CHECK(x.nnz() == 2);
}

TEST_CASE("window 1 over [a, b, c]") {
  auto corpus = corpus_from_sentences({{0, 1, 2}}, 3);
  auto x = build_cooccurrence(corpus, 1);
  CHECK(x.at(0, 1) == 1.0);
  CHECK(x.at(1, 2) == 1.0);
  CHECK(x.at(0, 2) == 0.0);
}

TEST_CASE("empty corpus gives an empty matrix") {
  Corpus corpus;
  auto x = build_cooccurrence(corpus, 5);
  CHECK(x.empty());
}

TEST_CASE("co-occurrence matches the brute-force enumerator and is symmetric") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    auto data = testsupport::make_two_block_dataset(8, 10, 6, seed);
    auto corpus = shuffle_corpus(build_corpus(data), seed);
    for (int window : {1, 2, 5}) {
      auto x = build_cooccurrence(corpus, window);
      auto brute = brute_force_cooc(corpus, window);
      double brute_total = 0.0;
      for (const auto& [key, count] : brute) {
        CHECK(x.at(key.first, key.second) == count);
        brute_total += count;
      }
      CHECK(x.nnz() == brute.size());
      for (const auto& e : x.entries()) {
        CHECK(x.at(e.row, e.col) == x.at(e.col, e.row));
      }
    }
  }
}

TEST_CASE("repeated items co-occur with themselves") {
  auto corpus = corpus_from_sentences({{0, 0}}, 1);
  auto x = build_cooccurrence(corpus, 2);
  CHECK(x.at(0, 0) == 2.0);
}

TEST_CASE("glove weighting function") {
  CHECK(glove_weight(100.0, 100.0, 0.75) == 1.0);
  CHECK(glove_weight(250.0, 100.0, 0.75) == 1.0);
  CHECK(glove_weight(50.0, 100.0, 0.75) ==
        doctest::Approx(0.5946035575013605).epsilon(1e-12));
  CHECK(glove_weight(0.0, 100.0, 0.75) == 0.0);
}

TEST_CASE("glove entry loss gradients match finite differences") {
  const int d = 4;
  Rng rng(123);
  for (int draw = 0; draw < 12; ++draw) {
    std::vector<float> w(d), wt(d);
    for (auto& v : w) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (auto& v : wt) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    float b = static_cast<float>(rng.uniform(-0.5, 0.5));
    float bt = static_cast<float>(rng.uniform(-0.5, 0.5));
    const double x = 0.5 + rng.uniform() * 50.0;

    std::vector<float> gw(d), gwt(d);
    float gb = 0.0f, gbt = 0.0f;
    glove_entry_loss(w, wt, b, bt, x, 10.0, 0.75, gw, gwt, &gb, &gbt);

    auto f = [&] { return glove_entry_loss(w, wt, b, bt, x, 10.0, 0.75); };
    for (int c = 0; c < d; ++c) {
      CHECK(relative_error(gw[c], central_difference(f, w[c], 1e-5)) < 1e-4);
      CHECK(relative_error(gwt[c], central_difference(f, wt[c], 1e-5)) < 1e-4);
    }
    CHECK(relative_error(gb, central_difference(f, b, 1e-5)) < 1e-4);
    CHECK(relative_error(gbt, central_difference(f, bt, 1e-5)) < 1e-4);
  }
}

TEST_CASE("glove zero-parameter fixed point at unit counts") {
  const int d = 4;
  std::vector<float> w(d, 0.0f), wt(d, 0.0f), gw(d), gwt(d);
  float gb = 0.0f, gbt = 0.0f;
  const double loss =
      glove_entry_loss(w, wt, 0.0f, 0.0f, 1.0, 100.0, 0.75, gw, gwt, &gb, &gbt);
  CHECK(loss == 0.0);
  for (int c = 0; c < d; ++c) {
    CHECK(gw[c] == 0.0f);
    CHECK(gwt[c] == 0.0f);
  }
  CHECK(gb == 0.0f);
  CHECK(gbt == 0.0f);
}

TEST_CASE("train_glove covers the vocabulary and reduces the loss") {
  auto data = testsupport::make_two_block_dataset(20, 15, 8, 3);
  auto corpus = shuffle_corpus(build_corpus(data), 3);
  auto cooc = build_cooccurrence(corpus, 5);
  EmbeddingConfig cfg;
  cfg.method = EmbeddingMethod::glove;
  cfg.dim = 16;
  cfg.epochs = 10;
  cfg.seed = 5;
  auto result = train_glove(cooc, cfg);
  CHECK(result.table.input.size() == corpus.vocab_size());
  CHECK(result.table.output.size() == corpus.vocab_size());
  CHECK(result.table.input.all_finite());
  CHECK(result.biases.b.size() == corpus.vocab_size());
  REQUIRE(result.loss_trace.size() == 10);
  CHECK(result.loss_trace.back() < result.loss_trace.front());
  // exported vector is the input + context sum
  auto combined = result.table.exported(false);
  auto in0 = result.table.input.row(0);
  auto out0 = result.table.output.row(0);
  auto sum0 = combined.row(0);
  for (int c = 0; c < cfg.dim; ++c) {
    CHECK(sum0[c] == doctest::Approx(in0[c] + out0[c]));
  }
}

TEST_CASE("sgns pair objective at zero vectors") {
  std::vector<float> zero(8, 0.0f);
  std::vector<std::span<const float>> negs1{zero};
  CHECK(sgns_pair_objective(zero, zero, negs1) ==
        doctest::Approx(-1.3862943611198906).epsilon(1e-12));
  std::vector<std::span<const float>> negs5(5, std::span<const float>(zero));
  CHECK(sgns_pair_objective(zero, zero, negs5) ==
        doctest::Approx(-4.1588830833596715).epsilon(1e-12));
}

TEST_CASE("aligned large vectors drive the objective toward zero") {
  std::vector<float> big(4, 10.0f);
  std::vector<std::span<const float>> no_negs;
  const double obj = sgns_pair_objective(big, big, no_negs);
  CHECK(obj < 0.0);
  CHECK(obj > -1e-6);
}

TEST_CASE("sgns pair gradients match finite differences") {
  const int d = 4;
  Rng rng(321);
  for (int draw = 0; draw < 12; ++draw) {
    std::vector<float> center(d), context(d);
    std::vector<std::vector<float>> negs(3, std::vector<float>(d));
    for (auto& v : center) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (auto& v : context) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (auto& n : negs)
      for (auto& v : n) v = static_cast<float>(rng.uniform(-1.0, 1.0));

    auto spans = [&] {
      std::vector<std::span<const float>> s;
      for (auto& n : negs) s.emplace_back(n);
      return s;
    };
    std::vector<float> g_center(d), g_context(d);
    std::vector<std::vector<float>> g_negs;
    {
      auto ns = spans();
      sgns_pair_gradients(center, context, ns, g_center, g_context, g_negs);
    }
    auto f = [&] {
      auto ns = spans();
      return sgns_pair_objective(center, context, ns);
    };
    for (int c = 0; c < d; ++c) {
      CHECK(relative_error(g_center[c], central_difference(f, center[c], 1e-5)) < 1e-4);
      CHECK(relative_error(g_context[c], central_difference(f, context[c], 1e-5)) < 1e-4);
      for (std::size_t n = 0; n < negs.size(); ++n) {
        CHECK(relative_error(g_negs[n][c],
                             central_difference(f, negs[n][c], 1e-5)) < 1e-4);
      }
    }
  }
}

TEST_CASE("noise distribution follows count^power") {
  NoiseTable noise({4, 4, 8}, 0.75);
  CHECK(noise.probability(0) == doctest::Approx(0.2716068084).epsilon(1e-6));
  CHECK(noise.probability(1) == doctest::Approx(0.2716068084).epsilon(1e-6));
  CHECK(noise.probability(2) == doctest::Approx(0.4567863831).epsilon(1e-6));

  NoiseTable uniform({10, 1, 100}, 0.0);
  for (int i = 0; i < 3; ++i) {
    CHECK(uniform.probability(i) == doctest::Approx(1.0 / 3.0));
  }

  NoiseTable single({7}, 0.75);
  Rng rng(4);
  for (int i = 0; i < 20; ++i) CHECK(draw_negative(single, rng) == 0);

  CHECK_THROWS_AS(NoiseTable(std::vector<std::int64_t>{}, 0.75),
                  ValidationError);
}

TEST_CASE("negative draws converge to the table probabilities") {
  NoiseTable noise({4, 4, 8}, 0.75);
  Rng rng(99);
  std::vector<int> hits(3, 0);
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) ++hits[noise.draw(rng)];
  for (int t = 0; t < 3; ++t) {
    CHECK(static_cast<double>(hits[t]) / draws ==
          doctest::Approx(noise.probability(t)).epsilon(0.05));
  }
}

TEST_CASE("train_sgns is deterministic and covers the vocabulary") {
  auto data = testsupport::make_two_block_dataset(12, 10, 6, 8);
  auto corpus = shuffle_corpus(build_corpus(data), 8);
  EmbeddingConfig cfg;
  cfg.method = EmbeddingMethod::sgns;
  cfg.dim = 8;
  cfg.window = 5;
  cfg.epochs = 2;
  cfg.seed = 11;
  auto a = train_sgns(corpus, cfg);
  auto b = train_sgns(corpus, cfg);
  REQUIRE(a.table.input.size() == corpus.vocab_size());
  CHECK(a.table.input.all_finite());
  for (std::size_t r = 0; r < a.table.input.size(); ++r) {
    auto ra = a.table.input.row(static_cast<int>(r));
    auto rb = b.table.input.row(static_cast<int>(r));
    for (int c = 0; c < cfg.dim; ++c) CHECK(ra[c] == rb[c]);
  }
}

TEST_CASE("a length-1 sentence contributes no training pairs") {
  auto corpus = corpus_from_sentences({{0}}, 1);
  EmbeddingConfig cfg;
  cfg.method = EmbeddingMethod::sgns;
  cfg.dim = 4;
  cfg.epochs = 3;
  auto result = train_sgns(corpus, cfg);
  // no updates: output vectors stay at their zero initialization
  auto out = result.table.output.row(0);
  for (int c = 0; c < cfg.dim; ++c) CHECK(out[c] == 0.0f);
  for (double obj : result.objective_trace) CHECK(obj == 0.0);
}

namespace {

double mean_cosine(const VectorTable& table, const std::vector<int>& a,
                   const std::vector<int>& b) {
  auto cosine = [&](int i, int j) {
    auto x = table.row(i);
    auto y = table.row(j);
    double dot = 0.0, nx = 0.0, ny = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) {
      dot += static_cast<double>(x[c]) * y[c];
      nx += static_cast<double>(x[c]) * x[c];
      ny += static_cast<double>(y[c]) * y[c];
    }
    return dot / (std::sqrt(nx) * std::sqrt(ny) + 1e-12);
  };
  double sum = 0.0;
  int n = 0;
  for (int i : a) {
    for (int j : b) {
      if (i == j) continue;
      sum += cosine(i, j);
      ++n;
    }
  }
  return sum / n;
}

}  // namespace

TEST_CASE("both trainers separate disjoint item blocks") {
  auto data = testsupport::make_two_block_dataset(30, 20, 10, 21);
  auto corpus = shuffle_corpus(build_corpus(data), 21);

  std::vector<int> block_a, block_b;
  for (std::size_t i = 0; i < corpus.vocab_size(); ++i) {
    const int raw = std::stoi(corpus.vocabulary()[i].substr(1));
    (raw < 20 ? block_a : block_b).push_back(static_cast<int>(i));
  }

  for (auto method : {EmbeddingMethod::sgns, EmbeddingMethod::glove}) {
    EmbeddingConfig cfg;
    cfg.method = method;
    cfg.dim = 16;
    cfg.window = 10;
    cfg.epochs = 8;
    cfg.seed = 33;
    auto result = train_embeddings(corpus, cfg);
    // rows of the exported table follow vocabulary order
    const double intra = (mean_cosine(result.items, block_a, block_a) +
                          mean_cosine(result.items, block_b, block_b)) /
                         2.0;
    const double inter = mean_cosine(result.items, block_a, block_b);
    CHECK(intra > inter);
  }
}

TEST_CASE("embedding table text format round-trips") {
  auto data = testsupport::make_two_block_dataset(5, 8, 4, 2);
  auto corpus = build_corpus(data);
  EmbeddingConfig cfg;
  cfg.method = EmbeddingMethod::sgns;
  cfg.dim = 6;
  cfg.epochs = 1;
  auto table = train_sgns(corpus, cfg).table.exported(true);
  std::ostringstream out;
  table.save(out);
  std::istringstream in(out.str());
  auto loaded = VectorTable::load(in);
  REQUIRE(loaded.size() == table.size());
  REQUIRE(loaded.dim() == table.dim());
  for (std::size_t r = 0; r < table.size(); ++r) {
    CHECK(loaded.ids()[r] == table.ids()[r]);
    auto a = table.row(static_cast<int>(r));
    auto b = loaded.row(static_cast<int>(r));
    for (int c = 0; c < table.dim(); ++c) CHECK(a[c] == b[c]);
  }
  std::ostringstream out2;
  loaded.save(out2);
  CHECK(out.str() == out2.str());
}
