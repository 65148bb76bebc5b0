#include "rexnet/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rexnet/errors.hpp"

namespace rexnet {

StageSeeds stage_seeds(std::uint64_t run_seed) {
  return {
      derive_seed(run_seed, 101),  // split
      derive_seed(run_seed, 102),  // corpus shuffle
      derive_seed(run_seed, 103),  // embedding trainer
      derive_seed(run_seed, 104),  // network trainer
  };
}

std::vector<TrainExample> make_train_examples(const RatingDataset& train,
                                              const UserAverages& averages,
                                              const VectorTable& users,
                                              const VectorTable& items) {
  std::vector<TrainExample> examples;
  examples.reserve(train.size());
  for (const auto& t : train.triples()) {
    TrainExample ex;
    auto u = users.vector_of(t.user);
    auto v = items.vector_of(t.item);
    ex.user_vec.assign(u.begin(), u.end());
    ex.item_vec.assign(v.begin(), v.end());
    ex.target = static_cast<float>(t.rating - averages.at(t.user));
    examples.push_back(std::move(ex));
  }
  return examples;
}

PipelineRunResult run_pipeline_once(const RatingDataset& data,
                                    const PipelineConfig& config,
                                    std::uint64_t seed) {
  const StageSeeds seeds = stage_seeds(seed);

  PipelineRunResult result;
  result.split = split_by_upl(data, config.upl, seeds.split);
  const UserAverages averages = user_average(result.split.train);

  Corpus corpus = shuffle_corpus(build_corpus(result.split.train), seeds.corpus);
  EmbeddingConfig embed_cfg = config.embedding;
  embed_cfg.seed = seeds.embedding;
  auto embed = train_embeddings(corpus, embed_cfg);
  result.items = std::move(embed.items);
  result.embedding_trace = std::move(embed.trace);

  result.users = derive_user_vectors(result.split.train, averages, result.items);

  NetworkConfig net_cfg = config.network;
  net_cfg.input_dim = embed_cfg.dim;
  net_cfg.seed = seeds.network;
  result.model = init_network(net_cfg, seeds.network);
  auto examples = make_train_examples(result.split.train, averages,
                                      result.users, result.items);
  result.network_trace = train_network(result.model, examples, net_cfg);

  result.eval = evaluate(result.model, result.split, result.items, result.users,
                         config.cutoffs, config.denominator);
  return result;
}

EvalReport run_pipeline(const RatingDataset& data, const PipelineConfig& config) {
  if (config.seeds.empty()) throw ValidationError("pipeline needs at least one seed");
  EvalReport report;
  for (std::uint64_t seed : config.seeds) {
    report.add_run(seed, run_pipeline_once(data, config, seed).eval);
  }
  return report;
}

void write_split_files(const SplitPair& split, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "train.tsv");
    if (!out) throw IoError("cannot write train split in " + dir);
    write_ratings(split.train, out, RatingFormat::tab_separated);
  }
  {
    std::ofstream out(fs::path(dir) / "test.tsv");
    if (!out) throw IoError("cannot write test split in " + dir);
    write_ratings(split.test, out, RatingFormat::tab_separated);
  }
  std::ofstream meta(fs::path(dir) / "split.meta");
  if (!meta) throw IoError("cannot write split.meta in " + dir);
  meta << "upl = " << split.upl << '\n';
  meta << "seed = " << split.seed << '\n';
  meta << "retained_users = " << split.train.user_count() << '\n';
  meta << "min_rating = " << split.train.scale().min_rating << '\n';
  meta << "max_rating = " << split.train.scale().max_rating << '\n';
}

namespace {
std::string meta_value(const std::string& path, const std::string& key) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string k = line.substr(0, eq);
    while (!k.empty() && k.back() == ' ') k.pop_back();
    if (k == key) {
      std::string v = line.substr(eq + 1);
      while (!v.empty() && v.front() == ' ') v.erase(v.begin());
      return v;
    }
  }
  throw ParseError("missing key '" + key + "' in " + path);
}
}  // namespace

SplitPair read_split_files(const std::string& dir) {
  namespace fs = std::filesystem;
  const std::string meta = (fs::path(dir) / "split.meta").string();
  RatingScale scale{std::stoi(meta_value(meta, "min_rating")),
                    std::stoi(meta_value(meta, "max_rating"))};
  SplitPair split;
  split.upl = std::stoi(meta_value(meta, "upl"));
  split.seed = std::stoull(meta_value(meta, "seed"));
  split.train = load_ratings((fs::path(dir) / "train.tsv").string(),
                             RatingFormat::tab_separated, scale);
  split.test = load_ratings((fs::path(dir) / "test.tsv").string(),
                            RatingFormat::tab_separated, scale);
  return split;
}

}  // namespace rexnet
