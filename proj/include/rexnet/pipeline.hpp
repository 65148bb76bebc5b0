#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rexnet/corpus.hpp"
#include "rexnet/dataset.hpp"
#include "rexnet/embeddings.hpp"
#include "rexnet/eval.hpp"
#include "rexnet/neural.hpp"
#include "rexnet/user_repr.hpp"

namespace rexnet {

struct PipelineConfig {
  std::string data_path;
  RatingFormat format = RatingFormat::tab_separated;
  int upl = 10;
  EmbeddingConfig embedding;
  NetworkConfig network;
  std::vector<int> cutoffs = {5, 10};
  NdcgDenominator denominator = NdcgDenominator::standard;
  std::vector<std::uint64_t> seeds = {1};
  std::string out_dir = ".";
};

// Per-run sub-seeds; every stage derives its stream from the run seed so
// a run is a pure function of (dataset, config, seed).
struct StageSeeds {
  std::uint64_t split;
  std::uint64_t corpus;
  std::uint64_t embedding;
  std::uint64_t network;
};
StageSeeds stage_seeds(std::uint64_t run_seed);

// One TrainExample per train triple: (user vector, item vector,
// rating - user mean), in train triple order.
std::vector<TrainExample> make_train_examples(const RatingDataset& train,
                                              const UserAverages& averages,
                                              const VectorTable& users,
                                              const VectorTable& items);

struct PipelineRunResult {
  SplitPair split;
  VectorTable items;
  VectorTable users;
  TowerNetworkParams model;
  SingleRunEval eval;
  std::vector<double> embedding_trace;
  std::vector<double> network_trace;
};

// split -> corpus -> embeddings -> user vectors -> network -> evaluate,
// entirely in memory, for one seed.
PipelineRunResult run_pipeline_once(const RatingDataset& data,
                                    const PipelineConfig& config,
                                    std::uint64_t seed);

// Full multi-seed run aggregating the per-seed evaluations.
EvalReport run_pipeline(const RatingDataset& data, const PipelineConfig& config);

// Split manifest files: train/test in the tab-separated layout plus a
// header file recording upl, seed and retained-user count.
void write_split_files(const SplitPair& split, const std::string& dir);
SplitPair read_split_files(const std::string& dir);

}  // namespace rexnet
