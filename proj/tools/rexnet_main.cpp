// Command-line front end for the rating-to-ranking pipeline:
//   split -> embed -> train -> evaluate -> recommend, plus all-in-one `run`.
// Exit codes: 0 success, 1 runtime/training failure, 2 usage or I/O error.

#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <list>
#include <optional>
#include <sstream>

#include "rexnet/errors.hpp"
#include "rexnet/pipeline.hpp"

namespace fs = std::filesystem;
using namespace rexnet;

namespace {

struct CommonEmbedOpts {
  std::string method = "sgns";
  EmbeddingConfig config;
  bool no_reshuffle = false;
  bool export_input_only = false;

  EmbeddingConfig resolve() const {
    EmbeddingConfig cfg = config;
    cfg.method = method == "glove" ? EmbeddingMethod::glove : EmbeddingMethod::sgns;
    cfg.reshuffle_per_epoch = !no_reshuffle;
    cfg.glove_export_input_only = export_input_only;
    return cfg;
  }
};

struct CommonNetOpts {
  NetworkConfig config;
  std::string tower_layers = "30,20,10,5";
  bool no_shared_layer = false;

  NetworkConfig resolve() const {
    NetworkConfig cfg = config;
    cfg.tower_layers.clear();
    std::istringstream in(tower_layers);
    std::string field;
    while (std::getline(in, field, ',')) {
      cfg.tower_layers.push_back(std::stoi(field));
    }
    if (no_shared_layer) cfg.shared_layer = 0;
    return cfg;
  }
};

// Flat `key = value` config file, keys mirroring the long flag names
// (without the leading --). Flags given on the command line win. CLI11's
// own config support only reads files at the top-level app, so the
// subcommands apply theirs by hand at the start of their callbacks.
void apply_config(CLI::App* cmd, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file: " + path);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path + " line " + std::to_string(lineno) +
                       ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto* op = cmd->get_option_no_throw("--" + key);
    if (op == nullptr) {
      throw ValidationError(path + " line " + std::to_string(lineno) +
                            ": unknown option '" + key + "'");
    }
    if (op->count() > 0) continue;  // the command line takes precedence
    op->add_result(value);
    op->run_callback();
  }
}

std::string& add_config_option(CLI::App* cmd) {
  static std::list<std::string> storage;  // stable addresses for callbacks
  storage.emplace_back();
  cmd->add_option("--config", storage.back(),
                  "key = value file mirroring the long flag names; "
                  "command-line flags take precedence");
  return storage.back();
}

RatingFormat parse_format(const std::string& name) {
  if (name == "tab") return RatingFormat::tab_separated;
  if (name == "colon") return RatingFormat::double_colon;
  throw ValidationError("unknown format '" + name + "' (expected tab or colon)");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::istringstream in(text);
  std::string field;
  while (std::getline(in, field, ',')) seeds.push_back(std::stoull(field));
  if (seeds.empty()) throw ValidationError("empty seed list");
  return seeds;
}

std::vector<int> parse_cutoffs(const std::string& text) {
  std::vector<int> cutoffs;
  std::istringstream in(text);
  std::string field;
  while (std::getline(in, field, ',')) cutoffs.push_back(std::stoi(field));
  if (cutoffs.empty()) throw ValidationError("empty cutoff list");
  return cutoffs;
}

std::string format_float(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_trace(const std::string& path, const std::vector<double>& trace) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trace: " + path);
  for (std::size_t e = 0; e < trace.size(); ++e) {
    out << "epoch " << (e + 1) << ' ' << format_float(trace[e]) << '\n';
  }
}

void write_embed_meta(const std::string& path, const EmbeddingConfig& cfg,
                      std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write meta: " + path);
  out << "method = " << (cfg.method == EmbeddingMethod::glove ? "glove" : "sgns")
      << '\n';
  out << "dim = " << cfg.dim << '\n';
  out << "window = " << cfg.window << '\n';
  out << "epochs = " << cfg.epochs << '\n';
  out << "learning_rate = " << format_float(cfg.effective_learning_rate()) << '\n';
  if (cfg.method == EmbeddingMethod::sgns) {
    out << "negatives_k = " << cfg.negatives_k << '\n';
    out << "noise_power = " << format_float(cfg.noise_power) << '\n';
  } else {
    out << "x_max = " << format_float(cfg.x_max) << '\n';
    out << "alpha = " << format_float(cfg.alpha) << '\n';
  }
  out << "reshuffle_per_epoch = " << (cfg.reshuffle_per_epoch ? 1 : 0) << '\n';
  out << "seed = " << seed << '\n';
}

// ---- stage actions (shared by the stage subcommands and `run`) ----

SplitPair do_split(const std::string& data_path, RatingFormat format, int upl,
                   std::uint64_t seed, const std::string& out_dir) {
  auto data = load_ratings(data_path, format);
  auto split = split_by_upl(data, upl, stage_seeds(seed).split);
  write_split_files(split, out_dir);
  return split;
}

VectorTable do_embed(const SplitPair& split, EmbeddingConfig cfg,
                     std::uint64_t seed, const std::string& out_file,
                     const std::string& corpus_dump,
                     const std::string& cooc_dump) {
  const auto seeds = stage_seeds(seed);
  Corpus corpus = shuffle_corpus(build_corpus(split.train), seeds.corpus);
  if (!corpus_dump.empty()) {
    std::ofstream out(corpus_dump);
    if (!out) throw IoError("cannot write corpus dump: " + corpus_dump);
    write_corpus(corpus, out);
  }
  if (!cooc_dump.empty()) {
    std::ofstream out(cooc_dump);
    if (!out) throw IoError("cannot write co-occurrence dump: " + cooc_dump);
    build_cooccurrence(corpus, cfg.window).dump(out);
  }
  cfg.seed = seeds.embedding;
  auto result = train_embeddings(corpus, cfg);
  result.items.save_file(out_file);
  write_trace(out_file + ".trace", result.trace);
  write_embed_meta(out_file + ".meta", cfg, seed);
  return result.items;
}

TowerNetworkParams do_train(const SplitPair& split, const VectorTable& items,
                            NetworkConfig cfg, std::uint64_t seed,
                            const std::string& out_file,
                            const std::string& user_vectors_out) {
  const auto seeds = stage_seeds(seed);
  auto averages = user_average(split.train);
  auto users = derive_user_vectors(split.train, averages, items);
  if (!user_vectors_out.empty()) users.save_file(user_vectors_out);
  cfg.input_dim = items.dim();
  cfg.seed = seeds.network;
  auto params = init_network(cfg, seeds.network);
  auto examples = make_train_examples(split.train, averages, users, items);
  auto trace = train_network(params, examples, cfg);
  save_checkpoint_file(params, out_file);
  write_trace(out_file + ".trace", trace);
  return params;
}

SingleRunEval do_evaluate(const SplitPair& split, const VectorTable& items,
                          const TowerNetworkParams& model,
                          const std::vector<int>& cutoffs,
                          NdcgDenominator denom) {
  auto averages = user_average(split.train);
  auto users = derive_user_vectors(split.train, averages, items);
  return evaluate(model, split, items, users, cutoffs, denom);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collaborative-filtering pipeline: item embeddings from rating "
               "sentences, dual-tower preference network, NDCG evaluation"};
  app.require_subcommand(1);

  // ---- split ----
  auto* split_cmd = app.add_subcommand("split", "Fixed-UPL train/test split");
  auto& sp_config = add_config_option(split_cmd);
  std::string sp_data, sp_format = "tab", sp_out;
  int sp_upl = 10;
  std::uint64_t sp_seed = 1;
  split_cmd->add_option("--data", sp_data, "rating file")->required();
  split_cmd->add_option("--format", sp_format, "tab | colon");
  split_cmd->add_option("--upl", sp_upl, "train ratings per user")->required();
  split_cmd->add_option("--seed", sp_seed, "split seed");
  split_cmd->add_option("--out", sp_out, "output directory")->required();
  split_cmd->callback([&] {
    apply_config(split_cmd, sp_config);
    auto split = do_split(sp_data, parse_format(sp_format), sp_upl, sp_seed, sp_out);
    std::cout << "retained_users " << split.train.user_count() << '\n';
  });

  // ---- embed ----
  auto* embed_cmd = app.add_subcommand("embed", "Train item embeddings");
  auto& em2_config = add_config_option(embed_cmd);
  std::string em_split_dir, em_out, em_corpus_dump, em_cooc_dump;
  std::uint64_t em_seed = 1;
  CommonEmbedOpts em;
  embed_cmd->add_option("--split-dir", em_split_dir, "split directory")->required();
  embed_cmd->add_option("--method", em.method, "sgns | glove");
  embed_cmd->add_option("--dim", em.config.dim, "vector size");
  embed_cmd->add_option("--window", em.config.window, "context half-width");
  embed_cmd->add_option("--epochs", em.config.epochs, "training epochs");
  embed_cmd->add_option("--lr", em.config.learning_rate, "initial learning rate");
  embed_cmd->add_option("--negatives", em.config.negatives_k, "negative samples (sgns)");
  embed_cmd->add_option("--noise-power", em.config.noise_power, "noise exponent (sgns)");
  embed_cmd->add_option("--x-max", em.config.x_max, "weighting cap (glove)");
  embed_cmd->add_option("--alpha", em.config.alpha, "weighting exponent (glove)");
  embed_cmd->add_option("--threads", em.config.threads,
                        "worker threads (>1 is non-deterministic)");
  embed_cmd->add_flag("--no-reshuffle", em.no_reshuffle,
                      "keep the epoch-0 shuffle for every epoch");
  embed_cmd->add_flag("--export-input-only", em.export_input_only,
                      "export glove input vectors instead of input+context");
  embed_cmd->add_option("--seed", em_seed, "stage seed");
  embed_cmd->add_option("--out", em_out, "embedding table file")->required();
  embed_cmd->add_option("--dump-corpus", em_corpus_dump, "sentence dump file");
  embed_cmd->add_option("--dump-cooc", em_cooc_dump, "co-occurrence dump file");
  embed_cmd->callback([&] {
    apply_config(embed_cmd, em2_config);
    auto split = read_split_files(em_split_dir);
    do_embed(split, em.resolve(), em_seed, em_out, em_corpus_dump, em_cooc_dump);
  });

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "Train the preference network");
  auto& tr2_config = add_config_option(train_cmd);
  std::string tr_split_dir, tr_embeddings, tr_out, tr_user_vectors;
  std::uint64_t tr_seed = 1;
  CommonNetOpts tr;
  train_cmd->add_option("--split-dir", tr_split_dir, "split directory")->required();
  train_cmd->add_option("--embeddings", tr_embeddings, "embedding table")->required();
  train_cmd->add_option("--tower-layers", tr.tower_layers, "comma-separated widths");
  train_cmd->add_option("--shared-layer", tr.config.shared_layer, "shared width");
  train_cmd->add_flag("--no-shared-layer", tr.no_shared_layer,
                      "linear fusion of the tower outputs");
  train_cmd->add_option("--dropout-tower", tr.config.dropout_tower, "tower dropout");
  train_cmd->add_option("--dropout-shared", tr.config.dropout_shared,
                        "shared-layer dropout");
  train_cmd->add_option("--lr", tr.config.learning_rate, "learning rate");
  train_cmd->add_option("--momentum", tr.config.momentum, "momentum");
  train_cmd->add_option("--grad-clip", tr.config.grad_clip,
                        "mean-gradient norm cap, 0 disables");
  train_cmd->add_option("--epochs", tr.config.epochs, "epochs");
  train_cmd->add_option("--batch-size", tr.config.batch_size, "batch size");
  train_cmd->add_option("--seed", tr_seed, "stage seed");
  train_cmd->add_option("--out", tr_out, "checkpoint file")->required();
  train_cmd->add_option("--user-vectors-out", tr_user_vectors,
                        "also write derived user vectors");
  train_cmd->callback([&] {
    apply_config(train_cmd, tr2_config);
    auto split = read_split_files(tr_split_dir);
    auto items = VectorTable::load_file(tr_embeddings);
    do_train(split, items, tr.resolve(), tr_seed, tr_out, tr_user_vectors);
  });

  // ---- evaluate ----
  auto* eval_cmd = app.add_subcommand("evaluate", "NDCG over the test split");
  auto& ev2_config = add_config_option(eval_cmd);
  std::string ev_split_dir, ev_embeddings, ev_checkpoint, ev_out;
  std::string ev_cutoffs = "5,10", ev_denominator = "standard";
  std::string ev_seeds, ev_data, ev_format = "tab", ev_method = "glove";
  int ev_upl = 10;
  CommonEmbedOpts ev_embed;
  CommonNetOpts ev_net;
  eval_cmd->add_option("--split-dir", ev_split_dir, "split directory");
  eval_cmd->add_option("--embeddings", ev_embeddings, "embedding table");
  eval_cmd->add_option("--checkpoint", ev_checkpoint, "model checkpoint");
  eval_cmd->add_option("--cutoffs", ev_cutoffs, "comma-separated NDCG cutoffs");
  eval_cmd->add_option("--ndcg-denominator", ev_denominator, "standard | paper");
  eval_cmd->add_option("--out", ev_out, "report file")->required();
  eval_cmd->add_option("--seeds", ev_seeds,
                       "comma-separated seeds: rerun the whole pipeline per "
                       "seed (requires --data)");
  eval_cmd->add_option("--data", ev_data, "rating file for --seeds mode");
  eval_cmd->add_option("--format", ev_format, "tab | colon");
  eval_cmd->add_option("--upl", ev_upl, "train ratings per user (--seeds mode)");
  eval_cmd->add_option("--method", ev_method, "sgns | glove (--seeds mode)");
  eval_cmd->callback([&] {
    apply_config(eval_cmd, ev2_config);
    const auto cutoffs = parse_cutoffs(ev_cutoffs);
    const auto denom = ev_denominator == "paper" ? NdcgDenominator::paper
                                                 : NdcgDenominator::standard;
    EvalReport report;
    std::string label;
    if (!ev_seeds.empty()) {
      if (ev_data.empty()) {
        throw ValidationError("--seeds mode requires --data");
      }
      PipelineConfig cfg;
      cfg.upl = ev_upl;
      ev_embed.method = ev_method;
      cfg.embedding = ev_embed.resolve();
      cfg.network = ev_net.resolve();
      cfg.cutoffs = cutoffs;
      cfg.denominator = denom;
      cfg.seeds = parse_seed_list(ev_seeds);
      auto data = load_ratings(ev_data, parse_format(ev_format));
      report = run_pipeline(data, cfg);
      label = ev_method + " upl=" + std::to_string(ev_upl);
    } else {
      if (ev_split_dir.empty() || ev_embeddings.empty() || ev_checkpoint.empty()) {
        throw ValidationError(
            "evaluate needs --split-dir, --embeddings and --checkpoint (or "
            "--seeds with --data)");
      }
      auto split = read_split_files(ev_split_dir);
      auto items = VectorTable::load_file(ev_embeddings);
      auto model = load_checkpoint_file(ev_checkpoint);
      report.add_run(split.seed,
                     do_evaluate(split, items, model, cutoffs, denom));
      label = "checkpoint " + ev_checkpoint;
    }
    std::ofstream out(ev_out);
    if (!out) throw IoError("cannot write report: " + ev_out);
    report.write(out, label);
    for (int n : cutoffs) {
      std::cout << "ndcg@" << n << " " << report.mean(n) << '\n';
    }
  });

  // ---- recommend ----
  auto* rec_cmd = app.add_subcommand("recommend", "Top-n unrated items for a user");
  auto& rc2_config = add_config_option(rec_cmd);
  std::string rc_split_dir, rc_embeddings, rc_checkpoint, rc_user;
  int rc_n = 10;
  rec_cmd->add_option("--split-dir", rc_split_dir, "split directory")->required();
  rec_cmd->add_option("--embeddings", rc_embeddings, "embedding table")->required();
  rec_cmd->add_option("--checkpoint", rc_checkpoint, "model checkpoint")->required();
  rec_cmd->add_option("--user", rc_user, "user id")->required();
  rec_cmd->add_option("--n", rc_n, "list length");
  rec_cmd->callback([&] {
    apply_config(rec_cmd, rc2_config);
    auto split = read_split_files(rc_split_dir);
    auto items = VectorTable::load_file(rc_embeddings);
    auto model = load_checkpoint_file(rc_checkpoint);
    const int user_index = split.train.user_index(rc_user);
    if (user_index < 0) throw ValidationError("unknown user: " + rc_user);
    if (rc_n < 0) throw ValidationError("--n must be >= 0");

    auto averages = user_average(split.train);
    auto users = derive_user_vectors(split.train, averages, items);
    auto user_vec = users.vector_of(rc_user);

    std::vector<bool> rated(items.size(), false);
    for (const auto& [item, _] : split.train.profile(user_index)) {
      const int row = items.index_of(split.train.item_id(item));
      if (row >= 0) rated[row] = true;
    }
    struct Scored { float score; int row; };
    std::vector<Scored> scored;
    for (std::size_t r = 0; r < items.size(); ++r) {
      if (rated[r]) continue;
      scored.push_back({predict_preference(model, user_vec,
                                           items.row(static_cast<int>(r))),
                        static_cast<int>(r)});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.row < b.row;
    });
    const int limit = std::min<int>(rc_n, static_cast<int>(scored.size()));
    for (int k = 0; k < limit; ++k) {
      std::cout << (k + 1) << '\t' << items.ids()[scored[k].row] << '\t'
                << format_float(scored[k].score) << '\n';
    }
  });

  // ---- run ----
  auto* run_cmd = app.add_subcommand("run", "Full pipeline, one or more seeds");
  auto& rn2_config = add_config_option(run_cmd);
  std::string rn_data, rn_format = "tab", rn_out, rn_seeds = "1";
  std::string rn_cutoffs = "5,10", rn_denominator = "standard";
  int rn_upl = 10;
  CommonEmbedOpts rn_embed;
  CommonNetOpts rn_net;
  run_cmd->add_option("--data", rn_data, "rating file")->required();
  run_cmd->add_option("--format", rn_format, "tab | colon");
  run_cmd->add_option("--upl", rn_upl, "train ratings per user");
  run_cmd->add_option("--seeds", rn_seeds, "comma-separated run seeds");
  run_cmd->add_option("--out", rn_out, "output directory")->required();
  run_cmd->add_option("--method", rn_embed.method, "sgns | glove");
  run_cmd->add_option("--dim", rn_embed.config.dim, "vector size");
  run_cmd->add_option("--window", rn_embed.config.window, "context half-width");
  run_cmd->add_option("--embed-epochs", rn_embed.config.epochs, "embedding epochs");
  run_cmd->add_option("--embed-lr", rn_embed.config.learning_rate, "embedding lr");
  run_cmd->add_option("--threads", rn_embed.config.threads, "embedding threads");
  run_cmd->add_option("--tower-layers", rn_net.tower_layers, "tower widths");
  run_cmd->add_option("--shared-layer", rn_net.config.shared_layer, "shared width");
  run_cmd->add_flag("--no-shared-layer", rn_net.no_shared_layer,
                    "linear fusion of the tower outputs");
  run_cmd->add_option("--net-epochs", rn_net.config.epochs, "network epochs");
  run_cmd->add_option("--net-lr", rn_net.config.learning_rate, "network lr");
  run_cmd->add_option("--grad-clip", rn_net.config.grad_clip,
                      "mean-gradient norm cap, 0 disables");
  run_cmd->add_option("--batch-size", rn_net.config.batch_size, "batch size");
  run_cmd->add_option("--cutoffs", rn_cutoffs, "NDCG cutoffs");
  run_cmd->add_option("--ndcg-denominator", rn_denominator, "standard | paper");
  run_cmd->callback([&] {
    apply_config(run_cmd, rn2_config);
    const auto data = load_ratings(rn_data, parse_format(rn_format));
    const auto cutoffs = parse_cutoffs(rn_cutoffs);
    const auto denom = rn_denominator == "paper" ? NdcgDenominator::paper
                                                 : NdcgDenominator::standard;
    const auto embed_cfg = rn_embed.resolve();
    const auto net_cfg = rn_net.resolve();
    fs::create_directories(rn_out);

    EvalReport report;
    for (std::uint64_t seed : parse_seed_list(rn_seeds)) {
      const fs::path dir = fs::path(rn_out) / ("seed_" + std::to_string(seed));
      fs::create_directories(dir);
      auto split = split_by_upl(data, rn_upl, stage_seeds(seed).split);
      write_split_files(split, dir.string());
      auto items = do_embed(split, embed_cfg, seed,
                            (dir / "embeddings.txt").string(), "", "");
      auto model = do_train(split, items, net_cfg, seed,
                            (dir / "checkpoint.txt").string(), "");
      report.add_run(seed, do_evaluate(split, items, model, cutoffs, denom));
    }
    std::ofstream out(fs::path(rn_out) / "report.txt");
    if (!out) throw IoError("cannot write report in " + rn_out);
    out << "data = " << fs::path(rn_data).filename().string() << '\n';
    out << "upl = " << rn_upl << '\n';
    out << "method = " << rn_embed.method << '\n';
    report.write(out, rn_embed.method + " upl=" + std::to_string(rn_upl));
    for (int n : cutoffs) {
      std::cout << "ndcg@" << n << " " << report.mean(n) << '\n';
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const TrainingError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
