#include "rexnet/dataset.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "rexnet/errors.hpp"
#include "rexnet/rng.hpp"

namespace rexnet {

void RatingDataset::add(std::string user, std::string item, int rating) {
  if (rating < scale_.min_rating || rating > scale_.max_rating) {
    throw ValidationError("rating " + std::to_string(rating) + " for (" + user +
                          ", " + item + ") outside scale [" +
                          std::to_string(scale_.min_rating) + ", " +
                          std::to_string(scale_.max_rating) + "]");
  }
  auto [uit, user_new] = user_lookup_.try_emplace(
      user, static_cast<int>(user_ids_.size()));
  if (user_new) {
    user_ids_.push_back(user);
    profiles_.emplace_back();
  }
  auto [iit, item_new] = item_lookup_.try_emplace(
      item, static_cast<int>(item_ids_.size()));
  if (item_new) {
    item_ids_.push_back(item);
  }
  const int u = uit->second;
  const int i = iit->second;
  for (const auto& [existing_item, _] : profiles_[u]) {
    if (existing_item == i) {
      throw ValidationError("duplicate rating for (" + user + ", " + item +
                            ")");
    }
  }
  profiles_[u].emplace_back(i, rating);
  triples_.push_back({std::move(user), std::move(item), rating});
}

int RatingDataset::user_index(const std::string& id) const {
  auto it = user_lookup_.find(id);
  return it == user_lookup_.end() ? -1 : it->second;
}

int RatingDataset::item_index(const std::string& id) const {
  auto it = item_lookup_.find(id);
  return it == item_lookup_.end() ? -1 : it->second;
}

double RatingDataset::density() const {
  if (triples_.empty()) return 0.0;
  return static_cast<double>(triples_.size()) /
         (static_cast<double>(user_count()) *
          static_cast<double>(item_count()));
}

namespace {

std::vector<std::string> split_fields(const std::string& line,
                                      RatingFormat format) {
  std::vector<std::string> fields;
  const std::string sep = format == RatingFormat::tab_separated ? "\t" : "::";
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    if (next == std::string::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, next - pos));
    pos = next + sep.size();
  }
  return fields;
}

int parse_int_field(const std::string& s, std::size_t line_no,
                    const char* what) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError("line " + std::to_string(line_no) + ": non-numeric " +
                     what + " '" + s + "'");
  }
  return value;
}

}  // namespace

RatingDataset parse_ratings(std::istream& in, RatingFormat format,
                            RatingScale scale) {
  RatingDataset dataset(scale);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line, format);
    if (fields.size() != 4) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 4 " +
                       "fields, got " + std::to_string(fields.size()));
    }
    const int rating = parse_int_field(fields[2], line_no, "rating");
    dataset.add(std::move(fields[0]), std::move(fields[1]), rating);
  }
  return dataset;
}

RatingDataset load_ratings(const std::string& path, RatingFormat format,
                           RatingScale scale) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rating file: " + path);
  return parse_ratings(in, format, scale);
}

void write_ratings(const RatingDataset& dataset, std::ostream& out,
                   RatingFormat format) {
  const char* sep = format == RatingFormat::tab_separated ? "\t" : "::";
  for (const auto& t : dataset.triples()) {
    out << t.user << sep << t.item << sep << t.rating << sep << 0 << '\n';
  }
}

SplitPair split_by_upl(const RatingDataset& dataset, int upl,
                       std::uint64_t seed) {
  if (upl < 1) throw ValidationError("upl must be >= 1");
  SplitPair split;
  split.train = RatingDataset(dataset.scale());
  split.test = RatingDataset(dataset.scale());
  split.upl = upl;
  split.seed = seed;
  for (std::size_t u = 0; u < dataset.user_count(); ++u) {
    const auto& profile = dataset.profile(static_cast<int>(u));
    if (profile.size() <= static_cast<std::size_t>(upl)) continue;
    std::vector<std::size_t> order(profile.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, u));
    rng.shuffle(order.begin(), order.end());
    // first `upl` positions go to train; keep profile order within each side
    std::vector<bool> in_train(profile.size(), false);
    for (int k = 0; k < upl; ++k) in_train[order[k]] = true;
    const std::string& user = dataset.user_id(static_cast<int>(u));
    for (std::size_t k = 0; k < profile.size(); ++k) {
      const auto& [item, rating] = profile[k];
      auto& side = in_train[k] ? split.train : split.test;
      side.add(user, dataset.item_id(item), rating);
    }
  }
  if (split.train.empty()) {
    throw ValidationError("upl " + std::to_string(upl) +
                          " retains no users (every profile has <= upl "
                          "ratings)");
  }
  return split;
}

UserAverages user_average(const RatingDataset& train) {
  if (train.empty()) throw ValidationError("empty train split");
  UserAverages averages;
  averages.reserve(train.user_count());
  for (std::size_t u = 0; u < train.user_count(); ++u) {
    const auto& profile = train.profile(static_cast<int>(u));
    double sum = 0.0;
    for (const auto& [item, rating] : profile) sum += rating;
    averages.emplace(train.user_id(static_cast<int>(u)),
                     sum / static_cast<double>(profile.size()));
  }
  return averages;
}

}  // namespace rexnet
