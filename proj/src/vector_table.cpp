#include "rexnet/vector_table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "rexnet/errors.hpp"

namespace rexnet {

int VectorTable::add(const std::string& id) {
  auto [it, inserted] = lookup_.try_emplace(id, static_cast<int>(ids_.size()));
  if (!inserted) throw ValidationError("duplicate id in vector table: " + id);
  ids_.push_back(id);
  data_.resize(data_.size() + static_cast<std::size_t>(dim_), 0.0f);
  return it->second;
}

int VectorTable::index_of(const std::string& id) const {
  auto it = lookup_.find(id);
  return it == lookup_.end() ? -1 : it->second;
}

std::span<float> VectorTable::row(int index) {
  return {data_.data() + static_cast<std::size_t>(index) * dim_,
          static_cast<std::size_t>(dim_)};
}

std::span<const float> VectorTable::row(int index) const {
  return {data_.data() + static_cast<std::size_t>(index) * dim_,
          static_cast<std::size_t>(dim_)};
}

std::span<const float> VectorTable::vector_of(const std::string& id) const {
  const int index = index_of(id);
  if (index < 0) throw ValidationError("no vector for id: " + id);
  return row(index);
}

bool VectorTable::all_finite() const {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

namespace {

void append_float(std::string& out, float v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

float parse_float(const std::string& s, std::size_t line_no) {
  float v = 0.0f;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError("vector table line " + std::to_string(line_no) +
                     ": bad float '" + s + "'");
  }
  return v;
}

}  // namespace

void VectorTable::save(std::ostream& out) const {
  out << size() << ' ' << dim_ << '\n';
  std::string line;
  for (std::size_t r = 0; r < size(); ++r) {
    line.clear();
    line += ids_[r];
    for (float v : row(static_cast<int>(r))) {
      line += ' ';
      append_float(line, v);
    }
    line += '\n';
    out << line;
  }
}

void VectorTable::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write vector table: " + path);
  save(out);
}

VectorTable VectorTable::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("vector table: empty stream");
  std::istringstream header(line);
  std::size_t n = 0;
  int dim = 0;
  if (!(header >> n >> dim) || dim < 1) {
    throw ParseError("vector table line 1: bad header '" + line + "'");
  }
  VectorTable table(dim);
  std::string field;
  for (std::size_t r = 0; r < n; ++r) {
    if (!std::getline(in, line)) {
      throw ParseError("vector table: expected " + std::to_string(n) +
                       " rows, got " + std::to_string(r));
    }
    std::istringstream row_in(line);
    if (!(row_in >> field)) {
      throw ParseError("vector table line " + std::to_string(r + 2) +
                       ": missing id");
    }
    const int index = table.add(field);
    auto dest = table.row(index);
    for (int c = 0; c < dim; ++c) {
      if (!(row_in >> field)) {
        throw ParseError("vector table line " + std::to_string(r + 2) +
                         ": expected " + std::to_string(dim) + " values");
      }
      dest[c] = parse_float(field, r + 2);
    }
    if (row_in >> field) {
      throw ParseError("vector table line " + std::to_string(r + 2) +
                       ": trailing data");
    }
  }
  return table;
}

VectorTable VectorTable::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vector table: " + path);
  return load(in);
}

}  // namespace rexnet
