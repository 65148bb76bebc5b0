#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace rexnet {

/// Dense id -> vector map backing both item embeddings and user vectors.
/// Text format: first line `<size> <dim>`, then one line per row:
/// `<id> <dim floats>` with shortest round-trip decimals, so save/load
/// is bit-exact.
class VectorTable {
 public:
  VectorTable() = default;
  explicit VectorTable(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

  // appends a zero row, returns its index; throws ValidationError on
  // duplicate id
  int add(const std::string& id);

  bool contains(const std::string& id) const {
    return lookup_.count(id) != 0;
  }
  int index_of(const std::string& id) const;  // -1 if missing

  std::span<float> row(int index);
  std::span<const float> row(int index) const;

  // throws ValidationError naming the id when absent
  std::span<const float> vector_of(const std::string& id) const;

  bool all_finite() const;

  void save(std::ostream& out) const;
  void save_file(const std::string& path) const;
  static VectorTable load(std::istream& in);
  static VectorTable load_file(const std::string& path);

 private:
  int dim_ = 0;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, int> lookup_;
  std::vector<float> data_;
};

}  // namespace rexnet
