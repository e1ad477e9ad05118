#pragma once

#include "vica/numerics/tensor.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace vica::nx {

struct Leaf {
  Tensor value;
  bool trainable = true;
};

// True when `path` equals `prefix` or lies below it ("a.b" is under "a").
bool path_under(std::string_view path, std::string_view prefix);

// Named parameter leaves keyed by dotted path. std::map keeps iteration
// lexicographic, which every consumer relies on for determinism.
class ParamStore {
 public:
  void add(const std::string& path, Tensor value, bool trainable = true);
  bool contains(const std::string& path) const;

  const Leaf& leaf(const std::string& path) const;
  Leaf& leaf(const std::string& path);
  const Tensor& value(const std::string& path) const { return leaf(path).value; }
  Tensor& value(const std::string& path) { return leaf(path).value; }

  std::vector<std::string> paths() const;
  std::vector<std::string> paths_under(std::string_view prefix) const;

  // Marks each leaf trainable iff it lies under one of `prefixes`.
  void set_trainable_prefixes(const std::vector<std::string>& prefixes);
  void set_all_trainable(bool trainable);

  Index parameter_count() const;
  Index trainable_parameter_count() const;

  std::map<std::string, std::uint64_t> leaf_hashes() const;

  std::size_t size() const { return leaves_.size(); }
  auto begin() const { return leaves_.begin(); }
  auto end() const { return leaves_.end(); }
  auto begin() { return leaves_.begin(); }
  auto end() { return leaves_.end(); }

  friend bool operator==(const ParamStore&, const ParamStore&);

 private:
  std::map<std::string, Leaf, std::less<>> leaves_;
};

bool operator==(const Leaf& a, const Leaf& b);

} // namespace vica::nx
