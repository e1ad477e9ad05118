#include "vica/numerics/param_store.hpp"

#include "vica/error.hpp"

namespace vica::nx {

bool path_under(std::string_view path, std::string_view prefix) {
  if (prefix.empty()) return true;
  if (path.size() < prefix.size() || path.substr(0, prefix.size()) != prefix) {
    return false;
  }
  return path.size() == prefix.size() || path[prefix.size()] == '.';
}

void ParamStore::add(const std::string& path, Tensor value, bool trainable) {
  auto [it, inserted] = leaves_.emplace(path, Leaf{std::move(value), trainable});
  if (!inserted) throw Error(ErrorCode::kInput, "duplicate parameter path " + path);
}

bool ParamStore::contains(const std::string& path) const {
  return leaves_.find(path) != leaves_.end();
}

const Leaf& ParamStore::leaf(const std::string& path) const {
  auto it = leaves_.find(path);
  if (it == leaves_.end()) throw Error(ErrorCode::kInput, "no parameter " + path);
  return it->second;
}

Leaf& ParamStore::leaf(const std::string& path) {
  auto it = leaves_.find(path);
  if (it == leaves_.end()) throw Error(ErrorCode::kInput, "no parameter " + path);
  return it->second;
}

std::vector<std::string> ParamStore::paths() const {
  std::vector<std::string> out;
  out.reserve(leaves_.size());
  for (const auto& [p, _] : leaves_) out.push_back(p);
  return out;
}

std::vector<std::string> ParamStore::paths_under(std::string_view prefix) const {
  std::vector<std::string> out;
  for (const auto& [p, _] : leaves_) {
    if (path_under(p, prefix)) out.push_back(p);
  }
  return out;
}

void ParamStore::set_trainable_prefixes(const std::vector<std::string>& prefixes) {
  for (auto& [p, leaf] : leaves_) {
    leaf.trainable = false;
    for (const auto& pre : prefixes) {
      if (path_under(p, pre)) {
        leaf.trainable = true;
        break;
      }
    }
  }
}

void ParamStore::set_all_trainable(bool trainable) {
  for (auto& [_, leaf] : leaves_) leaf.trainable = trainable;
}

Index ParamStore::parameter_count() const {
  Index n = 0;
  for (const auto& [_, leaf] : leaves_) n += leaf.value.size();
  return n;
}

Index ParamStore::trainable_parameter_count() const {
  Index n = 0;
  for (const auto& [_, leaf] : leaves_) {
    if (leaf.trainable) n += leaf.value.size();
  }
  return n;
}

std::map<std::string, std::uint64_t> ParamStore::leaf_hashes() const {
  std::map<std::string, std::uint64_t> out;
  for (const auto& [p, leaf] : leaves_) out.emplace(p, content_hash(leaf.value));
  return out;
}

bool operator==(const Leaf& a, const Leaf& b) {
  return a.trainable == b.trainable && a.value == b.value;
}

bool operator==(const ParamStore& a, const ParamStore& b) {
  return a.leaves_ == b.leaves_;
}

} // namespace vica::nx
