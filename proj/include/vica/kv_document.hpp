#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vica {

// `key = value` text documents. Blank lines and `#` comments are ignored;
// later duplicates override earlier ones.
class KvDocument {
 public:
  static KvDocument parse(const std::string& text);
  static KvDocument load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::optional<long long> get_int(const std::string& key) const;
  std::optional<double> get_double(const std::string& key) const;
  // Comma-separated integers, e.g. "1, 2, 2, 2".
  std::optional<std::vector<long long>> get_int_list(const std::string& key) const;
  std::optional<std::vector<double>> get_double_list(const std::string& key) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& entries() const { return values_; }

  // Canonical serialization (sorted keys), used for config hashing.
  std::string canonical() const;

 private:
  std::map<std::string, std::string> values_;
};

} // namespace vica
