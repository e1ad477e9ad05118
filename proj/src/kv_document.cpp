#include "vica/kv_document.hpp"

#include "vica/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace vica {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorCode::kInvalidConfig, "config key '" + key + "': '" + text +
                                               "' is not a valid number");
  }
  return v;
}

} // namespace

KvDocument KvDocument::parse(const std::string& text) {
  KvDocument doc;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidConfig,
                  "config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw Error(ErrorCode::kInvalidConfig,
                  "config line " + std::to_string(lineno) + ": empty key");
    }
    doc.values_[key] = trim(line.substr(eq + 1));
  }
  return doc;
}

KvDocument KvDocument::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::kInvalidConfig, "cannot read config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

std::optional<std::string> KvDocument::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::optional<long long> KvDocument::get_int(const std::string& key) const {
  auto v = get(key);
  if (!v) return std::nullopt;
  return parse_number<long long>(key, *v);
}

std::optional<double> KvDocument::get_double(const std::string& key) const {
  auto v = get(key);
  if (!v) return std::nullopt;
  return parse_number<double>(key, *v);
}

std::optional<std::vector<long long>> KvDocument::get_int_list(const std::string& key) const {
  auto v = get(key);
  if (!v) return std::nullopt;
  std::vector<long long> out;
  for (const auto& item : split_commas(*v)) out.push_back(parse_number<long long>(key, item));
  return out;
}

std::optional<std::vector<double>> KvDocument::get_double_list(const std::string& key) const {
  auto v = get(key);
  if (!v) return std::nullopt;
  std::vector<double> out;
  for (const auto& item : split_commas(*v)) out.push_back(parse_number<double>(key, item));
  return out;
}

std::string KvDocument::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

} // namespace vica
