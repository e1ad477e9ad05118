#include "vica/cli.hpp"

#include "json.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>
#include <openssl/evp.h>
#include <openssl/opensslv.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace vica::cli {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kInvalidStage:
    case ErrorCode::kGeometry:
    case ErrorCode::kUnsupportedShape:
    case ErrorCode::kInsufficientFrames:
      return kExitUsage;
    case ErrorCode::kTransport:
    case ErrorCode::kService:
      return kExitService;
    default:
      return kExitRuntime;
  }
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "sha256 failed");
  }
  std::ostringstream os;
  os << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) os << std::setw(2) << static_cast<int>(md[i]);
  return os.str();
}

Artifacts::Artifacts(std::string command, std::string config_canonical, unsigned long long seed)
    : command_(std::move(command)), config_(std::move(config_canonical)), seed_(seed) {}

void Artifacts::add(const std::string& name, std::string bytes) {
  if (name == "manifest.json") throw Error(ErrorCode::kInput, "reserved artifact name");
  for (const auto& f : files_) {
    if (f.first == name) throw Error(ErrorCode::kInput, "duplicate artifact " + name);
  }
  files_.emplace_back(name, std::move(bytes));
}

std::string Artifacts::manifest() const {
  nlohmann::ordered_json j;
  j["tool"] = "vica";
  j["version"] = kVersion;
  j["command"] = command_;
  j["seed"] = seed_;
  j["config_hash"] = sha256_hex(config_);
  j["config"] = config_;
  nlohmann::ordered_json libs;
  libs["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                  "." + std::to_string(EIGEN_MINOR_VERSION);
  libs["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                          std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                          std::to_string(NLOHMANN_JSON_VERSION_PATCH);
  libs["cli11"] = CLI11_VERSION;
  libs["openssl"] = OPENSSL_VERSION_TEXT;
  j["libraries"] = libs;
  auto sorted = files_;
  std::sort(sorted.begin(), sorted.end());
  nlohmann::ordered_json outputs = nlohmann::ordered_json::object();
  for (const auto& [name, bytes] : sorted) outputs[name] = sha256_hex(bytes);
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

void Artifacts::write(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create output directory " + dir.string());
  auto put = [&dir](const std::string& name, const std::string& bytes) {
    const auto path = dir / name;
    std::ofstream os(path, std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  };
  for (const auto& [name, bytes] : files_) put(name, bytes);
  put("manifest.json", manifest());
}

} // namespace vica::cli
