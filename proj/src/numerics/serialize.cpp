#include "vica/numerics/serialize.hpp"

#include "vica/error.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace vica::nx {
namespace {

constexpr std::array<char, 4> kTensorMagic{'V', 'T', 'N', 'S'};
constexpr std::array<char, 4> kCheckpointMagic{'V', 'C', 'K', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename U>
void put_le(std::ostream& os, U v) {
  std::array<char, sizeof(U)> buf{};
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  }
  os.write(buf.data(), buf.size());
}

template <typename U>
U get_le(std::istream& is) {
  std::array<unsigned char, sizeof(U)> buf{};
  is.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (!is) throw Error(ErrorCode::kIo, "truncated binary stream");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

void expect_magic(std::istream& is, const std::array<char, 4>& magic) {
  std::array<char, 4> got{};
  is.read(got.data(), got.size());
  if (!is || got != magic) throw Error(ErrorCode::kIo, "bad magic in binary stream");
}

} // namespace

void write_tensor(std::ostream& os, const Tensor& t) {
  os.write(kTensorMagic.data(), kTensorMagic.size());
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
  for (Index e : t.shape()) put_le<std::uint64_t>(os, static_cast<std::uint64_t>(e));
  for (Index i = 0; i < t.size(); ++i) {
    put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(t.data()[i]));
  }
}

Tensor read_tensor(std::istream& is) {
  expect_magic(is, kTensorMagic);
  const auto rank = get_le<std::uint32_t>(is);
  if (rank > 16) throw Error(ErrorCode::kIo, "implausible tensor rank");
  Shape shape(rank);
  for (auto& e : shape) e = static_cast<Index>(get_le<std::uint64_t>(is));
  Tensor t(shape);
  for (Index i = 0; i < t.size(); ++i) {
    t.data()[i] = std::bit_cast<double>(get_le<std::uint64_t>(is));
  }
  return t;
}

void write_checkpoint(std::ostream& os, const ParamStore& store) {
  os.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  put_le<std::uint32_t>(os, kCheckpointVersion);
  put_le<std::uint64_t>(os, store.size());
  for (const auto& [path, leaf] : store) {
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(path.size()));
    os.write(path.data(), static_cast<std::streamsize>(path.size()));
    put_le<std::uint8_t>(os, leaf.trainable ? 1 : 0);
    write_tensor(os, leaf.value);
  }
}

ParamStore read_checkpoint(std::istream& is) {
  expect_magic(is, kCheckpointMagic);
  if (get_le<std::uint32_t>(is) != kCheckpointVersion) {
    throw Error(ErrorCode::kIo, "unsupported checkpoint version");
  }
  const auto count = get_le<std::uint64_t>(is);
  ParamStore store;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = get_le<std::uint32_t>(is);
    std::string path(len, '\0');
    is.read(path.data(), len);
    const bool trainable = get_le<std::uint8_t>(is) != 0;
    store.add(path, read_tensor(is), trainable);
  }
  return store;
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore& store) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  write_checkpoint(os, store);
}

ParamStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return read_checkpoint(is);
}

std::string tensor_bytes(const Tensor& t) {
  std::ostringstream os(std::ios::binary);
  write_tensor(os, t);
  return os.str();
}

} // namespace vica::nx
