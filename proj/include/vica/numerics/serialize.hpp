#pragma once

// Flat binary persistence, all integers and values little-endian.
//
// Tensor record:
//   bytes 0..3   magic "VTNS"
//   u32          rank
//   u64 x rank   extents
//   f64 x prod   values, row-major
//
// Checkpoint (ParamStore):
//   bytes 0..3   magic "VCKP"
//   u32          format version (1)
//   u64          leaf count
//   per leaf, in lexicographic path order:
//     u32 path length, path bytes (UTF-8), u8 trainable flag, tensor record

#include "vica/numerics/param_store.hpp"
#include "vica/numerics/tensor.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace vica::nx {

void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

void write_checkpoint(std::ostream& os, const ParamStore& store);
ParamStore read_checkpoint(std::istream& is);

void save_checkpoint(const std::filesystem::path& path, const ParamStore& store);
ParamStore load_checkpoint(const std::filesystem::path& path);

std::string tensor_bytes(const Tensor& t);

} // namespace vica::nx
