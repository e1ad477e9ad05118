#include "vica/sampler.hpp"

#include "vica/error.hpp"

#include <string>

namespace vica::sampler {

std::vector<FrameIndex> sample_uniform(FrameIndex source_frame_count, FrameIndex n) {
  if (source_frame_count < 1) {
    throw Error(ErrorCode::kInsufficientFrames, "video has no frames");
  }
  if (n < 1) throw Error(ErrorCode::kEmptySubset, "cannot sample zero frames");
  if (n > source_frame_count) {
    throw Error(ErrorCode::kInsufficientFrames,
                "requested " + std::to_string(n) + " frames from a " +
                    std::to_string(source_frame_count) + "-frame video");
  }
  std::vector<FrameIndex> out(static_cast<std::size_t>(n));
  // floor((2i + 1) * F / (2n)) in exact integer arithmetic.
  for (FrameIndex i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = ((2 * i + 1) * source_frame_count) / (2 * n);
  }
  return out;
}

std::vector<FrameIndex> subsample(const std::vector<FrameIndex>& flat_indices,
                                  FrameIndex n_hiera) {
  if (n_hiera == 0) throw Error(ErrorCode::kEmptySubset, "hierarchical subset is empty");
  const auto positions =
      sample_uniform(static_cast<FrameIndex>(flat_indices.size()), n_hiera);
  std::vector<FrameIndex> out;
  out.reserve(positions.size());
  for (FrameIndex p : positions) out.push_back(flat_indices[static_cast<std::size_t>(p)]);
  return out;
}

FrameIndexPlan plan_frames(FrameIndex source_frame_count, FrameIndex n_total,
                           FrameIndex n_hiera) {
  FrameIndexPlan plan;
  plan.source_frame_count = source_frame_count;
  plan.flat_indices = sample_uniform(source_frame_count, n_total);
  if (n_hiera > 0) plan.hier_indices = subsample(plan.flat_indices, n_hiera);
  return plan;
}

} // namespace vica::sampler
