#pragma once

#include <cstdint>
#include <vector>

namespace vica::sampler {

using FrameIndex = std::int64_t;

struct FrameIndexPlan {
  FrameIndex source_frame_count = 0;
  std::vector<FrameIndex> flat_indices;
  std::vector<FrameIndex> hier_indices;  // subset of flat_indices
};

// Centre-aligned uniform selection: index i = floor((i + 0.5) * count / n).
std::vector<FrameIndex> sample_uniform(FrameIndex source_frame_count, FrameIndex n);

// Uniformly picks n_hiera positions of `flat_indices` and returns the frames
// at those positions.
std::vector<FrameIndex> subsample(const std::vector<FrameIndex>& flat_indices,
                                  FrameIndex n_hiera);

// n_hiera == 0 yields an empty hierarchical subset.
FrameIndexPlan plan_frames(FrameIndex source_frame_count, FrameIndex n_total,
                           FrameIndex n_hiera);

} // namespace vica::sampler
