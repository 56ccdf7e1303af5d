#pragma once

#include "d3/feature_model.hpp"
#include "d3/key_selection.hpp"

namespace d3 {

// Per-position temporal variance of local features over one key segment.
struct DynamicLocalFeatures {
    KeySegment segment;
    FeatureSet moments;  // L rows of local_dim, elementwise variance (>= 0)
};

// For each local position and dimension: mean over the tau+1 frames of the
// segment, then the mean squared deviation (population variance, divisor
// tau+1). Accumulation in 64-bit, stored as 32-bit.
DynamicLocalFeatures segment_moments(const FrameFeatureSequence& seq, const KeySegment& segment);

}  // namespace d3
