#include "d3/temporal_moments.hpp"

#include <string>
#include <vector>

namespace d3 {

DynamicLocalFeatures segment_moments(const FrameFeatureSequence& seq, const KeySegment& segment) {
    if (segment.hi >= seq.num_frames || segment.lo > segment.hi ||
        segment.hi - segment.lo != segment.tau)
        throw BoundsError(seq.video_id + ": segment [" + std::to_string(segment.lo) + ", " +
                          std::to_string(segment.hi) + "] out of range for " +
                          std::to_string(seq.num_frames) + " frames");

    const size_t window = segment.tau + 1;
    const size_t dim = seq.local_dim;

    DynamicLocalFeatures out;
    out.segment = segment;
    out.moments.dim = dim;
    out.moments.data.resize(seq.local_count * dim);

    std::vector<double> mean(dim);
    for (size_t pos = 0; pos < seq.local_count; ++pos) {
        std::fill(mean.begin(), mean.end(), 0.0);
        for (size_t f = segment.lo; f <= segment.hi; ++f) {
            const auto local = seq.local_at(f, pos);
            for (size_t d = 0; d < dim; ++d) mean[d] += local[d];
        }
        for (size_t d = 0; d < dim; ++d) mean[d] /= static_cast<double>(window);

        float* row = out.moments.data.data() + pos * dim;
        for (size_t d = 0; d < dim; ++d) {
            double acc = 0.0;
            for (size_t f = segment.lo; f <= segment.hi; ++f) {
                const double dev = static_cast<double>(seq.local_at(f, pos)[d]) - mean[d];
                acc += dev * dev;
            }
            row[d] = static_cast<float>(acc / static_cast<double>(window));
        }
    }
    return out;
}

}  // namespace d3
