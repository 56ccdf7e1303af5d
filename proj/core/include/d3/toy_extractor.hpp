#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "d3/feature_model.hpp"

namespace d3 {

// 8-bit grayscale frame, row-major. Stands in for decoded video frames so the
// full pipeline runs without any pretrained network.
struct GrayFrame {
    size_t width = 0;
    size_t height = 0;
    std::vector<uint8_t> pixels;

    GrayFrame() = default;
    GrayFrame(size_t w, size_t h, std::vector<uint8_t> px);

    uint8_t at(size_t x, size_t y) const { return pixels[y * width + x]; }
};

// Per grid cell: [mean intensity in [0,1], intensity std, 8-bin gradient
// orientation histogram (L1-normalized pixel votes)].
inline constexpr size_t kCellFeatureDim = 10;

struct GridFeatures {
    std::vector<float> global;  // concatenation of all cell vectors, cells row-major
    FeatureSet locals;          // grid*grid rows of kCellFeatureDim
};

// Splits the frame into grid x grid cells and computes the cell statistics.
// Gradients use central differences, one-sided at the frame border; pixels
// with zero gradient vote into orientation bin 0.
GridFeatures extract_grid_features(const GrayFrame& frame, size_t grid);

// Applies extract_grid_features to every frame, preserving order.
// L = grid*grid, global_dim = grid*grid*kCellFeatureDim.
FrameFeatureSequence extract_video(const std::vector<GrayFrame>& frames, size_t grid, float fps,
                                   std::string video_id = {});

// Binary PGM (P5), maxval <= 255.
GrayFrame load_pgm(const std::filesystem::path& path);

}  // namespace d3
