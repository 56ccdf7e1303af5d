#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "d3/error.hpp"

namespace d3 {

// Flat row-major bag of feature vectors (rows of length dim). Used for local
// feature pools, clustering inputs and encoder inputs.
struct FeatureSet {
    size_t dim = 0;
    std::vector<float> data;

    FeatureSet() = default;
    explicit FeatureSet(size_t d) : dim(d) {}

    size_t size() const { return dim == 0 ? 0 : data.size() / dim; }

    std::span<const float> row(size_t i) const { return {data.data() + i * dim, dim}; }

    void push_back(std::span<const float> v) {
        if (dim == 0) dim = v.size();
        if (v.size() != dim) throw ShapeError("FeatureSet: row length mismatch");
        data.insert(data.end(), v.begin(), v.end());
    }

    void append(const FeatureSet& other) {
        if (other.size() == 0) return;
        if (dim == 0) dim = other.dim;
        if (other.dim != dim) throw ShapeError("FeatureSet: append dim mismatch");
        data.insert(data.end(), other.data.begin(), other.data.end());
    }
};

// Per-video time series: one global feature vector per frame plus a grid of
// local feature vectors per frame. This is the unit every downstream stage
// consumes; key selection reads the globals, description reads the locals.
struct FrameFeatureSequence {
    std::string video_id;
    size_t num_frames = 0;   // N
    size_t global_dim = 0;
    size_t local_count = 0;  // L, local positions per frame
    size_t local_dim = 0;
    float fps = 25.0f;
    std::vector<float> global_features;  // N x global_dim, frame-major
    std::vector<float> local_features;   // N x L x local_dim, frame-major then position-major

    std::span<const float> global_frame(size_t i) const {
        return {global_features.data() + i * global_dim, global_dim};
    }
    std::span<const float> local_at(size_t frame, size_t pos) const {
        return {local_features.data() + (frame * local_count + pos) * local_dim, local_dim};
    }

    // Throws ValidationError if shapes are inconsistent or any value is
    // non-finite (the offending frame is named in the message).
    void validate() const;
};

struct ManifestEntry {
    std::string video_id;
    std::string class_label;
    std::filesystem::path feature_path;
};

// video_id -> class label -> feature file, driving batch runs and LOOCV.
struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::vector<std::string> class_names;  // distinct, first-appearance order

    // -1 if the label is unknown.
    int class_index(std::string_view label) const;
};

// D3FT container:
//   "D3FT" | u16 version=1 | u32 N | u32 global_dim | u32 L | u32 local_dim |
//   f32 fps | N*global_dim f32 globals | N*L*local_dim f32 locals
// All integers and reals little-endian. Globals are frame-major; locals are
// frame-major then position-major. video_id is not stored; the loader fills
// it from the file stem.
FrameFeatureSequence load_feature_sequence(const std::filesystem::path& path);
void save_feature_sequence(const FrameFeatureSequence& seq, const std::filesystem::path& path);

// Manifest: one record per line, `video_id<TAB>class_label<TAB>feature_path`,
// UTF-8. `#` comment lines and blank lines are ignored. Relative feature
// paths resolve against the manifest's directory. Every feature path must
// exist at load time.
DatasetManifest load_manifest(const std::filesystem::path& path);

}  // namespace d3
