#pragma once

// Shared helpers for unit and acceptance tests.

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "d3/feature_model.hpp"
#include "d3/rng.hpp"

namespace d3::test {

// Unique scratch directory, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<uint64_t> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("d3_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

inline FrameFeatureSequence random_sequence(Rng& rng, size_t n, size_t global_dim, size_t l,
                                            size_t local_dim, float fps = 25.0f) {
    FrameFeatureSequence seq;
    seq.video_id = "random";
    seq.num_frames = n;
    seq.global_dim = global_dim;
    seq.local_count = l;
    seq.local_dim = local_dim;
    seq.fps = fps;
    seq.global_features.resize(n * global_dim);
    seq.local_features.resize(n * l * local_dim);
    for (float& v : seq.global_features) v = static_cast<float>(rng.uniform_real() * 2.0 - 1.0);
    for (float& v : seq.local_features) v = static_cast<float>(rng.uniform_real() * 2.0 - 1.0);
    return seq;
}

inline FeatureSet random_features(Rng& rng, size_t count, size_t dim, double scale = 1.0) {
    FeatureSet fs(dim);
    fs.data.resize(count * dim);
    for (float& v : fs.data) v = static_cast<float>((rng.uniform_real() * 2.0 - 1.0) * scale);
    return fs;
}

inline bool bitwise_equal(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) return false;
    return a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

inline double max_rel_error(const std::vector<float>& got, const std::vector<double>& want) {
    double worst = 0.0;
    for (size_t i = 0; i < got.size(); ++i) {
        const double denom = std::max(std::abs(want[i]), 1e-12);
        worst = std::max(worst, std::abs(static_cast<double>(got[i]) - want[i]) / denom);
    }
    return worst;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

}  // namespace d3::test
