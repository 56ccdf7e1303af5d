#include "d3/feature_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "binio.hpp"

namespace d3 {

namespace {

constexpr char kMagic[4] = {'D', '3', 'F', 'T'};
constexpr uint16_t kVersion = 1;

// Index of the first non-finite value, or npos.
size_t first_non_finite(const std::vector<float>& v) {
    for (size_t i = 0; i < v.size(); ++i)
        if (!std::isfinite(v[i])) return i;
    return std::string::npos;
}

}  // namespace

void FrameFeatureSequence::validate() const {
    if (num_frames == 0) throw ValidationError(video_id + ": empty sequence (N = 0)");
    if (global_dim == 0) throw ValidationError(video_id + ": global_dim must be positive");
    if (local_count == 0) throw ValidationError(video_id + ": local grid must be non-empty");
    if (local_dim == 0) throw ValidationError(video_id + ": local_dim must be positive");
    if (global_features.size() != num_frames * global_dim)
        throw ValidationError(video_id + ": global feature payload has wrong size");
    if (local_features.size() != num_frames * local_count * local_dim)
        throw ValidationError(video_id + ": local feature payload has wrong size");
    if (!(fps > 0.0f) || !std::isfinite(fps))
        throw ValidationError(video_id + ": fps must be positive and finite");

    if (size_t i = first_non_finite(global_features); i != std::string::npos)
        throw ValidationError(video_id + ": non-finite global feature value at frame " +
                              std::to_string(i / global_dim));
    if (size_t i = first_non_finite(local_features); i != std::string::npos)
        throw ValidationError(video_id + ": non-finite local feature value at frame " +
                              std::to_string(i / (local_count * local_dim)));
}

FrameFeatureSequence load_feature_sequence(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open feature file " + path.string());
    const std::string ctx = path.string();

    binio::expect_magic(is, kMagic, ctx);
    const auto version = binio::read_le<uint16_t>(is, "version", ctx);
    if (version != kVersion)
        throw FormatError(ctx + ": unsupported D3FT version " + std::to_string(version));

    FrameFeatureSequence seq;
    seq.video_id = path.stem().string();
    seq.num_frames = binio::read_le<uint32_t>(is, "N", ctx);
    seq.global_dim = binio::read_le<uint32_t>(is, "global_dim", ctx);
    seq.local_count = binio::read_le<uint32_t>(is, "L", ctx);
    seq.local_dim = binio::read_le<uint32_t>(is, "local_dim", ctx);
    {
        uint32_t bits = binio::read_le<uint32_t>(is, "fps", ctx);
        std::memcpy(&seq.fps, &bits, 4);
    }
    if (seq.num_frames == 0) throw ValidationError(ctx + ": empty sequence (N = 0)");
    if (seq.global_dim == 0 || seq.local_count == 0 || seq.local_dim == 0)
        throw ValidationError(ctx + ": zero dimension in header");

    seq.global_features.resize(seq.num_frames * seq.global_dim);
    binio::read_f32_le(is, seq.global_features, "global features", ctx);
    seq.local_features.resize(seq.num_frames * seq.local_count * seq.local_dim);
    binio::read_f32_le(is, seq.local_features, "local features", ctx);
    binio::expect_eof(is, ctx);

    seq.validate();
    return seq;
}

void save_feature_sequence(const FrameFeatureSequence& seq, const std::filesystem::path& path) {
    seq.validate();  // never write an invalid file

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");

    os.write(kMagic, 4);
    binio::write_le<uint16_t>(os, kVersion);
    binio::write_le<uint32_t>(os, static_cast<uint32_t>(seq.num_frames));
    binio::write_le<uint32_t>(os, static_cast<uint32_t>(seq.global_dim));
    binio::write_le<uint32_t>(os, static_cast<uint32_t>(seq.local_count));
    binio::write_le<uint32_t>(os, static_cast<uint32_t>(seq.local_dim));
    {
        uint32_t bits;
        std::memcpy(&bits, &seq.fps, 4);
        binio::write_le<uint32_t>(os, bits);
    }
    binio::write_f32_le(os, seq.global_features);
    binio::write_f32_le(os, seq.local_features);
    if (!os) throw IoError("write failure on " + path.string());
}

int DatasetManifest::class_index(std::string_view label) const {
    for (size_t i = 0; i < class_names.size(); ++i)
        if (class_names[i] == label) return static_cast<int>(i);
    return -1;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open manifest " + path.string());
    const std::filesystem::path base = path.parent_path();

    DatasetManifest manifest;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (line.find_first_not_of(" \t") == std::string::npos) continue;

        const size_t tab1 = line.find('\t');
        const size_t tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab1 == std::string::npos || tab2 == std::string::npos)
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": expected video_id<TAB>class_label<TAB>feature_path");

        ManifestEntry entry;
        entry.video_id = line.substr(0, tab1);
        entry.class_label = line.substr(tab1 + 1, tab2 - tab1 - 1);
        std::string raw_path = line.substr(tab2 + 1);
        if (entry.video_id.empty() || entry.class_label.empty() || raw_path.empty())
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": empty field");

        if (!seen_ids.insert(entry.video_id).second)
            throw ManifestError(path.string() + ":" + std::to_string(line_no) +
                                ": duplicate video_id \"" + entry.video_id + "\"");

        std::filesystem::path fp(raw_path);
        entry.feature_path = fp.is_absolute() ? fp : base / fp;

        if (manifest.class_index(entry.class_label) < 0)
            manifest.class_names.push_back(entry.class_label);
        manifest.entries.push_back(std::move(entry));
    }

    for (const auto& e : manifest.entries)
        if (!std::filesystem::exists(e.feature_path))
            throw ManifestError(path.string() + ": feature file for \"" + e.video_id +
                                "\" not found: " + e.feature_path.string());
    return manifest;
}

}  // namespace d3
