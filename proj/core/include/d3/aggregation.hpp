#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "d3/codebook.hpp"
#include "d3/key_selection.hpp"

namespace d3 {

enum class EncodingKind { Bof, Vlad, Fv };

const char* to_string(EncodingKind kind);
EncodingKind encoding_from_string(std::string_view name);

// Bag of features: histogram of nearest-codeword assignments (ties to the
// lowest index), L1-normalized.
std::vector<float> encode_bof(const FeatureSet& features, const Codebook& cb);

// VLAD: per-codeword sum of residuals to the nearest codeword, blocks
// concatenated in word order. encode_vlad L2-normalizes the whole vector
// (an all-zero vector is left as zeros).
std::vector<float> encode_vlad_raw(const FeatureSet& features, const Codebook& cb);
std::vector<float> encode_vlad(const FeatureSet& features, const Codebook& cb);

// Fisher vector under a diagonal GMM with exact posteriors. Raw blocks are
// ordered [Phi_1^(1), Phi_1^(2), Phi_2^(1), ...]; encode_fv applies signed
// square root then L2 normalization.
std::vector<float> encode_fv_raw(const FeatureSet& features, const GmmModel& gmm);
std::vector<float> encode_fv(const FeatureSet& features, const GmmModel& gmm);

// A trained aggregation model for one stream: a codebook for BoF/VLAD or a
// GMM for FV (the other member is left empty).
struct EncodingModel {
    EncodingKind kind = EncodingKind::Fv;
    Codebook codebook;
    GmmModel gmm;

    size_t feature_dim() const { return kind == EncodingKind::Fv ? gmm.dim : codebook.dim; }
    size_t words() const { return kind == EncodingKind::Fv ? gmm.k : codebook.k; }
    size_t encoded_dim() const;
};

EncodingModel train_encoding_model(const FeatureSet& features, EncodingKind kind, size_t k,
                                   uint64_t seed);
std::vector<float> encode_features(const FeatureSet& features, const EncodingModel& model);

// All local features of the key frames, key order then position order.
FeatureSet pool_static_features(const FrameFeatureSequence& seq,
                                const std::vector<size_t>& key_indices);
// Segment temporal variances, segment order then position order.
FeatureSet pool_dynamic_features(const FrameFeatureSequence& seq,
                                 const std::vector<KeySegment>& segments);

// One video's descriptors: the static stream (key-frame locals), the dynamic
// stream (key-segment temporal variances) and their concatenation.
struct VideoDescriptor {
    EncodingKind kind = EncodingKind::Fv;
    std::vector<float> d3s;
    std::vector<float> d3d;
    std::vector<float> d3;  // [d3s || d3d]
};

VideoDescriptor describe_video(const FrameFeatureSequence& seq, const SelectionResult& selection,
                               const EncodingModel& static_model,
                               const EncodingModel& dynamic_model);

// D3DS container: ordered video_id -> f32 vector map.
using DescriptorMap = std::vector<std::pair<std::string, std::vector<float>>>;
void save_descriptors(const DescriptorMap& descriptors, const std::filesystem::path& path);
DescriptorMap load_descriptors(const std::filesystem::path& path);

}  // namespace d3
