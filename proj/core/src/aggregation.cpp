#include "d3/aggregation.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "binio.hpp"
#include "d3/rng.hpp"
#include "d3/temporal_moments.hpp"

namespace d3 {

namespace {

void check_dims(size_t feature_dim, size_t model_dim, const char* encoder) {
    if (feature_dim != model_dim)
        throw ShapeError(std::string(encoder) + ": feature dim " + std::to_string(feature_dim) +
                         " does not match model dim " + std::to_string(model_dim));
}

void l2_normalize(std::vector<float>& v) {
    double norm_sq = 0.0;
    for (float x : v) norm_sq += static_cast<double>(x) * x;
    if (norm_sq == 0.0) return;  // all-zero encodings stay zero
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (float& x : v) x = static_cast<float>(x * inv);
}

}  // namespace

const char* to_string(EncodingKind kind) {
    switch (kind) {
        case EncodingKind::Bof: return "bof";
        case EncodingKind::Vlad: return "vlad";
        case EncodingKind::Fv: return "fv";
    }
    return "?";
}

EncodingKind encoding_from_string(std::string_view name) {
    if (name == "bof") return EncodingKind::Bof;
    if (name == "vlad") return EncodingKind::Vlad;
    if (name == "fv") return EncodingKind::Fv;
    throw ConfigError("unknown encoding \"" + std::string(name) + "\" (expected bof, vlad or fv)");
}

std::vector<float> encode_bof(const FeatureSet& features, const Codebook& cb) {
    check_dims(features.dim, cb.dim, "encode_bof");
    if (features.size() == 0) throw ShapeError("encode_bof: empty feature set");

    std::vector<size_t> counts(cb.k, 0);
    for (size_t i = 0; i < features.size(); ++i) ++counts[nearest_centroid(cb, features.row(i))];

    std::vector<float> hist(cb.k);
    const double total = static_cast<double>(features.size());
    for (size_t j = 0; j < cb.k; ++j)
        hist[j] = static_cast<float>(static_cast<double>(counts[j]) / total);
    return hist;
}

std::vector<float> encode_vlad_raw(const FeatureSet& features, const Codebook& cb) {
    check_dims(features.dim, cb.dim, "encode_vlad");
    if (features.size() == 0) throw ShapeError("encode_vlad: empty feature set");

    std::vector<double> acc(cb.k * cb.dim, 0.0);
    for (size_t i = 0; i < features.size(); ++i) {
        const auto row = features.row(i);
        const size_t j = nearest_centroid(cb, row);
        const auto word = cb.centroid(j);
        double* block = &acc[j * cb.dim];
        for (size_t d = 0; d < cb.dim; ++d)
            block[d] += static_cast<double>(row[d]) - static_cast<double>(word[d]);
    }

    std::vector<float> out(acc.size());
    for (size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i]);
    return out;
}

std::vector<float> encode_vlad(const FeatureSet& features, const Codebook& cb) {
    std::vector<float> v = encode_vlad_raw(features, cb);
    l2_normalize(v);
    return v;
}

std::vector<float> encode_fv_raw(const FeatureSet& features, const GmmModel& gmm) {
    check_dims(features.dim, gmm.dim, "encode_fv");
    if (features.size() == 0) throw ShapeError("encode_fv: empty feature set");
    for (float w : gmm.weights)
        if (!(w > 0.0f)) throw ModelError("encode_fv: non-positive mixture weight");

    const size_t k = gmm.k;
    const size_t dim = gmm.dim;
    const double m = static_cast<double>(features.size());

    // accumulate sum_i gamma * (x - mu) / sigma and sum_i gamma * (((x - mu) / sigma)^2 - 1)
    std::vector<double> acc1(k * dim, 0.0), acc2(k * dim, 0.0);
    for (size_t i = 0; i < features.size(); ++i) {
        const auto row = features.row(i);
        const std::vector<double> gamma = gmm_posteriors(gmm, row);
        for (size_t j = 0; j < k; ++j) {
            const double g = gamma[j];
            for (size_t d = 0; d < dim; ++d) {
                const double sigma = std::sqrt(static_cast<double>(gmm.variances[j * dim + d]));
                const double z = (static_cast<double>(row[d]) - gmm.means[j * dim + d]) / sigma;
                acc1[j * dim + d] += g * z;
                acc2[j * dim + d] += g * (z * z - 1.0);
            }
        }
    }

    std::vector<float> out(2 * k * dim);
    for (size_t j = 0; j < k; ++j) {
        const double w = gmm.weights[j];
        const double scale1 = 1.0 / (m * std::sqrt(w));
        const double scale2 = 1.0 / (m * std::sqrt(2.0 * w));
        float* block = &out[2 * j * dim];
        for (size_t d = 0; d < dim; ++d) {
            block[d] = static_cast<float>(scale1 * acc1[j * dim + d]);
            block[dim + d] = static_cast<float>(scale2 * acc2[j * dim + d]);
        }
    }
    return out;
}

std::vector<float> encode_fv(const FeatureSet& features, const GmmModel& gmm) {
    std::vector<float> v = encode_fv_raw(features, gmm);
    for (float& x : v) {  // power normalization (signed square root)
        const double d = static_cast<double>(x);
        x = static_cast<float>(d >= 0.0 ? std::sqrt(d) : -std::sqrt(-d));
    }
    l2_normalize(v);
    return v;
}

size_t EncodingModel::encoded_dim() const {
    switch (kind) {
        case EncodingKind::Bof: return codebook.k;
        case EncodingKind::Vlad: return codebook.k * codebook.dim;
        case EncodingKind::Fv: return 2 * gmm.k * gmm.dim;
    }
    return 0;
}

EncodingModel train_encoding_model(const FeatureSet& features, EncodingKind kind, size_t k,
                                   uint64_t seed) {
    EncodingModel model;
    model.kind = kind;
    if (kind == EncodingKind::Fv)
        model.gmm = fit_gmm(features, k, seed);
    else
        model.codebook = kmeans_pp(features, k, seed);
    return model;
}

std::vector<float> encode_features(const FeatureSet& features, const EncodingModel& model) {
    switch (model.kind) {
        case EncodingKind::Bof: return encode_bof(features, model.codebook);
        case EncodingKind::Vlad: return encode_vlad(features, model.codebook);
        case EncodingKind::Fv: return encode_fv(features, model.gmm);
    }
    throw ConfigError("encode_features: unknown encoding kind");
}

FeatureSet pool_static_features(const FrameFeatureSequence& seq,
                                const std::vector<size_t>& key_indices) {
    FeatureSet pool(seq.local_dim);
    pool.data.reserve(key_indices.size() * seq.local_count * seq.local_dim);
    for (size_t key : key_indices) {
        if (key >= seq.num_frames) throw BoundsError("pool_static_features: key index out of range");
        for (size_t pos = 0; pos < seq.local_count; ++pos) pool.push_back(seq.local_at(key, pos));
    }
    return pool;
}

FeatureSet pool_dynamic_features(const FrameFeatureSequence& seq,
                                 const std::vector<KeySegment>& segments) {
    FeatureSet pool(seq.local_dim);
    pool.data.reserve(segments.size() * seq.local_count * seq.local_dim);
    for (const KeySegment& segment : segments) {
        const DynamicLocalFeatures dynamic = segment_moments(seq, segment);
        pool.append(dynamic.moments);
    }
    return pool;
}

VideoDescriptor describe_video(const FrameFeatureSequence& seq, const SelectionResult& selection,
                               const EncodingModel& static_model,
                               const EncodingModel& dynamic_model) {
    if (static_model.kind != dynamic_model.kind)
        throw ConfigError("describe_video: static and dynamic models use different encodings");

    VideoDescriptor desc;
    desc.kind = static_model.kind;
    desc.d3s = encode_features(pool_static_features(seq, selection.key_indices), static_model);
    desc.d3d = encode_features(pool_dynamic_features(seq, selection.segments), dynamic_model);
    desc.d3.reserve(desc.d3s.size() + desc.d3d.size());
    desc.d3.insert(desc.d3.end(), desc.d3s.begin(), desc.d3s.end());
    desc.d3.insert(desc.d3.end(), desc.d3d.begin(), desc.d3d.end());
    return desc;
}

// ---- descriptor persistence --------------------------------------------------

namespace {
constexpr char kDescriptorMagic[4] = {'D', '3', 'D', 'S'};
constexpr uint16_t kDescriptorVersion = 1;
}  // namespace

void save_descriptors(const DescriptorMap& descriptors, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os.write(kDescriptorMagic, 4);
    binio::write_le<uint16_t>(os, kDescriptorVersion);
    binio::write_le<uint32_t>(os, static_cast<uint32_t>(descriptors.size()));
    for (const auto& [id, vec] : descriptors) {
        binio::write_le<uint32_t>(os, static_cast<uint32_t>(id.size()));
        os.write(id.data(), static_cast<std::streamsize>(id.size()));
        binio::write_le<uint32_t>(os, static_cast<uint32_t>(vec.size()));
        binio::write_f32_le(os, vec);
    }
    if (!os) throw IoError("write failure on " + path.string());
}

DescriptorMap load_descriptors(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open descriptor file " + path.string());
    const std::string ctx = path.string();
    binio::expect_magic(is, kDescriptorMagic, ctx);
    const auto version = binio::read_le<uint16_t>(is, "version", ctx);
    if (version != kDescriptorVersion)
        throw FormatError(ctx + ": unsupported descriptor version " + std::to_string(version));
    const auto count = binio::read_le<uint32_t>(is, "count", ctx);

    DescriptorMap out;
    out.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        const auto id_len = binio::read_le<uint32_t>(is, "id length", ctx);
        std::string id(id_len, '\0');
        if (!is.read(id.data(), id_len)) throw CorruptionError(ctx + ": truncated video id");
        const auto dim = binio::read_le<uint32_t>(is, "dim", ctx);
        std::vector<float> vec(dim);
        binio::read_f32_le(is, vec, "descriptor", ctx);
        out.emplace_back(std::move(id), std::move(vec));
    }
    binio::expect_eof(is, ctx);
    return out;
}

}  // namespace d3
