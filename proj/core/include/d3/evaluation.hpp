#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "d3/aggregation.hpp"
#include "d3/feature_model.hpp"
#include "d3/key_selection.hpp"

namespace d3 {

// One-vs-rest linear max-margin classifier.
struct LinearModel {
    std::vector<std::string> class_names;
    size_t dim = 0;
    std::vector<std::vector<float>> weights;  // one weight vector per class
    std::vector<float> biases;
};

// Trains one L2-regularized hinge-loss classifier per class by dual
// coordinate descent. The optimized objective per class is
//   0.5 * (|w|^2 + b^2) + C * sum_i max(0, 1 - y_i * (w . x_i + b))
// (bias handled as an augmented, regularized feature). Deterministic.
LinearModel train_linear(const std::vector<std::vector<float>>& x, const std::vector<int>& labels,
                         std::vector<std::string> class_names, double c = 100.0);

// The exact objective train_linear minimizes, for one class. y is +-1.
double linear_svm_objective(std::span<const float> w, float b,
                            const std::vector<std::vector<float>>& x, const std::vector<int>& y,
                            double c);

std::vector<double> decision_scores(const LinearModel& model, std::span<const float> x);
// argmax over class scores, ties to the lowest class index
size_t predict_index(const LinearModel& model, std::span<const float> x);
const std::string& predict(const LinearModel& model, std::span<const float> x);

// ---- leave-one-out protocol ---------------------------------------------------

enum class DescriptorVariant { Static, Dynamic, Fused };
const char* to_string(DescriptorVariant v);

struct PipelineConfig {
    SelectionSpec selection;
    EncodingKind encoding = EncodingKind::Fv;
    size_t codebook_size = 128;
    uint64_t seed = 0;
    bool shared_models = false;  // train models once on all videos (leaky, labeled in reports)
    DescriptorVariant descriptor = DescriptorVariant::Fused;
    int threads = 1;
    double svm_c = 100.0;
};

// Static and dynamic local-feature pools of one video. Selection depends only
// on the video and the master seed, so pools are computed once and reused
// across folds.
struct VideoPools {
    std::string video_id;
    FeatureSet static_pool;
    FeatureSet dynamic_pool;
};

VideoPools compute_video_pools(const FrameFeatureSequence& seq, const SelectionSpec& spec,
                               uint64_t selection_seed);

// Concatenates per-video pools in order, skipping exclude_index (pass
// SIZE_MAX to keep every video). This is the only place training features
// are gathered, so fold hygiene is testable here.
FeatureSet gather_training_pool(const std::vector<VideoPools>& pools, bool dynamic_stream,
                                size_t exclude_index);

struct FoldModels {
    bool has_static = false;
    bool has_dynamic = false;
    EncodingModel static_model;
    EncodingModel dynamic_model;
};

// Trains the stream models the configured descriptor variant needs, on every
// video except exclude_index. seed_key is the held-out video id ("" for
// shared models), so fold seeds do not depend on execution order.
FoldModels train_fold_models(const std::vector<VideoPools>& pools, const PipelineConfig& cfg,
                             size_t exclude_index, std::string_view seed_key);

// Encodes one video's pools into the configured descriptor variant.
std::vector<float> fold_descriptor(const VideoPools& pools, const FoldModels& models,
                                   DescriptorVariant variant);

struct EvalReport {
    std::vector<std::string> class_names;
    struct VideoResult {
        std::string video_id;
        int truth = 0;
        int predicted = 0;
    };
    std::vector<VideoResult> per_video;  // manifest order
    std::vector<size_t> confusion;       // C x C row-major, rows = true class
    size_t correct = 0;
    double accuracy = 0.0;
    std::vector<std::pair<std::string, std::string>> config_echo;
};

// One fold per video: models and classifier trained on the remaining videos,
// the held-out video described and predicted. Deterministic for a fixed
// master seed, independent of thread count.
EvalReport loocv(const DatasetManifest& manifest, const PipelineConfig& cfg);

// Machine-readable report: `video_id,true,predicted` rows plus a `#`-prefixed
// summary block with the config echo. Byte-stable for identical inputs.
std::string report_csv(const EvalReport& report);
// Human-readable report with the confusion matrix.
std::string report_text(const EvalReport& report);

}  // namespace d3
