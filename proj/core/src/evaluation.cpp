#include "d3/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

#include "d3/rng.hpp"
#include "d3/temporal_moments.hpp"

namespace d3 {

namespace {

// Runs fn(0..n-1) on up to `threads` workers. Each task writes only its own
// slot, so results do not depend on scheduling. The lowest-index exception
// wins, for deterministic error reporting.
void parallel_for(size_t n, int threads, const std::function<void(size_t)>& fn) {
    const size_t workers = std::min<size_t>(std::max(threads, 1), n);
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::mutex err_mutex;
    std::vector<std::pair<size_t, std::exception_ptr>> errors;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&]() {
            for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    errors.emplace_back(i, std::current_exception());
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (!errors.empty()) {
        std::sort(errors.begin(), errors.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::rethrow_exception(errors.front().second);
    }
}

double dot_aug(const std::vector<double>& w, const std::vector<float>& x) {
    double acc = w.back();  // bias feature is the constant 1
    for (size_t d = 0; d < x.size(); ++d) acc += w[d] * x[d];
    return acc;
}

// Dual coordinate descent for the L1-loss SVM with an augmented bias feature.
// Returns w of length dim+1 (last entry is the bias).
std::vector<double> dcd_solve(const std::vector<std::vector<float>>& x, const std::vector<int>& y,
                              double c, uint64_t seed) {
    const size_t n = x.size();
    const size_t dim = x.front().size();
    constexpr size_t kMaxPasses = 20000;
    constexpr double kEps = 1e-8;

    std::vector<double> q(n);  // |x_i|^2 + 1
    for (size_t i = 0; i < n; ++i) {
        double s = 1.0;
        for (float v : x[i]) s += static_cast<double>(v) * v;
        q[i] = s;
    }

    std::vector<double> alpha(n, 0.0);
    std::vector<double> w(dim + 1, 0.0);
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);

    for (size_t pass = 0; pass < kMaxPasses; ++pass) {
        rng.shuffle(order);
        double pg_max = -std::numeric_limits<double>::infinity();
        double pg_min = std::numeric_limits<double>::infinity();

        for (size_t i : order) {
            const double g = y[i] * dot_aug(w, x[i]) - 1.0;
            double pg = g;
            if (alpha[i] <= 0.0 && g >= 0.0) pg = 0.0;
            if (alpha[i] >= c && g <= 0.0) pg = 0.0;
            pg_max = std::max(pg_max, pg);
            pg_min = std::min(pg_min, pg);

            if (pg != 0.0) {
                const double old = alpha[i];
                alpha[i] = std::clamp(old - g / q[i], 0.0, c);
                const double delta = (alpha[i] - old) * y[i];
                if (delta != 0.0) {
                    for (size_t d = 0; d < dim; ++d) w[d] += delta * x[i][d];
                    w[dim] += delta;
                }
            }
        }
        if (pg_max - pg_min < kEps) break;
    }
    return w;
}

}  // namespace

double linear_svm_objective(std::span<const float> w, float b,
                            const std::vector<std::vector<float>>& x, const std::vector<int>& y,
                            double c) {
    double reg = static_cast<double>(b) * b;
    for (float v : w) reg += static_cast<double>(v) * v;
    double hinge = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        double score = b;
        for (size_t d = 0; d < w.size(); ++d) score += static_cast<double>(w[d]) * x[i][d];
        hinge += std::max(0.0, 1.0 - y[i] * score);
    }
    return 0.5 * reg + c * hinge;
}

LinearModel train_linear(const std::vector<std::vector<float>>& x, const std::vector<int>& labels,
                         std::vector<std::string> class_names, double c) {
    if (x.empty()) throw ConfigError("train_linear: no training samples");
    if (x.size() != labels.size()) throw ShapeError("train_linear: X and labels disagree");
    const size_t dim = x.front().size();
    for (const auto& row : x)
        if (row.size() != dim) throw ShapeError("train_linear: inconsistent descriptor dims");

    std::set<int> present(labels.begin(), labels.end());
    if (present.size() < 2) throw ConfigError("train_linear: need at least 2 classes");
    for (int l : present)
        if (l < 0 || static_cast<size_t>(l) >= class_names.size())
            throw ConfigError("train_linear: label out of range");
    for (size_t cls = 0; cls < class_names.size(); ++cls)
        if (present.count(static_cast<int>(cls)) == 0)
            throw ConfigError("train_linear: class \"" + class_names[cls] + "\" has no samples");

    LinearModel model;
    model.class_names = std::move(class_names);
    model.dim = dim;
    model.weights.resize(model.class_names.size());
    model.biases.resize(model.class_names.size());

    std::vector<int> y(x.size());
    for (size_t cls = 0; cls < model.class_names.size(); ++cls) {
        for (size_t i = 0; i < x.size(); ++i)
            y[i] = labels[i] == static_cast<int>(cls) ? 1 : -1;
        const std::vector<double> w = dcd_solve(x, y, c, derive_seed(0x5d3, "dcd", std::to_string(cls)));
        model.weights[cls].resize(dim);
        for (size_t d = 0; d < dim; ++d) model.weights[cls][d] = static_cast<float>(w[d]);
        model.biases[cls] = static_cast<float>(w[dim]);
    }
    return model;
}

std::vector<double> decision_scores(const LinearModel& model, std::span<const float> x) {
    if (x.size() != model.dim) throw ShapeError("predict: descriptor dim mismatch");
    std::vector<double> scores(model.weights.size());
    for (size_t cls = 0; cls < model.weights.size(); ++cls) {
        double acc = model.biases[cls];
        for (size_t d = 0; d < model.dim; ++d)
            acc += static_cast<double>(model.weights[cls][d]) * x[d];
        scores[cls] = acc;
    }
    return scores;
}

size_t predict_index(const LinearModel& model, std::span<const float> x) {
    const std::vector<double> scores = decision_scores(model, x);
    size_t best = 0;
    for (size_t cls = 1; cls < scores.size(); ++cls)
        if (scores[cls] > scores[best]) best = cls;
    return best;
}

const std::string& predict(const LinearModel& model, std::span<const float> x) {
    return model.class_names[predict_index(model, x)];
}

// ---- leave-one-out protocol ---------------------------------------------------

const char* to_string(DescriptorVariant v) {
    switch (v) {
        case DescriptorVariant::Static: return "d3s";
        case DescriptorVariant::Dynamic: return "d3d";
        case DescriptorVariant::Fused: return "d3";
    }
    return "?";
}

VideoPools compute_video_pools(const FrameFeatureSequence& seq, const SelectionSpec& spec,
                               uint64_t selection_seed) {
    const SelectionResult selection = run_selection(seq, spec, selection_seed);
    VideoPools pools;
    pools.video_id = seq.video_id;
    pools.static_pool = pool_static_features(seq, selection.key_indices);
    pools.dynamic_pool = pool_dynamic_features(seq, selection.segments);
    return pools;
}

FeatureSet gather_training_pool(const std::vector<VideoPools>& pools, bool dynamic_stream,
                                size_t exclude_index) {
    FeatureSet out;
    for (size_t i = 0; i < pools.size(); ++i) {
        if (i == exclude_index) continue;
        out.append(dynamic_stream ? pools[i].dynamic_pool : pools[i].static_pool);
    }
    return out;
}

FoldModels train_fold_models(const std::vector<VideoPools>& pools, const PipelineConfig& cfg,
                             size_t exclude_index, std::string_view seed_key) {
    FoldModels models;
    models.has_static = cfg.descriptor != DescriptorVariant::Dynamic;
    models.has_dynamic = cfg.descriptor != DescriptorVariant::Static;
    if (models.has_static) {
        const FeatureSet pool = gather_training_pool(pools, false, exclude_index);
        models.static_model = train_encoding_model(pool, cfg.encoding, cfg.codebook_size,
                                                   derive_seed(cfg.seed, "static-model", seed_key));
    }
    if (models.has_dynamic) {
        const FeatureSet pool = gather_training_pool(pools, true, exclude_index);
        models.dynamic_model = train_encoding_model(pool, cfg.encoding, cfg.codebook_size,
                                                    derive_seed(cfg.seed, "dynamic-model", seed_key));
    }
    return models;
}

std::vector<float> fold_descriptor(const VideoPools& pools, const FoldModels& models,
                                   DescriptorVariant variant) {
    switch (variant) {
        case DescriptorVariant::Static:
            return encode_features(pools.static_pool, models.static_model);
        case DescriptorVariant::Dynamic:
            return encode_features(pools.dynamic_pool, models.dynamic_model);
        case DescriptorVariant::Fused: {
            std::vector<float> s = encode_features(pools.static_pool, models.static_model);
            const std::vector<float> d = encode_features(pools.dynamic_pool, models.dynamic_model);
            s.insert(s.end(), d.begin(), d.end());
            return s;
        }
    }
    throw ConfigError("fold_descriptor: unknown variant");
}

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::vector<std::pair<std::string, std::string>> build_echo(const PipelineConfig& cfg,
                                                            const DatasetManifest& manifest) {
    std::vector<std::pair<std::string, std::string>> echo;
    echo.emplace_back("descriptor", to_string(cfg.descriptor));
    echo.emplace_back("strategy", to_string(cfg.selection.strategy));
    echo.emplace_back("frames", std::to_string(cfg.selection.frames));
    echo.emplace_back("tau", std::to_string(cfg.selection.tau));
    echo.emplace_back("subset", std::to_string(cfg.selection.subset_size));
    echo.emplace_back("repeats", std::to_string(cfg.selection.repeats));
    echo.emplace_back("ghd_level", std::to_string(cfg.selection.ghd_level));
    echo.emplace_back("fraction", format_double(cfg.selection.fraction));
    echo.emplace_back("period_s", format_double(cfg.selection.period_s));
    echo.emplace_back("encoding", to_string(cfg.encoding));
    echo.emplace_back("codebook_size", std::to_string(cfg.codebook_size));
    echo.emplace_back("svm_c", format_double(cfg.svm_c));
    echo.emplace_back("seed", std::to_string(cfg.seed));
    echo.emplace_back("shared_models", cfg.shared_models ? "1 (leaky: models see the test video)" : "0");
    echo.emplace_back("classes", std::to_string(manifest.class_names.size()));
    echo.emplace_back("videos", std::to_string(manifest.entries.size()));
    return echo;
}

}  // namespace

EvalReport loocv(const DatasetManifest& manifest, const PipelineConfig& cfg) {
    const size_t n = manifest.entries.size();
    if (manifest.class_names.size() < 2) throw ConfigError("loocv: need at least 2 classes");
    if (n < 2) throw ConfigError("loocv: need at least 2 videos");

    // load features and compute per-video pools once; selection is
    // per-video and fold-independent
    std::vector<VideoPools> pools(n);
    parallel_for(n, cfg.threads, [&](size_t i) {
        const ManifestEntry& entry = manifest.entries[i];
        try {
            FrameFeatureSequence seq = load_feature_sequence(entry.feature_path);
            seq.video_id = entry.video_id;
            pools[i] = compute_video_pools(seq, cfg.selection,
                                           derive_seed(cfg.seed, "selection", entry.video_id));
        } catch (const Error& e) {
            throw PipelineError("video \"" + entry.video_id + "\": " + e.what());
        }
    });
    for (size_t i = 1; i < n; ++i)
        if (pools[i].static_pool.dim != pools[0].static_pool.dim)
            throw PipelineError("video \"" + manifest.entries[i].video_id +
                                "\": local feature dim differs from \"" +
                                manifest.entries[0].video_id + "\"");

    FoldModels shared;
    if (cfg.shared_models) {
        shared = train_fold_models(pools, cfg, std::numeric_limits<size_t>::max(), "");
    }

    std::vector<int> truth(n);
    for (size_t i = 0; i < n; ++i)
        truth[i] = manifest.class_index(manifest.entries[i].class_label);

    std::vector<int> predicted(n, -1);
    parallel_for(n, cfg.threads, [&](size_t fold) {
        const std::string& held_out = manifest.entries[fold].video_id;
        try {
            FoldModels local_models;
            const FoldModels* use = &shared;
            if (!cfg.shared_models) {
                local_models = train_fold_models(pools, cfg, fold, held_out);
                use = &local_models;
            }

            // classifier sees only classes present in the training fold
            std::vector<std::string> fold_classes;
            std::vector<std::vector<float>> x;
            std::vector<int> y;
            x.reserve(n - 1);
            for (size_t j = 0; j < n; ++j) {
                if (j == fold) continue;
                const std::string& label = manifest.entries[j].class_label;
                int idx = -1;
                for (size_t cidx = 0; cidx < fold_classes.size(); ++cidx)
                    if (fold_classes[cidx] == label) idx = static_cast<int>(cidx);
                if (idx < 0) {
                    idx = static_cast<int>(fold_classes.size());
                    fold_classes.push_back(label);
                }
                x.push_back(fold_descriptor(pools[j], *use, cfg.descriptor));
                y.push_back(idx);
            }
            const LinearModel clf = train_linear(x, y, fold_classes, cfg.svm_c);
            const std::vector<float> test = fold_descriptor(pools[fold], *use, cfg.descriptor);
            predicted[fold] = manifest.class_index(predict(clf, test));
        } catch (const PipelineError&) {
            throw;
        } catch (const Error& e) {
            throw PipelineError("video \"" + held_out + "\": " + e.what());
        }
    });

    EvalReport report;
    report.class_names = manifest.class_names;
    const size_t c = manifest.class_names.size();
    report.confusion.assign(c * c, 0);
    for (size_t i = 0; i < n; ++i) {
        report.per_video.push_back({manifest.entries[i].video_id, truth[i], predicted[i]});
        ++report.confusion[static_cast<size_t>(truth[i]) * c + static_cast<size_t>(predicted[i])];
        if (truth[i] == predicted[i]) ++report.correct;
    }
    report.accuracy = static_cast<double>(report.correct) / static_cast<double>(n);
    report.config_echo = build_echo(cfg, manifest);
    return report;
}

std::string report_csv(const EvalReport& report) {
    std::string out = "video_id,true,predicted\n";
    for (const auto& row : report.per_video) {
        out += row.video_id;
        out += ',';
        out += report.class_names[static_cast<size_t>(row.truth)];
        out += ',';
        out += report.class_names[static_cast<size_t>(row.predicted)];
        out += '\n';
    }
    out += "# summary\n";
    out += "# accuracy," + format_double(report.accuracy) + "\n";
    out += "# correct," + std::to_string(report.correct) + "\n";
    out += "# total," + std::to_string(report.per_video.size()) + "\n";
    for (const auto& [key, value] : report.config_echo) out += "# " + key + "," + value + "\n";
    return out;
}

std::string report_text(const EvalReport& report) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "accuracy: %.2f%% (%zu/%zu)\n", 100.0 * report.accuracy,
                  report.correct, report.per_video.size());
    std::string out = "evaluation report\n=================\n";
    out += buf;
    for (const auto& [key, value] : report.config_echo) out += key + ": " + value + "\n";

    const size_t c = report.class_names.size();
    size_t width = 5;
    for (const auto& name : report.class_names) width = std::max(width, name.size() + 2);

    out += "\nconfusion (rows = true, cols = predicted):\n";
    auto pad = [&](const std::string& s) {
        std::string cell = s;
        while (cell.size() < width) cell += ' ';
        return cell;
    };
    out += pad("");
    for (const auto& name : report.class_names) out += pad(name);
    out += '\n';
    for (size_t r = 0; r < c; ++r) {
        out += pad(report.class_names[r]);
        for (size_t col = 0; col < c; ++col) out += pad(std::to_string(report.confusion[r * c + col]));
        out += '\n';
    }
    return out;
}

}  // namespace d3
