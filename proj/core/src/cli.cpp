#include "d3/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>

#include "d3/rng.hpp"
#include "d3/toy_extractor.hpp"

namespace d3 {

namespace {

std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r");
    size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    return std::string(s.substr(b, e - b + 1));
}

size_t parse_size(std::string_view key, const std::string& value) {
    try {
        size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size() || v < 0) throw std::invalid_argument("negative");
        return static_cast<size_t>(v);
    } catch (const std::exception&) {
        throw ConfigError(std::string(key) + ": expected a non-negative integer, got \"" + value +
                          "\"");
    }
}

uint64_t parse_u64(std::string_view key, const std::string& value) {
    try {
        size_t pos = 0;
        const unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string(key) + ": expected an unsigned integer, got \"" + value + "\"");
    }
}

double parse_double(std::string_view key, const std::string& value) {
    try {
        size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string(key) + ": expected a number, got \"" + value + "\"");
    }
}

int parse_int(std::string_view key, const std::string& value) {
    try {
        size_t pos = 0;
        const int v = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string(key) + ": expected an integer, got \"" + value + "\"");
    }
}

bool parse_bool(std::string_view key, const std::string& value) {
    if (value == "1" || value == "true" || value == "yes") return true;
    if (value == "0" || value == "false" || value == "no") return false;
    throw ConfigError(std::string(key) + ": expected a boolean, got \"" + value + "\"");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    size_t start = 0;
    while (start <= value.size()) {
        size_t comma = value.find(',', start);
        if (comma == std::string::npos) comma = value.size();
        const std::string part = trim(value.substr(start, comma - start));
        if (!part.empty()) parts.push_back(part);
        start = comma + 1;
    }
    return parts;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw IoError("write failure on " + path.string());
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view raw) {
    const std::string value = trim(raw);
    if (key == "manifest") {
        cfg.manifest = value;
    } else if (key == "out") {
        cfg.out_dir = value;
    } else if (key == "models") {
        cfg.models_dir = value;
    } else if (key == "strategy") {
        cfg.pipeline.selection.strategy = selection_strategy_from_string(value);
    } else if (key == "frames") {
        cfg.pipeline.selection.frames = parse_size(key, value);
    } else if (key == "tau") {
        cfg.pipeline.selection.tau = parse_size(key, value);
    } else if (key == "subset") {
        cfg.pipeline.selection.subset_size = parse_size(key, value);
    } else if (key == "repeats") {
        cfg.pipeline.selection.repeats = parse_size(key, value);
    } else if (key == "ghd_level") {
        cfg.pipeline.selection.ghd_level = parse_int(key, value);
    } else if (key == "fraction") {
        cfg.pipeline.selection.fraction = parse_double(key, value);
    } else if (key == "period_s") {
        cfg.pipeline.selection.period_s = parse_double(key, value);
    } else if (key == "encoding") {
        cfg.pipeline.encoding = encoding_from_string(value);
    } else if (key == "codebook_size") {
        cfg.pipeline.codebook_size = parse_size(key, value);
        if (cfg.pipeline.codebook_size == 0) throw ConfigError("codebook_size must be positive");
    } else if (key == "seed") {
        cfg.pipeline.seed = parse_u64(key, value);
    } else if (key == "shared_models") {
        cfg.pipeline.shared_models = parse_bool(key, value);
    } else if (key == "threads") {
        const int t = parse_int(key, value);
        if (t < 1) throw ConfigError("threads must be at least 1");
        cfg.pipeline.threads = t;
    } else if (key == "svm_c") {
        cfg.pipeline.svm_c = parse_double(key, value);
        if (!(cfg.pipeline.svm_c > 0.0)) throw ConfigError("svm_c must be positive");
    } else if (key == "strategies") {
        cfg.compare_strategies.clear();
        for (const std::string& name : split_list(value))
            cfg.compare_strategies.push_back(selection_strategy_from_string(name));
        if (cfg.compare_strategies.empty()) throw ConfigError("strategies: empty list");
    } else if (key == "frame_counts") {
        cfg.compare_frames.clear();
        for (const std::string& part : split_list(value))
            cfg.compare_frames.push_back(parse_size(key, part));
        if (cfg.compare_frames.empty()) throw ConfigError("frame_counts: empty list");
    } else {
        throw ConfigError("unknown config key \"" + std::string(key) + "\"");
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path.string());

    RunConfig cfg;
    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                              ": expected key=value");
        try {
            set_config_value(cfg, trim(stripped.substr(0, eq)), stripped.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

int run_extract(const std::filesystem::path& frames_dir, size_t grid, float fps,
                const std::filesystem::path& out_path) {
    if (!std::filesystem::is_directory(frames_dir))
        throw DataError("frames dir not found: " + frames_dir.string());

    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(frames_dir)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().extension() == ".pgm" || entry.path().extension() == ".PGM")
            files.push_back(entry.path());
    }
    if (files.empty()) throw DataError("no frames in " + frames_dir.string());
    // lexicographic filename order is temporal order
    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });

    std::vector<GrayFrame> frames;
    frames.reserve(files.size());
    for (const auto& file : files) frames.push_back(load_pgm(file));

    const FrameFeatureSequence seq = extract_video(frames, grid, fps, out_path.stem().string());
    if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
    save_feature_sequence(seq, out_path);
    std::cout << "wrote " << out_path.string() << " (N=" << seq.num_frames
              << ", global_dim=" << seq.global_dim << ", L=" << seq.local_count
              << ", local_dim=" << seq.local_dim << ")\n";
    return 0;
}

int run_select(const std::filesystem::path& feature_path, const SelectionSpec& spec, uint64_t seed,
               const std::filesystem::path& out_path) {
    const FrameFeatureSequence seq = load_feature_sequence(feature_path);
    const SelectionResult result =
        run_selection(seq, spec, derive_seed(seed, "selection", seq.video_id));

    std::string out = "index,cluster,segment_lo,segment_hi\n";
    for (size_t i = 0; i < result.key_indices.size(); ++i) {
        const KeySegment& seg = result.segments[i];
        out += std::to_string(result.key_indices[i]) + "," +
               std::to_string(result.cluster_of[result.key_indices[i]]) + "," +
               std::to_string(seg.lo) + "," + std::to_string(seg.hi) + "\n";
    }
    out += "# objective," + format_double(result.objective) + "\n";
    out += "# strategy," + std::string(to_string(spec.strategy)) + "\n";
    out += "# frames," + std::to_string(result.key_indices.size()) + "\n";
    out += "# tau," + std::to_string(spec.tau) + "\n";
    out += "# seed," + std::to_string(seed) + "\n";
    if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
    write_file(out_path, out);
    std::cout << "selected " << result.key_indices.size() << " key frames from " << seq.video_id
              << " (objective " << format_double(result.objective) << ")\n";
    return 0;
}

namespace {

// Per-video pools in manifest order, with per-video derived selection seeds.
std::vector<VideoPools> manifest_pools(const DatasetManifest& manifest, const PipelineConfig& cfg) {
    std::vector<VideoPools> pools;
    pools.reserve(manifest.entries.size());
    for (const ManifestEntry& entry : manifest.entries) {
        try {
            FrameFeatureSequence seq = load_feature_sequence(entry.feature_path);
            seq.video_id = entry.video_id;
            pools.push_back(compute_video_pools(seq, cfg.selection,
                                                derive_seed(cfg.seed, "selection", entry.video_id)));
        } catch (const Error& e) {
            throw PipelineError("video \"" + entry.video_id + "\": " + e.what());
        }
    }
    return pools;
}

std::filesystem::path model_path(const std::filesystem::path& dir, const char* stream,
                                 EncodingKind kind) {
    return dir / (std::string(stream) + (kind == EncodingKind::Fv ? ".d3gm" : ".d3cb"));
}

void save_model(const EncodingModel& model, const std::filesystem::path& path) {
    if (model.kind == EncodingKind::Fv)
        save_gmm(model.gmm, path);
    else
        save_codebook(model.codebook, path);
}

EncodingModel load_model(EncodingKind kind, const std::filesystem::path& path) {
    EncodingModel model;
    model.kind = kind;
    if (kind == EncodingKind::Fv)
        model.gmm = load_gmm(path);
    else
        model.codebook = load_codebook(path);
    return model;
}

void require_manifest(const RunConfig& cfg) {
    if (cfg.manifest.empty()) throw ConfigError("manifest is required (set --manifest or manifest=)");
}

}  // namespace

int run_codebook(const RunConfig& cfg) {
    require_manifest(cfg);
    const DatasetManifest manifest = load_manifest(cfg.manifest);
    const std::vector<VideoPools> pools = manifest_pools(manifest, cfg.pipeline);

    PipelineConfig train_cfg = cfg.pipeline;
    train_cfg.descriptor = DescriptorVariant::Fused;  // train both streams
    const FoldModels models =
        train_fold_models(pools, train_cfg, std::numeric_limits<size_t>::max(), "");

    std::filesystem::create_directories(cfg.out_dir);
    const auto static_path = model_path(cfg.out_dir, "static", cfg.pipeline.encoding);
    const auto dynamic_path = model_path(cfg.out_dir, "dynamic", cfg.pipeline.encoding);
    save_model(models.static_model, static_path);
    save_model(models.dynamic_model, dynamic_path);
    std::cout << "wrote " << static_path.string() << "\nwrote " << dynamic_path.string() << "\n";
    return 0;
}

int run_describe(const RunConfig& cfg) {
    require_manifest(cfg);
    if (cfg.models_dir.empty())
        throw ConfigError("models dir is required (set --models or models=)");
    const DatasetManifest manifest = load_manifest(cfg.manifest);

    const EncodingModel static_model =
        load_model(cfg.pipeline.encoding, model_path(cfg.models_dir, "static", cfg.pipeline.encoding));
    const EncodingModel dynamic_model = load_model(
        cfg.pipeline.encoding, model_path(cfg.models_dir, "dynamic", cfg.pipeline.encoding));

    DescriptorMap d3s, d3d, d3;
    for (const ManifestEntry& entry : manifest.entries) {
        try {
            FrameFeatureSequence seq = load_feature_sequence(entry.feature_path);
            seq.video_id = entry.video_id;
            const SelectionResult selection =
                run_selection(seq, cfg.pipeline.selection,
                              derive_seed(cfg.pipeline.seed, "selection", entry.video_id));
            const VideoDescriptor desc = describe_video(seq, selection, static_model, dynamic_model);
            d3s.emplace_back(entry.video_id, desc.d3s);
            d3d.emplace_back(entry.video_id, desc.d3d);
            d3.emplace_back(entry.video_id, desc.d3);
        } catch (const Error& e) {
            throw PipelineError("video \"" + entry.video_id + "\": " + e.what());
        }
    }

    std::filesystem::create_directories(cfg.out_dir);
    save_descriptors(d3s, cfg.out_dir / "d3s.d3ds");
    save_descriptors(d3d, cfg.out_dir / "d3d.d3ds");
    save_descriptors(d3, cfg.out_dir / "d3.d3ds");
    std::cout << "wrote " << (cfg.out_dir / "d3s.d3ds").string() << ", d3d.d3ds, d3.d3ds ("
              << manifest.entries.size() << " videos)\n";
    return 0;
}

int run_evaluate(const RunConfig& cfg) {
    require_manifest(cfg);
    const DatasetManifest manifest = load_manifest(cfg.manifest);
    std::filesystem::create_directories(cfg.out_dir);

    for (const DescriptorVariant variant :
         {DescriptorVariant::Static, DescriptorVariant::Dynamic, DescriptorVariant::Fused}) {
        PipelineConfig pipeline = cfg.pipeline;
        pipeline.descriptor = variant;
        const EvalReport report = loocv(manifest, pipeline);
        const std::string stem = std::string("report_") + to_string(variant);
        write_file(cfg.out_dir / (stem + ".csv"), report_csv(report));
        write_file(cfg.out_dir / (stem + ".txt"), report_text(report));
        std::cout << to_string(variant) << " accuracy: " << format_double(report.accuracy) << " ("
                  << report.correct << "/" << report.per_video.size() << ")\n";
    }
    return 0;
}

int run_compare_selection(const RunConfig& cfg) {
    require_manifest(cfg);
    for (const SelectionStrategy s : cfg.compare_strategies) {
        if (s == SelectionStrategy::Random || s == SelectionStrategy::Chc ||
            s == SelectionStrategy::Medoid || s == SelectionStrategy::Uniform)
            continue;
        throw ConfigError(std::string("compare-selection: strategy \"") + to_string(s) +
                          "\" does not take a frame count");
    }
    const DatasetManifest manifest = load_manifest(cfg.manifest);
    std::filesystem::create_directories(cfg.out_dir);

    // grid of static-stream LOOCV accuracies, one row per strategy
    std::vector<std::vector<double>> grid(cfg.compare_strategies.size());
    for (size_t si = 0; si < cfg.compare_strategies.size(); ++si) {
        for (const size_t frames : cfg.compare_frames) {
            PipelineConfig pipeline = cfg.pipeline;
            pipeline.selection.strategy = cfg.compare_strategies[si];
            pipeline.selection.frames = frames;
            pipeline.descriptor = DescriptorVariant::Static;
            grid[si].push_back(loocv(manifest, pipeline).accuracy);
        }
    }

    std::string csv = "strategy";
    for (const size_t frames : cfg.compare_frames) csv += "," + std::to_string(frames);
    csv += "\n";
    for (size_t si = 0; si < cfg.compare_strategies.size(); ++si) {
        csv += to_string(cfg.compare_strategies[si]);
        for (const double acc : grid[si]) csv += "," + format_double(acc);
        csv += "\n";
    }
    csv += "# descriptor,d3s\n";
    csv += "# encoding," + std::string(to_string(cfg.pipeline.encoding)) + "\n";
    csv += "# codebook_size," + std::to_string(cfg.pipeline.codebook_size) + "\n";
    csv += "# seed," + std::to_string(cfg.pipeline.seed) + "\n";
    write_file(cfg.out_dir / "comparison.csv", csv);

    std::string txt = "selection comparison (static stream accuracy)\n";
    txt += "=============================================\n";
    for (size_t si = 0; si < cfg.compare_strategies.size(); ++si) {
        std::string row = to_string(cfg.compare_strategies[si]);
        while (row.size() < 14) row += ' ';
        for (size_t fi = 0; fi < cfg.compare_frames.size(); ++fi) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "  R=%-4zu %6.2f%%", cfg.compare_frames[fi],
                          100.0 * grid[si][fi]);
            row += buf;
        }
        txt += row + "\n";
    }
    write_file(cfg.out_dir / "comparison.txt", txt);
    std::cout << "wrote " << (cfg.out_dir / "comparison.csv").string() << "\n" << txt;
    return 0;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const DataError*>(&e)) return 3;
    if (dynamic_cast<const PipelineError*>(&e)) return 4;
    return 1;
}

}  // namespace d3
