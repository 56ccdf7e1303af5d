#include "d3/toy_extractor.hpp"

#include <cmath>
#include <fstream>

namespace d3 {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Central differences inside the frame, one-sided on the border. Integer
// arithmetic so the zero-gradient test is exact.
inline int grad_x(const GrayFrame& f, size_t x, size_t y) {
    const size_t x0 = x == 0 ? 0 : x - 1;
    const size_t x1 = x + 1 == f.width ? x : x + 1;
    return static_cast<int>(f.at(x1, y)) - static_cast<int>(f.at(x0, y));
}

inline int grad_y(const GrayFrame& f, size_t x, size_t y) {
    const size_t y0 = y == 0 ? 0 : y - 1;
    const size_t y1 = y + 1 == f.height ? y : y + 1;
    return static_cast<int>(f.at(x, y1)) - static_cast<int>(f.at(x, y0));
}

inline size_t orientation_bin(int gx, int gy) {
    if (gx == 0 && gy == 0) return 0;
    double angle = std::atan2(static_cast<double>(gy), static_cast<double>(gx));
    if (angle < 0.0) angle += kTwoPi;
    size_t bin = static_cast<size_t>(angle / (kTwoPi / 8.0));
    return bin > 7 ? 7 : bin;
}

}  // namespace

GrayFrame::GrayFrame(size_t w, size_t h, std::vector<uint8_t> px)
    : width(w), height(h), pixels(std::move(px)) {
    if (width < 8 || height < 8)
        throw GeometryError("frame must be at least 8x8, got " + std::to_string(width) + "x" +
                            std::to_string(height));
    if (pixels.size() != width * height)
        throw GeometryError("pixel count does not match frame dimensions");
}

GridFeatures extract_grid_features(const GrayFrame& frame, size_t grid) {
    if (grid == 0) throw GeometryError("grid must be at least 1");
    if (grid > frame.width || grid > frame.height)
        throw GeometryError("grid " + std::to_string(grid) + " exceeds frame side (" +
                            std::to_string(frame.width) + "x" + std::to_string(frame.height) + ")");

    GridFeatures out;
    out.locals.dim = kCellFeatureDim;
    out.global.reserve(grid * grid * kCellFeatureDim);

    for (size_t cr = 0; cr < grid; ++cr) {
        const size_t y0 = cr * frame.height / grid;
        const size_t y1 = (cr + 1) * frame.height / grid;
        for (size_t cc = 0; cc < grid; ++cc) {
            const size_t x0 = cc * frame.width / grid;
            const size_t x1 = (cc + 1) * frame.width / grid;
            const double count = static_cast<double>((y1 - y0) * (x1 - x0));

            double sum = 0.0, sum_sq = 0.0;
            size_t hist[8] = {0, 0, 0, 0, 0, 0, 0, 0};
            for (size_t y = y0; y < y1; ++y) {
                for (size_t x = x0; x < x1; ++x) {
                    const double p = frame.at(x, y) / 255.0;
                    sum += p;
                    sum_sq += p * p;
                    ++hist[orientation_bin(grad_x(frame, x, y), grad_y(frame, x, y))];
                }
            }

            const double mean = sum / count;
            const double var = std::max(0.0, sum_sq / count - mean * mean);
            float cell[kCellFeatureDim];
            cell[0] = static_cast<float>(mean);
            cell[1] = static_cast<float>(std::sqrt(var));
            for (size_t b = 0; b < 8; ++b)
                cell[2 + b] = static_cast<float>(static_cast<double>(hist[b]) / count);

            out.locals.push_back(std::span<const float>(cell, kCellFeatureDim));
            out.global.insert(out.global.end(), cell, cell + kCellFeatureDim);
        }
    }
    return out;
}

FrameFeatureSequence extract_video(const std::vector<GrayFrame>& frames, size_t grid, float fps,
                                   std::string video_id) {
    if (frames.empty()) throw GeometryError("extract_video: no frames");
    const size_t w = frames.front().width;
    const size_t h = frames.front().height;
    for (size_t i = 1; i < frames.size(); ++i)
        if (frames[i].width != w || frames[i].height != h)
            throw GeometryError("extract_video: frame " + std::to_string(i) +
                                " has mismatched dimensions");

    FrameFeatureSequence seq;
    seq.video_id = std::move(video_id);
    seq.num_frames = frames.size();
    seq.local_count = grid * grid;
    seq.local_dim = kCellFeatureDim;
    seq.global_dim = grid * grid * kCellFeatureDim;
    seq.fps = fps;
    seq.global_features.reserve(seq.num_frames * seq.global_dim);
    seq.local_features.reserve(seq.num_frames * seq.local_count * seq.local_dim);

    for (const GrayFrame& frame : frames) {
        GridFeatures gf = extract_grid_features(frame, grid);
        seq.global_features.insert(seq.global_features.end(), gf.global.begin(), gf.global.end());
        seq.local_features.insert(seq.local_features.end(), gf.locals.data.begin(),
                                  gf.locals.data.end());
    }
    seq.validate();
    return seq;
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& is, const std::string& ctx) {
    std::string tok;
    int c;
    while ((c = is.get()) != EOF) {
        if (c == '#') {
            while ((c = is.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    if (tok.empty()) throw CorruptionError(ctx + ": truncated PGM header");
    return tok;
}

size_t pgm_number(std::istream& is, const std::string& ctx, const char* field) {
    const std::string tok = pgm_token(is, ctx);
    size_t value = 0;
    for (char ch : tok) {
        if (ch < '0' || ch > '9')
            throw ParseError(ctx + ": non-numeric " + field + " in PGM header");
        value = value * 10 + static_cast<size_t>(ch - '0');
    }
    return value;
}

}  // namespace

GrayFrame load_pgm(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    const std::string ctx = path.string();

    if (pgm_token(is, ctx) != "P5") throw FormatError(ctx + ": not a binary PGM (P5) file");
    const size_t width = pgm_number(is, ctx, "width");
    const size_t height = pgm_number(is, ctx, "height");
    const size_t maxval = pgm_number(is, ctx, "maxval");
    if (maxval == 0 || maxval > 255)
        throw FormatError(ctx + ": unsupported PGM maxval " + std::to_string(maxval));

    std::vector<uint8_t> pixels(width * height);
    if (!is.read(reinterpret_cast<char*>(pixels.data()),
                 static_cast<std::streamsize>(pixels.size())))
        throw CorruptionError(ctx + ": truncated PGM payload");
    return GrayFrame(width, height, std::move(pixels));
}

}  // namespace d3
