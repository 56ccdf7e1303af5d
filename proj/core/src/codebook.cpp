#include "d3/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "binio.hpp"
#include "d3/rng.hpp"

namespace d3 {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double squared_distance(std::span<const float> x, const double* c, size_t dim) {
    double acc = 0.0;
    for (size_t d = 0; d < dim; ++d) {
        const double diff = static_cast<double>(x[d]) - c[d];
        acc += diff * diff;
    }
    return acc;
}

// k-means++ seeding: first center uniform, then proportional to the squared
// distance to the nearest chosen center.
std::vector<double> seed_centroids(const FeatureSet& features, size_t k, Rng& rng) {
    const size_t m = features.size();
    const size_t dim = features.dim;
    std::vector<double> centroids(k * dim);
    std::vector<char> chosen(m, 0);

    auto adopt = [&](size_t slot, size_t point) {
        const auto row = features.row(point);
        for (size_t d = 0; d < dim; ++d) centroids[slot * dim + d] = row[d];
        chosen[point] = 1;
    };

    adopt(0, rng.uniform_index(m));

    std::vector<double> dist2(m);
    for (size_t i = 0; i < m; ++i) dist2[i] = squared_distance(features.row(i), centroids.data(), dim);

    for (size_t j = 1; j < k; ++j) {
        double total = 0.0;
        for (double v : dist2) total += v;

        size_t pick = m;
        if (total > 0.0) {
            const double r = rng.uniform_real() * total;
            double acc = 0.0;
            for (size_t i = 0; i < m; ++i) {
                acc += dist2[i];
                if (acc > r) {
                    pick = i;
                    break;
                }
            }
            if (pick == m) {  // numerical edge: fall back to the last positive mass
                for (size_t i = m; i-- > 0;)
                    if (dist2[i] > 0.0) {
                        pick = i;
                        break;
                    }
            }
        }
        if (pick == m) {  // all remaining points coincide with chosen centers
            for (size_t i = 0; i < m; ++i)
                if (!chosen[i]) {
                    pick = i;
                    break;
                }
            if (pick == m) pick = 0;
        }

        adopt(j, pick);
        for (size_t i = 0; i < m; ++i)
            dist2[i] = std::min(dist2[i], squared_distance(features.row(i), &centroids[j * dim], dim));
    }
    return centroids;
}

}  // namespace

Codebook kmeans_pp(const FeatureSet& features, size_t k, uint64_t seed, size_t max_iters,
                   KmeansStats* stats) {
    if (k == 0) throw ConfigError("kmeans: k must be at least 1");
    const size_t m = features.size();
    const size_t dim = features.dim;
    if (m < k)
        throw InfeasibleError("kmeans: " + std::to_string(m) + " features cannot seed k = " +
                              std::to_string(k));

    Rng rng(seed);
    std::vector<double> centroids = seed_centroids(features, k, rng);

    if (stats) {
        stats->iterations = 0;
        stats->inertia.clear();
    }

    std::vector<size_t> assignment(m);
    std::vector<double> sums(k * dim);
    std::vector<size_t> counts(k);
    std::vector<double> next(k * dim);

    for (size_t it = 1; it <= max_iters; ++it) {
        // assignment step, ties to the lowest centroid index
        double inertia = 0.0;
        for (size_t i = 0; i < m; ++i) {
            size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (size_t j = 0; j < k; ++j) {
                const double d = squared_distance(features.row(i), &centroids[j * dim], dim);
                if (d < best_d) {
                    best_d = d;
                    best = j;
                }
            }
            assignment[i] = best;
            inertia += best_d;
        }
        if (stats) {
            stats->inertia.push_back(inertia);
            stats->iterations = it;
        }

        // update step, fixed accumulation order
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (size_t i = 0; i < m; ++i) {
            const auto row = features.row(i);
            double* s = &sums[assignment[i] * dim];
            for (size_t d = 0; d < dim; ++d) s[d] += row[d];
            ++counts[assignment[i]];
        }

        std::vector<size_t> reseeded;
        for (size_t j = 0; j < k; ++j) {
            if (counts[j] > 0) {
                for (size_t d = 0; d < dim; ++d)
                    next[j * dim + d] = sums[j * dim + d] / static_cast<double>(counts[j]);
            } else {
                // reseed to the point farthest from the stale centroid
                size_t far = m;
                double far_d = -1.0;
                for (size_t i = 0; i < m; ++i) {
                    if (std::find(reseeded.begin(), reseeded.end(), i) != reseeded.end()) continue;
                    const double d = squared_distance(features.row(i), &centroids[j * dim], dim);
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                const auto row = features.row(far);
                for (size_t d = 0; d < dim; ++d) next[j * dim + d] = row[d];
                reseeded.push_back(far);
            }
        }

        if (next == centroids) break;  // exact fixpoint
        centroids = next;
    }

    Codebook cb;
    cb.k = k;
    cb.dim = dim;
    cb.centroids.resize(k * dim);
    for (size_t i = 0; i < centroids.size(); ++i) cb.centroids[i] = static_cast<float>(centroids[i]);
    return cb;
}

size_t nearest_centroid(const Codebook& cb, std::span<const float> x) {
    if (x.size() != cb.dim) throw ShapeError("nearest_centroid: feature dim mismatch");
    size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < cb.k; ++j) {
        const auto c = cb.centroid(j);
        double d = 0.0;
        for (size_t i = 0; i < cb.dim; ++i) {
            const double diff = static_cast<double>(x[i]) - static_cast<double>(c[i]);
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

GmmModel fit_gmm(const FeatureSet& features, size_t k, uint64_t seed, size_t max_iters, double tol,
                 GmmStats* stats) {
    if (k == 0) throw ConfigError("gmm: k must be at least 1");
    const size_t m = features.size();
    const size_t dim = features.dim;
    if (m < k)
        throw InfeasibleError("gmm: " + std::to_string(m) + " features cannot fit k = " +
                              std::to_string(k));

    // variance floor from the whole data: 1e-4 x mean per-dimension variance
    std::vector<double> data_mean(dim, 0.0), data_var(dim, 0.0);
    for (size_t i = 0; i < m; ++i) {
        const auto row = features.row(i);
        for (size_t d = 0; d < dim; ++d) data_mean[d] += row[d];
    }
    for (size_t d = 0; d < dim; ++d) data_mean[d] /= static_cast<double>(m);
    for (size_t i = 0; i < m; ++i) {
        const auto row = features.row(i);
        for (size_t d = 0; d < dim; ++d) {
            const double dev = row[d] - data_mean[d];
            data_var[d] += dev * dev;
        }
    }
    double mean_var = 0.0;
    for (size_t d = 0; d < dim; ++d) mean_var += data_var[d] / static_cast<double>(m);
    mean_var /= static_cast<double>(dim);
    const double floor = std::max(1e-4 * mean_var, 1e-12);

    // init: means from k-means++, uniform weights, per-cluster variances
    const Codebook init_cb = kmeans_pp(features, k, seed);
    std::vector<double> weights(k, 1.0 / static_cast<double>(k));
    std::vector<double> means(k * dim);
    std::vector<double> vars(k * dim);
    {
        std::vector<size_t> assignment(m);
        for (size_t i = 0; i < m; ++i) assignment[i] = nearest_centroid(init_cb, features.row(i));

        std::vector<double> sums(k * dim, 0.0), sq(k * dim, 0.0);
        std::vector<size_t> counts(k, 0);
        for (size_t i = 0; i < m; ++i) {
            const auto row = features.row(i);
            const size_t j = assignment[i];
            for (size_t d = 0; d < dim; ++d) {
                sums[j * dim + d] += row[d];
                sq[j * dim + d] += static_cast<double>(row[d]) * row[d];
            }
            ++counts[j];
        }
        for (size_t j = 0; j < k; ++j) {
            for (size_t d = 0; d < dim; ++d) {
                if (counts[j] > 0) {
                    const double mu = sums[j * dim + d] / static_cast<double>(counts[j]);
                    const double v = sq[j * dim + d] / static_cast<double>(counts[j]) - mu * mu;
                    means[j * dim + d] = mu;
                    vars[j * dim + d] = std::max(v, floor);
                } else {
                    means[j * dim + d] = init_cb.centroids[j * dim + d];
                    vars[j * dim + d] = std::max(data_var[d] / static_cast<double>(m), floor);
                }
            }
        }
    }

    if (stats) {
        stats->iterations = 0;
        stats->log_likelihood.clear();
    }

    std::vector<double> log_norm(k);  // -0.5 * sum_d log(2*pi*v_jd), cached per iteration
    std::vector<double> log_p(k);
    std::vector<double> gamma(k);
    std::vector<double> acc_w(k), acc_mean(k * dim), acc_sq(k * dim);

    double prev_ll = -std::numeric_limits<double>::infinity();
    for (size_t it = 1; it <= max_iters; ++it) {
        for (size_t j = 0; j < k; ++j) {
            double s = 0.0;
            for (size_t d = 0; d < dim; ++d) s += std::log(kTwoPi * vars[j * dim + d]);
            log_norm[j] = -0.5 * s;
        }

        std::fill(acc_w.begin(), acc_w.end(), 0.0);
        std::fill(acc_mean.begin(), acc_mean.end(), 0.0);
        std::fill(acc_sq.begin(), acc_sq.end(), 0.0);

        double ll = 0.0;
        for (size_t i = 0; i < m; ++i) {
            const auto row = features.row(i);
            double max_lp = -std::numeric_limits<double>::infinity();
            for (size_t j = 0; j < k; ++j) {
                double quad = 0.0;
                for (size_t d = 0; d < dim; ++d) {
                    const double dev = row[d] - means[j * dim + d];
                    quad += dev * dev / vars[j * dim + d];
                }
                log_p[j] = std::log(weights[j]) + log_norm[j] - 0.5 * quad;
                max_lp = std::max(max_lp, log_p[j]);
            }
            double denom = 0.0;
            for (size_t j = 0; j < k; ++j) denom += std::exp(log_p[j] - max_lp);
            const double ll_i = max_lp + std::log(denom);
            ll += ll_i;

            for (size_t j = 0; j < k; ++j) {
                gamma[j] = std::exp(log_p[j] - ll_i);
                acc_w[j] += gamma[j];
                for (size_t d = 0; d < dim; ++d) {
                    acc_mean[j * dim + d] += gamma[j] * row[d];
                    acc_sq[j * dim + d] += gamma[j] * static_cast<double>(row[d]) * row[d];
                }
            }
        }
        if (stats) {
            stats->log_likelihood.push_back(ll);
            stats->iterations = it;
        }

        // M-step
        double weight_total = 0.0;
        for (size_t j = 0; j < k; ++j) {
            const double nj = acc_w[j];
            if (nj > 0.0) {
                weights[j] = nj / static_cast<double>(m);
                for (size_t d = 0; d < dim; ++d) {
                    const double mu = acc_mean[j * dim + d] / nj;
                    const double v = acc_sq[j * dim + d] / nj - mu * mu;
                    means[j * dim + d] = mu;
                    vars[j * dim + d] = std::max(v, floor);
                }
            } else {
                weights[j] = 1e-12;  // keep the component alive; parameters unchanged
            }
            weight_total += weights[j];
        }
        for (size_t j = 0; j < k; ++j) weights[j] /= weight_total;

        if (it > 1) {
            const double rel = (ll - prev_ll) / std::max(std::abs(prev_ll), 1e-12);
            if (rel < tol) break;
        }
        prev_ll = ll;
    }

    GmmModel gmm;
    gmm.k = k;
    gmm.dim = dim;
    gmm.weights.resize(k);
    gmm.means.resize(k * dim);
    gmm.variances.resize(k * dim);
    const float ffloor = static_cast<float>(floor);
    for (size_t j = 0; j < k; ++j) gmm.weights[j] = static_cast<float>(weights[j]);
    for (size_t i = 0; i < k * dim; ++i) {
        gmm.means[i] = static_cast<float>(means[i]);
        gmm.variances[i] = std::max(static_cast<float>(vars[i]), ffloor);
    }
    return gmm;
}

std::vector<double> gmm_posteriors(const GmmModel& gmm, std::span<const float> x) {
    if (x.size() != gmm.dim) throw ShapeError("gmm_posteriors: feature dim mismatch");
    const size_t k = gmm.k;
    std::vector<double> log_p(k);
    double max_lp = -std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < k; ++j) {
        const double w = gmm.weights[j];
        if (!(w > 0.0f)) throw ModelError("gmm_posteriors: non-positive mixture weight");
        double s = 0.0;
        for (size_t d = 0; d < gmm.dim; ++d) {
            const double v = gmm.variances[j * gmm.dim + d];
            const double dev = static_cast<double>(x[d]) - gmm.means[j * gmm.dim + d];
            s += std::log(kTwoPi * v) + dev * dev / v;
        }
        log_p[j] = std::log(static_cast<double>(w)) - 0.5 * s;
        max_lp = std::max(max_lp, log_p[j]);
    }
    double denom = 0.0;
    for (size_t j = 0; j < k; ++j) denom += std::exp(log_p[j] - max_lp);
    const double log_denom = max_lp + std::log(denom);
    std::vector<double> gamma(k);
    for (size_t j = 0; j < k; ++j) gamma[j] = std::exp(log_p[j] - log_denom);
    return gamma;
}

// ---- persistence ------------------------------------------------------------

namespace {

constexpr char kCodebookMagic[4] = {'D', '3', 'C', 'B'};
constexpr char kGmmMagic[4] = {'D', '3', 'G', 'M'};
constexpr uint16_t kModelVersion = 1;

void check_finite(std::span<const float> values, const std::string& ctx, const char* what) {
    for (float v : values)
        if (!std::isfinite(v)) throw ValidationError(ctx + ": non-finite " + what);
}

std::pair<uint32_t, uint32_t> read_model_header(std::istream& is, const char magic[4],
                                                const std::string& ctx) {
    binio::expect_magic(is, magic, ctx);
    const auto version = binio::read_le<uint16_t>(is, "version", ctx);
    if (version != kModelVersion)
        throw FormatError(ctx + ": unsupported model version " + std::to_string(version));
    const auto k = binio::read_le<uint32_t>(is, "k", ctx);
    const auto d = binio::read_le<uint32_t>(is, "d", ctx);
    if (k == 0 || d == 0) throw ValidationError(ctx + ": zero k or d in header");
    return {k, d};
}

}  // namespace

void save_codebook(const Codebook& cb, const std::filesystem::path& path) {
    if (cb.k == 0 || cb.dim == 0 || cb.centroids.size() != cb.k * cb.dim)
        throw ValidationError("save_codebook: inconsistent model");
    check_finite(cb.centroids, "save_codebook", "centroid");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os.write(kCodebookMagic, 4);
    binio::write_le<uint16_t>(os, kModelVersion);
    binio::write_le<uint32_t>(os, static_cast<uint32_t>(cb.k));
    binio::write_le<uint32_t>(os, static_cast<uint32_t>(cb.dim));
    binio::write_f32_le(os, cb.centroids);
    if (!os) throw IoError("write failure on " + path.string());
}

Codebook load_codebook(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open codebook " + path.string());
    const std::string ctx = path.string();
    const auto [k, d] = read_model_header(is, kCodebookMagic, ctx);
    Codebook cb;
    cb.k = k;
    cb.dim = d;
    cb.centroids.resize(static_cast<size_t>(k) * d);
    binio::read_f32_le(is, cb.centroids, "centroids", ctx);
    binio::expect_eof(is, ctx);
    check_finite(cb.centroids, ctx, "centroid");
    return cb;
}

void save_gmm(const GmmModel& gmm, const std::filesystem::path& path) {
    if (gmm.k == 0 || gmm.dim == 0 || gmm.weights.size() != gmm.k ||
        gmm.means.size() != gmm.k * gmm.dim || gmm.variances.size() != gmm.k * gmm.dim)
        throw ValidationError("save_gmm: inconsistent model");
    check_finite(gmm.weights, "save_gmm", "weight");
    check_finite(gmm.means, "save_gmm", "mean");
    check_finite(gmm.variances, "save_gmm", "variance");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os.write(kGmmMagic, 4);
    binio::write_le<uint16_t>(os, kModelVersion);
    binio::write_le<uint32_t>(os, static_cast<uint32_t>(gmm.k));
    binio::write_le<uint32_t>(os, static_cast<uint32_t>(gmm.dim));
    binio::write_f32_le(os, gmm.weights);
    binio::write_f32_le(os, gmm.means);
    binio::write_f32_le(os, gmm.variances);
    if (!os) throw IoError("write failure on " + path.string());
}

GmmModel load_gmm(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open GMM " + path.string());
    const std::string ctx = path.string();
    const auto [k, d] = read_model_header(is, kGmmMagic, ctx);
    GmmModel gmm;
    gmm.k = k;
    gmm.dim = d;
    gmm.weights.resize(k);
    gmm.means.resize(static_cast<size_t>(k) * d);
    gmm.variances.resize(static_cast<size_t>(k) * d);
    binio::read_f32_le(is, gmm.weights, "weights", ctx);
    binio::read_f32_le(is, gmm.means, "means", ctx);
    binio::read_f32_le(is, gmm.variances, "variances", ctx);
    binio::expect_eof(is, ctx);
    check_finite(gmm.weights, ctx, "weight");
    check_finite(gmm.means, ctx, "mean");
    check_finite(gmm.variances, ctx, "variance");
    double wsum = 0.0;
    for (float w : gmm.weights) {
        if (!(w > 0.0f)) throw ValidationError(ctx + ": non-positive mixture weight");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-4) throw ValidationError(ctx + ": mixture weights do not sum to 1");
    for (float v : gmm.variances)
        if (!(v > 0.0f)) throw ValidationError(ctx + ": non-positive variance");
    return gmm;
}

}  // namespace d3
