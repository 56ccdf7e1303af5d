#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "d3/feature_model.hpp"

namespace d3 {

// Hard-assignment codebook for BoF and VLAD.
struct Codebook {
    size_t k = 0;
    size_t dim = 0;
    std::vector<float> centroids;  // k x dim

    std::span<const float> centroid(size_t j) const { return {centroids.data() + j * dim, dim}; }
};

// Diagonal-covariance Gaussian mixture for Fisher vectors.
struct GmmModel {
    size_t k = 0;
    size_t dim = 0;
    std::vector<float> weights;    // k, positive, sum 1
    std::vector<float> means;      // k x dim
    std::vector<float> variances;  // k x dim, floored away from zero

    std::span<const float> mean(size_t j) const { return {means.data() + j * dim, dim}; }
    std::span<const float> variance(size_t j) const { return {variances.data() + j * dim, dim}; }
};

struct KmeansStats {
    size_t iterations = 0;
    std::vector<double> inertia;  // one value per Lloyd assignment step
};

struct GmmStats {
    size_t iterations = 0;
    std::vector<double> log_likelihood;  // one value per EM iteration
};

// k-means++ seeding followed by Lloyd iterations. Terminates at max_iters or
// at an exact centroid fixpoint. An empty cluster is reseeded to the feature
// farthest from its stale centroid. Fixed seed gives a bit-identical model.
Codebook kmeans_pp(const FeatureSet& features, size_t k, uint64_t seed, size_t max_iters = 1000,
                   KmeansStats* stats = nullptr);

// EM for a diagonal GMM. Means initialized from kmeans_pp, weights uniform,
// variances per cluster. Stops when the relative log-likelihood improvement
// drops below tol or at max_iters. The variance floor (1e-4 x mean
// per-dimension data variance) is applied at init and every M-step.
GmmModel fit_gmm(const FeatureSet& features, size_t k, uint64_t seed, size_t max_iters = 200,
                 double tol = 1e-5, GmmStats* stats = nullptr);

// Posterior responsibilities of all k components for one feature; a
// probability simplex.
std::vector<double> gmm_posteriors(const GmmModel& gmm, std::span<const float> x);

// Nearest centroid under squared Euclidean distance, ties to the lowest index.
size_t nearest_centroid(const Codebook& cb, std::span<const float> x);

// Model persistence. "D3CB" / "D3GM" magic, u16 version, u32 k, u32 d header,
// then little-endian f32 parameters; lossless round trip.
void save_codebook(const Codebook& cb, const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);
void save_gmm(const GmmModel& gmm, const std::filesystem::path& path);
GmmModel load_gmm(const std::filesystem::path& path);

}  // namespace d3
