#include <doctest.h>

#include <cmath>

#include "d3/codebook.hpp"
#include "support/test_util.hpp"

using namespace d3;
using d3::test::TempDir;

namespace {

FeatureSet two_blobs(Rng& rng, size_t per_blob, double radius) {
    FeatureSet fs(2);
    const double centers[2][2] = {{0.0, 0.0}, {10.0, 10.0}};
    for (int blob = 0; blob < 2; ++blob)
        for (size_t i = 0; i < per_blob; ++i) {
            const float x = static_cast<float>(centers[blob][0] + (rng.uniform_real() * 2 - 1) * radius);
            const float y = static_cast<float>(centers[blob][1] + (rng.uniform_real() * 2 - 1) * radius);
            fs.push_back(std::vector<float>{x, y});
        }
    return fs;
}

double inertia_of(const FeatureSet& fs, const Codebook& cb) {
    double total = 0.0;
    for (size_t i = 0; i < fs.size(); ++i) {
        const auto c = cb.centroid(nearest_centroid(cb, fs.row(i)));
        const auto x = fs.row(i);
        double d = 0.0;
        for (size_t j = 0; j < fs.dim; ++j) {
            const double diff = static_cast<double>(x[j]) - c[j];
            d += diff * diff;
        }
        total += d;
    }
    return total;
}

}  // namespace

TEST_SUITE("codebook") {

TEST_CASE("k equal to M: every point becomes a centroid, inertia 0") {
    Rng rng(1);
    const FeatureSet fs = d3::test::random_features(rng, 6, 3);
    const Codebook cb = kmeans_pp(fs, 6, 9);
    CHECK(cb.k == 6);
    CHECK(inertia_of(fs, cb) == 0.0);
}

TEST_CASE("k=1: centroid is the arithmetic mean") {
    Rng rng(2);
    const FeatureSet fs = d3::test::random_features(rng, 50, 4);
    const Codebook cb = kmeans_pp(fs, 1, 3);
    for (size_t d = 0; d < 4; ++d) {
        double mean = 0.0;
        for (size_t i = 0; i < fs.size(); ++i) mean += fs.row(i)[d];
        mean /= static_cast<double>(fs.size());
        CHECK(cb.centroid(0)[d] == doctest::Approx(mean).epsilon(1e-6));
    }
}

TEST_CASE("two well-separated blobs: centroids land on blob centers") {
    Rng rng(3);
    const FeatureSet fs = two_blobs(rng, 30, 0.1);
    const Codebook cb = kmeans_pp(fs, 2, 17);
    // one centroid within 0.2 of each blob center
    bool near_origin = false, near_ten = false;
    for (size_t j = 0; j < 2; ++j) {
        const auto c = cb.centroid(j);
        if (std::hypot(c[0], c[1]) < 0.2) near_origin = true;
        if (std::hypot(c[0] - 10.0, c[1] - 10.0) < 0.2) near_ten = true;
    }
    CHECK(near_origin);
    CHECK(near_ten);
}

TEST_CASE("inertia is non-increasing across Lloyd iterations") {
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const FeatureSet fs = d3::test::random_features(rng, 60, 3);
        KmeansStats stats;
        kmeans_pp(fs, 5, 100 + trial, 1000, &stats);
        REQUIRE(stats.inertia.size() >= 1);
        CHECK(stats.iterations <= 1000);
        for (size_t i = 1; i < stats.inertia.size(); ++i)
            CHECK(stats.inertia[i] <= stats.inertia[i - 1]);
    }
}

TEST_CASE("duplicate-heavy data with k above the distinct count still returns k centroids") {
    FeatureSet fs(2);
    for (int i = 0; i < 5; ++i) fs.push_back(std::vector<float>{0.0f, 0.0f});
    for (int i = 0; i < 5; ++i) fs.push_back(std::vector<float>{4.0f, 4.0f});
    KmeansStats stats;
    const Codebook cb = kmeans_pp(fs, 3, 7, 50, &stats);
    CHECK(cb.k == 3);
    for (float v : cb.centroids) CHECK(std::isfinite(v));
    for (size_t i = 1; i < stats.inertia.size(); ++i)
        CHECK(stats.inertia[i] <= stats.inertia[i - 1] + 1e-12);
}

TEST_CASE("determinism: same seed gives bit-identical codebooks") {
    Rng rng(5);
    const FeatureSet fs = d3::test::random_features(rng, 80, 4);
    const Codebook a = kmeans_pp(fs, 6, 12345);
    const Codebook b = kmeans_pp(fs, 6, 12345);
    CHECK(d3::test::bitwise_equal(a.centroids, b.centroids));
    const Codebook c = kmeans_pp(fs, 6, 54321);
    CHECK(!d3::test::bitwise_equal(a.centroids, c.centroids));
}

TEST_CASE("kmeans errors") {
    Rng rng(6);
    const FeatureSet fs = d3::test::random_features(rng, 3, 2);
    CHECK_THROWS_AS(kmeans_pp(fs, 4, 0), InfeasibleError);
    CHECK_THROWS_AS(kmeans_pp(fs, 0, 0), ConfigError);
}

TEST_CASE("gmm with k=1 recovers mean and floored population variance") {
    Rng rng(7);
    const FeatureSet fs = d3::test::random_features(rng, 200, 3, 2.0);
    const GmmModel gmm = fit_gmm(fs, 1, 11);
    REQUIRE(gmm.k == 1);
    CHECK(gmm.weights[0] == doctest::Approx(1.0));

    for (size_t d = 0; d < 3; ++d) {
        double mean = 0.0;
        for (size_t i = 0; i < fs.size(); ++i) mean += fs.row(i)[d];
        mean /= static_cast<double>(fs.size());
        double var = 0.0;
        for (size_t i = 0; i < fs.size(); ++i) {
            const double dev = fs.row(i)[d] - mean;
            var += dev * dev;
        }
        var /= static_cast<double>(fs.size());
        CHECK(gmm.means[d] == doctest::Approx(mean).epsilon(1e-5));
        CHECK(gmm.variances[d] == doctest::Approx(var).epsilon(1e-5));
    }
}

TEST_CASE("gmm separates two distant gaussians") {
    Rng rng(8);
    FeatureSet fs(2);
    const double mu[2][2] = {{0.0, 0.0}, {8.0, 8.0}};
    const size_t per = 400;
    for (int comp = 0; comp < 2; ++comp)
        for (size_t i = 0; i < per; ++i)
            fs.push_back(std::vector<float>{static_cast<float>(mu[comp][0] + rng.normal()),
                                            static_cast<float>(mu[comp][1] + rng.normal())});

    const GmmModel gmm = fit_gmm(fs, 2, 21);
    // three standard errors of the component sample mean
    const double tol = 3.0 / std::sqrt(static_cast<double>(per));
    bool found[2] = {false, false};
    for (size_t j = 0; j < 2; ++j)
        for (int truth = 0; truth < 2; ++truth)
            if (std::abs(gmm.means[j * 2] - mu[truth][0]) < tol &&
                std::abs(gmm.means[j * 2 + 1] - mu[truth][1]) < tol)
                found[truth] = true;
    CHECK(found[0]);
    CHECK(found[1]);
    CHECK(gmm.weights[0] == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("EM log-likelihood is non-decreasing") {
    Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const FeatureSet fs = d3::test::random_features(rng, 100, 3);
        GmmStats stats;
        fit_gmm(fs, 4, 300 + trial, 200, 1e-5, &stats);
        REQUIRE(stats.log_likelihood.size() >= 2);
        for (size_t i = 1; i < stats.log_likelihood.size(); ++i)
            CHECK(stats.log_likelihood[i] >= stats.log_likelihood[i - 1] - 1e-8);
    }
}

TEST_CASE("gmm invariants: weights sum to 1, variances floored, posteriors simplex") {
    Rng rng(10);
    const FeatureSet fs = d3::test::random_features(rng, 150, 4, 3.0);
    const GmmModel gmm = fit_gmm(fs, 3, 33);

    double wsum = 0.0;
    for (float w : gmm.weights) {
        CHECK(w > 0.0f);
        wsum += w;
    }
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-6));

    // recompute the floor: 1e-4 x mean per-dimension data variance
    double mean_var = 0.0;
    for (size_t d = 0; d < fs.dim; ++d) {
        double mean = 0.0;
        for (size_t i = 0; i < fs.size(); ++i) mean += fs.row(i)[d];
        mean /= static_cast<double>(fs.size());
        double var = 0.0;
        for (size_t i = 0; i < fs.size(); ++i) {
            const double dev = fs.row(i)[d] - mean;
            var += dev * dev;
        }
        mean_var += var / static_cast<double>(fs.size());
    }
    const double floor = 1e-4 * (mean_var / static_cast<double>(fs.dim));
    for (float v : gmm.variances) CHECK(v >= floor * (1.0 - 1e-6));

    for (int trial = 0; trial < 20; ++trial) {
        std::vector<float> x(4);
        for (float& v : x) v = static_cast<float>(rng.uniform_real() * 6 - 3);
        const std::vector<double> gamma = gmm_posteriors(gmm, x);
        double sum = 0.0;
        for (double g : gamma) {
            CHECK(g >= 0.0);
            sum += g;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("gmm determinism and infeasibility") {
    Rng rng(11);
    const FeatureSet fs = d3::test::random_features(rng, 40, 2);
    const GmmModel a = fit_gmm(fs, 3, 77);
    const GmmModel b = fit_gmm(fs, 3, 77);
    CHECK(d3::test::bitwise_equal(a.weights, b.weights));
    CHECK(d3::test::bitwise_equal(a.means, b.means));
    CHECK(d3::test::bitwise_equal(a.variances, b.variances));

    CHECK_THROWS_AS(fit_gmm(d3::test::random_features(rng, 2, 2), 3, 0), InfeasibleError);
}

TEST_CASE("model persistence round trips bit-exactly") {
    TempDir dir("models");
    Rng rng(12);
    const FeatureSet fs = d3::test::random_features(rng, 50, 3);

    const Codebook cb = kmeans_pp(fs, 4, 5);
    save_codebook(cb, dir / "cb.d3cb");
    const Codebook cb2 = load_codebook(dir / "cb.d3cb");
    CHECK(cb2.k == cb.k);
    CHECK(cb2.dim == cb.dim);
    CHECK(d3::test::bitwise_equal(cb2.centroids, cb.centroids));

    const GmmModel gmm = fit_gmm(fs, 4, 5);
    save_gmm(gmm, dir / "g.d3gm");
    const GmmModel gmm2 = load_gmm(dir / "g.d3gm");
    CHECK(d3::test::bitwise_equal(gmm2.weights, gmm.weights));
    CHECK(d3::test::bitwise_equal(gmm2.means, gmm.means));
    CHECK(d3::test::bitwise_equal(gmm2.variances, gmm.variances));

    // wrong magic: loading a codebook file as a GMM is a format error
    CHECK_THROWS_AS(load_gmm(dir / "cb.d3cb"), FormatError);

    // truncated model file
    std::string bytes = d3::test::read_file(dir / "g.d3gm");
    std::ofstream os(dir / "bad.d3gm", std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 5));
    os.close();
    CHECK_THROWS_AS(load_gmm(dir / "bad.d3gm"), CorruptionError);
}

}  // TEST_SUITE
