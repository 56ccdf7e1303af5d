#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "d3/key_selection.hpp"
#include "support/selection_oracles.hpp"
#include "support/test_util.hpp"

using namespace d3;

namespace {

// Sequence with the given 2-D-ish global features and trivial locals.
FrameFeatureSequence seq_from_globals(const std::vector<std::vector<float>>& globals,
                                      float fps = 25.0f) {
    FrameFeatureSequence seq;
    seq.video_id = "synthetic";
    seq.num_frames = globals.size();
    seq.global_dim = globals.front().size();
    seq.local_count = 1;
    seq.local_dim = 1;
    seq.fps = fps;
    for (const auto& g : globals)
        seq.global_features.insert(seq.global_features.end(), g.begin(), g.end());
    seq.local_features.assign(seq.num_frames, 0.0f);
    return seq;
}

std::vector<size_t> all_frames(size_t n) {
    std::vector<size_t> v(n);
    for (size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

}  // namespace

TEST_SUITE("key_selection") {

TEST_CASE("R = N selects every frame with objective 0") {
    Rng rng(1);
    const FrameFeatureSequence seq = d3::test::random_sequence(rng, 6, 3, 1, 1);
    SelectionConfig cfg;
    cfg.frames = 6;
    cfg.tau = 2;
    cfg.seed = 9;
    const SelectionResult result = select_medoids(seq, cfg);
    CHECK(result.key_indices == all_frames(6));
    CHECK(result.objective == 0.0);
}

TEST_CASE("identical frames give objective 0 for any selection") {
    std::vector<std::vector<float>> globals(8, {1.5f, -2.0f});
    const FrameFeatureSequence seq = seq_from_globals(globals);
    SelectionConfig cfg;
    cfg.frames = 3;
    cfg.tau = 0;
    cfg.seed = 4;
    const SelectionResult result = select_medoids(seq, cfg);
    CHECK(result.objective == 0.0);
    CHECK(result.key_indices.size() == 3);
}

TEST_CASE("two tight clusters: matches the exhaustive minimum over all pairs") {
    // 6 frames around (0,0) and (10,10); subset = whole sequence
    const FrameFeatureSequence seq = seq_from_globals({{0.1f, -0.1f},
                                                       {0.0f, 0.2f},
                                                       {-0.2f, 0.0f},
                                                       {10.1f, 9.9f},
                                                       {9.8f, 10.0f},
                                                       {10.0f, 10.2f}});
    SelectionConfig cfg;
    cfg.frames = 2;
    cfg.tau = 0;
    cfg.subset_size = 6;
    cfg.seed = 123;
    const SelectionResult result = select_medoids(seq, cfg);
    const double best = d3::test::oracle_exhaustive_min(seq, 2);  // all C(6,2)=15 pairs
    CHECK(result.objective == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("accepted swaps strictly decrease the subset objective") {
    Rng rng(55);
    for (int trial = 0; trial < 10; ++trial) {
        const FrameFeatureSequence seq = d3::test::random_sequence(rng, 30, 3, 1, 1);
        SelectionConfig cfg;
        cfg.frames = 4;
        cfg.tau = 2;
        cfg.subset_size = 20;
        cfg.repeats = 3;
        cfg.seed = 1000 + trial;
        SelectionTrace trace;
        select_medoids(seq, cfg, &trace);

        size_t total_swaps = 0;
        for (const RepeatTrace& rep : trace.repeats) {
            for (size_t i = 0; i < rep.swaps.size(); ++i) {
                CHECK(rep.swaps[i].objective_after < rep.swaps[i].objective_before);
                if (i > 0)  // chain consistency within a repeat
                    CHECK(rep.swaps[i].objective_before ==
                          doctest::Approx(rep.swaps[i - 1].objective_after));
            }
            total_swaps += rep.swaps.size();
        }
        CHECK(total_swaps > 0);  // random init practically always improves
    }
}

TEST_CASE("returned subset solutions are 1-swap optimal") {
    Rng rng(77);
    for (int trial = 0; trial < 8; ++trial) {
        const size_t n = 10 + rng.uniform_index(15);
        const FrameFeatureSequence seq = d3::test::random_sequence(rng, n, 2, 1, 1);
        SelectionConfig cfg;
        cfg.frames = 2 + rng.uniform_index(3);
        cfg.tau = 0;
        cfg.subset_size = std::min<size_t>(n, cfg.frames + 5 + rng.uniform_index(5));
        cfg.repeats = 2;
        cfg.seed = 31 * trial + 1;
        SelectionTrace trace;
        select_medoids(seq, cfg, &trace);
        for (const RepeatTrace& rep : trace.repeats)
            CHECK(d3::test::oracle_one_swap_optimal(seq, rep.subset, rep.keys));
    }
}

TEST_CASE("winner is the repeat with the lowest full objective") {
    Rng rng(99);
    const FrameFeatureSequence seq = d3::test::random_sequence(rng, 40, 3, 1, 1);
    SelectionConfig cfg;
    cfg.frames = 3;
    cfg.tau = 2;
    cfg.subset_size = 12;
    cfg.repeats = 5;
    cfg.seed = 7;
    SelectionTrace trace;
    const SelectionResult result = select_medoids(seq, cfg, &trace);

    double best = std::numeric_limits<double>::infinity();
    size_t best_repeat = 0;
    for (size_t r = 0; r < trace.repeats.size(); ++r) {
        CHECK(trace.repeats[r].full_objective ==
              doctest::Approx(d3::test::oracle_objective(seq, all_frames(40), trace.repeats[r].keys)));
        if (trace.repeats[r].full_objective < best) {
            best = trace.repeats[r].full_objective;
            best_repeat = r;
        }
    }
    CHECK(trace.winner == best_repeat);
    CHECK(result.key_indices == trace.repeats[best_repeat].keys);
    CHECK(result.objective == doctest::Approx(best));
}

TEST_CASE("nearest assignment invariant with ties to the lowest key index") {
    Rng rng(101);
    const FrameFeatureSequence seq = d3::test::random_sequence(rng, 25, 3, 1, 1);
    SelectionConfig cfg;
    cfg.frames = 4;
    cfg.tau = 2;
    cfg.seed = 13;
    const SelectionResult result = select_medoids(seq, cfg);

    REQUIRE(std::is_sorted(result.key_indices.begin(), result.key_indices.end()));
    double recomputed = 0.0;
    for (size_t i = 0; i < seq.num_frames; ++i) {
        const size_t owner = result.key_indices[result.cluster_of[i]];
        const double owner_dist = d3::test::oracle_sqdist(seq, i, owner);
        for (size_t k : result.key_indices) {
            const double d = d3::test::oracle_sqdist(seq, i, k);
            CHECK(owner_dist <= d);
            if (d == owner_dist) CHECK(owner <= k);  // tie break
        }
        recomputed += owner_dist;
    }
    CHECK(result.objective == doctest::Approx(recomputed));
}

TEST_CASE("determinism: identical seq, cfg and seed give identical results") {
    Rng rng(404);
    const FrameFeatureSequence seq = d3::test::random_sequence(rng, 50, 4, 1, 1);
    SelectionConfig cfg;
    cfg.frames = 5;
    cfg.tau = 4;
    cfg.seed = 555;
    const SelectionResult a = select_medoids(seq, cfg);
    const SelectionResult b = select_medoids(seq, cfg);
    CHECK(a.key_indices == b.key_indices);
    CHECK(a.cluster_of == b.cluster_of);
    CHECK(a.objective == b.objective);  // bit-identical
}

TEST_CASE("infeasible and invalid configurations") {
    Rng rng(3);
    const FrameFeatureSequence seq = d3::test::random_sequence(rng, 5, 2, 1, 1);
    SelectionConfig cfg;
    cfg.frames = 6;
    CHECK_THROWS_AS(select_medoids(seq, cfg), InfeasibleError);
    cfg.frames = 2;
    cfg.tau = 3;
    CHECK_THROWS_AS(select_medoids(seq, cfg), ConfigError);
    cfg.tau = 2;
    cfg.subset_size = 1;  // < R
    CHECK_THROWS_AS(select_medoids(seq, cfg), ConfigError);
}

TEST_CASE("derive_segments: interior, start clamp, end clamp") {
    CHECK(derive_segments({10}, 6, 100)[0].lo == 7);
    CHECK(derive_segments({10}, 6, 100)[0].hi == 13);
    CHECK(derive_segments({1}, 6, 100)[0].lo == 0);
    CHECK(derive_segments({1}, 6, 100)[0].hi == 6);
    CHECK(derive_segments({99}, 6, 100)[0].lo == 93);
    CHECK(derive_segments({99}, 6, 100)[0].hi == 99);

    // window-length oracle over random centers
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const size_t tau = 2 * rng.uniform_index(5);
        const size_t n = tau + 1 + rng.uniform_index(30);
        const size_t center = rng.uniform_index(n);
        const KeySegment seg = derive_segments({center}, tau, n)[0];
        CHECK(seg.hi - seg.lo == tau);
        CHECK(seg.hi <= n - 1);
        CHECK(seg.lo <= center);
        CHECK(center <= seg.hi);
        CHECK(seg.center == center);
    }

    CHECK_THROWS_AS(derive_segments({0}, 6, 5), InfeasibleError);  // N < tau+1
    CHECK_THROWS_AS(derive_segments({0}, 3, 10), ConfigError);     // odd tau
    CHECK_THROWS_AS(derive_segments({12}, 2, 10), BoundsError);    // center out of range
}

TEST_CASE("baseline: consecutive") {
    Rng rng(7);
    const FrameFeatureSequence seq = d3::test::random_sequence(rng, 40, 2, 1, 1);
    BaselineParams params;
    params.fraction = 1.0;
    CHECK(baseline_select(seq, SelectionStrategy::Consecutive, params, 0) == all_frames(40));
    params.fraction = 0.125;
    CHECK(baseline_select(seq, SelectionStrategy::Consecutive, params, 0) == all_frames(5));
    params.fraction = 1.0 / 40.0;
    CHECK(baseline_select(seq, SelectionStrategy::Consecutive, params, 0) ==
          std::vector<size_t>{0});
    params.fraction = 1.5;
    CHECK_THROWS_AS(baseline_select(seq, SelectionStrategy::Consecutive, params, 0), ConfigError);
}

TEST_CASE("baseline: uniform endpoints convention") {
    Rng rng(8);
    const FrameFeatureSequence seq10 = d3::test::random_sequence(rng, 10, 2, 1, 1);
    BaselineParams params;
    params.frames = 2;
    CHECK(baseline_select(seq10, SelectionStrategy::Uniform, params, 0) ==
          std::vector<size_t>{0, 9});
    params.frames = 1;
    CHECK(baseline_select(seq10, SelectionStrategy::Uniform, params, 0) == std::vector<size_t>{0});

    const FrameFeatureSequence seq5 = d3::test::random_sequence(rng, 5, 2, 1, 1);
    params.frames = 5;
    CHECK(baseline_select(seq5, SelectionStrategy::Uniform, params, 0) == all_frames(5));
}

TEST_CASE("baseline: random is distinct, sorted and deterministic") {
    Rng rng(9);
    const FrameFeatureSequence seq = d3::test::random_sequence(rng, 30, 2, 1, 1);
    BaselineParams params;
    params.frames = 7;
    const auto a = baseline_select(seq, SelectionStrategy::Random, params, 42);
    const auto b = baseline_select(seq, SelectionStrategy::Random, params, 42);
    CHECK(a == b);
    CHECK(a.size() == 7);
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(std::adjacent_find(a.begin(), a.end()) == a.end());
    for (size_t idx : a) CHECK(idx < 30);

    params.frames = 31;
    CHECK_THROWS_AS(baseline_select(seq, SelectionStrategy::Random, params, 42), InfeasibleError);
}

TEST_CASE("baseline: CHC picks one frame near each blob center") {
    // three tight blobs of five frames each
    std::vector<std::vector<float>> globals;
    const float centers[3][2] = {{0.0f, 0.0f}, {20.0f, 0.0f}, {0.0f, 20.0f}};
    Rng rng(10);
    for (int blob = 0; blob < 3; ++blob)
        for (int i = 0; i < 5; ++i)
            globals.push_back({centers[blob][0] + static_cast<float>(rng.uniform_real() * 0.2),
                               centers[blob][1] + static_cast<float>(rng.uniform_real() * 0.2)});
    const FrameFeatureSequence seq = seq_from_globals(globals);

    BaselineParams params;
    params.frames = 3;
    const auto picks = baseline_select(seq, SelectionStrategy::Chc, params, 17);
    REQUIRE(picks.size() == 3);
    // one pick from each blob (frames 0-4, 5-9, 10-14)
    CHECK(picks[0] < 5);
    CHECK(picks[1] >= 5);
    CHECK(picks[1] < 10);
    CHECK(picks[2] >= 10);
}

TEST_CASE("baseline: GHD matches a direct threshold oracle and drops the outlier") {
    // stable histograms with one huge jump at frame 12
    const size_t n = 30, dims = 64;
    std::vector<std::vector<float>> globals(n, std::vector<float>(dims, 0.0f));
    Rng rng(11);
    for (size_t i = 0; i < n; ++i)
        for (size_t d = 0; d < dims; ++d)
            globals[i][d] = static_cast<float>(rng.uniform_real() * 0.01);
    for (size_t d = 0; d < dims; ++d) globals[12][d] += 50.0f;  // outlier frame
    const FrameFeatureSequence seq = seq_from_globals(globals);

    BaselineParams params;
    params.ghd_level = 0;  // threshold = mean
    const auto picks = baseline_select(seq, SelectionStrategy::Ghd, params, 0);

    // the transitions into frame 12 and into frame 13 are both huge
    CHECK(std::find(picks.begin(), picks.end(), 12) == picks.end());
    CHECK(std::find(picks.begin(), picks.end(), 13) == picks.end());
    CHECK(std::find(picks.begin(), picks.end(), 0) != picks.end());

    // independent reimplementation of the filter
    std::vector<double> diffs(n, 0.0);
    for (size_t i = 1; i < n; ++i)
        for (size_t d = 0; d < dims; ++d)
            diffs[i] += std::abs(static_cast<double>(globals[i][d]) - globals[i - 1][d]);
    double mu = 0.0;
    for (size_t i = 1; i < n; ++i) mu += diffs[i];
    mu /= (n - 1);
    std::vector<size_t> expected{0};
    for (size_t i = 1; i < n; ++i)
        if (diffs[i] <= mu) expected.push_back(i);
    CHECK(picks == expected);
}

TEST_CASE("baseline: thumbnail takes one block medoid per period") {
    // fps=1, period 3s -> blocks of 3 frames: {0,1,2} {3,4,5} {6,7,8} {9}
    const FrameFeatureSequence seq = seq_from_globals(
        {{0.0f}, {1.0f}, {5.0f}, {10.0f}, {10.0f}, {30.0f}, {7.0f}, {7.5f}, {8.0f}, {2.0f}}, 1.0f);
    BaselineParams params;
    params.period_s = 3.0;
    const auto picks = baseline_select(seq, SelectionStrategy::Thumbnail, params, 0);
    // block medoids: frame 1 (costs 26/17/41), frame 3 (tie 0 vs 400 -> lowest), frame 7, frame 9
    CHECK(picks == std::vector<size_t>{1, 3, 7, 9});
}

TEST_CASE("run_selection wraps baselines with clusters and segments") {
    Rng rng(12);
    const FrameFeatureSequence seq = d3::test::random_sequence(rng, 20, 3, 2, 2);
    SelectionSpec spec;
    spec.strategy = SelectionStrategy::Uniform;
    spec.frames = 4;
    spec.tau = 2;
    const SelectionResult result = run_selection(seq, spec, 5);
    CHECK(result.key_indices.size() == 4);
    CHECK(result.segments.size() == 4);
    CHECK(result.cluster_of.size() == 20);
    for (const KeySegment& seg : result.segments) CHECK(seg.hi - seg.lo == 2);
    CHECK(result.objective == doctest::Approx(d3::test::oracle_objective(
                                  seq, all_frames(20), result.key_indices)));
}

}  // TEST_SUITE
