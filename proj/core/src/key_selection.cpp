#include "d3/key_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "d3/codebook.hpp"
#include "d3/rng.hpp"

namespace d3 {

namespace {

double squared_distance(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc;
}

// Nearest key by squared distance, ties to the lowest key frame index.
// Returns the slot (position in `keys`).
size_t nearest_key_slot(const FrameFeatureSequence& seq, size_t frame,
                        const std::vector<size_t>& keys) {
    size_t best_slot = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    size_t best_frame = std::numeric_limits<size_t>::max();
    for (size_t slot = 0; slot < keys.size(); ++slot) {
        const double d = squared_distance(seq.global_frame(frame), seq.global_frame(keys[slot]));
        if (d < best_dist || (d == best_dist && keys[slot] < best_frame)) {
            best_dist = d;
            best_slot = slot;
            best_frame = keys[slot];
        }
    }
    return best_slot;
}

// Objective over all N frames for a fixed key set.
double full_objective(const FrameFeatureSequence& seq, const std::vector<size_t>& keys) {
    double total = 0.0;
    for (size_t i = 0; i < seq.num_frames; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (size_t key : keys) best = std::min(best, squared_distance(seq.global_frame(i), seq.global_frame(key)));
        total += best;
    }
    return total;
}

// One CLARA-style repeat: PAM swap search restricted to `subset` (positions
// are indices into subset). Returns final key slots and the subset objective.
struct SubsetSearch {
    std::vector<size_t> keys;  // positions into subset
    double objective = 0.0;
};

SubsetSearch pam_swap_search(const std::vector<double>& dist, size_t n, size_t num_keys, Rng& rng,
                             size_t repeat_index, const std::vector<size_t>& subset,
                             std::vector<SwapEvent>* swaps) {
    auto d = [&](size_t a, size_t b) { return dist[a * n + b]; };

    std::vector<size_t> keys = rng.sample_without_replacement(n, num_keys);
    std::sort(keys.begin(), keys.end());
    std::vector<char> is_key(n, 0);
    for (size_t k : keys) is_key[k] = 1;

    // assignment[p] = key slot owning subset position p (ties to the lower
    // frame index; subset is ascending so position order is frame order)
    std::vector<size_t> assignment(n);
    auto recluster = [&]() {
        double total = 0.0;
        for (size_t p = 0; p < n; ++p) {
            size_t best_slot = 0;
            double best_dist = std::numeric_limits<double>::infinity();
            size_t best_pos = std::numeric_limits<size_t>::max();
            for (size_t slot = 0; slot < keys.size(); ++slot) {
                const double dd = d(p, keys[slot]);
                if (dd < best_dist || (dd == best_dist && keys[slot] < best_pos)) {
                    best_dist = dd;
                    best_slot = slot;
                    best_pos = keys[slot];
                }
            }
            assignment[p] = best_slot;
            total += best_dist;
        }
        return total;
    };
    double objective = recluster();

    // J for keys with one slot swapped to position `cand`
    auto objective_with_swap = [&](size_t slot, size_t cand) {
        const size_t saved = keys[slot];
        double total = 0.0;
        for (size_t p = 0; p < n; ++p) {
            double best = d(p, cand);
            for (size_t s = 0; s < keys.size(); ++s) {
                if (s == slot) continue;
                best = std::min(best, d(p, keys[s]));
            }
            total += best;
        }
        (void)saved;
        return total;
    };

    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t slot = 0; slot < keys.size(); ++slot) {
            // snapshot this key's non-key cluster members, ascending
            std::vector<size_t> members;
            for (size_t p = 0; p < n; ++p)
                if (!is_key[p] && assignment[p] == slot) members.push_back(p);

            for (size_t m : members) {
                if (is_key[m] || assignment[m] != slot) continue;  // stale after a swap
                const double candidate = objective_with_swap(slot, m);
                if (candidate < objective) {
                    const size_t old_frame = subset[keys[slot]];
                    is_key[keys[slot]] = 0;
                    is_key[m] = 1;
                    keys[slot] = m;
                    const double before = objective;
                    objective = recluster();
                    if (swaps)
                        swaps->push_back(
                            {repeat_index, slot, old_frame, subset[m], before, objective});
                    changed = true;
                }
            }
        }
    }
    return {std::move(keys), objective};
}

}  // namespace

SelectionResult select_medoids(const FrameFeatureSequence& seq, const SelectionConfig& cfg,
                               SelectionTrace* trace) {
    seq.validate();
    const size_t n = seq.num_frames;
    if (cfg.frames == 0) throw ConfigError("select_medoids: R must be at least 1");
    if (cfg.tau % 2 != 0) throw ConfigError("select_medoids: tau must be even");
    if (cfg.repeats == 0) throw ConfigError("select_medoids: repeats must be at least 1");
    if (cfg.frames > n)
        throw InfeasibleError("select_medoids: R = " + std::to_string(cfg.frames) +
                              " exceeds frame count " + std::to_string(n));

    size_t subset_size = cfg.subset_size == 0 ? 40 + 2 * cfg.frames : cfg.subset_size;
    subset_size = std::min(subset_size, n);
    if (subset_size < cfg.frames)
        throw ConfigError("select_medoids: subset_size must be at least R");

    std::vector<std::vector<size_t>> candidates;  // key frame indices per repeat
    candidates.reserve(cfg.repeats);
    if (trace) {
        trace->repeats.clear();
        trace->repeats.resize(cfg.repeats);
    }

    for (size_t r = 0; r < cfg.repeats; ++r) {
        Rng rng(derive_seed(cfg.seed, "medoid-repeat", std::to_string(r)));

        std::vector<size_t> subset = rng.sample_without_replacement(n, subset_size);
        std::sort(subset.begin(), subset.end());

        std::vector<double> dist(subset_size * subset_size, 0.0);
        for (size_t a = 0; a < subset_size; ++a)
            for (size_t b = a + 1; b < subset_size; ++b) {
                const double d =
                    squared_distance(seq.global_frame(subset[a]), seq.global_frame(subset[b]));
                dist[a * subset_size + b] = d;
                dist[b * subset_size + a] = d;
            }

        std::vector<SwapEvent>* swap_sink = trace ? &trace->repeats[r].swaps : nullptr;
        SubsetSearch search =
            pam_swap_search(dist, subset_size, cfg.frames, rng, r, subset, swap_sink);

        std::vector<size_t> keys;
        keys.reserve(cfg.frames);
        for (size_t pos : search.keys) keys.push_back(subset[pos]);
        std::sort(keys.begin(), keys.end());

        if (trace) {
            trace->repeats[r].subset = subset;
            trace->repeats[r].keys = keys;
            trace->repeats[r].subset_objective = search.objective;
        }
        candidates.push_back(std::move(keys));
    }

    // the repeat whose keys minimize the objective over ALL frames wins
    size_t winner = 0;
    double best_full = std::numeric_limits<double>::infinity();
    for (size_t r = 0; r < candidates.size(); ++r) {
        const double full = full_objective(seq, candidates[r]);
        if (trace) trace->repeats[r].full_objective = full;
        if (full < best_full) {
            best_full = full;
            winner = r;
        }
    }
    if (trace) trace->winner = winner;

    SelectionResult result;
    result.key_indices = candidates[winner];
    result.cluster_of.resize(n);
    result.objective = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const size_t slot = nearest_key_slot(seq, i, result.key_indices);
        result.cluster_of[i] = slot;
        result.objective +=
            squared_distance(seq.global_frame(i), seq.global_frame(result.key_indices[slot]));
    }
    result.segments = derive_segments(result.key_indices, cfg.tau, n);
    return result;
}

std::vector<KeySegment> derive_segments(const std::vector<size_t>& key_indices, size_t tau,
                                        size_t num_frames) {
    if (tau % 2 != 0) throw ConfigError("derive_segments: tau must be even");
    if (num_frames < tau + 1)
        throw InfeasibleError("derive_segments: sequence of " + std::to_string(num_frames) +
                              " frames cannot hold a segment of " + std::to_string(tau + 1) +
                              "; reduce tau");

    std::vector<KeySegment> segments;
    segments.reserve(key_indices.size());
    const size_t half = tau / 2;
    for (size_t center : key_indices) {
        if (center >= num_frames) throw BoundsError("derive_segments: key index out of range");
        size_t lo = center > half ? center - half : 0;
        if (lo + tau > num_frames - 1) lo = num_frames - 1 - tau;  // shift inward, keep length
        segments.push_back({center, lo, lo + tau, tau});
    }
    return segments;
}

const char* to_string(SelectionStrategy s) {
    switch (s) {
        case SelectionStrategy::Medoid: return "medoid";
        case SelectionStrategy::Random: return "random";
        case SelectionStrategy::Chc: return "chc";
        case SelectionStrategy::Ghd: return "ghd";
        case SelectionStrategy::Consecutive: return "consecutive";
        case SelectionStrategy::Thumbnail: return "thumbnail";
        case SelectionStrategy::Uniform: return "uniform";
    }
    return "?";
}

SelectionStrategy selection_strategy_from_string(std::string_view name) {
    if (name == "medoid") return SelectionStrategy::Medoid;
    if (name == "random") return SelectionStrategy::Random;
    if (name == "chc") return SelectionStrategy::Chc;
    if (name == "ghd") return SelectionStrategy::Ghd;
    if (name == "consecutive") return SelectionStrategy::Consecutive;
    if (name == "thumbnail") return SelectionStrategy::Thumbnail;
    if (name == "uniform") return SelectionStrategy::Uniform;
    throw ConfigError("unknown selection strategy \"" + std::string(name) + "\"");
}

namespace {

std::vector<size_t> sorted_unique(std::vector<size_t> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::vector<size_t> select_random(size_t n, size_t r, uint64_t seed) {
    Rng rng(derive_seed(seed, "baseline-random"));
    return sorted_unique(rng.sample_without_replacement(n, r));
}

std::vector<size_t> select_chc(const FrameFeatureSequence& seq, size_t r, uint64_t seed) {
    FeatureSet globals(seq.global_dim);
    globals.data = seq.global_features;
    const Codebook cb = kmeans_pp(globals, r, derive_seed(seed, "baseline-chc"));

    // per cluster, the member frame nearest the centroid
    const size_t n = seq.num_frames;
    std::vector<size_t> assigned(n);
    for (size_t i = 0; i < n; ++i) assigned[i] = nearest_centroid(cb, seq.global_frame(i));

    std::vector<size_t> picks;
    for (size_t j = 0; j < cb.k; ++j) {
        double best = std::numeric_limits<double>::infinity();
        size_t best_frame = n;
        for (size_t i = 0; i < n; ++i) {
            if (assigned[i] != j) continue;
            const double d = squared_distance(seq.global_frame(i), cb.centroid(j));
            if (d < best) {
                best = d;
                best_frame = i;
            }
        }
        if (best_frame < n) picks.push_back(best_frame);
    }
    return sorted_unique(std::move(picks));
}

std::vector<size_t> select_ghd(const FrameFeatureSequence& seq, int level) {
    const size_t n = seq.num_frames;
    if (n == 1) return {0};
    const size_t hist_dims = std::min<size_t>(64, seq.global_dim);

    // adjacent L1 differences over the surrogate histogram; diffs[i] belongs
    // to frame i (the transition into it)
    std::vector<double> diffs(n, 0.0);
    for (size_t i = 1; i < n; ++i) {
        double acc = 0.0;
        const auto prev = seq.global_frame(i - 1);
        const auto cur = seq.global_frame(i);
        for (size_t d = 0; d < hist_dims; ++d)
            acc += std::abs(static_cast<double>(cur[d]) - static_cast<double>(prev[d]));
        diffs[i] = acc;
    }

    double mean = 0.0;
    for (size_t i = 1; i < n; ++i) mean += diffs[i];
    mean /= static_cast<double>(n - 1);
    double var = 0.0;
    for (size_t i = 1; i < n; ++i) var += (diffs[i] - mean) * (diffs[i] - mean);
    var /= static_cast<double>(n - 1);
    const double threshold = mean + static_cast<double>(level) * std::sqrt(var);

    std::vector<size_t> keep;
    keep.push_back(0);  // no transition into the first frame
    for (size_t i = 1; i < n; ++i)
        if (diffs[i] <= threshold) keep.push_back(i);
    return keep;
}

std::vector<size_t> select_consecutive(size_t n, double fraction) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw ConfigError("consecutive: fraction must be in (0, 1]");
    size_t count = static_cast<size_t>(std::ceil(fraction * static_cast<double>(n)));
    count = std::clamp<size_t>(count, 1, n);
    std::vector<size_t> out(count);
    for (size_t i = 0; i < count; ++i) out[i] = i;
    return out;
}

size_t block_medoid(const FrameFeatureSequence& seq, size_t lo, size_t hi) {
    size_t best = lo;
    double best_cost = std::numeric_limits<double>::infinity();
    for (size_t i = lo; i < hi; ++i) {
        double cost = 0.0;
        for (size_t j = lo; j < hi; ++j)
            cost += squared_distance(seq.global_frame(i), seq.global_frame(j));
        if (cost < best_cost) {
            best_cost = cost;
            best = i;
        }
    }
    return best;
}

std::vector<size_t> select_thumbnail(const FrameFeatureSequence& seq, double period_s) {
    if (!(period_s > 0.0)) throw ConfigError("thumbnail: period must be positive");
    const size_t n = seq.num_frames;
    const size_t block =
        std::max<size_t>(1, static_cast<size_t>(std::ceil(period_s * static_cast<double>(seq.fps))));
    std::vector<size_t> picks;
    for (size_t lo = 0; lo < n; lo += block)
        picks.push_back(block_medoid(seq, lo, std::min(lo + block, n)));
    return sorted_unique(std::move(picks));
}

std::vector<size_t> select_uniform(size_t n, size_t r) {
    if (r == 1) return {0};
    std::vector<size_t> out(r);
    for (size_t i = 0; i < r; ++i) {
        const double pos =
            static_cast<double>(i) * static_cast<double>(n - 1) / static_cast<double>(r - 1);
        out[i] = static_cast<size_t>(std::llround(pos));
    }
    return sorted_unique(std::move(out));
}

}  // namespace

std::vector<size_t> baseline_select(const FrameFeatureSequence& seq, SelectionStrategy strategy,
                                    const BaselineParams& params, uint64_t seed) {
    seq.validate();
    const size_t n = seq.num_frames;
    const auto check_r = [&](size_t r) {
        if (r == 0) throw ConfigError("frame count must be at least 1");
        if (r > n)
            throw InfeasibleError("requested " + std::to_string(r) + " frames from " +
                                  std::to_string(n));
    };

    switch (strategy) {
        case SelectionStrategy::Random:
            check_r(params.frames);
            return select_random(n, params.frames, seed);
        case SelectionStrategy::Chc:
            check_r(params.frames);
            return select_chc(seq, params.frames, seed);
        case SelectionStrategy::Ghd:
            if (params.ghd_level < -1 || params.ghd_level > 1)
                throw ConfigError("ghd: level must be -1, 0 or +1");
            return select_ghd(seq, params.ghd_level);
        case SelectionStrategy::Consecutive:
            return select_consecutive(n, params.fraction);
        case SelectionStrategy::Thumbnail:
            return select_thumbnail(seq, params.period_s);
        case SelectionStrategy::Uniform:
            check_r(params.frames);
            return select_uniform(n, params.frames);
        case SelectionStrategy::Medoid:
            throw ConfigError("medoid strategy is handled by select_medoids");
    }
    throw ConfigError("unknown selection strategy");
}

SelectionResult run_selection(const FrameFeatureSequence& seq, const SelectionSpec& spec,
                              uint64_t seed, SelectionTrace* trace) {
    if (spec.strategy == SelectionStrategy::Medoid) {
        SelectionConfig cfg;
        cfg.frames = spec.frames;
        cfg.tau = spec.tau;
        cfg.subset_size = spec.subset_size;
        cfg.repeats = spec.repeats;
        cfg.seed = seed;
        return select_medoids(seq, cfg, trace);
    }

    BaselineParams params;
    params.frames = spec.frames;
    params.ghd_level = spec.ghd_level;
    params.fraction = spec.fraction;
    params.period_s = spec.period_s;

    SelectionResult result;
    result.key_indices = baseline_select(seq, spec.strategy, params, seed);
    result.cluster_of.resize(seq.num_frames);
    for (size_t i = 0; i < seq.num_frames; ++i) {
        const size_t slot = nearest_key_slot(seq, i, result.key_indices);
        result.cluster_of[i] = slot;
        result.objective +=
            squared_distance(seq.global_frame(i), seq.global_frame(result.key_indices[slot]));
    }
    result.segments = derive_segments(result.key_indices, spec.tau, seq.num_frames);
    return result;
}

}  // namespace d3
