#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "d3/feature_model.hpp"

namespace d3 {

// Window of tau+1 frames around a key frame. lo/hi are inclusive; when the
// nominal window [center - tau/2, center + tau/2] overflows a sequence
// boundary the whole window is shifted inward, so hi - lo == tau always.
struct KeySegment {
    size_t center = 0;
    size_t lo = 0;
    size_t hi = 0;
    size_t tau = 0;
};

struct SelectionConfig {
    size_t frames = 15;      // R, number of key frames
    size_t tau = 6;          // even segment size; segments span tau+1 frames
    size_t subset_size = 0;  // search sample size; 0 = min(N, 40 + 2R)
    size_t repeats = 5;      // independent subset searches
    uint64_t seed = 0;
};

struct SelectionResult {
    std::vector<size_t> key_indices;  // R distinct frame indices, ascending
    std::vector<size_t> cluster_of;   // per frame: position into key_indices of its key
    double objective = 0.0;           // sum of squared Euclidean distances to owning keys
    std::vector<KeySegment> segments;
};

// Instrumentation: one record per accepted swap, with the subset objective
// immediately before and after.
struct SwapEvent {
    size_t repeat = 0;
    size_t key_slot = 0;
    size_t old_frame = 0;
    size_t new_frame = 0;
    double objective_before = 0.0;
    double objective_after = 0.0;
};

struct RepeatTrace {
    std::vector<size_t> subset;  // frame indices searched, ascending
    std::vector<size_t> keys;    // final key frame indices, ascending
    double subset_objective = 0.0;
    double full_objective = 0.0;
    std::vector<SwapEvent> swaps;
};

struct SelectionTrace {
    std::vector<RepeatTrace> repeats;
    size_t winner = 0;  // repeat index with the lowest full objective
};

// Medoid local search over per-frame global features. Each repeat draws a
// uniform frame subset, seeds R random distinct keys inside it and hill-climbs
// by (key, cluster-member) swaps accepted only on strict objective decrease.
// The candidate with the lowest objective over all N frames wins; final
// clusters, objective and segments are computed over the whole sequence.
SelectionResult select_medoids(const FrameFeatureSequence& seq, const SelectionConfig& cfg,
                               SelectionTrace* trace = nullptr);

// tau must be even and num_frames >= tau + 1.
std::vector<KeySegment> derive_segments(const std::vector<size_t>& key_indices, size_t tau,
                                        size_t num_frames);

enum class SelectionStrategy { Medoid, Random, Chc, Ghd, Consecutive, Thumbnail, Uniform };

const char* to_string(SelectionStrategy s);
SelectionStrategy selection_strategy_from_string(std::string_view name);

struct BaselineParams {
    size_t frames = 15;       // Random / Chc / Uniform
    int ghd_level = 0;        // threshold mu + level*sigma, level in {-1, 0, +1}
    double fraction = 0.125;  // Consecutive: keeps the first ceil(fraction * N) frames
    double period_s = 10.0;   // Thumbnail: one block medoid per period
};

// The fixed- and varying-frame-number baseline strategies. Returned indices
// are ascending and deduplicated.
std::vector<size_t> baseline_select(const FrameFeatureSequence& seq, SelectionStrategy strategy,
                                    const BaselineParams& params, uint64_t seed);

// Selection configuration covering every strategy; what batch runs carry.
struct SelectionSpec {
    SelectionStrategy strategy = SelectionStrategy::Medoid;
    size_t frames = 15;
    size_t tau = 6;
    size_t subset_size = 0;  // Medoid only; 0 = auto
    size_t repeats = 5;      // Medoid only
    int ghd_level = 0;
    double fraction = 0.125;
    double period_s = 10.0;
};

// Runs the configured strategy and returns a full SelectionResult (baseline
// strategies get clusters/objective/segments computed from their indices).
SelectionResult run_selection(const FrameFeatureSequence& seq, const SelectionSpec& spec,
                              uint64_t seed, SelectionTrace* trace = nullptr);

}  // namespace d3
