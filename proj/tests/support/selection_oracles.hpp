#pragma once

// Independent brute-force oracles for key selection. Deliberately naive and
// free of library helpers so they stay an independent check.

#include <cmath>
#include <limits>
#include <vector>

#include "d3/feature_model.hpp"

namespace d3::test {

inline double oracle_sqdist(const d3::FrameFeatureSequence& seq, size_t a, size_t b) {
    double acc = 0.0;
    for (size_t d = 0; d < seq.global_dim; ++d) {
        const double diff = static_cast<double>(seq.global_frame(a)[d]) -
                            static_cast<double>(seq.global_frame(b)[d]);
        acc += diff * diff;
    }
    return acc;
}

// Objective of a key set over the given frames: each frame contributes its
// squared distance to the nearest key.
inline double oracle_objective(const d3::FrameFeatureSequence& seq,
                               const std::vector<size_t>& frames,
                               const std::vector<size_t>& keys) {
    double total = 0.0;
    for (size_t f : frames) {
        double best = std::numeric_limits<double>::infinity();
        for (size_t k : keys) best = std::min(best, oracle_sqdist(seq, f, k));
        total += best;
    }
    return total;
}

// Minimum objective over every C(N, r) key set (exhaustive enumeration).
inline double oracle_exhaustive_min(const d3::FrameFeatureSequence& seq, size_t r) {
    const size_t n = seq.num_frames;
    std::vector<size_t> all(n);
    for (size_t i = 0; i < n; ++i) all[i] = i;

    std::vector<size_t> combo(r);
    double best = std::numeric_limits<double>::infinity();
    // odometer-style combination enumeration
    for (size_t i = 0; i < r; ++i) combo[i] = i;
    while (true) {
        best = std::min(best, oracle_objective(seq, all, combo));
        size_t i = r;
        while (i-- > 0) {
            if (combo[i] != i + n - r) {
                ++combo[i];
                for (size_t j = i + 1; j < r; ++j) combo[j] = combo[j - 1] + 1;
                break;
            }
            if (i == 0) return best;
        }
    }
}

// True iff no single swap of a key with a non-key member of its own cluster
// lowers the objective over `frames` (the swap neighborhood of the search).
inline bool oracle_one_swap_optimal(const d3::FrameFeatureSequence& seq,
                                    const std::vector<size_t>& frames,
                                    const std::vector<size_t>& keys) {
    const double base = oracle_objective(seq, frames, keys);
    for (size_t slot = 0; slot < keys.size(); ++slot) {
        for (size_t f : frames) {
            bool is_key = false;
            for (size_t k : keys)
                if (k == f) is_key = true;
            if (is_key) continue;

            // cluster membership: nearest key, ties to the lowest key index
            size_t owner = keys[0];
            double owner_dist = std::numeric_limits<double>::infinity();
            for (size_t k : keys) {
                const double d = oracle_sqdist(seq, f, k);
                if (d < owner_dist || (d == owner_dist && k < owner)) {
                    owner_dist = d;
                    owner = k;
                }
            }
            if (owner != keys[slot]) continue;

            std::vector<size_t> swapped = keys;
            swapped[slot] = f;
            if (oracle_objective(seq, frames, swapped) < base - 1e-12) return false;
        }
    }
    return true;
}

}  // namespace d3::test
