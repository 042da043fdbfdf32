// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vhbench/embeddings.hpp"
#include "vhbench/json.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace vhbench::miner {

/// An image pair whose contrast-encoder similarity is suspiciously high while
/// the reference encoder sees them as different. id_a < id_b.
struct CandidatePair {
    std::string id_a;
    std::string id_b;
    double sim_contrast = 0.0;
    double sim_reference = 0.0;

    friend bool operator==(const CandidatePair&, const CandidatePair&) = default;
};

struct MiningConfig {
    double tau_hi = 0.9;     // contrast similarity must be >= tau_hi
    double tau_lo = 0.55;    // reference similarity must be <= tau_lo
    std::size_t top_k = 200;
    std::size_t block_size = 512;
    std::size_t threads = 0;  // 0: std::thread::hardware_concurrency()

    void validate() const;
};

/// Dot product of two unit vectors accumulated sequentially in double and
/// clamped to [-1, 1]. Throws dimension_mismatch on unequal lengths and
/// invalid_argument when either input is not unit-norm within 1e-4.
double cosine(std::span<const float> u, std::span<const float> v);

/// Threshold predicates shared by the kernel and its documentation. Both
/// bounds are inclusive and are evaluated at the float32 resolution of the
/// stored embeddings: the similarity and the threshold are each rounded to
/// float before comparing.
bool passes_high(double similarity, double tau_hi);
bool passes_low(double similarity, double tau_lo);

/// Every unordered pair {a, b}, a != b, with contrast similarity >= tau_hi and
/// reference similarity <= tau_lo, each once with id_a < id_b, sorted by
/// (id_a, id_b). Output does not depend on block_size or thread count.
/// Throws id_set_mismatch when the two sets cover different ids.
std::vector<CandidatePair> mine_candidates(const EmbeddingSet& contrast, const EmbeddingSet& reference,
                                           const MiningConfig& cfg);

/// The k pairs with the largest sim_contrast, descending, ties by (id_a, id_b).
std::vector<CandidatePair> top_k(std::vector<CandidatePair> pairs, std::size_t k);

Json to_json(const CandidatePair& pair);
CandidatePair pair_from_json(const Json& j);

/// One JSON object per line, in the given order.
std::string serialize_pairs(const std::vector<CandidatePair>& pairs);

}  // namespace vhbench::miner
