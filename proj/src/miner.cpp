// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vhbench/miner.hpp"

#include "vhbench/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>

namespace vhbench::miner {

namespace {

using RowPair = std::pair<std::uint32_t, std::uint32_t>;

// Sequential double accumulation. Mined similarities always come from here, so
// results are independent of how the screening kernel tiles or vectorizes.
double exact_dot(const float* a, const float* b, std::size_t dim) {
    double s = 0.0;
    for (std::size_t k = 0; k < dim; ++k) s += double(a[k]) * double(b[k]);
    return std::clamp(s, -1.0, 1.0);
}

typedef float v8f __attribute__((vector_size(32)));

inline v8f load8(const float* p) {
    v8f v;
    std::memcpy(&v, p, sizeof(v));
    return v;
}

inline float hsum(v8f v) {
    return ((v[0] + v[4]) + (v[1] + v[5])) + ((v[2] + v[6]) + (v[3] + v[7]));
}

// Approximate float32 screening of one tile: rows [a0, a1) against rows
// [b0, b1). Emits (i, j) with i < j whose approximate similarity reaches
// `cutoff`. The 4x4 register block is written out in full so the whole body
// is compiled for each target clone.
__attribute__((target_clones("arch=haswell", "default")))
void screen_tile(const float* data, std::size_t stride, std::size_t a0, std::size_t a1, std::size_t b0,
                 std::size_t b1, float cutoff, bool diagonal, std::vector<RowPair>& out) {
    for (std::size_t i = a0; i < a1; i += 4) {
        const std::size_t ni = std::min<std::size_t>(4, a1 - i);
        const float* ar[4];
        for (std::size_t r = 0; r < 4; ++r) ar[r] = data + (i + std::min(r, ni - 1)) * stride;
        const std::size_t jstart = diagonal ? i : b0;
        for (std::size_t j = jstart; j < b1; j += 4) {
            const std::size_t nj = std::min<std::size_t>(4, b1 - j);
            const float* br[4];
            for (std::size_t c = 0; c < 4; ++c) br[c] = data + (j + std::min(c, nj - 1)) * stride;
            v8f acc00 = {}, acc01 = {}, acc02 = {}, acc03 = {};
            v8f acc10 = {}, acc11 = {}, acc12 = {}, acc13 = {};
            v8f acc20 = {}, acc21 = {}, acc22 = {}, acc23 = {};
            v8f acc30 = {}, acc31 = {}, acc32 = {}, acc33 = {};
            for (std::size_t k = 0; k < stride; k += 8) {
                const v8f b_0 = load8(br[0] + k), b_1 = load8(br[1] + k);
                const v8f b_2 = load8(br[2] + k), b_3 = load8(br[3] + k);
                v8f a = load8(ar[0] + k);
                acc00 += a * b_0; acc01 += a * b_1; acc02 += a * b_2; acc03 += a * b_3;
                a = load8(ar[1] + k);
                acc10 += a * b_0; acc11 += a * b_1; acc12 += a * b_2; acc13 += a * b_3;
                a = load8(ar[2] + k);
                acc20 += a * b_0; acc21 += a * b_1; acc22 += a * b_2; acc23 += a * b_3;
                a = load8(ar[3] + k);
                acc30 += a * b_0; acc31 += a * b_1; acc32 += a * b_2; acc33 += a * b_3;
            }
            const float s[4][4] = {
                {hsum(acc00), hsum(acc01), hsum(acc02), hsum(acc03)},
                {hsum(acc10), hsum(acc11), hsum(acc12), hsum(acc13)},
                {hsum(acc20), hsum(acc21), hsum(acc22), hsum(acc23)},
                {hsum(acc30), hsum(acc31), hsum(acc32), hsum(acc33)},
            };
            for (std::size_t r = 0; r < ni; ++r) {
                for (std::size_t c = 0; c < nj; ++c) {
                    const std::size_t row = i + r, col = j + c;
                    if (col <= row) continue;
                    if (s[r][c] >= cutoff) out.emplace_back(std::uint32_t(row), std::uint32_t(col));
                }
            }
        }
    }
}

// Bound on |float32 screening value - exact value| for unit vectors, with a
// generous safety factor over the n*eps accumulation bound.
float screening_margin(std::size_t stride) { return 1e-4f + float(stride) * 2.5e-7f; }

}  // namespace

void MiningConfig::validate() const {
    if (!(tau_hi >= -1.0 && tau_hi <= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "tau_hi must lie in [-1, 1]");
    }
    if (!(tau_lo >= -1.0 && tau_lo <= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "tau_lo must lie in [-1, 1]");
    }
    if (block_size == 0) throw Error(ErrorCode::invalid_argument, "block_size must be positive");
}

double cosine(std::span<const float> u, std::span<const float> v) {
    if (u.size() != v.size()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "cosine of vectors with dims " + std::to_string(u.size()) + " and " + std::to_string(v.size()));
    }
    auto norm_ok = [](std::span<const float> x) {
        double s = 0.0;
        for (float f : x) s += double(f) * double(f);
        return std::abs(std::sqrt(s) - 1.0) <= 1e-4;
    };
    if (!norm_ok(u) || !norm_ok(v)) {
        throw Error(ErrorCode::invalid_argument, "cosine expects unit vectors");
    }
    return exact_dot(u.data(), v.data(), u.size());
}

bool passes_high(double similarity, double tau_hi) {
    return static_cast<float>(similarity) >= static_cast<float>(tau_hi);
}

bool passes_low(double similarity, double tau_lo) {
    return static_cast<float>(similarity) <= static_cast<float>(tau_lo);
}

std::vector<CandidatePair> mine_candidates(const EmbeddingSet& contrast, const EmbeddingSet& reference,
                                           const MiningConfig& cfg) {
    cfg.validate();
    const std::size_t n = contrast.count();
    if (reference.count() != n) {
        throw Error(ErrorCode::id_set_mismatch, "contrast set has " + std::to_string(n) + " ids, reference has " +
                                                    std::to_string(reference.count()));
    }
    std::vector<std::size_t> ref_row(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = reference.index_of(contrast.ids()[i]);
        if (r < 0) {
            throw Error(ErrorCode::id_set_mismatch, "id '" + contrast.ids()[i] + "' missing from reference set",
                        contrast.ids()[i]);
        }
        ref_row[i] = static_cast<std::size_t>(r);
    }
    if (n < 2) return {};

    const std::size_t block = cfg.block_size;
    const std::size_t nblocks = (n + block - 1) / block;
    std::vector<std::pair<std::size_t, std::size_t>> tiles;
    tiles.reserve(nblocks * (nblocks + 1) / 2);
    for (std::size_t bi = 0; bi < nblocks; ++bi) {
        for (std::size_t bj = bi; bj < nblocks; ++bj) tiles.emplace_back(bi, bj);
    }

    std::size_t threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
    threads = std::min(threads, tiles.size());

    const float cutoff = static_cast<float>(cfg.tau_hi) - screening_margin(contrast.stride());
    const float* data = contrast.padded_data();
    const std::size_t stride = contrast.stride();
    const std::size_t dim = contrast.dim();

    std::atomic<std::size_t> next{0};
    std::mutex merge_mu;
    std::vector<CandidatePair> merged;
    std::exception_ptr failure;

    auto worker = [&] {
        std::vector<RowPair> screened;
        std::vector<CandidatePair> local;
        try {
            for (std::size_t t = next++; t < tiles.size(); t = next++) {
                const auto [bi, bj] = tiles[t];
                screened.clear();
                screen_tile(data, stride, bi * block, std::min(n, (bi + 1) * block), bj * block,
                            std::min(n, (bj + 1) * block), cutoff, bi == bj, screened);
                for (const auto& [i, j] : screened) {
                    const double sc = exact_dot(data + i * stride, data + j * stride, dim);
                    if (!passes_high(sc, cfg.tau_hi)) continue;
                    const double sr = exact_dot(reference.row(ref_row[i]).data(), reference.row(ref_row[j]).data(),
                                                reference.dim());
                    if (!passes_low(sr, cfg.tau_lo)) continue;
                    const auto& a = contrast.ids()[i];
                    const auto& b = contrast.ids()[j];
                    if (a < b) {
                        local.push_back({a, b, sc, sr});
                    } else {
                        local.push_back({b, a, sc, sr});
                    }
                }
            }
        } catch (...) {
            std::lock_guard lock(merge_mu);
            if (!failure) failure = std::current_exception();
            return;
        }
        std::lock_guard lock(merge_mu);
        merged.insert(merged.end(), std::make_move_iterator(local.begin()), std::make_move_iterator(local.end()));
    };

    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    std::sort(merged.begin(), merged.end(), [](const CandidatePair& x, const CandidatePair& y) {
        return std::tie(x.id_a, x.id_b) < std::tie(y.id_a, y.id_b);
    });
    return merged;
}

std::vector<CandidatePair> top_k(std::vector<CandidatePair> pairs, std::size_t k) {
    auto better = [](const CandidatePair& x, const CandidatePair& y) {
        if (x.sim_contrast != y.sim_contrast) return x.sim_contrast > y.sim_contrast;
        return std::tie(x.id_a, x.id_b) < std::tie(y.id_a, y.id_b);
    };
    k = std::min(k, pairs.size());
    std::partial_sort(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(k), pairs.end(), better);
    pairs.resize(k);
    return pairs;
}

Json to_json(const CandidatePair& p) {
    Json j;
    j["id_a"] = p.id_a;
    j["id_b"] = p.id_b;
    j["sim_contrast"] = p.sim_contrast;
    j["sim_reference"] = p.sim_reference;
    return j;
}

CandidatePair pair_from_json(const Json& j) {
    CandidatePair p;
    p.id_a = require_string(j, "id_a");
    p.id_b = require_string(j, "id_b");
    p.sim_contrast = require(j, "sim_contrast").get<double>();
    p.sim_reference = require(j, "sim_reference").get<double>();
    return p;
}

std::string serialize_pairs(const std::vector<CandidatePair>& pairs) {
    std::string out;
    for (const auto& p : pairs) {
        out += to_json(p).dump();
        out += '\n';
    }
    return out;
}

}  // namespace vhbench::miner
