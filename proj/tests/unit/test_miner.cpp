// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vhbench/embeddings.hpp"
#include "vhbench/error.hpp"
#include "vhbench/fsutil.hpp"
#include "vhbench/miner.hpp"

#include "../support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace vhbench;
using miner::CandidatePair;
using miner::MiningConfig;

namespace {

// Seeded clustered fixture, frozen as literals. Pairs (0,1) and (1,2) pass both
// thresholds; (0,2) and (3,4) pass the contrast bound only.
const std::vector<float> kContrast6 = {
    -0.05019880f, 0.57811725f, 0.18804780f, 0.55208260f, 0.01143787f, -0.37583810f, 0.30042106f, -0.30243254f,
    -0.13566445f, 0.55973530f, 0.11575685f, 0.67041254f, 0.08042224f, -0.15460414f, 0.37163979f, -0.19223078f,
    -0.24360554f, 0.55465043f, 0.16616799f, 0.55210292f, 0.05332492f, -0.32074645f, 0.44001403f, 0.03543479f,
    0.03173012f,  0.51986623f, 0.45003000f, 0.23246656f, -0.25052026f, 0.13248822f, -0.28883711f, 0.55535954f,
    0.03634258f,  0.44201800f, 0.24808256f, 0.36664346f, -0.35627633f, -0.12346909f, -0.31210205f, 0.60641718f,
    -0.08839231f, -0.19297765f, -0.19386436f, 0.50847620f, -0.47672421f, -0.47387040f, 0.45157298f, 0.05547721f,
};
const std::vector<float> kReference6 = {
    -0.08460592f, 0.21500033f,  -0.20873503f, -0.06841027f, -0.55491328f, -0.52110463f, 0.43631822f,  0.35848856f,
    -0.09700742f, -0.33695239f, 0.58432770f,  0.41272089f,  0.04960655f,  0.00379945f,  -0.59897017f, -0.06351963f,
    -0.11222862f, -0.19372365f, -0.54493392f, 0.45617726f,  -0.51789010f, -0.14825618f, 0.37985754f,  0.10170277f,
    0.41328907f,  0.52024388f,  0.64392352f,  0.08120647f,  -0.09690181f, -0.06383441f, -0.15502235f, -0.31592682f,
    0.57335329f,  0.17959045f,  0.47065780f,  0.53098547f,  -0.13087447f, -0.04189702f, -0.34144977f, -0.00880572f,
    -0.19954440f, 0.69610965f,  0.05073562f,  -0.26233879f, 0.01089952f,  0.28862417f,  0.12106192f,  -0.55329823f,
};

std::vector<std::string> ids6() { return {"img0", "img1", "img2", "img3", "img4", "img5"}; }

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("vhbench_miner_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("cosine analytic cases") {
    const float v[2] = {0.6f, 0.8f};
    CHECK(miner::cosine(v, v) == doctest::Approx(1.0).epsilon(1e-7));
    const float e1[2] = {1.0f, 0.0f}, e2[2] = {0.0f, 1.0f};
    CHECK(miner::cosine(e1, e2) == 0.0);
    const float diag[2] = {float(std::sqrt(2.0) / 2), float(std::sqrt(2.0) / 2)};
    CHECK(miner::cosine(e1, diag) == doctest::Approx(0.70711).epsilon(1e-5));
    CHECK(miner::cosine(e1, diag) == miner::cosine(diag, e1));
    const float three[3] = {1, 0, 0};
    CHECK_THROWS_AS(miner::cosine(e1, three), Error);
    // identical unit vector whose rounding pushes the sum above one still clamps
    const float near[3] = {0.57735027f, 0.57735027f, 0.57735027f};
    CHECK(miner::cosine(near, near) <= 1.0);
}

TEST_CASE("embedding set normalizes rows and validates ids") {
    const std::vector<float> vals = {3, 4, 0, 5, 1, 0, 0, 2};
    auto set = EmbeddingSet::from_rows("enc", 2, vals, {"a", "b", "c", "d"});
    CHECK(set.row(0)[0] == doctest::Approx(0.6));
    CHECK(set.row(3)[1] == 1.0f);
    CHECK(set.row(1)[1] == 1.0f);
    CHECK(set.stride() == 16);

    try {
        EmbeddingSet::from_rows("enc", 4, std::vector<float>{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0}, {"x", "y", "z"});
        FAIL("zero-norm row must be rejected");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::zero_norm);
        CHECK(e.detail() == "z");
    }
    CHECK_THROWS_AS(EmbeddingSet::from_rows("enc", 1, std::vector<float>{1, 1}, {"x", "x"}), Error);
}

TEST_CASE("load_embeddings manifest and JSONL") {
    auto dir = scratch("load");
    auto set = EmbeddingSet::from_rows("clip", 4, std::vector<float>{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0}, {"a", "b", "c"});
    save_embeddings(set, dir / "clip.json");
    auto loaded = load_embeddings(dir / "clip.json");
    CHECK(loaded.count() == 3);
    CHECK(loaded.dim() == 4);
    CHECK(loaded.encoder_name() == "clip");
    CHECK(loaded.ids() == set.ids());

    // manifest count disagreeing with the matrix rows
    auto m = read_json_file(dir / "clip.json");
    m["count"] = 2;
    write_json_file(dir / "short.json", m);
    try {
        load_embeddings(dir / "short.json");
        FAIL("expected dimension mismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::dimension_mismatch);
    }

    Json bad;
    bad["encoder_name"] = "x";
    write_json_file(dir / "bad.json", bad);
    try {
        load_embeddings(dir / "bad.json");
        FAIL("expected malformed header");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::parse_error);
    }

    atomic_write(dir / "small.jsonl",
                 "{\"id\": \"p\", \"vector\": [1, 0]}\n{\"id\": \"q\", \"vector\": [0, 2]}\n");
    auto small = load_embeddings(dir / "small.jsonl");
    CHECK(small.count() == 2);
    CHECK(small.row(1)[1] == 1.0f);

    atomic_write(dir / "zero.jsonl", "{\"id\": \"p\", \"vector\": [1, 0]}\n{\"id\": \"zz\", \"vector\": [0, 0]}\n");
    try {
        load_embeddings(dir / "zero.jsonl");
        FAIL("expected zero-norm");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::zero_norm);
        CHECK(e.detail() == "zz");
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("mine_candidates trivial cases") {
    auto one = EmbeddingSet::from_rows("c", 2, std::vector<float>{1, 0}, {"only"});
    CHECK(miner::mine_candidates(one, one, {}).empty());

    std::mt19937_64 rng(11);
    auto vals = oracle::clustered_vectors(rng, 4, 6, 2, 1.0);
    auto set = EmbeddingSet::from_rows("c", 6, vals, {"d", "c", "b", "a"});
    MiningConfig vacuous;
    vacuous.tau_hi = -1.0;
    vacuous.tau_lo = 1.0;
    auto all = miner::mine_candidates(set, set, vacuous);
    REQUIRE(all.size() == 6);
    for (const auto& p : all) CHECK(p.id_a < p.id_b);
    CHECK(all.front().id_a == "a");
    CHECK(all.front().id_b == "b");
}

TEST_CASE("seeded 6-vector fixture matches frozen brute-force result") {
    auto c = EmbeddingSet::from_rows("clip", 8, kContrast6, ids6());
    auto r = EmbeddingSet::from_rows("dino", 8, kReference6, ids6());
    MiningConfig cfg;  // 0.9 / 0.55
    auto got = miner::mine_candidates(c, r, cfg);
    REQUIRE(got.size() == 2);
    CHECK(got[0].id_a == "img0");
    CHECK(got[0].id_b == "img1");
    CHECK(got[0].sim_contrast == doctest::Approx(0.95110499).epsilon(1e-6));
    CHECK(got[0].sim_reference == doctest::Approx(-0.52806139).epsilon(1e-6));
    CHECK(got[1].id_a == "img1");
    CHECK(got[1].id_b == "img2");
    CHECK(got[1].sim_contrast == doctest::Approx(0.94347014).epsilon(1e-6));
    CHECK(got[1].sim_reference == doctest::Approx(-0.31422093).epsilon(1e-6));
    CHECK(got == oracle::brute_force_mine(c, r, 0.9, 0.55));
}

TEST_CASE("id set mismatch between encoders") {
    auto c = EmbeddingSet::from_rows("c", 2, std::vector<float>{1, 0, 0, 1}, {"a", "b"});
    auto r = EmbeddingSet::from_rows("r", 2, std::vector<float>{1, 0, 0, 1}, {"a", "x"});
    CHECK_THROWS_AS(miner::mine_candidates(c, r, {}), Error);
}

TEST_CASE("mining is invariant under row permutation and monotone in thresholds") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 30 + trial * 3, dim = 16;
        auto cv = oracle::clustered_vectors(rng, n, dim, 4, 0.5);
        auto rv = oracle::clustered_vectors(rng, n, dim, 6, 1.2);
        auto ids = oracle::make_ids(n);
        auto c = EmbeddingSet::from_rows("c", dim, cv, ids);
        auto r = EmbeddingSet::from_rows("r", dim, rv, ids);

        // reverse the reference rows
        std::vector<float> rv_rev;
        std::vector<std::string> ids_rev(ids.rbegin(), ids.rend());
        for (std::size_t i = n; i-- > 0;) rv_rev.insert(rv_rev.end(), rv.begin() + i * dim, rv.begin() + (i + 1) * dim);
        auto r_rev = EmbeddingSet::from_rows("r", dim, rv_rev, ids_rev);

        MiningConfig cfg;
        cfg.tau_hi = 0.8;
        cfg.tau_lo = 0.6;
        cfg.block_size = 7;
        auto base = miner::mine_candidates(c, r, cfg);
        CHECK(base == miner::mine_candidates(c, r_rev, cfg));

        MiningConfig tighter = cfg;
        tighter.tau_hi = 0.85;
        tighter.tau_lo = 0.5;
        auto fewer = miner::mine_candidates(c, r, tighter);
        for (const auto& p : fewer) CHECK(std::find(base.begin(), base.end(), p) != base.end());
    }
}

TEST_CASE("inclusive thresholds at exactly 0.9 and 0.55") {
    // contrast: e1 vs (0.9, sqrt(0.19)) -> 0.9 exactly at float resolution
    const float s19 = float(std::sqrt(0.19));
    const std::vector<float> cv = {1.0f, 0.0f, 0.9f, s19};
    const float s6975 = float(std::sqrt(1.0 - 0.55 * 0.55));
    const std::vector<float> rv = {1.0f, 0.0f, 0.55f, s6975};
    auto c = EmbeddingSet::from_rows("c", 2, cv, {"a", "b"});
    auto r = EmbeddingSet::from_rows("r", 2, rv, {"a", "b"});
    auto got = miner::mine_candidates(c, r, {});
    REQUIRE(got.size() == 1);
    CHECK(float(got[0].sim_contrast) == 0.9f);
    CHECK(float(got[0].sim_reference) == 0.55f);
}

TEST_CASE("top_k ordering and ties") {
    std::vector<CandidatePair> pairs;
    const double sims[10] = {0.91, 0.95, 0.93, 0.95, 0.92, 0.99, 0.90, 0.94, 0.96, 0.97};
    const char* as[10] = {"a", "k", "c", "d", "e", "f", "g", "h", "i", "j"};
    for (int i = 0; i < 10; ++i) pairs.push_back({as[i], "z", sims[i], 0.1});
    CHECK(miner::top_k(pairs, 0).empty());

    // two pairs tie at 0.95: ("d","z") and ("k","z")
    std::vector<CandidatePair> tied;
    for (const auto& p : pairs)
        if (p.sim_contrast == 0.95) tied.push_back(p);
    auto best = miner::top_k(tied, 1);
    REQUIRE(best.size() == 1);
    CHECK(best[0].id_a == "d");

    auto top3 = miner::top_k(pairs, 3);
    REQUIRE(top3.size() == 3);
    CHECK(top3[0].sim_contrast == 0.99);
    CHECK(top3[1].sim_contrast == 0.97);
    CHECK(top3[2].sim_contrast == 0.96);

    auto all = miner::top_k(pairs, 200);
    CHECK(all.size() == 10);
    CHECK(all[3].id_a == "d");
    CHECK(all[4].id_a == "k");
}
