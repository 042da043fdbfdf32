// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vhbench/error.hpp"
#include "vhbench/store.hpp"

#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <thread>

using namespace vhbench;

namespace {

struct FakeClock {
    std::shared_ptr<std::atomic<std::int64_t>> t = std::make_shared<std::atomic<std::int64_t>>(1'000'000);
    ProjectStore::Clock fn() const {
        auto p = t;
        return [p] { return p->load(); };
    }
    void advance(std::int64_t ms) { *t += ms; }
};

Json qa_payload(Mode m, const std::string& hash = std::string(64, 'b')) {
    return {{"mode", to_string(m)}, {"image_hash", hash}, {"image_path", "images/" + hash + ".png"}, {"run_id", "r1"}};
}

QaSubmission pear(Polarity p) {
    return {"What fruit is on the table?", "a pear", "Is there a pear on the table?", p};
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::invalid_argument;
}

}  // namespace

TEST_CASE("claims are FIFO and exclusive until the lease lapses") {
    FakeClock clock;
    ProjectStore store("", clock.fn());
    auto t1 = store.enqueue(TaskKind::author_qa, qa_payload(Mode::color), "img1");
    auto t2 = store.enqueue(TaskKind::author_qa, qa_payload(Mode::color), "img2");
    CHECK(store.enqueue(TaskKind::author_qa, qa_payload(Mode::color), "img1") == t1);
    CHECK(t1 == "t000001");

    CHECK(store.claim_next("ann").id == t1);
    CHECK(store.claim_next("bob").id == t2);
    CHECK(code_of([&] { store.claim_next("cy"); }) == ErrorCode::none_available);
    CHECK(code_of([&] { store.claim(t1, "bob"); }) == ErrorCode::unauthorized);
    CHECK(code_of([&] { store.submit_qa(t1, "bob", pear(Polarity::yes)); }) == ErrorCode::unauthorized);

    clock.advance(ProjectStore::kDefaultLeaseMs + 1);
    auto again = store.claim_next("cy");
    CHECK(again.id == t1);
    CHECK(again.claimant == "cy");
    // ann's lease lapsed and cy now holds it.
    CHECK(code_of([&] { store.submit_qa(t1, "ann", pear(Polarity::yes)); }) == ErrorCode::unauthorized);
    clock.advance(ProjectStore::kDefaultLeaseMs + 1);
    CHECK(code_of([&] { store.submit_qa(t1, "cy", pear(Polarity::yes)); }) == ErrorCode::invalid_state);
}

TEST_CASE("concurrent claims never hand out one task twice") {
    ProjectStore store("");
    for (int i = 0; i < 40; ++i) store.enqueue(TaskKind::author_qa, qa_payload(Mode::shape), "k" + std::to_string(i));
    std::vector<std::vector<std::string>> got(8);
    std::vector<std::thread> threads;
    for (int w = 0; w < 8; ++w) {
        threads.emplace_back([&, w] {
            for (;;) {
                try {
                    got[w].push_back(store.claim_next("w" + std::to_string(w)).id);
                } catch (const Error&) {
                    return;
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    std::set<std::string> all;
    std::size_t n = 0;
    for (const auto& g : got) {
        n += g.size();
        all.insert(g.begin(), g.end());
    }
    CHECK(n == 40);
    CHECK(all.size() == 40);
}

TEST_CASE("submit_qa creates a linked pair and enforces polarity capacity") {
    ProjectStore store("");
    GenerationRun run;
    run.id = "r1";
    run.mode = Mode::color;
    run.target_count = 2;
    run.produced = {{std::string(64, 'b'), ImageStatus::pending_annotation, "p"}};
    store.put_run(run);

    std::vector<std::string> ids;
    for (int i = 0; i < 4; ++i) {
        ids.push_back(store.enqueue(TaskKind::author_qa, qa_payload(Mode::color), "k" + std::to_string(i)));
    }
    store.claim(ids[0], "ann");
    auto r = store.submit_qa(ids[0], "ann", pear(Polarity::yes));
    CHECK(r.oeq_id == "oeq-" + ids[0]);
    auto s = store.snapshot();
    REQUIRE(s->ynq_for(r.oeq_id));
    CHECK(s->ynq_for(r.oeq_id)->id == r.ynq_id);
    CHECK(s->run("r1")->produced[0].status == ImageStatus::annotated);
    CHECK(s->task(ids[0])->state == TaskState::done);

    // target 2 -> one of each polarity
    store.claim(ids[1], "ann");
    try {
        store.submit_qa(ids[1], "ann", pear(Polarity::yes));
        FAIL("expected balance violation");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::balance_violation);
        CHECK(e.detail() == "no");
        CHECK(std::string(e.what()).find("no") != std::string::npos);
    }
    CHECK(store.snapshot()->task(ids[1])->state == TaskState::claimed);
    store.submit_qa(ids[1], "ann", pear(Polarity::no));
    auto p = store.progress().at(Mode::color);
    CHECK(p.ynq == YesNoCount{1, 1});
    CHECK(p.oeq == 2);
    CHECK(p.capacity_per_polarity == 1);
    CHECK(p.open_tasks == 2);
    CHECK(store.progress().at(Mode::shape).target == ProjectStore::kDefaultModeTarget);

    store.claim(ids[2], "ann");
    CHECK(code_of([&] { store.submit_qa(ids[2], "ann", {"", "a", "b?", Polarity::no}); }) ==
          ErrorCode::invalid_argument);
    CHECK(code_of([&] { store.submit_qa(ids[0], "ann", pear(Polarity::no)); }) == ErrorCode::invalid_state);

    store.finalize_mode(Mode::color);
    CHECK(code_of([&] { store.submit_qa(ids[2], "ann", pear(Polarity::no)); }) == ErrorCode::invalid_state);
}

TEST_CASE("discard is idempotent and requires a claim") {
    ProjectStore store("");
    auto id = store.enqueue(TaskKind::author_qa, qa_payload(Mode::ocr), "k");
    CHECK(code_of([&] { store.discard(id, "ann", "blurry"); }) == ErrorCode::invalid_state);
    store.claim(id, "ann");
    store.discard(id, "ann", "blurry");
    store.discard(id, "ann", "blurry");
    CHECK(store.snapshot()->task(id)->state == TaskState::discarded);
    CHECK(store.snapshot()->task(id)->result["reason"] == "blurry");
    CHECK(code_of([&] { store.claim(id, "bob"); }) == ErrorCode::invalid_state);
}

TEST_CASE("verdict tasks update outcomes, human verdicts and labels") {
    ProjectStore store("");
    InitialInstanceOutcome o;
    o.instance.id = "i1";
    o.instance.mode = Mode::existence;
    o.instance.question = "What is on the plate?";
    o.instance.reference_answer = "nothing";
    o.testing_model_response = "a pear";
    store.upsert_outcomes({o});

    auto v = store.enqueue(TaskKind::verify_initial, {{"instance_id", "i1"}}, "v-i1");
    store.claim(v, "ann");
    CHECK(code_of([&] { store.submit_verdict(v, "ann", Verdict::incorrect, ""); }) == ErrorCode::missing_slot);
    CHECK(code_of([&] { store.submit_verdict(v, "ann", Verdict::pending_adjudication, ""); }) ==
          ErrorCode::invalid_argument);
    store.submit_verdict(v, "ann", Verdict::incorrect, "sees a pear that is not there");
    auto out = store.snapshot()->outcomes.at(0);
    CHECK(out.verdict == OutcomeVerdict::successful);
    CHECK(out.detected_or_hypothetical_hallucination == "sees a pear that is not there");

    auto a = store.enqueue(TaskKind::adjudicate_oeq,
                           {{"instance_id", "i1"}, {"mode", "existence"}, {"endpoint", "m"}, {"response", "pear"}},
                           "a-i1-m");
    store.claim(a, "bob");
    store.submit_verdict(a, "bob", Verdict::correct, "");
    auto hv = store.snapshot()->human_verdicts.at(0);
    CHECK(hv.verdict == Verdict::correct);
    CHECK(hv.verdict_source == VerdictSource::human);
    CHECK(hv.adjudicator_ids == std::vector<std::string>{"bob"});

    auto l1 = store.enqueue(TaskKind::agreement_label, {{"item", "x"}}, "x-1");
    auto l2 = store.enqueue(TaskKind::agreement_label, {{"item", "x"}}, "x-2");
    CHECK(store.claim_next("ann", {TaskKind::agreement_label}).id == l1);
    // ann already holds item x, so the second copy goes to someone else.
    CHECK(code_of([&] { store.claim_next("ann", {TaskKind::agreement_label}); }) == ErrorCode::none_available);
    store.submit_verdict(l1, "ann", Verdict::incorrect, "");
    CHECK(code_of([&] { store.claim_next("ann", {TaskKind::agreement_label}); }) == ErrorCode::none_available);
    CHECK(store.claim_next("bob", {TaskKind::agreement_label}).id == l2);
    CHECK(store.snapshot()->labels.at(0).category == "incorrect");
}

TEST_CASE("store persists and reloads") {
    auto root = std::filesystem::temp_directory_path() / "vhbench_store_persist";
    std::filesystem::remove_all(root);
    {
        ProjectStore store(root);
        auto id = store.enqueue(TaskKind::author_qa, qa_payload(Mode::size), "k");
        store.claim(id, "ann");
        store.submit_qa(id, "ann", pear(Polarity::no));
        TextDescription d;
        d.id = "d1";
        d.mode = Mode::size;
        d.body = "Large things look small.";
        d.kind = DescriptionKind::integrated;
        store.add_description(d);
    }
    ProjectStore reopened(root);
    auto s = reopened.snapshot();
    CHECK(s->instances.size() == 2);
    CHECK(s->description("d1"));
    CHECK(s->next_seq == 2);
    CHECK(to_json(*s).dump() == to_json(store_state_from_json(to_json(*s))).dump());
    CHECK(reopened.enqueue(TaskKind::author_qa, qa_payload(Mode::size), "k2") == "t000002");
    std::filesystem::remove_all(root);
}

TEST_CASE("convert_to_ynq is one-shot per instance") {
    ProjectStore store("");
    VHInstance i;
    i.id = "o1";
    i.mode = Mode::counting;
    i.question = "How many?";
    i.reference_answer = "3";
    store.add_instances({i});
    auto y = store.convert_to_ynq("o1", "Are there 3?", Polarity::yes);
    CHECK(y.links == std::optional<std::string>("o1"));
    CHECK(code_of([&] { store.convert_to_ynq("o1", "Are there 4?", Polarity::no); }) ==
          ErrorCode::already_converted);
    CHECK(code_of([&] { store.convert_to_ynq("nope", "?", Polarity::no); }) == ErrorCode::not_found);
    CHECK(code_of([&] { store.add_instances({i}); }) == ErrorCode::duplicate_id);
}

TEST_CASE("random submit sequences cannot finalize an unbalanced mode") {
    std::mt19937_64 rng(2026);
    for (int seq = 0; seq < 200; ++seq) {
        ProjectStore store("");
        GenerationRun run;
        run.id = "r";
        run.mode = Mode::position;
        run.target_count = 1 + rng() % 12;
        store.put_run(run);
        const int steps = 5 + int(rng() % 30);
        for (int k = 0; k < steps; ++k) {
            auto id = store.enqueue(TaskKind::author_qa, qa_payload(Mode::position), "k" + std::to_string(k));
            store.claim(id, "a");
            try {
                store.submit_qa(id, "a", pear(rng() % 4 == 0 ? Polarity::no : Polarity::yes));
            } catch (const Error& e) {
                const bool finalized = store.progress().at(Mode::position).finalized;
                CHECK(e.code() == (finalized ? ErrorCode::invalid_state : ErrorCode::balance_violation));
            }
            if (rng() % 5 == 0) {
                try {
                    store.finalize_mode(Mode::position);
                } catch (const Error& e) {
                    CHECK(e.code() == ErrorCode::balance_violation);
                }
            }
            auto c = store.progress().at(Mode::position);
            if (c.finalized) {
                CHECK(c.ynq.balanced());
            }
        }
    }
}
