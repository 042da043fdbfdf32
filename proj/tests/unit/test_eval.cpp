// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vhbench/error.hpp"
#include "vhbench/eval.hpp"
#include "vhbench/store.hpp"

#include "../support/fakes.hpp"
#include "../support/oracles.hpp"
#include "../support/ynq24.hpp"

#include <doctest.h>

#include <numeric>
#include <random>

using namespace vhbench;
using namespace vhbench::eval;

TEST_CASE("parse_yes_no") {
    CHECK(parse_yes_no("Yes, the pear is square.") == YesNo::yes);
    CHECK(parse_yes_no("no") == YesNo::no);
    CHECK(parse_yes_no("The image shows three lamps, not two.") == YesNo::unparseable);
    CHECK(parse_yes_no("NO!") == YesNo::no);
    CHECK(parse_yes_no("No. But yes in a way.") == YesNo::no);
    CHECK(parse_yes_no("Hard to say. Yes.") == YesNo::yes);
    CHECK(parse_yes_no("Hard to say. Yes or no?") == YesNo::unparseable);
    CHECK(parse_yes_no("Nothing is there; yesterday it was.") == YesNo::unparseable);
    CHECK(parse_yes_no("It is 3.5 cm, so no.") == YesNo::no);
    CHECK(parse_yes_no("") == YesNo::unparseable);
}

TEST_CASE("replayed yes/no fixture gives the hand-tallied accuracies") {
    fixture::Ynq24 fx("unit");
    REQUIRE(fx.benchmark.instances.size() == 24);
    auto run = evaluate_ynq(fx.benchmark, *fx.gateway, "mllm-a");
    CHECK(run.warnings.empty());
    CHECK(run.manifest.complete());
    auto report = accuracy_report("mllm-a", run.records);
    const auto& want = fx.expected["mllm-a"];
    double sum = 0.0;
    for (Mode m : kAllModes) {
        const auto& w = want[std::string(to_string(m))];
        CAPTURE(to_string(m));
        const auto& c = report.counts.at(m);
        CHECK(c.correct == w["correct"].get<std::size_t>());
        CHECK(c.total == w["total"].get<std::size_t>());
        CHECK(c.unparseable == w["unparseable"].get<std::size_t>());
        const double acc = w["correct"].get<double>() / w["total"].get<double>();
        CHECK(report.per_mode.at(m) == acc);
        sum += acc;
    }
    CHECK(report.average == doctest::Approx(sum / 8).epsilon(1e-12));
    CHECK(fx.gateway->stats().network_calls == 0);

    auto yes = accuracy_report("constant-yes", evaluate_ynq(fx.benchmark, *fx.gateway, "constant-yes").records);
    for (Mode m : kAllModes) CHECK(yes.per_mode.at(m) == 0.5);
}

TEST_CASE("gateway failures become pending records") {
    auto root = std::filesystem::temp_directory_path() / "vhbench_eval_pending";
    std::filesystem::remove_all(root);
    ImageStore images(root);
    auto img = images.put(fakes::tiny_png(), ImageSource::generated);
    std::atomic<int> n{0};
    auto transport = std::make_shared<fakes::ScriptedTransport>([&](const std::string&, const Json& body) {
        if (body["prompt"] == "Is it red?") return gateway::WireResponse{500, "boom"};
        ++n;
        return fakes::text_reply("Yes.");
    });
    gateway::EndpointConfig ep;
    ep.name = "m";
    ep.base_url = "http://unused";
    ep.retry = {2, 1};
    gateway::GatewayOptions opt;
    opt.sleep = [](auto) {};
    gateway::Gateway gw({ep}, opt, transport, images);

    Benchmark b;
    b.format = QuestionFormat::ynq;
    for (int i = 0; i < 4; ++i) {
        VHInstance v;
        v.id = "y" + std::to_string(i);
        v.mode = Mode::color;
        v.image_hash = img.content_hash;
        v.question = i == 2 ? "Is it red?" : "Is it green " + std::to_string(i) + "?";
        v.format = QuestionFormat::ynq;
        v.ynq_polarity = i % 2 ? Polarity::no : Polarity::yes;
        v.reference_answer = to_string(*v.ynq_polarity);
        b.instances.push_back(v);
    }
    auto run = evaluate_ynq(b, gw, "m");
    CHECK(run.records[2].verdict == Verdict::pending_adjudication);
    CHECK_FALSE(run.records[2].error.empty());
    CHECK(run.manifest.pending == 1);
    CHECK_FALSE(run.manifest.complete());
    try {
        accuracy_report("m", run.records);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::incomplete_run);
    }
    auto partial = accuracy_report("m", run.records, true);
    CHECK(partial.partial);
    CHECK(partial.counts.at(Mode::color).total == 3);
    CHECK(partial.per_mode.at(Mode::color) == doctest::Approx(1.0 / 3.0));

    auto path = root / "run.jsonl";
    write_run(path, run);
    auto back = read_run(path);
    CHECK(back.records == run.records);
    CHECK(back.manifest.pending == 1);
    CHECK(std::filesystem::exists(manifest_path(path)));
    std::filesystem::remove_all(root);
}

TEST_CASE("open-ended evaluation waits for human verdicts") {
    auto root = std::filesystem::temp_directory_path() / "vhbench_eval_oeq";
    std::filesystem::remove_all(root);
    ImageStore images(root / "img");
    auto img = images.put(fakes::tiny_png(), ImageSource::generated);
    auto transport = std::make_shared<fakes::ScriptedTransport>(
        [](const std::string&, const Json& body) { return fakes::text_reply("It is " + body["prompt"].get<std::string>()); });
    gateway::EndpointConfig ep;
    ep.name = "m";
    ep.base_url = "http://unused";
    gateway::Gateway gw({ep}, {}, transport, images);

    Benchmark b;
    for (int i = 0; i < 10; ++i) {
        VHInstance v;
        v.id = "o" + std::to_string(i);
        v.mode = Mode::shape;
        v.image_hash = img.content_hash;
        v.question = "What shape " + std::to_string(i) + "?";
        v.reference_answer = "round";
        b.instances.push_back(v);
    }
    ProjectStore store("");
    auto run = evaluate_oeq(b, gw, "m", &store);
    CHECK(run.task_ids.size() == 10);
    CHECK(run.manifest.pending == 10);
    CHECK_THROWS_AS(accuracy_report("m", run.records), Error);
    // Re-running does not duplicate tasks.
    CHECK(evaluate_oeq(b, gw, "m", &store).task_ids == run.task_ids);

    for (int i = 0; i < 10; ++i) {
        auto t = store.claim_next("ann", {TaskKind::adjudicate_oeq});
        CHECK(t.payload["response"] == "It is " + t.payload["question"].get<std::string>());
        store.submit_verdict(t.id, "ann", i < 4 ? Verdict::incorrect : Verdict::correct, "");
    }
    auto merged = apply_human_verdicts(run.records, store.snapshot()->human_verdicts);
    auto report = accuracy_report("m", merged);
    CHECK(report.per_mode.at(Mode::shape) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(report.average == report.per_mode.at(Mode::shape));

    // A human verdict stays put when auto records come later.
    EvaluationRecord autov = merged[0];
    autov.verdict = Verdict::correct;
    autov.verdict_source = VerdictSource::auto_ynq;
    auto again = apply_human_verdicts(merged, {autov});
    CHECK(again == merged);
    std::filesystem::remove_all(root);
}

TEST_CASE("report layouts") {
    const std::map<Mode, double> col{{Mode::existence, 0.427}, {Mode::shape, 0.487}, {Mode::color, 0.460},
                                     {Mode::orientation, 0.153}, {Mode::ocr, 0.367}, {Mode::size, 0.413},
                                     {Mode::position, 0.547}, {Mode::counting, 0.213}};
    auto a = report_from_values("GPT-4V", col);
    CHECK(a.average == doctest::Approx(0.383375).epsilon(1e-12));

    auto text = render_report({a}, Layout::per_model_table, ReportFormat::text);
    std::size_t lines = std::count(text.begin(), text.end(), '\n');
    CHECK(lines == 11);  // title, header, 8 modes, Average
    CHECK(text.find("\nAverage         0.383\n") != std::string::npos);

    std::map<Mode, double> col2, col3;
    for (auto [m, v] : col) {
        col2[m] = 1.0 - v;
        col3[m] = v;
    }
    auto b = report_from_values("B", col2);
    auto c = report_from_values("C", col3);
    auto csv = render_report({a, b, c}, Layout::cross_model_table, ReportFormat::csv);
    CHECK(csv.rfind("Mode,GPT-4V,B,C,Average\n", 0) == 0);
    CHECK(csv.find("\nExistence,0.427,0.573,0.427,0.476\n") != std::string::npos);
    CHECK(csv.find("\nAverage,0.383,0.617,0.383,0.461\n") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);

    auto cross = render_report({a}, Layout::cross_model_table, ReportFormat::text);
    CHECK(cross.find("Orientation   0.153    0.153") != std::string::npos);

    CHECK_THROWS_AS(report_from_values("x", {{Mode::ocr, 1.5}}), Error);
    CHECK(parse_layout("cross_model_table") == Layout::cross_model_table);
    CHECK_THROWS_AS(parse_layout("wide"), Error);
}

TEST_CASE("fleiss kappa") {
    CHECK(fleiss_kappa({{4, 0}, {0, 4}, {4, 0}}) == 1.0);
    CHECK(fleiss_kappa({{2, 0}, {1, 1}}) == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
    CHECK(std::abs(fleiss_kappa({{2, 0}, {1, 1}}) + 1.0 / 3.0) < 1e-12);
    CHECK_THROWS_AS(fleiss_kappa({{2, 0}, {1, 2}}), Error);
    CHECK_THROWS_AS(fleiss_kappa(std::vector<std::vector<int>>{{1, 0}}), Error);

    std::mt19937_64 rng(5);
    for (int t = 0; t < 50; ++t) {
        const int N = 1 + int(rng() % 30), n = 2 + int(rng() % 5), k = 2 + int(rng() % 4);
        std::vector<std::vector<int>> m(N, std::vector<int>(k, 0));
        for (auto& row : m) {
            for (int r = 0; r < n; ++r) ++row[rng() % k];
        }
        const double kappa = fleiss_kappa(m);
        CHECK(kappa == doctest::Approx(oracle::fleiss_kappa(m)).epsilon(1e-9));
        auto rows = m;
        std::shuffle(rows.begin(), rows.end(), rng);
        std::vector<int> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (auto& row : rows) {
            auto copy = row;
            for (int j = 0; j < k; ++j) row[j] = copy[perm[j]];
        }
        CHECK(fleiss_kappa(rows) == kappa);
    }
}

TEST_CASE("agreement matrix from labels and sampling") {
    std::vector<AgreementLabel> labels = {
        {"i1", "a", "yes"}, {"i1", "b", "yes"}, {"i2", "a", "yes"}, {"i2", "b", "no"}};
    auto m = matrix_from_labels(labels);
    CHECK(m.categories == std::vector<std::string>{"no", "yes"});
    CHECK(m.items == std::vector<std::string>{"i1", "i2"});
    CHECK(m.counts == std::vector<std::vector<int>>{{0, 2}, {1, 1}});
    CHECK(fleiss_kappa(m) == doctest::Approx(-1.0 / 3.0));

    labels.push_back({"i2", "a", "no"});
    CHECK_THROWS_AS(matrix_from_labels(labels), Error);
    labels.back() = {"i3", "a", "no"};
    CHECK_THROWS_AS(matrix_from_labels(labels), Error);  // i3 has one rating

    auto ids = oracle::make_ids(300);
    auto s1 = sample_items(ids, 100, 9);
    CHECK(s1.size() == 100);
    CHECK(s1 == sample_items(ids, 100, 9));
    CHECK(s1 != sample_items(ids, 100, 10));
    CHECK(std::is_sorted(s1.begin(), s1.end()));
    CHECK_THROWS_AS(sample_items(ids, 301, 1), Error);

    Benchmark b;
    b.format = QuestionFormat::ynq;
    for (const auto& id : oracle::make_ids(12, "y")) {
        VHInstance v;
        v.id = id;
        v.question = "Is it?";
        v.format = QuestionFormat::ynq;
        v.ynq_polarity = Polarity::no;
        v.reference_answer = "no";
        b.instances.push_back(v);
    }
    ProjectStore store("");
    auto picked = enqueue_agreement_study(store, b, 5, 4, 3);
    CHECK(picked.size() == 5);
    CHECK(store.snapshot()->tasks.size() == 20);
    enqueue_agreement_study(store, b, 5, 4, 3);
    CHECK(store.snapshot()->tasks.size() == 20);
}
