// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.
//
//   acceptance --vhbench <path> [--python <path>] [--only <name>]

#include "vhbench/benchmark.hpp"
#include "vhbench/error.hpp"
#include "vhbench/eval.hpp"
#include "vhbench/fsutil.hpp"
#include "vhbench/miner.hpp"
#include "vhbench/prompts.hpp"
#include "vhbench/store.hpp"

#include "../support/oracles.hpp"
#include "../support/ynq24.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

using namespace vhbench;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

// First failure wins the detail line.
struct Check {
    Outcome out;
    void expect(bool cond, const std::string& what) {
        if (!cond && out.ok) {
            out.ok = false;
            out.detail = what;
        }
    }
};

Outcome miner_oracle() {
    Check c;
    Timer t;
    std::mt19937_64 rng(20240611);
    std::size_t pairs = 0;
    for (int trial = 0; trial < 200 && c.out.ok; ++trial) {
        const std::size_t n = 1 + rng() % 200, dim = 1 + rng() % 64;
        auto cv = oracle::clustered_vectors(rng, n, dim, 1 + rng() % 8, 0.2 + 0.1 * double(rng() % 6));
        auto rv = oracle::clustered_vectors(rng, n, dim, 1 + rng() % 12, 0.5 + 0.1 * double(rng() % 10));
        auto ids = oracle::make_ids(n);
        std::shuffle(ids.begin(), ids.end(), rng);
        auto cs = EmbeddingSet::from_rows("c", dim, cv, ids);
        auto rs = EmbeddingSet::from_rows("r", dim, rv, ids);
        miner::MiningConfig cfg;
        cfg.tau_hi = 0.7 + 0.01 * double(rng() % 30);
        cfg.tau_lo = 0.3 + 0.01 * double(rng() % 40);
        cfg.block_size = 1 + rng() % 64;
        cfg.threads = 1 + rng() % 8;
        auto got = miner::mine_candidates(cs, rs, cfg);
        auto want = oracle::brute_force_mine(cs, rs, cfg.tau_hi, cfg.tau_lo);
        pairs += want.size();
        c.expect(got.size() == want.size(), fmt::format("trial {}: {} pairs, oracle {}", trial, got.size(), want.size()));
        for (std::size_t k = 0; c.out.ok && k < got.size(); ++k) {
            c.expect(got[k].id_a == want[k].id_a && got[k].id_b == want[k].id_b,
                     fmt::format("trial {}: pair {} differs", trial, k));
            c.expect(std::abs(got[k].sim_contrast - want[k].sim_contrast) <= 1e-6 &&
                         std::abs(got[k].sim_reference - want[k].sim_reference) <= 1e-6,
                     fmt::format("trial {}: similarity of pair {} off by more than 1e-6", trial, k));
        }
    }
    const double s = t.seconds();
    c.expect(s < 60.0, fmt::format("took {:.1f} s", s));
    if (c.out.ok) c.out.detail = fmt::format("200 trials, {} oracle pairs, {:.1f} s", pairs, s);
    return c.out;
}

Outcome miner_scale() {
    Check c;
    const std::size_t n = 10000, dim = 512;
    std::mt19937_64 rng(512);
    auto ids = oracle::make_ids(n);
    auto cs = EmbeddingSet::from_rows("c", dim, oracle::clustered_vectors(rng, n, dim, 200, 0.3), ids);
    auto rs = EmbeddingSet::from_rows("r", dim, oracle::clustered_vectors(rng, n, dim, 2000, 2.0), ids);
    std::string first;
    std::size_t count = 0;
    double slowest = 0.0;
    for (std::size_t threads : {1, 4, 8}) {
        for (std::size_t block : {256, 1024}) {
            miner::MiningConfig cfg;  // 0.9 / 0.55
            cfg.threads = threads;
            cfg.block_size = block;
            Timer t;
            auto pairs = miner::mine_candidates(cs, rs, cfg);
            slowest = std::max(slowest, t.seconds());
            auto bytes = miner::serialize_pairs(pairs);
            if (first.empty()) {
                first = bytes;
                count = pairs.size();
            }
            c.expect(bytes == first, fmt::format("threads {} block {}: output differs", threads, block));
        }
    }
    c.expect(count > 0, "no pairs mined; fixture too sparse");
    c.expect(slowest < 30.0, fmt::format("slowest run {:.1f} s", slowest));
    if (c.out.ok) {
        c.out.detail = fmt::format("{} pairs, {} bytes identical over 6 configs, slowest run {:.1f} s", count,
                                   first.size(), slowest);
    }
    return c.out;
}

Outcome thresholds() {
    Check c;
    const float s19 = float(std::sqrt(0.19));
    const float s6975 = float(std::sqrt(1.0 - 0.55 * 0.55));
    auto cs = EmbeddingSet::from_rows("c", 2, std::vector<float>{1.0f, 0.0f, 0.9f, s19}, {"a", "b"});
    auto rs = EmbeddingSet::from_rows("r", 2, std::vector<float>{1.0f, 0.0f, 0.55f, s6975}, {"a", "b"});
    auto got = miner::mine_candidates(cs, rs, {});
    c.expect(got.size() == 1, fmt::format("{} pairs at the bounds, expected 1", got.size()));
    if (c.out.ok) {
        c.expect(float(got[0].sim_contrast) == 0.9f, fmt::format("contrast {}", got[0].sim_contrast));
        c.expect(float(got[0].sim_reference) == 0.55f, fmt::format("reference {}", got[0].sim_reference));
    }
    c.expect(got == oracle::brute_force_mine(cs, rs, 0.9, 0.55), "differs from oracle");
    if (c.out.ok) c.out.detail = "pair at exactly 0.9 / 0.55 kept";
    return c.out;
}

Outcome prompt_goldens() {
    Check c;
    const auto golden = std::filesystem::path(VHBENCH_SOURCE_DIR) / "tests/golden/prompts";
    std::size_t n = 0;
    for (auto id : prompts::figure_prompt_ids()) {
        const auto& p = prompts::figure_prompt(id);
        prompts::RenderedPrompt r{p.body.render(p.body.identity_bindings()), p.attaches_image};
        const auto name = std::string(prompts::to_string(id));
        c.expect(r.display() + "\n" == read_file(golden / (name + ".txt")), name + " differs from golden");
        ++n;
    }
    c.expect(n == 7, fmt::format("{} figure prompts, expected 7", n));
    c.expect(prompts::question_template_listing() == read_file(golden / "question_templates.txt"),
             "question templates differ from golden");
    if (c.out.ok) c.out.detail = fmt::format("{} prompts and the question template listing", n);
    return c.out;
}

Outcome ynq_scoring() {
    Check c;
    fixture::Ynq24 fx("acceptance");
    c.expect(fx.benchmark.instances.size() == 24, "fixture is not 24 instances");
    auto report = eval::accuracy_report("mllm-a", eval::evaluate_ynq(fx.benchmark, *fx.gateway, "mllm-a").records);
    for (Mode m : kAllModes) {
        const auto& w = fx.expected["mllm-a"][std::string(to_string(m))];
        const double want = w["correct"].get<double>() / w["total"].get<double>();
        c.expect(report.per_mode.at(m) == want,
                 fmt::format("{}: {} vs hand count {}", to_string(m), report.per_mode.at(m), want));
    }
    auto yes =
        eval::accuracy_report("constant-yes", eval::evaluate_ynq(fx.benchmark, *fx.gateway, "constant-yes").records);
    for (Mode m : kAllModes) {
        c.expect(yes.per_mode.at(m) == 0.5, fmt::format("constant yes on {}: {}", to_string(m), yes.per_mode.at(m)));
    }
    c.expect(fx.gateway->stats().network_calls == 0, "network was used");
    if (c.out.ok) c.out.detail = "8 modes exact, constant yes 0.5 everywhere";
    return c.out;
}

Outcome report_shape() {
    Check c;
    const std::map<Mode, double> col{{Mode::existence, 0.427}, {Mode::shape, 0.487}, {Mode::color, 0.460},
                                     {Mode::orientation, 0.153}, {Mode::ocr, 0.367}, {Mode::size, 0.413},
                                     {Mode::position, 0.547}, {Mode::counting, 0.213}};
    auto rep = eval::report_from_values("GPT-4V", col);
    auto text = eval::render_report({rep}, eval::Layout::cross_model_table, eval::ReportFormat::text);
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    c.expect(lines.size() == 10, fmt::format("{} lines, expected header + 8 modes + Average", lines.size()));
    std::size_t row = 1;
    for (Mode m : kAllModes) {
        if (row < lines.size()) {
            c.expect(lines[row].rfind(std::string(table_label(m)) + " ", 0) == 0,
                     fmt::format("row {} is '{}'", row, lines[row]));
        }
        ++row;
    }
    std::string shown;
    if (!lines.empty() && lines.back().rfind("Average", 0) == 0) {
        std::istringstream last(lines.back());
        std::string label;
        last >> label >> shown;
    }
    c.expect(!shown.empty() && std::abs(std::stod(shown) - 0.383) <= 1e-9,
             fmt::format("rendered Average '{}'", shown));
    c.expect(std::abs(rep.average - 0.383375) <= 1e-12, fmt::format("mean {:.9f}", rep.average));
    if (c.out.ok) c.out.detail = fmt::format("rendered Average {}, unrounded mean {:.6f}", shown, rep.average);
    return c.out;
}

Outcome kappa() {
    Check c;
    c.expect(eval::fleiss_kappa({{3, 0}, {0, 3}, {3, 0}, {0, 3}}) == 1.0, "perfect agreement is not 1.0");
    const double k22 = eval::fleiss_kappa({{2, 0}, {1, 1}});
    c.expect(std::abs(k22 + 1.0 / 3.0) <= 1e-12, fmt::format("N=2 n=2 fixture gives {:.15f}", k22));
    std::mt19937_64 rng(100);
    for (int t = 0; t < 100 && c.out.ok; ++t) {
        const int N = 2 + int(rng() % 40), n = 2 + int(rng() % 6), k = 2 + int(rng() % 5);
        std::vector<std::vector<int>> m(N, std::vector<int>(k, 0));
        for (auto& row : m)
            for (int r = 0; r < n; ++r) ++row[rng() % k];
        // Skip degenerate matrices where every rating falls in one category.
        std::vector<int> col(k, 0);
        for (const auto& row : m)
            for (int j = 0; j < k; ++j) col[j] += row[j];
        if (std::count(col.begin(), col.end(), 0) == k - 1) continue;
        const double base = eval::fleiss_kappa(m);
        c.expect(std::abs(base - oracle::fleiss_kappa(m)) <= 1e-12, fmt::format("matrix {} differs from oracle", t));
        auto p = m;
        std::shuffle(p.begin(), p.end(), rng);
        std::vector<int> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (auto& row : p) {
            auto copy = row;
            for (int j = 0; j < k; ++j) row[j] = copy[perm[j]];
        }
        c.expect(std::abs(eval::fleiss_kappa(p) - base) <= 1e-12, fmt::format("matrix {} not permutation invariant", t));
    }
    if (c.out.ok) c.out.detail = fmt::format("perfect 1.0, fixture {:.12f}, 100 random matrices invariant", k22);
    return c.out;
}

Benchmark oeq_bench(std::size_t per_mode) {
    Benchmark b;
    for (Mode m : kAllModes) {
        for (std::size_t k = 0; k < per_mode; ++k) {
            VHInstance i;
            i.id = std::string(to_string(m)) + "-" + std::to_string(1000 + k);
            i.mode = m;
            i.image_hash = std::string(64, 'a');
            i.image_path = "images/aa/" + i.image_hash + ".png";
            i.question = "What is on the table?";
            i.reference_answer = "a pear";
            b.instances.push_back(i);
        }
    }
    return b;
}

Outcome split() {
    Check c;
    auto b = oeq_bench(10);
    std::map<std::string, bool> correct;
    std::mt19937_64 rng(7);
    for (const auto& i : b.instances) correct[i.id] = rng() % 3 == 0;
    bench::SplitSpec spec;
    spec.seed = 7;
    spec.resamples = 5;
    auto got = bench::select_split(b, spec, correct);
    for (Mode m : kAllModes) {
        std::vector<std::string> ids;
        for (const auto& i : b.instances)
            if (i.mode == m) ids.push_back(i.id);
        auto want = oracle::split_one_mode(ids, correct, 7, mode_index(m), 5, 0.8);
        const auto& s = got.per_mode.at(m);
        c.expect(s.chosen_resample_index == want.r && s.train_ids == want.train && s.test_ids == want.test,
                 fmt::format("{} differs from the reference procedure", to_string(m)));
    }
    auto big = oeq_bench(150);
    std::map<std::string, bool> big_correct;
    for (const auto& i : big.instances) big_correct[i.id] = rng() % 2 == 0;
    auto s150 = bench::select_split(big, bench::SplitSpec{0.8, 20, 7, true}, big_correct);
    for (const auto& [m, ms] : s150.per_mode) {
        c.expect(ms.test_ids.size() == 30, fmt::format("{}: {} test instances", to_string(m), ms.test_ids.size()));
    }
    if (c.out.ok) c.out.detail = "8 modes match the reference, 150 per mode gives 30 test";
    return c.out;
}

Outcome balance() {
    Check c;
    std::mt19937_64 rng(1000);
    std::size_t finalized = 0;
    for (int seq = 0; seq < 1000 && c.out.ok; ++seq) {
        ProjectStore store("");
        const Mode modes[] = {kAllModes[rng() % 8], kAllModes[rng() % 8]};
        int r = 0;
        for (Mode m : modes) {
            GenerationRun run;
            run.id = "r" + std::to_string(r++);
            run.mode = m;
            run.target_count = 1 + rng() % 12;
            store.put_run(run);
        }
        const int steps = 5 + int(rng() % 30);
        for (int k = 0; k < steps; ++k) {
            const Mode m = modes[rng() % 2];
            const std::string hash(64, 'b');
            Json payload{{"mode", to_string(m)}, {"image_hash", hash}, {"image_path", "images/" + hash + ".png"},
                         {"run_id", "r"}};
            auto id = store.enqueue(TaskKind::author_qa, payload, "k" + std::to_string(k));
            store.claim(id, "a");
            const auto pol = rng() % 3 == 0 ? Polarity::no : Polarity::yes;
            try {
                store.submit_qa(id, "a", {"What fruit is on the table?", "a pear", "Is there a pear?", pol});
            } catch (const Error& e) {
                c.expect(e.code() == ErrorCode::balance_violation || e.code() == ErrorCode::invalid_state,
                         fmt::format("sequence {}: unexpected {}", seq, to_string(e.code())));
            }
            if (rng() % 4 == 0) {
                try {
                    store.finalize_mode(modes[rng() % 2]);
                } catch (const Error& e) {
                    c.expect(e.code() == ErrorCode::balance_violation,
                             fmt::format("sequence {}: finalize raised {}", seq, to_string(e.code())));
                }
            }
            for (const auto& [mode, p] : store.progress()) {
                if (p.finalized) {
                    c.expect(p.ynq.balanced(), fmt::format("sequence {}: {} finalized with yes {} no {}", seq,
                                                           to_string(mode), p.ynq.yes, p.ynq.no));
                }
            }
        }
        for (const auto& [mode, p] : store.progress()) finalized += p.finalized ? 1 : 0;
    }
    if (c.out.ok) c.out.detail = fmt::format("1000 sequences, {} finalized modes, all balanced", finalized);
    return c.out;
}

Outcome e2e(const std::string& python, const std::string& vhbench) {
    Check c;
    if (vhbench.empty()) {
        c.expect(false, "no --vhbench given");
        return c.out;
    }
    const auto script = std::filesystem::path(VHBENCH_SOURCE_DIR) / "tests/e2e/run_e2e.py";
    const auto log = std::filesystem::temp_directory_path() / "vhbench_acceptance_e2e.log";
    const auto cmd = fmt::format("\"{}\" \"{}\" --vhbench \"{}\" > \"{}\" 2>&1", python, script.string(), vhbench,
                                 log.string());
    const int rc = std::system(cmd.c_str());
    const auto out = read_file(log);
    c.expect(rc == 0, fmt::format("exit {}: {}", rc, out.substr(out.size() > 400 ? out.size() - 400 : 0)));
    c.expect(out.find("e2e replay matches golden") != std::string::npos, "golden comparison did not run");
    if (c.out.ok) c.out.detail = "replayed pipeline matches golden reports";
    std::filesystem::remove(log);
    return c.out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria", "acceptance"};
    std::string vhbench_path, python = "python3", only;
    app.add_option("--vhbench", vhbench_path, "vhbench executable for the end-to-end run");
    app.add_option("--python", python)->capture_default_str();
    app.add_option("--only", only, "run a single criterion");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"miner-oracle", miner_oracle},
        {"miner-scale", miner_scale},
        {"thresholds", thresholds},
        {"prompt-goldens", prompt_goldens},
        {"ynq-scoring", ynq_scoring},
        {"report-shape", report_shape},
        {"fleiss-kappa", kappa},
        {"split", split},
        {"balance", balance},
        {"e2e-replay", [&] { return e2e(python, vhbench_path); }},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        if (!only.empty() && only != name) continue;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.ok ? 0 : 1;
        fmt::print("{} {}: {}\n", o.ok ? "PASS" : "FAIL", name, o.detail);
        std::fflush(stdout);
    }
    return failed;
}
