// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vhbench/benchmark.hpp"

#include "vhbench/error.hpp"
#include "vhbench/fsutil.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace vhbench::bench {

VHInstance convert_to_ynq(const VHInstance& oeq, std::string_view binary_question, Polarity answer,
                          std::string ynq_id) {
    if (oeq.format != QuestionFormat::oeq) {
        throw Error(ErrorCode::invalid_argument, "only open-ended instances convert to yes/no", oeq.id);
    }
    if (binary_question.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        throw Error(ErrorCode::invalid_argument, "binary question is empty", oeq.id);
    }
    VHInstance y;
    y.id = std::move(ynq_id);
    y.mode = oeq.mode;
    y.image_hash = oeq.image_hash;
    y.image_path = oeq.image_path;
    y.question = std::string(binary_question);
    y.reference_answer = std::string(to_string(answer));
    y.format = QuestionFormat::ynq;
    y.ynq_polarity = answer;
    y.provenance = oeq.provenance;
    y.links = oeq.id;
    validate(y);
    return y;
}

BalanceReport check_balance(const Benchmark& benchmark) {
    if (benchmark.format != QuestionFormat::ynq) {
        throw Error(ErrorCode::invalid_argument, "balance applies to yes/no benchmarks");
    }
    return balance_of(benchmark);
}

void write_benchmark(const std::filesystem::path& path, const Benchmark& benchmark) {
    validate(benchmark);
    std::vector<Json> rows;
    rows.reserve(benchmark.instances.size());
    for (const auto& inst : benchmark.instances) rows.push_back(to_json(inst));
    atomic_write(path, to_jsonl(rows));
}

Benchmark read_benchmark(const std::filesystem::path& path) {
    Benchmark b;
    b.id = path.stem().string();
    b.name = b.id;
    bool first = true;
    for_each_jsonl(path, [&](std::size_t line, const Json& j) {
        VHInstance inst;
        try {
            inst = instance_from_json(j);
        } catch (const Error& e) {
            throw Error(ErrorCode::schema_violation, "line " + std::to_string(line) + ": " + e.what(),
                        std::to_string(line));
        }
        if (first) {
            b.format = inst.format;
            first = false;
        } else if (inst.format != b.format) {
            throw Error(ErrorCode::schema_violation, "line " + std::to_string(line) + ": mixed question formats",
                        std::to_string(line));
        }
        b.instances.push_back(std::move(inst));
    });
    validate(b);
    return b;
}

void SplitSpec::validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error(ErrorCode::invalid_argument, "train_fraction must lie strictly between 0 and 1");
    }
    if (resamples == 0) throw Error(ErrorCode::invalid_argument, "resamples must be positive");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Uniform integer in [0, bound] by rejection, independent of the standard
// library's distribution implementation.
std::uint64_t uniform_upto(std::mt19937_64& rng, std::uint64_t bound) {
    if (bound == std::numeric_limits<std::uint64_t>::max()) return rng();
    const std::uint64_t range = bound + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % range;
}

struct Candidate {
    std::vector<std::string> train, test;
    double test_acc = 0.0;
};

Candidate cut(std::vector<std::string> ids, double train_fraction, std::uint64_t seed,
              const std::map<std::string, bool>& correct, double full_acc) {
    seeded_shuffle(ids, seed);
    const auto n = ids.size();
    const auto n_test = static_cast<std::size_t>(std::llround((1.0 - train_fraction) * static_cast<double>(n)));
    Candidate c;
    c.train.assign(ids.begin(), ids.end() - static_cast<std::ptrdiff_t>(n_test));
    c.test.assign(ids.end() - static_cast<std::ptrdiff_t>(n_test), ids.end());
    if (c.test.empty()) {
        c.test_acc = full_acc;
    } else {
        std::size_t ok = 0;
        for (const auto& id : c.test) ok += correct.at(id);
        c.test_acc = static_cast<double>(ok) / static_cast<double>(c.test.size());
    }
    return c;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::size_t mode_index, std::size_t r) {
    return splitmix64(splitmix64(seed + 0x9E3779B97F4A7C15ull * (mode_index + 1)) + r);
}

void seeded_shuffle(std::vector<std::string>& ids, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = ids.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_upto(rng, i - 1));
        std::swap(ids[i - 1], ids[j]);
    }
}

SplitResult select_split(const Benchmark& benchmark, const SplitSpec& spec,
                         const std::map<std::string, bool>& correct_by_id) {
    spec.validate();
    std::map<Mode, std::vector<std::string>> ids;
    for (const auto& inst : benchmark.instances) {
        if (!correct_by_id.count(inst.id)) {
            throw Error(ErrorCode::missing_verdicts, "no verdict for instance '" + inst.id + "'", inst.id);
        }
        ids[inst.mode].push_back(inst.id);
    }

    SplitResult result;
    result.spec = spec;
    std::map<Mode, std::vector<Candidate>> candidates;
    std::map<Mode, double> full;
    for (auto& [mode, list] : ids) {
        std::sort(list.begin(), list.end());
        std::size_t ok = 0;
        for (const auto& id : list) ok += correct_by_id.at(id);
        full[mode] = static_cast<double>(ok) / static_cast<double>(list.size());
        auto& cs = candidates[mode];
        for (std::size_t r = 0; r < spec.resamples; ++r) {
            cs.push_back(cut(list, spec.train_fraction, derive_seed(spec.seed, mode_index(mode), r), correct_by_id,
                             full[mode]));
        }
    }

    auto choose = [&](Mode mode, std::size_t r) {
        auto& c = candidates[mode][r];
        ModeSplit s;
        s.train_ids = std::move(c.train);
        s.test_ids = std::move(c.test);
        s.chosen_resample_index = r;
        s.test_accuracy = c.test_acc;
        s.full_accuracy = full[mode];
        s.distance = std::abs(c.test_acc - full[mode]);
        result.selection_distance += s.distance;
        result.per_mode[mode] = std::move(s);
    };

    if (spec.per_mode) {
        for (const auto& [mode, cs] : candidates) {
            std::size_t best = 0;
            for (std::size_t r = 1; r < cs.size(); ++r) {
                if (std::abs(cs[r].test_acc - full[mode]) < std::abs(cs[best].test_acc - full[mode])) best = r;
            }
            choose(mode, best);
        }
    } else {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < spec.resamples; ++r) {
            double d = 0.0;
            for (const auto& [mode, cs] : candidates) d += std::abs(cs[r].test_acc - full[mode]);
            if (d < best_d) {
                best_d = d;
                best = r;
            }
        }
        for (const auto& [mode, cs] : candidates) choose(mode, best);
    }
    return result;
}

std::map<std::string, bool> correctness(const std::vector<EvaluationRecord>& records) {
    std::map<std::string, bool> out;
    for (const auto& r : records) {
        if (r.verdict == Verdict::pending_adjudication) continue;
        out[r.instance_id] = r.verdict == Verdict::correct;
    }
    return out;
}

Json to_json(const SplitResult& s) {
    Json j;
    j["train_fraction"] = s.spec.train_fraction;
    j["resamples"] = s.spec.resamples;
    j["seed"] = s.spec.seed;
    j["per_mode"] = s.spec.per_mode;
    j["selection_distance"] = s.selection_distance;
    Json modes = Json::object();
    for (const auto& [mode, m] : s.per_mode) {
        Json mj;
        mj["chosen_resample_index"] = m.chosen_resample_index;
        mj["test_accuracy"] = m.test_accuracy;
        mj["full_accuracy"] = m.full_accuracy;
        mj["distance"] = m.distance;
        mj["train_ids"] = m.train_ids;
        mj["test_ids"] = m.test_ids;
        modes[std::string(to_string(mode))] = mj;
    }
    j["modes"] = modes;
    return j;
}

SplitResult split_from_json(const Json& j) {
    SplitResult s;
    s.spec.train_fraction = require(j, "train_fraction").get<double>();
    s.spec.resamples = require(j, "resamples").get<std::size_t>();
    s.spec.seed = require(j, "seed").get<std::uint64_t>();
    s.spec.per_mode = j.value("per_mode", true);
    s.selection_distance = j.value("selection_distance", 0.0);
    for (const auto& [name, mj] : require(j, "modes").items()) {
        ModeSplit m;
        m.chosen_resample_index = mj.value("chosen_resample_index", std::size_t{0});
        m.test_accuracy = mj.value("test_accuracy", 0.0);
        m.full_accuracy = mj.value("full_accuracy", 0.0);
        m.distance = mj.value("distance", 0.0);
        m.train_ids = require(mj, "train_ids").get<std::vector<std::string>>();
        m.test_ids = require(mj, "test_ids").get<std::vector<std::string>>();
        s.per_mode[parse_mode(name)] = std::move(m);
    }
    return s;
}

std::vector<Json> export_training_set(const SplitResult& split, const Benchmark& benchmark,
                                      const Rewriter& rewrite, const ExportOptions& options) {
    if (benchmark.format != QuestionFormat::oeq) {
        throw Error(ErrorCode::invalid_argument, "training export takes the open-ended benchmark");
    }
    std::map<std::string, const VHInstance*> by_id;
    for (const auto& inst : benchmark.instances) by_id[inst.id] = &inst;

    std::vector<const VHInstance*> train;
    for (const auto& [mode, m] : split.per_mode) {
        for (const auto& id : m.train_ids) {
            auto it = by_id.find(id);
            if (it == by_id.end()) {
                throw Error(ErrorCode::id_set_mismatch, "split names an instance missing from the benchmark", id);
            }
            train.push_back(it->second);
        }
    }
    std::sort(train.begin(), train.end(), [](auto* a, auto* b) {
        return std::pair(mode_index(a->mode), a->id) < std::pair(mode_index(b->mode), b->id);
    });

    std::vector<prompts::CountingItem> counting;
    for (const auto* inst : train) {
        if (inst->mode == Mode::counting) counting.push_back({inst->question, inst->reference_answer});
    }
    std::vector<std::string> sentences;
    if (!counting.empty()) {
        sentences = prompts::parse_line_list(rewrite(prompts::render_counting_rewrite_prompt(counting)),
                                             counting.size(), true);
    }

    std::vector<Json> out;
    std::size_t next_sentence = 0;
    for (const auto* inst : train) {
        std::string question = inst->question;
        std::string answer = inst->reference_answer;
        if (inst->mode == Mode::position) question += kPositionSuffix;
        if (inst->mode == Mode::counting) answer = sentences[next_sentence++];

        Json rec;
        rec["id"] = inst->id;
        rec["mode"] = to_string(inst->mode);
        rec["image_hash"] = inst->image_hash;
        rec["image_path"] = inst->image_path;
        Json messages = Json::array();
        if (!options.system_prompt.empty()) {
            messages.push_back({{"role", "system"}, {"content", options.system_prompt}});
        }
        Json user_content = Json::array();
        user_content.push_back({{"type", "image"}, {"image_hash", inst->image_hash}});
        user_content.push_back({{"type", "text"}, {"text", question}});
        messages.push_back({{"role", "user"}, {"content", user_content}});
        messages.push_back({{"role", "assistant"}, {"content", answer}});
        rec["messages"] = messages;
        if (inst->mode == Mode::counting) rec["original_answer"] = inst->reference_answer;
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace vhbench::bench
