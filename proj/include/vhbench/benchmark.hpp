// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vhbench/model.hpp"
#include "vhbench/prompts.hpp"
#include "vhbench/records.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace vhbench::bench {

/// A new YNQ instance linked to `oeq`, same image and mode. The caller
/// enforces one conversion per OEQ instance (see ProjectStore).
VHInstance convert_to_ynq(const VHInstance& oeq, std::string_view binary_question, Polarity answer,
                          std::string ynq_id);

/// Per-mode and overall yes/no tallies; throws invalid_argument for OEQ.
BalanceReport check_balance(const Benchmark& benchmark);

/// Instances as one JSON object per line in the documented field order.
void write_benchmark(const std::filesystem::path& path, const Benchmark& benchmark);

/// Reads a benchmark JSONL file. Every line must share one format; schema
/// problems raise Error{schema_violation} naming the line.
Benchmark read_benchmark(const std::filesystem::path& path);

struct SplitSpec {
    double train_fraction = 0.8;
    std::size_t resamples = 100;
    std::uint64_t seed = 0;
    bool per_mode = true;  // choose each mode's resample independently

    void validate() const;
};

struct ModeSplit {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    std::size_t chosen_resample_index = 0;
    double test_accuracy = 0.0;
    double full_accuracy = 0.0;
    double distance = 0.0;  // |test - full|
};

struct SplitResult {
    SplitSpec spec;
    std::map<Mode, ModeSplit> per_mode;
    double selection_distance = 0.0;  // sum of per-mode distances
};

Json to_json(const SplitResult& s);
SplitResult split_from_json(const Json& j);

/// Seed for resample r of the mode with canonical index `mode_index`:
/// splitmix64(splitmix64(seed + golden * (mode_index + 1)) + r).
std::uint64_t derive_seed(std::uint64_t seed, std::size_t mode_index, std::size_t r);

/// Fisher-Yates over `ids` driven by mt19937_64, drawing each index with
/// rejection sampling so the permutation is identical on every platform.
void seeded_shuffle(std::vector<std::string>& ids, std::uint64_t seed);

/// For each mode: sort its instance ids, and for r in [0, resamples) shuffle
/// with derive_seed(seed, mode, r), take the first count - round((1 - f) * count)
/// as train and the rest as test, and score the test accuracy. The resample
/// with the smallest |test - full| wins, ties to the smaller r. With
/// per_mode = false one r is chosen for all modes by the summed distance.
/// Throws missing_verdicts when an instance has no verdict.
SplitResult select_split(const Benchmark& benchmark, const SplitSpec& spec,
                         const std::map<std::string, bool>& correct_by_id);

/// Correctness per instance id from evaluation records. Pending records are
/// skipped; unparseable counts as incorrect.
std::map<std::string, bool> correctness(const std::vector<EvaluationRecord>& records);

constexpr std::string_view kPositionSuffix = " Answer the question using a single word or phrase.";

struct ExportOptions {
    std::string system_prompt;  // omitted from records when empty
};

/// Sends a prompt (no image) and returns the reply.
using Rewriter = std::function<std::string(const prompts::RenderedPrompt&)>;

/// Conversation records for the train ids of `split`: position questions gain
/// the fixed suffix, counting answers are replaced with sentences obtained
/// in one batched rewrite call, other modes pass through unchanged.
std::vector<Json> export_training_set(const SplitResult& split, const Benchmark& benchmark,
                                      const Rewriter& rewrite, const ExportOptions& options = {});

}  // namespace vhbench::bench
