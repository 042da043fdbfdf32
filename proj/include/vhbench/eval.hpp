// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vhbench/gateway.hpp"
#include "vhbench/model.hpp"
#include "vhbench/records.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vhbench {
class ProjectStore;
}

namespace vhbench::eval {

enum class YesNo { yes, no, unparseable };
std::string_view to_string(YesNo v);

/// Case-insensitive. The first standalone "yes" or "no" in the first sentence
/// decides; failing that, the whole response counts when only one of the two
/// words occurs in it.
YesNo parse_yes_no(std::string_view response);

struct ModeCounts {
    std::size_t correct = 0;
    std::size_t total = 0;  // scored instances (pending excluded)
    std::size_t unparseable = 0;
    std::size_t pending = 0;
};

struct AccuracyReport {
    std::string endpoint_name;
    std::map<Mode, double> per_mode;  // modes with at least one scored instance
    double average = 0.0;             // unweighted mean of per_mode
    std::map<Mode, ModeCounts> counts;
    bool partial = false;

    /// Recomputes `average` from `per_mode`.
    void finish();
};

/// Accuracy from evaluation records. Pending records raise incomplete_run
/// unless `allow_partial`, in which case they leave the denominators.
AccuracyReport accuracy_report(const std::string& endpoint_name, const std::vector<EvaluationRecord>& records,
                               bool allow_partial = false);

/// A report straight from per-mode accuracies, e.g. a published column.
AccuracyReport report_from_values(const std::string& endpoint_name, const std::map<Mode, double>& per_mode);

/// Swaps pending records for the matching human verdicts (same instance and
/// endpoint). Auto verdicts never replace a human one.
std::vector<EvaluationRecord> apply_human_verdicts(std::vector<EvaluationRecord> records,
                                                   const std::vector<EvaluationRecord>& human);

enum class Layout { per_model_table, cross_model_table };
Layout parse_layout(std::string_view s);
enum class ReportFormat { text, csv };

/// per_model_table: one block per report, 8 mode rows plus Average.
/// cross_model_table: mode rows plus Average, one column per report plus an
/// Average column. Values print with three decimals.
std::string render_report(const std::vector<AccuracyReport>& reports, Layout layout, ReportFormat format);

// ---- running models ---------------------------------------------------

struct EvalOptions {
    std::size_t workers = 0;  // 0: the endpoint's max_concurrency
    int sample_index = 0;
};

struct RunManifest {
    std::string endpoint_name;
    QuestionFormat format = QuestionFormat::ynq;
    std::string benchmark;
    std::size_t total = 0;
    std::size_t pending = 0;
    std::size_t unparseable = 0;
    bool complete() const { return pending == 0; }
};

Json to_json(const RunManifest& m);
RunManifest manifest_from_json(const Json& j);

struct EvalRun {
    RunManifest manifest;
    std::vector<EvaluationRecord> records;  // benchmark order
    std::vector<std::string> task_ids;      // adjudication tasks (OEQ only)
    std::vector<std::string> warnings;
};

/// One chat call per instance with its image and question. Gateway failures
/// leave the record pending with the error text.
EvalRun evaluate_ynq(const Benchmark& benchmark, gateway::Gateway& gw, const std::string& endpoint,
                     const EvalOptions& options = {});

/// Collects responses and, when `store` is given, enqueues one adjudication
/// task per answered instance. Every record starts pending.
EvalRun evaluate_oeq(const Benchmark& benchmark, gateway::Gateway& gw, const std::string& endpoint,
                     ProjectStore* store, const EvalOptions& options = {});

/// JSONL records plus `<path>.manifest.json`.
void write_run(const std::filesystem::path& path, const EvalRun& run);
EvalRun read_run(const std::filesystem::path& path);
std::filesystem::path manifest_path(const std::filesystem::path& run_path);

// ---- agreement --------------------------------------------------------

struct AgreementMatrix {
    std::vector<std::string> items;
    std::vector<std::string> categories;
    std::vector<std::vector<int>> counts;  // items x categories
    int raters = 0;

    /// Throws invalid_argument for fewer than two raters, no items, or a
    /// row that does not sum to `raters`.
    void validate() const;
};

double fleiss_kappa(const AgreementMatrix& m);
double fleiss_kappa(const std::vector<std::vector<int>>& counts);

/// Groups labels by item. Categories are the sorted distinct labels unless
/// given.
AgreementMatrix matrix_from_labels(const std::vector<AgreementLabel>& labels,
                                   std::vector<std::string> categories = {});

std::vector<AgreementLabel> read_labels(const std::filesystem::path& path);

/// Seeded uniform sample of `size` distinct ids, returned sorted.
std::vector<std::string> sample_items(std::vector<std::string> ids, std::size_t size, std::uint64_t seed);

/// Enqueues `raters` agreement_label tasks per sampled instance. Returns the
/// sampled ids.
std::vector<std::string> enqueue_agreement_study(ProjectStore& store, const Benchmark& benchmark, std::size_t size,
                                                 std::size_t raters, std::uint64_t seed);

}  // namespace vhbench::eval
