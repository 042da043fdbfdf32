// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vhbench/model.hpp"
#include "vhbench/records.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace vhbench {

/// Everything the project persists besides image bytes and model exchanges.
struct StoreState {
    std::vector<VHInstance> instances;  // OEQ and YNQ together
    std::vector<TextDescription> descriptions;
    std::vector<InitialInstanceOutcome> outcomes;
    std::vector<GenerationRun> runs;
    std::vector<AnnotationTask> tasks;
    std::vector<EvaluationRecord> human_verdicts;
    std::vector<AgreementLabel> labels;
    std::set<Mode> finalized_modes;
    std::uint64_t next_seq = 1;

    const VHInstance* instance(const std::string& id) const;
    const AnnotationTask* task(const std::string& id) const;
    const GenerationRun* run(const std::string& id) const;
    const TextDescription* description(const std::string& id) const;
    /// The YNQ instance converted from `oeq_id`, if any.
    const VHInstance* ynq_for(const std::string& oeq_id) const;
    Benchmark benchmark(QuestionFormat format) const;
};

Json to_json(const StoreState& s);
StoreState store_state_from_json(const Json& j);

struct ModeProgress {
    std::size_t oeq = 0;
    YesNoCount ynq;
    std::size_t target = 0;
    std::size_t capacity_per_polarity = 0;
    std::size_t open_tasks = 0;
    bool finalized = false;
};

struct QaSubmission {
    std::string question;
    std::string reference_answer;
    std::string ynq_question;
    Polarity ynq_answer = Polarity::yes;
};

struct QaResult {
    std::string oeq_id;
    std::string ynq_id;
};

/// Single-writer project store. Mutations run one at a time against a copy of
/// the committed state; the copy is written to disk atomically and only then
/// becomes visible. Readers get immutable snapshots.
class ProjectStore {
public:
    using Clock = std::function<std::int64_t()>;  // milliseconds since epoch

    /// Opens (or creates) `<root>/store.json`.
    explicit ProjectStore(std::filesystem::path root, Clock clock = {});

    static constexpr std::int64_t kDefaultLeaseMs = 30LL * 60 * 1000;
    static constexpr std::size_t kDefaultModeTarget = 150;

    std::shared_ptr<const StoreState> snapshot() const;
    const std::filesystem::path& root() const { return root_; }
    std::int64_t now() const { return clock_(); }

    void set_lease_ms(std::int64_t ms) { lease_ms_ = ms; }
    std::int64_t lease_ms() const { return lease_ms_; }

    /// Runs `fn` on a private copy and commits it. Exceptions leave the
    /// committed state untouched.
    void mutate(const std::function<void(StoreState&)>& fn);

    // ---- instances -----------------------------------------------------
    void add_instances(const std::vector<VHInstance>& instances);
    VHInstance convert_to_ynq(const std::string& oeq_id, const std::string& binary_question, Polarity answer);
    void add_description(const TextDescription& d);
    void upsert_outcomes(const std::vector<InitialInstanceOutcome>& outcomes);
    void put_run(const GenerationRun& run);

    // ---- balance -------------------------------------------------------
    /// Per-mode target: the sum of target_count over the mode's runs, or
    /// kDefaultModeTarget when the mode has none.
    std::map<Mode, ModeProgress> progress() const;
    /// Marks a mode's YNQ set final; throws balance_violation when
    /// |yes - no| > 1.
    void finalize_mode(Mode mode);

    // ---- tasks ---------------------------------------------------------
    /// Adds a task unless one with the same dedupe key exists; returns its id.
    std::string enqueue(TaskKind kind, Json payload, const std::string& dedupe_key);

    /// Oldest claimable task (open, or claimed with an expired lease) of the
    /// given kinds. Throws none_available.
    AnnotationTask claim_next(const std::string& annotator, const std::set<TaskKind>& kinds = {});
    AnnotationTask claim(const std::string& task_id, const std::string& annotator);

    QaResult submit_qa(const std::string& task_id, const std::string& annotator, const QaSubmission& qa);
    void discard(const std::string& task_id, const std::string& annotator, const std::string& reason);
    void submit_verdict(const std::string& task_id, const std::string& annotator, Verdict verdict,
                        const std::string& detected_hallucination);

private:
    void persist(const StoreState& s);

    std::filesystem::path root_;
    Clock clock_;
    std::int64_t lease_ms_ = kDefaultLeaseMs;
    mutable std::mutex read_mu_;
    std::mutex write_mu_;
    std::shared_ptr<const StoreState> state_;
};

}  // namespace vhbench
