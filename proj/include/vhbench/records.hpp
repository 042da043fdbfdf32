// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vhbench/json.hpp"
#include "vhbench/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vhbench {

// ---- initial instances -------------------------------------------------

enum class OutcomeVerdict { successful, unsuccessful };
std::string_view to_string(OutcomeVerdict v);
OutcomeVerdict parse_outcome_verdict(std::string_view s);

/// An initial instance put to the testing model. `verdict` stays empty until a
/// person has checked the response; successful means the model hallucinated.
struct InitialInstanceOutcome {
    VHInstance instance;
    std::string testing_model_response;
    std::optional<OutcomeVerdict> verdict;
    std::string detected_or_hypothetical_hallucination;
    // Unsuccessful outcomes only: the made-up hallucinated answer the hallucination
    // text refers to. Empty means the hallucination text stands in for it.
    std::string hypothetical_response;
};

Json to_json(const InitialInstanceOutcome& o);
InitialInstanceOutcome outcome_from_json(const Json& j);

// ---- generation runs ---------------------------------------------------

enum class ImageStatus { pending_annotation, annotated, discarded };
std::string_view to_string(ImageStatus s);
ImageStatus parse_image_status(std::string_view s);

struct RunImage {
    std::string image_hash;
    ImageStatus status = ImageStatus::pending_annotation;
    std::string prompt;  // the text sent to the image endpoint
};

struct GenerationRun {
    std::string id;
    Mode mode = Mode::existence;
    std::string description_id;
    std::string image_endpoint;
    std::string rewrite_endpoint;  // chat endpoint producing prompts; empty for direct mode
    std::size_t target_count = 0;
    std::size_t attempt_ceiling = 0;  // 0: 3 x target_count
    std::size_t attempts = 0;         // image generations issued, replacements included
    std::vector<RunImage> produced;

    std::size_t ceiling() const { return attempt_ceiling ? attempt_ceiling : 3 * target_count; }
    std::size_t count(ImageStatus s) const;
};

Json to_json(const GenerationRun& r);
GenerationRun run_from_json(const Json& j);

// ---- annotation tasks --------------------------------------------------

enum class TaskKind { author_qa, verify_initial, adjudicate_oeq, agreement_label };
enum class TaskState { open, claimed, done, discarded };
std::string_view to_string(TaskKind k);
std::string_view to_string(TaskState s);
TaskKind parse_task_kind(std::string_view s);
TaskState parse_task_state(std::string_view s);

struct AnnotationTask {
    std::string id;
    TaskKind kind = TaskKind::author_qa;
    Json payload = Json::object();
    TaskState state = TaskState::open;
    std::string claimant;
    std::int64_t lease_expiry_ms = 0;
    std::uint64_t seq = 0;       // creation order
    std::string dedupe_key;      // enqueue is idempotent per key
    Json result;                 // set when done or discarded
};

Json to_json(const AnnotationTask& t);
AnnotationTask task_from_json(const Json& j);

// ---- evaluation --------------------------------------------------------

enum class Verdict { correct, incorrect, unparseable, pending_adjudication };
enum class VerdictSource { auto_ynq, human };
std::string_view to_string(Verdict v);
std::string_view to_string(VerdictSource v);
Verdict parse_verdict(std::string_view s);
VerdictSource parse_verdict_source(std::string_view s);

struct EvaluationRecord {
    std::string instance_id;
    Mode mode = Mode::existence;
    std::string endpoint_name;
    std::string response_text;
    Verdict verdict = Verdict::pending_adjudication;
    VerdictSource verdict_source = VerdictSource::auto_ynq;
    std::vector<std::string> adjudicator_ids;
    std::string error;  // gateway failure text for pending YNQ records

    friend bool operator==(const EvaluationRecord&, const EvaluationRecord&) = default;
};

Json to_json(const EvaluationRecord& r);
EvaluationRecord evaluation_from_json(const Json& j);

/// One rater's label on one item, for agreement studies.
struct AgreementLabel {
    std::string item;
    std::string rater;
    std::string category;
};

Json to_json(const AgreementLabel& l);
AgreementLabel label_from_json(const Json& j);

}  // namespace vhbench
