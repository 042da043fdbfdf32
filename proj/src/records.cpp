// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vhbench/records.hpp"

#include "vhbench/error.hpp"

#include <array>
#include <utility>

namespace vhbench {

namespace {

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E v) {
    for (const auto& [e, s] : table) {
        if (e == v) return s;
    }
    return "?";
}

template <typename E, std::size_t N>
E parse_of(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view s, const char* what) {
    for (const auto& [e, name] : table) {
        if (name == s) return e;
    }
    std::string valid;
    for (const auto& [e, name] : table) valid += (valid.empty() ? "" : ", ") + std::string(name);
    throw Error(ErrorCode::schema_violation, std::string("unknown ") + what + " '" + std::string(s) + "'", valid);
}

constexpr std::array<std::pair<OutcomeVerdict, std::string_view>, 2> kOutcome = {{
    {OutcomeVerdict::successful, "successful"},
    {OutcomeVerdict::unsuccessful, "unsuccessful"},
}};
constexpr std::array<std::pair<ImageStatus, std::string_view>, 3> kImageStatus = {{
    {ImageStatus::pending_annotation, "pending_annotation"},
    {ImageStatus::annotated, "annotated"},
    {ImageStatus::discarded, "discarded"},
}};
constexpr std::array<std::pair<TaskKind, std::string_view>, 4> kTaskKind = {{
    {TaskKind::author_qa, "author_qa"},
    {TaskKind::verify_initial, "verify_initial"},
    {TaskKind::adjudicate_oeq, "adjudicate_oeq"},
    {TaskKind::agreement_label, "agreement_label"},
}};
constexpr std::array<std::pair<TaskState, std::string_view>, 4> kTaskState = {{
    {TaskState::open, "open"},
    {TaskState::claimed, "claimed"},
    {TaskState::done, "done"},
    {TaskState::discarded, "discarded"},
}};
constexpr std::array<std::pair<Verdict, std::string_view>, 4> kVerdict = {{
    {Verdict::correct, "correct"},
    {Verdict::incorrect, "incorrect"},
    {Verdict::unparseable, "unparseable"},
    {Verdict::pending_adjudication, "pending_adjudication"},
}};
constexpr std::array<std::pair<VerdictSource, std::string_view>, 2> kVerdictSource = {{
    {VerdictSource::auto_ynq, "auto_ynq"},
    {VerdictSource::human, "human"},
}};

}  // namespace

std::string_view to_string(OutcomeVerdict v) { return name_of(kOutcome, v); }
OutcomeVerdict parse_outcome_verdict(std::string_view s) { return parse_of(kOutcome, s, "outcome verdict"); }
std::string_view to_string(ImageStatus s) { return name_of(kImageStatus, s); }
ImageStatus parse_image_status(std::string_view s) { return parse_of(kImageStatus, s, "image status"); }
std::string_view to_string(TaskKind k) { return name_of(kTaskKind, k); }
std::string_view to_string(TaskState s) { return name_of(kTaskState, s); }
TaskKind parse_task_kind(std::string_view s) { return parse_of(kTaskKind, s, "task kind"); }
TaskState parse_task_state(std::string_view s) { return parse_of(kTaskState, s, "task state"); }
std::string_view to_string(Verdict v) { return name_of(kVerdict, v); }
std::string_view to_string(VerdictSource v) { return name_of(kVerdictSource, v); }
Verdict parse_verdict(std::string_view s) { return parse_of(kVerdict, s, "verdict"); }
VerdictSource parse_verdict_source(std::string_view s) { return parse_of(kVerdictSource, s, "verdict source"); }

Json to_json(const InitialInstanceOutcome& o) {
    Json j;
    j["instance"] = to_json(o.instance);
    j["testing_model_response"] = o.testing_model_response;
    if (o.verdict) j["verdict"] = to_string(*o.verdict);
    j["detected_or_hypothetical_hallucination"] = o.detected_or_hypothetical_hallucination;
    if (!o.hypothetical_response.empty()) j["hypothetical_response"] = o.hypothetical_response;
    return j;
}

InitialInstanceOutcome outcome_from_json(const Json& j) {
    InitialInstanceOutcome o;
    o.instance = instance_from_json(require(j, "instance"));
    o.testing_model_response = optional_string(j, "testing_model_response");
    if (auto v = optional_string(j, "verdict"); !v.empty()) o.verdict = parse_outcome_verdict(v);
    o.detected_or_hypothetical_hallucination = optional_string(j, "detected_or_hypothetical_hallucination");
    o.hypothetical_response = optional_string(j, "hypothetical_response");
    return o;
}

std::size_t GenerationRun::count(ImageStatus s) const {
    std::size_t n = 0;
    for (const auto& p : produced) n += p.status == s;
    return n;
}

Json to_json(const GenerationRun& r) {
    Json j;
    j["id"] = r.id;
    j["mode"] = to_string(r.mode);
    j["description_id"] = r.description_id;
    j["image_endpoint"] = r.image_endpoint;
    j["rewrite_endpoint"] = r.rewrite_endpoint;
    j["target_count"] = r.target_count;
    j["attempt_ceiling"] = r.attempt_ceiling;
    j["attempts"] = r.attempts;
    j["produced"] = Json::array();
    for (const auto& p : r.produced) {
        j["produced"].push_back({{"image_hash", p.image_hash}, {"status", to_string(p.status)}, {"prompt", p.prompt}});
    }
    return j;
}

GenerationRun run_from_json(const Json& j) {
    GenerationRun r;
    r.id = require_string(j, "id");
    r.mode = parse_mode(require_string(j, "mode"));
    r.description_id = optional_string(j, "description_id");
    r.image_endpoint = optional_string(j, "image_endpoint");
    r.rewrite_endpoint = optional_string(j, "rewrite_endpoint");
    r.target_count = j.value("target_count", std::size_t{0});
    r.attempt_ceiling = j.value("attempt_ceiling", std::size_t{0});
    r.attempts = j.value("attempts", std::size_t{0});
    if (j.contains("produced")) {
        for (const auto& p : j["produced"]) {
            r.produced.push_back({require_string(p, "image_hash"), parse_image_status(require_string(p, "status")),
                                  optional_string(p, "prompt")});
        }
    }
    return r;
}

Json to_json(const AnnotationTask& t) {
    Json j;
    j["id"] = t.id;
    j["kind"] = to_string(t.kind);
    j["state"] = to_string(t.state);
    j["payload"] = t.payload;
    j["claimant"] = t.claimant;
    j["lease_expiry_ms"] = t.lease_expiry_ms;
    j["seq"] = t.seq;
    j["dedupe_key"] = t.dedupe_key;
    if (!t.result.is_null()) j["result"] = t.result;
    return j;
}

AnnotationTask task_from_json(const Json& j) {
    AnnotationTask t;
    t.id = require_string(j, "id");
    t.kind = parse_task_kind(require_string(j, "kind"));
    t.state = parse_task_state(require_string(j, "state"));
    t.payload = j.value("payload", Json::object());
    t.claimant = optional_string(j, "claimant");
    t.lease_expiry_ms = j.value("lease_expiry_ms", std::int64_t{0});
    t.seq = j.value("seq", std::uint64_t{0});
    t.dedupe_key = optional_string(j, "dedupe_key");
    if (j.contains("result")) t.result = j["result"];
    return t;
}

Json to_json(const EvaluationRecord& r) {
    Json j;
    j["instance_id"] = r.instance_id;
    j["mode"] = to_string(r.mode);
    j["endpoint_name"] = r.endpoint_name;
    j["response_text"] = r.response_text;
    j["verdict"] = to_string(r.verdict);
    j["verdict_source"] = to_string(r.verdict_source);
    j["adjudicator_ids"] = r.adjudicator_ids;
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

EvaluationRecord evaluation_from_json(const Json& j) {
    EvaluationRecord r;
    r.instance_id = require_string(j, "instance_id");
    r.mode = parse_mode(require_string(j, "mode"));
    r.endpoint_name = optional_string(j, "endpoint_name");
    r.response_text = optional_string(j, "response_text");
    r.verdict = parse_verdict(require_string(j, "verdict"));
    r.verdict_source = parse_verdict_source(optional_string(j, "verdict_source", "auto_ynq"));
    r.adjudicator_ids = j.value("adjudicator_ids", std::vector<std::string>{});
    r.error = optional_string(j, "error");
    return r;
}

Json to_json(const AgreementLabel& l) {
    Json j;
    j["item"] = l.item;
    j["rater"] = l.rater;
    j["category"] = l.category;
    return j;
}

AgreementLabel label_from_json(const Json& j) {
    return {require_string(j, "item"), require_string(j, "rater"), require_string(j, "category")};
}

}  // namespace vhbench
