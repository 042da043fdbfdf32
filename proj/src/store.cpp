// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vhbench/store.hpp"

#include "vhbench/benchmark.hpp"
#include "vhbench/error.hpp"

#include <algorithm>
#include <chrono>

#include <fmt/format.h>

namespace vhbench {

namespace {

template <typename T, typename Pred>
const T* find_ptr(const std::vector<T>& v, Pred p) {
    auto it = std::find_if(v.begin(), v.end(), p);
    return it == v.end() ? nullptr : &*it;
}

AnnotationTask& task_ref(StoreState& s, const std::string& id) {
    for (auto& t : s.tasks) {
        if (t.id == id) return t;
    }
    throw Error(ErrorCode::not_found, "no task '" + id + "'", id);
}

bool lease_live(const AnnotationTask& t, std::int64_t now) {
    return t.state == TaskState::claimed && t.lease_expiry_ms > now;
}

bool claimable(const AnnotationTask& t, std::int64_t now) {
    return t.state == TaskState::open || (t.state == TaskState::claimed && !lease_live(t, now));
}

// The caller must hold a live lease on the task.
AnnotationTask& held_task(StoreState& s, const std::string& id, const std::string& annotator, std::int64_t now,
                          std::initializer_list<TaskKind> kinds) {
    auto& t = task_ref(s, id);
    if (std::find(kinds.begin(), kinds.end(), t.kind) == kinds.end()) {
        throw Error(ErrorCode::invalid_state, "task '" + id + "' is a " + std::string(to_string(t.kind)) + " task", id);
    }
    if (t.state == TaskState::done || t.state == TaskState::discarded) {
        throw Error(ErrorCode::invalid_state, "task '" + id + "' is already " + std::string(to_string(t.state)), id);
    }
    if (t.state == TaskState::claimed && t.claimant != annotator && lease_live(t, now)) {
        throw Error(ErrorCode::unauthorized, "task '" + id + "' is claimed by another annotator", id);
    }
    if (!lease_live(t, now) || t.claimant != annotator) {
        throw Error(ErrorCode::invalid_state, "task '" + id + "' is not claimed by you (or the lease expired)", id);
    }
    return t;
}

std::map<Mode, std::size_t> mode_targets(const StoreState& s) {
    std::map<Mode, std::size_t> target;
    for (const auto& r : s.runs) target[r.mode] += r.target_count;
    for (Mode m : kAllModes) {
        if (!target.count(m) || target[m] == 0) target[m] = ProjectStore::kDefaultModeTarget;
    }
    return target;
}

YesNoCount ynq_counts(const StoreState& s, Mode mode) {
    YesNoCount c;
    for (const auto& i : s.instances) {
        if (i.mode != mode || i.format != QuestionFormat::ynq || !i.ynq_polarity) continue;
        (*i.ynq_polarity == Polarity::yes ? c.yes : c.no)++;
    }
    return c;
}

void set_image_status(StoreState& s, const Json& payload, ImageStatus status) {
    const auto run_id = optional_string(payload, "run_id");
    const auto hash = optional_string(payload, "image_hash");
    for (auto& r : s.runs) {
        if (r.id != run_id) continue;
        for (auto& p : r.produced) {
            if (p.image_hash == hash) p.status = status;
        }
    }
}

}  // namespace

const VHInstance* StoreState::instance(const std::string& id) const {
    return find_ptr(instances, [&](const auto& i) { return i.id == id; });
}
const AnnotationTask* StoreState::task(const std::string& id) const {
    return find_ptr(tasks, [&](const auto& t) { return t.id == id; });
}
const GenerationRun* StoreState::run(const std::string& id) const {
    return find_ptr(runs, [&](const auto& r) { return r.id == id; });
}
const TextDescription* StoreState::description(const std::string& id) const {
    return find_ptr(descriptions, [&](const auto& d) { return d.id == id; });
}
const VHInstance* StoreState::ynq_for(const std::string& oeq_id) const {
    return find_ptr(instances, [&](const auto& i) { return i.format == QuestionFormat::ynq && i.links == oeq_id; });
}

Benchmark StoreState::benchmark(QuestionFormat format) const {
    Benchmark b;
    b.format = format;
    b.id = std::string(to_string(format));
    b.name = b.id;
    for (const auto& i : instances) {
        if (i.format == format) b.instances.push_back(i);
    }
    std::stable_sort(b.instances.begin(), b.instances.end(), [](const auto& a, const auto& c) {
        return std::pair(mode_index(a.mode), a.id) < std::pair(mode_index(c.mode), c.id);
    });
    return b;
}

Json to_json(const StoreState& s) {
    Json j;
    j["version"] = 1;
    j["next_seq"] = s.next_seq;
    j["finalized_modes"] = Json::array();
    for (Mode m : s.finalized_modes) j["finalized_modes"].push_back(to_string(m));
    auto list = [](const auto& v) {
        Json a = Json::array();
        for (const auto& x : v) a.push_back(to_json(x));
        return a;
    };
    j["instances"] = list(s.instances);
    j["descriptions"] = list(s.descriptions);
    j["outcomes"] = list(s.outcomes);
    j["runs"] = list(s.runs);
    j["tasks"] = list(s.tasks);
    j["human_verdicts"] = list(s.human_verdicts);
    j["labels"] = list(s.labels);
    return j;
}

StoreState store_state_from_json(const Json& j) {
    StoreState s;
    s.next_seq = j.value("next_seq", std::uint64_t{1});
    for (const auto& m : j.value("finalized_modes", Json::array())) s.finalized_modes.insert(parse_mode(m.get<std::string>()));
    auto each = [&](const char* key, auto&& fn) {
        if (!j.contains(key)) return;
        for (const auto& x : j[key]) fn(x);
    };
    each("instances", [&](const Json& x) { s.instances.push_back(instance_from_json(x)); });
    each("descriptions", [&](const Json& x) { s.descriptions.push_back(description_from_json(x)); });
    each("outcomes", [&](const Json& x) { s.outcomes.push_back(outcome_from_json(x)); });
    each("runs", [&](const Json& x) { s.runs.push_back(run_from_json(x)); });
    each("tasks", [&](const Json& x) { s.tasks.push_back(task_from_json(x)); });
    each("human_verdicts", [&](const Json& x) { s.human_verdicts.push_back(evaluation_from_json(x)); });
    each("labels", [&](const Json& x) { s.labels.push_back(label_from_json(x)); });
    return s;
}

ProjectStore::ProjectStore(std::filesystem::path root, Clock clock) : root_(std::move(root)), clock_(std::move(clock)) {
    if (!clock_) {
        clock_ = [] {
            return std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                .count();
        };
    }
    auto state = std::make_shared<StoreState>();
    if (!root_.empty()) {
        std::filesystem::create_directories(root_);
        auto file = root_ / "store.json";
        if (std::filesystem::exists(file)) *state = store_state_from_json(read_json_file(file));
    }
    state_ = std::move(state);
}

std::shared_ptr<const StoreState> ProjectStore::snapshot() const {
    std::lock_guard lock(read_mu_);
    return state_;
}

void ProjectStore::persist(const StoreState& s) {
    if (root_.empty()) return;  // in-memory store
    write_json_file(root_ / "store.json", to_json(s), 1);
}

void ProjectStore::mutate(const std::function<void(StoreState&)>& fn) {
    std::lock_guard writer(write_mu_);
    auto next = std::make_shared<StoreState>(*snapshot());
    fn(*next);
    persist(*next);
    std::lock_guard lock(read_mu_);
    state_ = std::move(next);
}

void ProjectStore::add_instances(const std::vector<VHInstance>& instances) {
    mutate([&](StoreState& s) {
        for (const auto& inst : instances) {
            validate(inst);
            if (s.instance(inst.id)) throw Error(ErrorCode::duplicate_id, "instance id already stored", inst.id);
            s.instances.push_back(inst);
        }
    });
}

VHInstance ProjectStore::convert_to_ynq(const std::string& oeq_id, const std::string& binary_question,
                                        Polarity answer) {
    VHInstance out;
    mutate([&](StoreState& s) {
        const auto* oeq = s.instance(oeq_id);
        if (!oeq) throw Error(ErrorCode::not_found, "no instance '" + oeq_id + "'", oeq_id);
        if (s.ynq_for(oeq_id)) {
            throw Error(ErrorCode::already_converted, "instance '" + oeq_id + "' already has a yes/no version", oeq_id);
        }
        if (s.finalized_modes.count(oeq->mode)) {
            throw Error(ErrorCode::invalid_state, std::string(to_string(oeq->mode)) + " is finalized", oeq_id);
        }
        std::string id = "ynq-" + oeq_id;
        if (s.instance(id)) id = fmt::format("ynq-{}-{}", oeq_id, s.next_seq++);
        out = bench::convert_to_ynq(*oeq, binary_question, answer, id);
        s.instances.push_back(out);
    });
    return out;
}

void ProjectStore::add_description(const TextDescription& d) {
    validate(d);
    mutate([&](StoreState& s) {
        if (s.description(d.id)) throw Error(ErrorCode::duplicate_id, "description id already stored", d.id);
        s.descriptions.push_back(d);
    });
}

void ProjectStore::upsert_outcomes(const std::vector<InitialInstanceOutcome>& outcomes) {
    mutate([&](StoreState& s) {
        for (const auto& o : outcomes) {
            auto it = std::find_if(s.outcomes.begin(), s.outcomes.end(),
                                   [&](const auto& x) { return x.instance.id == o.instance.id; });
            if (it == s.outcomes.end()) {
                s.outcomes.push_back(o);
            } else {
                *it = o;
            }
        }
    });
}

void ProjectStore::put_run(const GenerationRun& run) {
    mutate([&](StoreState& s) {
        auto it = std::find_if(s.runs.begin(), s.runs.end(), [&](const auto& r) { return r.id == run.id; });
        if (it == s.runs.end()) {
            s.runs.push_back(run);
        } else {
            *it = run;
        }
    });
}

std::map<Mode, ModeProgress> ProjectStore::progress() const {
    auto s = snapshot();
    auto targets = mode_targets(*s);
    std::map<Mode, ModeProgress> out;
    for (Mode m : kAllModes) {
        auto& p = out[m];
        p.target = targets[m];
        p.capacity_per_polarity = (p.target + 1) / 2;
        p.ynq = ynq_counts(*s, m);
        p.finalized = s->finalized_modes.count(m) > 0;
    }
    for (const auto& i : s->instances) {
        if (i.format == QuestionFormat::oeq) ++out[i.mode].oeq;
    }
    for (const auto& t : s->tasks) {
        if (t.kind == TaskKind::author_qa && t.state != TaskState::done && t.state != TaskState::discarded) {
            if (auto m = optional_string(t.payload, "mode"); !m.empty()) ++out[parse_mode(m)].open_tasks;
        }
    }
    return out;
}

void ProjectStore::finalize_mode(Mode mode) {
    mutate([&](StoreState& s) {
        auto c = ynq_counts(s, mode);
        if (!c.balanced()) {
            const auto needed = c.yes > c.no ? "no" : "yes";
            throw Error(ErrorCode::balance_violation,
                        fmt::format("{} has {} yes and {} no answers", to_string(mode), c.yes, c.no), needed);
        }
        s.finalized_modes.insert(mode);
    });
}

std::string ProjectStore::enqueue(TaskKind kind, Json payload, const std::string& dedupe_key) {
    std::string id;
    mutate([&](StoreState& s) {
        if (!dedupe_key.empty()) {
            for (const auto& t : s.tasks) {
                if (t.dedupe_key == dedupe_key) {
                    id = t.id;
                    return;
                }
            }
        }
        AnnotationTask t;
        t.seq = s.next_seq++;
        t.id = fmt::format("t{:06d}", t.seq);
        t.kind = kind;
        t.payload = std::move(payload);
        t.dedupe_key = dedupe_key;
        id = t.id;
        s.tasks.push_back(std::move(t));
    });
    return id;
}

AnnotationTask ProjectStore::claim_next(const std::string& annotator, const std::set<TaskKind>& kinds) {
    AnnotationTask out;
    mutate([&](StoreState& s) {
        const auto now = clock_();
        std::set<std::string> labeled;
        for (const auto& l : s.labels) {
            if (l.rater == annotator) labeled.insert(l.item);
        }
        for (const auto& t : s.tasks) {
            if (t.kind == TaskKind::agreement_label && lease_live(t, now) && t.claimant == annotator) {
                labeled.insert(optional_string(t.payload, "item"));
            }
        }
        AnnotationTask* pick = nullptr;
        for (auto& t : s.tasks) {
            if (!kinds.empty() && !kinds.count(t.kind)) continue;
            if (!claimable(t, now)) continue;
            if (t.kind == TaskKind::agreement_label && labeled.count(optional_string(t.payload, "item"))) continue;
            if (!pick || t.seq < pick->seq) pick = &t;
        }
        if (!pick) throw Error(ErrorCode::none_available, "no task available");
        pick->state = TaskState::claimed;
        pick->claimant = annotator;
        pick->lease_expiry_ms = now + lease_ms_;
        out = *pick;
    });
    return out;
}

AnnotationTask ProjectStore::claim(const std::string& task_id, const std::string& annotator) {
    AnnotationTask out;
    mutate([&](StoreState& s) {
        const auto now = clock_();
        auto& t = task_ref(s, task_id);
        const bool renew = lease_live(t, now) && t.claimant == annotator;
        if (!renew && !claimable(t, now)) {
            throw Error(lease_live(t, now) ? ErrorCode::unauthorized : ErrorCode::invalid_state,
                        "task '" + task_id + "' cannot be claimed", task_id);
        }
        t.state = TaskState::claimed;
        t.claimant = annotator;
        t.lease_expiry_ms = now + lease_ms_;
        out = t;
    });
    return out;
}

QaResult ProjectStore::submit_qa(const std::string& task_id, const std::string& annotator, const QaSubmission& qa) {
    QaResult out;
    mutate([&](StoreState& s) {
        auto& t = held_task(s, task_id, annotator, clock_(), {TaskKind::author_qa});
        auto blank = [](const std::string& x) { return x.find_first_not_of(" \t\r\n") == std::string::npos; };
        if (blank(qa.question) || blank(qa.reference_answer) || blank(qa.ynq_question)) {
            throw Error(ErrorCode::invalid_argument, "question, reference answer and yes/no question are required");
        }
        const Mode mode = parse_mode(require_string(t.payload, "mode"));
        if (s.finalized_modes.count(mode)) {
            throw Error(ErrorCode::invalid_state, std::string(to_string(mode)) + " is finalized");
        }
        const auto capacity = (mode_targets(s)[mode] + 1) / 2;
        const auto counts = ynq_counts(s, mode);
        const auto have = qa.ynq_answer == Polarity::yes ? counts.yes : counts.no;
        if (have >= capacity) {
            const auto needed = qa.ynq_answer == Polarity::yes ? "no" : "yes";
            throw Error(ErrorCode::balance_violation,
                        fmt::format("{} already has {} '{}' answers; needs: {}", to_string(mode), have,
                                    to_string(qa.ynq_answer), needed),
                        needed);
        }

        VHInstance oeq;
        oeq.id = "oeq-" + t.id;
        oeq.mode = mode;
        oeq.image_hash = require_string(t.payload, "image_hash");
        oeq.image_path = optional_string(t.payload, "image_path");
        oeq.question = qa.question;
        oeq.reference_answer = qa.reference_answer;
        oeq.format = QuestionFormat::oeq;
        oeq.provenance = Provenance::generated;
        validate(oeq);
        if (s.instance(oeq.id)) throw Error(ErrorCode::duplicate_id, "instance id already stored", oeq.id);
        auto ynq = bench::convert_to_ynq(oeq, qa.ynq_question, qa.ynq_answer, "ynq-" + t.id);
        s.instances.push_back(oeq);
        s.instances.push_back(ynq);

        t.state = TaskState::done;
        t.result = {{"oeq_id", oeq.id}, {"ynq_id", ynq.id}, {"annotator", annotator}};
        set_image_status(s, t.payload, ImageStatus::annotated);
        out = {oeq.id, ynq.id};
    });
    return out;
}

void ProjectStore::discard(const std::string& task_id, const std::string& annotator, const std::string& reason) {
    mutate([&](StoreState& s) {
        auto& existing = task_ref(s, task_id);
        if (existing.state == TaskState::discarded && existing.claimant == annotator) return;  // repeat discard
        auto& t = held_task(s, task_id, annotator, clock_(), {TaskKind::author_qa});
        t.state = TaskState::discarded;
        t.result = {{"reason", reason}, {"annotator", annotator}};
        set_image_status(s, t.payload, ImageStatus::discarded);
    });
}

void ProjectStore::submit_verdict(const std::string& task_id, const std::string& annotator, Verdict verdict,
                                  const std::string& detected_hallucination) {
    if (verdict != Verdict::correct && verdict != Verdict::incorrect) {
        throw Error(ErrorCode::invalid_argument, "verdict must be correct or incorrect");
    }
    mutate([&](StoreState& s) {
        auto& t = held_task(s, task_id, annotator, clock_(),
                            {TaskKind::verify_initial, TaskKind::adjudicate_oeq, TaskKind::agreement_label});
        const auto instance_id = optional_string(t.payload, "instance_id");
        if (t.kind == TaskKind::verify_initial) {
            if (verdict == Verdict::incorrect &&
                detected_hallucination.find_first_not_of(" \t\r\n") == std::string::npos) {
                throw Error(ErrorCode::missing_slot, "an incorrect response needs the detected hallucination text",
                            "detected_hallucination");
            }
            auto it = std::find_if(s.outcomes.begin(), s.outcomes.end(),
                                   [&](const auto& o) { return o.instance.id == instance_id; });
            if (it == s.outcomes.end()) throw Error(ErrorCode::not_found, "no initial outcome", instance_id);
            it->verdict = verdict == Verdict::incorrect ? OutcomeVerdict::successful : OutcomeVerdict::unsuccessful;
            it->detected_or_hypothetical_hallucination = detected_hallucination;
        } else if (t.kind == TaskKind::adjudicate_oeq) {
            EvaluationRecord r;
            r.instance_id = instance_id;
            r.mode = parse_mode(require_string(t.payload, "mode"));
            r.endpoint_name = optional_string(t.payload, "endpoint");
            r.response_text = optional_string(t.payload, "response");
            r.verdict = verdict;
            r.verdict_source = VerdictSource::human;
            r.adjudicator_ids = {annotator};
            s.human_verdicts.push_back(std::move(r));
        } else {
            s.labels.push_back({optional_string(t.payload, "item"), annotator, std::string(to_string(verdict))});
        }
        t.state = TaskState::done;
        t.result = {{"verdict", to_string(verdict)}, {"annotator", annotator}};
        if (!detected_hallucination.empty()) t.result["detected_hallucination"] = detected_hallucination;
    });
}

}  // namespace vhbench
