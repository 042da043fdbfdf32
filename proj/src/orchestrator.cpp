// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vhbench/orchestrator.hpp"

#include "vhbench/error.hpp"
#include "vhbench/hashing.hpp"
#include "vhbench/prompts.hpp"
#include "vhbench/store.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace vhbench::orch {

std::vector<InitialInstanceOutcome> select_outcomes(Mode mode, const std::vector<InitialInstanceOutcome>& outcomes,
                                                    std::size_t n) {
    std::vector<InitialInstanceOutcome> good, bad;
    for (const auto& o : outcomes) {
        if (o.instance.mode != mode || !o.verdict) continue;
        (*o.verdict == OutcomeVerdict::successful ? good : bad).push_back(o);
    }
    auto by_id = [](const auto& a, const auto& b) { return a.instance.id < b.instance.id; };
    std::sort(good.begin(), good.end(), by_id);
    std::sort(bad.begin(), bad.end(), by_id);
    std::vector<InitialInstanceOutcome> out;
    for (auto& o : good) {
        if (out.size() == n) break;
        out.push_back(std::move(o));
    }
    for (auto& o : bad) {
        if (out.size() == n) break;
        out.push_back(std::move(o));
    }
    return out;
}

DescribeResult build_descriptions(Mode mode, const std::vector<InitialInstanceOutcome>& outcomes, std::size_t n,
                                  gateway::Gateway& gw, const std::string& endpoint,
                                  const std::string& mode_definition) {
    if (n == 0) throw Error(ErrorCode::invalid_argument, "n must be positive");
    DescribeResult result;
    auto picked = select_outcomes(mode, outcomes, n);
    if (picked.empty()) {
        throw Error(ErrorCode::invalid_argument,
                    fmt::format("no verified initial outcomes for {}", to_string(mode)), std::string(to_string(mode)));
    }
    if (picked.size() < n) {
        result.warnings.push_back(fmt::format("{}: only {} verified outcomes for {} descriptions", to_string(mode),
                                              picked.size(), n));
    }

    std::vector<std::string> bodies;
    for (const auto& o : picked) {
        const bool successful = *o.verdict == OutcomeVerdict::successful;
        const std::string& hallucination = o.detected_or_hypothetical_hallucination;
        std::string response = successful ? o.testing_model_response : o.hypothetical_response;
        if (response.empty()) response = hallucination;
        auto prompt = prompts::render_description_prompt(o.instance, response, hallucination, successful);
        std::vector<ImageRecord> images;
        if (prompt.attaches_image) images.push_back(gw.images().get(o.instance.image_hash));

        TextDescription d;
        d.id = fmt::format("desc-{}-{}", to_string(mode), o.instance.id);
        d.mode = mode;
        d.kind = DescriptionKind::single;
        d.body = gw.chat(endpoint, prompt.text, images);
        d.source_instance_ids = {o.instance.id};
        bodies.push_back(d.body);
        result.singles.push_back(std::move(d));
    }

    const std::string def = mode_definition.empty() ? std::string(default_definition(mode)) : mode_definition;
    auto integration = prompts::render_integration_prompt(mode, def, bodies);
    auto& in = result.integrated;
    in.mode = mode;
    in.kind = DescriptionKind::integrated;
    in.body = gw.chat(endpoint, integration.text, {});
    in.id = fmt::format("integrated-{}-{}", to_string(mode), sha256_hex(in.body).substr(0, 12));
    for (const auto& s : result.singles) in.source_description_ids.push_back(s.id);
    return result;
}

GenerateResult generate_images(GenerationRun& run, const TextDescription& description, gateway::Gateway& gw,
                               std::size_t count) {
    GenerateResult result;
    if (description.kind != DescriptionKind::integrated) {
        throw Error(ErrorCode::invalid_argument, "image generation needs an integrated description", description.id);
    }
    const auto left = run.ceiling() > run.attempts ? run.ceiling() - run.attempts : 0;
    if (count > left) {
        result.warnings.push_back(
            fmt::format("run {}: attempt ceiling {} reached; generating {} of {}", run.id, run.ceiling(), left, count));
        count = left;
    }
    if (count == 0) return result;

    std::vector<std::string> prompts_to_send;
    std::string prompt_id;
    if (run.rewrite_endpoint.empty()) {
        prompts_to_send.assign(count, prompts::render_image_prompt(description, false).text);
        prompt_id = std::string(prompts::to_string(prompts::PromptId::image_generation));
    } else {
        auto request = prompts::render_prompt_list_request(description, count);
        // The attempt counter keeps later requests for more prompts distinct.
        auto reply = gw.chat(run.rewrite_endpoint, request.text, {}, static_cast<int>(run.attempts));
        prompts_to_send = prompts::parse_line_list(reply, count, false);
        prompt_id = std::string(prompts::to_string(prompts::PromptId::t2i_prompt_request));
    }

    for (const auto& p : prompts_to_send) {
        const int sample = static_cast<int>(run.attempts++);
        auto rec = gw.generate_image(run.image_endpoint, p, prompt_id, sample);
        const bool seen = std::any_of(run.produced.begin(), run.produced.end(),
                                      [&](const RunImage& x) { return x.image_hash == rec.content_hash; });
        if (seen) {
            result.warnings.push_back("duplicate image " + rec.content_hash + " skipped");
            continue;
        }
        run.produced.push_back({rec.content_hash, ImageStatus::pending_annotation, p});
        result.images.push_back(std::move(rec));
    }
    return result;
}

GenerateResult replenish(GenerationRun& run, const TextDescription& description, gateway::Gateway& gw) {
    const auto live = run.count(ImageStatus::annotated) + run.count(ImageStatus::pending_annotation);
    if (live >= run.target_count) return {};
    return generate_images(run, description, gw, run.target_count - live);
}

Assistance assist_existence_objects(gateway::Gateway& gw, const std::string& endpoint, const ImageRecord& image) {
    Assistance a;
    try {
        auto prompt = prompts::render_nonexistent_object_prompt();
        a.text = gw.chat(endpoint, prompt.text, {image});
        a.available = true;
    } catch (const std::exception& e) {
        a.text = std::string(kAssistanceUnavailable) + ": " + e.what();
    }
    return a;
}

std::vector<std::string> enqueue_annotation(ProjectStore& store, const GenerationRun& run, gateway::Gateway& gw,
                                            const EnqueueOptions& options) {
    std::vector<std::string> ids;
    Json templates = Json::array();
    for (const auto& t : prompts::question_templates(run.mode)) {
        templates.push_back({{"index", t.index}, {"text", t.body.display()}, {"slots", t.body.required_slots()}});
    }
    auto snapshot = store.snapshot();
    for (const auto& img : run.produced) {
        if (img.status != ImageStatus::pending_annotation) continue;
        const auto key = "author_qa:" + run.id + ":" + img.image_hash;
        auto existing = std::find_if(snapshot->tasks.begin(), snapshot->tasks.end(),
                                     [&](const AnnotationTask& t) { return t.dedupe_key == key; });
        if (existing != snapshot->tasks.end()) {
            ids.push_back(existing->id);
            continue;
        }
        const auto rec = gw.images().get(img.image_hash);
        Json payload = {{"mode", to_string(run.mode)},
                        {"run_id", run.id},
                        {"image_hash", img.image_hash},
                        {"image_path", rec.storage_path},
                        {"generation_prompt", img.prompt},
                        {"templates", templates}};
        if (run.mode == Mode::existence && !options.assist_endpoint.empty()) {
            auto help = assist_existence_objects(gw, options.assist_endpoint, rec);
            payload["assistance"] = {{"available", help.available}, {"text", help.text}};
        }
        ids.push_back(store.enqueue(TaskKind::author_qa, std::move(payload), key));
    }
    return ids;
}

}  // namespace vhbench::orch
