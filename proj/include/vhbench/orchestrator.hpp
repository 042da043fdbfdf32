// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vhbench/gateway.hpp"
#include "vhbench/model.hpp"
#include "vhbench/records.hpp"

#include <string>
#include <vector>

namespace vhbench {
class ProjectStore;
}

namespace vhbench::orch {

/// Outcomes that feed descriptions: verified outcomes of `mode`, successful
/// ones first (lowest instance id first), topped up with unsuccessful ones.
std::vector<InitialInstanceOutcome> select_outcomes(Mode mode, const std::vector<InitialInstanceOutcome>& outcomes,
                                                    std::size_t n);

struct DescribeResult {
    TextDescription integrated;
    std::vector<TextDescription> singles;
    std::vector<std::string> warnings;
};

/// One description call per selected outcome (with its image), then one
/// integration call over all of them.
DescribeResult build_descriptions(Mode mode, const std::vector<InitialInstanceOutcome>& outcomes, std::size_t n,
                                  gateway::Gateway& gw, const std::string& endpoint,
                                  const std::string& mode_definition = {});

struct GenerateResult {
    std::vector<ImageRecord> images;
    std::vector<std::string> warnings;
};

/// Issues up to `count` image generations for `run`, never past its attempt
/// ceiling. Direct mode sends the image prompt `count` times; when the run has
/// a rewrite endpoint, one chat call first asks for `count` prompts. New images
/// are appended to run.produced as pending_annotation.
GenerateResult generate_images(GenerationRun& run, const TextDescription& description, gateway::Gateway& gw,
                               std::size_t count);

/// Generates replacements until annotated plus pending images reach the
/// target, within the attempt ceiling.
GenerateResult replenish(GenerationRun& run, const TextDescription& description, gateway::Gateway& gw);

inline constexpr std::string_view kAssistanceUnavailable = "assistance unavailable";

struct Assistance {
    bool available = false;
    std::string text;  // model suggestion, or the unavailable notice with the reason
};

/// Non-existent object suggestions for an existence-mode image. Failures are
/// reported, not thrown.
Assistance assist_existence_objects(gateway::Gateway& gw, const std::string& endpoint, const ImageRecord& image);

struct EnqueueOptions {
    std::string assist_endpoint;  // existence runs only; empty disables assistance
};

/// One author_qa task per pending image. Idempotent per (run, image).
std::vector<std::string> enqueue_annotation(ProjectStore& store, const GenerationRun& run, gateway::Gateway& gw,
                                            const EnqueueOptions& options = {});

}  // namespace vhbench::orch
