// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vhbench/model.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vhbench::prompts {

enum class PromptId {
    desc_from_successful,
    desc_from_unsuccessful,
    desc_integration,
    image_generation,
    t2i_prompt_request,
    nonexistent_object,
    counting_rewrite,
    question_template,
};

std::string_view to_string(PromptId id);
PromptId parse_prompt_id(std::string_view text);

using Bindings = std::map<std::string, std::string>;

/// Text with square-bracket slots.
///
///   [name]        slot bound under "name"
///   [key|label]   slot bound under "key", shown as [label]
///   [[ and ]]     literal brackets
class Template {
public:
    /// Throws Error{parse_error} on an unterminated or empty slot, or a stray "]".
    static Template parse(std::string_view source);

    /// Slot keys in order of first appearance.
    const std::vector<std::string>& required_slots() const { return slots_; }

    /// Substitutes every slot. Throws missing_slot when a slot is unbound or
    /// bound to an empty string, extraneous_binding when a key is not a slot.
    std::string render(const Bindings& bindings) const;

    /// The template as a person reads it: slots as [label], escapes resolved.
    std::string display() const;

    /// Bindings that map every slot to its own displayed placeholder, so that
    /// render(identity_bindings()) == display().
    Bindings identity_bindings() const;

private:
    struct Segment {
        bool is_slot = false;
        std::string text;  // literal text, or slot key
        std::string label;
    };
    std::vector<Segment> segments_;
    std::vector<std::string> slots_;
};

struct PromptTemplate {
    PromptId id;
    Template body;
    bool attaches_image = false;
};

/// One of the seven fixed instruction prompts. Throws invalid_argument for
/// PromptId::question_template.
const PromptTemplate& figure_prompt(PromptId id);

/// All fixed prompt ids in asset order.
const std::vector<PromptId>& figure_prompt_ids();

struct QuestionTemplate {
    Mode mode = Mode::existence;
    int index = 0;  // 1-based, per mode
    Template body;
};

const std::vector<QuestionTemplate>& question_templates();
std::vector<QuestionTemplate> question_templates(Mode mode);
/// Throws not_found.
const QuestionTemplate& question_template(Mode mode, int index);

/// Rendered prompt text. The image, when there is one, travels as a separate
/// attachment; the text never carries an image marker.
struct RenderedPrompt {
    std::string text;
    bool attaches_image = false;

    /// text prefixed by an "[image]" paragraph when an image is attached.
    std::string display() const;
};

RenderedPrompt render_description_prompt(const VHInstance& instance, std::string_view response,
                                         std::string_view detected_hallucination, bool successful);

RenderedPrompt render_integration_prompt(Mode mode, std::string_view mode_definition,
                                         const std::vector<std::string>& descriptions);

RenderedPrompt render_image_prompt(const TextDescription& description, bool for_llm_rewrite);

/// Image-generation prompt request with a trailing line asking for exactly
/// `count` prompts, one per line.
RenderedPrompt render_prompt_list_request(const TextDescription& description, std::size_t count);

RenderedPrompt render_nonexistent_object_prompt();

struct CountingItem {
    std::string question;
    std::string number;
};

/// Rewrite instruction followed by one numbered "Question: ... Ground-truth
/// number: ..." line per item.
RenderedPrompt render_counting_rewrite_prompt(const std::vector<CountingItem>& items);

std::string render_question(const QuestionTemplate& tmpl, const Bindings& bindings);

/// Non-empty lines of a model reply with any leading "1." / "1)" / "-"
/// enumeration removed. With `exact`, a count other than `expected` is an
/// error; otherwise fewer is an error and extra lines are dropped.
/// Throws Error{parse_error}.
std::vector<std::string> parse_line_list(std::string_view reply, std::size_t expected, bool exact);

/// Integrated descriptions shipped with the library, one per mode.
std::vector<TextDescription> builtin_descriptions();

struct LintReport {
    std::size_t checked = 0;
    std::vector<std::string> problems;
    bool ok() const { return problems.empty(); }
};

/// Verifies embedded assets against the embedded checksum manifest, parses
/// every template, checks slot names, and when given, compares an on-disk
/// asset tree with the manifest and renders against golden files.
LintReport lint(const std::optional<std::filesystem::path>& asset_dir,
                const std::optional<std::filesystem::path>& golden_dir);

/// The display form of every question template in golden-file layout.
std::string question_template_listing();

}  // namespace vhbench::prompts
