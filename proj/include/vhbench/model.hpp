// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vhbench/json.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vhbench {

/// The eight visual-hallucination modes, in canonical report order.
enum class Mode { existence, shape, color, orientation, ocr, size, position, counting };

/// Individual modes concern one object's property; group modes compare objects.
enum class ModeCategory { individual, group };

inline constexpr std::array<Mode, 8> kAllModes = {
    Mode::existence, Mode::shape, Mode::color,    Mode::orientation,
    Mode::ocr,       Mode::size,  Mode::position, Mode::counting,
};

std::string_view to_string(Mode mode);
std::string_view to_string(ModeCategory category);
ModeCategory category_of(Mode mode);

/// Case-insensitive, whitespace-trimmed lookup of a canonical mode name.
/// Throws Error{unknown_mode} listing the valid names.
Mode parse_mode(std::string_view text);

/// Title used in prompts and tables, e.g. "Counting VH".
std::string display_name(Mode mode);

/// Column header used in report tables, e.g. "OCR" or "Counting".
std::string_view table_label(Mode mode);

/// Short built-in definition of what an adjudicator judges for the mode.
/// Callers may substitute their own wording when rendering prompts.
std::string_view default_definition(Mode mode);

std::size_t mode_index(Mode mode);

enum class ImageSource { dataset, generated };
enum class QuestionFormat { oeq, ynq };
enum class Polarity { yes, no };
enum class Provenance { initial, generated };
enum class DescriptionKind { single, integrated };

std::string_view to_string(ImageSource v);
std::string_view to_string(QuestionFormat v);
std::string_view to_string(Polarity v);
std::string_view to_string(Provenance v);
std::string_view to_string(DescriptionKind v);

ImageSource parse_image_source(std::string_view s);
QuestionFormat parse_format(std::string_view s);
Polarity parse_polarity(std::string_view s);
Provenance parse_provenance(std::string_view s);
DescriptionKind parse_description_kind(std::string_view s);

struct GeneratorMeta {
    std::string model;
    std::string prompt_id;
    // Some endpoints rewrite prompts before generating; what they report back is kept for audit.
    std::optional<std::string> revised_prompt;

    friend bool operator==(const GeneratorMeta&, const GeneratorMeta&) = default;
};

struct ImageRecord {
    std::string id;
    ImageSource source = ImageSource::dataset;
    std::string content_hash;  // lowercase hex SHA-256 of the stored bytes
    std::string storage_path;  // relative to the image store root
    std::optional<GeneratorMeta> generator_meta;

    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct VHInstance {
    std::string id;
    Mode mode = Mode::existence;
    std::string image_hash;
    std::string image_path;
    std::string question;
    std::string reference_answer;
    QuestionFormat format = QuestionFormat::oeq;
    std::optional<Polarity> ynq_polarity;
    Provenance provenance = Provenance::generated;
    std::optional<std::string> links;  // source OEQ id for a converted YNQ instance

    friend bool operator==(const VHInstance&, const VHInstance&) = default;
};

/// Throws Error{schema_violation} when the format/polarity/answer invariants do not hold.
void validate(const VHInstance& instance);

struct YesNoCount {
    std::size_t yes = 0;
    std::size_t no = 0;

    /// |yes - no| <= 1; for an even total this forces exact equality.
    bool balanced() const { return (yes > no ? yes - no : no - yes) <= 1; }
    friend bool operator==(const YesNoCount&, const YesNoCount&) = default;
};

struct BalanceReport {
    std::map<Mode, YesNoCount> per_mode;
    YesNoCount overall;
    bool balanced = true;
};

struct Benchmark {
    std::string id;
    std::string name;
    QuestionFormat format = QuestionFormat::oeq;
    std::vector<VHInstance> instances;

    std::map<Mode, std::size_t> per_mode_counts() const;
};

/// Throws Error{schema_violation} if any instance is invalid, has the wrong
/// format, or duplicates an id.
void validate(const Benchmark& benchmark);

/// Yes/no tallies for a YNQ benchmark. Only instances with a polarity count.
BalanceReport balance_of(const Benchmark& benchmark);

struct TextDescription {
    std::string id;
    Mode mode = Mode::existence;
    std::string body;
    DescriptionKind kind = DescriptionKind::single;
    std::vector<std::string> source_instance_ids;
    std::vector<std::string> source_description_ids;

    friend bool operator==(const TextDescription&, const TextDescription&) = default;
};

void validate(const TextDescription& description);

Json to_json(const ImageRecord& image);
Json to_json(const VHInstance& instance);
Json to_json(const TextDescription& description);

ImageRecord image_from_json(const Json& j);
VHInstance instance_from_json(const Json& j);
TextDescription description_from_json(const Json& j);

}  // namespace vhbench
