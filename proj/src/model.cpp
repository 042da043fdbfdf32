// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vhbench/model.hpp"

#include "vhbench/error.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace vhbench {

namespace {

constexpr std::array<std::string_view, 8> kModeNames = {
    "existence", "shape", "color", "orientation", "ocr", "size", "position", "counting",
};

constexpr std::array<std::string_view, 8> kModeLabels = {
    "Existence", "Shape", "Color", "Orientation", "OCR", "Size", "Position", "Counting",
};

constexpr std::array<std::string_view, 8> kModeDefinitions = {
    "the model either leaves out an object that is present in the image or mentions an object that is not there",
    "the model misstates the shape of at least one object in the image",
    "the model misidentifies the color of at least one object in the image",
    "the model misjudges the direction in which at least one object in the image is facing",
    "the model misreads at least one character of the text shown in the image",
    "the model compares the relative sizes of objects in the image incorrectly",
    "the model gets the spatial relationship between objects in the image wrong",
    "the model reports the wrong number of objects in the image",
};

std::string lower_trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    std::string out(s.substr(b, e - b + 1));
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

template <class E, std::size_t N>
E parse_enum(std::string_view text, const std::array<std::string_view, N>& names, const char* what) {
    for (std::size_t i = 0; i < N; ++i) {
        if (names[i] == text) return static_cast<E>(i);
    }
    std::string valid;
    for (auto n : names) {
        if (!valid.empty()) valid += ", ";
        valid += n;
    }
    throw Error(ErrorCode::schema_violation,
                std::string("invalid ") + what + " '" + std::string(text) + "'", "expected one of: " + valid);
}

constexpr std::array<std::string_view, 2> kSources = {"dataset", "generated"};
constexpr std::array<std::string_view, 2> kFormats = {"OEQ", "YNQ"};
constexpr std::array<std::string_view, 2> kPolarities = {"yes", "no"};
constexpr std::array<std::string_view, 2> kProvenances = {"initial", "generated"};
constexpr std::array<std::string_view, 2> kKinds = {"single", "integrated"};

Json string_array(const std::vector<std::string>& v) {
    Json a = Json::array();
    for (const auto& s : v) a.push_back(s);
    return a;
}

std::vector<std::string> string_vector(const Json& j, const char* key) {
    std::vector<std::string> out;
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return out;
    if (!it->is_array()) {
        throw Error(ErrorCode::schema_violation, std::string("field '") + key + "' must be an array");
    }
    for (const auto& v : *it) {
        if (!v.is_string()) {
            throw Error(ErrorCode::schema_violation, std::string("field '") + key + "' must hold strings");
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

}  // namespace

std::size_t mode_index(Mode mode) { return static_cast<std::size_t>(mode); }

std::string_view to_string(Mode mode) { return kModeNames[mode_index(mode)]; }

std::string_view to_string(ModeCategory category) {
    return category == ModeCategory::individual ? "individual" : "group";
}

ModeCategory category_of(Mode mode) {
    switch (mode) {
        case Mode::size:
        case Mode::position:
        case Mode::counting:
            return ModeCategory::group;
        default:
            return ModeCategory::individual;
    }
}

Mode parse_mode(std::string_view text) {
    const std::string key = lower_trim(text);
    for (std::size_t i = 0; i < kModeNames.size(); ++i) {
        if (kModeNames[i] == key) return static_cast<Mode>(i);
    }
    std::string valid;
    for (auto n : kModeNames) {
        if (!valid.empty()) valid += ", ";
        valid += n;
    }
    throw Error(ErrorCode::unknown_mode, "unknown mode '" + std::string(text) + "'",
                "valid modes: " + valid);
}

std::string display_name(Mode mode) { return std::string(table_label(mode)) + " VH"; }

std::string_view table_label(Mode mode) { return kModeLabels[mode_index(mode)]; }

std::string_view default_definition(Mode mode) { return kModeDefinitions[mode_index(mode)]; }

std::string_view to_string(ImageSource v) { return kSources[static_cast<std::size_t>(v)]; }
std::string_view to_string(QuestionFormat v) { return kFormats[static_cast<std::size_t>(v)]; }
std::string_view to_string(Polarity v) { return kPolarities[static_cast<std::size_t>(v)]; }
std::string_view to_string(Provenance v) { return kProvenances[static_cast<std::size_t>(v)]; }
std::string_view to_string(DescriptionKind v) { return kKinds[static_cast<std::size_t>(v)]; }

ImageSource parse_image_source(std::string_view s) {
    return parse_enum<ImageSource>(s, kSources, "image source");
}
QuestionFormat parse_format(std::string_view s) {
    std::string upper(s);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return parse_enum<QuestionFormat>(upper, kFormats, "format");
}
Polarity parse_polarity(std::string_view s) {
    return parse_enum<Polarity>(lower_trim(s), kPolarities, "polarity");
}
Provenance parse_provenance(std::string_view s) {
    return parse_enum<Provenance>(s, kProvenances, "provenance");
}
DescriptionKind parse_description_kind(std::string_view s) {
    return parse_enum<DescriptionKind>(s, kKinds, "description kind");
}

void validate(const VHInstance& instance) {
    auto fail = [&](const std::string& what) {
        throw Error(ErrorCode::schema_violation, "instance '" + instance.id + "': " + what);
    };
    if (instance.id.empty()) fail("empty id");
    if (instance.question.empty()) fail("empty question");
    if (instance.reference_answer.empty()) fail("empty reference_answer");
    if (instance.format == QuestionFormat::ynq) {
        if (!instance.ynq_polarity) fail("YNQ instance without ynq_polarity");
        if (instance.reference_answer != to_string(*instance.ynq_polarity)) {
            fail("YNQ reference_answer must be exactly \"yes\" or \"no\" and match ynq_polarity");
        }
    } else if (instance.ynq_polarity) {
        fail("OEQ instance must not carry ynq_polarity");
    }
}

std::map<Mode, std::size_t> Benchmark::per_mode_counts() const {
    std::map<Mode, std::size_t> counts;
    for (Mode m : kAllModes) counts[m] = 0;
    for (const auto& inst : instances) ++counts[inst.mode];
    return counts;
}

void validate(const Benchmark& benchmark) {
    std::set<std::string> seen;
    for (const auto& inst : benchmark.instances) {
        validate(inst);
        if (inst.format != benchmark.format) {
            throw Error(ErrorCode::schema_violation,
                        "instance '" + inst.id + "' has format " + std::string(to_string(inst.format)) +
                            " in a " + std::string(to_string(benchmark.format)) + " benchmark");
        }
        if (!seen.insert(inst.id).second) {
            throw Error(ErrorCode::duplicate_id, "duplicate instance id '" + inst.id + "'");
        }
    }
}

BalanceReport balance_of(const Benchmark& benchmark) {
    BalanceReport report;
    for (Mode m : kAllModes) report.per_mode[m] = {};
    for (const auto& inst : benchmark.instances) {
        if (!inst.ynq_polarity) continue;
        auto& c = report.per_mode[inst.mode];
        if (*inst.ynq_polarity == Polarity::yes) {
            ++c.yes;
            ++report.overall.yes;
        } else {
            ++c.no;
            ++report.overall.no;
        }
    }
    report.balanced = report.overall.balanced();
    for (const auto& [mode, c] : report.per_mode) {
        report.balanced = report.balanced && c.balanced();
    }
    return report;
}

void validate(const TextDescription& d) {
    auto fail = [&](const std::string& what) {
        throw Error(ErrorCode::schema_violation, "description '" + d.id + "': " + what);
    };
    if (d.id.empty()) fail("empty id");
    if (d.body.empty()) fail("empty body");
    if (d.kind == DescriptionKind::single) {
        if (d.source_instance_ids.size() != 1) fail("a single description needs exactly one source instance");
        if (!d.source_description_ids.empty()) fail("a single description cannot cite other descriptions");
    } else if (!d.source_instance_ids.empty()) {
        fail("an integrated description cites descriptions, not instances");
    }
}

Json to_json(const ImageRecord& image) {
    Json j;
    j["id"] = image.id;
    j["source"] = to_string(image.source);
    j["content_hash"] = image.content_hash;
    j["storage_path"] = image.storage_path;
    if (image.generator_meta) {
        Json g;
        g["model"] = image.generator_meta->model;
        g["prompt_id"] = image.generator_meta->prompt_id;
        if (image.generator_meta->revised_prompt) g["revised_prompt"] = *image.generator_meta->revised_prompt;
        j["generator_meta"] = std::move(g);
    }
    return j;
}

ImageRecord image_from_json(const Json& j) {
    ImageRecord r;
    r.id = require_string(j, "id");
    r.source = parse_image_source(require_string(j, "source"));
    r.content_hash = require_string(j, "content_hash");
    r.storage_path = require_string(j, "storage_path");
    if (auto it = j.find("generator_meta"); it != j.end() && !it->is_null()) {
        GeneratorMeta g;
        g.model = require_string(*it, "model");
        g.prompt_id = optional_string(*it, "prompt_id");
        if (auto rp = it->find("revised_prompt"); rp != it->end() && rp->is_string()) {
            g.revised_prompt = rp->get<std::string>();
        }
        r.generator_meta = std::move(g);
    }
    return r;
}

Json to_json(const VHInstance& inst) {
    Json j;
    j["id"] = inst.id;
    j["mode"] = to_string(inst.mode);
    j["image_hash"] = inst.image_hash;
    j["image_path"] = inst.image_path;
    j["question"] = inst.question;
    j["reference_answer"] = inst.reference_answer;
    j["format"] = to_string(inst.format);
    if (inst.ynq_polarity) j["ynq_polarity"] = to_string(*inst.ynq_polarity);
    j["provenance"] = to_string(inst.provenance);
    if (inst.links) j["links"] = *inst.links;
    return j;
}

VHInstance instance_from_json(const Json& j) {
    VHInstance inst;
    inst.id = require_string(j, "id");
    inst.mode = parse_mode(require_string(j, "mode"));
    inst.image_hash = require_string(j, "image_hash");
    inst.image_path = optional_string(j, "image_path");
    inst.question = require_string(j, "question");
    inst.reference_answer = require_string(j, "reference_answer");
    inst.format = parse_format(require_string(j, "format"));
    if (auto p = optional_string(j, "ynq_polarity"); !p.empty()) inst.ynq_polarity = parse_polarity(p);
    inst.provenance = parse_provenance(optional_string(j, "provenance", "generated"));
    if (auto l = optional_string(j, "links"); !l.empty()) inst.links = l;
    validate(inst);
    return inst;
}

Json to_json(const TextDescription& d) {
    Json j;
    j["id"] = d.id;
    j["mode"] = to_string(d.mode);
    j["kind"] = to_string(d.kind);
    j["body"] = d.body;
    j["source_instance_ids"] = string_array(d.source_instance_ids);
    j["source_description_ids"] = string_array(d.source_description_ids);
    return j;
}

TextDescription description_from_json(const Json& j) {
    TextDescription d;
    d.id = require_string(j, "id");
    d.mode = parse_mode(require_string(j, "mode"));
    d.kind = parse_description_kind(require_string(j, "kind"));
    d.body = require_string(j, "body");
    d.source_instance_ids = string_vector(j, "source_instance_ids");
    d.source_description_ids = string_vector(j, "source_description_ids");
    validate(d);
    return d;
}

}  // namespace vhbench
