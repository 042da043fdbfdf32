// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vhbench/prompts.hpp"

#include "vhbench/assets.hpp"
#include "vhbench/error.hpp"
#include "vhbench/fsutil.hpp"
#include "vhbench/hashing.hpp"
#include "vhbench/json.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <sstream>

namespace vhbench::prompts {

namespace {

struct PromptInfo {
    PromptId id;
    std::string_view name;
    bool attaches_image;
};

constexpr std::array<PromptInfo, 7> kFigurePrompts = {{
    {PromptId::desc_from_successful, "desc_from_successful", true},
    {PromptId::desc_from_unsuccessful, "desc_from_unsuccessful", true},
    {PromptId::desc_integration, "desc_integration", false},
    {PromptId::image_generation, "image_generation", false},
    {PromptId::t2i_prompt_request, "t2i_prompt_request", false},
    {PromptId::nonexistent_object, "nonexistent_object", true},
    {PromptId::counting_rewrite, "counting_rewrite", false},
}};

const std::set<std::string> kQuestionSlots = {"object", "property", "n", "WHERE", "object A", "object B",
                                              "reference object"};

constexpr std::string_view kManifestPath = "MANIFEST.sha256";
constexpr std::string_view kQuestionAsset = "prompts/question_templates.tsv";
constexpr std::string_view kDescriptionAsset = "descriptions/integrated.jsonl";

std::string_view strip_final_newline(std::string_view s) {
    if (!s.empty() && s.back() == '\n') s.remove_suffix(1);
    return s;
}

std::string_view asset_or_throw(std::string_view path) {
    auto a = assets::find(path);
    if (!a) throw Error(ErrorCode::not_found, "embedded asset missing", std::string(path));
    return *a;
}

std::string asset_path(PromptId id) {
    return "prompts/" + std::string(to_string(id)) + ".txt";
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < text.size()) lines.emplace_back(text.substr(start));
            break;
        }
        lines.emplace_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

struct Registry {
    std::vector<PromptTemplate> figures;
    std::vector<QuestionTemplate> questions;
};

std::vector<QuestionTemplate> parse_question_tsv(std::string_view text) {
    std::vector<QuestionTemplate> out;
    std::size_t line_no = 0;
    for (const auto& line : split_lines(text)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto tab = line.find('\t');
        auto sp = line.find(' ');
        if (tab == std::string::npos || sp == std::string::npos || sp > tab) {
            throw Error(ErrorCode::parse_error, "question template line " + std::to_string(line_no) +
                                                    " is not '<mode> <index>\\t<body>'");
        }
        QuestionTemplate q;
        q.mode = parse_mode(line.substr(0, sp));
        q.index = std::stoi(line.substr(sp + 1, tab - sp - 1));
        q.body = Template::parse(line.substr(tab + 1));
        out.push_back(std::move(q));
    }
    return out;
}

const Registry& registry() {
    static const Registry reg = [] {
        Registry r;
        for (const auto& info : kFigurePrompts) {
            auto text = strip_final_newline(asset_or_throw(asset_path(info.id)));
            r.figures.push_back({info.id, Template::parse(text), info.attaches_image});
        }
        r.questions = parse_question_tsv(asset_or_throw(kQuestionAsset));
        return r;
    }();
    return reg;
}

RenderedPrompt render_figure(PromptId id, const Bindings& bindings) {
    const auto& p = figure_prompt(id);
    return {p.body.render(bindings), p.attaches_image};
}

}  // namespace

std::string_view to_string(PromptId id) {
    for (const auto& info : kFigurePrompts) {
        if (info.id == id) return info.name;
    }
    return "question_template";
}

PromptId parse_prompt_id(std::string_view text) {
    for (const auto& info : kFigurePrompts) {
        if (info.name == text) return info.id;
    }
    if (text == "question_template") return PromptId::question_template;
    throw Error(ErrorCode::invalid_argument, "unknown prompt id", std::string(text));
}

Template Template::parse(std::string_view source) {
    Template t;
    std::string literal;
    auto flush = [&] {
        if (!literal.empty()) t.segments_.push_back({false, std::move(literal), {}});
        literal.clear();
    };
    for (std::size_t i = 0; i < source.size(); ++i) {
        const char c = source[i];
        if (c == '[' && i + 1 < source.size() && source[i + 1] == '[') {
            literal += '[';
            ++i;
        } else if (c == ']' && i + 1 < source.size() && source[i + 1] == ']') {
            literal += ']';
            ++i;
        } else if (c == ']') {
            throw Error(ErrorCode::parse_error, "unmatched ']' at offset " + std::to_string(i));
        } else if (c == '[') {
            auto close = source.find(']', i + 1);
            auto nl = source.find('\n', i + 1);
            auto nested = source.find('[', i + 1);
            if (close == std::string_view::npos || (nl != std::string_view::npos && nl < close) ||
                (nested != std::string_view::npos && nested < close)) {
                throw Error(ErrorCode::parse_error, "unterminated slot at offset " + std::to_string(i));
            }
            std::string inner(source.substr(i + 1, close - i - 1));
            std::string key = inner, label = inner;
            if (auto bar = inner.find('|'); bar != std::string::npos) {
                key = inner.substr(0, bar);
                label = inner.substr(bar + 1);
            }
            if (trim(key).empty() || trim(key) != key) {
                throw Error(ErrorCode::parse_error, "bad slot name '" + inner + "'");
            }
            flush();
            t.segments_.push_back({true, key, label});
            if (std::find(t.slots_.begin(), t.slots_.end(), key) == t.slots_.end()) t.slots_.push_back(key);
            i = close;
        } else {
            literal += c;
        }
    }
    flush();
    return t;
}

std::string Template::render(const Bindings& bindings) const {
    for (const auto& [key, value] : bindings) {
        if (std::find(slots_.begin(), slots_.end(), key) == slots_.end()) {
            throw Error(ErrorCode::extraneous_binding, "binding '" + key + "' matches no slot", key);
        }
    }
    for (const auto& slot : slots_) {
        auto it = bindings.find(slot);
        if (it == bindings.end() || it->second.empty()) {
            throw Error(ErrorCode::missing_slot, "slot '" + slot + "' is unbound", slot);
        }
    }
    std::string out;
    for (const auto& seg : segments_) out += seg.is_slot ? bindings.at(seg.text) : seg.text;
    return out;
}

std::string Template::display() const {
    std::string out;
    for (const auto& seg : segments_) out += seg.is_slot ? "[" + seg.label + "]" : seg.text;
    return out;
}

Bindings Template::identity_bindings() const {
    Bindings b;
    for (const auto& seg : segments_) {
        if (seg.is_slot) b.emplace(seg.text, "[" + seg.label + "]");
    }
    return b;
}

const PromptTemplate& figure_prompt(PromptId id) {
    for (const auto& p : registry().figures) {
        if (p.id == id) return p;
    }
    throw Error(ErrorCode::invalid_argument, "question templates are looked up by mode and index");
}

const std::vector<PromptId>& figure_prompt_ids() {
    static const std::vector<PromptId> ids = [] {
        std::vector<PromptId> v;
        for (const auto& info : kFigurePrompts) v.push_back(info.id);
        return v;
    }();
    return ids;
}

const std::vector<QuestionTemplate>& question_templates() { return registry().questions; }

std::vector<QuestionTemplate> question_templates(Mode mode) {
    std::vector<QuestionTemplate> out;
    for (const auto& q : question_templates()) {
        if (q.mode == mode) out.push_back(q);
    }
    return out;
}

const QuestionTemplate& question_template(Mode mode, int index) {
    for (const auto& q : question_templates()) {
        if (q.mode == mode && q.index == index) return q;
    }
    throw Error(ErrorCode::not_found, "no question template " + std::string(to_string(mode)) + " " +
                                          std::to_string(index));
}

std::string RenderedPrompt::display() const {
    return attaches_image ? "[image]\n\n" + text : text;
}

RenderedPrompt render_description_prompt(const VHInstance& instance, std::string_view response,
                                         std::string_view detected_hallucination, bool successful) {
    if (instance.format != QuestionFormat::oeq) {
        throw Error(ErrorCode::invalid_argument, "description prompts take open-ended instances", instance.id);
    }
    Bindings b;
    b["question"] = instance.question;
    if (successful) {
        b["testing MLLM's hallucinated response"] = std::string(response);
        b["detected hallucination in the response"] = std::string(detected_hallucination);
        return render_figure(PromptId::desc_from_successful, b);
    }
    b["a hypothetical hallucinated response"] = std::string(response);
    b["detected hallucination in the hypothetical response"] = std::string(detected_hallucination);
    return render_figure(PromptId::desc_from_unsuccessful, b);
}

RenderedPrompt render_integration_prompt(Mode mode, std::string_view mode_definition,
                                         const std::vector<std::string>& descriptions) {
    if (descriptions.empty()) throw Error(ErrorCode::invalid_argument, "no descriptions to integrate");
    std::string joined;
    for (const auto& d : descriptions) {
        if (!joined.empty()) joined += "\n\n";
        joined += d;
    }
    Bindings b;
    b["VH mode"] = display_name(mode) + " mode";
    b["the definition of VH mode"] = std::string(mode_definition);
    b["N text descriptions"] = joined;
    return render_figure(PromptId::desc_integration, b);
}

RenderedPrompt render_image_prompt(const TextDescription& description, bool for_llm_rewrite) {
    if (description.kind != DescriptionKind::integrated) {
        throw Error(ErrorCode::invalid_argument, "image prompts need an integrated description", description.id);
    }
    Bindings b;
    b["Text description of a VH mode"] = description.body;
    return render_figure(for_llm_rewrite ? PromptId::t2i_prompt_request : PromptId::image_generation, b);
}

RenderedPrompt render_prompt_list_request(const TextDescription& description, std::size_t count) {
    auto p = render_image_prompt(description, true);
    p.text += "\n\nReturn exactly " + std::to_string(count) + " prompts, one per line.";
    return p;
}

RenderedPrompt render_nonexistent_object_prompt() { return render_figure(PromptId::nonexistent_object, {}); }

RenderedPrompt render_counting_rewrite_prompt(const std::vector<CountingItem>& items) {
    if (items.empty()) throw Error(ErrorCode::invalid_argument, "no counting answers to rewrite");
    auto p = render_figure(PromptId::counting_rewrite, {});
    p.text += "\n";
    for (std::size_t i = 0; i < items.size(); ++i) {
        p.text += "\n" + std::to_string(i + 1) + ". Question: " + items[i].question +
                  " Ground-truth number: " + items[i].number;
    }
    return p;
}

std::string render_question(const QuestionTemplate& tmpl, const Bindings& bindings) {
    return tmpl.body.render(bindings);
}

std::vector<std::string> parse_line_list(std::string_view reply, std::size_t expected, bool exact) {
    std::vector<std::string> out;
    for (const auto& raw : split_lines(reply)) {
        std::string line = trim(raw);
        if (line.empty()) continue;
        std::size_t k = 0;
        while (k < line.size() && std::isdigit(static_cast<unsigned char>(line[k]))) ++k;
        if (k > 0 && k < line.size() && (line[k] == '.' || line[k] == ')')) {
            line = trim(std::string_view(line).substr(k + 1));
        } else if (line[0] == '-' || line[0] == '*') {
            line = trim(std::string_view(line).substr(1));
        }
        if (!line.empty()) out.push_back(std::move(line));
    }
    if (out.size() < expected || (exact && out.size() != expected)) {
        throw Error(ErrorCode::parse_error, "expected " + std::to_string(expected) + " lines, got " +
                                                std::to_string(out.size()));
    }
    out.resize(expected);
    return out;
}

std::vector<TextDescription> builtin_descriptions() {
    std::vector<TextDescription> out;
    std::istringstream in{std::string(asset_or_throw(kDescriptionAsset))};
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        out.push_back(description_from_json(Json::parse(line)));
    }
    return out;
}

std::string question_template_listing() {
    std::string out;
    for (Mode m : kAllModes) {
        if (!out.empty()) out += "\n";
        out += "# " + std::string(to_string(m)) + "\n";
        for (const auto& q : question_templates(m)) {
            out += std::to_string(q.index) + ". " + q.body.display() + "\n";
        }
    }
    return out;
}

LintReport lint(const std::optional<std::filesystem::path>& asset_dir,
                const std::optional<std::filesystem::path>& golden_dir) {
    LintReport rep;
    auto problem = [&](std::string msg) { rep.problems.push_back(std::move(msg)); };

    std::map<std::string, std::string> manifest;
    if (auto m = assets::find(kManifestPath)) {
        for (const auto& line : split_lines(*m)) {
            if (trim(line).empty()) continue;
            auto sp = line.find("  ");
            if (sp == std::string::npos) {
                problem("malformed manifest line: " + line);
                continue;
            }
            manifest[line.substr(sp + 2)] = line.substr(0, sp);
        }
    } else {
        problem("embedded checksum manifest missing");
    }

    for (const auto& a : assets::all()) {
        if (a.path == kManifestPath) continue;
        ++rep.checked;
        auto it = manifest.find(std::string(a.path));
        if (it == manifest.end()) {
            problem(std::string(a.path) + ": not listed in manifest");
        } else if (it->second != sha256_hex(a.bytes)) {
            problem(std::string(a.path) + ": embedded bytes do not match manifest checksum");
        }
    }
    for (const auto& [path, digest] : manifest) {
        if (!assets::find(path)) problem(path + ": listed in manifest but not embedded");
        if (asset_dir) {
            auto p = *asset_dir / path;
            if (!std::filesystem::exists(p)) {
                problem(p.string() + ": missing on disk");
            } else if (sha256_hex(read_file(p)) != digest) {
                problem(p.string() + ": checksum differs from manifest");
            }
        }
    }

    try {
        const auto& reg = registry();
        for (Mode m : kAllModes) {
            if (question_templates(m).empty()) problem("no question template for mode " + std::string(to_string(m)));
        }
        for (const auto& q : reg.questions) {
            for (const auto& s : q.body.required_slots()) {
                if (!kQuestionSlots.count(s)) {
                    problem("question template " + std::string(to_string(q.mode)) + " " + std::to_string(q.index) +
                            ": unknown slot '" + s + "'");
                }
            }
        }
        for (const auto& d : builtin_descriptions()) validate(d);
    } catch (const Error& e) {
        problem(std::string("template assets: ") + e.what());
        return rep;
    }

    if (golden_dir) {
        for (PromptId id : figure_prompt_ids()) {
            ++rep.checked;
            auto path = *golden_dir / (std::string(to_string(id)) + ".txt");
            if (!std::filesystem::exists(path)) {
                problem(path.string() + ": golden missing");
                continue;
            }
            const auto& p = figure_prompt(id);
            RenderedPrompt r{p.body.render(p.body.identity_bindings()), p.attaches_image};
            if (r.display() + "\n" != read_file(path)) problem(path.string() + ": rendering differs from golden");
        }
        ++rep.checked;
        auto qpath = *golden_dir / "question_templates.txt";
        if (!std::filesystem::exists(qpath)) {
            problem(qpath.string() + ": golden missing");
        } else if (question_template_listing() != read_file(qpath)) {
            problem(qpath.string() + ": question templates differ from golden");
        }
    }
    return rep;
}

}  // namespace vhbench::prompts
