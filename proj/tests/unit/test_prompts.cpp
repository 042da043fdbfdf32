// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vhbench/error.hpp"
#include "vhbench/fsutil.hpp"
#include "vhbench/prompts.hpp"

#include <doctest.h>

#include <filesystem>

using namespace vhbench;
using namespace vhbench::prompts;

namespace {

const std::filesystem::path kGolden = std::filesystem::path(VHBENCH_SOURCE_DIR) / "tests/golden/prompts";

VHInstance counting_oeq() {
    VHInstance i;
    i.id = "c1";
    i.mode = Mode::counting;
    i.image_hash = "h";
    i.image_path = "images/h.png";
    i.question = "How many lamps are there in the picture?";
    i.reference_answer = "3";
    return i;
}

TextDescription integrated(Mode m, std::string body) {
    return {"d", m, std::move(body), DescriptionKind::integrated, {}, {"s"}};
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::invalid_state;
}

}  // namespace

TEST_CASE("template syntax") {
    auto t = Template::parse("Pick [[A, B]] for [x] and [key|at key] or [x].");
    CHECK(t.required_slots() == std::vector<std::string>{"x", "key"});
    CHECK(t.display() == "Pick [A, B] for [x] and [at key] or [x].");
    CHECK(t.render({{"x", "1"}, {"key", "on the desk"}}) == "Pick [A, B] for 1 and on the desk or 1.");
    CHECK(t.render(t.identity_bindings()) == t.display());
    CHECK(code_of([&] { t.render({{"x", "1"}}); }) == ErrorCode::missing_slot);
    CHECK(code_of([&] { t.render({{"x", "1"}, {"key", ""}}); }) == ErrorCode::missing_slot);
    CHECK(code_of([&] { t.render({{"x", "1"}, {"key", "k"}, {"y", "2"}}); }) == ErrorCode::extraneous_binding);
    CHECK(code_of([] { Template::parse("open [slot"); }) == ErrorCode::parse_error);
    CHECK(code_of([] { Template::parse("stray ] here"); }) == ErrorCode::parse_error);
    CHECK(code_of([] { Template::parse("empty [] slot"); }) == ErrorCode::parse_error);
    // slot values are inserted verbatim, never re-scanned
    CHECK(t.render({{"x", "[y]"}, {"key", "]]"}}) == "Pick [A, B] for [y] and ]] or [y].");
}

TEST_CASE("figure prompts match goldens byte for byte") {
    for (PromptId id : figure_prompt_ids()) {
        CAPTURE(to_string(id));
        const auto& p = figure_prompt(id);
        RenderedPrompt r{p.body.render(p.body.identity_bindings()), p.attaches_image};
        CHECK(r.display() + "\n" == read_file(kGolden / (std::string(to_string(id)) + ".txt")));
        CHECK(r.text.find("[image]") == std::string::npos);
    }
    CHECK(question_template_listing() == read_file(kGolden / "question_templates.txt"));
}

TEST_CASE("lint passes on the source tree") {
    auto rep = lint(std::filesystem::path(VHBENCH_SOURCE_DIR) / "assets", kGolden);
    for (const auto& p : rep.problems) MESSAGE(p);
    CHECK(rep.ok());
    CHECK(rep.checked >= 17);
}

TEST_CASE("lint reports drift") {
    auto dir = std::filesystem::temp_directory_path() / "vhbench_lint_golden";
    std::filesystem::remove_all(dir);
    std::filesystem::copy(kGolden, dir);
    atomic_write(dir / "image_generation.txt", read_file(dir / "image_generation.txt") + " ");
    auto rep = lint(std::nullopt, dir);
    REQUIRE(rep.problems.size() == 1);
    CHECK(rep.problems[0].find("image_generation") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("description prompts") {
    auto inst = counting_oeq();
    auto ok = render_description_prompt(inst, "There are two lamps.", "image has three lamps", true);
    CHECK(ok.attaches_image);
    CHECK(ok.text.rfind("Question: How many lamps are there in the picture?\n\n", 0) == 0);
    CHECK(ok.text.find("Detected hallucination in the response: image has three lamps\n\n") != std::string::npos);
    CHECK(ok.text.find("Multi-modal LLM (MLLM)'s response: There are two lamps.") != std::string::npos);

    auto hypo = render_description_prompt(inst, "There are two lamps.", "image has three lamps", false);
    CHECK(hypo.text.find("A hypothetical response from the multi-modal LLM (MLLM): There are two lamps.") !=
          std::string::npos);
    CHECK(code_of([&] { render_description_prompt(inst, "two", "", true); }) == ErrorCode::missing_slot);
    inst.format = QuestionFormat::ynq;
    CHECK(code_of([&] { render_description_prompt(inst, "two", "x", true); }) == ErrorCode::invalid_argument);
}

TEST_CASE("integration and image prompts") {
    std::vector<std::string> ten;
    for (int i = 0; i < 10; ++i) ten.push_back("description " + std::to_string(i));
    auto p = render_integration_prompt(Mode::counting, "miscounting objects", ten);
    CHECK_FALSE(p.attaches_image);
    CHECK(p.text.find("ONE paragraph less than 200 words") != std::string::npos);
    CHECK(p.text.rfind("I want you to focus on the Counting VH mode: miscounting objects. Try to summarize the "
                       "Counting VH mode text description",
                       0) == 0);
    CHECK(p.text.find("description 0\n\ndescription 1") != std::string::npos);
    CHECK(render_integration_prompt(Mode::shape, "d", {"only"}).text.ends_with("\n\nonly"));
    CHECK(code_of([] { render_integration_prompt(Mode::shape, "d", {}); }) == ErrorCode::invalid_argument);

    auto d = integrated(Mode::counting, "BODY TEXT");
    auto direct = render_image_prompt(d, false);
    CHECK(direct.text.ends_with("Hallucination Mode:\n\nBODY TEXT"));
    auto rewrite = render_image_prompt(d, true);
    CHECK(rewrite.text.find("generate prompts for text-to-image") != std::string::npos);
    CHECK(rewrite.text.rfind(direct.text, 0) == 0);
    CHECK(render_prompt_list_request(d, 30).text.ends_with("Return exactly 30 prompts, one per line."));
    d.kind = DescriptionKind::single;
    CHECK(code_of([&] { render_image_prompt(d, false); }) == ErrorCode::invalid_argument);
}

TEST_CASE("question templates") {
    for (Mode m : kAllModes) CHECK_FALSE(question_templates(m).empty());
    CHECK(question_templates().size() == 27);

    CHECK(render_question(question_template(Mode::shape, 1), {{"object", "pear"}}) ==
          "Describe the shape(s) of pear in the picture.");
    CHECK(code_of([] { render_question(question_template(Mode::shape, 1), {{"object", "pear"}, {"n", "2"}}); }) ==
          ErrorCode::extraneous_binding);

    auto q = render_question(question_template(Mode::counting, 1), {{"object", "lamps"}, {"WHERE", "on the desk"}});
    CHECK(q == "How many lamps are depicted/there/visible/{can be seen} on the desk in the picture?");
    CHECK(q.find('[') == std::string::npos);

    auto orient = render_question(question_template(Mode::orientation, 3), {{"object", "the car"}});
    CHECK(orient.ends_with("in which the car is facing in the picture. [Away from the camera/viewer, Towards the "
                           "camera/viewer]"));
    CHECK(question_template(Mode::position, 4).body.required_slots() ==
          std::vector<std::string>{"reference object", "object A", "object B"});
    CHECK(code_of([] { question_template(Mode::ocr, 2); }) == ErrorCode::not_found);
}

TEST_CASE("counting rewrite and line lists") {
    auto p = render_counting_rewrite_prompt({{"How many lamps?", "3"}, {"How many cups?", "5"}});
    CHECK(p.text.ends_with("one line.\n\n1. Question: How many lamps? Ground-truth number: 3\n"
                           "2. Question: How many cups? Ground-truth number: 5"));
    CHECK(parse_line_list("1. There are three lamps.\n\n2) Five cups sit here.\n", 2, true) ==
          std::vector<std::string>{"There are three lamps.", "Five cups sit here."});
    CHECK(code_of([] { parse_line_list("one\ntwo\nthree", 2, true); }) == ErrorCode::parse_error);
    CHECK(parse_line_list("- a\n- b\n- c", 2, false) == std::vector<std::string>{"a", "b"});
    CHECK(code_of([] { parse_line_list("a", 2, false); }) == ErrorCode::parse_error);
}

TEST_CASE("builtin descriptions cover every mode") {
    auto ds = builtin_descriptions();
    REQUIRE(ds.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(ds[i].mode == kAllModes[i]);
        CHECK(ds[i].kind == DescriptionKind::integrated);
        CHECK_NOTHROW(render_image_prompt(ds[i], false));
    }
    CHECK(ds[7].body.rfind("A multi-modal large language model (MLLM) has difficulty in accurately counting", 0) == 0);
}
