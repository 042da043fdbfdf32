// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vhbench/benchmark.hpp"
#include "vhbench/embeddings.hpp"
#include "vhbench/error.hpp"
#include "vhbench/eval.hpp"
#include "vhbench/miner.hpp"
#include "vhbench/prompts.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace vhbench;

namespace {

// Python objects stand in for JSON values at the boundary.
py::object to_py(const Json& j) {
    auto json = py::module_::import("json");
    return json.attr("loads")(j.dump());
}

Json from_py(const py::handle& o) {
    auto json = py::module_::import("json");
    return Json::parse(json.attr("dumps")(o).cast<std::string>());
}

std::vector<AgreementLabel> labels_from_py(const std::vector<std::tuple<std::string, std::string, std::string>>& rows) {
    std::vector<AgreementLabel> out;
    for (const auto& [item, rater, category] : rows) out.push_back({item, rater, category});
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Native core of the vhbench toolkit";

    static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::tuple args = py::make_tuple(std::string(to_string(e.code())), std::string(e.what()), e.detail());
            PyErr_SetObject(error.ptr(), args.ptr());
        }
    });

    m.def("modes", [] {
        std::vector<std::string> out;
        for (Mode md : kAllModes) out.emplace_back(to_string(md));
        return out;
    });

    // ---- mining
    m.def(
        "mine",
        [](const std::vector<std::string>& ids, const std::vector<std::vector<float>>& contrast,
           const std::vector<std::vector<float>>& reference, double tau_hi, double tau_lo, std::size_t top_k,
           std::size_t block_size, std::size_t threads) {
            auto build = [&](const std::vector<std::vector<float>>& rows, const char* name) {
                const std::size_t dim = rows.empty() ? 0 : rows[0].size();
                std::vector<float> flat;
                flat.reserve(rows.size() * dim);
                for (const auto& r : rows) {
                    if (r.size() != dim) throw Error(ErrorCode::dimension_mismatch, "ragged embedding rows", name);
                    flat.insert(flat.end(), r.begin(), r.end());
                }
                return EmbeddingSet::from_rows(name, dim, flat, ids);
            };
            miner::MiningConfig cfg;
            cfg.tau_hi = tau_hi;
            cfg.tau_lo = tau_lo;
            cfg.top_k = top_k;
            cfg.block_size = block_size;
            cfg.threads = threads;
            py::gil_scoped_release release;
            auto pairs = miner::mine_candidates(build(contrast, "contrast"), build(reference, "reference"), cfg);
            pairs = miner::top_k(std::move(pairs), top_k);
            std::vector<std::tuple<std::string, std::string, double, double>> out;
            for (const auto& p : pairs) out.emplace_back(p.id_a, p.id_b, p.sim_contrast, p.sim_reference);
            return out;
        },
        py::arg("ids"), py::arg("contrast"), py::arg("reference"), py::arg("tau_hi") = 0.9, py::arg("tau_lo") = 0.55,
        py::arg("top_k") = 200, py::arg("block_size") = 512, py::arg("threads") = 0,
        "Pairs (id_a, id_b, sim_contrast, sim_reference), largest contrast similarity first.");
    m.def("mine_files", [](const std::filesystem::path& contrast, const std::filesystem::path& reference,
                           double tau_hi, double tau_lo, std::size_t top_k) {
        miner::MiningConfig cfg;
        cfg.tau_hi = tau_hi;
        cfg.tau_lo = tau_lo;
        cfg.top_k = top_k;
        auto pairs = miner::top_k(miner::mine_candidates(load_embeddings(contrast), load_embeddings(reference), cfg), top_k);
        std::vector<py::object> out;
        for (const auto& p : pairs) out.push_back(to_py(miner::to_json(p)));
        return out;
    }, py::arg("contrast"), py::arg("reference"), py::arg("tau_hi") = 0.9, py::arg("tau_lo") = 0.55,
       py::arg("top_k") = 200);

    // ---- prompts
    m.def("prompt_ids", [] {
        std::vector<std::string> out;
        for (auto id : prompts::figure_prompt_ids()) out.emplace_back(prompts::to_string(id));
        return out;
    });
    m.def("prompt_text", [](const std::string& id) {
        return prompts::figure_prompt(prompts::parse_prompt_id(id)).body.display();
    });
    m.def("question_templates", [](const std::string& mode) {
        std::vector<std::pair<int, std::string>> out;
        for (const auto& t : prompts::question_templates(parse_mode(mode))) out.emplace_back(t.index, t.body.display());
        return out;
    });
    m.def("render_question", [](const std::string& mode, int index, const std::map<std::string, std::string>& slots) {
        return prompts::render_question(prompts::question_template(parse_mode(mode), index), slots);
    });
    m.def("lint_prompts", [] {
        auto r = prompts::lint(std::nullopt, std::nullopt);
        return py::make_tuple(r.checked, r.problems);
    });

    // ---- benchmark
    m.def("read_benchmark", [](const std::filesystem::path& p) {
        auto b = bench::read_benchmark(p);
        std::vector<py::object> out;
        for (const auto& in : b.instances) out.push_back(to_py(to_json(in)));
        return out;
    });
    m.def("check_balance", [](const std::vector<py::object>& instances) {
        Benchmark b;
        b.format = QuestionFormat::ynq;
        for (const auto& o : instances) b.instances.push_back(instance_from_json(from_py(o)));
        auto r = bench::check_balance(b);
        py::dict per_mode;
        for (const auto& [md, c] : r.per_mode) per_mode[py::str(std::string(to_string(md)))] = py::make_tuple(c.yes, c.no);
        return py::make_tuple(per_mode, py::make_tuple(r.overall.yes, r.overall.no), r.balanced);
    });
    m.def("derive_seed", &bench::derive_seed, py::arg("seed"), py::arg("mode_index"), py::arg("r"));
    m.def("seeded_shuffle", [](std::vector<std::string> ids, std::uint64_t seed) {
        bench::seeded_shuffle(ids, seed);
        return ids;
    });
    m.def(
        "select_split",
        [](const std::vector<py::object>& instances, const std::map<std::string, bool>& correct, std::uint64_t seed,
           std::size_t resamples, double train_fraction, bool per_mode) {
            Benchmark b;
            for (const auto& o : instances) b.instances.push_back(instance_from_json(from_py(o)));
            if (!b.instances.empty()) b.format = b.instances.front().format;
            bench::SplitSpec spec;
            spec.seed = seed;
            spec.resamples = resamples;
            spec.train_fraction = train_fraction;
            spec.per_mode = per_mode;
            return to_py(to_json(bench::select_split(b, spec, correct)));
        },
        py::arg("instances"), py::arg("correct"), py::arg("seed") = 0, py::arg("resamples") = 100,
        py::arg("train_fraction") = 0.8, py::arg("per_mode") = true);

    // ---- evaluation
    m.def("parse_yes_no", [](const std::string& text) { return std::string(eval::to_string(eval::parse_yes_no(text))); });
    m.def(
        "render_report",
        [](const std::vector<std::pair<std::string, std::map<std::string, double>>>& columns, const std::string& layout,
           bool csv) {
            std::vector<eval::AccuracyReport> reports;
            for (const auto& [name, values] : columns) {
                std::map<Mode, double> per_mode;
                for (const auto& [md, v] : values) per_mode[parse_mode(md)] = v;
                reports.push_back(eval::report_from_values(name, per_mode));
            }
            return eval::render_report(reports, eval::parse_layout(layout),
                                       csv ? eval::ReportFormat::csv : eval::ReportFormat::text);
        },
        py::arg("columns"), py::arg("layout") = "cross_model_table", py::arg("csv") = false,
        "columns: [(name, {mode: accuracy})]");
    m.def("report_average", [](const std::map<std::string, double>& values) {
        std::map<Mode, double> per_mode;
        for (const auto& [md, v] : values) per_mode[parse_mode(md)] = v;
        return eval::report_from_values("", per_mode).average;
    });
    m.def("read_run", [](const std::filesystem::path& p) {
        auto run = eval::read_run(p);
        std::vector<py::object> recs;
        for (const auto& r : run.records) recs.push_back(to_py(to_json(r)));
        return py::make_tuple(to_py(to_json(run.manifest)), recs);
    });

    // ---- agreement
    m.def("fleiss_kappa", py::overload_cast<const std::vector<std::vector<int>>&>(&eval::fleiss_kappa),
          py::arg("counts"), "Items x categories count matrix with equal row sums.");
    m.def(
        "kappa_from_labels",
        [](const std::vector<std::tuple<std::string, std::string, std::string>>& labels,
           std::vector<std::string> categories) {
            return eval::fleiss_kappa(eval::matrix_from_labels(labels_from_py(labels), std::move(categories)));
        },
        py::arg("labels"), py::arg("categories") = std::vector<std::string>{},
        "labels: [(item, rater, category)]");
    m.def("sample_items", &eval::sample_items, py::arg("ids"), py::arg("size"), py::arg("seed"));
}
