// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vhbench/cli.hpp"

#include "vhbench/benchmark.hpp"
#include "vhbench/embeddings.hpp"
#include "vhbench/error.hpp"
#include "vhbench/eval.hpp"
#include "vhbench/fsutil.hpp"
#include "vhbench/image_store.hpp"
#include "vhbench/miner.hpp"
#include "vhbench/orchestrator.hpp"
#include "vhbench/prompts.hpp"
#include "vhbench/service.hpp"
#include "vhbench/store.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

namespace vhbench::cli {

namespace fs = std::filesystem;

fs::path ProjectConfig::resolve(const fs::path& p) const { return p.is_absolute() ? p : root / p; }

ProjectConfig load_project_config(const fs::path& root, const fs::path& config_file) {
    ProjectConfig cfg;
    cfg.root = root;
    fs::path file = config_file.empty() ? root / "vhbench.json" : cfg.resolve(config_file);
    if (config_file.empty() && !fs::exists(file)) return cfg;
    const Json j = read_json_file(file);
    if (!j.is_object()) throw Error(ErrorCode::schema_violation, "project config must be an object", file.string());
    auto path_of = [&](const char* key, fs::path& dst) {
        if (j.contains(key)) dst = j[key].get<std::string>();
    };
    path_of("endpoints", cfg.endpoints);
    path_of("store", cfg.store);
    path_of("images", cfg.images);
    path_of("exchanges", cfg.exchanges);
    path_of("annotators", cfg.annotators);
    if (j.contains("gateway_mode")) cfg.gateway_mode = gateway::parse_gateway_mode(j["gateway_mode"].get<std::string>());
    cfg.chat_endpoint = optional_string(j, "chat_endpoint");
    cfg.image_endpoint = optional_string(j, "image_endpoint");
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    return cfg;
}

namespace {

struct Output {
    Json data = Json::object();
    std::string text;
    std::vector<std::string> warnings;
};

// Lazily opened project resources.
class Context {
public:
    explicit Context(ProjectConfig cfg) : cfg_(std::move(cfg)) {}

    const ProjectConfig& cfg() const { return cfg_; }

    ImageStore& images() {
        if (!images_) images_ = std::make_unique<ImageStore>(cfg_.resolve(cfg_.images));
        return *images_;
    }
    ProjectStore& store() {
        if (!store_) store_ = std::make_unique<ProjectStore>(cfg_.resolve(cfg_.store));
        return *store_;
    }
    bool has_store() const { return fs::exists(cfg_.resolve(cfg_.store) / "store.json"); }

    gateway::Gateway& gw() {
        if (!gw_) {
            const auto path = cfg_.resolve(cfg_.endpoints);
            auto endpoints = gateway::load_endpoints(path);
            gateway::GatewayOptions opts;
            opts.mode = cfg_.gateway_mode;
            if (opts.mode != gateway::GatewayMode::live) opts.exchange_dir = cfg_.resolve(cfg_.exchanges);
            gw_ = std::make_unique<gateway::Gateway>(std::move(endpoints), opts, nullptr, images());
        }
        return *gw_;
    }

    std::string chat_endpoint(const std::string& flag) const {
        if (!flag.empty()) return flag;
        if (!cfg_.chat_endpoint.empty()) return cfg_.chat_endpoint;
        throw Error(ErrorCode::invalid_argument, "no chat endpoint: pass --endpoint or set chat_endpoint", "endpoint");
    }
    std::string image_endpoint(const std::string& flag) const {
        if (!flag.empty()) return flag;
        if (!cfg_.image_endpoint.empty()) return cfg_.image_endpoint;
        throw Error(ErrorCode::invalid_argument, "no image endpoint: pass --endpoint or set image_endpoint", "endpoint");
    }

private:
    ProjectConfig cfg_;
    std::unique_ptr<ImageStore> images_;
    std::unique_ptr<ProjectStore> store_;
    std::unique_ptr<gateway::Gateway> gw_;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string modes_table(const std::map<Mode, ModeProgress>& progress) {
    std::string t = fmt::format("{:<13}{:>6}{:>6}{:>6}{:>8}  {}\n", "Mode", "OEQ", "Yes", "No", "Target", "State");
    for (const auto& [m, p] : progress) {
        t += fmt::format("{:<13}{:>6}{:>6}{:>6}{:>8}  {}\n", to_string(m), p.oeq, p.ynq.yes, p.ynq.no, p.target,
                         p.finalized ? "final" : (p.ynq.balanced() ? "balanced" : "unbalanced"));
    }
    return t;
}

Json progress_json(const std::map<Mode, ModeProgress>& progress) {
    Json j = Json::object();
    for (const auto& [m, p] : progress) {
        j[std::string(to_string(m))] = {{"oeq", p.oeq},          {"yes", p.ynq.yes},
                                        {"no", p.ynq.no},         {"target", p.target},
                                        {"open_tasks", p.open_tasks}, {"finalized", p.finalized}};
    }
    return j;
}

// ---- mine ---------------------------------------------------------------

struct MineArgs {
    std::string contrast, reference, out;
    miner::MiningConfig cfg;
};

Output cmd_mine(const MineArgs& a) {
    auto contrast = load_embeddings(a.contrast);
    auto reference = load_embeddings(a.reference);
    auto all = miner::mine_candidates(contrast, reference, a.cfg);
    const auto found = all.size();
    auto pairs = miner::top_k(std::move(all), a.cfg.top_k);
    atomic_write(a.out, miner::serialize_pairs(pairs));
    Output o;
    o.data = {{"candidates", found}, {"written", pairs.size()}, {"out", a.out}};
    o.text = fmt::format("{} candidate pairs, {} written to {}\n", found, pairs.size(), a.out);
    return o;
}

// ---- ingest -------------------------------------------------------------

Output cmd_ingest(Context& ctx, const std::vector<std::string>& files, const std::string& source) {
    Output o;
    Json list = Json::array();
    const auto src = parse_image_source(source);
    for (const auto& f : files) {
        auto rec = ctx.images().ingest_file(f, src);
        list.push_back({{"file", f}, {"content_hash", rec.content_hash}, {"storage_path", rec.storage_path}});
        o.text += rec.content_hash + "  " + f + "\n";
    }
    o.data = {{"images", list}};
    return o;
}

// ---- describe -----------------------------------------------------------

std::vector<InitialInstanceOutcome> read_outcomes(const fs::path& path) {
    std::vector<InitialInstanceOutcome> out;
    for_each_jsonl(path, [&](std::size_t, const Json& j) { out.push_back(outcome_from_json(j)); });
    return out;
}

struct DescribeArgs {
    std::string mode, outcomes, endpoint, definition;
    std::size_t n = 10;
};

Output cmd_describe(Context& ctx, const DescribeArgs& a) {
    const Mode mode = parse_mode(a.mode);
    auto& store = ctx.store();
    if (!a.outcomes.empty()) store.upsert_outcomes(read_outcomes(a.outcomes));
    const auto outcomes = store.snapshot()->outcomes;
    auto r = orch::build_descriptions(mode, outcomes, a.n, ctx.gw(), ctx.chat_endpoint(a.endpoint), a.definition);
    for (const auto& d : r.singles) store.add_description(d);
    store.add_description(r.integrated);
    Output o;
    Json singles = Json::array();
    for (const auto& d : r.singles) singles.push_back(d.id);
    o.data = {{"integrated", r.integrated.id}, {"singles", singles}};
    o.text = fmt::format("{} descriptions, integrated as {}\n", r.singles.size(), r.integrated.id);
    o.warnings = std::move(r.warnings);
    return o;
}

// ---- generate -----------------------------------------------------------

struct GenerateArgs {
    std::string run, endpoint, mode, description, rewrite_endpoint;
    std::size_t count = 150;
    std::size_t ceiling = 0;
    bool rewrite = false;
    bool replenish = false;
};

const TextDescription& latest_integrated(const StoreState& s, Mode mode) {
    const TextDescription* found = nullptr;
    for (const auto& d : s.descriptions) {
        if (d.mode == mode && d.kind == DescriptionKind::integrated) found = &d;
    }
    if (!found) {
        throw Error(ErrorCode::not_found, fmt::format("no integrated description for {}; run describe first", to_string(mode)),
                    std::string(to_string(mode)));
    }
    return *found;
}

Output cmd_generate(Context& ctx, const GenerateArgs& a) {
    auto& store = ctx.store();
    auto snap = store.snapshot();
    GenerationRun run;
    if (const auto* existing = snap->run(a.run)) {
        run = *existing;
    } else {
        run.id = a.run;
        if (!a.description.empty()) {
            const auto* d = snap->description(a.description);
            if (!d) throw Error(ErrorCode::not_found, "no such description", a.description);
            run.mode = d->mode;
            run.description_id = d->id;
        } else {
            if (a.mode.empty()) throw Error(ErrorCode::invalid_argument, "a new run needs --mode or --description", "mode");
            run.mode = parse_mode(a.mode);
            run.description_id = latest_integrated(*snap, run.mode).id;
        }
        run.image_endpoint = ctx.image_endpoint(a.endpoint);
        run.target_count = a.count;
        run.attempt_ceiling = a.ceiling;
        if (a.rewrite) run.rewrite_endpoint = ctx.chat_endpoint(a.rewrite_endpoint);
    }
    const auto* desc = snap->description(run.description_id);
    if (!desc) throw Error(ErrorCode::not_found, "run references a missing description", run.description_id);

    auto g = a.replenish ? orch::replenish(run, *desc, ctx.gw()) : orch::generate_images(run, *desc, ctx.gw(), a.count);
    store.put_run(run);

    Output o;
    Json hashes = Json::array();
    for (const auto& img : g.images) hashes.push_back(img.content_hash);
    o.data = {{"run", run.id},           {"mode", to_string(run.mode)}, {"generated", g.images.size()},
              {"attempts", run.attempts}, {"ceiling", run.ceiling()},   {"images", hashes}};
    o.text = fmt::format("run {}: {} new images ({} of {} attempts used)\n", run.id, g.images.size(), run.attempts,
                         run.ceiling());
    o.warnings = std::move(g.warnings);
    return o;
}

// ---- enqueue ------------------------------------------------------------

Output cmd_enqueue(Context& ctx, const std::string& run_id, const std::string& assist, bool no_assist) {
    auto& store = ctx.store();
    const auto* run = store.snapshot()->run(run_id);
    if (!run) throw Error(ErrorCode::not_found, "no such run", run_id);
    orch::EnqueueOptions opts;
    if (!no_assist && run->mode == Mode::existence) {
        opts.assist_endpoint = assist.empty() ? ctx.cfg().chat_endpoint : assist;
    }
    auto ids = orch::enqueue_annotation(store, *run, ctx.gw(), opts);
    Output o;
    o.data = {{"run", run_id}, {"tasks", ids}};
    o.text = fmt::format("{} author_qa tasks for run {}\n", ids.size(), run_id);
    return o;
}

Output cmd_enqueue_verify(Context& ctx, const std::string& outcomes_file) {
    auto& store = ctx.store();
    auto outcomes = read_outcomes(outcomes_file);
    store.upsert_outcomes(outcomes);
    std::vector<std::string> ids;
    for (const auto& oc : outcomes) {
        if (oc.verdict) continue;
        const auto& in = oc.instance;
        Json payload = {{"instance_id", in.id},          {"mode", to_string(in.mode)},
                        {"image_hash", in.image_hash},   {"image_path", in.image_path},
                        {"question", in.question},       {"reference_answer", in.reference_answer},
                        {"response", oc.testing_model_response}};
        ids.push_back(store.enqueue(TaskKind::verify_initial, std::move(payload), "verify:" + in.id));
    }
    Output o;
    o.data = {{"tasks", ids}};
    o.text = fmt::format("{} verify_initial tasks\n", ids.size());
    return o;
}

// ---- annotate-serve -----------------------------------------------------

std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop = true; }

int cmd_serve(Context& ctx, const std::string& host, int port, const std::string& annotators, bool json,
              std::ostream& out) {
    const fs::path path = annotators.empty() ? ctx.cfg().resolve(ctx.cfg().annotators) : fs::path(annotators);
    service::AnnotationServer server(ctx.store(), ctx.images(), service::load_annotators(path));
    const int bound = server.bind(host, port);
    if (json) {
        out << Json{{"host", host}, {"port", bound}}.dump() << std::endl;
    } else {
        out << "listening on http://" << host << ":" << bound << std::endl;
    }
    g_stop = false;
    auto prev_int = std::signal(SIGINT, on_signal);
    auto prev_term = std::signal(SIGTERM, on_signal);
    server.start();
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    std::signal(SIGINT, prev_int);
    std::signal(SIGTERM, prev_term);
    return 0;
}

// ---- convert-ynq / export-benchmark ------------------------------------

struct ConvertArgs {
    std::string oeq, question, answer, file, out;
    std::vector<std::string> finalize;
    bool finalize_all = false;
};

Output cmd_convert(Context& ctx, const ConvertArgs& a) {
    auto& store = ctx.store();
    Output o;
    Json converted = Json::array();
    auto convert = [&](const std::string& id, const std::string& q, const std::string& ans) {
        auto y = store.convert_to_ynq(id, q, parse_polarity(ans));
        converted.push_back({{"oeq_id", id}, {"ynq_id", y.id}});
    };
    if (!a.oeq.empty()) {
        if (a.question.empty() || a.answer.empty()) {
            throw Error(ErrorCode::invalid_argument, "--oeq needs --question and --answer", "question");
        }
        convert(a.oeq, a.question, a.answer);
    }
    if (!a.file.empty()) {
        for_each_jsonl(a.file, [&](std::size_t, const Json& j) {
            convert(require_string(j, "oeq_id"), require_string(j, "ynq_question"), require_string(j, "ynq_answer"));
        });
    }

    // OEQ instances still missing their YNQ counterpart.
    auto snap = store.snapshot();
    Json missing = Json::array();
    for (const auto& in : snap->instances) {
        if (in.format == QuestionFormat::oeq && !snap->ynq_for(in.id)) missing.push_back(in.id);
    }
    for (const auto& id : missing) o.warnings.push_back("no YNQ for " + id.get<std::string>());

    std::vector<Mode> to_finalize;
    for (const auto& m : a.finalize) to_finalize.push_back(parse_mode(m));
    if (a.finalize_all) {
        for (const auto& [m, p] : store.progress()) {
            if (p.ynq.yes + p.ynq.no > 0) to_finalize.push_back(m);
        }
    }
    for (Mode m : to_finalize) store.finalize_mode(m);

    const auto progress = store.progress();
    if (!a.out.empty()) {
        auto b = store.snapshot()->benchmark(QuestionFormat::ynq);
        bench::write_benchmark(a.out, b);
        o.data["out"] = a.out;
        o.data["instances"] = b.instances.size();
    }
    o.data["converted"] = converted;
    o.data["missing"] = missing;
    o.data["progress"] = progress_json(progress);
    o.text = fmt::format("{} converted\n", converted.size()) + modes_table(progress);
    if (!a.out.empty()) o.text += "YNQ benchmark written to " + a.out + "\n";
    return o;
}

Output cmd_export_benchmark(Context& ctx, const std::string& format, const std::string& out, const std::string& name) {
    auto b = ctx.store().snapshot()->benchmark(parse_format(format));
    if (!name.empty()) b.name = name;
    bench::write_benchmark(out, b);
    Output o;
    Json counts = Json::object();
    std::string lines;
    for (const auto& [m, n] : b.per_mode_counts()) {
        counts[std::string(to_string(m))] = n;
        lines += fmt::format("  {:<12}{:>5}\n", to_string(m), n);
    }
    o.data = {{"out", out}, {"format", format}, {"instances", b.instances.size()}, {"per_mode", counts}};
    o.text = fmt::format("{} {} instances written to {}\n", b.instances.size(), format, out) + lines;
    return o;
}

// ---- evaluate / report --------------------------------------------------

struct EvaluateArgs {
    std::string benchmark, endpoint, format = "ynq", out;
    std::size_t workers = 0;
    int sample = 0;
};

Output cmd_evaluate(Context& ctx, const EvaluateArgs& a) {
    const auto b = bench::read_benchmark(a.benchmark);
    const auto format = parse_format(a.format);
    if (b.format != format) {
        throw Error(ErrorCode::invalid_argument,
                    fmt::format("benchmark is {}, not {}", to_string(b.format), a.format), a.benchmark);
    }
    eval::EvalOptions opts{a.workers, a.sample};
    auto run = format == QuestionFormat::ynq ? eval::evaluate_ynq(b, ctx.gw(), a.endpoint, opts)
                                             : eval::evaluate_oeq(b, ctx.gw(), a.endpoint, &ctx.store(), opts);
    run.manifest.benchmark = a.benchmark;
    eval::write_run(a.out, run);

    Output o;
    o.data = to_json(run.manifest);
    o.data["out"] = a.out;
    o.data["tasks"] = run.task_ids;
    o.text = fmt::format("{} records written to {} ({} pending, {} unparseable)\n", run.manifest.total, a.out,
                         run.manifest.pending, run.manifest.unparseable);
    if (format == QuestionFormat::ynq) {
        auto rep = eval::accuracy_report(a.endpoint, run.records, true);
        o.text += eval::render_report({rep}, eval::Layout::per_model_table, eval::ReportFormat::text);
    } else {
        o.text += fmt::format("{} adjudication tasks queued\n", run.task_ids.size());
    }
    o.warnings = std::move(run.warnings);
    return o;
}

Json report_json(const eval::AccuracyReport& r) {
    Json modes = Json::object();
    for (const auto& [m, v] : r.per_mode) {
        const auto& c = r.counts.at(m);
        modes[std::string(to_string(m))] = {{"accuracy", v},
                                            {"correct", c.correct},
                                            {"total", c.total},
                                            {"unparseable", c.unparseable},
                                            {"pending", c.pending}};
    }
    return {{"endpoint", r.endpoint_name}, {"per_mode", modes}, {"average", r.average}, {"partial", r.partial}};
}

struct ReportArgs {
    std::string runs, layout = "per_model_table", csv, out;
    bool allow_partial = false;
};

Output cmd_report(Context& ctx, const ReportArgs& a) {
    const auto layout = eval::parse_layout(a.layout);
    std::vector<EvaluationRecord> human;
    if (ctx.has_store()) human = ctx.store().snapshot()->human_verdicts;
    std::vector<eval::AccuracyReport> reports;
    Json list = Json::array();
    const auto paths = split_list(a.runs);
    if (paths.empty()) throw Error(ErrorCode::invalid_argument, "--runs names no files", "runs");
    for (const auto& p : paths) {
        auto run = eval::read_run(p);
        auto records = eval::apply_human_verdicts(std::move(run.records), human);
        reports.push_back(eval::accuracy_report(run.manifest.endpoint_name, records, a.allow_partial));
        list.push_back(report_json(reports.back()));
    }
    const auto text = eval::render_report(reports, layout, eval::ReportFormat::text);
    if (!a.csv.empty()) atomic_write(a.csv, eval::render_report(reports, layout, eval::ReportFormat::csv));
    if (!a.out.empty()) atomic_write(a.out, text);
    Output o;
    o.data = {{"layout", a.layout}, {"reports", list}};
    if (!a.csv.empty()) o.data["csv"] = a.csv;
    o.text = text;
    return o;
}

// ---- split / export-train -----------------------------------------------

struct SplitArgs {
    std::string benchmark, verdicts, out;
    std::uint64_t seed = 0;
    std::size_t resamples = 100;
    double train_fraction = 0.8;
    bool joint = false;
};

Output cmd_split(const SplitArgs& a) {
    const auto b = bench::read_benchmark(a.benchmark);
    std::vector<EvaluationRecord> records;
    for (const auto& p : split_list(a.verdicts)) {
        auto run = eval::read_run(p);
        records.insert(records.end(), run.records.begin(), run.records.end());
    }
    bench::SplitSpec spec;
    spec.seed = a.seed;
    spec.resamples = a.resamples;
    spec.train_fraction = a.train_fraction;
    spec.per_mode = !a.joint;
    auto s = bench::select_split(b, spec, bench::correctness(records));
    if (!a.out.empty()) write_json_file(a.out, to_json(s));
    Output o;
    o.data = to_json(s);
    o.text = fmt::format("{:<13}{:>6}{:>6}{:>9}{:>8}{:>8}\n", "Mode", "Train", "Test", "Resample", "Test", "Full");
    for (const auto& [m, ms] : s.per_mode) {
        o.text += fmt::format("{:<13}{:>6}{:>6}{:>9}{:>8.3f}{:>8.3f}\n", to_string(m), ms.train_ids.size(),
                              ms.test_ids.size(), ms.chosen_resample_index, ms.test_accuracy, ms.full_accuracy);
    }
    if (!a.out.empty()) o.text += "split written to " + a.out + "\n";
    return o;
}

struct ExportTrainArgs {
    std::string split, benchmark, out, endpoint, system_prompt;
};

Output cmd_export_train(Context& ctx, const ExportTrainArgs& a) {
    const auto s = bench::split_from_json(read_json_file(a.split));
    const auto b = bench::read_benchmark(a.benchmark);
    std::size_t rewrites = 0;
    bench::Rewriter rewrite = [&](const prompts::RenderedPrompt& p) {
        ++rewrites;
        return ctx.gw().chat(ctx.chat_endpoint(a.endpoint), p.text, {});
    };
    auto records = bench::export_training_set(s, b, rewrite, {a.system_prompt});
    atomic_write(a.out, to_jsonl(records));
    Output o;
    o.data = {{"out", a.out}, {"records", records.size()}, {"rewrite_calls", rewrites}};
    o.text = fmt::format("{} training records written to {}\n", records.size(), a.out);
    return o;
}

// ---- agreement ----------------------------------------------------------

Output cmd_kappa(Context& ctx, const std::string& labels, const std::string& categories, bool from_store) {
    std::vector<AgreementLabel> list;
    if (from_store) {
        list = ctx.store().snapshot()->labels;
    } else {
        if (labels.empty()) throw Error(ErrorCode::invalid_argument, "pass --labels or --from-store", "labels");
        list = eval::read_labels(labels);
    }
    const auto m = eval::matrix_from_labels(list, split_list(categories));
    const double k = eval::fleiss_kappa(m);
    Output o;
    o.data = {{"kappa", k}, {"items", m.items.size()}, {"raters", m.raters}, {"categories", m.categories}};
    o.text = fmt::format("Fleiss' kappa {:.4f} over {} items, {} raters, {} categories\n", k, m.items.size(),
                         m.raters, m.categories.size());
    return o;
}

Output cmd_agreement_sample(Context& ctx, std::size_t size, std::size_t raters, std::uint64_t seed,
                            const std::string& format) {
    auto& store = ctx.store();
    const auto b = store.snapshot()->benchmark(parse_format(format));
    auto ids = eval::enqueue_agreement_study(store, b, size, raters, seed);
    Output o;
    o.data = {{"items", ids}, {"raters", raters}, {"seed", seed}};
    o.text = fmt::format("{} items sampled, {} agreement tasks each\n", ids.size(), raters);
    return o;
}

// ---- prompts ------------------------------------------------------------

Output cmd_prompts_lint(const std::string& assets, const std::string& goldens) {
    std::optional<fs::path> a, g;
    if (!assets.empty()) a = assets;
    if (!goldens.empty()) g = goldens;
    auto rep = prompts::lint(a, g);
    Output o;
    o.data = {{"checked", rep.checked}, {"problems", rep.problems}, {"ok", rep.ok()}};
    o.text = fmt::format("{} assets checked, {} problems\n", rep.checked, rep.problems.size());
    for (const auto& p : rep.problems) o.text += "  " + p + "\n";
    if (!rep.ok()) throw Error(ErrorCode::schema_violation, o.text, "lint");
    return o;
}

Output cmd_prompts_show(const std::string& id) {
    Output o;
    if (id.empty()) {
        o.text = prompts::question_template_listing();
        o.data = {{"templates", o.text}};
    } else {
        const auto& p = prompts::figure_prompt(prompts::parse_prompt_id(id));
        o.text = p.body.display();
        if (o.text.empty() || o.text.back() != '\n') o.text += '\n';
        o.data = {{"id", id}, {"text", p.body.display()}, {"attaches_image", p.attaches_image}};
    }
    return o;
}

Output cmd_progress(Context& ctx) {
    const auto p = ctx.store().progress();
    Output o;
    o.data = progress_json(p);
    o.text = modes_table(p);
    return o;
}

void emit(const Output& o, bool json, std::ostream& out, std::ostream& err) {
    for (const auto& w : o.warnings) err << "warning: " << w << "\n";
    if (json) {
        Json d = o.data;
        if (!o.warnings.empty()) d["warnings"] = o.warnings;
        out << d.dump() << "\n";
    } else {
        out << o.text;
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Visual hallucination benchmark toolkit", "vhbench"};
    app.require_subcommand(1);
    app.fallthrough();
    app.failure_message(CLI::FailureMessage::help);

    std::string project = ".";
    std::string config;
    std::string record_dir, replay_dir;
    bool json = false;
    app.add_option("-C,--project", project, "Project root")->capture_default_str();
    app.add_option("--config", config, "Project config file (default <project>/vhbench.json)");
    app.add_flag("--json", json, "Machine-readable output");
    auto* rec_opt = app.add_option("--record", record_dir, "Record model exchanges into this directory");
    app.add_option("--replay", replay_dir, "Answer model calls from this exchange directory only")->excludes(rec_opt);

    std::function<Output(Context&)> action;
    std::function<int(Context&)> raw_action;

    // mine
    MineArgs mine;
    auto* s_mine = app.add_subcommand("mine", "Mine image pairs: similar under one encoder, dissimilar under another");
    s_mine->add_option("--contrast", mine.contrast, "Embedding manifest of the contrastive encoder")->required();
    s_mine->add_option("--reference", mine.reference, "Embedding manifest of the reference encoder")->required();
    s_mine->add_option("--tau-hi", mine.cfg.tau_hi, "Minimum contrast similarity")->capture_default_str();
    s_mine->add_option("--tau-lo", mine.cfg.tau_lo, "Maximum reference similarity")->capture_default_str();
    s_mine->add_option("--top-k", mine.cfg.top_k, "Pairs to keep")->capture_default_str();
    s_mine->add_option("--block-size", mine.cfg.block_size)->capture_default_str();
    s_mine->add_option("--threads", mine.cfg.threads, "0: all cores")->capture_default_str();
    s_mine->add_option("--out", mine.out, "Output JSONL")->required();
    s_mine->callback([&] { action = [&](Context&) { return cmd_mine(mine); }; });

    // ingest
    std::vector<std::string> ingest_files;
    std::string ingest_source = "dataset";
    auto* s_ingest = app.add_subcommand("ingest", "Copy image files into the project image store");
    s_ingest->add_option("files", ingest_files)->required();
    s_ingest->add_option("--source", ingest_source, "dataset or generated")->capture_default_str();
    s_ingest->callback([&] { action = [&](Context& c) { return cmd_ingest(c, ingest_files, ingest_source); }; });

    // describe
    DescribeArgs describe;
    auto* s_desc = app.add_subcommand("describe", "Write per-outcome descriptions and integrate them");
    s_desc->add_option("--mode", describe.mode)->required();
    s_desc->add_option("--outcomes", describe.outcomes, "Initial outcomes JSONL (default: those in the store)");
    s_desc->add_option("--n", describe.n, "Outcomes to describe")->capture_default_str();
    s_desc->add_option("--endpoint", describe.endpoint, "Chat endpoint");
    s_desc->add_option("--definition", describe.definition, "Mode definition for the integration prompt");
    s_desc->callback([&] { action = [&](Context& c) { return cmd_describe(c, describe); }; });

    // generate
    GenerateArgs gen;
    auto* s_gen = app.add_subcommand("generate", "Generate images for a run from its integrated description");
    s_gen->add_option("--run", gen.run)->required();
    s_gen->add_option("--endpoint", gen.endpoint, "Text-to-image endpoint (new runs)");
    s_gen->add_option("--count", gen.count, "Images to generate; also the target of a new run")->capture_default_str();
    s_gen->add_option("--mode", gen.mode, "Mode of a new run; uses its latest integrated description");
    s_gen->add_option("--description", gen.description, "Integrated description id for a new run");
    s_gen->add_option("--ceiling", gen.ceiling, "Attempt ceiling for a new run (default 3 x count)");
    s_gen->add_flag("--rewrite-via-llm", gen.rewrite, "Ask a chat model for distinct prompts first");
    s_gen->add_option("--rewrite-endpoint", gen.rewrite_endpoint, "Chat endpoint for --rewrite-via-llm");
    s_gen->add_flag("--replenish", gen.replenish, "Top up discarded images to the run target");
    s_gen->callback([&] { action = [&](Context& c) { return cmd_generate(c, gen); }; });

    // enqueue
    std::string enq_run, enq_assist;
    bool enq_no_assist = false;
    auto* s_enq = app.add_subcommand("enqueue", "Queue author_qa tasks for a run's pending images");
    s_enq->add_option("--run", enq_run)->required();
    s_enq->add_option("--assist-endpoint", enq_assist, "Chat endpoint suggesting absent objects (existence)");
    s_enq->add_flag("--no-assist", enq_no_assist);
    s_enq->callback([&] { action = [&](Context& c) { return cmd_enqueue(c, enq_run, enq_assist, enq_no_assist); }; });

    std::string verify_outcomes;
    auto* s_ver = app.add_subcommand("enqueue-verify", "Queue verify_initial tasks for unverified outcomes");
    s_ver->add_option("--outcomes", verify_outcomes)->required();
    s_ver->callback([&] { action = [&](Context& c) { return cmd_enqueue_verify(c, verify_outcomes); }; });

    // annotate-serve
    std::string serve_host = "127.0.0.1", serve_annotators;
    int serve_port = 8080;
    auto* s_serve = app.add_subcommand("annotate-serve", "Serve the annotation REST API");
    s_serve->add_option("--host", serve_host)->capture_default_str();
    s_serve->add_option("--port", serve_port, "0 picks a free port")->capture_default_str();
    s_serve->add_option("--annotators", serve_annotators, "Annotator file (default from config)");
    s_serve->callback([&] {
        raw_action = [&](Context& c) { return cmd_serve(c, serve_host, serve_port, serve_annotators, json, out); };
    });

    // progress
    auto* s_prog = app.add_subcommand("progress", "Per-mode counts and yes/no balance");
    s_prog->callback([&] { action = [&](Context& c) { return cmd_progress(c); }; });

    // convert-ynq
    ConvertArgs conv;
    auto* s_conv = app.add_subcommand("convert-ynq", "Convert OEQ instances to yes/no questions and finalize modes");
    s_conv->add_option("--oeq", conv.oeq, "OEQ instance id");
    s_conv->add_option("--question", conv.question, "Yes/no question");
    s_conv->add_option("--answer", conv.answer, "yes or no");
    s_conv->add_option("--file", conv.file, "JSONL of {oeq_id, ynq_question, ynq_answer}");
    s_conv->add_option("--finalize", conv.finalize, "Modes to finalize")->delimiter(',');
    s_conv->add_flag("--finalize-all", conv.finalize_all, "Finalize every mode with YNQ instances");
    s_conv->add_option("--out", conv.out, "Write the YNQ benchmark here");
    s_conv->callback([&] { action = [&](Context& c) { return cmd_convert(c, conv); }; });

    // export-benchmark
    std::string eb_format = "oeq", eb_out, eb_name;
    auto* s_eb = app.add_subcommand("export-benchmark", "Write the store's OEQ or YNQ instances as JSONL");
    s_eb->add_option("--format", eb_format, "oeq or ynq")->capture_default_str();
    s_eb->add_option("--out", eb_out)->required();
    s_eb->add_option("--name", eb_name);
    s_eb->callback([&] { action = [&](Context& c) { return cmd_export_benchmark(c, eb_format, eb_out, eb_name); }; });

    // evaluate
    EvaluateArgs ev;
    auto* s_ev = app.add_subcommand("evaluate", "Ask a model every benchmark question");
    s_ev->add_option("--benchmark", ev.benchmark)->required();
    s_ev->add_option("--endpoint", ev.endpoint)->required();
    s_ev->add_option("--format", ev.format, "ynq or oeq")->capture_default_str();
    s_ev->add_option("--out", ev.out)->required();
    s_ev->add_option("--workers", ev.workers, "0: the endpoint's max_concurrency")->capture_default_str();
    s_ev->add_option("--sample", ev.sample, "Sample index, for repeated runs")->capture_default_str();
    s_ev->callback([&] { action = [&](Context& c) { return cmd_evaluate(c, ev); }; });

    // report
    ReportArgs rep;
    auto* s_rep = app.add_subcommand("report", "Accuracy tables from evaluation runs");
    s_rep->add_option("--runs", rep.runs, "Comma-separated run files")->required();
    s_rep->add_option("--layout", rep.layout, "per_model_table or cross_model_table")->capture_default_str();
    s_rep->add_option("--csv", rep.csv, "Also write CSV here");
    s_rep->add_option("--out", rep.out, "Also write the text table here");
    s_rep->add_flag("--allow-partial", rep.allow_partial, "Score runs with pending records");
    s_rep->callback([&] { action = [&](Context& c) { return cmd_report(c, rep); }; });

    // split
    SplitArgs sp;
    auto* s_sp = app.add_subcommand("split", "Pick a train/test split whose test accuracy tracks the full benchmark");
    s_sp->add_option("--benchmark", sp.benchmark)->required();
    s_sp->add_option("--verdicts", sp.verdicts, "Comma-separated evaluation runs")->required();
    s_sp->add_option("--seed", sp.seed)->capture_default_str();
    s_sp->add_option("--resamples", sp.resamples)->capture_default_str();
    s_sp->add_option("--train-fraction", sp.train_fraction)->capture_default_str();
    s_sp->add_flag("--joint", sp.joint, "One resample index for all modes");
    s_sp->add_option("--out", sp.out);
    s_sp->callback([&] { action = [&](Context&) { return cmd_split(sp); }; });

    // export-train
    ExportTrainArgs et;
    auto* s_et = app.add_subcommand("export-train", "Write conversation records for the train split");
    s_et->add_option("--split", et.split)->required();
    s_et->add_option("--benchmark", et.benchmark, "OEQ benchmark JSONL")->required();
    s_et->add_option("--out", et.out)->required();
    s_et->add_option("--endpoint", et.endpoint, "Chat endpoint for counting rewrites");
    s_et->add_option("--system-prompt", et.system_prompt);
    s_et->callback([&] { action = [&](Context& c) { return cmd_export_train(c, et); }; });

    // kappa
    std::string k_labels, k_categories;
    bool k_store = false;
    auto* s_k = app.add_subcommand("kappa", "Fleiss' kappa over rater labels");
    s_k->add_option("--labels", k_labels, "JSONL of {item, rater, category}");
    s_k->add_option("--categories", k_categories, "Comma-separated category list");
    s_k->add_flag("--from-store", k_store, "Use labels collected by the annotation service");
    s_k->callback([&] { action = [&](Context& c) { return cmd_kappa(c, k_labels, k_categories, k_store); }; });

    // agreement-sample
    std::size_t ag_size = 100, ag_raters = 3;
    std::uint64_t ag_seed = 0;
    std::string ag_format = "oeq";
    auto* s_ag = app.add_subcommand("agreement-sample", "Queue agreement_label tasks for a seeded sample");
    s_ag->add_option("--size", ag_size)->capture_default_str();
    s_ag->add_option("--raters", ag_raters)->capture_default_str();
    auto* ag_seed_opt = s_ag->add_option("--seed", ag_seed, "Default: the project seed");
    s_ag->add_option("--format", ag_format)->capture_default_str();
    s_ag->callback([&] {
        action = [&](Context& c) {
            return cmd_agreement_sample(c, ag_size, ag_raters, ag_seed_opt->count() ? ag_seed : c.cfg().seed, ag_format);
        };
    });

    // prompts
    auto* s_pr = app.add_subcommand("prompts", "Prompt template tools");
    s_pr->require_subcommand(1);
    std::string lint_assets, lint_goldens;
    auto* s_lint = s_pr->add_subcommand("lint", "Check template checksums, slots and goldens");
    s_lint->add_option("--assets", lint_assets, "On-disk asset tree to compare");
    s_lint->add_option("--goldens", lint_goldens, "Golden render directory");
    s_lint->callback([&] { action = [&](Context&) { return cmd_prompts_lint(lint_assets, lint_goldens); }; });
    std::string show_id;
    auto* s_show = s_pr->add_subcommand("show", "Print a prompt, or every question template");
    s_show->add_option("id", show_id);
    s_show->callback([&] { action = [&](Context&) { return cmd_prompts_show(show_id); }; });

    std::vector<std::string> argv_s;
    argv_s.reserve(args.size() + 1);
    argv_s.push_back("vhbench");
    argv_s.insert(argv_s.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_s) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        auto cfg = load_project_config(project, config);
        if (!record_dir.empty()) {
            cfg.gateway_mode = gateway::GatewayMode::record;
            cfg.exchanges = fs::absolute(record_dir);
        }
        if (!replay_dir.empty()) {
            cfg.gateway_mode = gateway::GatewayMode::replay;
            cfg.exchanges = fs::absolute(replay_dir);
        }
        // File arguments are relative to the project root.
        auto rel = [&](std::string& v) {
            if (!v.empty()) v = cfg.resolve(v).string();
        };
        auto rel_list = [&](std::string& v) {
            std::string joined;
            for (auto item : split_list(v)) {
                rel(item);
                joined += (joined.empty() ? "" : ",") + item;
            }
            v = joined;
        };
        for (auto* v : {&mine.contrast, &mine.reference, &mine.out, &describe.outcomes, &verify_outcomes,
                        &serve_annotators, &conv.file, &conv.out, &eb_out, &ev.benchmark, &ev.out, &rep.csv, &rep.out,
                        &sp.benchmark, &sp.out, &et.split, &et.benchmark, &et.out, &k_labels, &lint_assets,
                        &lint_goldens}) {
            rel(*v);
        }
        for (auto& f : ingest_files) rel(f);
        rel_list(rep.runs);
        rel_list(sp.verdicts);
        Context ctx(std::move(cfg));
        if (raw_action) return raw_action(ctx);
        emit(action(ctx), json, out, err);
        return 0;
    } catch (const Error& e) {
        if (json) {
            out << Json{{"error", service::error_body(e)}}.dump() << "\n";
        }
        err << "error: " << to_string(e.code()) << ": " << e.what();
        if (!e.detail().empty()) err << " (" << e.detail() << ")";
        err << "\n";
        return 1;
    } catch (const std::exception& e) {
        if (json) out << Json{{"error", {{"code", "internal"}, {"message", e.what()}, {"detail", ""}}}}.dump() << "\n";
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace vhbench::cli
