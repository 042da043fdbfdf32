// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vhbench/eval.hpp"

#include "vhbench/benchmark.hpp"
#include "vhbench/error.hpp"
#include "vhbench/fsutil.hpp"
#include "vhbench/store.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <set>
#include <thread>

#include <fmt/format.h>

namespace vhbench::eval {

std::string_view to_string(YesNo v) {
    switch (v) {
        case YesNo::yes: return "yes";
        case YesNo::no: return "no";
        case YesNo::unparseable: break;
    }
    return "unparseable";
}

namespace {

std::vector<std::string> words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '\'') {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string_view first_sentence(std::string_view text) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '\n' || c == '!' || c == '?') return text.substr(0, i);
        // "3.5" is not a sentence end
        if (c == '.' && (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])))) {
            return text.substr(0, i);
        }
    }
    return text;
}

}  // namespace

YesNo parse_yes_no(std::string_view response) {
    for (const auto& w : words(first_sentence(response))) {
        if (w == "yes") return YesNo::yes;
        if (w == "no") return YesNo::no;
    }
    bool yes = false, no = false;
    for (const auto& w : words(response)) {
        yes |= w == "yes";
        no |= w == "no";
    }
    if (yes != no) return yes ? YesNo::yes : YesNo::no;
    return YesNo::unparseable;
}

void AccuracyReport::finish() {
    average = 0.0;
    if (per_mode.empty()) return;
    for (const auto& [m, v] : per_mode) average += v;
    average /= static_cast<double>(per_mode.size());
}

AccuracyReport accuracy_report(const std::string& endpoint_name, const std::vector<EvaluationRecord>& records,
                               bool allow_partial) {
    AccuracyReport r;
    r.endpoint_name = endpoint_name;
    std::size_t pending = 0;
    for (const auto& rec : records) {
        auto& c = r.counts[rec.mode];
        if (rec.verdict == Verdict::pending_adjudication) {
            ++c.pending;
            ++pending;
            continue;
        }
        ++c.total;
        c.correct += rec.verdict == Verdict::correct;
        c.unparseable += rec.verdict == Verdict::unparseable;
    }
    if (pending && !allow_partial) {
        throw Error(ErrorCode::incomplete_run,
                    fmt::format("{} of {} records are pending; pass allow_partial to score the rest", pending,
                                records.size()),
                    std::to_string(pending));
    }
    r.partial = pending > 0;
    for (const auto& [m, c] : r.counts) {
        if (c.total) r.per_mode[m] = static_cast<double>(c.correct) / static_cast<double>(c.total);
    }
    r.finish();
    return r;
}

AccuracyReport report_from_values(const std::string& endpoint_name, const std::map<Mode, double>& per_mode) {
    AccuracyReport r;
    r.endpoint_name = endpoint_name;
    for (const auto& [m, v] : per_mode) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw Error(ErrorCode::invalid_argument, "accuracy outside [0, 1]", std::string(to_string(m)));
        }
    }
    r.per_mode = per_mode;
    r.finish();
    return r;
}

std::vector<EvaluationRecord> apply_human_verdicts(std::vector<EvaluationRecord> records,
                                                   const std::vector<EvaluationRecord>& human) {
    std::map<std::pair<std::string, std::string>, const EvaluationRecord*> by_key;
    for (const auto& h : human) {
        if (h.verdict_source == VerdictSource::human) by_key[{h.instance_id, h.endpoint_name}] = &h;
    }
    for (auto& r : records) {
        if (r.verdict != Verdict::pending_adjudication) continue;
        auto it = by_key.find({r.instance_id, r.endpoint_name});
        if (it == by_key.end()) continue;
        r.verdict = it->second->verdict;
        r.verdict_source = VerdictSource::human;
        r.adjudicator_ids = it->second->adjudicator_ids;
    }
    return records;
}

Layout parse_layout(std::string_view s) {
    if (s == "per_model_table") return Layout::per_model_table;
    if (s == "cross_model_table") return Layout::cross_model_table;
    throw Error(ErrorCode::invalid_argument, "unknown layout '" + std::string(s) + "'",
                "per_model_table, cross_model_table");
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? fmt::format("{:.3f}", *v) : "-"; }

std::optional<double> mean_of(const std::vector<std::optional<double>>& v) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& x : v) {
        if (x) {
            s += *x;
            ++n;
        }
    }
    if (!n) return std::nullopt;
    return s / static_cast<double>(n);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

// Left-aligned first column, right-aligned rest.
std::string aligned(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& row : rows) {
        width.resize(std::max(width.size(), row.size()), 0);
        for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
    }
    std::string out;
    for (const auto& row : rows) {
        std::string line;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i == 0) {
                line += fmt::format("{:<{}}", row[i], width[i]);
            } else {
                line += fmt::format("  {:>{}}", row[i], width[i]);
            }
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + "\n";
    }
    return out;
}

std::string joined_csv(const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_field(row[i]);
        out += "\n";
    }
    return out;
}

std::optional<double> value(const AccuracyReport& r, Mode m) {
    auto it = r.per_mode.find(m);
    if (it == r.per_mode.end()) return std::nullopt;
    return it->second;
}

std::optional<double> average_of(const AccuracyReport& r) {
    if (r.per_mode.empty()) return std::nullopt;
    return r.average;
}

}  // namespace

std::string render_report(const std::vector<AccuracyReport>& reports, Layout layout, ReportFormat format) {
    if (layout == Layout::cross_model_table) {
        std::vector<std::vector<std::string>> rows;
        std::vector<std::string> header{format == ReportFormat::csv ? "Mode" : ""};
        for (const auto& r : reports) header.push_back(r.endpoint_name);
        header.push_back("Average");
        rows.push_back(header);
        auto add_row = [&](const std::string& label, const std::vector<std::optional<double>>& vals) {
            std::vector<std::string> row{label};
            for (const auto& v : vals) row.push_back(format == ReportFormat::csv && !v ? "" : cell(v));
            auto m = mean_of(vals);
            row.push_back(format == ReportFormat::csv && !m ? "" : cell(m));
            rows.push_back(std::move(row));
        };
        for (Mode m : kAllModes) {
            std::vector<std::optional<double>> vals;
            for (const auto& r : reports) vals.push_back(value(r, m));
            add_row(std::string(table_label(m)), vals);
        }
        std::vector<std::optional<double>> avgs;
        for (const auto& r : reports) avgs.push_back(average_of(r));
        add_row("Average", avgs);
        return format == ReportFormat::csv ? joined_csv(rows) : aligned(rows);
    }

    if (format == ReportFormat::csv) {
        std::vector<std::vector<std::string>> rows{
            {"endpoint", "mode", "accuracy", "correct", "total", "unparseable", "pending"}};
        for (const auto& r : reports) {
            for (Mode m : kAllModes) {
                auto v = value(r, m);
                auto it = r.counts.find(m);
                ModeCounts c = it == r.counts.end() ? ModeCounts{} : it->second;
                rows.push_back({r.endpoint_name, std::string(table_label(m)), v ? cell(v) : "",
                                std::to_string(c.correct), std::to_string(c.total), std::to_string(c.unparseable),
                                std::to_string(c.pending)});
            }
            auto a = average_of(r);
            rows.push_back({r.endpoint_name, "Average", a ? cell(a) : "", "", "", "", ""});
        }
        return joined_csv(rows);
    }

    std::string out;
    for (const auto& r : reports) {
        if (!out.empty()) out += "\n";
        out += r.endpoint_name + (r.partial ? " (partial)" : "") + "\n";
        std::vector<std::vector<std::string>> rows{{"Mode", "Accuracy", "Correct", "Total", "Unparseable", "Pending"}};
        for (Mode m : kAllModes) {
            auto it = r.counts.find(m);
            if (it == r.counts.end()) {
                rows.push_back({std::string(table_label(m)), cell(value(r, m))});
                continue;
            }
            const auto& c = it->second;
            rows.push_back({std::string(table_label(m)), cell(value(r, m)), std::to_string(c.correct),
                            std::to_string(c.total), std::to_string(c.unparseable), std::to_string(c.pending)});
        }
        rows.push_back({"Average", cell(average_of(r))});
        out += aligned(rows);
    }
    return out;
}

// ---- running ----------------------------------------------------------

Json to_json(const RunManifest& m) {
    Json j;
    j["endpoint_name"] = m.endpoint_name;
    j["format"] = to_string(m.format);
    j["benchmark"] = m.benchmark;
    j["total"] = m.total;
    j["pending"] = m.pending;
    j["unparseable"] = m.unparseable;
    j["complete"] = m.complete();
    return j;
}

RunManifest manifest_from_json(const Json& j) {
    RunManifest m;
    m.endpoint_name = require_string(j, "endpoint_name");
    m.format = parse_format(require_string(j, "format"));
    m.benchmark = optional_string(j, "benchmark");
    m.total = j.value("total", std::size_t{0});
    m.pending = j.value("pending", std::size_t{0});
    m.unparseable = j.value("unparseable", std::size_t{0});
    return m;
}

namespace {

struct Answer {
    std::string text;
    std::string error;
};

std::vector<Answer> ask_all(const Benchmark& b, gateway::Gateway& gw, const std::string& endpoint,
                            const EvalOptions& options) {
    const auto& ep = gw.endpoint(endpoint);
    if (ep.kind != gateway::EndpointKind::chat_vision) {
        throw Error(ErrorCode::invalid_argument, "endpoint '" + endpoint + "' is not a chat endpoint", endpoint);
    }
    std::vector<Answer> answers(b.instances.size());
    std::size_t workers = options.workers ? options.workers : static_cast<std::size_t>(std::max(1, ep.max_concurrency));
    workers = std::max<std::size_t>(1, std::min(workers, answers.size()));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < answers.size(); i = next++) {
            const auto& inst = b.instances[i];
            try {
                std::vector<ImageRecord> images;
                if (!inst.image_hash.empty()) images.push_back(gw.images().get(inst.image_hash));
                answers[i].text = gw.chat(endpoint, inst.question, images, options.sample_index);
            } catch (const std::exception& e) {
                answers[i].error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    return answers;
}

void tally(EvalRun& run) {
    run.manifest.total = run.records.size();
    run.manifest.pending = 0;
    run.manifest.unparseable = 0;
    for (const auto& r : run.records) {
        run.manifest.pending += r.verdict == Verdict::pending_adjudication;
        run.manifest.unparseable += r.verdict == Verdict::unparseable;
    }
}

}  // namespace

EvalRun evaluate_ynq(const Benchmark& benchmark, gateway::Gateway& gw, const std::string& endpoint,
                     const EvalOptions& options) {
    if (benchmark.format != QuestionFormat::ynq) {
        throw Error(ErrorCode::invalid_argument, "evaluate_ynq takes a yes/no benchmark");
    }
    EvalRun run;
    run.manifest.endpoint_name = endpoint;
    run.manifest.format = QuestionFormat::ynq;
    run.manifest.benchmark = benchmark.id;
    auto bal = balance_of(benchmark);
    for (const auto& [m, c] : bal.per_mode) {
        if (!c.balanced()) {
            run.warnings.push_back(fmt::format("{} is unbalanced: {} yes, {} no", to_string(m), c.yes, c.no));
        }
    }

    auto answers = ask_all(benchmark, gw, endpoint, options);
    for (std::size_t i = 0; i < answers.size(); ++i) {
        const auto& inst = benchmark.instances[i];
        EvaluationRecord r;
        r.instance_id = inst.id;
        r.mode = inst.mode;
        r.endpoint_name = endpoint;
        r.verdict_source = VerdictSource::auto_ynq;
        if (!answers[i].error.empty()) {
            r.verdict = Verdict::pending_adjudication;
            r.error = answers[i].error;
        } else {
            r.response_text = answers[i].text;
            const auto parsed = parse_yes_no(r.response_text);
            if (parsed == YesNo::unparseable) {
                r.verdict = Verdict::unparseable;
            } else {
                const bool yes = parsed == YesNo::yes;
                r.verdict = yes == (inst.ynq_polarity == Polarity::yes) ? Verdict::correct : Verdict::incorrect;
            }
        }
        run.records.push_back(std::move(r));
    }
    tally(run);
    return run;
}

EvalRun evaluate_oeq(const Benchmark& benchmark, gateway::Gateway& gw, const std::string& endpoint,
                     ProjectStore* store, const EvalOptions& options) {
    if (benchmark.format != QuestionFormat::oeq) {
        throw Error(ErrorCode::invalid_argument, "evaluate_oeq takes an open-ended benchmark");
    }
    EvalRun run;
    run.manifest.endpoint_name = endpoint;
    run.manifest.format = QuestionFormat::oeq;
    run.manifest.benchmark = benchmark.id;

    auto answers = ask_all(benchmark, gw, endpoint, options);
    for (std::size_t i = 0; i < answers.size(); ++i) {
        const auto& inst = benchmark.instances[i];
        EvaluationRecord r;
        r.instance_id = inst.id;
        r.mode = inst.mode;
        r.endpoint_name = endpoint;
        r.verdict = Verdict::pending_adjudication;
        r.verdict_source = VerdictSource::human;
        r.response_text = answers[i].text;
        r.error = answers[i].error;
        if (store && r.error.empty()) {
            Json payload = {{"instance_id", inst.id},
                            {"mode", to_string(inst.mode)},
                            {"endpoint", endpoint},
                            {"image_hash", inst.image_hash},
                            {"image_path", inst.image_path},
                            {"question", inst.question},
                            {"reference_answer", inst.reference_answer},
                            {"response", r.response_text}};
            run.task_ids.push_back(
                store->enqueue(TaskKind::adjudicate_oeq, std::move(payload), "adjudicate:" + endpoint + ":" + inst.id));
        }
        run.records.push_back(std::move(r));
    }
    tally(run);
    return run;
}

std::filesystem::path manifest_path(const std::filesystem::path& run_path) {
    auto p = run_path;
    p += ".manifest.json";
    return p;
}

void write_run(const std::filesystem::path& path, const EvalRun& run) {
    std::vector<Json> rows;
    for (const auto& r : run.records) rows.push_back(to_json(r));
    atomic_write(path, to_jsonl(rows));
    write_json_file(manifest_path(path), to_json(run.manifest));
}

EvalRun read_run(const std::filesystem::path& path) {
    EvalRun run;
    for_each_jsonl(path, [&](std::size_t line, const Json& j) {
        try {
            run.records.push_back(evaluation_from_json(j));
        } catch (const Error& e) {
            throw Error(ErrorCode::schema_violation, "line " + std::to_string(line) + ": " + e.what(),
                        std::to_string(line));
        }
    });
    const auto mp = manifest_path(path);
    if (std::filesystem::exists(mp)) {
        run.manifest = manifest_from_json(read_json_file(mp));
    } else if (!run.records.empty()) {
        run.manifest.endpoint_name = run.records.front().endpoint_name;
        run.manifest.format =
            run.records.front().verdict_source == VerdictSource::auto_ynq ? QuestionFormat::ynq : QuestionFormat::oeq;
    }
    tally(run);
    return run;
}

// ---- agreement --------------------------------------------------------

void AgreementMatrix::validate() const {
    if (raters < 2) throw Error(ErrorCode::invalid_argument, "agreement needs at least two raters");
    if (counts.empty()) throw Error(ErrorCode::invalid_argument, "agreement needs at least one item");
    for (std::size_t i = 0; i < counts.size(); ++i) {
        long sum = 0;
        for (int x : counts[i]) {
            if (x < 0) throw Error(ErrorCode::invalid_argument, "negative count", std::to_string(i));
            sum += x;
        }
        if (sum != raters) {
            const auto name = i < items.size() ? items[i] : std::to_string(i);
            throw Error(ErrorCode::invalid_argument,
                        fmt::format("item {} has {} ratings, expected {}", name, sum, raters), name);
        }
    }
}

double fleiss_kappa(const AgreementMatrix& m) {
    m.validate();
    // Integer sums keep the result independent of item and category order.
    using I = __int128;
    const I N = static_cast<I>(m.counts.size());
    const I n = m.raters;
    const std::size_t k = m.counts.front().size();
    I sq = 0;
    std::vector<I> col(k, 0);
    for (const auto& row : m.counts) {
        if (row.size() != k) throw Error(ErrorCode::invalid_argument, "ragged agreement matrix");
        for (std::size_t j = 0; j < k; ++j) {
            sq += static_cast<I>(row[j]) * row[j];
            col[j] += row[j];
        }
    }
    I col_sq = 0;
    for (I c : col) col_sq += c * c;
    // P = A / B, Pe = C / D
    const I A = sq - N * n, B = N * n * (n - 1);
    const I C = col_sq, D = (N * n) * (N * n);
    if (A == B) return 1.0;
    const I num = A * D - C * B;
    const I den = B * (D - C);
    return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
}

double fleiss_kappa(const std::vector<std::vector<int>>& counts) {
    AgreementMatrix m;
    m.counts = counts;
    if (!counts.empty()) {
        m.raters = 0;
        for (int x : counts.front()) m.raters += x;
    }
    return fleiss_kappa(m);
}

AgreementMatrix matrix_from_labels(const std::vector<AgreementLabel>& labels, std::vector<std::string> categories) {
    if (categories.empty()) {
        std::set<std::string> seen;
        for (const auto& l : labels) seen.insert(l.category);
        categories.assign(seen.begin(), seen.end());
    }
    std::map<std::string, std::size_t> col;
    for (std::size_t j = 0; j < categories.size(); ++j) col[categories[j]] = j;

    std::map<std::string, std::vector<int>> rows;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& l : labels) {
        if (!seen.insert({l.item, l.rater}).second) {
            throw Error(ErrorCode::duplicate_id, "rater " + l.rater + " labeled " + l.item + " twice", l.item);
        }
        auto it = col.find(l.category);
        if (it == col.end()) throw Error(ErrorCode::invalid_argument, "unknown category '" + l.category + "'", l.item);
        auto& row = rows[l.item];
        row.resize(categories.size(), 0);
        ++row[it->second];
    }
    AgreementMatrix m;
    m.categories = std::move(categories);
    for (auto& [item, row] : rows) {
        m.items.push_back(item);
        m.counts.push_back(std::move(row));
    }
    if (!m.counts.empty()) {
        for (int x : m.counts.front()) m.raters += x;
    }
    m.validate();
    return m;
}

std::vector<AgreementLabel> read_labels(const std::filesystem::path& path) {
    std::vector<AgreementLabel> out;
    for_each_jsonl(path, [&](std::size_t line, const Json& j) {
        try {
            out.push_back(label_from_json(j));
        } catch (const Error& e) {
            throw Error(ErrorCode::schema_violation, "line " + std::to_string(line) + ": " + e.what(),
                        std::to_string(line));
        }
    });
    return out;
}

std::vector<std::string> sample_items(std::vector<std::string> ids, std::size_t size, std::uint64_t seed) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (size > ids.size()) {
        throw Error(ErrorCode::invalid_argument,
                    fmt::format("sample of {} requested from {} items", size, ids.size()));
    }
    bench::seeded_shuffle(ids, seed);
    ids.resize(size);
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<std::string> enqueue_agreement_study(ProjectStore& store, const Benchmark& benchmark, std::size_t size,
                                                 std::size_t raters, std::uint64_t seed) {
    if (raters < 2) throw Error(ErrorCode::invalid_argument, "agreement needs at least two raters");
    std::vector<std::string> ids;
    std::map<std::string, const VHInstance*> by_id;
    for (const auto& i : benchmark.instances) {
        ids.push_back(i.id);
        by_id[i.id] = &i;
    }
    auto picked = sample_items(ids, size, seed);
    for (const auto& id : picked) {
        const auto& inst = *by_id.at(id);
        for (std::size_t r = 0; r < raters; ++r) {
            Json payload = {{"item", id},
                            {"instance_id", id},
                            {"mode", to_string(inst.mode)},
                            {"image_hash", inst.image_hash},
                            {"image_path", inst.image_path},
                            {"question", inst.question},
                            {"reference_answer", inst.reference_answer}};
            store.enqueue(TaskKind::agreement_label, std::move(payload), fmt::format("agree:{}:{}", id, r));
        }
    }
    return picked;
}

}  // namespace vhbench::eval
