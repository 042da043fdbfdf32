// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vhbench/service.hpp"

#include "vhbench/hashing.hpp"
#include "vhbench/image_store.hpp"
#include "vhbench/store.hpp"

#include <httplib.h>

#include <thread>

namespace vhbench::service {

std::vector<Annotator> load_annotators(const std::filesystem::path& path) {
    const Json j = read_json_file(path);
    std::vector<Annotator> out;
    if (!j.contains("annotators") || !j["annotators"].is_array()) {
        throw Error(ErrorCode::schema_violation, "annotator file needs an \"annotators\" array", path.string());
    }
    for (const auto& a : j["annotators"]) {
        if (!a.contains("name") || !a.contains("token_sha256")) {
            throw Error(ErrorCode::schema_violation, "annotator entry needs name and token_sha256", a.dump());
        }
        out.push_back({a["name"].get<std::string>(), a["token_sha256"].get<std::string>()});
    }
    return out;
}

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::not_found:
        case ErrorCode::none_available:
            return 404;
        case ErrorCode::unauthorized:
            return 403;
        case ErrorCode::invalid_state:
        case ErrorCode::balance_violation:
        case ErrorCode::already_converted:
            return 409;
        case ErrorCode::invalid_argument:
        case ErrorCode::missing_slot:
        case ErrorCode::parse_error:
        case ErrorCode::schema_violation:
        case ErrorCode::unknown_mode:
            return 400;
        default:
            return 500;
    }
}

Json error_body(const Error& e) {
    return {{"code", to_string(e.code())}, {"message", e.what()}, {"detail", e.detail()}};
}

namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

std::string media_type(const std::string& path) {
    const auto ext = std::filesystem::path(path).extension().string();
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".webp") return "image/webp";
    if (ext == ".gif") return "image/gif";
    return "image/png";
}

Json body_json(const httplib::Request& req) {
    try {
        auto j = Json::parse(req.body.empty() ? "{}" : req.body);
        if (!j.is_object()) throw Error(ErrorCode::parse_error, "request body must be a JSON object");
        return j;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::parse_error, "malformed JSON body", e.what());
    }
}

std::string field(const Json& j, const char* name) {
    if (!j.contains(name) || !j[name].is_string()) {
        throw Error(ErrorCode::invalid_argument, std::string("missing string field ") + name, name);
    }
    return j[name].get<std::string>();
}

}  // namespace

struct AnnotationServer::Impl {
    ProjectStore& store;
    ImageStore& images;
    std::vector<Annotator> annotators;
    httplib::Server server;
    std::thread thread;

    Impl(ProjectStore& s, ImageStore& i, std::vector<Annotator> a) : store(s), images(i), annotators(std::move(a)) {
        routes();
    }

    // Returns the annotator name or throws a 401-mapped error.
    std::string authenticate(const httplib::Request& req) const {
        const auto header = req.get_header_value("Authorization");
        const std::string prefix = "Bearer ";
        if (header.rfind(prefix, 0) == 0) {
            const auto cred = header.substr(prefix.size());
            const auto colon = cred.find(':');
            if (colon != std::string::npos) {
                const auto name = cred.substr(0, colon);
                const auto digest = sha256_hex(cred.substr(colon + 1));
                for (const auto& a : annotators) {
                    if (a.name == name && a.token_sha256 == digest) return name;
                }
            }
        }
        throw Error(ErrorCode::unauthorized, "missing or invalid credentials", "auth");
    }

    using Handler = std::function<Json(const httplib::Request&, httplib::Response&, const std::string& who)>;

    httplib::Server::Handler wrap(Handler h) {
        return [this, h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
            std::string who;
            try {
                who = authenticate(req);
            } catch (const Error& e) {
                send_json(res, 401, error_body(e));
                return;
            }
            try {
                auto out = h(req, res, who);
                if (!out.is_null()) send_json(res, 200, out);
            } catch (const Error& e) {
                send_json(res, http_status(e.code()), error_body(e));
            } catch (const std::exception& e) {
                send_json(res, 500, {{"code", "internal"}, {"message", e.what()}, {"detail", ""}});
            }
        };
    }

    void routes() {
        server.Get("/api/tasks/next", wrap([this](const auto& req, auto&, const std::string& who) {
            std::set<TaskKind> kinds;
            if (req.has_param("kind")) {
                std::string list = req.get_param_value("kind");
                std::size_t pos = 0;
                while (pos <= list.size()) {
                    auto comma = list.find(',', pos);
                    if (comma == std::string::npos) comma = list.size();
                    if (comma > pos) kinds.insert(parse_task_kind(list.substr(pos, comma - pos)));
                    pos = comma + 1;
                }
            }
            return to_json(store.claim_next(who, kinds));
        }));
        server.Get(R"(/api/tasks/([A-Za-z0-9_-]+))", wrap([this](const auto& req, auto&, const std::string&) {
            const auto id = req.matches[1].str();
            auto snap = store.snapshot();
            const auto* t = snap->task(id);
            if (!t) throw Error(ErrorCode::not_found, "no such task", id);
            return to_json(*t);
        }));
        server.Post(R"(/api/tasks/([A-Za-z0-9_-]+)/claim)", wrap([this](const auto& req, auto&, const std::string& who) {
            return to_json(store.claim(req.matches[1].str(), who));
        }));
        server.Post(R"(/api/tasks/([A-Za-z0-9_-]+)/qa)", wrap([this](const auto& req, auto&, const std::string& who) {
            const auto body = body_json(req);
            QaSubmission qa;
            qa.question = field(body, "question");
            qa.reference_answer = field(body, "reference_answer");
            qa.ynq_question = field(body, "ynq_question");
            qa.ynq_answer = parse_polarity(field(body, "ynq_answer"));
            const auto r = store.submit_qa(req.matches[1].str(), who, qa);
            return Json{{"oeq_id", r.oeq_id}, {"ynq_id", r.ynq_id}};
        }));
        server.Post(R"(/api/tasks/([A-Za-z0-9_-]+)/discard)", wrap([this](const auto& req, auto&, const std::string& who) {
            const auto body = body_json(req);
            const auto id = req.matches[1].str();
            store.discard(id, who, body.contains("reason") ? field(body, "reason") : std::string());
            return to_json(*store.snapshot()->task(id));
        }));
        server.Post(R"(/api/tasks/([A-Za-z0-9_-]+)/verdict)", wrap([this](const auto& req, auto&, const std::string& who) {
            const auto body = body_json(req);
            const auto id = req.matches[1].str();
            const auto text = body.contains("detected_hallucination") ? field(body, "detected_hallucination") : "";
            store.submit_verdict(id, who, parse_verdict(field(body, "verdict")), text);
            return to_json(*store.snapshot()->task(id));
        }));
        server.Get(R"(/api/images/([0-9a-f]{64}))", wrap([this](const auto& req, auto& res, const std::string&) {
            const auto hash = req.matches[1].str();
            const auto rec = images.find(hash);
            if (!rec) throw Error(ErrorCode::not_found, "no such image", hash);
            res.status = 200;
            res.set_content(images.read_bytes(hash), media_type(rec->storage_path));
            return Json();
        }));
        server.Get("/api/progress", wrap([this](const auto&, auto&, const std::string&) {
            Json out = Json::object();
            for (const auto& [mode, p] : store.progress()) {
                out[std::string(to_string(mode))] = {{"oeq", p.oeq},
                                                     {"yes", p.ynq.yes},
                                                     {"no", p.ynq.no},
                                                     {"target", p.target},
                                                     {"capacity_per_polarity", p.capacity_per_polarity},
                                                     {"open_tasks", p.open_tasks},
                                                     {"finalized", p.finalized},
                                                     {"balanced", p.ynq.balanced()}};
            }
            return out;
        }));
    }
};

AnnotationServer::AnnotationServer(ProjectStore& store, ImageStore& images, std::vector<Annotator> annotators)
    : impl_(std::make_unique<Impl>(store, images, std::move(annotators))) {}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind(const std::string& host, int port) {
    const int got = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (got < 0) throw Error(ErrorCode::io_error, "cannot bind", host + ":" + std::to_string(port));
    return got;
}

void AnnotationServer::listen() { impl_->server.listen_after_bind(); }

void AnnotationServer::start() {
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void AnnotationServer::stop() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace vhbench::service
