// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vhbench/error.hpp"
#include "vhbench/json.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace vhbench {
class ImageStore;
class ProjectStore;
}  // namespace vhbench

namespace vhbench::service {

/// Annotators authenticate with "Authorization: Bearer <name>:<token>". Only
/// the SHA-256 of each token is kept on disk.
struct Annotator {
    std::string name;
    std::string token_sha256;
};

/// {"annotators": [{"name": ..., "token_sha256": ...}]}
std::vector<Annotator> load_annotators(const std::filesystem::path& path);

int http_status(ErrorCode code);
Json error_body(const Error& e);

/// REST API over a project store:
///
///   GET  /api/tasks/next?kind=a,b     claim the oldest available task
///   GET  /api/tasks/{id}
///   POST /api/tasks/{id}/claim
///   POST /api/tasks/{id}/qa           {question, reference_answer, ynq_question, ynq_answer}
///   POST /api/tasks/{id}/discard      {reason}
///   POST /api/tasks/{id}/verdict      {verdict, detected_hallucination?}
///   GET  /api/images/{hash}           image bytes
///   GET  /api/progress                per-mode counts and yes/no balance
///
/// Errors come back as {code, message, detail}.
class AnnotationServer {
public:
    AnnotationServer(ProjectStore& store, ImageStore& images, std::vector<Annotator> annotators);
    ~AnnotationServer();
    AnnotationServer(const AnnotationServer&) = delete;
    AnnotationServer& operator=(const AnnotationServer&) = delete;

    /// Binds the listening socket; port 0 picks a free one. Returns the port.
    int bind(const std::string& host, int port);
    /// Serves until stop(). bind() first.
    void listen();
    /// listen() on a background thread.
    void start();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace vhbench::service
