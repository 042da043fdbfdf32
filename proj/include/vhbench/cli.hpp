// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vhbench/gateway.hpp"
#include "vhbench/json.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace vhbench::cli {

/// Where a project keeps its files. Relative paths in the config file are
/// resolved against `root`; command-line flags override the file.
///
/// vhbench.json (all keys optional):
///   {"endpoints": "endpoints.json", "store": "store", "images": ".",
///    "exchanges": "exchanges", "gateway_mode": "live",
///    "annotators": "annotators.json", "chat_endpoint": "...",
///    "image_endpoint": "...", "seed": 0}
struct ProjectConfig {
    std::filesystem::path root = ".";
    std::filesystem::path endpoints = "endpoints.json";
    std::filesystem::path store = "store";
    std::filesystem::path images = ".";
    std::filesystem::path exchanges = "exchanges";
    std::filesystem::path annotators = "annotators.json";
    gateway::GatewayMode gateway_mode = gateway::GatewayMode::live;
    std::string chat_endpoint;
    std::string image_endpoint;
    std::uint64_t seed = 0;

    std::filesystem::path resolve(const std::filesystem::path& p) const;
};

/// Reads `config_file` (or `<root>/vhbench.json` when empty and present).
ProjectConfig load_project_config(const std::filesystem::path& root, const std::filesystem::path& config_file = {});

/// Runs one command line. Returns the process exit code: 0 on success, 2 for
/// usage errors, 1 for any other failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vhbench::cli
