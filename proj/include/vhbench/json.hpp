// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace vhbench {

// Insertion-ordered so serialized records keep their documented field order.
using Json = nlohmann::ordered_json;

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& value, int indent = 2);

/// Calls `fn(line_number, record)` for each non-blank line. Parse errors are
/// rethrown as Error{parse_error} carrying the 1-based line number.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const Json&)>& fn);

std::string to_jsonl(const std::vector<Json>& records);

// Typed accessors that raise schema_violation instead of nlohmann's type_error.
const Json& require(const Json& obj, const char* key);
std::string require_string(const Json& obj, const char* key);
std::string optional_string(const Json& obj, const char* key, std::string fallback = {});

}  // namespace vhbench
