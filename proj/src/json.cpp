// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vhbench/json.hpp"

#include "vhbench/error.hpp"
#include "vhbench/fsutil.hpp"

#include <fstream>
#include <sstream>

namespace vhbench {

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io_error, "cannot open " + path.string());
    }
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::parse_error, "malformed JSON in " + path.string(), e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& value, int indent) {
    atomic_write(path, value.dump(indent) + "\n");
}

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const Json&)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io_error, "cannot open " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Json record;
        try {
            record = Json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorCode::parse_error,
                        path.filename().string() + ":" + std::to_string(line_no) + ": malformed JSON",
                        e.what());
        }
        try {
            fn(line_no, record);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::schema_violation || e.code() == ErrorCode::unknown_mode) {
                throw Error(e.code(),
                            path.filename().string() + ":" + std::to_string(line_no) + ": " + e.what(),
                            e.detail());
            }
            throw;
        }
    }
}

std::string to_jsonl(const std::vector<Json>& records) {
    std::string out;
    for (const auto& r : records) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

const Json& require(const Json& obj, const char* key) {
    if (!obj.is_object()) {
        throw Error(ErrorCode::schema_violation, "expected a JSON object");
    }
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        throw Error(ErrorCode::schema_violation, std::string("missing field '") + key + "'");
    }
    return *it;
}

std::string require_string(const Json& obj, const char* key) {
    const Json& v = require(obj, key);
    if (!v.is_string()) {
        throw Error(ErrorCode::schema_violation, std::string("field '") + key + "' must be a string");
    }
    return v.get<std::string>();
}

std::string optional_string(const Json& obj, const char* key, std::string fallback) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return fallback;
    if (!it->is_string()) {
        throw Error(ErrorCode::schema_violation, std::string("field '") + key + "' must be a string");
    }
    return it->get<std::string>();
}

}  // namespace vhbench
