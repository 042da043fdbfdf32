// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vhbench/embeddings.hpp"

#include "vhbench/error.hpp"
#include "vhbench/fsutil.hpp"
#include "vhbench/json.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace vhbench {

namespace {

constexpr std::size_t kStrideMultiple = 16;
constexpr std::size_t kAlignment = 64;

float load_f32le(const unsigned char* p) {
    std::uint32_t bits = std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
                         (std::uint32_t(p[3]) << 24);
    return std::bit_cast<float>(bits);
}

void store_f32le(float v, char* out) {
    auto bits = std::bit_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) out[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
}

std::vector<std::string> read_id_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open ids file " + path.string());
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ids.push_back(line);
    }
    // A trailing newline produces no extra entry with getline; a blank last line does.
    while (!ids.empty() && ids.back().empty()) ids.pop_back();
    return ids;
}

std::size_t require_positive(const Json& j, const char* key) {
    const Json& v = require(j, key);
    if (!v.is_number_integer() || v.get<long long>() <= 0) {
        throw Error(ErrorCode::parse_error, std::string("manifest field '") + key + "' must be a positive integer");
    }
    return static_cast<std::size_t>(v.get<long long>());
}

EmbeddingSet load_manifest(const std::filesystem::path& manifest_path) {
    Json m;
    try {
        m = read_json_file(manifest_path);
    } catch (const Error& e) {
        throw Error(ErrorCode::parse_error, "malformed manifest header: " + manifest_path.string(), e.what());
    }
    std::string encoder;
    std::size_t dim = 0, count = 0;
    std::string matrix_file, ids_file;
    try {
        encoder = require_string(m, "encoder_name");
        dim = require_positive(m, "dim");
        count = require_positive(m, "count");
        if (auto dtype = optional_string(m, "dtype", "f32le"); dtype != "f32le") {
            throw Error(ErrorCode::parse_error, "unsupported dtype '" + dtype + "' (only f32le)");
        }
        matrix_file = require_string(m, "matrix_file");
        ids_file = require_string(m, "ids_file");
    } catch (const Error& e) {
        throw Error(ErrorCode::parse_error, "malformed manifest header: " + std::string(e.what()), e.detail());
    }
    const auto base = manifest_path.parent_path();
    const std::string raw = read_file(base / matrix_file);
    const std::size_t expected = count * dim * sizeof(float);
    if (raw.size() != expected) {
        std::ostringstream msg;
        msg << "matrix file holds " << raw.size() << " bytes (" << raw.size() / (4.0 * dim)
            << " rows of dim " << dim << ") but manifest declares count " << count;
        throw Error(ErrorCode::dimension_mismatch, msg.str());
    }
    auto ids = read_id_lines(base / ids_file);
    if (ids.size() != count) {
        throw Error(ErrorCode::dimension_mismatch, "ids file lists " + std::to_string(ids.size()) +
                                                       " ids but manifest declares count " + std::to_string(count));
    }
    std::vector<float> values(count * dim);
    const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = load_f32le(p + 4 * i);
    return EmbeddingSet::from_rows(std::move(encoder), dim, values, std::move(ids));
}

EmbeddingSet load_jsonl(const std::filesystem::path& path) {
    std::vector<std::string> ids;
    std::vector<float> values;
    std::size_t dim = 0;
    std::string encoder = path.stem().string();
    for_each_jsonl(path, [&](std::size_t line, const Json& rec) {
        ids.push_back(require_string(rec, "id"));
        if (auto e = optional_string(rec, "encoder"); !e.empty()) encoder = e;
        const Json& vec = require(rec, "vector");
        if (!vec.is_array() || vec.empty()) {
            throw Error(ErrorCode::parse_error, "line " + std::to_string(line) + ": 'vector' must be a non-empty array");
        }
        if (dim == 0) dim = vec.size();
        if (vec.size() != dim) {
            throw Error(ErrorCode::dimension_mismatch, "line " + std::to_string(line) + ": vector has dim " +
                                                           std::to_string(vec.size()) + ", expected " +
                                                           std::to_string(dim));
        }
        for (const auto& x : vec) {
            if (!x.is_number()) throw Error(ErrorCode::parse_error, "line " + std::to_string(line) + ": non-numeric entry");
            values.push_back(x.get<float>());
        }
    });
    if (ids.empty()) throw Error(ErrorCode::parse_error, "no vectors in " + path.string());
    return EmbeddingSet::from_rows(std::move(encoder), dim, values, std::move(ids));
}

}  // namespace

void EmbeddingSet::FreeDeleter::operator()(float* p) const { std::free(p); }

EmbeddingSet EmbeddingSet::from_rows(std::string encoder_name, std::size_t dim, std::span<const float> values,
                                     std::vector<std::string> ids) {
    if (dim == 0) throw Error(ErrorCode::dimension_mismatch, "embedding dim must be positive");
    if (values.size() != ids.size() * dim) {
        throw Error(ErrorCode::dimension_mismatch, std::to_string(values.size()) + " values do not form " +
                                                       std::to_string(ids.size()) + " rows of dim " +
                                                       std::to_string(dim));
    }
    EmbeddingSet set;
    set.encoder_name_ = std::move(encoder_name);
    set.dim_ = dim;
    set.stride_ = (dim + kStrideMultiple - 1) / kStrideMultiple * kStrideMultiple;
    const std::size_t n = ids.size();
    const std::size_t bytes = std::max<std::size_t>(1, n * set.stride_) * sizeof(float);
    auto* raw = static_cast<float*>(std::aligned_alloc(kAlignment, (bytes + kAlignment - 1) / kAlignment * kAlignment));
    if (raw == nullptr) throw std::bad_alloc();
    set.data_ = std::shared_ptr<float[]>(raw, FreeDeleter{});
    std::memset(raw, 0, bytes);

    auto index = std::make_shared<std::unordered_map<std::string, std::size_t>>();
    index->reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!index->emplace(ids[i], i).second) {
            throw Error(ErrorCode::duplicate_id, "duplicate embedding id '" + ids[i] + "'", ids[i]);
        }
        const float* src = values.data() + i * dim;
        double sq = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            if (!std::isfinite(src[k])) {
                throw Error(ErrorCode::schema_violation, "non-finite value in embedding '" + ids[i] + "'", ids[i]);
            }
            sq += double(src[k]) * double(src[k]);
        }
        const double norm = std::sqrt(sq);
        if (norm == 0.0) {
            throw Error(ErrorCode::zero_norm, "zero-norm embedding for id '" + ids[i] + "'", ids[i]);
        }
        float* dst = raw + i * set.stride_;
        if (std::abs(norm - 1.0) <= kUnitTolerance) {
            std::memcpy(dst, src, dim * sizeof(float));
        } else {
            for (std::size_t k = 0; k < dim; ++k) dst[k] = static_cast<float>(double(src[k]) / norm);
        }
    }
    set.ids_ = std::move(ids);
    set.index_ = std::move(index);
    return set;
}

std::ptrdiff_t EmbeddingSet::index_of(const std::string& id) const {
    auto it = index_->find(id);
    return it == index_->end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

EmbeddingSet load_embeddings(const std::filesystem::path& manifest_path) {
    if (manifest_path.extension() == ".jsonl") return load_jsonl(manifest_path);
    return load_manifest(manifest_path);
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& manifest_path) {
    const auto base = manifest_path.parent_path();
    const std::string stem = manifest_path.stem().string();
    std::string matrix(set.count() * set.dim() * sizeof(float), '\0');
    for (std::size_t i = 0; i < set.count(); ++i) {
        auto r = set.row(i);
        for (std::size_t k = 0; k < set.dim(); ++k) store_f32le(r[k], matrix.data() + 4 * (i * set.dim() + k));
    }
    std::string ids;
    for (const auto& id : set.ids()) ids += id + "\n";
    atomic_write(base / (stem + ".f32"), matrix);
    atomic_write(base / (stem + ".ids"), ids);
    Json m;
    m["encoder_name"] = set.encoder_name();
    m["dim"] = set.dim();
    m["count"] = set.count();
    m["dtype"] = "f32le";
    m["matrix_file"] = stem + ".f32";
    m["ids_file"] = stem + ".ids";
    write_json_file(manifest_path, m);
}

}  // namespace vhbench
