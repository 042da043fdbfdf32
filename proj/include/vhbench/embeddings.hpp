// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace vhbench {

/// Immutable set of unit-norm image embeddings from one encoder.
///
/// Rows are stored row-major with a stride padded to a multiple of 16 floats
/// (zero-filled), 64-byte aligned, so the similarity kernel can run full-width
/// vector loads without tail handling. `row(i)` exposes only the first `dim()`
/// entries.
class EmbeddingSet {
public:
    /// Tolerance on |norm - 1| below which a row is considered already normalized
    /// and kept bit-for-bit.
    static constexpr double kUnitTolerance = 1e-6;

    /// Validates and normalizes `values` (count x dim, row-major).
    /// Throws dimension_mismatch, zero_norm (naming the row id), duplicate_id,
    /// or schema_violation for non-finite values.
    static EmbeddingSet from_rows(std::string encoder_name, std::size_t dim, std::span<const float> values,
                                  std::vector<std::string> ids);

    const std::string& encoder_name() const { return encoder_name_; }
    std::size_t dim() const { return dim_; }
    std::size_t count() const { return ids_.size(); }
    std::size_t stride() const { return stride_; }
    const std::vector<std::string>& ids() const { return ids_; }

    std::span<const float> row(std::size_t i) const { return {data_.get() + i * stride_, dim_}; }
    const float* padded_data() const { return data_.get(); }

    /// Row index for an id, or -1 when absent.
    std::ptrdiff_t index_of(const std::string& id) const;

private:
    struct FreeDeleter {
        void operator()(float* p) const;
    };

    EmbeddingSet() = default;

    std::string encoder_name_;
    std::size_t dim_ = 0;
    std::size_t stride_ = 0;
    std::shared_ptr<float[]> data_;
    std::vector<std::string> ids_;
    std::shared_ptr<const std::unordered_map<std::string, std::size_t>> index_;
};

/// Loads either a JSON manifest
///   {encoder_name, dim, count, dtype: "f32le", matrix_file, ids_file}
/// (file paths relative to the manifest) or, for files ending in `.jsonl`,
/// one {"id": ..., "vector": [...]} object per line.
EmbeddingSet load_embeddings(const std::filesystem::path& manifest_path);

/// Writes `<stem>.f32` and `<stem>.ids` next to `manifest_path` plus the manifest itself.
void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& manifest_path);

}  // namespace vhbench
