// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vhbench/model.hpp"

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace vhbench {

/// Recognizes PNG, JPEG, GIF and WebP payloads and checks that the container
/// is structurally complete (no truncation). Returns the file extension.
std::optional<std::string> sniff_image(std::string_view bytes);

/// Content-addressed image directory. Bytes live at images/<h0h1>/<hash>.<ext>
/// with a <hash>.json sidecar holding the ImageRecord; identical bytes
/// deduplicate to one record.
class ImageStore {
public:
    explicit ImageStore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    /// Throws Error{invalid_image_payload} when the bytes are not a complete image.
    ImageRecord put(std::string_view bytes, ImageSource source,
                    std::optional<GeneratorMeta> meta = std::nullopt);

    ImageRecord ingest_file(const std::filesystem::path& file, ImageSource source = ImageSource::dataset);

    std::optional<ImageRecord> find(const std::string& content_hash) const;
    ImageRecord get(const std::string& content_hash) const;

    /// Reads the stored bytes and re-verifies their hash.
    std::string read_bytes(const std::string& content_hash) const;

    std::filesystem::path absolute_path(const ImageRecord& record) const;

private:
    std::filesystem::path root_;
    mutable std::mutex mu_;
    mutable std::map<std::string, ImageRecord> cache_;
};

}  // namespace vhbench
