// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vhbench/image_store.hpp"

#include "vhbench/error.hpp"
#include "vhbench/fsutil.hpp"
#include "vhbench/hashing.hpp"

#include <cstdint>
#include <cstring>

namespace vhbench {

namespace {

std::uint32_t be32(const unsigned char* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) | p[3];
}

std::uint32_t le32(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

bool png_complete(std::string_view b) {
    const auto* p = reinterpret_cast<const unsigned char*>(b.data());
    std::size_t pos = 8;
    bool first = true;
    while (pos + 12 <= b.size()) {
        std::uint32_t len = be32(p + pos);
        std::string_view type(b.data() + pos + 4, 4);
        if (first && type != "IHDR") return false;
        first = false;
        std::size_t next = pos + 12 + std::size_t(len);
        if (next > b.size()) return false;
        if (type == "IEND") return next == b.size();
        pos = next;
    }
    return false;
}

}  // namespace

std::optional<std::string> sniff_image(std::string_view b) {
    const auto* p = reinterpret_cast<const unsigned char*>(b.data());
    if (b.size() >= 8 && std::memcmp(p, "\x89PNG\r\n\x1a\n", 8) == 0) {
        if (png_complete(b)) return "png";
        return std::nullopt;
    }
    if (b.size() >= 4 && p[0] == 0xFF && p[1] == 0xD8 && p[2] == 0xFF) {
        if (p[b.size() - 2] == 0xFF && p[b.size() - 1] == 0xD9) return "jpg";
        return std::nullopt;
    }
    if (b.size() >= 7 && (b.substr(0, 6) == "GIF87a" || b.substr(0, 6) == "GIF89a")) {
        if (p[b.size() - 1] == 0x3B) return "gif";
        return std::nullopt;
    }
    if (b.size() >= 12 && b.substr(0, 4) == "RIFF" && b.substr(8, 4) == "WEBP") {
        if (std::size_t(le32(p + 4)) + 8 == b.size()) return "webp";
        return std::nullopt;
    }
    return std::nullopt;
}

ImageStore::ImageStore(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_ / "images");
}

ImageRecord ImageStore::put(std::string_view bytes, ImageSource source, std::optional<GeneratorMeta> meta) {
    auto ext = sniff_image(bytes);
    if (!ext) {
        throw Error(ErrorCode::invalid_image_payload, "payload is not a complete PNG/JPEG/GIF/WebP image",
                    std::to_string(bytes.size()) + " bytes");
    }
    const std::string hash = sha256_hex(bytes);
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(hash); it != cache_.end()) return it->second;

    const std::string rel = "images/" + hash.substr(0, 2) + "/" + hash + "." + *ext;
    const auto sidecar = root_ / "images" / hash.substr(0, 2) / (hash + ".json");
    if (std::filesystem::exists(sidecar)) {
        auto rec = image_from_json(read_json_file(sidecar));
        cache_.emplace(hash, rec);
        return rec;
    }
    ImageRecord rec;
    rec.id = hash;
    rec.source = source;
    rec.content_hash = hash;
    rec.storage_path = rel;
    rec.generator_meta = std::move(meta);
    atomic_write(root_ / rel, bytes);
    write_json_file(sidecar, to_json(rec));
    cache_.emplace(hash, rec);
    return rec;
}

ImageRecord ImageStore::ingest_file(const std::filesystem::path& file, ImageSource source) {
    return put(read_file(file), source);
}

std::optional<ImageRecord> ImageStore::find(const std::string& hash) const {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(hash); it != cache_.end()) return it->second;
    if (hash.size() < 2) return std::nullopt;
    const auto sidecar = root_ / "images" / hash.substr(0, 2) / (hash + ".json");
    if (!std::filesystem::exists(sidecar)) return std::nullopt;
    auto rec = image_from_json(read_json_file(sidecar));
    cache_.emplace(hash, rec);
    return rec;
}

ImageRecord ImageStore::get(const std::string& hash) const {
    auto rec = find(hash);
    if (!rec) throw Error(ErrorCode::not_found, "no stored image with hash " + hash);
    return *rec;
}

std::string ImageStore::read_bytes(const std::string& hash) const {
    auto rec = get(hash);
    std::string bytes = read_file(absolute_path(rec));
    if (sha256_hex(bytes) != rec.content_hash) {
        throw Error(ErrorCode::io_error, "stored image " + hash + " does not match its content hash");
    }
    return bytes;
}

std::filesystem::path ImageStore::absolute_path(const ImageRecord& record) const {
    return root_ / record.storage_path;
}

}  // namespace vhbench
