// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string_view>
#include <vector>

namespace vhbench::assets {

/// A file from the assets/ tree compiled into the library.
struct Asset {
    std::string_view path;  // relative to assets/, forward slashes
    std::string_view bytes;
};

const std::vector<Asset>& all();

/// Bytes of the embedded asset at `path`; nullopt when absent.
std::optional<std::string_view> find(std::string_view path);

}  // namespace vhbench::assets
