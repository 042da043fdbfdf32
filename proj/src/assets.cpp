// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vhbench/assets.hpp"

namespace vhbench::assets {

std::optional<std::string_view> find(std::string_view path) {
    for (const auto& a : all()) {
        if (a.path == path) return a.bytes;
    }
    return std::nullopt;
}

}  // namespace vhbench::assets
