// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vhbench {

enum class ErrorCode {
    invalid_argument,
    unknown_mode,
    parse_error,
    schema_violation,
    io_error,
    dimension_mismatch,
    zero_norm,
    duplicate_id,
    id_set_mismatch,
    missing_slot,
    extraneous_binding,
    not_found,
    transport_failure,
    replay_miss,
    invalid_image_payload,
    already_converted,
    balance_violation,
    invalid_state,
    none_available,
    unauthorized,
    missing_verdicts,
    incomplete_run,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code plus a free-form detail string.
/// The HTTP layer and the CLI both render it as {code, message, detail}.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, std::string detail = {})
        : std::runtime_error(std::move(message)), code_(code), detail_(std::move(detail)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace vhbench
