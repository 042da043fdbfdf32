// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vhbench/error.hpp"

namespace vhbench {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid-argument";
        case ErrorCode::unknown_mode: return "unknown-mode";
        case ErrorCode::parse_error: return "parse-error";
        case ErrorCode::schema_violation: return "schema-violation";
        case ErrorCode::io_error: return "io-error";
        case ErrorCode::dimension_mismatch: return "dimension-mismatch";
        case ErrorCode::zero_norm: return "zero-norm";
        case ErrorCode::duplicate_id: return "duplicate-id";
        case ErrorCode::id_set_mismatch: return "id-set-mismatch";
        case ErrorCode::missing_slot: return "missing-slot";
        case ErrorCode::extraneous_binding: return "extraneous-binding";
        case ErrorCode::not_found: return "not-found";
        case ErrorCode::transport_failure: return "transport-failure";
        case ErrorCode::replay_miss: return "replay-miss";
        case ErrorCode::invalid_image_payload: return "invalid-image-payload";
        case ErrorCode::already_converted: return "already-converted";
        case ErrorCode::balance_violation: return "balance-violation";
        case ErrorCode::invalid_state: return "invalid-state";
        case ErrorCode::none_available: return "none-available";
        case ErrorCode::unauthorized: return "unauthorized";
        case ErrorCode::missing_verdicts: return "missing-verdicts";
        case ErrorCode::incomplete_run: return "incomplete-run";
    }
    return "unknown";
}

}  // namespace vhbench
