# Copyright (C) 2026 The vhbench Authors
# SPDX-License-Identifier: Apache-2.0
"""Python access to the vhbench native core."""

from ._core import (  # noqa: F401
    Error,
    check_balance,
    derive_seed,
    fleiss_kappa,
    kappa_from_labels,
    lint_prompts,
    mine,
    mine_files,
    modes,
    parse_yes_no,
    prompt_ids,
    prompt_text,
    question_templates,
    read_benchmark,
    read_run,
    render_question,
    render_report,
    report_average,
    sample_items,
    seeded_shuffle,
    select_split,
)

__version__ = "0.1.0"
