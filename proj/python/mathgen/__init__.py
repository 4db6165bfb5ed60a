"""Agentic generation of math question-answer pairs.

The heavy lifting lives in the compiled ``_mathgen`` extension; this package
re-exports it under a stable name.
"""

from ._mathgen import (
    BackendError,
    ConfigError,
    CorpusError,
    MathgenError,
    ParseError,
    TurnFailed,
    assign_difficulty,
    curate_bloom,
    expected_band,
    load_corpus,
    method_table,
    normalize_percent,
    parse_corpus,
    parse_decision,
    parse_qa,
    parse_score,
    render_2dp,
    render_template,
    report,
    run_experiment,
    strategy_table,
)

__version__ = "0.1.0"
