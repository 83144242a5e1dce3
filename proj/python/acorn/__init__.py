"""Python bindings for the ACoRN dataset and evaluation core."""

from ._core import (
    AcornError,
    __version__,
    classify,
    compression_ratio,
    contains_answer,
    dataset_stats,
    decode_adapter_request,
    draw_outcome,
    encode_adapter_response,
    exact_match,
    normalize_text,
    token_f1,
    validate_train_line,
)

__all__ = [
    "AcornError",
    "__version__",
    "classify",
    "compression_ratio",
    "contains_answer",
    "dataset_stats",
    "decode_adapter_request",
    "draw_outcome",
    "encode_adapter_response",
    "exact_match",
    "normalize_text",
    "token_f1",
    "validate_train_line",
]
