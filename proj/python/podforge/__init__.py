"""Multi-agent podcast generation: metrics, voice dedup, mixing and judging."""

from ._core import (
    AllStopwordsError,
    InvariantError,
    PodforgeError,
    ProviderError,
    RangeError,
    ValidationError,
    compute_metrics,
    dedup_captions,
    distinct_n,
    info_density,
    judge_pair,
    mattr,
    mix,
    mock_script,
    semantic_div,
    tokenize,
)

__all__ = [
    "AllStopwordsError",
    "InvariantError",
    "PodforgeError",
    "ProviderError",
    "RangeError",
    "ValidationError",
    "compute_metrics",
    "dedup_captions",
    "distinct_n",
    "info_density",
    "judge_pair",
    "mattr",
    "mix",
    "mock_script",
    "semantic_div",
    "tokenize",
]
