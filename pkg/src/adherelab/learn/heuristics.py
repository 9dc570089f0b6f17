"""Worker-style scoring rules used as baselines."""

from __future__ import annotations

from ..tasklab import TaskSample

HEURISTIC_KINDS = ("lw_misses", "t_misses", "lw_manual")


def heuristic_score(kind: str, sample: TaskSample) -> int:
    """Integer risk score from the raw input sequences.

    lw_misses counts missed doses over the last 7 input days (the rule the
    dashboard itself ranks by), t_misses counts misses over the whole input
    window, and lw_manual counts manually marked doses in the last 7 days.
    """
    if kind == "lw_misses":
        return sum(1 for b in sample.call_seq[-7:] if b == 0)
    if kind == "t_misses":
        return sum(1 for b in sample.call_seq if b == 0)
    if kind == "lw_manual":
        return sum(sample.manual_seq[-7:])
    raise ValueError(f"unknown heuristic {kind!r}; expected one of {HEURISTIC_KINDS}")
