"""Exact packet-level LRQ shaping simulator and latency bound engine."""

from .model import (
    ArrivalCurve,
    FlowSpec,
    LRQConstraint,
    Packet,
    TBConstraint,
    merge_fifo,
)
from .rational import format_rational, rational
from .service import GRParams
from .shaping import (
    interleaved_lrq_run,
    per_flow_lrq_run,
)
from .traffic import (
    check_arrival_curve,
    check_g_regular,
    generate_lrq_source,
    generate_tb_source,
)

__all__ = [
    "ArrivalCurve",
    "FlowSpec",
    "GRParams",
    "LRQConstraint",
    "Packet",
    "TBConstraint",
    "check_arrival_curve",
    "check_g_regular",
    "format_rational",
    "generate_lrq_source",
    "generate_tb_source",
    "interleaved_lrq_run",
    "merge_fifo",
    "per_flow_lrq_run",
    "rational",
]

__version__ = "0.1.0"
