"""Tab-separated trace serialization.

Packet traces: one record per packet with columns
    flow_id  seq  length  arrival  [departure]
Times and lengths are written as exact fraction strings ("5/4") or integers,
so parse(serialize(trace)) is the identity.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .model import Packet
from .shaping import ShaperTrace


def _fmt(x: Fraction) -> str:
    return str(x)


def serialize_packets(packets: Sequence[Packet]) -> str:
    lines = ["# flow_id\tseq\tlength\tarrival"]
    for p in packets:
        lines.append(f"{p.flow_id}\t{p.seq}\t{_fmt(p.length)}\t{_fmt(p.arrival)}")
    return "\n".join(lines) + "\n"


def parse_packets(text: str) -> list[Packet]:
    packets = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ValueError(f"line {lineno}: expected 4 columns, got {len(parts)}")
        flow_id, seq, length, arrival = parts
        packets.append(Packet(flow_id, int(seq), Fraction(length), Fraction(arrival)))
    return packets


def serialize_shaper_trace(trace: ShaperTrace) -> str:
    lines = ["# j\tflow_id\tseq\tlength\tarrival\tdeparture"]
    for r in trace.records:
        lines.append(
            f"{r.j}\t{r.flow_id}\t{r.seq}\t{_fmt(r.length)}"
            f"\t{_fmt(r.arrival)}\t{_fmt(r.departure)}"
        )
    return "\n".join(lines) + "\n"
