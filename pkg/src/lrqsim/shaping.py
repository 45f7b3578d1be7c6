"""Interleaved and per-flow LRQ shapers.

The interleaved shaper is one FIFO queue shared by an aggregate; only the
head packet is eligibility-checked, against its own flow's last departure
plus the length-rate quotient. The whole behaviour collapses to the exact
recursion

    d^j = max{ a^j, d^{j-1}, d^{f,prev} + l^{f,prev} / r^f }

with all per-flow state initialised to zero. The shaper is instantaneous at
departure: transmission time belongs to downstream server models.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .model import Packet
from .rational import rational


@dataclass
class ShaperRecord:
    """One output packet of a shaper run (aggregate index j is 1-based)."""

    j: int
    flow_id: str
    seq: int
    length: Fraction
    arrival: Fraction
    departure: Fraction


@dataclass
class ShaperTrace:
    records: list[ShaperRecord] = field(default_factory=list)

    @property
    def departures(self) -> list[Fraction]:
        return [r.departure for r in self.records]

    @property
    def arrivals(self) -> list[Fraction]:
        return [r.arrival for r in self.records]

    def per_flow(self, flow_id: str) -> list[ShaperRecord]:
        return [r for r in self.records if r.flow_id == flow_id]

    def max_delay(self) -> Fraction:
        if not self.records:
            return Fraction(0)
        return max(r.departure - r.arrival for r in self.records)


@dataclass
class EligibilityTable:
    """Per-flow shaper state: last departure, last length, shaper rate.

    The derived eligibility of flow f is last_departure + last_length/rate;
    zero initial state realises the original E^{f,1}=0 condition. Setting
    `minus_inf_init` ignores the eligibility term for each flow's first
    packet instead (the Pi-regularity variant's initial condition).
    """

    rates: dict
    minus_inf_init: bool = False
    last_departure: dict = field(default_factory=dict)
    last_length: dict = field(default_factory=dict)

    def eligibility(self, flow_id: str) -> Optional[Fraction]:
        if flow_id not in self.rates:
            raise KeyError(f"unknown flow {flow_id!r}")
        if flow_id not in self.last_departure:
            return None if self.minus_inf_init else Fraction(0)
        return (
            self.last_departure[flow_id]
            + self.last_length[flow_id] / self.rates[flow_id]
        )

    def record_departure(self, flow_id: str, departure: Fraction, length: Fraction):
        self.last_departure[flow_id] = departure
        self.last_length[flow_id] = length


def _check_sorted(arrivals: Sequence[Packet]):
    for prev, cur in zip(arrivals, arrivals[1:]):
        if cur.arrival < prev.arrival:
            raise ValueError("shaper input must be sorted by arrival time")


def interleaved_lrq_run(
    arrivals: Sequence[Packet],
    rates: Mapping[str, object],
    initial: str = "zero",
) -> ShaperTrace:
    """Run an interleaved LRQ shaper over a FIFO-merged packet list."""
    if initial not in ("zero", "minus_inf"):
        raise ValueError("initial must be 'zero' or 'minus_inf'")
    _check_sorted(arrivals)
    rates = {f: rational(r) for f, r in rates.items()}
    table = EligibilityTable(rates, minus_inf_init=(initial == "minus_inf"))
    trace = ShaperTrace()
    d_prev = Fraction(0)
    for j, p in enumerate(arrivals, start=1):
        elig = table.eligibility(p.flow_id)
        d = max(p.arrival, d_prev) if elig is None else max(p.arrival, d_prev, elig)
        table.record_departure(p.flow_id, d, p.length)
        trace.records.append(ShaperRecord(j, p.flow_id, p.seq, p.length, p.arrival, d))
        d_prev = d
    return trace


def per_flow_lrq_run(arrivals: Sequence[Packet], rate) -> ShaperTrace:
    """Per-flow LRQ: d^j = max{a^j, d^{j-1} + l^{j-1}/r} (minimal regulator)."""
    flows = {p.flow_id for p in arrivals}
    if len(flows) > 1:
        raise ValueError(f"per-flow shaper got multiple flows: {sorted(flows)}")
    _check_sorted(arrivals)
    rate = rational(rate)
    trace = ShaperTrace()
    d_prev = Fraction(0)
    l_prev = Fraction(0)
    for j, p in enumerate(arrivals, start=1):
        d = max(p.arrival, d_prev + l_prev / rate)
        trace.records.append(ShaperRecord(j, p.flow_id, p.seq, p.length, p.arrival, d))
        d_prev, l_prev = d, p.length
    return trace


def per_flow_lrq_closed_form(arrivals: Sequence[Packet], rate) -> list[Fraction]:
    """Max-plus closed form: d^j = max_{0<=k<=j} {a^k + (L(j) - L(k))/r}.

    Independent oracle for the recursion above; O(n^2) by construction.
    """
    rate = rational(rate)
    a = [Fraction(0)] + [p.arrival for p in arrivals]
    L = [Fraction(0), Fraction(0)]  # L(k) = total length of packets < k
    for p in arrivals[:-1]:
        L.append(L[-1] + p.length)
    out = []
    for j in range(1, len(arrivals) + 1):
        out.append(max(a[k] + (L[j] - L[k]) / rate for k in range(j + 1)))
    return out


def conformance_filter(
    arrivals: Sequence[Packet],
    rates: Mapping[str, object],
    policy: str = "queue_all",
) -> tuple[list[Packet], list[Packet]]:
    """Split the input into (admitted, dropped) under the chosen policy.

    drop_excess drops a packet when its flow already has a packet in-system
    (in [a, d)) at its arrival instant, preventing a non-conformant flow from
    delaying others. queue_all admits everything.
    """
    if policy not in ("queue_all", "drop_excess"):
        raise ValueError(f"unknown policy {policy!r}")
    if policy == "queue_all":
        return list(arrivals), []
    _check_sorted(arrivals)
    rates = {f: rational(r) for f, r in rates.items()}
    table = EligibilityTable(rates)
    admitted: list[Packet] = []
    dropped: list[Packet] = []
    in_system: dict[str, Fraction] = {}  # flow -> departure of last admitted packet
    d_prev = Fraction(0)
    for p in arrivals:
        last_d = in_system.get(p.flow_id)
        if last_d is not None and last_d > p.arrival:
            dropped.append(p)
            continue
        d = max(p.arrival, d_prev, table.eligibility(p.flow_id))
        table.record_departure(p.flow_id, d, p.length)
        in_system[p.flow_id] = d
        d_prev = d
        admitted.append(p)
    return admitted, dropped


def generalized_virtual_times(
    arrivals: Sequence[Packet], rates: Mapping[str, object]
) -> list[tuple[Fraction, Fraction]]:
    """Generalized VST/VFT clocks over the aggregate.

    E~^j = max{a^j, E~^{j-1} + l^{j-1}/r^{(j-1)}},
    F~^j = max{a^j, F~^{j-1}} + l^j/r^{(j)},
    with zero initial state; r^{(j)} is the rate of packet j's own flow.
    The identity F~^j = E~^j + l^j/r^{(j)} holds on every run.
    """
    _check_sorted(arrivals)
    rates = {f: rational(r) for f, r in rates.items()}
    out = []
    E = Fraction(0)
    F = Fraction(0)
    l_prev = Fraction(0)
    r_prev: Optional[Fraction] = None
    for p in arrivals:
        r = rates[p.flow_id]
        gap = Fraction(0) if r_prev is None else l_prev / r_prev
        E = max(p.arrival, E + gap)
        F = max(p.arrival, F) + p.length / r
        out.append((E, F))
        l_prev, r_prev = p.length, r
    return out
