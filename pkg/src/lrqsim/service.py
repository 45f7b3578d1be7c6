"""Server primitives: reference clocks, FIFO links, strict priority, GR fits.

A Guaranteed Rate server GR(r, e) promises d^i <= F^i(r) + e where F is the
virtual finish time clock of a dedicated rate-r link. Error terms may be
negative (a per-flow LRQ shaper is GR(r, -l_min/r)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .model import Packet
from .rational import rational


@dataclass(frozen=True)
class GRParams:
    rate: Fraction
    error: Fraction

    def __post_init__(self):
        object.__setattr__(self, "rate", rational(self.rate))
        object.__setattr__(self, "error", rational(self.error))
        if self.rate <= 0:
            raise ValueError("GR rate must be positive")


@dataclass
class ServedPacket:
    packet: Packet
    arrival: Fraction
    service_start: Fraction
    departure: Fraction


@dataclass
class ServerTrace:
    records: list[ServedPacket] = field(default_factory=list)

    @property
    def departures(self) -> list[Fraction]:
        return [r.departure for r in self.records]

    def max_delay(self) -> Fraction:
        if not self.records:
            return Fraction(0)
        return max(r.departure - r.arrival for r in self.records)

    def event_log(self) -> list[tuple[Fraction, str, str, int]]:
        """Line-oriented (time, event kind, flow id, seq) records."""
        events = []
        for r in self.records:
            events.append((r.arrival, "arrival", r.packet.flow_id, r.packet.seq))
            events.append((r.service_start, "service_start", r.packet.flow_id, r.packet.seq))
            events.append((r.departure, "departure", r.packet.flow_id, r.packet.seq))
        events.sort(key=lambda ev: (ev[0], ev[2], ev[3], ev[1]))
        return events


def _check_sorted(arrivals: Sequence[Packet]):
    for prev, cur in zip(arrivals, arrivals[1:]):
        if cur.arrival < prev.arrival:
            raise ValueError("server input must be sorted by arrival time")


def reference_clocks(
    trace: Sequence[Packet], rate
) -> list[tuple[Fraction, Fraction]]:
    """Virtual start/finish time clocks at the reference rate.

    E^i = max{a^i, E^{i-1} + l^{i-1}/r}, F^i = max{a^i, F^{i-1}} + l^i/r,
    zero initial state. F^i = E^i + l^i/r on every output.
    """
    _check_sorted(trace)
    rate = rational(rate)
    out = []
    E = Fraction(0)
    F = Fraction(0)
    l_prev = Fraction(0)
    for p in trace:
        E = max(p.arrival, E + l_prev / rate)
        F = max(p.arrival, F) + p.length / rate
        out.append((E, F))
        l_prev = p.length
    return out


def fifo_link_run(arrivals: Sequence[Packet], capacity) -> ServerTrace:
    """Work-conserving FIFO transmission on a constant-rate link.

    Departure of packet i is max{a^i, d^{i-1}} + l^i/c, so the link is
    GR(c, 0) with departures equal to F^i(c) exactly.
    """
    capacity = rational(capacity)
    if capacity <= 0:
        raise ValueError("capacity must be positive")
    _check_sorted(arrivals)
    trace = ServerTrace()
    d_prev = Fraction(0)
    for p in arrivals:
        start = max(p.arrival, d_prev)
        d = start + p.length / capacity
        trace.records.append(ServedPacket(p, p.arrival, start, d))
        d_prev = d
    return trace


def strict_priority_run(
    classes: Sequence[Sequence[Packet]], capacity
) -> list[ServerTrace]:
    """Non-preemptive strict priority on a constant-rate link.

    `classes` is ordered highest priority first; FIFO within a class.
    Scheduling decisions happen at service completions and at arrivals to an
    idle server: the head packet of the highest-priority class with an
    arrived head enters service for exactly l/c seconds.
    """
    capacity = rational(capacity)
    if capacity <= 0:
        raise ValueError("capacity must be positive")
    for cls in classes:
        _check_sorted(cls)
    heads = [0] * len(classes)
    traces = [ServerTrace() for _ in classes]
    t = Fraction(0)
    remaining = sum(len(cls) for cls in classes)
    while remaining:
        # earliest head arrival over classes, used when the server is idle
        pending = [
            (classes[k][heads[k]].arrival, k)
            for k in range(len(classes))
            if heads[k] < len(classes[k])
        ]
        t = max(t, min(a for a, _ in pending))
        chosen = next(k for a, k in sorted(pending, key=lambda x: x[1]) if a <= t)
        p = classes[chosen][heads[chosen]]
        heads[chosen] += 1
        start = max(t, p.arrival)
        d = start + p.length / capacity
        traces[chosen].records.append(ServedPacket(p, p.arrival, start, d))
        t = d
        remaining -= 1
    return traces


def sp_gr_params(capacity, sigma_u, rho_u, l_l_max, l_f_min) -> GRParams:
    """GR characterization of a non-preemptive strict-priority server.

    For a flow (or class aggregate) f with higher-priority interference
    (sigma_u, rho_u) and lower-priority maximum length l_l_max:
    r = c - rho_u and
    e = (sigma_u + l_l_max)/(c - rho_u) - l_f_min/(c - rho_u) + l_f_min/c.
    """
    c = rational(capacity)
    sigma_u, rho_u = rational(sigma_u), rational(rho_u)
    l_l_max, l_f_min = rational(l_l_max), rational(l_f_min)
    if rho_u >= c:
        raise ValueError("infeasible: higher-priority rate >= capacity")
    r = c - rho_u
    e = (sigma_u + l_l_max) / r - l_f_min / r + l_f_min / c
    return GRParams(r, e)


def fit_min_error(
    arrivals: Sequence[Packet], departures: Sequence[Fraction], rate
) -> Fraction:
    """Minimal error e such that d^i <= F^i(rate) + e over a complete trace.

    Equals max_i (d^i - F^i); may be negative.
    """
    if len(arrivals) != len(departures):
        raise ValueError("arrivals and departures must align")
    if not arrivals:
        raise ValueError("empty trace")
    clocks = reference_clocks(arrivals, rate)
    return max(d - F for d, (_, F) in zip(departures, clocks))


def fit_min_error_server(trace: ServerTrace, rate) -> Fraction:
    return fit_min_error(
        [r.packet for r in trace.records], trace.departures, rate
    )


def gr_to_st(params: GRParams, l_max) -> tuple[Fraction, Fraction]:
    """GR(r, e) is also ST(r, e + l_max/r); same pair is the latency-rate
    service curve (rate r, latency e + l_max/r)."""
    l_max = rational(l_max)
    return params.rate, params.error + l_max / params.rate


def st_to_gr(rate, tau, l_min) -> GRParams:
    """ST/latency-rate (r, tau) is also GR(r, tau - l_min/r)."""
    rate, tau, l_min = rational(rate), rational(tau), rational(l_min)
    return GRParams(rate, tau - l_min / rate)


def convert_gr_st_sc(
    params: Optional[GRParams] = None,
    l_min=None,
    l_max=None,
    direction: str = "gr_to_st",
    rate=None,
    tau=None,
):
    """Convert between GR, ST and latency-rate characterizations."""
    if direction == "gr_to_st":
        if params is None or l_max is None:
            raise ValueError("gr_to_st needs params and l_max")
        return gr_to_st(params, l_max)
    if direction == "st_to_gr":
        if rate is None or tau is None or l_min is None:
            raise ValueError("st_to_gr needs rate, tau and l_min")
        return st_to_gr(rate, tau, l_min)
    raise ValueError(f"unknown direction {direction!r}")
