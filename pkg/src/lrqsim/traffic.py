"""Traffic sources and regularity checkers.

Generators and checkers are deliberately independent implementations of the
same contracts, so each validates the other: every generated trace must pass
its checker exactly, and the checkers are brute-force window scans rather
than reconstructions of the generator logic.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Optional, Sequence

from .model import ArrivalCurve, FlowSpec, LRQConstraint, Packet, TBConstraint
from .rational import rational

#: Denominator used when drawing exact random rationals.
_JITTER_DEN = 1000


def _flow_rng(flow_id: str, seed: int) -> random.Random:
    # per-flow named stream: reruns are byte-identical and independent of
    # other flows sharing the same scenario seed
    return random.Random(f"{flow_id}:{seed}")


def _draw_lengths(spec: FlowSpec, count: int, rng: Optional[random.Random]):
    if rng is None:
        return [spec.l_max] * count
    span = spec.l_max - spec.l_min
    return [
        spec.l_min + span * Fraction(rng.randrange(_JITTER_DEN + 1), _JITTER_DEN)
        for _ in range(count)
    ]


def _resolve_lengths(spec: FlowSpec, count: int, lengths, rng):
    if lengths is not None:
        lengths = [rational(l) for l in lengths]
        if len(lengths) != count:
            raise ValueError("lengths list must match count")
        for l in lengths:
            if not spec.l_min <= l <= spec.l_max:
                raise ValueError(f"length {l} outside [l_min, l_max]")
        return lengths
    return _draw_lengths(spec, count, rng)


def generate_lrq_source(
    spec: FlowSpec,
    count: int,
    mode: str = "greedy",
    seed: int = 0,
    lengths: Optional[Sequence] = None,
    start=0,
) -> list[Packet]:
    """Generate an LRQ(r)-conformant packet trace.

    greedy: consecutive gaps equal exactly l^{i-1}/r. jittered: adds a
    seed-reproducible extra rational gap per packet, which can only loosen
    the constraint.
    """
    if not isinstance(spec.constraint, LRQConstraint):
        raise ValueError("generate_lrq_source needs an LRQ-constrained spec")
    if count < 1:
        raise ValueError("count must be >= 1")
    if mode not in ("greedy", "jittered"):
        raise ValueError(f"unknown mode {mode!r}")
    rng = _flow_rng(spec.flow_id, seed) if mode == "jittered" else None
    lengths = _resolve_lengths(spec, count, lengths, rng)
    r = spec.constraint.rate
    gap_scale = spec.l_max / r
    packets = []
    t = rational(start)
    for i in range(count):
        if i > 0:
            t = t + lengths[i - 1] / r
            if rng is not None:
                t += gap_scale * Fraction(rng.randrange(_JITTER_DEN + 1), _JITTER_DEN)
        packets.append(Packet(spec.flow_id, i + 1, lengths[i], t))
    return packets


def generate_tb_source(
    spec: FlowSpec,
    count: int,
    mode: str = "greedy",
    seed: int = 0,
    lengths: Optional[Sequence] = None,
    start=0,
) -> list[Packet]:
    """Generate a (sigma, rho)-conformant packet trace via bucket emulation.

    The bucket starts full at sigma and refills at rho; a packet is emitted
    once the level covers its length. Emitting later than the earliest
    eligible time (jittered mode) can only leave the bucket fuller, so
    conformance is preserved for any jitter.
    """
    if not isinstance(spec.constraint, TBConstraint):
        raise ValueError("generate_tb_source needs a TB-constrained spec")
    if count < 1:
        raise ValueError("count must be >= 1")
    if mode not in ("greedy", "jittered"):
        raise ValueError(f"unknown mode {mode!r}")
    sigma, rho = spec.constraint.sigma, spec.constraint.rho
    rng = _flow_rng(spec.flow_id, seed) if mode == "jittered" else None
    lengths = _resolve_lengths(spec, count, lengths, rng)
    jitter_scale = spec.l_max / rho if rho > 0 else Fraction(1)
    packets = []
    level = sigma  # bucket level as of time t
    t = rational(start)
    for i, l in enumerate(lengths):
        if level < l:
            if rho == 0:
                raise ValueError(
                    f"rho=0 bucket exhausted before packet {i + 1}; "
                    "reduce count or lengths"
                )
            t += (l - level) / rho
            level = l
        if rng is not None:
            dt = jitter_scale * Fraction(rng.randrange(_JITTER_DEN + 1), _JITTER_DEN)
            level = min(sigma, level + rho * dt)
            t += dt
        level -= l
        packets.append(Packet(spec.flow_id, i + 1, l, t))
    return packets


def check_g_regular(trace: Sequence[Packet], rate) -> tuple[bool, Optional[int]]:
    """Exact g-regularity check with g(x) = x/rate.

    Verifies a^i >= a^j + (L(i) - L(j))/rate over all pairs 0 <= j <= i
    (with a^0 = 0, L the cumulative-length function). Returns (ok, index of
    first violating packet, 1-based) -- O(n^2), desk scale.
    """
    rate = rational(rate)
    if rate <= 0:
        raise ValueError("rate must be positive")
    arrivals = [p.arrival for p in trace]
    if any(b < a for a, b in zip(arrivals, arrivals[1:])):
        raise ValueError("trace must be sorted by arrival time")
    if any(p.length <= 0 for p in trace):
        raise ValueError("packet lengths must be positive")
    # L[i] = total length of packets strictly before the (1-based) packet i
    L = [Fraction(0)]
    for p in trace:
        L.append(L[-1] + p.length)
    a = [Fraction(0)] + list(arrivals)  # a[0] = 0 anchor
    n = len(trace)
    for i in range(1, n + 1):
        for j in range(i):
            if a[i] < a[j] + (L[i - 1] - (L[j - 1] if j else Fraction(0))) / rate:
                return False, i
    return True, None


def check_arrival_curve(
    trace: Sequence[Packet], curve: ArrivalCurve
) -> tuple[bool, Optional[tuple]]:
    """Exact min-plus envelope check over arrival-anchored windows.

    Window convention for packetized, left-continuous arrivals: for every
    pair of arrival instants s <= t, all packets with s <= a <= t count
    against curve(t - s), with width-zero windows (co-located batches)
    checked against the curve burst. Returns (ok, worst window) where the
    worst window is (s, t, traffic, allowed) with the largest excess.
    """
    arrivals = [p.arrival for p in trace]
    if any(b < a for a, b in zip(arrivals, arrivals[1:])):
        raise ValueError("trace must be sorted by arrival time")
    if not trace:
        return True, None
    # collapse to distinct instants with batch totals
    instants: list[Fraction] = []
    batch: list[Fraction] = []
    for p in trace:
        if instants and p.arrival == instants[-1]:
            batch[-1] += p.length
        else:
            instants.append(p.arrival)
            batch.append(p.length)
    prefix = [Fraction(0)]
    for b in batch:
        prefix.append(prefix[-1] + b)
    worst = None
    worst_excess = None
    ok = True
    m = len(instants)
    for i in range(m):
        for k in range(i, m):
            width = instants[k] - instants[i]
            total = prefix[k + 1] - prefix[i]
            allowed = curve.burst if width == 0 else curve.envelope(width)
            excess = total - allowed
            if worst_excess is None or excess > worst_excess:
                worst_excess = excess
                worst = (instants[i], instants[k], total, allowed)
            if total > allowed:
                ok = False
    return ok, worst


def lrq_to_arrival_curve(spec: FlowSpec) -> ArrivalCurve:
    """An LRQ(r) flow has the affine min-plus envelope r*t + l_max."""
    if not isinstance(spec.constraint, LRQConstraint):
        raise ValueError("spec is not LRQ-constrained")
    return ArrivalCurve.affine(spec.constraint.rate, spec.l_max)


def tb_to_arrival_curve(spec: FlowSpec) -> ArrivalCurve:
    if not isinstance(spec.constraint, TBConstraint):
        raise ValueError("spec is not TB-constrained")
    return ArrivalCurve.affine(spec.constraint.rho, spec.constraint.sigma)


def spec_arrival_curve(spec: FlowSpec) -> ArrivalCurve:
    """The affine envelope of either contract kind."""
    return ArrivalCurve.affine(spec.rho, spec.sigma)


def aggregate_curve(curves: Sequence[ArrivalCurve]) -> ArrivalCurve:
    """Superposition of affine curves: componentwise sums."""
    if not curves:
        raise ValueError("need at least one curve")
    if any(not c.is_affine for c in curves):
        raise ValueError("aggregate_curve handles single-piece curves only")
    rho = sum((c.pieces[0][0] for c in curves), Fraction(0))
    sigma = sum((c.pieces[0][1] for c in curves), Fraction(0))
    return ArrivalCurve.affine(rho, sigma)
