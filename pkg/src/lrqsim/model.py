"""Core data model: packets, flow contracts and arrival curves."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Union

from .rational import rational

#: Stage labels used for per-node timestamps (Fig.-style six-stage node).
STAGES = ("s1", "s2", "s3", "s4", "s5", "s6")


@dataclass
class Packet:
    """One packet instance.

    `seq` is the 1-based index of the packet within its flow. `arrival` is
    the generic arrival time `a`; `departure` the generic departure `d`
    (set by whatever element last handled the packet). `stage_times` holds
    per-node stage timestamps keyed by ``(node_id, stage)``.
    """

    flow_id: str
    seq: int
    length: Fraction
    arrival: Fraction
    departure: Optional[Fraction] = None
    stage_times: dict = field(default_factory=dict)

    def copy_base(self) -> "Packet":
        return Packet(self.flow_id, self.seq, self.length, self.arrival)


@dataclass(frozen=True)
class LRQConstraint:
    """Length-rate-quotient contract: a^{i} >= a^{i-1} + l^{i-1}/rate."""

    rate: Fraction

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("LRQ rate must be positive")


@dataclass(frozen=True)
class TBConstraint:
    """Token-bucket contract: A(s, s+t] <= rho*t + sigma."""

    sigma: Fraction
    rho: Fraction

    def __post_init__(self):
        if self.sigma < 0 or self.rho < 0:
            raise ValueError("token-bucket parameters must be non-negative")


Constraint = Union[LRQConstraint, TBConstraint]


@dataclass(frozen=True)
class FlowSpec:
    """A flow's traffic contract plus its packet-length envelope (bits)."""

    flow_id: str
    constraint: Constraint
    l_min: Fraction
    l_max: Fraction

    def __post_init__(self):
        if self.l_min <= 0 or self.l_max < self.l_min:
            raise ValueError("need 0 < l_min <= l_max")
        if isinstance(self.constraint, TBConstraint):
            if self.constraint.sigma < self.l_max:
                raise ValueError(
                    "sigma must be >= l_max: a single packet must be admissible"
                )

    @property
    def rho(self) -> Fraction:
        """The long-run rate of the contract."""
        c = self.constraint
        return c.rate if isinstance(c, LRQConstraint) else c.rho

    @property
    def sigma(self) -> Fraction:
        """Burst parameter; l_max for LRQ flows (their arrival-curve offset)."""
        c = self.constraint
        return self.l_max if isinstance(c, LRQConstraint) else c.sigma


class ArrivalCurve:
    """Piecewise-affine min-plus envelope: alpha(t) = min_k (rho_k t + sigma_k).

    By convention alpha(0) = 0; the burst at width-zero windows is exposed
    through :attr:`burst` and used by the trace checker for co-located
    arrival batches.
    """

    def __init__(self, pieces: Iterable[tuple]):
        norm = []
        for rho, sigma in pieces:
            rho, sigma = rational(rho), rational(sigma)
            if rho < 0 or sigma < 0:
                raise ValueError("curve pieces need rho >= 0 and sigma >= 0")
            norm.append((rho, sigma))
        if not norm:
            raise ValueError("arrival curve needs at least one piece")
        self.pieces = tuple(sorted(set(norm)))

    @classmethod
    def affine(cls, rho, sigma) -> "ArrivalCurve":
        return cls([(rho, sigma)])

    def __call__(self, t: Fraction) -> Fraction:
        t = rational(t)
        if t < 0:
            raise ValueError("arrival curves are defined for t >= 0")
        if t == 0:
            return Fraction(0)
        return self.envelope(t)

    def envelope(self, t: Fraction) -> Fraction:
        """min_k (rho_k t + sigma_k) without the alpha(0)=0 convention."""
        t = rational(t)
        return min(rho * t + sigma for rho, sigma in self.pieces)

    @property
    def burst(self) -> Fraction:
        """Envelope value for a width-zero window (simultaneous batch)."""
        return min(sigma for _, sigma in self.pieces)

    @property
    def long_run_rate(self) -> Fraction:
        return min(rho for rho, _ in self.pieces)

    @property
    def is_affine(self) -> bool:
        return len(self.pieces) == 1

    def sup_excess(self, r: Fraction) -> Optional[Fraction]:
        """sup_{t>=0} [alpha(t) - r*t], or None when unbounded (min rho > r).

        The envelope is concave piecewise-affine, so the supremum is attained
        at t=0+ or at a breakpoint (an intersection of two pieces).
        """
        r = rational(r)
        if self.long_run_rate > r:
            return None
        candidates = [Fraction(0)]
        ps = self.pieces
        for i in range(len(ps)):
            for k in range(i + 1, len(ps)):
                (r1, s1), (r2, s2) = ps[i], ps[k]
                if r1 != r2:
                    t = (s2 - s1) / (r1 - r2)
                    if t > 0:
                        candidates.append(t)
        return max(self.envelope(t) - r * t for t in candidates)

    def __eq__(self, other):
        return isinstance(other, ArrivalCurve) and self.pieces == other.pieces

    def __hash__(self):
        return hash(self.pieces)

    def __repr__(self):
        terms = " , ".join(f"{r}*t+{s}" for r, s in self.pieces)
        return f"ArrivalCurve(min{{{terms}}})"


def sort_key(packet: Packet, link_id: str = "") -> tuple:
    """Deterministic FIFO tie rule: (time, input link, flow id, seq)."""
    return (packet.arrival, link_id, packet.flow_id, packet.seq)


def merge_fifo(traces: Iterable[tuple[str, list[Packet]]]) -> list[Packet]:
    """Merge per-link packet lists into one FIFO order with the tie rule."""
    tagged = []
    for link_id, packets in traces:
        for p in packets:
            tagged.append((p.arrival, link_id, p.flow_id, p.seq, p))
    tagged.sort(key=lambda t: t[:4])
    return [t[4] for t in tagged]
