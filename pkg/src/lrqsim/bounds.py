"""Closed-form delay and backlog bounds with exact feasibility checks.

Every operation evaluates in exact rational arithmetic and returns a
BoundReport; infeasible parameter sets are reported with the violated
condition instead of a value.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .model import ArrivalCurve
from .rational import format_rational, rational
from .service import GRParams


@dataclass
class BoundReport:
    kind: str  # "delay" (seconds) or "backlog" (bits)
    formula: str
    value: Optional[Fraction] = None
    feasible: bool = True
    condition_violated: Optional[str] = None

    def __post_init__(self):
        if self.feasible != (self.value is not None):
            raise ValueError("value must be present iff feasible")

    def describe(self) -> str:
        if not self.feasible:
            return f"{self.formula}\t{self.kind}\tinfeasible\t{self.condition_violated}"
        return f"{self.formula}\t{self.kind}\t{format_rational(self.value)}\t-"


def _infeasible(kind: str, formula: str, condition: str) -> BoundReport:
    return BoundReport(kind, formula, None, False, condition)


@dataclass(frozen=True)
class FlowParams:
    """Per-flow parameters used by multi-flow bounds."""

    sigma: Fraction
    rho: Fraction
    rate: Fraction  # shaper rate r^f
    l_min: Fraction = Fraction(0)
    l_max: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("sigma", "rho", "rate", "l_min", "l_max"):
            object.__setattr__(self, name, rational(getattr(self, name)))


def gr_delay_bound(curve: ArrivalCurve, params: GRParams) -> BoundReport:
    """Delay through a GR(r, e) server: sup_t[alpha(t) - r t]/r + e."""
    excess = curve.sup_excess(params.rate)
    if excess is None:
        return _infeasible(
            "delay", "gr-delay", f"long-run rate {curve.long_run_rate} > r {params.rate}"
        )
    return BoundReport("delay", "gr-delay", excess / params.rate + params.error)


def gr_backlog_bound(curve: ArrivalCurve, params: GRParams, l_max) -> BoundReport:
    """Backlog in a GR(r, e) server: sup_t[alpha(t) - r(t - e - l_max/r)^+]."""
    l_max = rational(l_max)
    if curve.long_run_rate > params.rate:
        return _infeasible(
            "backlog", "gr-backlog",
            f"long-run rate {curve.long_run_rate} > r {params.rate}",
        )
    tau = params.error + l_max / params.rate
    if tau < 0:
        tau = Fraction(0)
    # alpha is non-decreasing and alpha(t) - r(t-tau) is concave beyond tau:
    # candidates are tau itself and the envelope breakpoints after it
    candidates = [tau]
    ps = curve.pieces
    for i in range(len(ps)):
        for k in range(i + 1, len(ps)):
            (r1, s1), (r2, s2) = ps[i], ps[k]
            if r1 != r2:
                t = (s2 - s1) / (r1 - r2)
                if t > tau:
                    candidates.append(t)
    value = max(
        curve.envelope(t) - params.rate * max(t - tau, Fraction(0)) for t in candidates
    )
    return BoundReport("backlog", "gr-backlog", value)


def backlog_from_delay(curve: ArrivalCurve, delay_bound) -> BoundReport:
    """Occupancy rule: a flow with delay bound T backlogs at most alpha(T)."""
    t = rational(delay_bound)
    return BoundReport("backlog", "backlog-from-delay", curve.envelope(t))


def interleaved_minrate_bounds(
    flows: Sequence[FlowParams], l_max
) -> tuple[BoundReport, BoundReport]:
    """Interleaved LRQ as a generalized GR server with rate min r^f.

    delay <= sum sigma^f / min r^f - min(l^{f,min}/r^f), backlog <=
    sum sigma^f + l_max, feasible when sum rho^f <= min r^f.
    """
    l_max = rational(l_max)
    r_min = min(f.rate for f in flows)
    rho_sum = sum((f.rho for f in flows), Fraction(0))
    backlog = BoundReport(
        "backlog", "ilrq-minrate-backlog", sum((f.sigma for f in flows), Fraction(0)) + l_max
    )
    if rho_sum > r_min:
        return (
            _infeasible("delay", "ilrq-minrate-delay", f"sum rho {rho_sum} > min r {r_min}"),
            backlog,
        )
    delay = sum((f.sigma for f in flows), Fraction(0)) / r_min - min(
        f.l_min / f.rate for f in flows
    )
    return BoundReport("delay", "ilrq-minrate-delay", delay), backlog


def interleaved_weighted_delay(flows: Sequence[FlowParams]) -> BoundReport:
    """Per-packet interleaved LRQ delay bound under sum rho^f/r^f <= 1:

    sup delay <= sum sigma^f/r^f - min_f l^{f,min}/r^f.
    """
    util = sum((f.rho / f.rate for f in flows), Fraction(0))
    if util > 1:
        return _infeasible("delay", "ilrq-weighted-delay", f"sum rho^f/r^f = {util} > 1")
    value = sum((f.sigma / f.rate for f in flows), Fraction(0)) - min(
        f.l_min / f.rate for f in flows
    )
    return BoundReport("delay", "ilrq-weighted-delay", value)


def interleaved_packet_delay(flows: Sequence[FlowParams], l_j, r_j) -> Fraction:
    """Per-packet form: delay of packet j <= sum sigma^f/r^f - l^j/r^{(j)},
    where l_j and r_j are packet j's own length and flow rate."""
    return sum((f.sigma / f.rate for f in flows), Fraction(0)) - rational(
        l_j
    ) / rational(r_j)


def pflrq_bounds(sigma, rho, rate, l_min) -> tuple[BoundReport, BoundReport]:
    """Per-flow LRQ shaper: delay <= sigma/r - l_min/r, backlog <= sigma."""
    sigma, rho, rate, l_min = map(rational, (sigma, rho, rate, l_min))
    if rho > rate:
        return (
            _infeasible("delay", "pflrq-delay", f"rho {rho} > r {rate}"),
            _infeasible("backlog", "pflrq-backlog", f"rho {rho} > r {rate}"),
        )
    return (
        BoundReport("delay", "pflrq-delay", sigma / rate - l_min / rate),
        BoundReport("backlog", "pflrq-backlog", sigma),
    )


def shaped_aggregation_bounds(
    flows: Sequence[FlowParams], server: GRParams, l_max
) -> dict[str, BoundReport]:
    """Per-flow-LRQ aggregation in front of a GR(r, e) FIFO server.

    Returns the shaped per-flow delay (shaped-delay, one report per flow) and total
    backlog (shaped-backlog), plus the direct-FIFO comparison pair (direct-delay / direct-backlog).
    """
    l_max = rational(l_max)
    sum_lmax = sum((f.l_max for f in flows), Fraction(0))
    sum_sigma = sum((f.sigma for f in flows), Fraction(0))
    sum_rho = sum((f.rho for f in flows), Fraction(0))
    sum_rate = sum((f.rate for f in flows), Fraction(0))
    out: dict[str, BoundReport] = {}

    shaped_ok = all(f.rho <= f.rate for f in flows) and sum_rate <= server.rate
    if shaped_ok:
        for i, f in enumerate(flows):
            out[f"shaped-delay[{i}]"] = BoundReport(
                "delay",
                "shaped-delay",
                f.sigma / f.rate + sum_lmax / server.rate + server.error,
            )
        out["shaped-backlog"] = BoundReport(
            "backlog",
            "shaped-backlog",
            sum_sigma + sum_lmax + server.rate * server.error + l_max,
        )
    else:
        cond = "need rho^f <= r^f for all f and sum r^f <= r"
        out["shaped-delay"] = _infeasible("delay", "shaped-delay", cond)
        out["shaped-backlog"] = _infeasible("backlog", "shaped-backlog", cond)

    if sum_rho <= server.rate:
        out["direct-delay"] = BoundReport(
            "delay", "direct-delay", sum_sigma / server.rate + server.error
        )
        out["direct-backlog"] = BoundReport(
            "backlog", "direct-backlog", sum_sigma + sum_rho * server.error + l_max
        )
    else:
        cond = f"sum rho {sum_rho} > r {server.rate}"
        out["direct-delay"] = _infeasible("delay", "direct-delay", cond)
        out["direct-backlog"] = _infeasible("backlog", "direct-backlog", cond)
    return out


def sp_bounds(
    capacity, sigma_f, rho_u, sigma_u, l_l_max, l_f_min, l_max, rho_f=None
) -> tuple[BoundReport, BoundReport, BoundReport]:
    """The three strict-priority delay bounds for flow f.

    sp-gr (GR-based)            = sigma_f/(c-rho_u) + (sigma_u + l_l_max)/(c-rho_u)
                                   - l_f_min/(c-rho_u) + l_f_min/c
    sp-timing (timing-based)        = ... + l_max/c   instead of the last two terms
    sp-curve (service-curve-based) = ... + l_max/(c-rho_u)
    """
    c = rational(capacity)
    sigma_f, rho_u, sigma_u = map(rational, (sigma_f, rho_u, sigma_u))
    l_l_max, l_f_min, l_max = map(rational, (l_l_max, l_f_min, l_max))
    if rho_u >= c:
        cond = f"rho_u {rho_u} >= c {c}"
        return tuple(
            _infeasible("delay", fid, cond) for fid in ("sp-gr", "sp-timing", "sp-curve")
        )
    r = c - rho_u
    if rho_f is not None and rational(rho_f) > r:
        cond = f"rho_f {rho_f} > c - rho_u = {r}"
        return tuple(
            _infeasible("delay", fid, cond) for fid in ("sp-gr", "sp-timing", "sp-curve")
        )
    head = sigma_f / r + (sigma_u + l_l_max) / r
    return (
        BoundReport("delay", "sp-gr", head - l_f_min / r + l_f_min / c),
        BoundReport("delay", "sp-timing", head + l_max / c),
        BoundReport("delay", "sp-curve", head + l_max / r),
    )


@dataclass(frozen=True)
class NodeParams:
    """Per-node data along a flow's path, leaf to root."""

    gr: GRParams
    sigma_sum: Fraction = Fraction(0)  # App 1: sum sigma over F_n
    rho_sum: Fraction = Fraction(0)  # App 1 feasibility
    agg_l_max_sum: Fraction = Fraction(0)  # App 2: sum_{g in G_n} l^{g,max}
    agg_rate_sum: Fraction = Fraction(0)  # App 2 feasibility: sum r^g
    link_count: int = 0  # App 3: M_n
    link_rate_sum: Fraction = Fraction(0)  # App 3 feasibility: sum_m r_{n,m}

    def __post_init__(self):
        for name in ("sigma_sum", "rho_sum", "agg_l_max_sum", "agg_rate_sum",
                     "link_rate_sum"):
            object.__setattr__(self, name, rational(getattr(self, name)))


def e2e_bound_app1(
    nodes: Sequence[NodeParams], prop_delays: Sequence
) -> BoundReport:
    """Approach 1 (reshape to initial spec):
    sum e_n + sum prop + sum_n (sum_{f in F_n} sigma^f)/r_n, per-node
    feasibility sum rho <= r_n."""
    props = [rational(p) for p in prop_delays]
    for idx, node in enumerate(nodes):
        if node.rho_sum > node.gr.rate:
            return _infeasible(
                "delay", "app1-e2e",
                f"node {idx}: sum rho {node.rho_sum} > r {node.gr.rate}",
            )
    value = (
        sum((n.gr.error for n in nodes), Fraction(0))
        + sum(props, Fraction(0))
        + sum((n.sigma_sum / n.gr.rate for n in nodes), Fraction(0))
    )
    return BoundReport("delay", "app1-e2e", value)


def e2e_bound_app2(
    ingress_sigma_sum,
    ingress_rho_sum,
    ingress_rate,
    nodes: Sequence[NodeParams],
    prop_delays: Sequence,
) -> BoundReport:
    """Approach 2 (ingress per-flow LRQ, interior interleaved over aggregates):
    sum e_n + sum prop + (sum_{f in G_{1,1}} sigma^f)/r_{1,1}
    + sum_n (sum_{g in G_n} l^{g,max})/r_n."""
    ingress_sigma_sum = rational(ingress_sigma_sum)
    ingress_rho_sum = rational(ingress_rho_sum)
    ingress_rate = rational(ingress_rate)
    props = [rational(p) for p in prop_delays]
    if ingress_rho_sum > ingress_rate:
        return _infeasible(
            "delay", "app2-e2e",
            f"ingress: sum rho {ingress_rho_sum} > r_11 {ingress_rate}",
        )
    for idx, node in enumerate(nodes):
        if node.agg_rate_sum > node.gr.rate:
            return _infeasible(
                "delay", "app2-e2e",
                f"node {idx}: sum r^g {node.agg_rate_sum} > r {node.gr.rate}",
            )
    value = (
        sum((n.gr.error for n in nodes), Fraction(0))
        + sum(props, Fraction(0))
        + ingress_sigma_sum / ingress_rate
        + sum((n.agg_l_max_sum / n.gr.rate for n in nodes), Fraction(0))
    )
    return BoundReport("delay", "app2-e2e", value)


def e2e_bound_app3(
    ingress_sigma_sum,
    ingress_rho_sum,
    ingress_rate,
    nodes: Sequence[NodeParams],
    prop_delays: Sequence,
    l_max,
    l_min=None,
) -> tuple[BoundReport, BoundReport]:
    """Approach 3 (per-flow LRQ on every (link, class)).

    Returns (headline bound, tighter network-GR variant). Headline:
    sum e_n + sum prop + (sum_{f in F_{1,1}} sigma^f)/r_{1,1}
    + sum_n (M_n + 1) l_max / r_n. The network-GR variant keeps the dropped
    negative terms: per-node ((M_n+1) l_max - l_min)/r_n and -l_max/r_N.
    """
    ingress_sigma_sum = rational(ingress_sigma_sum)
    ingress_rho_sum = rational(ingress_rho_sum)
    ingress_rate = rational(ingress_rate)
    l_max = rational(l_max)
    l_min = l_max if l_min is None else rational(l_min)
    props = [rational(p) for p in prop_delays]
    if any(n.link_count < 1 for n in nodes):
        raise ValueError("every node needs at least one input link")
    if ingress_rho_sum > ingress_rate:
        cond = f"ingress: sum rho {ingress_rho_sum} > r_11 {ingress_rate}"
        return _infeasible("delay", "app3-e2e", cond), _infeasible(
            "delay", "app3-e2e-gr", cond
        )
    for idx, node in enumerate(nodes):
        if node.link_rate_sum > node.gr.rate:
            cond = f"node {idx}: sum r_nm {node.link_rate_sum} > r {node.gr.rate}"
            return _infeasible("delay", "app3-e2e", cond), _infeasible(
                "delay", "app3-e2e-gr", cond
            )
    base = (
        sum((n.gr.error for n in nodes), Fraction(0))
        + sum(props, Fraction(0))
        + ingress_sigma_sum / ingress_rate
    )
    headline = base + sum(
        ((n.link_count + 1) * l_max / n.gr.rate for n in nodes), Fraction(0)
    )
    tighter = (
        base
        + sum(
            (((n.link_count + 1) * l_max - l_min) / n.gr.rate for n in nodes),
            Fraction(0),
        )
        - l_max / nodes[-1].gr.rate
    )
    return (
        BoundReport("delay", "app3-e2e", headline),
        BoundReport("delay", "app3-e2e-gr", tighter),
    )


@dataclass(frozen=True)
class ApproachNode:
    """Node counts for the approach-comparison table (unit packet lengths)."""

    rate: Fraction
    error: Fraction
    flow_count: int  # |F_n|
    agg_count: int  # |G_n|
    link_count: int  # |M_n|

    def __post_init__(self):
        object.__setattr__(self, "rate", rational(self.rate))
        object.__setattr__(self, "error", rational(self.error))


def compare_approaches(
    nodes: Sequence[ApproachNode],
    sigma,
    prop_delays: Sequence,
    ingress_agg_count: int,
    ingress_flow_count: int,
    ingress_rate,
) -> dict[str, dict[str, Fraction]]:
    """Term-by-term comparison of the three approaches' e2e bounds.

    Assumes unit packet lengths and a uniform per-flow burst sigma; the four
    terms are error sum, propagation sum, ingress shaping term and per-node
    aggregate term. Rows keyed "app1"/"app2"/"app3", terms "term1".."term4"
    plus "total".
    """
    sigma = rational(sigma)
    ingress_rate = rational(ingress_rate)
    props = [rational(p) for p in prop_delays]
    term1 = sum((n.error for n in nodes), Fraction(0))
    term2 = sum(props, Fraction(0))
    rows = {
        "app1": {
            "term1": term1,
            "term2": term2,
            "term3": Fraction(0),
            "term4": sum((n.flow_count * sigma / n.rate for n in nodes), Fraction(0)),
        },
        "app2": {
            "term1": term1,
            "term2": term2,
            "term3": ingress_agg_count * sigma / ingress_rate,
            "term4": sum(
                (Fraction(n.agg_count) / n.rate for n in nodes), Fraction(0)
            ),
        },
        "app3": {
            "term1": term1,
            "term2": term2,
            "term3": ingress_flow_count * sigma / ingress_rate,
            "term4": sum(
                (Fraction(n.link_count + 1) / n.rate for n in nodes), Fraction(0)
            ),
        },
    }
    for row in rows.values():
        row["total"] = row["term1"] + row["term2"] + row["term3"] + row["term4"]
    return rows
