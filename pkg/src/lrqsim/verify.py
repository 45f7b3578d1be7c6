"""Per-flow end-to-end bound computation on a topology, and verdicts.

The bound engine (bounds.py) takes bare parameters; this module extracts
those parameters from a Topology for the wired approach and compares the
resulting bounds with measured delays, exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .bounds import (
    BoundReport,
    NodeParams,
    e2e_bound_app1,
    e2e_bound_app2,
    e2e_bound_app3,
)
from .netsim import FlowDef, MeasurementReport, Network, Topology
from .rational import format_rational
from .service import GRParams, sp_gr_params


def node_gr_params(topo: Topology, node_id: str, cls: str) -> GRParams:
    """GR characterization of the class queue's service at a node.

    A FIFO link is GR(c, 0). Under strict priority the class is GR per the
    non-preemptive strict-priority model, with higher-priority interference
    taken from the flows' declared contracts (valid when the approach
    reshapes every class at the node).
    """
    node = topo.nodes[node_id]
    if node.scheduler == "fifo":
        return GRParams(node.capacity, Fraction(0))
    order = node.class_order
    if cls not in order:
        raise ValueError(f"class {cls!r} not in node {node_id} class order")
    idx = order.index(cls)
    flows = topo.flows_at(node_id)
    sigma_u = sum(
        (f.spec.sigma for f in flows if f.cls in order[:idx]), Fraction(0)
    )
    rho_u = sum((f.spec.rho for f in flows if f.cls in order[:idx]), Fraction(0))
    l_l_max = max(
        (f.spec.l_max for f in flows if f.cls in order[idx + 1 :]),
        default=Fraction(0),
    )
    l_f_min = min(f.spec.l_min for f in flows if f.cls == cls)
    return sp_gr_params(node.capacity, sigma_u, rho_u, l_l_max, l_f_min)


def _class_flows(topo: Topology, node_id: str, cls: str) -> list[FlowDef]:
    return [f for f in topo.flows_at(node_id) if f.cls == cls]


def _constant_delays(topo: Topology, flow: FlowDef) -> list[Fraction]:
    """Constant (1)->(3) stage delays along the path plus per-hop propagation."""
    parts = []
    for nid in flow.path:
        node = topo.nodes[nid]
        parts.append(node.d12 + node.d23)
    for nid in flow.path[:-1]:
        parts.append(topo.nodes[nid].prop_delay)
    return parts


def flow_e2e_bounds(topo: Topology, approach: int, flow_id: str) -> list[BoundReport]:
    """Closed-form end-to-end bound(s) for one flow under the given approach."""
    flow = topo.flows[flow_id]
    consts = _constant_delays(topo, flow)
    if approach == 1:
        nodes = []
        for nid in flow.path:
            members = _class_flows(topo, nid, flow.cls)
            nodes.append(
                NodeParams(
                    gr=node_gr_params(topo, nid, flow.cls),
                    sigma_sum=sum((f.spec.sigma for f in members), Fraction(0)),
                    rho_sum=sum((f.spec.rho for f in members), Fraction(0)),
                )
            )
        return [e2e_bound_app1(nodes, consts)]
    if approach == 2:
        agg = flow.aggregate_id
        ingress = [
            f
            for f in _class_flows(topo, flow.path[0], flow.cls)
            if f.aggregate_id == agg
        ]
        nodes = []
        for nid in flow.path:
            members = _class_flows(topo, nid, flow.cls)
            aggs = sorted({f.aggregate_id for f in members})
            agg_l_max = Fraction(0)
            agg_rate = Fraction(0)
            for g in aggs:
                flows_g = [f for f in members if f.aggregate_id == g]
                agg_l_max += max(f.spec.l_max for f in flows_g)
                agg_rate += topo.shaper_rate(g[0], g[1])
            nodes.append(
                NodeParams(
                    gr=node_gr_params(topo, nid, flow.cls),
                    agg_l_max_sum=agg_l_max,
                    agg_rate_sum=agg_rate,
                )
            )
        return [
            e2e_bound_app2(
                sum((f.spec.sigma for f in ingress), Fraction(0)),
                sum((f.spec.rho for f in ingress), Fraction(0)),
                topo.shaper_rate(agg[0], agg[1]),
                nodes,
                consts,
            )
        ]
    if approach == 3:
        link = topo.link_of(flow, flow.path[0])
        ingress = [
            f
            for f in _class_flows(topo, flow.path[0], flow.cls)
            if topo.link_of(f, flow.path[0]) == link
        ]
        nodes = []
        for nid in flow.path:
            members = _class_flows(topo, nid, flow.cls)
            links = sorted({topo.link_of(f, nid) for f in members})
            nodes.append(
                NodeParams(
                    gr=node_gr_params(topo, nid, flow.cls),
                    link_count=len(links),
                    link_rate_sum=sum(
                        (topo.shaper_rate(nid, m) for m in links), Fraction(0)
                    ),
                )
            )
        loose, tighter = e2e_bound_app3(
            sum((f.spec.sigma for f in ingress), Fraction(0)),
            sum((f.spec.rho for f in ingress), Fraction(0)),
            topo.shaper_rate(flow.path[0], link),
            nodes,
            consts,
            topo.network_l_max(),
            topo.network_l_min(),
        )
        return [loose, tighter]
    raise ValueError(f"no e2e bound wired for approach {approach}")


@dataclass
class VerdictRow:
    flow_id: str
    formula: str
    bound: Optional[Fraction]
    measured: Fraction
    status: str  # "pass" | "fail" | "not_applicable"

    @property
    def slack(self) -> Optional[Fraction]:
        return None if self.bound is None else self.bound - self.measured


@dataclass
class Verdict:
    scenario_id: str
    rows: list = field(default_factory=list)

    @property
    def all_pass(self) -> bool:
        return all(r.status != "fail" for r in self.rows)

    def as_text(self) -> str:
        lines = [f"# verdict for scenario {self.scenario_id}",
                 "# flow\tformula\tbound\tmeasured\tstatus\tslack"]
        for r in self.rows:
            bound = "-" if r.bound is None else format_rational(r.bound)
            slack = "-" if r.slack is None else format_rational(r.slack)
            lines.append(
                f"{r.flow_id}\t{r.formula}\t{bound}"
                f"\t{format_rational(r.measured)}\t{r.status}\t{slack}"
            )
        return "\n".join(lines) + "\n"


def verdict_for_run(
    network: Network, report: MeasurementReport, scenario_id: str = "scenario"
) -> Verdict:
    """Compare every flow's measured max e2e delay with the wired approach's
    bound(s). Infeasible bounds are reported as not applicable, not failures."""
    verdict = Verdict(scenario_id)
    topo = network.topology
    if network.approach not in (1, 2, 3):
        return verdict
    for fid in sorted(topo.flows):
        measured = report.flow_max_delay.get(fid, Fraction(0))
        for bound in flow_e2e_bounds(topo, network.approach, fid):
            if not bound.feasible:
                status = "not_applicable"
            else:
                status = "pass" if measured <= bound.value else "fail"
            verdict.rows.append(
                VerdictRow(fid, bound.formula, bound.value, measured, status)
            )
    return verdict
