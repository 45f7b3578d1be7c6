"""Tree-topology network construction and deterministic execution.

A node has one output link per class structure (six conceptual stages):
(1) arrival on an input link, (2) processed/forwarded, (3) handed to the
output-queuing part, (4) out of the per-(input link, class) shaper, (5)
start of service at the class scheduler, (6) transmission complete.
(1)->(2), (2)->(3) and inter-node propagation (6)->(1) are constant per
config; shapers and schedulers are exact per the shaping/service modules.

Because the topology is a tree with leaf-to-root flows, the network is
feed-forward: nodes are executed in topological order and every element
advances with fully known inputs. The result is identical to an event-loop
execution and trivially byte-deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .model import FlowSpec, LRQConstraint, Packet
from .rational import rational
from .service import fifo_link_run, strict_priority_run
from .shaping import interleaved_lrq_run, per_flow_lrq_run
from .traffic import (
    check_arrival_curve,
    check_g_regular,
    generate_lrq_source,
    generate_tb_source,
    spec_arrival_curve,
)

APPROACH_MODES = {0: "none", 1: "interleaved_initial", 2: "interleaved_aggregate",
                  3: "per_flow_per_link"}


@dataclass
class NodeConfig:
    node_id: str
    capacity: Fraction
    scheduler: str = "fifo"  # "fifo" | "strict_priority"
    class_order: tuple = ("default",)  # highest priority first
    d12: Fraction = Fraction(0)
    d23: Fraction = Fraction(0)
    prop_delay: Fraction = Fraction(0)  # (6) here -> (1) at parent
    link_rates: dict = field(default_factory=dict)  # input link -> shaper rate

    def __post_init__(self):
        self.capacity = rational(self.capacity)
        self.d12 = rational(self.d12)
        self.d23 = rational(self.d23)
        self.prop_delay = rational(self.prop_delay)
        self.link_rates = {k: rational(v) for k, v in self.link_rates.items()}
        if self.capacity <= 0:
            raise ValueError(f"node {self.node_id}: capacity must be positive")
        if self.scheduler not in ("fifo", "strict_priority"):
            raise ValueError(f"node {self.node_id}: unknown scheduler")


@dataclass
class FlowDef:
    spec: FlowSpec
    path: tuple  # node ids, leaf to root
    cls: str = "default"
    ingress_link: str = "in0"
    count: int = 10
    mode: str = "greedy"
    seed: int = 0

    @property
    def flow_id(self) -> str:
        return self.spec.flow_id

    @property
    def aggregate_id(self) -> tuple:
        """Ingress (node, link) pair: the path-sharing aggregate this flow
        belongs to under Approach 2."""
        return (self.path[0], f"ext:{self.ingress_link}")


class Topology:
    """Directed tree of nodes rooted at the egress, plus flow routes."""

    def __init__(self, nodes: Sequence[NodeConfig], flows: Sequence[FlowDef]):
        self.nodes = {n.node_id: n for n in nodes}
        if len(self.nodes) != len(nodes):
            raise ValueError("duplicate node ids")
        self.flows = {f.flow_id: f for f in flows}
        if len(self.flows) != len(flows):
            raise ValueError("duplicate flow ids")
        self.parent: dict[str, Optional[str]] = {}
        for f in flows:
            for nid in f.path:
                if nid not in self.nodes:
                    raise ValueError(f"flow {f.flow_id}: unknown node {nid}")
            for child, par in zip(f.path, f.path[1:]):
                if self.parent.get(child, par) != par:
                    raise ValueError(
                        f"node {child} would have two parents "
                        f"({self.parent[child]} and {par})"
                    )
                self.parent[child] = par
        for nid in self.nodes:
            self.parent.setdefault(nid, None)
        self._check_acyclic()

    def _check_acyclic(self):
        for nid in self.nodes:
            seen = set()
            cur: Optional[str] = nid
            while cur is not None:
                if cur in seen:
                    raise ValueError(f"cycle through node {cur}")
                seen.add(cur)
                cur = self.parent[cur]

    def topo_order(self) -> list[str]:
        """Children before parents."""
        depth = {}

        def d(nid):
            if nid not in depth:
                par = self.parent[nid]
                depth[nid] = 0 if par is None else d(par) + 1
            return depth[nid]

        return sorted(self.nodes, key=lambda nid: (-d(nid), nid))

    def input_links(self, node_id: str) -> list[str]:
        """Traffic-carrying input links: 'child:<id>' and 'ext:<ingress>'."""
        links = set()
        for f in self.flows.values():
            if node_id not in f.path:
                continue
            idx = f.path.index(node_id)
            if idx == 0:
                links.add(f"ext:{f.ingress_link}")
            else:
                links.add(f"child:{f.path[idx - 1]}")
        return sorted(links)

    def flows_at(self, node_id: str) -> list[FlowDef]:
        return [f for f in self.flows.values() if node_id in f.path]

    def link_of(self, flow: FlowDef, node_id: str) -> str:
        idx = flow.path.index(node_id)
        if idx == 0:
            return f"ext:{flow.ingress_link}"
        return f"child:{flow.path[idx - 1]}"

    def shaper_rate(self, node_id: str, link: str) -> Fraction:
        """Configured rate for the shaper on (node, link); defaults to the
        sum of member flows' long-run rates."""
        node = self.nodes[node_id]
        if link in node.link_rates:
            return node.link_rates[link]
        total = Fraction(0)
        for f in self.flows.values():
            if node_id in f.path and self.link_of(f, node_id) == link:
                total += f.spec.rho
        return total

    def network_l_max(self) -> Fraction:
        return max(f.spec.l_max for f in self.flows.values())

    def network_l_min(self) -> Fraction:
        return min(f.spec.l_min for f in self.flows.values())


@dataclass
class Network:
    topology: Topology
    approach: int
    warnings: list = field(default_factory=list)


def build_network(topology: Topology, approach: int) -> Network:
    """Validate and wire the topology for the chosen shaping approach."""
    if approach not in APPROACH_MODES:
        raise ValueError(f"approach must be one of {sorted(APPROACH_MODES)}")
    warnings = []
    if approach == 1:
        for f in topology.flows.values():
            if not isinstance(f.spec.constraint, LRQConstraint):
                raise ValueError(
                    f"flow {f.flow_id}: Approach 1 simulation supports "
                    "LRQ-constrained initial specs only"
                )
    for nid, node in topology.nodes.items():
        links = topology.input_links(nid)
        rate_sum = sum((topology.shaper_rate(nid, m) for m in links), Fraction(0))
        if approach in (2, 3) and rate_sum > node.capacity:
            warnings.append(
                f"node {nid}: sum of shaper rates {rate_sum} exceeds capacity "
                f"{node.capacity}; approach-{approach} feasibility violated"
            )
        rho_sum = sum(
            (f.spec.rho for f in topology.flows_at(nid)), Fraction(0)
        )
        if rho_sum > node.capacity:
            warnings.append(
                f"node {nid}: aggregate rate {rho_sum} exceeds capacity "
                f"{node.capacity}"
            )
    return Network(topology, approach, warnings)


def generate_sources(topology: Topology) -> dict[str, list[Packet]]:
    out = {}
    for f in topology.flows.values():
        if isinstance(f.spec.constraint, LRQConstraint):
            out[f.flow_id] = generate_lrq_source(f.spec, f.count, f.mode, f.seed)
        else:
            out[f.flow_id] = generate_tb_source(f.spec, f.count, f.mode, f.seed)
    return out


def _validate_sources(topology: Topology, sources: dict):
    for fid, packets in sources.items():
        flow = topology.flows[fid]
        if isinstance(flow.spec.constraint, LRQConstraint):
            ok, idx = check_g_regular(packets, flow.spec.constraint.rate)
            if not ok:
                raise ValueError(f"flow {fid}: source violates LRQ at packet {idx}")
        else:
            ok, worst = check_arrival_curve(packets, spec_arrival_curve(flow.spec))
            if not ok:
                raise ValueError(f"flow {fid}: source violates (sigma,rho): {worst}")


@dataclass
class StageTimes:
    """Per-packet stage timestamp vector over its whole path."""

    flow_id: str
    seq: int
    length: Fraction
    times: dict = field(default_factory=dict)  # (node_id, stage) -> time

    def e2e_delay(self, path: Sequence[str]) -> Fraction:
        return self.times[(path[-1], "s6")] - self.times[(path[0], "s1")]


@dataclass
class MeasurementReport:
    flow_max_delay: dict = field(default_factory=dict)  # flow -> Fraction
    stage_max_delay: dict = field(default_factory=dict)  # (node, s, s+1) -> Fraction
    queue_max_backlog: dict = field(default_factory=dict)  # queue key -> bits
    flow_queue_max_backlog: dict = field(default_factory=dict)  # (queue, flow) -> bits
    packets: dict = field(default_factory=dict)  # (flow, seq) -> StageTimes
    partial: bool = False

    def as_text(self) -> str:
        lines = ["# measurement report"]
        for fid in sorted(self.flow_max_delay):
            lines.append(f"flow_max_delay\t{fid}\t{self.flow_max_delay[fid]}")
        for key in sorted(self.stage_max_delay):
            node, s1, s2 = key
            lines.append(
                f"stage_max_delay\t{node}\t{s1}->{s2}\t{self.stage_max_delay[key]}"
            )
        for key in sorted(self.queue_max_backlog):
            lines.append(
                f"queue_max_backlog\t{':'.join(key)}\t{self.queue_max_backlog[key]}"
            )
        if self.partial:
            lines.append("partial\ttrue")
        return "\n".join(lines) + "\n"


def _shaper_departures(
    network: Network, node_id: str, link: str, batch: list
) -> list[Fraction]:
    """Run the wired shaper over one (link, class) batch sorted at stage (3).

    batch entries are (t3, flow_def, packet); returns departures in order.
    """
    topo = network.topology
    mode = APPROACH_MODES[network.approach]
    if not batch:
        return []
    if mode == "none":
        return [t3 for t3, _, _ in batch]
    if mode == "interleaved_initial":
        rates = {
            fd.flow_id: fd.spec.constraint.rate
            for _, fd, _ in batch
        }
        # keep real per-flow sequencing for eligibility state
        pkts = [Packet(fd.flow_id, p.seq, p.length, t3) for t3, fd, p in batch]
        return interleaved_lrq_run(pkts, rates).departures
    if mode == "per_flow_per_link":
        rate = topo.shaper_rate(node_id, link)
        pkts = [Packet("agg", i + 1, p.length, t3) for i, (t3, fd, p) in enumerate(batch)]
        return per_flow_lrq_run(pkts, rate).departures
    # interleaved_aggregate (Approach 2)
    if link.startswith("ext:"):
        # ingress link: the whole link-class aggregate is one flow under a
        # per-flow LRQ at the ingress rate r_{1,1}
        rate = topo.shaper_rate(node_id, link)
        pkts = [Packet("agg", i + 1, p.length, t3) for i, (t3, fd, p) in enumerate(batch)]
        return per_flow_lrq_run(pkts, rate).departures
    # interior link: interleaved LRQ over path-sharing aggregates g
    agg_rates = {}
    seq_in_agg: dict = {}
    pkts = []
    for i, (t3, fd, p) in enumerate(batch):
        g = fd.aggregate_id
        gid = f"{g[0]}|{g[1]}"
        agg_rates[gid] = topo.shaper_rate(g[0], g[1])
        seq_in_agg[gid] = seq_in_agg.get(gid, 0) + 1
        pkts.append(Packet(gid, seq_in_agg[gid], p.length, t3))
    return interleaved_lrq_run(pkts, agg_rates).departures


def run(
    network: Network,
    sources: Optional[dict] = None,
    horizon=None,
    skip_source_check: bool = False,
) -> tuple[MeasurementReport, list[str]]:
    """Execute the network and return (measurements, event log lines).

    Event order is total via (time, node, stage, link, flow, seq); identical
    inputs give byte-identical logs.
    """
    topo = network.topology
    if sources is None:
        sources = generate_sources(topo)
    if not skip_source_check:
        _validate_sources(topo, sources)

    records: dict[tuple, StageTimes] = {}
    for fid, packets in sources.items():
        for p in packets:
            records[(fid, p.seq)] = StageTimes(fid, p.seq, p.length)

    # arrival time of each packet at each node's stage (1)
    t1: dict[tuple, Fraction] = {}
    for fid, packets in sources.items():
        node0 = topo.flows[fid].path[0]
        for p in packets:
            t1[(fid, p.seq, node0)] = p.arrival

    backlog_intervals: dict[tuple, list] = {}  # queue key -> (s, e, bits, flow)

    for nid in topo.topo_order():
        node = topo.nodes[nid]
        local_flows = topo.flows_at(nid)
        if not local_flows:
            continue
        # gather per-(link, class) batches sorted at stage (3)
        batches: dict[tuple, list] = {}
        for fd in local_flows:
            link = topo.link_of(fd, nid)
            for p in sources[fd.flow_id]:
                key = (fd.flow_id, p.seq)
                arr = t1[(fd.flow_id, p.seq, nid)]
                rec = records[key]
                rec.times[(nid, "s1")] = arr
                rec.times[(nid, "s2")] = arr + node.d12
                rec.times[(nid, "s3")] = arr + node.d12 + node.d23
                batches.setdefault((link, fd.cls), []).append(
                    (rec.times[(nid, "s3")], fd, p)
                )
        per_class: dict[str, list] = {}
        for (link, cls), batch in sorted(batches.items()):
            batch.sort(key=lambda e: (e[0], e[1].flow_id, e[2].seq))
            deps = _shaper_departures(network, nid, link, batch)
            qkey = (nid, "shaper", link, cls)
            for (t3, fd, p), t4 in zip(batch, deps):
                records[(fd.flow_id, p.seq)].times[(nid, "s4")] = t4
                backlog_intervals.setdefault(qkey, []).append(
                    (t3, t4, p.length, fd.flow_id)
                )
                per_class.setdefault(cls, []).append((t4, link, fd, p))
        # class scheduler over the output link
        class_inputs = []
        for cls in node.class_order:
            entries = sorted(
                per_class.get(cls, []),
                key=lambda e: (e[0], e[1], e[2].flow_id, e[3].seq),
            )
            pkts = [
                Packet(fd.flow_id, p.seq, p.length, t4)
                for t4, _, fd, p in entries
            ]
            class_inputs.append((cls, entries, pkts))
        if node.scheduler == "fifo":
            served = []
            for cls, entries, pkts in class_inputs:
                trace = fifo_link_run(pkts, node.capacity) if pkts else None
                served.append((cls, entries, trace))
            if len([1 for _, _, p in class_inputs if p]) > 1:
                raise ValueError(
                    f"node {nid}: fifo scheduler with multiple classes; "
                    "use strict_priority"
                )
        else:
            traces = strict_priority_run(
                [pkts for _, _, pkts in class_inputs], node.capacity
            )
            served = [
                (cls, entries, trace)
                for (cls, entries, pkts), trace in zip(class_inputs, traces)
            ]
        for cls, entries, trace in served:
            if trace is None:
                continue
            qkey = (nid, "class", cls)
            for (t4, link, fd, p), sp in zip(entries, trace.records):
                rec = records[(fd.flow_id, p.seq)]
                rec.times[(nid, "s5")] = sp.service_start
                rec.times[(nid, "s6")] = sp.departure
                backlog_intervals.setdefault(qkey, []).append(
                    (t4, sp.departure, p.length, fd.flow_id)
                )
                idx = fd.path.index(nid)
                if idx + 1 < len(fd.path):
                    t1[(fd.flow_id, p.seq, fd.path[idx + 1])] = (
                        sp.departure + node.prop_delay
                    )

    report = _measure(topo, records, backlog_intervals)
    if horizon is None:
        last = max(
            (p.arrival for pkts in sources.values() for p in pkts),
            default=Fraction(0),
        )
        horizon = 10 * last if last > 0 else None
    if horizon is not None:
        horizon = rational(horizon)
        finish = [
            rec.times[(topo.flows[rec.flow_id].path[-1], "s6")]
            for rec in records.values()
        ]
        if any(t > horizon for t in finish):
            report.partial = True

    log = _event_log(topo, records)
    return report, log


def _measure(topo: Topology, records: dict, backlog_intervals: dict) -> MeasurementReport:
    report = MeasurementReport(packets=records)
    for rec in records.values():
        path = topo.flows[rec.flow_id].path
        delay = rec.e2e_delay(path)
        prev = report.flow_max_delay.get(rec.flow_id)
        if prev is None or delay > prev:
            report.flow_max_delay[rec.flow_id] = delay
        for nid in path:
            for s in range(1, 6):
                key = (nid, f"s{s}", f"s{s + 1}")
                delta = rec.times[(nid, f"s{s + 1}")] - rec.times[(nid, f"s{s}")]
                if delta > report.stage_max_delay.get(key, Fraction(-1)):
                    report.stage_max_delay[key] = delta
    for qkey, intervals in backlog_intervals.items():
        instants = sorted({s for s, _, _, _ in intervals})
        best = Fraction(0)
        per_flow: dict[str, Fraction] = {}
        for t in instants:
            total = Fraction(0)
            by_flow: dict[str, Fraction] = {}
            for s, e, bits, fid in intervals:
                if s <= t < e:
                    total += bits
                    by_flow[fid] = by_flow.get(fid, Fraction(0)) + bits
            best = max(best, total)
            for fid, v in by_flow.items():
                per_flow[fid] = max(per_flow.get(fid, Fraction(0)), v)
        report.queue_max_backlog[qkey] = best
        for fid, v in per_flow.items():
            report.flow_queue_max_backlog[(qkey, fid)] = v
    return report


def _event_log(topo: Topology, records: dict) -> list[str]:
    events = []
    for rec in records.values():
        fd = topo.flows[rec.flow_id]
        for (nid, stage), t in rec.times.items():
            link = topo.link_of(fd, nid)
            events.append((t, nid, stage, link, rec.flow_id, rec.seq))
    events.sort()
    return [
        f"{t}\t{nid}\t{stage}\t{link}\t{fid}\t{seq}"
        for t, nid, stage, link, fid, seq in events
    ]
