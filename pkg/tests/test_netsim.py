import random
from fractions import Fraction

import pytest

from lrqsim.model import FlowSpec, LRQConstraint, TBConstraint
from lrqsim.netsim import (
    FlowDef,
    NodeConfig,
    Topology,
    build_network,
    generate_sources,
    run,
)
from lrqsim.service import fifo_link_run
from lrqsim.verify import flow_e2e_bounds, node_gr_params, verdict_for_run

F = Fraction


def lrq_flow(fid, path, rate, l_min=1, l_max=2, count=10, mode="greedy", seed=0,
             ingress_link="in0", cls="default"):
    spec = FlowSpec(fid, LRQConstraint(F(rate)), F(l_min), F(l_max))
    return FlowDef(spec, tuple(path), cls=cls, ingress_link=ingress_link,
                   count=count, mode=mode, seed=seed)


def two_leaf_tree(approach, counts=(8, 8, 8)):
    nodes = [
        NodeConfig("l1", 50),
        NodeConfig("l2", 50),
        NodeConfig("root", 50),
    ]
    flows = [
        lrq_flow("f1", ("l1", "root"), 4, count=counts[0], seed=1),
        lrq_flow("f2", ("l2", "root"), 3, count=counts[1], mode="jittered", seed=2),
        lrq_flow("f3", ("l2", "root"), 2, count=counts[2], ingress_link="in1",
                 mode="jittered", seed=3),
    ]
    return build_network(Topology(nodes, flows), approach)


class TestTopology:
    def test_parent_derivation_and_order(self):
        net = two_leaf_tree(1)
        topo = net.topology
        assert topo.parent == {"l1": "root", "l2": "root", "root": None}
        order = topo.topo_order()
        assert order.index("root") > order.index("l1")
        assert order.index("root") > order.index("l2")

    def test_two_parents_rejected(self):
        nodes = [NodeConfig("a", 1), NodeConfig("b", 1), NodeConfig("c", 1)]
        flows = [
            lrq_flow("f1", ("a", "b"), 1),
            lrq_flow("f2", ("a", "c"), 1, ingress_link="in1"),
        ]
        with pytest.raises(ValueError):
            Topology(nodes, flows)

    def test_input_links_per_node(self):
        topo = two_leaf_tree(1).topology
        assert topo.input_links("root") == ["child:l1", "child:l2"]
        assert topo.input_links("l2") == ["ext:in0", "ext:in1"]

    def test_default_shaper_rate_sums_member_flows(self):
        topo = two_leaf_tree(1).topology
        assert topo.shaper_rate("root", "child:l2") == 3 + 2


class TestBuild:
    def test_per_link_shaping_structure(self):
        net = two_leaf_tree(3)
        assert net.topology.input_links("root") == ["child:l1", "child:l2"]
        assert net.warnings == []

    def test_reshape_to_initial_needs_lrq_specs(self):
        nodes = [NodeConfig("n", 10)]
        spec = FlowSpec("t", TBConstraint(F(2), F(1)), F(1), F(1))
        flows = [FlowDef(spec, ("n",))]
        with pytest.raises(ValueError):
            build_network(Topology(nodes, flows), 1)
        build_network(Topology(nodes, flows), 2)  # other approaches accept TB

    def test_overload_produces_warning(self):
        nodes = [NodeConfig("n", 1)]
        flows = [lrq_flow("f", ("n",), 4)]
        net = build_network(Topology(nodes, flows), 3)
        assert any("exceeds capacity" in w for w in net.warnings)

    def test_unknown_approach_rejected(self):
        topo = two_leaf_tree(1).topology
        with pytest.raises(ValueError):
            build_network(topo, 7)


class TestRun:
    def test_single_node_reproduces_the_link_model(self):
        nodes = [NodeConfig("n", 2)]
        flow = lrq_flow("f", ("n",), 2, l_min=1, l_max=1, count=12)
        net = build_network(Topology(nodes, [flow]), 0)
        sources = generate_sources(net.topology)
        report, _ = run(net, sources)
        link = fifo_link_run(sources["f"], 2)
        got = [
            report.packets[("f", p.seq)].times[("n", "s6")] for p in sources["f"]
        ]
        assert got == link.departures

    def test_regulated_sources_see_zero_shaper_delay(self):
        net = two_leaf_tree(1)
        report, _ = run(net)
        # at every ingress node the reshaping stage adds nothing
        for nid in ("l1", "l2"):
            assert report.stage_max_delay[(nid, "s3", "s4")] == 0

    def test_interior_reshaping_is_free_after_the_first_hop(self):
        net = two_leaf_tree(2)
        report, _ = run(net)
        assert report.stage_max_delay[("root", "s3", "s4")] == 0

    def test_event_log_is_deterministic(self):
        _, log_a = run(two_leaf_tree(3))
        _, log_b = run(two_leaf_tree(3))
        assert log_a == log_b

    def test_every_packet_reaches_the_root(self):
        net = two_leaf_tree(3)
        report, _ = run(net)
        assert not report.partial
        for fd in net.topology.flows.values():
            for seq in range(1, fd.count + 1):
                assert (fd.path[-1], "s6") in report.packets[(fd.flow_id, seq)].times

    def test_e2e_delay_telescopes_over_stages(self):
        nodes = [NodeConfig("a", 10, d12="1/8", d23="1/8", prop_delay="1/4"),
                 NodeConfig("b", 10)]
        flow = lrq_flow("f", ("a", "b"), 2, count=5)
        net = build_network(Topology(nodes, [flow]), 1)
        report, _ = run(net)
        rec = report.packets[("f", 3)]
        total = rec.e2e_delay(("a", "b"))
        deltas = []
        for nid in ("a", "b"):
            for s in range(1, 6):
                deltas.append(
                    rec.times[(nid, f"s{s+1}")] - rec.times[(nid, f"s{s}")]
                )
        deltas.append(rec.times[("b", "s1")] - rec.times[("a", "s6")])
        assert total == sum(deltas, F(0))

    def test_nonconformant_source_is_a_hard_error(self):
        nodes = [NodeConfig("n", 10)]
        flow = lrq_flow("f", ("n",), 2, count=3)
        net = build_network(Topology(nodes, [flow]), 0)
        sources = generate_sources(net.topology)
        bad = {"f": [p for p in sources["f"]]}
        bad["f"][1] = type(bad["f"][1])(
            "f", 2, bad["f"][1].length, bad["f"][0].arrival
        )
        with pytest.raises(ValueError):
            run(net, bad)
        run(net, bad, skip_source_check=True)  # override allowed

    def test_empty_network_gives_zero_report(self):
        nodes = [NodeConfig("n", 1)]
        flow = lrq_flow("f", ("n",), 1, count=1)
        net = build_network(Topology(nodes, [flow]), 0)
        report, log = run(net, {"f": []})
        assert report.flow_max_delay == {} and report.queue_max_backlog == {}


class TestBacklog:
    def test_per_flow_shaper_backlog_stays_under_burst(self):
        sigma, rho = F(6), F(2)
        nodes = [NodeConfig("n", 50, link_rates={"ext:in0": rho})]
        spec = FlowSpec("f", TBConstraint(sigma, rho), F(1), F(2))
        flow = FlowDef(spec, ("n",), count=30, mode="greedy")
        net = build_network(Topology(nodes, [flow]), 3)
        report, _ = run(net)
        assert report.queue_max_backlog[("n", "shaper", "ext:in0", "default")] <= sigma


class TestVerify:
    def test_fifo_node_is_a_clean_rate_server(self):
        topo = two_leaf_tree(1).topology
        params = node_gr_params(topo, "root", "default")
        assert params.rate == 50 and params.error == 0

    def test_strict_priority_node_uses_leftover_rate(self):
        nodes = [NodeConfig("n", 10, scheduler="strict_priority",
                            class_order=("hi", "lo"))]
        flows = [
            lrq_flow("h", ("n",), 2, cls="hi"),
            lrq_flow("l", ("n",), 1, cls="lo", ingress_link="in1"),
        ]
        topo = Topology(nodes, flows)
        assert node_gr_params(topo, "n", "lo").rate == 10 - 2

    def test_bounds_pass_on_the_sample_tree(self):
        for approach in (1, 2, 3):
            net = two_leaf_tree(approach)
            report, _ = run(net)
            verdict = verdict_for_run(net, report, "sample")
            assert verdict.rows and verdict.all_pass
            assert all(r.status == "pass" for r in verdict.rows)

    def test_verdict_rows_carry_exact_slack(self):
        net = two_leaf_tree(1)
        report, _ = run(net)
        verdict = verdict_for_run(net, report)
        for row in verdict.rows:
            assert row.slack == row.bound - row.measured

    def test_unshaped_run_has_no_applicable_bounds(self):
        net = two_leaf_tree(0)
        report, _ = run(net)
        assert verdict_for_run(net, report).rows == []

    def test_tight_variant_reported_for_per_link_shaping(self):
        topo = two_leaf_tree(3).topology
        reports = flow_e2e_bounds(topo, 3, "f1")
        assert [r.formula for r in reports] == ["app3-e2e", "app3-e2e-gr"]
        assert reports[1].value <= reports[0].value
