"""Scenario file parsing (TOML).

A scenario describes the tree, the flows and the shaping approach:

    [scenario]
    id = "app1_tree"
    approach = 1            # 0 = no shapers
    horizon = "100"         # optional, seconds

    [[nodes]]
    id = "leaf1"
    capacity = "10M"        # output link rate, bits/s
    scheduler = "fifo"      # or "strict_priority" with classes = [...]
    d12 = "0"               # constant (1)->(2) delay
    d23 = "0"               # constant (2)->(3) delay
    prop_delay = "0"        # (6) here -> (1) at the parent
    [nodes.link_rates]      # optional per-input-link shaper rates
    "ext:in0" = "2M"

    [[flows]]
    id = "f1"
    path = ["leaf1", "root"]
    constraint = "lrq"      # or "tb" with sigma = / rho =
    rate = "1M"
    l_min = "4k"
    l_max = "8k"
    count = 100
    mode = "jittered"       # or "greedy"
    seed = 7
    class = "default"       # optional
    ingress_link = "in0"    # optional

All numeric fields accept exact strings: "3", "2.5", "3/4", "10M".
"""

from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib
from pathlib import Path

from .model import FlowSpec, LRQConstraint, TBConstraint
from .netsim import FlowDef, NodeConfig, Topology
from .rational import rational


class ScenarioError(ValueError):
    pass


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ScenarioError(f"{where}: missing required field {key!r}")
    return table[key]


def parse_scenario_text(text: str, seed_offset: int = 0):
    """Parse a scenario; returns (scenario_id, approach, topology, horizon).

    seed_offset shifts every flow's source seed (used by sweeps).
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"config parse error: {exc}") from exc
    meta = data.get("scenario", {})
    scenario_id = meta.get("id", "scenario")
    approach = meta.get("approach", 0)
    if approach not in (0, 1, 2, 3):
        raise ScenarioError("scenario.approach must be 0, 1, 2 or 3")
    horizon = meta.get("horizon")
    if horizon is not None:
        horizon = rational(horizon)

    nodes = []
    for tbl in data.get("nodes", []):
        where = f"node {tbl.get('id', '?')}"
        classes = tuple(tbl.get("classes", ["default"]))
        nodes.append(
            NodeConfig(
                node_id=_require(tbl, "id", where),
                capacity=rational(_require(tbl, "capacity", where)),
                scheduler=tbl.get("scheduler", "fifo"),
                class_order=classes,
                d12=rational(tbl.get("d12", 0)),
                d23=rational(tbl.get("d23", 0)),
                prop_delay=rational(tbl.get("prop_delay", 0)),
                link_rates={
                    k: rational(v) for k, v in tbl.get("link_rates", {}).items()
                },
            )
        )
    if not nodes:
        raise ScenarioError("scenario needs at least one [[nodes]] entry")

    flows = []
    for tbl in data.get("flows", []):
        where = f"flow {tbl.get('id', '?')}"
        fid = _require(tbl, "id", where)
        kind = _require(tbl, "constraint", where)
        l_min = rational(_require(tbl, "l_min", where))
        l_max = rational(_require(tbl, "l_max", where))
        if kind == "lrq":
            constraint = LRQConstraint(rational(_require(tbl, "rate", where)))
        elif kind == "tb":
            constraint = TBConstraint(
                rational(_require(tbl, "sigma", where)),
                rational(_require(tbl, "rho", where)),
            )
        else:
            raise ScenarioError(f"{where}: constraint must be 'lrq' or 'tb'")
        flows.append(
            FlowDef(
                spec=FlowSpec(fid, constraint, l_min, l_max),
                path=tuple(_require(tbl, "path", where)),
                cls=tbl.get("class", "default"),
                ingress_link=tbl.get("ingress_link", "in0"),
                count=int(tbl.get("count", 10)),
                mode=tbl.get("mode", "greedy"),
                seed=int(tbl.get("seed", 0)) + seed_offset,
            )
        )
    if not flows:
        raise ScenarioError("scenario needs at least one [[flows]] entry")
    try:
        topo = Topology(nodes, flows)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    return scenario_id, approach, topo, horizon


def parse_scenario_file(path, seed_offset: int = 0):
    return parse_scenario_text(Path(path).read_text(), seed_offset=seed_offset)
