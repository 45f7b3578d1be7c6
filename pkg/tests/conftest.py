"""Shared helpers for building randomized-but-reproducible inputs.

Everything here stays in exact rationals; random draws pick numerators and
denominators from small ranges so the arithmetic never leaves Fraction.
"""

import random
from fractions import Fraction

from lrqsim.model import FlowSpec, LRQConstraint, Packet, TBConstraint, merge_fifo


def frac(rng: random.Random, lo=1, hi=8, den=(1, 2, 4)) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.choice(den))


def rand_lrq_spec(rng: random.Random, fid: str) -> FlowSpec:
    l_min = frac(rng, 1, 3)
    l_max = l_min + frac(rng, 0, 3, (1, 2))
    return FlowSpec(fid, LRQConstraint(frac(rng, 1, 6)), l_min, l_max)


def rand_tb_spec(rng: random.Random, fid: str) -> FlowSpec:
    l_min = frac(rng, 1, 3)
    l_max = l_min + frac(rng, 0, 3, (1, 2))
    sigma = l_max + frac(rng, 0, 6)
    rho = frac(rng, 1, 4)
    return FlowSpec(fid, TBConstraint(sigma, rho), l_min, l_max)


def rand_lengths(rng: random.Random, spec: FlowSpec, count: int) -> list:
    span = spec.l_max - spec.l_min
    return [
        spec.l_min + span * Fraction(rng.randint(0, 4), 4) for _ in range(count)
    ]


def arbitrary_flow(rng: random.Random, fid: str, count: int) -> list:
    """A single-flow trace with no regularity guarantee at all."""
    packets = []
    t = Fraction(0)
    for i in range(count):
        t += Fraction(rng.randint(0, 4), rng.choice((1, 2, 4)))
        packets.append(Packet(fid, i + 1, frac(rng, 1, 4), t))
    return packets


def arbitrary_merge(rng: random.Random, n_flows: int, count: int):
    """FIFO merge of several arbitrary flows plus a random per-flow rate map."""
    traces = []
    rates = {}
    for k in range(n_flows):
        fid = f"f{k}"
        traces.append((fid, arbitrary_flow(rng, fid, count)))
        rates[fid] = frac(rng, 1, 6)
    return merge_fifo(traces), rates
