import random
from fractions import Fraction

import pytest

from lrqsim.model import FlowSpec, Packet, TBConstraint, merge_fifo
from lrqsim.service import (
    GRParams,
    convert_gr_st_sc,
    fifo_link_run,
    fit_min_error,
    fit_min_error_server,
    gr_to_st,
    reference_clocks,
    sp_gr_params,
    st_to_gr,
    strict_priority_run,
)
from lrqsim.shaping import per_flow_lrq_run
from lrqsim.traffic import generate_tb_source

from conftest import arbitrary_flow, frac

F = Fraction


def pkts(fid, arrivals, lengths):
    return [
        Packet(fid, i + 1, F(l), F(a))
        for i, (a, l) in enumerate(zip(arrivals, lengths))
    ]


class TestReferenceClocks:
    def test_colocated_pair(self):
        assert reference_clocks(pkts("x", (0, 0), (1, 1)), 1) == [
            (F(0), F(1)),
            (F(1), F(2)),
        ]

    def test_finish_equals_start_plus_quantum(self):
        rng = random.Random(3)
        for k in range(30):
            trace = arbitrary_flow(rng, "x", 10)
            rate = frac(rng, 1, 5)
            for p, (e, f) in zip(trace, reference_clocks(trace, rate)):
                assert f == e + p.length / rate

    def test_widely_spaced_arrivals_see_idle_clocks(self):
        trace = pkts("x", (0, 10, 20), (1, 2, 1))
        for p, (e, f) in zip(trace, reference_clocks(trace, 1)):
            assert e == p.arrival and f == p.arrival + p.length


class TestFifoLink:
    def test_back_to_back_pair(self):
        assert fifo_link_run(pkts("x", (0, 0), (1, 1)), 1).departures == [F(1), F(2)]

    def test_idle_server_single_packet(self):
        assert fifo_link_run(pkts("x", (3,), (2,)), 2).departures == [F(4)]

    def test_departures_track_the_finish_clock(self):
        rng = random.Random(7)
        for k in range(30):
            trace = arbitrary_flow(rng, "x", 12)
            c = frac(rng, 1, 5)
            deps = fifo_link_run(trace, c).departures
            clocks = reference_clocks(trace, c)
            assert deps == [f for _, f in clocks]

    def test_service_intervals_are_exact_and_disjoint(self):
        rng = random.Random(11)
        trace = arbitrary_flow(rng, "x", 15)
        run = fifo_link_run(trace, 2)
        prev_end = F(0)
        for rec in run.records:
            assert rec.departure - rec.service_start == rec.packet.length / 2
            assert rec.service_start >= prev_end
            prev_end = rec.departure


class TestStrictPriority:
    def test_priority_order_on_simultaneous_arrivals(self):
        high = pkts("H", (0,), (1,))
        low = pkts("L", (0,), (1,))
        traces = strict_priority_run([high, low], 1)
        assert traces[0].departures == [F(1)]
        assert traces[1].departures == [F(2)]

    def test_non_preemption_of_running_low_packet(self):
        low = pkts("L", (0,), (4,))
        high = pkts("H", (1,), (1,))
        traces = strict_priority_run([high, low], 1)
        assert traces[1].departures == [F(4)]
        assert traces[0].departures == [F(5)]

    def test_empty_lower_classes_degenerate_to_fifo(self):
        rng = random.Random(13)
        trace = arbitrary_flow(rng, "H", 12)
        sp = strict_priority_run([trace, []], 2)
        assert sp[0].departures == fifo_link_run(trace, 2).departures
        assert sp[1].departures == []

    def test_work_conservation_and_non_overlap(self):
        rng = random.Random(17)
        high = arbitrary_flow(rng, "H", 10)
        low = arbitrary_flow(rng, "L", 10)
        traces = strict_priority_run([high, low], 3)
        recs = sorted(
            traces[0].records + traces[1].records, key=lambda r: r.service_start
        )
        for a, b in zip(recs, recs[1:]):
            assert b.service_start >= a.departure  # non-preemptive, one at a time
            if b.service_start > a.departure:
                # idle gap: no packet could have been waiting
                assert b.arrival == b.service_start


class TestSpGrParams:
    def test_worked_example(self):
        p = sp_gr_params(10, 4, 2, 1, 1)
        assert p.rate == 8 and p.error == F(3, 5)

    def test_no_interference_reduces_to_clean_link(self):
        p = sp_gr_params(10, 0, 0, 0, 1)
        assert p.rate == 10 and p.error == 0

    def test_saturating_interference_rejected(self):
        with pytest.raises(ValueError):
            sp_gr_params(10, 0, 10, 0, 1)


class TestFitMinError:
    def test_fifo_link_fits_zero_error(self):
        rng = random.Random(19)
        for k in range(20):
            trace = arbitrary_flow(rng, "x", 10)
            c = frac(rng, 1, 4)
            run = fifo_link_run(trace, c)
            assert fit_min_error_server(run, c) == 0

    def test_per_flow_shaper_error_is_negative_quantum(self):
        spec = FlowSpec("x", TBConstraint(F(6), F(1)), F(2), F(2))
        src = generate_tb_source(spec, 20, "greedy")
        trace = per_flow_lrq_run(src, 2)
        fitted = fit_min_error(src, trace.departures, 2)
        assert fitted <= -spec.l_min / 2

    def test_constructed_shift_recovered_exactly(self):
        trace = pkts("x", (0, 1, 2), (1, 1, 1))
        clocks = reference_clocks(trace, 1)
        shifted = [f + F(1, 4) for _, f in clocks]
        assert fit_min_error(trace, shifted, 1) == F(1, 4)


class TestConversions:
    def test_gr_to_st_adds_transmission_quantum(self):
        rate, tau = gr_to_st(GRParams(2, F(1, 2)), 3)
        assert (rate, tau) == (2, F(2))

    def test_round_trip_equal_lengths_is_lossless(self):
        p = GRParams(4, F(3, 8))
        rate, tau = convert_gr_st_sc(params=p, l_max=2, direction="gr_to_st")
        back = convert_gr_st_sc(rate=rate, tau=tau, l_min=2, direction="st_to_gr")
        assert back == p

    def test_shaper_characterization_has_zero_latency(self):
        rate, tau = gr_to_st(GRParams(2, F(-1, 2)), 1)
        assert tau == 0

    def test_st_to_gr_subtracts_min_quantum(self):
        assert st_to_gr(2, F(3, 2), 1) == GRParams(2, F(1))


def test_strict_priority_class_respects_leftover_rate_guarantee():
    rng = random.Random(23)
    for k in range(30):
        c = F(rng.randint(4, 8))
        sigma_u, rho_u = F(rng.randint(1, 4)), F(rng.randint(1, 3))
        assert rho_u < c
        hi_spec = FlowSpec("H", TBConstraint(sigma_u, rho_u), F(1), F(1))
        lo_spec = FlowSpec(
            "L", TBConstraint(F(rng.randint(2, 5)), F(1)), F(1), F(2)
        )
        high = generate_tb_source(hi_spec, 15, "jittered", seed=k)
        low = generate_tb_source(lo_spec, 15, "jittered", seed=k + 100)
        traces = strict_priority_run([high, low], c)
        params = sp_gr_params(c, sigma_u, rho_u, 0, lo_spec.l_min)
        fitted = fit_min_error(low, traces[1].departures, params.rate)
        assert fitted <= params.error
