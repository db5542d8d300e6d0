import math

import numpy as np
import pytest

from optising.anneal import (
    CUT_MATCH_TOL,
    Schedule,
    anneal,
    default_schedules,
    dump_trace,
    estimate_optimal_probability,
)
from optising.graph import WeightedGraph, gen_regular
from optising.ising import brute_force_maxcut, cut_value, from_graph
from optising.optics import HrvEvaluator, NoiseModel
from optising.spectral import build_ensemble, eigendecompose


def make_evaluator(g, K=None, noise=None):
    b = eigendecompose(from_graph(g))
    ens = build_ensemble(b, K if K is not None else g.n)
    return HrvEvaluator(ens, noise=noise)


@pytest.fixture(scope="module")
def small_graph():
    return gen_regular(8, 3, 0.0, 1.0, seed=2)


def test_schedule_validation():
    with pytest.raises(ValueError):
        Schedule(t0=0.0, rate=0.5)
    with pytest.raises(ValueError):
        Schedule(t0=1.0, rate=1.0)
    with pytest.raises(ValueError):
        Schedule(t0=1.0, rate=0.5, iters=0)
    with pytest.raises(ValueError):
        Schedule(t0=1.0, rate=0.5, flip_floor=0)


def test_schedule_temperature_law():
    s = Schedule(t0=2.0, rate=0.9, iters=5)
    assert s.temperatures() == pytest.approx([2.0, 1.8, 1.62, 1.458, 1.3122])


def test_schedule_flip_counts_monotone():
    s = Schedule(t0=1.0, rate=0.995, iters=3000)
    m = s.flip_counts(20)
    assert m[0] == 20
    assert m[-1] == 1
    assert np.all(np.diff(m) <= 0)
    assert np.all(m >= 1)


def test_default_schedules():
    scheds = default_schedules(5.0)
    assert [s.rate for s in scheds] == [0.99, 0.995, 0.999]
    assert all(s.t0 == 5.0 and s.iters == 3000 for s in scheds)


def test_anneal_deterministic(small_graph):
    ev = make_evaluator(small_graph)
    s = Schedule(t0=5.0, rate=0.99, iters=400)
    t1 = anneal(ev, small_graph, s, seed=77)
    t2 = anneal(ev, small_graph, s, seed=77)
    assert np.array_equal(t1.hrv, t2.hrv)
    assert np.array_equal(t1.cut, t2.cut)
    assert np.array_equal(t1.accepted, t2.accepted)
    assert np.array_equal(t1.final_state, t2.final_state)
    t3 = anneal(ev, small_graph, s, seed=78)
    assert not np.array_equal(t1.hrv, t3.hrv)


def test_trace_shape_and_fields(small_graph):
    ev = make_evaluator(small_graph)
    s = Schedule(t0=5.0, rate=0.99, iters=250)
    tr = anneal(ev, small_graph, s, seed=1)
    assert tr.iters == 250
    assert tr.temperature == pytest.approx(5.0 * 0.99 ** np.arange(250))
    assert tr.final_hrv == tr.hrv[-1]
    assert tr.final_cut == tr.cut[-1]
    assert set(np.unique(tr.final_state)) <= {-1, 1}


def test_recorded_cut_matches_state_history(small_graph):
    # replaying accepted moves is impossible from the trace alone, but the
    # final state must reproduce the final recorded cut exactly
    ev = make_evaluator(small_graph)
    s = Schedule(t0=5.0, rate=0.99, iters=300)
    tr = anneal(ev, small_graph, s, seed=9)
    assert cut_value(small_graph, tr.final_state) == pytest.approx(tr.final_cut, abs=1e-12)


def test_cut_identity_along_trace(small_graph):
    # noiseless full-K evaluator: CV == (total_weight + readout)/2 throughout
    ev = make_evaluator(small_graph)
    s = Schedule(t0=5.0, rate=0.995, iters=500)
    tr = anneal(ev, small_graph, s, seed=5)
    ident = (small_graph.total_weight() + tr.hrv) / 2.0
    assert tr.cut == pytest.approx(ident, rel=1e-9, abs=1e-9)


def test_acceptance_audit(small_graph):
    ev = make_evaluator(small_graph)
    s = Schedule(t0=5.0, rate=0.99, iters=600)
    tr = anneal(ev, small_graph, s, seed=3)
    uphill_accept = tr.accepted & (tr.delta_e > 0)
    assert uphill_accept.any()  # hot phase should accept some uphill moves
    for k in np.nonzero(uphill_accept)[0]:
        u = tr.uniform[k]
        assert not math.isnan(u)
        assert u < math.exp(-tr.delta_e[k] / tr.temperature[k])
    # downhill proposals never consumed a Metropolis draw
    assert np.all(np.isnan(tr.uniform[tr.delta_e <= 0]))


def test_greedy_limit_never_accepts_uphill(small_graph):
    ev = make_evaluator(small_graph)
    s = Schedule(t0=5.0, rate=1e-9, iters=200)
    tr = anneal(ev, small_graph, s, seed=10)
    accepted_hrv = tr.hrv[tr.accepted]
    assert np.all(np.diff(accepted_hrv) >= -1e-12)
    assert not np.any(tr.accepted & (tr.delta_e > 0))
    assert np.all(tr.flips[1:] == 1)


def test_tiny_graph_finds_optimum_reliably():
    g = gen_regular(4, 2, 0.0, 1.0, seed=3)
    best, _ = brute_force_maxcut(g)
    ev = make_evaluator(g)
    s = Schedule(t0=3.0, rate=0.995, iters=3000)
    hits = sum(abs(anneal(ev, g, s, seed=100 + r).final_cut - best) <= CUT_MATCH_TOL
               for r in range(100))
    assert hits >= 95


def test_dimension_guard(small_graph):
    other = gen_regular(6, 3, 0.0, 1.0, seed=0)
    ev = make_evaluator(other)
    with pytest.raises(ValueError):
        anneal(ev, small_graph, Schedule(t0=1.0, rate=0.9, iters=10), seed=0)


def test_noisy_run_is_deterministic(small_graph):
    noise = NoiseModel(level=0.05, sigma=0.3, span_samples=10)
    ev = make_evaluator(small_graph, noise=noise)
    s = Schedule(t0=5.0, rate=0.99, iters=200)
    t1 = anneal(ev, small_graph, s, seed=21)
    t2 = anneal(ev, small_graph, s, seed=21)
    assert np.array_equal(t1.hrv, t2.hrv)
    # noisy readouts drift from the exact identity
    ident = (small_graph.total_weight() + t1.hrv) / 2.0
    assert not np.allclose(t1.cut, ident, atol=1e-6)


def test_zero_level_noise_equals_noiseless(small_graph):
    quiet = NoiseModel(level=0.0, sigma=0.0)
    s = Schedule(t0=5.0, rate=0.99, iters=300)
    t1 = anneal(make_evaluator(small_graph, noise=quiet), small_graph, s, seed=8)
    t2 = anneal(make_evaluator(small_graph), small_graph, s, seed=8)
    assert np.array_equal(t1.hrv, t2.hrv)
    assert np.array_equal(t1.final_state, t2.final_state)


def test_dump_trace(tmp_path, small_graph):
    ev = make_evaluator(small_graph)
    s = Schedule(t0=5.0, rate=0.99, iters=50)
    tr = anneal(ev, small_graph, s, seed=4)
    p = tmp_path / "trace.csv"
    dump_trace(tr, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "iter,temperature,flips,hrv,cut,accepted"
    assert len(lines) == 51
    first = lines[1].split(",")
    assert first[0] == "0"
    assert float(first[1]) == 5.0


def test_estimate_optimal_probability_trivial_edge():
    g = WeightedGraph(2, ((0, 1, 1.0),))
    ev = make_evaluator(g)
    s = Schedule(t0=2.0, rate=0.9, iters=200)  # frozen well before the end
    p = estimate_optimal_probability(ev, g, s, runs=10, master_seed=0)
    assert p == 1.0


def test_estimate_optimal_probability_factory_and_precomputed(small_graph):
    best, _ = brute_force_maxcut(small_graph)
    s = Schedule(t0=5.0, rate=0.99, iters=300)
    direct = estimate_optimal_probability(make_evaluator(small_graph), small_graph,
                                          s, runs=8, master_seed=5)
    via_factory = estimate_optimal_probability(lambda: make_evaluator(small_graph),
                                               small_graph, s, runs=8, master_seed=5,
                                               optimum=best)
    assert direct == via_factory


def test_estimate_optimal_probability_jobs_invariant(small_graph):
    s = Schedule(t0=5.0, rate=0.99, iters=200)
    ev = make_evaluator(small_graph)
    p1 = estimate_optimal_probability(ev, small_graph, s, runs=6, master_seed=11, jobs=1)
    p2 = estimate_optimal_probability(ev, small_graph, s, runs=6, master_seed=11, jobs=2)
    assert p1 == p2


def test_estimate_optimal_probability_guards(small_graph):
    ev = make_evaluator(small_graph)
    s = Schedule(t0=5.0, rate=0.99, iters=10)
    with pytest.raises(ValueError):
        estimate_optimal_probability(ev, small_graph, s, runs=0, master_seed=0)
