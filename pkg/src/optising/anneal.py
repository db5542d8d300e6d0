"""Simulated annealing on spin states with the optical readout as energy.

Energy is minus the accumulated readout, so larger readouts win.  The move
size is coupled to temperature: a move flips max(flip_floor, round(n*T/t0))
distinct spins, which decays from whole-state shakes at the start to
single-spin refinement near the freeze.  Runs are Markov chains driven by
two RNG streams split from the run seed (moves, detector noise), so a run
is reproducible bit-for-bit and noise draws never disturb move selection.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .graph import WeightedGraph
from .ising import brute_force_maxcut, random_state
from .optics import HrvEvaluator

__all__ = [
    "Schedule",
    "AnnealTrace",
    "anneal",
    "estimate_optimal_probability",
    "default_schedules",
    "dump_trace",
    "DEFAULT_RATES",
    "DEFAULT_ITERS",
    "CUT_MATCH_TOL",
]

DEFAULT_RATES = (0.99, 0.995, 0.999)
DEFAULT_ITERS = 3000
CUT_MATCH_TOL = 1e-9
_EXP_ARG_MAX = 700.0


@dataclass(frozen=True)
class Schedule:
    """Geometric cooling: T_k = t0 * rate^k for iters steps."""

    t0: float
    rate: float
    iters: int = DEFAULT_ITERS
    flip_floor: int = 1

    def __post_init__(self):
        if not self.t0 > 0:
            raise ValueError("t0 must be positive")
        if not 0.0 < self.rate < 1.0:
            raise ValueError("rate must lie in (0, 1)")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")
        if self.flip_floor < 1:
            raise ValueError("flip_floor must be >= 1")

    def temperatures(self) -> np.ndarray:
        return self.t0 * self.rate ** np.arange(self.iters)

    def flip_counts(self, n: int) -> np.ndarray:
        m = np.rint(n * self.rate ** np.arange(self.iters)).astype(np.int64)
        return np.clip(m, self.flip_floor, n)


def default_schedules(t0: float, iters: int = DEFAULT_ITERS) -> list[Schedule]:
    return [Schedule(t0=t0, rate=r, iters=iters) for r in DEFAULT_RATES]


@dataclass
class AnnealTrace:
    """Per-iteration history of one run plus the final state summary.

    `uniform` holds the Metropolis draw for uphill proposals and NaN where
    no draw happened, so acceptance decisions can be audited after the fact.
    """

    temperature: np.ndarray
    flips: np.ndarray
    hrv: np.ndarray
    cut: np.ndarray
    accepted: np.ndarray
    delta_e: np.ndarray
    uniform: np.ndarray
    final_state: np.ndarray
    final_hrv: float
    final_cut: float

    @property
    def iters(self) -> int:
        return self.hrv.size


def anneal(evaluator: HrvEvaluator, g: WeightedGraph, s: Schedule, seed: int) -> AnnealTrace:
    """One annealing run from a uniform random start; deterministic per seed."""
    n = g.n
    if evaluator.n != n:
        raise ValueError(f"evaluator dimension {evaluator.n} does not match graph n={n}")

    move_ss, noise_ss = np.random.SeedSequence(seed).spawn(2)
    move_rng = np.random.default_rng(move_ss)
    noise_rng = np.random.default_rng(noise_ss)

    temps = s.temperatures()
    flip_counts = s.flip_counts(n)
    eu, ev, ew = g.edge_arrays()
    half_total = g.total_weight() / 2.0

    x = random_state(n, move_rng).astype(float)
    cur_hrv = evaluator.evaluate(x, noise_rng)

    hrv_hist = np.empty(s.iters)
    cut_hist = np.empty(s.iters)
    accepted = np.zeros(s.iters, dtype=bool)
    delta_e = np.empty(s.iters)
    uniform = np.full(s.iters, np.nan)

    for k in range(s.iters):
        t = temps[k]
        m = flip_counts[k]
        idx = move_rng.choice(n, size=m, replace=False)
        x[idx] = -x[idx]
        cand_hrv = evaluator.evaluate(x, noise_rng)
        d_e = cur_hrv - cand_hrv  # energy = -readout
        if d_e <= 0.0:
            ok = True
        else:
            u = move_rng.random()
            uniform[k] = u
            # guard keeps exp() in range and avoids dividing by an
            # underflowed temperature
            ok = d_e <= _EXP_ARG_MAX * t and u < math.exp(-d_e / t)
        if ok:
            cur_hrv = cand_hrv
            accepted[k] = True
        else:
            x[idx] = -x[idx]
        delta_e[k] = d_e
        hrv_hist[k] = cur_hrv
        cut_hist[k] = half_total - float(ew @ (x[eu] * x[ev])) / 2.0 if ew.size else 0.0

    return AnnealTrace(
        temperature=temps,
        flips=flip_counts,
        hrv=hrv_hist,
        cut=cut_hist,
        accepted=accepted,
        delta_e=delta_e,
        uniform=uniform,
        final_state=x.astype(np.int8),
        final_hrv=float(cur_hrv),
        final_cut=float(cut_hist[-1]),
    )


def dump_trace(trace: AnnealTrace, path) -> None:
    """CSV dump: iter, temperature, flips, hrv, cut, accepted."""
    with open(path, "w") as fh:
        fh.write("iter,temperature,flips,hrv,cut,accepted\n")
        for k in range(trace.iters):
            fh.write(f"{k},{float(trace.temperature[k])!r},{int(trace.flips[k])},"
                     f"{float(trace.hrv[k])!r},{float(trace.cut[k])!r},"
                     f"{int(trace.accepted[k])}\n")


def _final_cut(args):
    evaluator, g, s, seed = args
    return anneal(evaluator, g, s, seed).final_cut


def estimate_optimal_probability(evaluator_factory, g: WeightedGraph, s: Schedule,
                                 runs: int, master_seed: int,
                                 optimum: float | None = None,
                                 jobs: int = 1) -> float:
    """Fraction of independent runs whose final cut hits the brute-force optimum.

    Run r uses seed master_seed + r.  `evaluator_factory` may be a zero-arg
    callable (invoked once per run) or an evaluator instance.  Passing a
    precomputed `optimum` skips the enumeration; results are independent of
    `jobs` because every run owns its seed.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if optimum is None:
        optimum, _ = brute_force_maxcut(g)

    tasks = []
    for r in range(runs):
        ev = evaluator_factory() if callable(evaluator_factory) else evaluator_factory
        tasks.append((ev, g, s, master_seed + r))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            finals = list(pool.map(_final_cut, tasks, chunksize=max(1, runs // (4 * jobs))))
    else:
        finals = [_final_cut(t) for t in tasks]

    hits = sum(1 for c in finals if abs(c - optimum) <= CUT_MATCH_TOL)
    return hits / runs
