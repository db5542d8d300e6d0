import numpy as np
import pytest

from conftest import random_symmetric_model
from optising.graph import gen_regular
from optising.ising import from_graph, hamiltonian, random_state
from optising.optics import (
    HrvEvaluator,
    MacropixelConfig,
    NoiseModel,
    analytic_intensity,
    dump_frame_trace,
    estimate_span,
    field_intensity,
    frame_trace,
    hrv,
)
from optising.spectral import build_ensemble, eigendecompose
from optising.ising import IsingModel

TWO_SPIN = IsingModel(np.array([[0.0, 0.5], [0.5, 0.0]]))


def test_analytic_intensity_examples():
    assert analytic_intensity([1, 1], [1, 1]) == 4.0
    assert analytic_intensity([1, 1], [1, -1]) == 0.0
    assert analytic_intensity([0.3, -0.7, 0.2], [1, 1, -1]) == pytest.approx(0.36)


def test_analytic_intensity_shape_guard():
    with pytest.raises(ValueError):
        analytic_intensity([1, 1], [1, 1, 1])


def test_field_intensity_two_spins_block4():
    cfg = MacropixelConfig.for_spins(2, block=4)
    assert field_intensity([1, 1], [1, 1], cfg) == pytest.approx(4.0, rel=1e-12)


def test_field_intensity_zero_amplitude():
    cfg = MacropixelConfig.for_spins(3, block=2)
    assert field_intensity([0, 0, 0], [1, -1, 1], cfg) == 0.0


def test_field_matches_analytic_fuzzed(rng):
    worst = 0.0
    for _ in range(60):
        n = int(rng.integers(2, 40))
        xi = rng.uniform(-1, 1, size=n)
        x = random_state(n, rng)
        cfg = MacropixelConfig.for_spins(n, block=8)
        a = analytic_intensity(xi, x)
        f = field_intensity(xi, x, cfg)
        worst = max(worst, abs(f - a) / max(a, f, 1e-30))
    assert worst <= 1e-6


def test_field_config_capacity_guard():
    cfg = MacropixelConfig(block=2, grid_rows=1, grid_cols=2, pad=4)
    with pytest.raises(ValueError):
        field_intensity([1, 1, 1], [1, 1, 1], cfg)


def test_macropixel_config_validation():
    with pytest.raises(ValueError):
        MacropixelConfig(block=0, grid_rows=1, grid_cols=1, pad=1)
    with pytest.raises(ValueError):
        MacropixelConfig(block=4, grid_rows=2, grid_cols=2, pad=6)  # not power of two
    with pytest.raises(ValueError):
        MacropixelConfig(block=4, grid_rows=2, grid_cols=2, pad=4)  # too small


def test_hrv_full_matches_quadratic_form(rng):
    for _ in range(40):
        n = int(rng.integers(2, 24))
        m = random_symmetric_model(n, rng)
        ens = build_ensemble(eigendecompose(m), n)
        x = random_state(n, rng)
        exact = float(x.astype(float) @ m.J @ x.astype(float))
        got = hrv(ens, x)
        assert abs(got - exact) <= 1e-9 * max(abs(exact), np.linalg.norm(m.J))


def test_hrv_equals_minus_hamiltonian(rng):
    g = gen_regular(12, 3, 0.0, 1.0, seed=4)
    m = from_graph(g)
    ens = build_ensemble(eigendecompose(m), 12)
    for _ in range(20):
        x = random_state(12, rng)
        assert hrv(ens, x) == pytest.approx(-hamiltonian(m, x), rel=1e-9, abs=1e-9)


def test_hrv_truncated_two_spin():
    # the dropped component is orthogonal to the aligned state, so K=1 is
    # already exact here: frame intensity (0.5+0.5)^2 = 1 with sign +1
    ens = build_ensemble(eigendecompose(TWO_SPIN), 1)
    assert hrv(ens, [1, 1]) == pytest.approx(1.0, abs=1e-12)
    # the anti-aligned state lives on the dropped component instead
    assert hrv(ens, [1, -1]) == pytest.approx(0.0, abs=1e-12)


def test_hrv_global_flip_invariance(rng):
    m = random_symmetric_model(9, rng)
    ens = build_ensemble(eigendecompose(m), 5)
    for _ in range(30):
        x = random_state(9, rng)
        assert hrv(ens, x) == hrv(ens, -x)


def test_hrv_scales_with_p_squared(rng):
    m = random_symmetric_model(6, rng)
    b = eigendecompose(m)
    x = random_state(6, rng)
    v1 = hrv(build_ensemble(b, 4, P=1.0), x)
    v2 = hrv(build_ensemble(b, 4, P=2.0), x)
    assert v2 == pytest.approx(4.0 * v1, rel=1e-12)


def test_hrv_field_backend_matches_analytic(rng):
    m = random_symmetric_model(10, rng)
    ens = build_ensemble(eigendecompose(m), 6)
    x = random_state(10, rng)
    a = hrv(ens, x, backend="analytic")
    f = hrv(ens, x, backend="field")
    assert f == pytest.approx(a, rel=1e-6, abs=1e-9)


def test_hrv_unknown_backend():
    ens = build_ensemble(eigendecompose(TWO_SPIN), 1)
    with pytest.raises(ValueError):
        hrv(ens, [1, 1], backend="quantum")


def test_noise_level_zero_is_noiseless():
    ens = build_ensemble(eigendecompose(TWO_SPIN), 2)
    quiet = NoiseModel(level=0.0, sigma=0.0)
    rng = np.random.default_rng(3)
    assert hrv(ens, [1, -1], noise=quiet, rng=rng) == hrv(ens, [1, -1])
    # and the rng is untouched: the next draw matches a fresh generator
    assert rng.random() == np.random.default_rng(3).random()


def test_noise_perturbs_and_is_seeded():
    ens = build_ensemble(eigendecompose(TWO_SPIN), 2)
    noise = NoiseModel(level=0.1, sigma=0.2, span_samples=100)
    a = hrv(ens, [1, 1], noise=noise, rng=np.random.default_rng(7))
    b = hrv(ens, [1, 1], noise=noise, rng=np.random.default_rng(7))
    c = hrv(ens, [1, 1], noise=noise, rng=np.random.default_rng(8))
    assert a == b
    assert a != c
    assert a != hrv(ens, [1, 1])
    # draw is the scaled standard normal of that stream
    expect = hrv(ens, [1, 1]) + 0.2 * np.random.default_rng(7).normal()
    assert a == pytest.approx(expect, rel=1e-12)


def test_noise_per_frame_flag(rng):
    ens = build_ensemble(eigendecompose(TWO_SPIN), 2)
    noise = NoiseModel(level=0.1, sigma=0.2, span_samples=100)
    per_hrv = hrv(ens, [1, 1], noise=noise, rng=np.random.default_rng(5))
    per_frame = hrv(ens, [1, 1], noise=noise, rng=np.random.default_rng(5),
                    noise_per_frame=True)
    assert per_hrv != per_frame


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(level=-0.1, sigma=0.0)
    with pytest.raises(ValueError):
        NoiseModel(level=0.0, sigma=1.0)


def test_noise_calibration():
    ens = build_ensemble(eigendecompose(TWO_SPIN), 2)
    rng = np.random.default_rng(11)
    nm = NoiseModel.calibrate(ens, 0.05, samples=200, rng=rng)
    span = estimate_span(ens, samples=200, rng=np.random.default_rng(11))
    assert nm.sigma == pytest.approx(0.05 * span)
    assert NoiseModel.calibrate(ens, 0.0).sigma == 0.0


def test_estimate_span_zero_ensemble():
    m = IsingModel(np.zeros((3, 3)))
    ens = build_ensemble(eigendecompose(m), 3)
    assert estimate_span(ens, samples=50, rng=np.random.default_rng(0)) == 0.0


def test_estimate_span_two_spin():
    # readouts are +-1 only, so any sample seeing both signs spans 2
    ens = build_ensemble(eigendecompose(TWO_SPIN), 2)
    span = estimate_span(ens, samples=200, rng=np.random.default_rng(1))
    assert span == pytest.approx(2.0, abs=1e-12)


def test_estimate_span_deterministic():
    ens = build_ensemble(eigendecompose(TWO_SPIN), 2)
    a = estimate_span(ens, samples=100, rng=np.random.default_rng(2))
    b = estimate_span(ens, samples=100, rng=np.random.default_rng(2))
    assert a == b


def test_estimate_span_guards():
    ens = build_ensemble(eigendecompose(TWO_SPIN), 2)
    with pytest.raises(ValueError):
        estimate_span(ens, samples=1, rng=np.random.default_rng(0))


def test_frame_trace_matches_backend(rng):
    m = random_symmetric_model(5, rng)
    ens = build_ensemble(eigendecompose(m), 4)
    x = random_state(5, rng)
    rows = frame_trace(ens, x)
    assert len(rows) == 4
    total = sum(g * i for _, g, i in rows)
    assert total == pytest.approx(hrv(ens, x), rel=1e-12)


def test_dump_frame_trace(tmp_path, rng):
    m = random_symmetric_model(4, rng)
    ens = build_ensemble(eigendecompose(m), 4)
    p = tmp_path / "frames.csv"
    dump_frame_trace(ens, [1, -1, 1, 1], p)
    lines = p.read_text().splitlines()
    assert lines[0] == "frame,sign,intensity"
    assert len(lines) == 5
    total = sum(int(ln.split(",")[1]) * float(ln.split(",")[2]) for ln in lines[1:])
    assert total == pytest.approx(hrv(ens, [1, -1, 1, 1]), rel=1e-12)


def test_evaluator_wraps_hrv(rng):
    m = random_symmetric_model(6, rng)
    ens = build_ensemble(eigendecompose(m), 3)
    ev = HrvEvaluator(ens)
    x = random_state(6, rng)
    assert ev.evaluate(x) == hrv(ens, x)
    assert ev.n == 6
    assert ev.K == 3
