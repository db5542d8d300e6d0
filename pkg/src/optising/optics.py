"""Simulated optical readout of the interference machine.

One frame displays one amplitude pattern xi with the spin phases on top and
reads the detector center point.  Two backends produce that reading:

* analytic  -- closed form (sum_i xi_i * x_i)^2, exact.
* field     -- builds the 2D macropixel plane, runs a discrete Fourier
               transform, and reads the zero-frequency bin; calibrated to
               match the analytic value.

Accumulating the K frame intensities with their eigenvalue signs gives the
Hamiltonian surrogate for the current spin state; detector noise is one
Gaussian perturbation of that accumulated value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import IntensityEnsemble

__all__ = [
    "MacropixelConfig",
    "NoiseModel",
    "HrvEvaluator",
    "analytic_intensity",
    "field_intensity",
    "hrv",
    "estimate_span",
    "frame_trace",
]


@dataclass(frozen=True)
class MacropixelConfig:
    """Layout of spins on the modulator plane.

    Spin i occupies a block x block square of uniform amplitude, placed
    row-major on a grid_rows x grid_cols grid; the plane is zero-padded to
    pad x pad (power of two) before the transform.
    """

    block: int = 8
    grid_rows: int = 1
    grid_cols: int = 1
    pad: int = 1

    def __post_init__(self):
        if self.block < 1:
            raise ValueError("block must be >= 1")
        if self.grid_rows < 1 or self.grid_cols < 1:
            raise ValueError("grid dimensions must be >= 1")
        need = max(self.grid_rows, self.grid_cols) * self.block
        if self.pad < need or self.pad & (self.pad - 1):
            raise ValueError(f"pad must be a power of two >= {need}, got {self.pad}")

    @property
    def capacity(self) -> int:
        return self.grid_rows * self.grid_cols

    @classmethod
    def for_spins(cls, n: int, block: int = 8) -> "MacropixelConfig":
        """Smallest square grid holding n spins, padded to the next power of two."""
        side = int(np.ceil(np.sqrt(n)))
        pad = 1
        while pad < side * block:
            pad *= 2
        return cls(block=block, grid_rows=side, grid_cols=side, pad=pad)


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian detector noise, calibrated as a fraction of the readout span."""

    level: float
    sigma: float
    span_samples: int = 0

    def __post_init__(self):
        if self.level < 0 or self.sigma < 0:
            raise ValueError("noise level and sigma must be non-negative")
        if self.level == 0 and self.sigma != 0:
            raise ValueError("level 0 requires sigma 0")

    @classmethod
    def calibrate(cls, ensemble: IntensityEnsemble, level: float, samples: int = 1000,
                  rng: np.random.Generator | None = None, backend: str = "analytic",
                  cfg: MacropixelConfig | None = None) -> "NoiseModel":
        """sigma = level * (max - min of noiseless readouts over random states)."""
        if level == 0:
            return cls(level=0.0, sigma=0.0, span_samples=0)
        if rng is None:
            raise ValueError("calibration with level > 0 needs an rng")
        span = estimate_span(ensemble, backend=backend, samples=samples, rng=rng, cfg=cfg)
        return cls(level=float(level), sigma=float(level) * span, span_samples=samples)


def analytic_intensity(xi, x) -> float:
    """Center-point intensity of one frame: (sum_i xi_i * x_i)^2.

    Spin phases 0/pi act as +-1 factors; a negative amplitude entry is the
    same thing as an extra pi offset, so the signed product is exact.
    """
    xi = np.asarray(xi, dtype=float)
    x = np.asarray(x, dtype=float)
    if xi.shape != x.shape:
        raise ValueError(f"shape mismatch: xi {xi.shape} vs x {x.shape}")
    return float(xi @ x) ** 2


def field_intensity(xi, x, cfg: MacropixelConfig) -> float:
    """Frame intensity via the full 2D transform of the macropixel plane.

    The zero-frequency bin of the unshifted DFT is the plane sum, i.e.
    block^2 * sum(xi*x); dividing |bin|^2 by (block^2)^2 recovers the
    analytic value.
    """
    xi = np.asarray(xi, dtype=float)
    x = np.asarray(x, dtype=float)
    n = xi.size
    if x.size != n:
        raise ValueError(f"shape mismatch: xi {xi.shape} vs x {x.shape}")
    if cfg.capacity < n:
        raise ValueError(f"layout holds {cfg.capacity} spins, need {n}")

    b = cfg.block
    plane = np.zeros((cfg.pad, cfg.pad), dtype=complex)
    amp = xi * x
    for i in range(n):
        r = (i // cfg.grid_cols) * b
        c = (i % cfg.grid_cols) * b
        plane[r:r + b, c:c + b] = amp[i]
    center = np.fft.fft2(plane)[0, 0]
    return float(np.abs(center) ** 2) / float(b * b) ** 2


def _frame_intensities(ensemble: IntensityEnsemble, x, backend: str,
                       cfg: MacropixelConfig | None) -> np.ndarray:
    if backend == "analytic":
        x = np.asarray(x, dtype=float)
        if x.size != ensemble.n:
            raise ValueError(f"state length {x.size} does not match n={ensemble.n}")
        return (ensemble.xi @ x) ** 2
    if backend == "field":
        if cfg is None:
            cfg = MacropixelConfig.for_spins(ensemble.n)
        return np.array([field_intensity(row, x, cfg) for row in ensemble.xi])
    raise ValueError(f"unknown backend {backend!r}")


def hrv(ensemble: IntensityEnsemble, x, backend: str = "analytic",
        noise: NoiseModel | None = None, rng: np.random.Generator | None = None,
        cfg: MacropixelConfig | None = None, noise_per_frame: bool = False) -> float:
    """Signed accumulation of the K frame intensities for one spin state.

    Frames are summed in component order.  With a noise model, one Gaussian
    draw of std sigma perturbs the accumulated value (noise_per_frame=True
    instead perturbs every frame; kept only for comparison studies).  A zero
    noise level draws nothing, so results match the noiseless call.
    """
    intensities = _frame_intensities(ensemble, x, backend, cfg)
    if noise is not None and noise.sigma > 0 and noise_per_frame:
        if rng is None:
            raise ValueError("noisy evaluation needs an rng")
        intensities = intensities + rng.normal(0.0, noise.sigma, size=intensities.size)
    value = float(ensemble.g @ intensities)
    if noise is not None and noise.sigma > 0 and not noise_per_frame:
        if rng is None:
            raise ValueError("noisy evaluation needs an rng")
        value += float(rng.normal(0.0, noise.sigma))
    return value


def estimate_span(ensemble: IntensityEnsemble, backend: str = "analytic",
                  samples: int = 1000, rng: np.random.Generator | None = None,
                  cfg: MacropixelConfig | None = None) -> float:
    """max - min of the noiseless readout over `samples` uniform random states."""
    if samples < 2:
        raise ValueError(f"need at least 2 samples, got {samples}")
    if rng is None:
        raise ValueError("span estimation needs an rng")
    states = rng.integers(0, 2, size=(samples, ensemble.n)) * 2 - 1
    if backend == "analytic":
        vals = ((states.astype(float) @ ensemble.xi.T) ** 2) @ ensemble.g
    else:
        vals = np.array([hrv(ensemble, s, backend=backend, cfg=cfg) for s in states])
    return float(np.max(vals) - np.min(vals))


def frame_trace(ensemble: IntensityEnsemble, x, backend: str = "analytic",
                cfg: MacropixelConfig | None = None):
    """Per-frame debug records (frame index, sign, intensity)."""
    intensities = _frame_intensities(ensemble, x, backend, cfg)
    return [(k, int(ensemble.g[k]), float(intensities[k])) for k in range(ensemble.K)]


def dump_frame_trace(ensemble: IntensityEnsemble, x, path, backend: str = "analytic",
                     cfg: MacropixelConfig | None = None) -> None:
    """CSV dump of the per-frame accumulation: frame, sign, intensity."""
    with open(path, "w") as fh:
        fh.write("frame,sign,intensity\n")
        for k, g, i in frame_trace(ensemble, x, backend=backend, cfg=cfg):
            fh.write(f"{k},{g},{i!r}\n")


@dataclass(frozen=True)
class HrvEvaluator:
    """Bound readout: truncated ensemble + backend + noise channel."""

    ensemble: IntensityEnsemble
    backend: str = "analytic"
    noise: NoiseModel | None = None
    cfg: MacropixelConfig | None = None
    noise_per_frame: bool = False

    @property
    def n(self) -> int:
        return self.ensemble.n

    @property
    def K(self) -> int:
        return self.ensemble.K

    def evaluate(self, x, rng: np.random.Generator | None = None) -> float:
        return hrv(self.ensemble, x, backend=self.backend, noise=self.noise,
                   rng=rng, cfg=self.cfg, noise_per_frame=self.noise_per_frame)
