"""Monte Carlo model of a comb-resolving spectrometer behind the output port.

Counting model
--------------
For each relative phase a fixed number ``n`` of signal photons reaches the
final beam splitter inside the spectrometer window. Their frequencies follow
the port-summed spectrum ``S(phi) + S(phi + pi)``, which does not depend on
``phi``. A photon at frequency ``w`` exits towards the detector with
probability ``S(phi)(w) / (S(phi) + S(phi + pi))(w)``, otherwise it leaves by
the dark port. Detected photons get Gaussian instrument jitter and are binned.
Per phase, ``counts.sum() + undetected == n``.

Random streams
--------------
Generators are PCG64. Phase ``k`` of a sweep seeded with ``seed`` draws from
``SeedSequence(seed, spawn_key=(k,))``, so each phase is reproducible on its
own regardless of execution order or worker count.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .errors import CannotNormalizeError, EstimationError, LowStatisticsError
from .samples import SampleModel
from .spectral import CavityParams, CombIndexRange, FrequencyGrid
from .spectrum import Spectrum, comb_resolved_values, fit_cosine, invert_visibility

MIN_BIN_COUNTS = 100
THREADS_ENV = "ZWM_SIM_THREADS"


@dataclass(frozen=True)
class SpectrometerModel:
    resolution_sigma: float
    bin_edges: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("bin_edges must be a strictly increasing 1-D array")
        if not self.resolution_sigma >= 0:
            raise ValueError("resolution_sigma must be >= 0")
        object.__setattr__(self, "bin_edges", edges)

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    def is_comb_resolving(self, delta_omega: float) -> bool:
        return self.resolution_sigma < delta_omega / 4.0

    @classmethod
    def for_comb(cls, params: CavityParams, m_lo: int, m_hi: int, bins_per_fsr: int, resolution_sigma=0.0):
        start = params.omega_s + (m_lo - 0.5) * params.delta_omega
        stop = params.omega_s + (m_hi + 0.5) * params.delta_omega
        edges = np.linspace(start, stop, bins_per_fsr * (m_hi - m_lo + 1) + 1)
        return cls(resolution_sigma, edges)


@dataclass(frozen=True)
class MeasurementRun:
    seed: int
    n_photons_per_phase: int
    phases: np.ndarray
    counts: np.ndarray  # (phase, bin)
    undetected: np.ndarray  # (phase,)
    spectrometer: SpectrometerModel
    params: CavityParams

    def mode_bins(self, m: int) -> np.ndarray:
        """Bins whose centers lie within half a comb spacing of tooth ``m``."""
        center = self.params.omega_s + m * self.params.delta_omega
        half = self.params.delta_omega / 2.0
        d = self.spectrometer.bin_centers - center
        return (d >= -half) & (d < half)

    def mode_counts(self, m: int) -> np.ndarray:
        return self.counts[:, self.mode_bins(m)].sum(axis=1)


class VisibilityEstimate(NamedTuple):
    V_est: float
    std_err: float


def phase_rng(seed: int, k: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(k,))))


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def _draw_from_cells(weights: np.ndarray, grid: FrequencyGrid, n: int, rng):
    """Inverse-CDF draw of cell indices, then a uniform position inside the cell."""
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    u = rng.random(n)
    cell = np.searchsorted(cdf, u, side="right")
    np.minimum(cell, weights.size - 1, out=cell)
    h = grid.spacing
    omega = grid.start + (cell + rng.random(n) - 0.5) * h
    return cell, omega


def _jitter_and_bin(omega, spectrometer: SpectrometerModel, rng):
    if spectrometer.resolution_sigma > 0:
        omega = omega + rng.normal(0.0, spectrometer.resolution_sigma, omega.size)
    counts, _ = np.histogram(omega, bins=spectrometer.bin_edges)
    return counts.astype(np.int64)


def sample_photons(
    spectrum: Spectrum, spectrometer: SpectrometerModel, n: int, seed: Union[int, np.random.Generator]
) -> np.ndarray:
    """Bin ``n`` photons drawn from ``spectrum``; photons landing outside the bins are dropped."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return np.zeros(spectrometer.bin_edges.size - 1, dtype=np.int64)
    values = np.asarray(spectrum.values, dtype=float)
    if np.any(values < 0) or not np.any(values > 0):
        raise CannotNormalizeError("spectrum is identically zero (or negative); nothing to sample")
    rng = _as_rng(seed)
    _, omega = _draw_from_cells(values, spectrum.grid, n, rng)
    return _jitter_and_bin(omega, spectrometer, rng)


def sweep_grid(params: CavityParams, spectrometer: SpectrometerModel, points_per_gamma: int = 20) -> FrequencyGrid:
    """Source grid covering the bins plus five instrument widths each side."""
    pad = 5.0 * spectrometer.resolution_sigma
    start = spectrometer.bin_edges[0] - pad
    stop = spectrometer.bin_edges[-1] + pad
    h = params.gamma / points_per_gamma
    n = int(math.ceil((stop - start) / h)) + 1
    return FrequencyGrid(start, start + (n - 1) * h, n)


def _worker_count(workers: Optional[int]) -> int:
    if workers is None:
        env = os.environ.get(THREADS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, workers)


def run_phase_sweep(
    params: CavityParams,
    model: SampleModel,
    comb_range: CombIndexRange,
    varphi: float,
    phases: Sequence[float],
    spectrometer: SpectrometerModel,
    n_per_phase: int,
    seed: int,
    paper_exact: bool = False,
    workers: Optional[int] = None,
) -> MeasurementRun:
    """Simulated counts for each relative phase, from the comb-resolved spectrum."""
    if n_per_phase < 0:
        raise ValueError("n_per_phase must be >= 0")
    if not spectrometer.is_comb_resolving(params.delta_omega):
        warnings.warn(
            f"resolution_sigma = {spectrometer.resolution_sigma:.4g} >= delta_omega/4: "
            "spectrometer does not resolve the comb",
            stacklevel=2,
        )
    phases = np.asarray(phases, dtype=float)
    grid = sweep_grid(params, spectrometer)
    modes = comb_range.modes
    omega = grid.values

    def one_phase(k):
        bright = comb_resolved_values(params, model, modes, omega, phases[k] + varphi, paper_exact)
        dark = comb_resolved_values(params, model, modes, omega, phases[k] + math.pi + varphi, paper_exact)
        total = bright + dark
        if not np.any(total > 0):
            raise CannotNormalizeError("no signal photons in the spectrometer window")
        if n_per_phase == 0:
            return np.zeros(spectrometer.bin_edges.size - 1, dtype=np.int64)
        rng = phase_rng(seed, k)
        cell, w = _draw_from_cells(total, grid, n_per_phase, rng)
        with np.errstate(invalid="ignore", divide="ignore"):
            p_det = np.where(total > 0, bright / total, 0.0)
        detected = rng.random(n_per_phase) < p_det[cell]
        return _jitter_and_bin(w[detected], spectrometer, rng)

    n_workers = min(_worker_count(workers), max(1, phases.size))
    if n_workers == 1:
        rows = [one_phase(k) for k in range(phases.size)]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            rows = list(pool.map(one_phase, range(phases.size)))
    counts = np.array(rows, dtype=np.int64).reshape(phases.size, spectrometer.bin_edges.size - 1)
    return MeasurementRun(
        seed=seed,
        n_photons_per_phase=n_per_phase,
        phases=phases,
        counts=counts,
        undetected=n_per_phase - counts.sum(axis=1),
        spectrometer=spectrometer,
        params=params,
    )


def estimate_visibility(run: MeasurementRun, m: int) -> VisibilityEstimate:
    """Poisson-weighted cosine fit of the tooth-``m`` counts versus phase.

    The contrast is capped at 1; the standard error comes from the fit
    covariance by the delta method.
    """
    mask = run.mode_bins(m)
    if not mask.any():
        raise EstimationError(f"no spectrometer bins cover comb mode {m}")
    c = run.counts[:, mask].sum(axis=1).astype(float)
    if c.sum() < MIN_BIN_COUNTS:
        raise LowStatisticsError(
            f"only {int(c.sum())} counts in mode {m} (need {MIN_BIN_COUNTS})"
        )
    if run.phases.size < 3:
        raise EstimationError("need at least 3 phases")
    (a, b, d), cov = fit_cosine(run.phases, c, weights=1.0 / np.maximum(c, 1.0))
    if not a > 0:
        raise EstimationError("fitted mean count is not positive")
    amp = math.hypot(b, d)
    V = amp / a
    if amp > 0:
        grad = np.array([-V / a, b / (a * amp), d / (a * amp)])
    else:
        grad = np.array([0.0, 1.0 / a, 0.0])
    se = float(math.sqrt(max(grad @ cov @ grad, 0.0)))
    return VisibilityEstimate(float(min(V, 1.0)), se)


def transmissivity_estimate(est: VisibilityEstimate):
    """``(T_hat, std_err)`` from a visibility estimate by inversion and the delta method."""
    V = min(max(est.V_est, 0.0), 1.0)
    t = invert_visibility(V)
    # dt/dV = t / (V sqrt(1 - V^2)), which is 1/2 at V = 0
    if V == 0:
        slope = 0.5
    elif V >= 1:
        slope = math.inf
    else:
        slope = t / (V * math.sqrt((1 - V) * (1 + V)))
    return float(t), float(slope * est.std_err)
