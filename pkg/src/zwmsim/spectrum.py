"""Interfering signal spectrum at three fidelity levels, and comb-mode visibility.

The overall scale is fixed so that a single-mode spectrum with an opaque
sample peaks at ``4 / gamma``.

The cross term between the two signal paths is ``2 Re(T* exp(i theta))`` with
``theta = phi + varphi``, i.e. ``2|T| cos(theta - arg T)``. For real,
non-negative ``T`` this is exactly ``2|T| cos(theta)``; ``paper_exact=True``
drops ``arg T`` for every sample.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

from .errors import EmptyCombRangeError, EstimationError, VisibilityDomainError
from .samples import SampleModel
from .spectral import (
    CavityParams,
    CombIndexRange,
    FrequencyGrid,
    check_grid_resolution,
    lorentzian,
    sinc,
)

GOOD_CAVITY_LIMIT = 0.1

_INVERT_SERIES_LIMIT = 1e-6
# complex entries per chunk of the (points, m', m) double-sum tensor
_FULL_CHUNK_ELEMENTS = 2_000_000


class Fidelity(str, enum.Enum):
    FULL = "full"
    GOOD_CAVITY = "good_cavity"
    COMB_RESOLVED = "comb_resolved"
    ORACLE = "oracle"


@dataclass(frozen=True)
class Spectrum:
    grid: FrequencyGrid
    values: np.ndarray
    fidelity: Fidelity
    phi: float
    varphi: float
    residual_imag: float = 0.0

    @property
    def omega(self) -> np.ndarray:
        return self.grid.values

    @property
    def peak(self) -> float:
        return float(np.max(self.values))


@dataclass(frozen=True)
class VisibilityTable:
    m: np.ndarray
    omega_signal: np.ndarray
    omega_idler: np.ndarray
    visibility: np.ndarray
    t_hat: np.ndarray

    def rows(self):
        return zip(
            self.m.tolist(),
            self.omega_signal.tolist(),
            self.omega_idler.tolist(),
            self.visibility.tolist(),
            self.t_hat.tolist(),
        )


def interference_bracket(t, theta: float, paper_exact: bool = False):
    """``1 + |T|^2 + 2|T| cos(theta - arg T)``, or ``cos(theta)`` when paper-exact."""
    t = np.asarray(t, dtype=complex)
    mag = np.abs(t)
    if paper_exact:
        cross = np.cos(theta)
    else:
        cross = np.cos(theta - np.angle(t))
    return 1.0 + mag**2 + 2.0 * mag * cross


def _prepare(params: CavityParams, comb_range: CombIndexRange, grid: FrequencyGrid):
    if comb_range is None or len(comb_range) < 1:
        raise EmptyCombRangeError("comb range is empty")
    check_grid_resolution(grid, params.gamma)
    return comb_range.modes


def _warn_if_bad_cavity(params: CavityParams):
    if params.gamma_over_fsr > GOOD_CAVITY_LIMIT:
        warnings.warn(
            f"gamma/delta_omega = {params.gamma_over_fsr:.3g} > {GOOD_CAVITY_LIMIT}: "
            "good-cavity approximation is not justified",
            stacklevel=3,
        )


def full_values(params: CavityParams, model: SampleModel, modes, omega, theta, paper_exact=False):
    """Double comb sum at arbitrary ``omega``; returns (real values, max |imag|)."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    modes = np.asarray(modes)
    g, dw = params.gamma, params.delta_omega
    x = modes * dw * params.tau / 2.0
    s = sinc(x)
    # e^{i(m'-m)x}: row index m', column index m
    envelope = (s[:, None] * s[None, :]) * np.exp(1j * (x[:, None] - x[None, :]))

    out = np.empty(omega.size)
    resid = np.empty(omega.size)
    chunk = max(1, _FULL_CHUNK_ELEMENTS // (modes.size**2))
    for lo in range(0, omega.size, chunk):
        w = omega[lo : lo + chunk]
        detuning = w[:, None] - params.omega_s - modes[None, :] * dw
        d_plus = g / 2.0 + 1j * detuning
        d_minus = g / 2.0 - 1j * detuning
        terms = envelope[None, :, :] * g / (d_plus[:, :, None] * d_minus[:, None, :])
        total = terms.sum(axis=(1, 2))
        out[lo : lo + chunk] = total.real
        resid[lo : lo + chunk] = total.imag

    t = model.transmissivity(params.omega_p - omega)
    bracket = interference_bracket(t, theta, paper_exact)
    return out * bracket, resid * bracket


def _incoherent_comb(params, modes, omega, bracket):
    # same operation order for both brackets, so a flat sample gives identical bits
    weight = sinc(modes * params.delta_omega * params.tau / 2.0) ** 2
    detuning = omega[:, None] - params.omega_s - modes[None, :] * params.delta_omega
    return (weight[None, :] * bracket * lorentzian(detuning, params.gamma)).sum(axis=1)


def good_cavity_values(params, model, modes, omega, theta, paper_exact=False):
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    t = model.transmissivity(params.omega_p - omega)
    bracket = interference_bracket(t, theta, paper_exact)
    return _incoherent_comb(params, np.asarray(modes), omega, bracket[:, None])


def comb_resolved_values(params, model, modes, omega, theta, paper_exact=False):
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    modes = np.asarray(modes)
    t_comb = model.transmissivity(params.idler_comb_frequency(modes))
    bracket = interference_bracket(t_comb, theta, paper_exact)
    return _incoherent_comb(params, modes, omega, bracket[None, :])


def compute_spectrum_full(
    params: CavityParams,
    model: SampleModel,
    comb_range: CombIndexRange,
    phi: float,
    varphi: float,
    grid: FrequencyGrid,
    paper_exact: bool = False,
) -> Spectrum:
    """Spectrum from the full double sum over mode pairs (m', m).

    Cross-mode terms come in conjugate pairs, so the sum is real up to
    rounding; the largest imaginary remainder is kept as ``residual_imag``.
    """
    modes = _prepare(params, comb_range, grid)
    values, resid = full_values(params, model, modes, grid.values, phi + varphi, paper_exact)
    return Spectrum(
        grid=grid,
        values=np.clip(values, 0.0, None),
        fidelity=Fidelity.FULL,
        phi=phi,
        varphi=varphi,
        residual_imag=float(np.max(np.abs(resid))),
    )


def compute_spectrum_good_cavity(
    params, model, comb_range, phi, varphi, grid, paper_exact=False
) -> Spectrum:
    """Incoherent sum of comb Lorentzians, valid for well-separated teeth."""
    modes = _prepare(params, comb_range, grid)
    _warn_if_bad_cavity(params)
    values = good_cavity_values(params, model, modes, grid.values, phi + varphi, paper_exact)
    return Spectrum(grid, values, Fidelity.GOOD_CAVITY, phi, varphi)


def compute_spectrum_comb_resolved(
    params, model, comb_range, phi, varphi, grid, paper_exact=False
) -> Spectrum:
    """Like the good-cavity form, with T frozen at each tooth's idler frequency."""
    modes = _prepare(params, comb_range, grid)
    _warn_if_bad_cavity(params)
    values = comb_resolved_values(params, model, modes, grid.values, phi + varphi, paper_exact)
    return Spectrum(grid, values, Fidelity.COMB_RESOLVED, phi, varphi)


def comb_peak_deviation(
    params, model, comb_range, phi, varphi, peak_modes: Iterable[int], paper_exact=False
) -> float:
    """Largest relative gap between full and good-cavity values at the given teeth."""
    modes = comb_range.modes
    peaks = params.signal_comb_frequency(np.asarray(list(peak_modes)))
    theta = phi + varphi
    full, _ = full_values(params, model, modes, peaks, theta, paper_exact)
    good = good_cavity_values(params, model, modes, peaks, theta, paper_exact)
    mask = good > 0
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(full[mask] - good[mask]) / good[mask]))


def visibility_from_transmissivity(t_abs):
    t_abs = np.asarray(t_abs, dtype=float)
    return 2.0 * t_abs / (1.0 + t_abs**2)


def invert_visibility(V):
    """|T| <= 1 root of ``V t^2 - 2 t + V = 0``."""
    V = np.asarray(V, dtype=float)
    if np.any(~np.isfinite(V)) or np.any((V < 0) | (V > 1)):
        raise VisibilityDomainError("visibility must lie in [0, 1]")
    # (1 - sqrt(1 - V^2)) / V rewritten without the cancellation
    root = np.sqrt((1.0 - V) * (1.0 + V))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = V / (1.0 + root)
    small = V < _INVERT_SERIES_LIMIT
    t = np.where(small, V / 2.0 + V**3 / 8.0, t)
    return t if t.ndim else float(t)


def visibility(params: CavityParams, model: SampleModel, comb_range: CombIndexRange) -> VisibilityTable:
    m = comb_range.modes
    omega_idler = params.idler_comb_frequency(m)
    t_abs = np.clip(np.abs(model.transmissivity(omega_idler)), 0.0, 1.0)
    V = visibility_from_transmissivity(t_abs)
    return VisibilityTable(
        m=m,
        omega_signal=params.signal_comb_frequency(m),
        omega_idler=omega_idler,
        visibility=V,
        t_hat=invert_visibility(V),
    )


def _distinct_phases(phases, tol=1e-9) -> int:
    wrapped = np.sort(np.mod(phases, 2 * math.pi))
    gaps = np.diff(np.append(wrapped, wrapped[0] + 2 * math.pi))
    return max(1, int(np.sum(gaps > tol)))


def fit_cosine(phases, values, weights=None):
    """Linear least squares for ``a + b cos(phi) + d sin(phi)``.

    Returns ``(coef, cov)`` where ``cov = (X^T W X)^-1``.
    """
    phases = np.asarray(phases, dtype=float)
    values = np.asarray(values, dtype=float)
    if _distinct_phases(phases) < 3:
        raise EstimationError("need at least 3 distinct phases (mod 2 pi) for a cosine fit")
    X = np.column_stack([np.ones_like(phases), np.cos(phases), np.sin(phases)])
    w = np.ones_like(values) if weights is None else np.asarray(weights, dtype=float)
    XtW = X.T * w
    normal = XtW @ X
    cov = np.linalg.inv(normal)
    coef = cov @ (XtW @ values)
    return coef, cov


def fringe_visibility_from_phase_sweep(peak_values: Sequence[Tuple[float, float]]) -> float:
    """Fringe contrast ``b / a`` from a fit of ``a + b cos(phi + c)``."""
    if len(peak_values) < 3:
        raise EstimationError("need at least 3 phases")
    phases, values = zip(*peak_values)
    (a, b, d), _ = fit_cosine(phases, values)
    if not a > 0:
        raise EstimationError(f"fitted mean level a = {a} is not positive")
    amp = math.hypot(b, d)
    # rounding residue on unmodulated data
    if amp <= 1e-13 * a:
        return 0.0
    return amp / a
