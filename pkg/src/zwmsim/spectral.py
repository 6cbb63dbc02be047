"""Cavity parameters, comb geometry, phase-mismatch envelope and lineshape.

All frequencies are angular frequencies. The simulator accepts absolute
values, but the physics depends only on the ratios ``gamma / delta_omega``
and ``delta_omega * tau``; every regime check below is phrased in those
ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GridTooCoarseError, InvalidGeometryError

#: Modes kept per side when ``tau == 0`` and the sinc envelope is flat.
TAU_ZERO_MODE_CAP = 64

_SINC_SERIES_LIMIT = 1e-4


@dataclass(frozen=True)
class CavityParams:
    gamma: float
    delta_omega: float
    tau: float
    omega_s: float
    omega_p: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not self.delta_omega > 0:
            raise ValueError(f"delta_omega must be > 0, got {self.delta_omega}")
        for name in ("tau", "omega_s", "omega_p"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def omega_i(self) -> float:
        """Idler center frequency, fixed by energy conservation."""
        return self.omega_p - self.omega_s

    @property
    def finesse(self) -> float:
        return math.pi / self.gamma

    @property
    def gamma_over_fsr(self) -> float:
        return self.gamma / self.delta_omega

    @property
    def fsr_times_tau(self) -> float:
        return self.delta_omega * self.tau

    def signal_comb_frequency(self, m):
        return self.omega_s + np.asarray(m) * self.delta_omega

    def idler_comb_frequency(self, m):
        return self.omega_i - np.asarray(m) * self.delta_omega


@dataclass(frozen=True)
class PhysicalGeometry:
    """Crystal-in-resonator geometry used to derive the comb spacing and ``tau``."""

    crystal_length: float
    resonator_length: float
    v_gS: float
    v_gI: float
    c: float = 1.0

    def __post_init__(self):
        if not 0 < self.crystal_length <= self.resonator_length:
            raise InvalidGeometryError(
                "need 0 < crystal_length <= resonator_length, got "
                f"l={self.crystal_length}, L={self.resonator_length}"
            )
        if not self.c > 0:
            raise InvalidGeometryError("c must be > 0")
        for name in ("v_gS", "v_gI"):
            v = getattr(self, name)
            if not 0 < v <= self.c:
                raise InvalidGeometryError(f"{name} must lie in (0, c], got {v}")

    @property
    def round_trip_time(self) -> float:
        l, L = self.crystal_length, self.resonator_length
        return 2 * l / self.v_gS + 2 * (L - l) / self.c


@dataclass(frozen=True)
class CombIndexRange:
    m_min: int
    m_max: int
    warning: Optional[str] = None

    def __post_init__(self):
        if not self.m_min <= 0 <= self.m_max:
            raise ValueError(
                f"comb range must contain m=0, got [{self.m_min}, {self.m_max}]"
            )

    @property
    def modes(self) -> np.ndarray:
        return np.arange(self.m_min, self.m_max + 1)

    def __len__(self):
        return self.m_max - self.m_min + 1

    @classmethod
    def symmetric(cls, m: int, warning: Optional[str] = None) -> "CombIndexRange":
        return cls(-m, m, warning)


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform grid including both end points."""

    start: float
    stop: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 2:
            raise ValueError("a frequency grid needs at least 2 points")
        if not self.stop > self.start:
            raise ValueError("grid must be strictly increasing (stop > start)")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.n_points)

    @property
    def spacing(self) -> float:
        return (self.stop - self.start) / (self.n_points - 1)

    @classmethod
    def centered(cls, center: float, half_width: float, spacing: float) -> "FrequencyGrid":
        """Grid symmetric about ``center`` with at most ``spacing`` between samples."""
        n_half = int(math.ceil(half_width / spacing - 1e-9))
        return cls(center - n_half * spacing, center + n_half * spacing, 2 * n_half + 1)

    @classmethod
    def comb_window(
        cls, params: CavityParams, m_lo: int, m_hi: int, points_per_fsr: int
    ) -> "FrequencyGrid":
        """Grid over teeth ``m_lo..m_hi`` extending half a spacing beyond each edge."""
        start = params.omega_s + (m_lo - 0.5) * params.delta_omega
        stop = params.omega_s + (m_hi + 0.5) * params.delta_omega
        return cls(start, stop, points_per_fsr * (m_hi - m_lo + 1) + 1)


def check_grid_resolution(grid: FrequencyGrid, gamma: float, max_fraction: float = 0.1):
    """Raise if the grid spacing exceeds ``max_fraction * gamma``."""
    if grid.spacing > max_fraction * gamma * (1 + 1e-12):
        raise GridTooCoarseError(
            f"grid spacing {grid.spacing:.4g} exceeds {max_fraction:g} * gamma "
            f"= {max_fraction * gamma:.4g}; comb teeth are not resolved"
        )


def sinc(x):
    """sin(x)/x with sinc(0) = 1, accurate near zero."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < _SINC_SERIES_LIMIT
    xs = x[small]
    x2 = xs * xs
    out[small] = 1.0 - x2 / 6.0 + x2 * x2 / 120.0
    xl = x[~small]
    out[~small] = np.sin(xl) / xl
    return out if out.ndim else out[()]


def derive_cavity_params(
    geom: PhysicalGeometry, omega_s: float, omega_p: float, gamma: float
) -> CavityParams:
    """Comb spacing and transit-time difference from the physical layout."""
    t_rt = geom.round_trip_time
    if not t_rt > 0 or not math.isfinite(t_rt):
        raise InvalidGeometryError(f"non-positive round-trip time {t_rt}")
    tau = geom.crystal_length * (1.0 / geom.v_gI - 1.0 / geom.v_gS)
    return CavityParams(
        gamma=gamma,
        delta_omega=2 * math.pi / t_rt,
        tau=tau,
        omega_s=omega_s,
        omega_p=omega_p,
    )


def phase_mismatch_factor(m, params: CavityParams):
    """Complex envelope weight of comb mode ``m``: sinc(x) exp(-i x), x = m dw tau / 2."""
    x = np.asarray(m, dtype=float) * params.delta_omega * params.tau / 2.0
    return sinc(x) * np.exp(-1j * x)


def cavity_lineshape(Omega, gamma: float):
    """Complex cavity response sqrt(gamma) / (gamma/2 - i Omega)."""
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    Omega = np.asarray(Omega, dtype=float)
    return math.sqrt(gamma) / (gamma / 2.0 - 1j * Omega)


def lorentzian(Omega, gamma: float):
    """Squared magnitude of :func:`cavity_lineshape`, gamma / ((gamma/2)^2 + Omega^2)."""
    Omega = np.asarray(Omega, dtype=float)
    return gamma / ((gamma / 2.0) ** 2 + Omega**2)


def default_comb_range(
    params: CavityParams, envelope_cut: float = 0.5, cap: int = TAU_ZERO_MODE_CAP
) -> CombIndexRange:
    """Symmetric truncation of the comb sum.

    The whole main lobe of the sinc envelope (every mode before the first
    zero) is always kept. Beyond it, modes are kept out to the last one whose
    weight ``|Phi_m|^2`` still reaches ``envelope_cut``. With ``tau == 0`` the
    envelope is flat, so the range is clamped to ``cap`` and flagged.
    """
    if not 0 < envelope_cut < 1:
        raise ValueError("envelope_cut must lie in (0, 1)")
    x = abs(params.delta_omega * params.tau)
    if x == 0:
        return CombIndexRange.symmetric(
            cap, warning=f"tau = 0: flat phase-mismatch envelope, comb clamped to +/-{cap}"
        )
    first_zero = 2 * math.pi / x
    m_keep = max(int(math.ceil(first_zero - 1e-9)) - 1, 0)
    # sinc^2(y) <= 1/y^2 bounds where a sidelobe can still reach the cut
    m_scan = int(math.ceil(2.0 / (x * math.sqrt(envelope_cut)))) + 1
    if m_scan > m_keep:
        m = np.arange(m_keep + 1, m_scan + 1)
        weight = np.abs(phase_mismatch_factor(m, params)) ** 2
        above = m[weight >= envelope_cut]
        if above.size:
            m_keep = int(above.max())
    return CombIndexRange.symmetric(m_keep)
