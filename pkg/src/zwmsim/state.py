"""One-pair biphoton amplitudes for a single cavity source and the nested pair.

The state is a complex amplitude over the labels (branch, comb mode m,
offset Omega). Signal frequency is ``omega_s + m dw + Omega`` and the idler
partner sits at ``omega_i - m dw - Omega``. Three branches exist:

    S1_I1  signal from crystal 1, idler in the idler-1 mode
    S2_I1  signal from crystal 2, idler-1 mode (via the sample's transmission)
    S2_I0  signal from crystal 2, idler in the sample's vacuum port

A signal-1 photon paired with the vacuum-port idler cannot occur, so there is
no slot for it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GridTooCoarseError
from .samples import SampleModel, rear_reflectivity
from .spectral import (
    CavityParams,
    CombIndexRange,
    FrequencyGrid,
    cavity_lineshape,
    lorentzian,
    phase_mismatch_factor,
)
from .spectrum import Fidelity, Spectrum

S1_I1, S2_I1, S2_I0 = 0, 1, 2
N_BRANCHES = 3

MIN_HALF_SPAN_GAMMAS = 25.0


@dataclass(frozen=True)
class BiphotonState:
    params: CavityParams
    comb_range: CombIndexRange
    offsets: FrequencyGrid
    amplitudes: np.ndarray  # (branch, m, Omega)
    norm_constant: float
    model: Optional[SampleModel] = None
    varphi: float = 0.0

    @property
    def is_zwm(self) -> bool:
        return self.model is not None

    @property
    def modes(self) -> np.ndarray:
        return self.comb_range.modes

    def idler_frequencies(self) -> np.ndarray:
        """(m, Omega) array of partner idler frequencies."""
        return _idler_frequency(self.params, self.modes[:, None], self.offsets.values[None, :])

    def signal_frequencies(self) -> np.ndarray:
        p = self.params
        return p.omega_s + self.modes[:, None] * p.delta_omega + self.offsets.values[None, :]

    def branch_norms(self) -> np.ndarray:
        """Quadrature-weighted squared norm of each branch."""
        w = trapezoid_weights(self.offsets)
        return (np.abs(self.amplitudes) ** 2 * w).sum(axis=(1, 2))

    def norm_squared(self) -> float:
        return float(self.branch_norms().sum())

    def amplitude_at(self, Omega) -> np.ndarray:
        """Branch amplitudes for every retained mode at arbitrary offsets.

        ``Omega`` has shape (m, k) or broadcasts to it; the result has shape
        (3, m, k). The sampled ``amplitudes`` array is this function on the
        ``offsets`` grid.
        """
        Omega = np.broadcast_to(np.asarray(Omega, dtype=float), (self.modes.size,) + np.shape(Omega)[1:])
        return self.norm_constant * _unnormalized_amplitudes(
            self.params, self.modes, Omega, self.model, self.varphi
        )


@dataclass(frozen=True)
class MarginalSpectrum:
    grid: FrequencyGrid
    values: np.ndarray
    which: str

    def integral(self) -> float:
        return float(np.sum(self.values * trapezoid_weights(self.grid)))

    def normalized(self) -> "MarginalSpectrum":
        return MarginalSpectrum(self.grid, self.values / self.integral(), self.which)


def trapezoid_weights(grid: FrequencyGrid) -> np.ndarray:
    w = np.full(grid.n_points, grid.spacing)
    w[0] = w[-1] = grid.spacing / 2.0
    return w


def _idler_frequency(params: CavityParams, m, Omega):
    return params.omega_i - m * params.delta_omega - Omega


def _unnormalized_amplitudes(params, modes, Omega, model, varphi):
    modes = np.asarray(modes)
    common = phase_mismatch_factor(modes, params)[:, None] * cavity_lineshape(Omega, params.gamma)
    out = np.zeros((N_BRANCHES,) + common.shape, dtype=complex)
    out[S1_I1] = common
    if model is not None:
        idler = _idler_frequency(params, modes[:, None], Omega)
        phase = np.exp(1j * varphi)
        out[S2_I1] = common * np.conj(model.transmissivity(idler)) * phase
        # R' is real and non-negative here, so its conjugate is itself
        out[S2_I0] = common * rear_reflectivity(model, idler) * phase
    return out


def default_offsets(gamma: float, half_span_gammas: float = MIN_HALF_SPAN_GAMMAS, points_per_gamma: int = 20):
    return FrequencyGrid.centered(0.0, half_span_gammas * gamma, gamma / points_per_gamma)


def _check_offsets(offsets: FrequencyGrid, gamma: float):
    if offsets.spacing > gamma / 5.0 * (1 + 1e-12):
        raise GridTooCoarseError(
            f"offset spacing {offsets.spacing:.4g} > gamma/5; the cavity line is not resolved"
        )
    if offsets.spacing > gamma / 10.0 * (1 + 1e-12):
        warnings.warn("offset spacing exceeds gamma/10", stacklevel=3)
    half_span = min(-offsets.start, offsets.stop)
    if half_span < MIN_HALF_SPAN_GAMMAS * gamma * (1 - 1e-9):
        warnings.warn(
            f"offset grid spans only +/-{half_span / gamma:.3g} gamma "
            f"(< {MIN_HALF_SPAN_GAMMAS:g} gamma); norm truncation error grows",
            stacklevel=3,
        )


def _normalized(params, comb_range, offsets, model, varphi) -> BiphotonState:
    raw = _unnormalized_amplitudes(
        params, comb_range.modes, offsets.values[None, :], model, varphi
    )
    w = trapezoid_weights(offsets)
    norm_sq = float((np.abs(raw) ** 2 * w).sum())
    N = 1.0 / math.sqrt(norm_sq)
    return BiphotonState(
        params=params,
        comb_range=comb_range,
        offsets=offsets,
        amplitudes=N * raw,
        norm_constant=N,
        model=model,
        varphi=varphi,
    )


def build_single_cavity_state(
    params: CavityParams, comb_range: CombIndexRange, offsets: Optional[FrequencyGrid] = None
) -> BiphotonState:
    """Pair state of one cavity-enhanced source, normalized on the sampled grid."""
    if offsets is None:
        offsets = default_offsets(params.gamma)
    _check_offsets(offsets, params.gamma)
    return _normalized(params, comb_range, offsets, None, 0.0)


def apply_sample_and_second_crystal(
    state: BiphotonState, model: SampleModel, varphi: float
) -> BiphotonState:
    """Nested-source state: idler-1 passes the sample and seeds the second crystal."""
    if state.is_zwm:
        raise ValueError("state already includes the second crystal")
    return _normalized(state.params, state.comb_range, state.offsets, model, varphi)


def marginal_spectrum(state: BiphotonState, which: str, grid: FrequencyGrid) -> MarginalSpectrum:
    """Signal or idler single-photon spectrum, with the (m, Omega) labels orthogonal.

    Each comb mode contributes its own Lorentzian; branch weights are summed.
    """
    p = state.params
    modes = state.modes
    w = grid.values
    if which == "signal":
        Omega = w[None, :] - p.omega_s - modes[:, None] * p.delta_omega
    elif which == "idler":
        Omega = p.omega_i - modes[:, None] * p.delta_omega - w[None, :]
    else:
        raise ValueError("which must be 'signal' or 'idler'")
    if state.is_zwm:
        amps = state.amplitude_at(Omega)
        values = (np.abs(amps) ** 2).sum(axis=(0, 1))
    else:
        weight = np.abs(phase_mismatch_factor(modes, p)) ** 2
        values = state.norm_constant**2 * (weight[:, None] * lorentzian(Omega, p.gamma)).sum(axis=0)
    return MarginalSpectrum(grid, values, which)


def correlation_spectrum_oracle(
    state: BiphotonState,
    phi: float,
    grid: FrequencyGrid,
    include_vacuum_port: bool = False,
) -> Spectrum:
    """Brute-force signal spectrum straight from the pair amplitudes.

    At each detected signal frequency the partner idler frequency is fixed,
    so amplitudes from every comb mode add coherently. The two signal paths
    are combined as ``a1 + exp(i phi) a2`` for the shared idler-1 mode and
    squared. The vacuum-port branch leaves a distinguishable idler behind;
    its incoherent contribution is left out unless ``include_vacuum_port``.

    Values are divided by the squared normalization constant, which puts
    them on the same unit scale as the closed-form spectra.
    """
    p = state.params
    modes = state.modes
    w = grid.values
    Omega = w[None, :] - p.omega_s - modes[:, None] * p.delta_omega
    amps = state.amplitude_at(Omega).sum(axis=1)  # (branch, omega)
    field = amps[S1_I1] + np.exp(1j * phi) * amps[S2_I1]
    values = np.abs(field) ** 2
    if include_vacuum_port:
        values = values + np.abs(amps[S2_I0]) ** 2
    values = values / state.norm_constant**2
    return Spectrum(grid, values, Fidelity.ORACLE, phi, state.varphi)
