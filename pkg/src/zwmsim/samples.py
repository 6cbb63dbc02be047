"""Frequency-dependent transmissivity models for the sample in the idler-1 arm.

The sample is a lossless four-port: whatever is not transmitted leaves
through the port that carries vacuum into the second crystal, so the rear
reflectivity is always the Pythagorean complement of ``|T|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np


def _check_t0(t0: complex):
    if abs(t0) > 1 + 1e-12:
        raise ValueError(f"|t0| must be <= 1, got {abs(t0)}")


@dataclass(frozen=True)
class FlatSample:
    t0: complex = 1.0

    kind = "flat"

    def __post_init__(self):
        _check_t0(self.t0)

    def transmissivity(self, omega):
        omega = np.asarray(omega, dtype=float)
        return np.full(omega.shape, complex(self.t0))


@dataclass(frozen=True)
class BeamSplitterSample(FlatSample):
    """A frequency-flat beam splitter; same response as :class:`FlatSample`."""

    kind = "beam_splitter"


@dataclass(frozen=True)
class AbsorptionLine:
    center: float
    width: float
    depth: float

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("line width must be > 0")
        if not self.depth >= 0:
            raise ValueError("line depth must be >= 0")


@dataclass(frozen=True)
class LorentzianMixture:
    """Independent thin absorbers in series.

    ``T(w) = exp(-sum_j d_j / (1 + 2i (w - w_j) / G_j))``. The real part of
    each exponent is a Lorentzian absorption profile, the imaginary part its
    dispersive companion.
    """

    lines: Tuple[AbsorptionLine, ...] = ()

    kind = "lorentzian_mixture"

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(self.lines))

    def optical_depth(self, omega):
        omega = np.asarray(omega, dtype=float)
        out = np.zeros(omega.shape, dtype=complex)
        for line in self.lines:
            out += line.depth / (1.0 + 2j * (omega - line.center) / line.width)
        return out

    def transmissivity(self, omega):
        return np.exp(-self.optical_depth(omega))


SampleModel = Union[FlatSample, BeamSplitterSample, LorentzianMixture]


def transmissivity(model: SampleModel, omega):
    """Complex amplitude transmissivity at idler frequency ``omega``."""
    return model.transmissivity(omega)


def rear_reflectivity(model: SampleModel, omega):
    """Rear-surface amplitude reflectivity, ``sqrt(1 - |T|^2)``."""
    t2 = np.abs(model.transmissivity(omega)) ** 2
    return np.sqrt(np.clip(1.0 - t2, 0.0, None))
