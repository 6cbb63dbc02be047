"""JSON run configuration.

A config file has these top-level sections (``comb``, ``phases``, ``grid``,
``spectrometer``, ``montecarlo`` and ``output`` are optional)::

    {
      "cavity": {"gamma_over_fsr": 0.01, "fsr_times_tau": 0.1,
                 "omega_s": 1000.0, "omega_p": 2200.0},
      "comb": {"envelope_cut": 0.5},
      "sample": {"kind": "flat", "t0": 0.5},
      "phases": {"phi": 0.0, "varphi": 0.0},
      "grid": {"m_window": [-2, 2], "points_per_fsr": 2000},
      "spectrometer": {"resolution_sigma": 0.0, "bins_per_fsr": 20},
      "montecarlo": {"n_photons_per_phase": 100000, "seed": 1, "n_phases": 20},
      "output": {"dir": "out"}
    }

``cavity`` takes one of three forms: absolute ``gamma``/``delta_omega``/``tau``;
the dimensionless pair ``gamma_over_fsr``/``fsr_times_tau`` (then
``delta_omega`` is 1 and all frequencies are in units of it); or a
``geometry`` block plus ``gamma``. ``omega_s`` and ``omega_p`` are always
required. Complex numbers are written as ``[re, im]``.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError
from .samples import AbsorptionLine, BeamSplitterSample, FlatSample, LorentzianMixture
from .spectral import (
    CavityParams,
    CombIndexRange,
    FrequencyGrid,
    PhysicalGeometry,
    default_comb_range,
    derive_cavity_params,
)

ComplexLike = Union[float, Tuple[float, float]]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GeometrySpec(_Strict):
    crystal_length: float
    resonator_length: float
    v_gS: float
    v_gI: float
    c: float = 1.0


class CavitySpec(_Strict):
    omega_s: float
    omega_p: float
    gamma: Optional[float] = None
    delta_omega: Optional[float] = None
    tau: Optional[float] = None
    gamma_over_fsr: Optional[float] = None
    fsr_times_tau: Optional[float] = None
    geometry: Optional[GeometrySpec] = None

    @model_validator(mode="after")
    def _one_form(self):
        direct = self.delta_omega is not None or self.tau is not None
        scaled = self.gamma_over_fsr is not None or self.fsr_times_tau is not None
        geom = self.geometry is not None
        if direct + scaled + geom != 1:
            raise ValueError(
                "give exactly one of: gamma/delta_omega/tau, "
                "gamma_over_fsr/fsr_times_tau, or geometry + gamma"
            )
        if direct and None in (self.gamma, self.delta_omega, self.tau):
            raise ValueError("direct form needs gamma, delta_omega and tau")
        if scaled and (None in (self.gamma_over_fsr, self.fsr_times_tau) or self.gamma is not None):
            raise ValueError("dimensionless form needs gamma_over_fsr and fsr_times_tau only")
        if geom and self.gamma is None:
            raise ValueError("geometry form needs gamma")
        return self

    def to_params(self) -> CavityParams:
        if self.geometry is not None:
            g = self.geometry
            geom = PhysicalGeometry(g.crystal_length, g.resonator_length, g.v_gS, g.v_gI, g.c)
            return derive_cavity_params(geom, self.omega_s, self.omega_p, self.gamma)
        if self.gamma_over_fsr is not None:
            return CavityParams(self.gamma_over_fsr, 1.0, self.fsr_times_tau, self.omega_s, self.omega_p)
        return CavityParams(self.gamma, self.delta_omega, self.tau, self.omega_s, self.omega_p)


class CombSpec(_Strict):
    m_min: Optional[int] = None
    m_max: Optional[int] = None
    envelope_cut: Optional[float] = None

    @model_validator(mode="after")
    def _one_form(self):
        explicit = self.m_min is not None or self.m_max is not None
        if explicit == (self.envelope_cut is not None):
            raise ValueError("give either m_min/m_max or envelope_cut")
        if explicit and None in (self.m_min, self.m_max):
            raise ValueError("explicit comb range needs both m_min and m_max")
        return self

    def to_range(self, params: CavityParams) -> CombIndexRange:
        if self.envelope_cut is not None:
            return default_comb_range(params, self.envelope_cut)
        return CombIndexRange(self.m_min, self.m_max)


def _complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        return complex(value[0], value[1])
    return complex(value)


class LineSpec(_Strict):
    center: float
    width: float = Field(gt=0)
    depth: float = Field(ge=0)


class FlatSampleSpec(_Strict):
    kind: Literal["flat", "beam_splitter"]
    t0: ComplexLike = 1.0

    @field_validator("t0")
    @classmethod
    def _bounded(cls, v):
        if abs(_complex(v)) > 1 + 1e-12:
            raise ValueError("|t0| must be <= 1")
        return v

    def to_model(self):
        cls = FlatSample if self.kind == "flat" else BeamSplitterSample
        return cls(_complex(self.t0))


class MixtureSampleSpec(_Strict):
    kind: Literal["lorentzian_mixture"]
    lines: List[LineSpec] = []

    def to_model(self):
        return LorentzianMixture(tuple(AbsorptionLine(l.center, l.width, l.depth) for l in self.lines))


SampleSpec = Union[FlatSampleSpec, MixtureSampleSpec]


class PhaseSpec(_Strict):
    phi: float = 0.0
    varphi: float = 0.0


class GridSpec(_Strict):
    start: Optional[float] = None
    stop: Optional[float] = None
    n_points: Optional[int] = None
    m_window: Optional[Tuple[int, int]] = None
    points_per_fsr: Optional[int] = None

    @model_validator(mode="after")
    def _one_form(self):
        absolute = None not in (self.start, self.stop, self.n_points)
        window = self.m_window is not None
        if absolute == window:
            raise ValueError("give either start/stop/n_points or m_window (+ points_per_fsr)")
        return self

    def to_grid(self, params: CavityParams) -> FrequencyGrid:
        if self.m_window is not None:
            lo, hi = self.m_window
            ppf = self.points_per_fsr or int(math.ceil(20 / params.gamma_over_fsr))
            return FrequencyGrid.comb_window(params, lo, hi, ppf)
        return FrequencyGrid(self.start, self.stop, self.n_points)


class SpectrometerSpec(_Strict):
    resolution_sigma: float = Field(default=0.0, ge=0)
    bins_per_fsr: Optional[int] = Field(default=None, gt=0)
    bin_edges: Optional[List[float]] = None


class MonteCarloSpec(_Strict):
    n_photons_per_phase: int = Field(ge=0)
    seed: int = 0
    phases: Optional[List[float]] = None
    n_phases: Optional[int] = Field(default=None, gt=0)
    modes: Optional[List[int]] = None

    @model_validator(mode="after")
    def _one_form(self):
        if (self.phases is None) == (self.n_phases is None):
            raise ValueError("give either phases or n_phases")
        return self

    def phase_list(self) -> List[float]:
        if self.phases is not None:
            return list(self.phases)
        return [2 * math.pi * k / self.n_phases for k in range(self.n_phases)]


class OutputSpec(_Strict):
    dir: str = "out"


class SimConfig(_Strict):
    cavity: CavitySpec
    comb: CombSpec = CombSpec(envelope_cut=0.5)
    sample: SampleSpec = Field(discriminator="kind")
    phases: PhaseSpec = PhaseSpec()
    grid: GridSpec = GridSpec(m_window=(-2, 2))
    spectrometer: SpectrometerSpec = SpectrometerSpec()
    montecarlo: Optional[MonteCarloSpec] = None
    output: OutputSpec = OutputSpec()

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"  {loc}: {e['msg']}")
    return "invalid config:\n" + "\n".join(lines)


def parse_config(data) -> SimConfig:
    try:
        return SimConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_format_errors(err)) from None


def load_config(path) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}:{err.lineno}:{err.colno}: malformed JSON: {err.msg}") from None
    return parse_config(data)
