"""Simulator for cavity-enhanced induced-coherence (ZWM) interferometry."""

from .samples import (
    AbsorptionLine,
    BeamSplitterSample,
    FlatSample,
    LorentzianMixture,
    rear_reflectivity,
    transmissivity,
)
from .spectral import (
    CavityParams,
    CombIndexRange,
    FrequencyGrid,
    PhysicalGeometry,
    cavity_lineshape,
    default_comb_range,
    derive_cavity_params,
    phase_mismatch_factor,
)
from .spectrum import (
    Fidelity,
    Spectrum,
    VisibilityTable,
    compute_spectrum_comb_resolved,
    compute_spectrum_full,
    compute_spectrum_good_cavity,
    fringe_visibility_from_phase_sweep,
    invert_visibility,
    visibility,
)
from .state import (
    BiphotonState,
    apply_sample_and_second_crystal,
    build_single_cavity_state,
    correlation_spectrum_oracle,
    marginal_spectrum,
)
from .detection import (
    MeasurementRun,
    SpectrometerModel,
    estimate_visibility,
    run_phase_sweep,
    sample_photons,
)

__version__ = "0.1.0"
