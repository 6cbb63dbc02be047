import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st
from scipy.optimize import curve_fit

from conftest import window
from zwmsim.errors import GridTooCoarseError
from zwmsim.samples import AbsorptionLine, FlatSample, LorentzianMixture
from zwmsim.spectral import CavityParams, CombIndexRange, FrequencyGrid
from zwmsim.spectrum import compute_spectrum_full
from zwmsim.state import (
    S1_I1,
    S2_I0,
    S2_I1,
    apply_sample_and_second_crystal,
    build_single_cavity_state,
    correlation_spectrum_oracle,
    marginal_spectrum,
    trapezoid_weights,
)


def truncated_lorentz_norm(gamma, half_width):
    """Exact integral of gamma / ((gamma/2)^2 + W^2) over [-half_width, half_width]."""
    return 4.0 * math.atan(2.0 * half_width / gamma)


@pytest.fixture
def offsets(params):
    return FrequencyGrid.centered(0.0, 25 * params.gamma, params.gamma / 20)


class TestSingleCavityState:
    def test_single_mode_norm(self, params, offsets):
        s = build_single_cavity_state(params, CombIndexRange(0, 0), offsets)
        assert s.norm_squared() == pytest.approx(1.0, abs=1e-12)
        exact = 1 / math.sqrt(truncated_lorentz_norm(params.gamma, offsets.stop))
        assert s.norm_constant == pytest.approx(exact, rel=1e-4)
        # untruncated value 1/sqrt(2 pi), off by the +/-25 gamma tail only
        assert s.norm_constant == pytest.approx(1 / math.sqrt(2 * math.pi), rel=0.013)

    def test_wide_grid_approaches_untruncated_norm(self, params):
        wide = FrequencyGrid.centered(0.0, 4000 * params.gamma, params.gamma / 10)
        s = build_single_cavity_state(params, CombIndexRange(0, 0), wide)
        assert s.norm_constant == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-4)

    @pytest.mark.parametrize("M", [1, 3, 6])
    def test_flat_envelope_norm(self, offsets, M):
        p = CavityParams(0.01, 1.0, 0.0, 1000.0, 2200.0)
        s = build_single_cavity_state(p, CombIndexRange.symmetric(M), offsets)
        expected = 1 / math.sqrt((2 * M + 1) * truncated_lorentz_norm(p.gamma, offsets.stop))
        assert s.norm_constant == pytest.approx(expected, rel=1e-4)

    def test_half_width_amplitude_ratio(self, params, offsets):
        s = build_single_cavity_state(params, CombIndexRange(-2, 2), offsets)
        a = s.amplitude_at(np.array([[0.0, params.gamma / 2]]))[S1_I1]
        np.testing.assert_allclose(np.abs(a[:, 0]) / np.abs(a[:, 1]), math.sqrt(2), rtol=1e-14)
        # the half-width sample sits exactly on the grid
        k = np.argmin(np.abs(offsets.values - params.gamma / 2))
        k0 = np.argmin(np.abs(offsets.values))
        np.testing.assert_allclose(
            np.abs(s.amplitudes[S1_I1, :, k0]) / np.abs(s.amplitudes[S1_I1, :, k]), math.sqrt(2), rtol=1e-12
        )

    def test_energy_conservation_labels(self, params, offsets):
        s = build_single_cavity_state(params, CombIndexRange(-2, 2), offsets)
        np.testing.assert_allclose(s.signal_frequencies() + s.idler_frequencies(), params.omega_p, rtol=1e-15)

    def test_coarse_grid_rejected(self, params):
        coarse = FrequencyGrid.centered(0.0, 25 * params.gamma, params.gamma / 4)
        with pytest.raises(GridTooCoarseError):
            build_single_cavity_state(params, CombIndexRange(0, 0), coarse)

    def test_only_first_branch_populated(self, params, offsets):
        s = build_single_cavity_state(params, CombIndexRange(-1, 1), offsets)
        assert s.amplitudes.shape[0] == 3
        assert not np.any(s.amplitudes[S2_I1]) and not np.any(s.amplitudes[S2_I0])


class TestZwmState:
    @pytest.fixture
    def single(self, params, offsets):
        return build_single_cavity_state(params, CombIndexRange(-2, 2), offsets)

    def test_transparent_sample(self, single):
        s = apply_sample_and_second_crystal(single, FlatSample(1.0), 0.3)
        assert not np.any(s.amplitudes[S2_I0])
        np.testing.assert_allclose(np.abs(s.amplitudes[S1_I1]), np.abs(s.amplitudes[S2_I1]), rtol=1e-15)

    def test_opaque_sample(self, single):
        s = apply_sample_and_second_crystal(single, FlatSample(0.0), 0.3)
        assert not np.any(s.amplitudes[S2_I1])
        np.testing.assert_allclose(np.abs(s.amplitudes[S1_I1]), np.abs(s.amplitudes[S2_I0]), rtol=1e-15)

    def test_partial_transmission_ratios(self, single):
        s = apply_sample_and_second_crystal(single, FlatSample(0.6), 0.0)
        a = np.abs(s.amplitudes) ** 2
        np.testing.assert_allclose(a[S2_I1] / a[S1_I1], 0.36, rtol=1e-13)
        np.testing.assert_allclose(a[S2_I0] / a[S1_I1], 0.64, rtol=1e-13)

    def test_branch_coefficients(self, single, params):
        t0 = 0.3 + 0.4j
        varphi = 0.9
        s = apply_sample_and_second_crystal(single, FlatSample(t0), varphi)
        ratio = s.amplitudes[S2_I1] / s.amplitudes[S1_I1]
        np.testing.assert_allclose(ratio, np.conj(t0) * np.exp(1j * varphi), rtol=1e-13)

    def test_cannot_apply_twice(self, single):
        s = apply_sample_and_second_crystal(single, FlatSample(1.0), 0.0)
        with pytest.raises(ValueError):
            apply_sample_and_second_crystal(s, FlatSample(1.0), 0.0)

    @settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
    @given(
        st.lists(
            st.tuples(st.floats(-3, 3), st.floats(0.005, 2.0), st.floats(0, 5.0)), min_size=1, max_size=4
        ),
        st.floats(-math.pi, math.pi),
    )
    def test_isometry_and_sum_rule(self, single, specs, varphi):
        p = single.params
        model = LorentzianMixture([AbsorptionLine(p.omega_i + c, w, d) for c, w, d in specs])
        s = apply_sample_and_second_crystal(single, model, varphi)
        assert s.norm_squared() == pytest.approx(1.0, abs=1e-9)
        # signal-2 arm carries exactly the weight of signal-1 arm
        assert s.norm_constant / single.norm_constant == pytest.approx(1 / math.sqrt(2), rel=1e-9)
        a = np.abs(s.amplitudes) ** 2
        np.testing.assert_allclose(a[S2_I1] + a[S2_I0], a[S1_I1], rtol=0, atol=1e-12 * a.max())


class TestMarginals:
    def test_peaks_at_comb_teeth(self, params, offsets):
        s = build_single_cavity_state(params, CombIndexRange(-2, 2), offsets)
        grid = window(params, -2, 2, 2000)
        v = marginal_spectrum(s, "signal", grid).values
        w = grid.values
        for m in range(-2, 3):
            center = params.omega_s + m * params.delta_omega
            sel = np.abs(w - center) < 0.5 * params.delta_omega
            assert w[sel][np.argmax(v[sel])] == pytest.approx(center, abs=grid.spacing / 2)

    def test_idler_mirrors_signal(self, offsets):
        # O(10) carrier frequencies keep the mirrored grid exact to ~1e-15
        params = CavityParams(0.01, 1.0, 0.1, 10.0, 22.0)
        s = apply_sample_and_second_crystal(
            build_single_cavity_state(params, CombIndexRange(-3, 3), offsets),
            LorentzianMixture([AbsorptionLine(params.omega_i + 0.2, 0.5, 1.0)]),
            0.0,
        )
        grid = window(params, -3, 3, 400)
        sig = marginal_spectrum(s, "signal", grid).values
        mirror = FrequencyGrid(params.omega_p - grid.stop, params.omega_p - grid.start, grid.n_points)
        idl = marginal_spectrum(s, "idler", mirror).values[::-1]
        np.testing.assert_allclose(idl, sig, rtol=0, atol=1e-10)

    def test_fwhm_of_central_peak(self, params, offsets):
        s = build_single_cavity_state(params, CombIndexRange(-2, 2), offsets)
        g = params.gamma
        grid = FrequencyGrid.centered(params.omega_s, 10 * g, g / 100)
        v = marginal_spectrum(s, "signal", grid).values

        def lorentz(w, amp, center, fwhm, base):
            return amp * (fwhm / 2) ** 2 / ((w - center) ** 2 + (fwhm / 2) ** 2) + base

        popt, _ = curve_fit(lorentz, grid.values - params.omega_s, v, p0=[v.max(), 0.0, 2 * g, 0.0])
        assert abs(popt[2]) == pytest.approx(g, rel=0.01)

    def test_normalized_marginal_integrates_to_one(self, params, offsets):
        s = build_single_cavity_state(params, CombIndexRange(-1, 1), offsets)
        grid = window(params, -1, 1, 2000)
        assert marginal_spectrum(s, "signal", grid).normalized().integral() == pytest.approx(1.0, abs=1e-3)
        # unnormalized it exceeds the truncated-grid norm by the tail weight only
        assert marginal_spectrum(s, "signal", grid).integral() == pytest.approx(1.0, rel=0.015)


class TestOracle:
    @pytest.fixture
    def setup(self, coarse_params):
        p = coarse_params
        offsets = FrequencyGrid.centered(0.0, 25 * p.gamma, p.gamma / 20)
        single = build_single_cavity_state(p, CombIndexRange(-1, 1), offsets)
        return p, single, window(p, -1, 1, 512)

    def test_opaque_sample_has_no_interference(self, setup):
        p, single, grid = setup
        zwm = apply_sample_and_second_crystal(single, FlatSample(0.0), 0.0)
        ref = correlation_spectrum_oracle(single, 0.0, grid).values
        for phi in (0.0, 1.0, math.pi):
            np.testing.assert_allclose(correlation_spectrum_oracle(zwm, phi, grid).values, ref, rtol=1e-12)

    def test_opaque_single_mode_equals_marginal(self, coarse_params):
        p = coarse_params
        single = build_single_cavity_state(p, CombIndexRange(0, 0))
        zwm = apply_sample_and_second_crystal(single, FlatSample(0.0), 0.0)
        grid = window(p, 0, 0, 512)
        marg = marginal_spectrum(single, "signal", grid).values / single.norm_constant**2
        np.testing.assert_allclose(correlation_spectrum_oracle(zwm, 0.3, grid).values, marg, rtol=1e-12)

    def test_destructive_interference(self, setup):
        p, single, grid = setup
        ref_peak = correlation_spectrum_oracle(single, 0.0, grid).peak
        varphi = 0.4
        zwm = apply_sample_and_second_crystal(single, FlatSample(1.0), varphi)
        s = correlation_spectrum_oracle(zwm, math.pi - varphi, grid)
        assert s.values.max() <= 1e-12 * ref_peak

    def test_matches_closed_form_at_peaks(self, setup):
        p, single, grid = setup
        model = FlatSample(0.5)
        zwm = apply_sample_and_second_crystal(single, model, 0.0)
        oracle = correlation_spectrum_oracle(zwm, 0.0, grid).values
        full = compute_spectrum_full(p, model, single.comb_range, 0.0, 0.0, grid).values
        idx = [np.argmin(np.abs(grid.values - p.omega_s - m * p.delta_omega)) for m in (-1, 0, 1)]
        np.testing.assert_allclose(oracle[idx], full[idx], rtol=1e-6)

    def test_vacuum_port_term_gives_linear_visibility(self, setup):
        p, single, grid = setup
        zwm = apply_sample_and_second_crystal(single, FlatSample(0.5), 0.0)
        k = np.argmin(np.abs(grid.values - p.omega_s))
        hi = correlation_spectrum_oracle(zwm, 0.0, grid, include_vacuum_port=True).values[k]
        lo = correlation_spectrum_oracle(zwm, math.pi, grid, include_vacuum_port=True).values[k]
        assert (hi - lo) / (hi + lo) == pytest.approx(0.5, rel=1e-12)
