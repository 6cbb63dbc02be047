"""Command-line front end: ``zwmsim {spectrum,visibility,montecarlo,validate}``."""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path
from typing import Optional

import numpy as np

from .config import SimConfig, load_config
from .detection import (
    SpectrometerModel,
    estimate_visibility,
    run_phase_sweep,
    transmissivity_estimate,
)
from .errors import ConfigError, LowStatisticsError, ZwmError
from .samples import LorentzianMixture
from .spectral import check_grid_resolution
from .spectrum import (
    GOOD_CAVITY_LIMIT,
    comb_peak_deviation,
    compute_spectrum_comb_resolved,
    compute_spectrum_full,
    compute_spectrum_good_cavity,
    visibility,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_LOW_STATS = 0, 1, 2, 3

# |dw tau| at or below this counts as "dw << 2 pi / |tau|"
PHASE_MISMATCH_LIMIT = 2 * math.pi / 10


def fmt(x) -> str:
    return format(float(x), ".17g")


class Run:
    """Resolved config plus the overrides given on the command line."""

    def __init__(self, config: SimConfig, out: Optional[str], seed: Optional[int], paper_exact: bool):
        self.config = config
        self.out = Path(out if out is not None else config.output.dir)
        mc = config.montecarlo
        self.seed = seed if seed is not None else (mc.seed if mc is not None else None)
        self.paper_exact = paper_exact
        try:
            self.params = config.cavity.to_params()
            self.comb = config.comb.to_range(self.params)
            self.model = config.sample.to_model()
            self.grid = config.grid.to_grid(self.params)
        except ValueError as err:
            raise ConfigError(f"invalid config: {err}") from None

    @property
    def provenance(self) -> dict:
        return {"config_hash": self.config.config_hash(), "seed": self.seed}

    def comment(self, kind: str) -> str:
        return f"# zwmsim {kind} config_hash={self.config.config_hash()} seed={self.seed}\n"

    def params_dict(self) -> dict:
        p = self.params
        return {
            "gamma": p.gamma,
            "delta_omega": p.delta_omega,
            "tau": p.tau,
            "omega_s": p.omega_s,
            "omega_p": p.omega_p,
            "omega_i": p.omega_i,
            "gamma_over_fsr": p.gamma_over_fsr,
            "fsr_times_tau": p.fsr_times_tau,
            "comb_range": [self.comb.m_min, self.comb.m_max],
        }

    def spectrometer(self) -> SpectrometerModel:
        spec = self.config.spectrometer
        if spec.bin_edges is not None:
            return SpectrometerModel(spec.resolution_sigma, np.asarray(spec.bin_edges))
        lo, hi = self._window()
        return SpectrometerModel.for_comb(self.params, lo, hi, spec.bins_per_fsr or 20, spec.resolution_sigma)

    def _window(self):
        if self.config.grid.m_window is not None:
            return self.config.grid.m_window
        p = self.params
        lo = math.ceil((self.grid.start - p.omega_s) / p.delta_omega - 0.5)
        hi = math.floor((self.grid.stop - p.omega_s) / p.delta_omega + 0.5)
        return lo, hi

    def write_json(self, name: str, payload: dict):
        doc = dict(self.provenance)
        doc.update(payload)
        (self.out / name).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _teeth_in_window(run: Run):
    p, g = run.params, run.grid
    m = run.comb.modes
    f = p.signal_comb_frequency(m)
    return m[(f >= g.start) & (f <= g.stop)]


def cmd_spectrum(run: Run) -> int:
    p, phases = run.params, run.config.phases
    args = (p, run.model, run.comb, phases.phi, phases.varphi, run.grid)
    full = compute_spectrum_full(*args, paper_exact=run.paper_exact)
    good = compute_spectrum_good_cavity(*args, paper_exact=run.paper_exact)
    resolved = compute_spectrum_comb_resolved(*args, paper_exact=run.paper_exact)

    teeth = _teeth_in_window(run)
    dev = comb_peak_deviation(
        p, run.model, run.comb, phases.phi, phases.varphi, teeth, paper_exact=run.paper_exact
    ) if teeth.size else None
    lines = [run.comment("spectrum"), "omega,S_full,S_good_cavity,S_comb_resolved\n"]
    for row in zip(run.grid.values, full.values, good.values, resolved.values):
        lines.append(",".join(fmt(v) for v in row) + "\n")
    (run.out / "spectrum.csv").write_text("".join(lines))

    peak = full.peak
    run.write_json(
        "spectrum.json",
        {
            "params": run.params_dict(),
            "phases": {"phi": phases.phi, "varphi": phases.varphi},
            "grid": {"start": run.grid.start, "stop": run.grid.stop, "n_points": run.grid.n_points},
            "paper_exact_cross_term": run.paper_exact,
            "deviations": {
                "full_vs_good_cavity_peak": dev,
                "good_cavity_vs_comb_resolved_max_abs": float(np.max(np.abs(good.values - resolved.values))),
            },
            "residual_imag": full.residual_imag,
            "residual_imag_relative": full.residual_imag / peak if peak > 0 else 0.0,
        },
    )
    return EXIT_OK


def cmd_visibility(run: Run) -> int:
    table = visibility(run.params, run.model, run.comb)
    lines = [run.comment("visibility"), "m,omega_signal,omega_idler,V_m,T_hat\n"]
    for m, ws, wi, V, t in table.rows():
        lines.append(f"{m},{fmt(ws)},{fmt(wi)},{fmt(V)},{fmt(t)}\n")
    (run.out / "visibility.csv").write_text("".join(lines))

    if isinstance(run.model, LorentzianMixture):
        t_true = np.abs(run.model.transmissivity(table.omega_idler))
        err = np.abs(table.t_hat - t_true)
        run.write_json(
            "reconstruction.json",
            {
                "modes": [
                    {"m": int(m), "omega_idler": float(wi), "T_true": float(tt), "T_hat": float(th), "abs_error": float(e)}
                    for m, wi, tt, th, e in zip(table.m, table.omega_idler, t_true, table.t_hat, err)
                ],
                "max_abs_error": float(err.max()),
            },
        )
    return EXIT_OK


def cmd_montecarlo(run: Run) -> int:
    mc = run.config.montecarlo
    if mc is None:
        raise ConfigError("invalid config:\n  montecarlo: section is required for this command")
    spectrometer = run.spectrometer()
    phases = mc.phase_list()
    result = run_phase_sweep(
        run.params,
        run.model,
        run.comb,
        run.config.phases.varphi,
        phases,
        spectrometer,
        mc.n_photons_per_phase,
        run.seed,
        paper_exact=run.paper_exact,
    )
    lines = [run.comment("montecarlo"), "phase,bin_center,counts\n"]
    centers = spectrometer.bin_centers
    for k, phi in enumerate(result.phases):
        for c, n in zip(centers, result.counts[k]):
            lines.append(f"{fmt(phi)},{fmt(c)},{int(n)}\n")
    (run.out / "counts.csv").write_text("".join(lines))

    if mc.modes is not None:
        modes = list(mc.modes)
    else:
        modes = [int(m) for m in run.comb.modes if result.mode_bins(int(m)).any()]
    t_true = np.abs(run.model.transmissivity(run.params.idler_comb_frequency(np.asarray(modes))))
    rows, low = [], []
    for m, tt in zip(modes, t_true):
        row = {"m": m, "T_true": float(tt), "V_analytic": float(2 * tt / (1 + tt * tt))}
        try:
            est = estimate_visibility(result, m)
        except LowStatisticsError as err:
            low.append(str(err))
            row.update(V_est=None, std_err=None, T_hat=None, T_hat_err=None, error=str(err))
        else:
            t_hat, t_err = transmissivity_estimate(est)
            row.update(V_est=est.V_est, std_err=est.std_err, T_hat=t_hat, T_hat_err=t_err)
        rows.append(row)
    run.write_json(
        "estimate.json",
        {
            "n_photons_per_phase": mc.n_photons_per_phase,
            "phases": [float(x) for x in result.phases],
            "undetected": [int(x) for x in result.undetected],
            "modes": rows,
        },
    )
    if low:
        for msg in low:
            print(f"error: {msg}", file=sys.stderr)
        return EXIT_LOW_STATS
    return EXIT_OK


def validation_checks(run: Run):
    """``(name, passed, detail)`` for each regime assumption."""
    p = run.params
    checks = []
    r = p.gamma_over_fsr
    checks.append(("good_cavity", r <= GOOD_CAVITY_LIMIT, f"gamma/delta_omega = {r:.4g} (limit {GOOD_CAVITY_LIMIT})"))
    x = abs(p.fsr_times_tau)
    checks.append(("phase_mismatch", x <= PHASE_MISMATCH_LIMIT, f"|delta_omega*tau| = {x:.4g} (limit 2pi/10)"))
    try:
        check_grid_resolution(run.grid, p.gamma)
        ok, detail = True, f"spacing = {run.grid.spacing / p.gamma:.4g} gamma"
    except ZwmError as err:
        ok, detail = False, str(err)
    checks.append(("grid_resolution", ok, detail))
    sigma = run.config.spectrometer.resolution_sigma
    checks.append(("spectrometer_resolution", sigma < p.delta_omega / 4, f"sigma = {sigma / p.delta_omega:.4g} delta_omega (limit 0.25)"))
    checks.append(("comb_truncation", run.comb.warning is None, run.comb.warning or f"m in [{run.comb.m_min}, {run.comb.m_max}]"))
    return checks


def cmd_validate(run: Run) -> int:
    for name, ok, detail in validation_checks(run):
        print(f"{'PASS' if ok else 'WARN'} {name}: {detail}")
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "visibility": cmd_visibility,
    "montecarlo": cmd_montecarlo,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zwmsim", description=__doc__)
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--out", help="output directory (overrides output.dir)")
    parser.add_argument("--seed", type=int, help="Monte Carlo seed (overrides montecarlo.seed)")
    parser.add_argument(
        "--paper-exact-cross-term",
        action="store_true",
        help="use 2|T|cos(phi + varphi), ignoring the phase of T",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run = Run(load_config(args.config), args.out, args.seed, args.paper_exact_cross_term)
        if args.command != "validate":
            run.out.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings():
            if args.command == "validate":
                warnings.simplefilter("ignore")
            return COMMANDS[args.command](run)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except LowStatisticsError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_LOW_STATS
    except (ZwmError, FloatingPointError, np.linalg.LinAlgError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
