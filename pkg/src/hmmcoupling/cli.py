"""Command-line front end: ``hmmcoupling <subcommand> --config PATH [--out DIR] [--threads N]``.

Every run writes its data files plus ``summary.json`` into the output
directory.  Exit codes: 0 success, 2 invalid configuration, 3 numerical
failure, 4 file-system error.
"""
from __future__ import annotations

import argparse
import hashlib
import io
import json
import logging
import math
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np
import pydantic
import scipy

from . import __version__
from ._format import fmt
from .config import (
    EMTSpec,
    JobConfig,
    UniaxialSpec,
    build_material,
    build_stack,
    dump_config,
    hmm_material_name,
    load_config,
)
from .errors import ConfigError, NumericalError
from .homogenization import band_map, emt_uniaxial, find_band_edges
from .materials import omega_to_wavelength, wavelength_to_omega
from .polariton import (
    AtomModel,
    SurfaceResonance,
    coupled_eigenfrequencies,
    coupling_from_strength,
    fit_surface_resonance,
    solve_azz_roots,
    strength_from_coupling,
    vacuum_decay_rate,
)
from .spectra import (
    Spectrum,
    concentration_sweep,
    estimate_concentration,
    find_dips,
    simulate_spectrum,
    splitting_energy,
    with_concentration,
)
from .tmm import reflectance, reflectivity_map

log = logging.getLogger("hmmcoupling")

SUBCOMMANDS = ("permittivity", "emt", "band-edges", "reflectivity", "map", "dips",
               "sweep", "modes", "fit-resonance", "estimate")
EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 2, 3, 4


def _num(x):
    """JSON-safe float rounded to 9 significant digits (None for non-finite)."""
    if x is None:
        return None
    x = float(x)
    return float(fmt(x)) if math.isfinite(x) else None


class Job:
    """Runs one subcommand and collects its output files in memory."""

    def __init__(self, cfg: JobConfig, base_dir: Path, threads: int):
        self.cfg = cfg
        self.base_dir = base_dir
        self.threads = threads
        self.files = {}  # name -> text
        self.stdout = None  # JSON-able result echoed to stdout

    # -- helpers ------------------------------------------------------------------------

    def lambda_grid(self):
        return self.cfg.sweep.lambda_nm.grid() * 1e-9

    def stack(self):
        return build_stack(self.cfg, self.base_dir)

    def theta(self):
        return math.radians(self.cfg.sweep.angle_deg)

    def window(self, nm):
        return None if nm is None else (nm[0] * 1e-9, nm[1] * 1e-9)

    def hmm(self):
        name = hmm_material_name(self.cfg)
        if not isinstance(self.cfg.materials[name], EMTSpec):
            raise ConfigError([f"analysis.hmm_material: '{name}' is not an EMT material"])
        return build_material(self.cfg, name, self.base_dir)

    def write_csv(self, name, header, rows):
        lines = [",".join(header)]
        lines += [",".join(r) for r in rows]
        self.files[name] = "\n".join(lines) + "\n"

    def write_json(self, name, obj, echo=True):
        self.files[name] = json.dumps(obj, indent=2, sort_keys=True) + "\n"
        if echo:
            self.stdout = obj

    def sweep(self, concentrations=None):
        s = self.cfg.sweep
        a = self.cfg.analysis
        if concentrations is None:
            concentrations = s.concentrations_M
        return concentration_sweep(self.stack(), concentrations, self.theta(),
                                   self.lambda_grid(), s.polarization, a.prominence,
                                   self.window(a.window_nm), self.threads)

    # -- subcommands --------------------------------------------------------------------

    def permittivity(self):
        lam = self.lambda_grid()
        omega = wavelength_to_omega(lam)
        rows = []
        for name, spec in self.cfg.materials.items():
            eps = build_material(self.cfg, name, self.base_dir).permittivity(omega)
            if isinstance(spec, (EMTSpec, UniaxialSpec)):
                parts = (("perp", eps.eps_perp), ("par", eps.eps_par))
            else:
                parts = (("iso", eps),)
            for component, values in parts:
                for l, e in zip(lam, np.broadcast_to(values, lam.shape)):
                    rows.append([name, component, fmt(l * 1e9), fmt(e.real), fmt(e.imag)])
        self.write_csv("permittivity.csv", ["material", "component", "lambda_nm", "eps_re", "eps_im"], rows)

    def emt(self):
        spec = self.hmm()
        lam = self.lambda_grid()
        eps = emt_uniaxial(spec, wavelength_to_omega(lam))
        bands = band_map(spec, lam)
        rows = [[fmt(l * 1e9), fmt(p.real), fmt(p.imag), fmt(q.real), fmt(q.imag), b.value]
                for l, p, q, b in zip(lam, eps.eps_perp, eps.eps_par, bands)]
        self.write_csv("emt.csv", ["lambda_nm", "eps_perp_re", "eps_perp_im", "eps_par_re",
                                   "eps_par_im", "band"], rows)

    def band_edges(self):
        a = self.cfg.analysis
        edges = find_band_edges(self.hmm(), self.window(a.band_window_nm), a.band_resolution_nm * 1e-9)
        self.write_json("band_edges.json", {"lambda_enz_nm": _num(edges.lambda_enz * 1e9),
                                            "lambda_enp_nm": _num(edges.lambda_enp * 1e9)})

    def reflectivity(self):
        lam = self.lambda_grid()
        r, R, T = reflectance(self.stack(), lam, self.theta(), self.cfg.sweep.polarization)
        rows = [[fmt(l * 1e9), fmt(a), fmt(b), fmt(c.real), fmt(c.imag)]
                for l, a, b, c in zip(lam, R, T, r)]
        self.write_csv("reflectivity.csv", ["lambda_nm", "R", "T", "r_re", "r_im"], rows)

    def map(self):
        s = self.cfg.sweep
        m = reflectivity_map(self.stack(), self.lambda_grid(), np.radians(s.theta_deg.grid()),
                             s.polarization, self.threads)
        window = self.window(self.cfg.analysis.map_window_nm)
        rows = []
        for j, th in enumerate(m.theta_grid):
            col = m.R[:, j]
            try:
                report = find_dips(Spectrum(m.lambda_grid, col), self.cfg.analysis.prominence, window)
                count = str(report.count)
                dips = ";".join(fmt(x * 1e9) for x in report.wavelengths())
            except ValueError as exc:
                count, dips = "", str(exc).replace(",", ";")
            rows.append([fmt(math.degrees(th)), count, dips])
        buf = io.StringIO()
        m.to_csv(buf)
        self.files["map.csv"] = buf.getvalue()
        self.write_csv("map_dips.csv", ["theta_deg", "dip_count", "dips_nm"], rows)
        if m.errors:
            self.files["map_errors.csv"] = "i,j,message\n" + "".join(
                f"{i},{j},{msg.replace(',', ';')}\n" for i, j, msg in m.errors)

    def dips(self):
        a = self.cfg.analysis
        spectrum = simulate_spectrum(self.stack(), self.lambda_grid(), self.theta(),
                                     self.cfg.sweep.polarization)
        report = find_dips(spectrum, a.prominence, self.window(a.window_nm))
        self.write_csv("dips.csv", ["lambda_nm", "R_min", "prominence"],
                       [[fmt(d.lambda_min * 1e9), fmt(d.R_min), fmt(d.prominence)] for d in report.dips])
        self.write_json("dips.json", {
            "dip_count": report.count,
            "lambda_nm": [_num(x * 1e9) for x in report.wavelengths()],
            "splitting_meV": _num(splitting_energy(report)) if report.count == 2 else None,
        })

    def sweep_cmd(self):
        curve = self.sweep()
        buf = io.StringIO()
        curve.to_csv(buf)
        self.files["sensing_curve.csv"] = buf.getvalue()
        self.stdout = {"onset_C_molar": curve.onset(),
                       "failed_rows": [r.C for r in curve.rows if r.error is not None]}

    def modes(self):
        m = self.cfg.modes
        if m is None:
            raise ConfigError(["modes: block required for the 'modes' subcommand"])
        gamma = vacuum_decay_rate(m.omega_0) if m.gamma_vac is None else m.gamma_vac
        omega_c = m.omega_0 if m.omega_c is None else m.omega_c
        chi = strength_from_coupling(m.g, m.omega_0) if m.chi is None else m.chi
        g = coupling_from_strength(chi, m.omega_0) if m.g is None else m.g
        atom, res = AtomModel(m.omega_0, gamma), SurfaceResonance(omega_c, m.kappa_c, chi)
        result = coupled_eigenfrequencies(atom, res, g)
        roots = solve_azz_roots(atom, res)
        out = {k: _num(v) if not isinstance(v, str) else v for k, v in result.to_json().items()}
        out["gamma_vac"] = _num(gamma)
        out["kappa_c"] = _num(m.kappa_c)
        out["exact_roots"] = [[_num(w.real), _num(w.imag)] for w in roots]
        self.write_json("modes.json", out)

    def fit_resonance(self):
        f = self.cfg.fit
        stack = with_concentration(self.stack(), 0.0)
        lo, hi = f.window_nm
        n = int(math.floor((hi - lo) / f.step_nm + 1e-9)) + 1
        lam = (lo + f.step_nm * np.arange(n)) * 1e-9
        r, _, _ = reflectance(stack, lam, self.theta(), self.cfg.sweep.polarization)
        fit = fit_surface_resonance(zip(wavelength_to_omega(lam), r), f.max_residual)
        lam_c = float(omega_to_wavelength(fit.omega_c))
        self.write_json("resonance_fit.json", {
            "omega_c": _num(fit.omega_c),
            "kappa_c": _num(fit.kappa_c),
            "chi": _num(fit.chi),
            "lambda_c_nm": _num(lam_c * 1e9),
            "background_re": _num(fit.background.real),
            "background_im": _num(fit.background.imag),
            "residue_re": _num(fit.residue.real),
            "residue_im": _num(fit.residue.imag),
            "residual": _num(fit.residual),
        })

    def estimate(self):
        e = self.cfg.estimate
        if e is None:
            raise ConfigError(["estimate: block required for the 'estimate' subcommand"])
        curve = self.sweep(e.concentrations_M)
        buf = io.StringIO()
        curve.to_csv(buf)
        self.files["calibration_curve.csv"] = buf.getvalue()
        value = e.value * 1e-9 if e.observable == "lambda_1" else e.value
        est = estimate_concentration(e.observable, value, curve)
        self.write_json("estimate.json", {"observable": e.observable, "value": _num(e.value),
                                          "C_molar": _num(est.C),
                                          "bracket_C_molar": [_num(x) for x in est.bracket]})

    def run(self, subcommand):
        handler = {
            "permittivity": self.permittivity, "emt": self.emt, "band-edges": self.band_edges,
            "reflectivity": self.reflectivity, "map": self.map, "dips": self.dips,
            "sweep": self.sweep_cmd, "modes": self.modes, "fit-resonance": self.fit_resonance,
            "estimate": self.estimate,
        }[subcommand]
        handler()


def _versions():
    return {"hmmcoupling": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "pydantic": pydantic.__version__}


def config_hash(cfg: JobConfig) -> str:
    return hashlib.sha256(dump_config(cfg).encode("utf-8")).hexdigest()


def resolve_threads(arg):
    if arg is not None:
        return max(int(arg), 1)
    env = os.environ.get("HMMCOUPLING_THREADS")
    if env:
        try:
            return max(int(env), 1)
        except ValueError:
            raise ConfigError([f"HMMCOUPLING_THREADS: not an integer: {env!r}"]) from None
    return 1


def run_job(cfg: JobConfig, subcommand: str, out_dir, base_dir=Path("."), threads=1):
    """Execute ``subcommand`` and write its files plus ``summary.json`` into ``out_dir``.

    Returns the summary dictionary.
    """
    if subcommand not in SUBCOMMANDS:
        raise ConfigError([f"subcommand: unknown '{subcommand}'"])
    start = time.perf_counter()
    job = Job(cfg, Path(base_dir), threads)
    job.run(subcommand)
    wall = time.perf_counter() - start
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in sorted(job.files):
        with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(job.files[name])
    summary = {
        "schema_version": 1,
        "subcommand": subcommand,
        "status": "ok",
        "config_sha256": config_hash(cfg),
        "versions": _versions(),
        "threads": threads,
        "wall_time_s": round(wall, 6),
        "outputs": sorted(job.files),
        "result": job.stdout,
    }
    with open(out / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def build_parser():
    p = argparse.ArgumentParser(prog="hmmcoupling", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True,
                   help="job configuration file, or the name of a shipped one (kretschmann_r6g)")
    p.add_argument("--out", help="output directory (default: output.dir from the config)")
    p.add_argument("--threads", type=int, help="worker threads (default: $HMMCOUPLING_THREADS or 1)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg, base_dir = load_config(args.config)
        threads = resolve_threads(args.threads)
        out_dir = Path(args.out) if args.out else Path(cfg.output.dir)
        summary = run_job(cfg, args.subcommand, out_dir, base_dir, threads)
    except ConfigError as exc:
        print("configuration error:", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if summary["result"] is not None:
        print(json.dumps(summary["result"], indent=2, sort_keys=True))
    else:
        print("wrote " + ", ".join(summary["outputs"]) + f" to {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
