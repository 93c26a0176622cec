"""Reflectivity-dip analysis, concentration sweeps and sensing calibration."""
from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._format import fmt
from .errors import DipCountError, EstimationError, HMMCouplingError
from .materials import CODATA, DyeModel, PhysicalConstants
from .tmm import Layer, Stack, reflectance

log = logging.getLogger(__name__)

DEFAULT_PROMINENCE = 0.02
DEFAULT_STEP = 0.5e-9


@dataclass
class Spectrum:
    wavelength: np.ndarray  # m, strictly increasing
    R: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.wavelength = np.asarray(self.wavelength, dtype=float)
        self.R = np.asarray(self.R, dtype=float)
        if self.wavelength.shape != self.R.shape or self.wavelength.ndim != 1:
            raise ValueError("wavelength and R must be 1-D arrays of equal length")
        if np.any(np.diff(self.wavelength) <= 0):
            raise ValueError("wavelength grid must be strictly increasing")


@dataclass(frozen=True)
class Dip:
    lambda_min: float  # m, parabola-refined
    R_min: float
    prominence: float


@dataclass(frozen=True)
class DipReport:
    dips: tuple = ()

    @property
    def count(self):
        return len(self.dips)

    def wavelengths(self):
        return [d.lambda_min for d in self.dips]


def simulate_spectrum(stack: Stack, lambda_grid, theta, pol="p", metadata=None) -> Spectrum:
    lambda_grid = np.asarray(lambda_grid, dtype=float)
    _, R, _ = reflectance(stack, lambda_grid, theta, pol)
    meta = {"theta": float(theta), "pol": pol}
    meta.update(metadata or {})
    return Spectrum(lambda_grid, R, meta)


def _prominence(R, i):
    """Depth of the minimum at ``i`` below the lower of its two bounding maxima."""
    left = i
    while left > 0 and R[left - 1] >= R[i]:
        left -= 1
    right = i
    while right < R.size - 1 and R[right + 1] >= R[i]:
        right += 1
    return min(R[left:i + 1].max(), R[i:right + 1].max()) - R[i]


def _parabola_vertex(x, y):
    (x0, x1, x2), (y0, y1, y2) = x, y
    d0, d2 = x0 - x1, x2 - x1
    denom = d0 * d2 * (d0 - d2)
    a = (d2 * (y0 - y1) - d0 * (y2 - y1)) / denom
    b = (d0**2 * (y2 - y1) - d2**2 * (y0 - y1)) / denom
    if a <= 0:
        return x1, y1
    shift = -b / (2 * a)
    return x1 + shift, y1 - b**2 / (4 * a)


def find_dips(spectrum: Spectrum, prominence_threshold=DEFAULT_PROMINENCE, window=None) -> DipReport:
    """Local minima of R inside ``window`` with sufficient prominence.

    A sample is a candidate when it is strictly below its left neighbour and
    not above its right neighbour.  Prominence is measured within the window
    only.  Positions and depths are refined with the parabola through the
    three samples around each minimum.
    """
    lam, R = spectrum.wavelength, spectrum.R
    if window is not None:
        lo, hi = window
        keep = (lam >= lo) & (lam <= hi)
        lam, R = lam[keep], R[keep]
    if lam.size == 0:
        raise ValueError("no spectrum samples inside the analysis window")
    if lam.size < 5:
        raise ValueError("need at least 5 samples inside the analysis window")
    finite = np.isfinite(R)
    dips = []
    for i in range(1, R.size - 1):
        if not (finite[i - 1] and finite[i] and finite[i + 1]):
            continue
        if not (R[i] < R[i - 1] and R[i] <= R[i + 1]):
            continue
        prom = _prominence(R, i)
        if prom < prominence_threshold:
            continue
        x, y = _parabola_vertex(lam[i - 1:i + 2], R[i - 1:i + 2])
        dips.append(Dip(float(x), float(y), float(prom)))
    return DipReport(tuple(dips))


def hc_over_e_nm(constants: PhysicalConstants = CODATA):
    """Photon energy-wavelength product [eV nm] (about 1239.84)."""
    return 2 * np.pi * constants.hbar * constants.c / constants.e * 1e9


def splitting_energy(dips, constants: PhysicalConstants = CODATA) -> float:
    """Energy gap between exactly two dips [meV]; positive when lambda_1 < lambda_2."""
    lams = dips.wavelengths() if isinstance(dips, DipReport) else list(dips)
    if len(lams) != 2:
        raise DipCountError(f"splitting needs exactly 2 dips, got {len(lams)}")
    l1, l2 = (x * 1e9 for x in lams)
    return hc_over_e_nm(constants) * (1 / l1 - 1 / l2) * 1e3


# --- concentration sweeps ---------------------------------------------------------


@dataclass(frozen=True)
class SensingRow:
    C: float
    dip_count: int
    lambda_1: Optional[float] = None
    lambda_2: Optional[float] = None
    R_min_1: Optional[float] = None
    splitting_meV: Optional[float] = None
    error: Optional[str] = None


OBSERVABLES = {"R_min": "R_min_1", "lambda_1": "lambda_1", "splitting_meV": "splitting_meV"}


@dataclass
class SensingCurve:
    rows: list

    def column(self, name):
        attr = OBSERVABLES.get(name, name)
        return [getattr(row, attr) for row in self.rows]

    def onset(self):
        """Smallest concentration whose spectrum shows two dips, or None."""
        for row in self.rows:
            if row.dip_count == 2:
                return row.C
        return None

    def to_csv(self, fh):
        fh.write("C_molar,dip_count,lambda1_nm,lambda2_nm,Rmin1,splitting_meV\n")
        for row in self.rows:
            nm = lambda x: None if x is None else x * 1e9  # noqa: E731
            fields = [fmt(row.C), str(row.dip_count), fmt(nm(row.lambda_1)),
                      fmt(nm(row.lambda_2)), fmt(row.R_min_1), fmt(row.splitting_meV)]
            fh.write(",".join(fields) + "\n")


def with_concentration(stack: Stack, concentration) -> Stack:
    """Copy of ``stack`` with every dye medium set to ``concentration``."""

    def swap(medium):
        if isinstance(medium, DyeModel):
            return dataclasses.replace(medium, concentration=concentration)
        return medium

    layers = [Layer(swap(layer.medium), layer.thickness) for layer in stack.layers]
    return Stack(swap(stack.incidence), layers, swap(stack.substrate))


def _sweep_row(stack, C, theta, lambda_grid, pol, prominence, window):
    try:
        spectrum = simulate_spectrum(with_concentration(stack, C), lambda_grid, theta, pol,
                                     {"concentration": C})
        report = find_dips(spectrum, prominence, window)
    except (HMMCouplingError, ValueError) as exc:
        log.warning("sweep row C=%g failed: %s", C, exc)
        return SensingRow(C=C, dip_count=0, error=str(exc))
    dips = report.dips
    return SensingRow(
        C=C,
        dip_count=report.count,
        lambda_1=dips[0].lambda_min if dips else None,
        lambda_2=dips[1].lambda_min if len(dips) >= 2 else None,
        R_min_1=dips[0].R_min if dips else None,
        splitting_meV=splitting_energy(report) if report.count == 2 else None,
    )


def concentration_sweep(stack_template: Stack, concentrations, theta, lambda_grid, pol="p",
                        prominence=DEFAULT_PROMINENCE, window=None, workers=1) -> SensingCurve:
    """One spectrum and dip analysis per concentration [mol/l].

    Rows are independent and may run on ``workers`` threads; the output order
    always follows ``concentrations``.
    """
    concentrations = [float(c) for c in concentrations]
    if any(c < 0 for c in concentrations):
        raise ValueError("concentrations must be nonnegative")
    if any(b < a for a, b in zip(concentrations, concentrations[1:])):
        raise ValueError("concentrations must be sorted")

    def job(C):
        return _sweep_row(stack_template, C, theta, lambda_grid, pol, prominence, window)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(job, concentrations))
    else:
        rows = [job(C) for C in concentrations]
    return SensingCurve(rows)


@dataclass(frozen=True)
class ConcentrationEstimate:
    C: float
    bracket: tuple  # (C_lo, C_hi) of the interpolating grid interval


def estimate_concentration(observable, value, curve: SensingCurve) -> ConcentrationEstimate:
    """Invert a monotone calibration curve by piecewise-linear interpolation.

    ``observable`` is one of ``R_min``, ``lambda_1`` (metres) or
    ``splitting_meV``.  Rows without that observable are skipped.
    """
    if observable not in OBSERVABLES:
        raise ValueError(f"observable must be one of {sorted(OBSERVABLES)}")
    pairs = [(row.C, v) for row, v in zip(curve.rows, curve.column(observable))
             if v is not None and row.error is None]
    if len(pairs) < 2:
        raise EstimationError(f"fewer than two calibration rows carry {observable}")
    Cs = np.array([p[0] for p in pairs])
    vs = np.array([p[1] for p in pairs], dtype=float)
    steps = np.diff(vs)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise EstimationError(f"{observable} is not strictly monotone over the calibration rows")
    lo, hi = float(vs.min()), float(vs.max())
    if not lo <= value <= hi:
        raise EstimationError(f"{observable}={value:.6g} outside calibrated range [{lo:.6g}, {hi:.6g}]")
    for i in range(len(vs) - 1):
        a, b = vs[i], vs[i + 1]
        if min(a, b) <= value <= max(a, b):
            if value == a:
                C = Cs[i]
            elif value == b:
                C = Cs[i + 1]
            else:
                C = Cs[i] + (value - a) / (b - a) * (Cs[i + 1] - Cs[i])
            return ConcentrationEstimate(float(C), (float(Cs[i]), float(Cs[i + 1])))
    raise AssertionError("unreachable: value inside range but no bracket")
