"""Effective-medium description of metal/dielectric multilayers.

A stack of thin alternating layers with the optical axis along the surface
normal behaves as a uniaxial crystal.  The in-plane component is the
volume-weighted mean of the constituents and the out-of-plane component is
the volume-weighted harmonic mean.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, fsolve

from .errors import BandEdgeNotFoundError, NumericalError, SingularInputError
from .materials import Constant, Drude, wavelength_to_omega


@dataclass(frozen=True)
class UniaxialPermittivity:
    """Diagonal tensor ``diag(eps_perp, eps_perp, eps_par)``; axis along z."""

    eps_perp: complex
    eps_par: complex


@dataclass(frozen=True)
class UniaxialMedium:
    """Uniaxial medium built from two independent dispersion models."""

    eps_perp: object
    eps_par: object

    def permittivity(self, omega):
        return UniaxialPermittivity(
            self.eps_perp.permittivity(omega), self.eps_par.permittivity(omega)
        )


@dataclass(frozen=True)
class HomogenizationSpec:
    metal: object
    dielectric: object
    fill_fraction: float

    def __post_init__(self):
        if not 0 <= self.fill_fraction <= 1:
            raise ValueError("fill_fraction must lie in [0, 1]")

    def permittivity(self, omega):
        return emt_uniaxial(self, omega)


def mix(eps_m, eps_d, f):
    """EMT mixing rule on raw permittivities (scalars or arrays)."""
    eps_m = np.asarray(eps_m, dtype=complex)
    eps_d = np.asarray(eps_d, dtype=complex)
    if np.any((eps_m == 0) & (eps_d == 0)):
        raise SingularInputError("metal and dielectric permittivities both vanish")
    eps_perp = f * eps_m + (1 - f) * eps_d
    if f == 1:
        eps_par = eps_m
    elif f == 0:
        eps_par = eps_d
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            eps_par = 1.0 / (f / eps_m + (1 - f) / eps_d)
    # equal constituents: both averages reduce to the common value exactly
    same = eps_m == eps_d
    eps_perp = np.where(same, eps_m, eps_perp)
    eps_par = np.where(same, eps_m, eps_par)
    if eps_perp.ndim == 0:
        return UniaxialPermittivity(complex(eps_perp), complex(eps_par))
    return UniaxialPermittivity(eps_perp, np.asarray(eps_par, dtype=complex))


def emt_uniaxial(spec: HomogenizationSpec, omega) -> UniaxialPermittivity:
    eps_m = spec.metal.permittivity(omega)
    eps_d = spec.dielectric.permittivity(omega)
    return mix(eps_m, eps_d, spec.fill_fraction)


class BandType(str, enum.Enum):
    DIELECTRIC = "dielectric"
    TYPE_I = "type_I"
    TYPE_II = "type_II"
    METALLIC = "metallic"


def classify_band(eps: UniaxialPermittivity) -> BandType:
    """Band type from the signs of the real parts.

    A real part of exactly +0.0 counts as positive and -0.0 as negative
    (``copysign`` semantics); such points are band boundaries.
    """
    perp_pos = np.copysign(1.0, np.real(eps.eps_perp)) > 0
    par_pos = np.copysign(1.0, np.real(eps.eps_par)) > 0
    if perp_pos and par_pos:
        return BandType.DIELECTRIC
    if perp_pos:
        return BandType.TYPE_I
    if par_pos:
        return BandType.TYPE_II
    return BandType.METALLIC


@dataclass(frozen=True)
class BandEdges:
    lambda_enz: float  # m
    lambda_enp: float  # m


def _enz_function(spec, lam):
    return np.real(emt_uniaxial(spec, wavelength_to_omega(lam)).eps_perp)


def _enp_function(spec, lam):
    w = wavelength_to_omega(lam)
    f = spec.fill_fraction
    inv_par = f / spec.metal.permittivity(w) + (1 - f) / spec.dielectric.permittivity(w)
    return np.real(inv_par)


def _first_root(func, grid, xtol):
    values = func(grid)
    sign = np.signbit(values)
    crossings = np.nonzero(sign[1:] != sign[:-1])[0]
    if crossings.size == 0:
        return None
    i = crossings[0]
    if values[i] == 0:
        return float(grid[i])
    return brentq(func, grid[i], grid[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps)


def find_band_edges(spec: HomogenizationSpec, lambda_window=(350e-9, 650e-9),
                    resolution=1e-9) -> BandEdges:
    """Locate the ENZ (Re eps_perp = 0) and ENP (Re 1/eps_par = 0) wavelengths.

    Sign changes are bracketed on a grid of spacing ``resolution`` and then
    refined by bisection to better than 0.01 nm.  The first crossing in the
    window is returned for each edge.
    """
    lo, hi = lambda_window
    if not hi > lo:
        raise ValueError("empty wavelength window")
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    n = max(int(np.ceil((hi - lo) / resolution)), 1) + 1
    grid = np.linspace(lo, hi, n)
    xtol = 1e-12  # 0.001 nm
    enz = _first_root(lambda x: _enz_function(spec, x), grid, xtol)
    enp = None
    if 0 < spec.fill_fraction < 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            enp = _first_root(lambda x: _enp_function(spec, x), grid, xtol)
    missing = [name for name, v in (("ENZ", enz), ("ENP", enp)) if v is None]
    if missing:
        raise BandEdgeNotFoundError(missing, (lo, hi))
    return BandEdges(enz, enp)


def calibrate_drude(lambda_enz, lambda_enp, dielectric_eps, gamma, fill_fraction,
                    guess=(5.0, 1.4e16)) -> Drude:
    """Drude ``eps_inf`` and ``omega_p`` that put the band edges at
    ``lambda_enz`` and ``lambda_enp`` for fixed damping and dielectric.

    Solves Re eps_perp = 0 at the ENZ wavelength and Re(1/eps_par) = 0 at
    the ENP wavelength simultaneously.
    """
    f = fill_fraction
    w_enz, w_enp = wavelength_to_omega([lambda_enz, lambda_enp])
    eps_d = complex(dielectric_eps)

    def residual(p):
        metal = Drude(p[0], abs(p[1]) * 1e16, gamma)
        em_z = metal.permittivity(w_enz)
        em_p = metal.permittivity(w_enp)
        return [(f * em_z + (1 - f) * eps_d).real, (f / em_p + (1 - f) / eps_d).real * eps_d.real]

    sol, _, ier, msg = fsolve(residual, [guess[0], guess[1] * 1e-16], full_output=True, xtol=1e-14)
    if ier != 1:
        raise NumericalError(f"Drude calibration did not converge: {msg}")
    return Drude(float(sol[0]), float(abs(sol[1]) * 1e16), gamma)


def band_map(spec: HomogenizationSpec, wavelengths):
    """Band type for each wavelength in ``wavelengths`` [m]."""
    eps = emt_uniaxial(spec, wavelength_to_omega(wavelengths))
    perp = np.atleast_1d(eps.eps_perp)
    par = np.atleast_1d(eps.eps_par)
    return [classify_band(UniaxialPermittivity(a, b)) for a, b in zip(perp, par)]


def default_hmm(fill_fraction=0.6) -> HomogenizationSpec:
    """Calibrated Ag/TiO2 multilayer."""
    from .materials import SILVER, TIO2

    return HomogenizationSpec(SILVER, TIO2, fill_fraction)

