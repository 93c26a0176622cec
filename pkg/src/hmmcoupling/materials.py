"""Dispersive permittivity models for the constituent media.

All models follow the ``exp(-i omega t)`` time convention, so passive media
have ``Im eps >= 0``.  Every ``permittivity`` method accepts a scalar or a
numpy array of angular frequencies [rad/s] and broadcasts.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
import scipy.constants as sc

from .errors import SingularInputError, WavelengthRangeError


@dataclass(frozen=True)
class PhysicalConstants:
    """SI constants (CODATA 2022 values as shipped with scipy)."""

    e: float = sc.e  # 1.602176634e-19 C
    m: float = sc.m_e  # 9.1093837139e-31 kg
    eps0: float = sc.epsilon_0  # 8.8541878188e-12 F/m
    c: float = sc.c  # 299792458 m/s
    hbar: float = sc.hbar  # 1.054571817e-34 J s
    N_A: float = sc.N_A  # 6.02214076e23 1/mol

    def __post_init__(self):
        for name in ("e", "m", "eps0", "c", "hbar", "N_A"):
            if not getattr(self, name) > 0:
                raise ValueError(f"constant {name} must be positive")


CODATA = PhysicalConstants()


def wavelength_to_omega(wavelength, constants: PhysicalConstants = CODATA):
    """Vacuum wavelength [m] to angular frequency [rad/s]."""
    return 2 * np.pi * constants.c / np.asarray(wavelength, dtype=float)


def omega_to_wavelength(omega, constants: PhysicalConstants = CODATA):
    return 2 * np.pi * constants.c / np.asarray(omega, dtype=float)


def _check_omega(omega):
    w = np.asarray(omega, dtype=float)
    if np.any(~(w > 0)):
        raise ValueError("angular frequency must be positive")
    return w


def _out(value, omega):
    value = np.asarray(value, dtype=complex)
    return complex(value) if np.ndim(omega) == 0 else value


@dataclass(frozen=True)
class Constant:
    """Frequency-independent permittivity."""

    eps: complex

    def permittivity(self, omega):
        w = _check_omega(omega)
        return _out(np.full(w.shape, complex(self.eps)), omega)


@dataclass(frozen=True)
class Drude:
    """Free-electron metal: ``eps_inf - omega_p**2 / (omega**2 + i gamma omega)``."""

    eps_inf: float
    omega_p: float
    gamma: float

    def __post_init__(self):
        if self.omega_p < 0 or self.gamma < 0:
            raise ValueError("Drude omega_p and gamma must be >= 0")

    def permittivity(self, omega):
        w = _check_omega(omega)
        return _out(self.eps_inf - self.omega_p**2 / (w * (w + 1j * self.gamma)), omega)


@dataclass(frozen=True)
class Lorentz:
    """Single bound-oscillator resonance on a constant background."""

    eps_b: float
    omega_p: float
    omega_0: float
    gamma: float

    def __post_init__(self):
        if self.omega_p < 0 or self.gamma < 0 or self.omega_0 < 0:
            raise ValueError("Lorentz omega_p, omega_0 and gamma must be >= 0")

    def permittivity(self, omega):
        w = _check_omega(omega)
        wp2 = self.omega_p**2
        if self.gamma == 0 and wp2 > 0 and np.any(w == self.omega_0):
            raise SingularInputError("lossless Lorentz oscillator evaluated exactly at resonance")
        with np.errstate(divide="ignore", invalid="ignore"):
            chi = wp2 / (self.omega_0**2 - w**2 - 1j * w * self.gamma)
        if wp2 == 0:  # includes omega_p so small that its square underflows
            chi = np.zeros_like(w, dtype=complex)
        return _out(self.eps_b + chi, omega)


@dataclass(frozen=True)
class Tabulated:
    """Measured data, linearly interpolated in wavelength.

    Real and imaginary parts are interpolated separately.  No extrapolation.
    """

    wavelength: tuple  # [m], strictly increasing
    eps: tuple  # complex
    constants: PhysicalConstants = field(default=CODATA, compare=False, repr=False)

    def __post_init__(self):
        lam = np.asarray(self.wavelength, dtype=float)
        if lam.ndim != 1 or lam.size < 2 or len(self.eps) != lam.size:
            raise ValueError("tabulated model needs >= 2 (wavelength, eps) pairs")
        if np.any(np.diff(lam) <= 0):
            raise ValueError("tabulated wavelengths must be strictly increasing")
        object.__setattr__(self, "wavelength", tuple(float(x) for x in lam))
        object.__setattr__(self, "eps", tuple(complex(x) for x in self.eps))

    @property
    def bounds(self):
        return self.wavelength[0], self.wavelength[-1]

    def permittivity(self, omega):
        w = _check_omega(omega)
        lam = omega_to_wavelength(w, self.constants)
        lo, hi = self.bounds
        # half-ulp slack so grid endpoints round-tripped through omega stay valid
        tol = 1e-12 * hi
        if np.any(lam < lo - tol) or np.any(lam > hi + tol):
            raise WavelengthRangeError(
                f"wavelength outside tabulated range [{lo * 1e9:.4g}, {hi * 1e9:.4g}] nm"
            )
        table = np.asarray(self.eps)
        re = np.interp(lam, self.wavelength, table.real)
        im = np.interp(lam, self.wavelength, table.imag)
        return _out(re + 1j * im, omega)

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "Tabulated":
        """Read ``wavelength_nm, eps_re, eps_im`` rows (header optional)."""
        lam, eps = [], []
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    nm, re, im = (float(x) for x in row[:3])
                except ValueError:
                    if not lam:  # header line
                        continue
                    raise
                lam.append(nm * 1e-9)
                eps.append(complex(re, im))
        return cls(tuple(lam), tuple(eps))


DispersionModel = Union[Constant, Drude, Lorentz, Tabulated]


def evaluate_permittivity(model, omega):
    """Complex permittivity of ``model`` at angular frequency ``omega``."""
    return model.permittivity(omega)


@dataclass(frozen=True)
class DyeModel:
    """Dye solution: a Lorentz oscillator whose strength follows the molar concentration.

    ``h`` is the fraction of the free-electron oscillator strength carried by
    each molecule.
    """

    omega_0: float = 3.5e15
    gamma: float = 2.07e14
    h: float = 0.74
    concentration: float = 0.0  # mol/l
    host_eps: float = 1.0
    constants: PhysicalConstants = field(default=CODATA, compare=False, repr=False)

    def __post_init__(self):
        if self.concentration < 0:
            raise ValueError("concentration must be >= 0")
        if not 0 < self.h <= 1:
            raise ValueError("h must lie in (0, 1]")
        if not self.gamma > 0:
            raise ValueError("dye gamma must be > 0")

    def permittivity(self, omega):
        return dye_permittivity(self, omega, self.constants)


def number_density(concentration, constants: PhysicalConstants = CODATA):
    """Molar concentration [mol/l] to number density [1/m^3]."""
    return concentration * 1000.0 * constants.N_A


def dye_plasma_frequency(dye: DyeModel, constants: PhysicalConstants = CODATA) -> float:
    n = number_density(dye.concentration, constants)
    return float(np.sqrt(n * dye.h * constants.e**2 / (constants.m * constants.eps0)))


def dye_permittivity(dye: DyeModel, omega, constants: PhysicalConstants = CODATA):
    wp = dye_plasma_frequency(dye, constants)
    model = Lorentz(dye.host_eps, wp, dye.omega_0, dye.gamma)
    return model.permittivity(omega)


# Calibrated constituents of the Ag/TiO2 multilayer (see homogenization.calibrate_drude).
# eps_inf and omega_p place the f=0.6 band edges at 414 nm (ENZ) and 513 nm (ENP);
# gamma and the TiO2 permittivity set the bare Kretschmann dip depth near R=0.2.
SILVER = Drude(eps_inf=6.125130181, omega_p=1.495978842e16, gamma=1.9e14)
TIO2 = Constant(7.0)
SILICA = Constant(2.25)
