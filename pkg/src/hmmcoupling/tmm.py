"""Reflection from planar stacks of isotropic and uniaxial layers.

Conventions
-----------
* Fields vary as ``exp(i (kx x + kz z - omega t))``; z points from the
  incidence medium into the stack.
* Uniaxial media have their optical axis along z, permittivity
  ``diag(eps_perp, eps_perp, eps_par)``.  s-polarized light sees the
  ordinary index, p-polarized light the extraordinary one.
* Amplitudes refer to the tangential field that is continuous at the
  interfaces: H_y for p, E_y for s.  With the admittance
  ``q = kz / eps_perp`` (p) or ``q = kz`` (s) every interface obeys
  ``r = (q_a - q_b) / (q_a + q_b)`` and ``t = 1 + r``.
* Power transmissivity into the substrate is the z-flux ratio
  ``T = Re(q_sub) / Re(q_inc) * |t|**2``.  It vanishes for a lossless
  evanescent substrate wave; for an absorbing substrate it is the power
  entering (and absorbed by) the substrate.

Layers are composed with the Airy recursion (a 1x1 Redheffer star product)
from the substrate upwards.  Only ``exp(i kz d)`` with ``Im kz >= 0``
appears, so thick lossy or evanescent layers cannot overflow.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInterfaceError, NumericalError, SingularInputError
from .homogenization import UniaxialPermittivity
from .materials import CODATA

log = logging.getLogger(__name__)

POLARIZATIONS = ("p", "s")


@dataclass(frozen=True)
class Layer:
    medium: object
    thickness: float  # m

    def __post_init__(self):
        if not self.thickness > 0:
            raise ValueError("layer thickness must be > 0")


@dataclass(frozen=True)
class Stack:
    incidence: object
    layers: tuple = ()
    substrate: object = None

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.substrate is None:
            raise ValueError("stack needs a substrate")

    def media(self):
        return [self.incidence, *(layer.medium for layer in self.layers), self.substrate]


@dataclass(frozen=True)
class PlaneWaveState:
    lambda0: float  # vacuum wavelength [m]
    theta: float  # angle of incidence in the incidence medium [rad]
    pol: str = "p"

    def __post_init__(self):
        if self.pol not in POLARIZATIONS:
            raise ValueError(f"polarization must be one of {POLARIZATIONS}")
        if not 0 <= self.theta < np.pi / 2:
            raise ValueError("theta must lie in [0, pi/2)")
        if not self.lambda0 > 0:
            raise ValueError("wavelength must be positive")

    @property
    def k0(self):
        return 2 * np.pi / self.lambda0

    @property
    def omega(self):
        return CODATA.c * self.k0

    def kx(self, n_incidence):
        return n_incidence * self.k0 * np.sin(self.theta)


@dataclass(frozen=True)
class ReflectivityResult:
    r: complex
    R: float
    T: float


def medium_tensor(medium, omega):
    """Return ``(eps_perp, eps_par, isotropic)`` of ``medium`` at ``omega``.

    ``medium`` may be a plain number, a :class:`UniaxialPermittivity`, or
    any object with a ``permittivity(omega)`` method returning either.
    """
    if isinstance(medium, (int, float, complex, np.number)):
        value = complex(medium)
        return value, value, True
    value = medium if isinstance(medium, UniaxialPermittivity) else medium.permittivity(omega)
    if isinstance(value, UniaxialPermittivity):
        return value.eps_perp, value.eps_par, False
    return value, value, True


def branch_sqrt(z):
    """Square root with Im >= 0, and Re >= 0 when Im == 0."""
    k = np.sqrt(np.asarray(z, dtype=complex))
    flip = (k.imag < 0) | ((k.imag == 0) & (k.real < 0))
    k = np.where(flip, -k, k)
    return complex(k) if k.ndim == 0 else k


def _kz(eps_perp, eps_par, isotropic, kx, k0, pol):
    if pol == "p" and not isotropic:
        if np.any(np.asarray(eps_par) == 0):
            raise SingularInputError("eps_par vanishes exactly (extraordinary wave undefined)")
        return branch_sqrt(eps_perp * k0**2 - (eps_perp / eps_par) * kx**2)
    return branch_sqrt(eps_perp * k0**2 - kx**2)


def layer_kz(medium, kx, k0, pol):
    """Normal wavevector component [1/m] in ``medium`` for tangential ``kx``."""
    if pol not in POLARIZATIONS:
        raise ValueError(f"polarization must be one of {POLARIZATIONS}")
    if np.any(np.asarray(k0) <= 0):
        raise ValueError("k0 must be positive")
    eps_perp, eps_par, iso = medium_tensor(medium, CODATA.c * np.asarray(k0))
    return _kz(eps_perp, eps_par, iso, kx, k0, pol)


def _admittance(kz, eps_perp, pol):
    return kz / eps_perp if pol == "p" else kz


def _fresnel(qa, qb):
    den = qa + qb
    if np.any(den == 0):
        raise DegenerateInterfaceError("Fresnel denominator vanishes")
    r = (qa - qb) / den
    return r, 2 * qa / den


def interface_r_t(medium_a, medium_b, kx, k0, pol):
    """Fresnel amplitudes for a single interface from ``medium_a`` into ``medium_b``.

    Amplitudes are for tangential H (p) or tangential E (s); ``t = 1 + r``.
    """
    omega = CODATA.c * np.asarray(k0)
    qs = []
    for medium in (medium_a, medium_b):
        ep, ea, iso = medium_tensor(medium, omega)
        qs.append(_admittance(_kz(ep, ea, iso, kx, k0, pol), ep, pol))
    return _fresnel(*qs)


def _labels(n_layers):
    return ["incidence", *(f"layer {i + 1}" for i in range(n_layers)), "substrate"]


def _tag(exc, label):
    exc.location = label
    if exc.args:
        exc.args = (f"{label}: {exc.args[0]}",) + exc.args[1:]
    return exc


def _response(stack: Stack, lambda0, theta, pol):
    """Vectorised core: broadcasts ``lambda0`` and ``theta``; returns (r, T)."""
    if pol not in POLARIZATIONS:
        raise ValueError(f"polarization must be one of {POLARIZATIONS}")
    lambda0, theta = np.broadcast_arrays(np.asarray(lambda0, float), np.asarray(theta, float))
    k0 = 2 * np.pi / lambda0
    omega = CODATA.c * k0
    labels = _labels(len(stack.layers))

    eps_inc, _, _ = medium_tensor(stack.incidence, omega)
    eps_inc = np.asarray(eps_inc, dtype=complex)
    if np.any(eps_inc.imag != 0) or np.any(eps_inc.real <= 0):
        raise ValueError("incidence medium must be lossless with eps > 0")
    kx = np.sqrt(eps_inc.real) * k0 * np.sin(theta)

    kzs, qs = [], []
    for label, medium in zip(labels, stack.media()):
        try:
            ep, ea, iso = medium_tensor(medium, omega)
            kz = _kz(ep, ea, iso, kx, k0, pol)
        except NumericalError as exc:
            raise _tag(exc, label)
        q = _admittance(kz, ep, pol)
        kzs.append(kz)
        qs.append(q)

    # lossless hyperbolic substrate: pick the root carrying energy away
    outgoing = (np.imag(kzs[-1]) == 0) & (np.real(qs[-1]) < 0)
    if np.any(outgoing):
        kzs[-1] = np.where(outgoing, -kzs[-1], kzs[-1])
        qs[-1] = np.where(outgoing, -qs[-1], qs[-1])

    n = len(qs)
    try:
        gamma, tau = _fresnel(qs[n - 2], qs[n - 1])
    except NumericalError as exc:
        raise _tag(exc, f"{labels[n - 2]}/{labels[n - 1]} interface")
    for j in range(n - 2, 0, -1):
        try:
            r_ij, t_ij = _fresnel(qs[j - 1], qs[j])
        except NumericalError as exc:
            raise _tag(exc, f"{labels[j - 1]}/{labels[j]} interface")
        phase = np.exp(1j * kzs[j] * stack.layers[j - 1].thickness)
        loop = phase * phase
        den = 1 + r_ij * gamma * loop
        gamma = (r_ij + gamma * loop) / den
        tau = t_ij * tau * phase / den

    T = np.real(qs[-1]) / np.real(qs[0]) * np.abs(tau) ** 2
    return gamma, T


def stack_reflection(stack: Stack, wave: PlaneWaveState) -> ReflectivityResult:
    r, T = _response(stack, wave.lambda0, wave.theta, wave.pol)
    r = complex(r)
    return ReflectivityResult(r=r, R=abs(r) ** 2, T=float(T))


def reflectance(stack: Stack, lambda0, theta, pol="p"):
    """Array version of :func:`stack_reflection`: returns ``(r, R, T)`` arrays."""
    r, T = _response(stack, lambda0, theta, pol)
    return r, np.abs(r) ** 2, T


@dataclass
class ReflectivityMap:
    """R on a wavelength x angle grid; ``R[i, j]`` is at ``(lambda_grid[i], theta_grid[j])``."""

    lambda_grid: np.ndarray  # m
    theta_grid: np.ndarray  # rad
    R: np.ndarray
    pol: str = "p"
    errors: list = field(default_factory=list)  # (i, j, message)

    def rows(self):
        """``(lambda_nm, theta_deg, R)`` with wavelength outer, angle inner."""
        for i, lam in enumerate(self.lambda_grid):
            for j, th in enumerate(self.theta_grid):
                yield lam * 1e9, np.degrees(th), self.R[i, j]

    def to_csv(self, fh):
        from ._format import fmt

        fh.write("lambda_nm,theta_deg,R\n")
        for lam, th, R in self.rows():
            fh.write(f"{fmt(lam)},{fmt(th)},{fmt(R)}\n")


def _check_grid(grid, name):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-D grid")
    if np.any(np.diff(grid) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    return grid


def _map_column(stack, lambda_grid, theta, pol):
    """One angle column; falls back to per-cell evaluation if the vector path fails."""
    errors = []
    try:
        with np.errstate(all="ignore"):
            r, _ = _response(stack, lambda_grid, theta, pol)
        R = np.abs(r) ** 2
    except (NumericalError, ValueError, ZeroDivisionError):
        R = np.empty(lambda_grid.size)
        for i, lam in enumerate(lambda_grid):
            try:
                with np.errstate(all="ignore"):
                    r, _ = _response(stack, lam, theta, pol)
                R[i] = abs(complex(r)) ** 2
            except (NumericalError, ValueError, ZeroDivisionError) as exc:
                R[i] = np.nan
                errors.append((i, str(exc)))
    bad = ~np.isfinite(R)
    known = {i for i, _ in errors}
    for i in np.nonzero(bad)[0]:
        R[i] = np.nan
        if i not in known:
            errors.append((int(i), "non-finite reflectivity"))
    return R, errors


def default_workers():
    env = os.environ.get("HMMCOUPLING_THREADS")
    if env:
        return max(int(env), 1)
    return 1


def reflectivity_map(stack: Stack, lambda_grid, theta_grid, pol="p", workers=None) -> ReflectivityMap:
    """Evaluate R on every (wavelength, angle) grid point.

    Angle columns are distributed over ``workers`` threads.  Each column is
    written to its own slice of a preallocated array, so the result does not
    depend on the worker count.  Failing cells become NaN and are listed in
    ``errors``.
    """
    lambda_grid = _check_grid(lambda_grid, "lambda_grid")
    theta_grid = _check_grid(theta_grid, "theta_grid")
    if pol not in POLARIZATIONS:
        raise ValueError(f"polarization must be one of {POLARIZATIONS}")
    workers = default_workers() if workers is None else max(int(workers), 1)
    R = np.empty((lambda_grid.size, theta_grid.size))
    errors = []

    def job(j):
        col, errs = _map_column(stack, lambda_grid, theta_grid[j], pol)
        R[:, j] = col
        return [(i, j, msg) for i, msg in errs]

    if workers == 1:
        results = [job(j) for j in range(theta_grid.size)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(theta_grid.size)))
    for errs in results:
        errors.extend(errs)
    errors.sort()
    if errors:
        log.warning("reflectivity map: %d cells failed", len(errors))
    return ReflectivityMap(lambda_grid, theta_grid, R, pol, errors)
