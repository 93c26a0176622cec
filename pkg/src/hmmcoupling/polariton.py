"""Classical dipole coupled to a lossy surface resonance.

The emitter is a damped harmonic oscillator (frequency ``omega_0``, vacuum
emission rate ``gamma_vac``).  Near the surface resonance the zz component
of the scattered Green function is replaced by a single pole,

    G_zz(omega) ~ -chi / (omega - omega_c + i kappa_c),

so the normal-mode condition becomes a scalar equation A_zz(omega) = 0.
Units: with ``K = e**2 / (c**2 eps0 m)`` (a length) the coupling constant is
``g**2 = K omega_0 chi / 2``; hence ``chi`` carries 1/(m s), i.e. rad/s
times the 1/m of a Green function.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import least_squares

from .errors import FitFailureError, RootCountMismatchError
from .materials import CODATA, PhysicalConstants


@dataclass(frozen=True)
class SurfaceResonance:
    omega_c: float  # rad/s
    kappa_c: float  # rad/s
    chi: float  # 1/(m s)

    def __post_init__(self):
        if not self.kappa_c >= 0:
            raise ValueError("kappa_c must be >= 0")
        if self.chi < 0:
            raise ValueError("chi must be >= 0")


@dataclass(frozen=True)
class AtomModel:
    omega_0: float  # rad/s
    gamma_vac: float  # rad/s

    def __post_init__(self):
        if self.gamma_vac < 0:
            raise ValueError("gamma_vac must be >= 0")


class Regime(str, enum.Enum):
    WEAK = "weak"
    STRONG = "strong"


@dataclass(frozen=True)
class CoupledModeResult:
    omega_plus: complex
    omega_minus: complex
    g: float
    regime: Regime
    splitting_meV: float
    margin: float  # 2g / max(kappa_c, gamma_vac)

    def to_json(self):
        return {
            "omega_plus_re": self.omega_plus.real,
            "omega_plus_im": self.omega_plus.imag,
            "omega_minus_re": self.omega_minus.real,
            "omega_minus_im": self.omega_minus.imag,
            "g": self.g,
            "regime": self.regime.value,
            "splitting_meV": self.splitting_meV,
            "margin": self.margin,
        }


def to_meV(omega, constants: PhysicalConstants = CODATA):
    """Angular frequency [rad/s] to photon energy [meV]."""
    return constants.hbar * omega / constants.e * 1e3


def coupling_length(constants: PhysicalConstants = CODATA):
    """``e**2 / (c**2 eps0 m)`` [m]; equals 4 pi times the classical electron radius."""
    return constants.e**2 / (constants.c**2 * constants.eps0 * constants.m)


def vacuum_decay_rate(omega, constants: PhysicalConstants = CODATA):
    """Free-space rate from Im G_zz = omega / (6 pi c): ``omega**2 e**2 / (12 pi eps0 m c**3)``."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("omega must be >= 0")
    rate = omega**2 * constants.e**2 / (12 * np.pi * constants.eps0 * constants.m * constants.c**3)
    return float(rate) if rate.ndim == 0 else rate


def coupling_from_strength(chi, omega_0, constants: PhysicalConstants = CODATA):
    if chi < 0 or omega_0 <= 0:
        raise ValueError("need chi >= 0 and omega_0 > 0")
    return math.sqrt(coupling_length(constants) * omega_0 * chi / 2)


def strength_from_coupling(g, omega_0, constants: PhysicalConstants = CODATA):
    """Inverse of :func:`coupling_from_strength`."""
    return 2 * g**2 / (coupling_length(constants) * omega_0)


def classify_coupling(g, gamma_vac, kappa_c) -> Regime:
    """Strong iff ``2g > max(kappa_c, gamma_vac)``.

    The factor-one threshold is the loosest reading of "2g much larger than
    both losses"; :func:`coupling_margin` gives the ratio for stricter use.
    """
    if min(g, gamma_vac, kappa_c) < 0:
        raise ValueError("rates must be nonnegative")
    return Regime.STRONG if 2 * g > max(kappa_c, gamma_vac) else Regime.WEAK


def coupling_margin(g, gamma_vac, kappa_c):
    loss = max(kappa_c, gamma_vac)
    return math.inf if loss == 0 else 2 * g / loss


def coupled_eigenfrequencies(atom: AtomModel, res: SurfaceResonance, g=None,
                             constants: PhysicalConstants = CODATA) -> CoupledModeResult:
    """Closed-form normal modes, valid for ``omega_c ~ omega_0``.

    ``g`` defaults to the value implied by ``res.chi``.
    """
    if g is None:
        g = coupling_from_strength(res.chi, atom.omega_0, constants)
    gam, kap = atom.gamma_vac, res.kappa_c
    centre = complex(atom.omega_0, -(gam + kap) / 2)
    root = np.sqrt(complex(g**2 - (gam - kap) ** 2 / 4))
    a, b = centre + root, centre - root
    plus, minus = (a, b) if a.real >= b.real else (b, a)
    return CoupledModeResult(
        omega_plus=plus,
        omega_minus=minus,
        g=g,
        regime=classify_coupling(g, gam, kap),
        splitting_meV=to_meV(plus.real - minus.real, constants),
        margin=coupling_margin(g, gam, kap),
    )


def rabi_estimate(omega_c, omega_p):
    """Collective-mode pair ``omega_c +- omega_p / 2`` for a dense emitter medium."""
    if omega_p < 0:
        raise ValueError("omega_p must be >= 0")
    return omega_c + omega_p / 2, omega_c - omega_p / 2


def rabi_splitting_meV(omega_p, constants: PhysicalConstants = CODATA):
    return to_meV(omega_p, constants)


# --- exact dispersion relation --------------------------------------------------------


def azz(omega, atom: AtomModel, res: SurfaceResonance, coupling_prefactor=None,
        constants: PhysicalConstants = CODATA):
    """A_zz(omega) in rad^2/s^2 with the pole-approximated Green function."""
    K = coupling_length(constants) if coupling_prefactor is None else coupling_prefactor
    w = np.asarray(omega, dtype=complex)
    free = atom.omega_0**2 - w**2 - 2j * atom.gamma_vac * w
    return free + K * w**2 * res.chi / (w - res.omega_c + 1j * res.kappa_c)


def _scaled_polynomial(atom, res, K):
    """Numerator of A_zz / omega_0**2 in z = omega / omega_0 (pole cleared)."""
    a = atom.gamma_vac / atom.omega_0
    free = Polynomial([1.0, -2j * a, -1.0])
    s = K * res.chi / atom.omega_0
    if s == 0:
        return free
    pole = Polynomial([-res.omega_c / atom.omega_0 + 1j * res.kappa_c / atom.omega_0, 1.0])
    return free * pole + Polynomial([0.0, 0.0, s])


class _OnContour(Exception):
    pass


def _edge_phase(P, dP, z0, z1, floor, max_rounds=12):
    """Total change of arg P along the segment z0 -> z1.

    A step ``h`` is accepted only when ``h |P'/P|`` stays small at both ends
    and the midpoint, i.e. the step is short compared with the distance to
    every nearby root, and the phase step is below pi/4.  Other steps are
    split 16-fold and retried; this rules out steps aliased by 2 pi when
    roots crowd the contour.
    """
    a = np.array([z0], dtype=complex)
    b = np.array([z1], dtype=complex)
    total = 0.0
    for _ in range(max_rounds):
        t = np.linspace(0.0, 1.0, 17)
        z = a[:, None] + (b - a)[:, None] * t  # (segments, 17)
        za, zb = z[:, :-1].ravel(), z[:, 1:].ravel()
        zm = 0.5 * (za + zb)
        va, vb, vm = P(za), P(zb), P(zm)
        if min(np.abs(va).min(), np.abs(vb).min(), np.abs(vm).min()) <= floor:
            raise _OnContour
        h = np.abs(zb - za)
        rough = np.maximum.reduce([
            h * np.abs(dP(za) / va), h * np.abs(dP(zb) / vb), h * np.abs(dP(zm) / vm)
        ]) > 0.25
        d = np.angle(vb / va)
        rough |= np.abs(d) > np.pi / 4
        total += d[~rough].sum()
        if not rough.any():
            return total
        a, b = za[rough], zb[rough]
    raise _OnContour


def _winding(P, rect, floor):
    dP = P.deriv()
    x0, x1, y0, y1 = rect
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
    total = sum(_edge_phase(P, dP, corners[i], corners[(i + 1) % 4], floor) for i in range(4))
    return int(round(total / (2 * np.pi)))


# irrational split keeps symmetric root pairs off the cut lines
_SPLIT = 0.4813735


def _split(rect, frac=_SPLIT):
    x0, x1, y0, y1 = rect
    if (x1 - x0) >= (y1 - y0):
        xm = x0 + frac * (x1 - x0)
        return (x0, xm, y0, y1), (xm, x1, y0, y1)
    ym = y0 + frac * (y1 - y0)
    return (x0, x1, y0, ym), (x0, x1, ym, y1)


def _newton(P, dP, z, iters=100):
    for _ in range(iters):
        d = dP(z)
        if d == 0:
            break
        step = P(z) / d
        z = z - step
        if abs(step) <= 1e-16 * max(abs(z), 1.0):
            break
    return z


def _inside(z, rect, slack):
    x0, x1, y0, y1 = rect
    return x0 - slack <= z.real <= x1 + slack and y0 - slack <= z.imag <= y1 + slack


def _deflated_newton(P, dP, rect, count):
    """Newton from the rectangle centre with deflation; None unless every
    root lands inside ``rect`` and all are distinct."""
    x0, x1, y0, y1 = rect
    size = max(x1 - x0, y1 - y0)
    centre = complex((x0 + x1) / 2, (y0 + y1) / 2)
    Q, found = P, []
    for _ in range(count):
        if Q.degree() < 1:
            return None
        z = _newton(P, dP, _newton(Q, Q.deriv(), centre))
        if not _inside(z, rect, 1e-12 * max(size, 1e-3)):
            return None
        if any(abs(z - w) <= 1e-10 * max(abs(z), 1.0) for w in found):
            return None
        found.append(z)
        Q = Q // Polynomial([-z, 1.0])
    return found


def _isolate(P, dP, rect, count, floor, depth=0):
    if count <= 0:
        return []
    x0, x1, y0, y1 = rect
    size = max(x1 - x0, y1 - y0)
    centre = complex((x0 + x1) / 2, (y0 + y1) / 2)
    quick = _deflated_newton(P, dP, rect, count)
    if quick is not None:
        return quick
    if depth > 80 or size < 1e-14:
        # unresolvable cluster: treat as a multiple root
        return [_newton(P, dP, centre)] * count
    for frac in (_SPLIT, _SPLIT - 0.0371, _SPLIT + 0.0529):
        halves = _split(rect, frac)
        try:
            counts = [_winding(P, half, floor) for half in halves]
            break
        except _OnContour:
            continue
    else:
        return [_newton(P, dP, centre)] * count
    found = []
    for half, n in zip(halves, counts):
        found.extend(_isolate(P, dP, half, n, floor, depth + 1))
    return found


def search_rectangle(atom: AtomModel, res: SurfaceResonance):
    """Default search window in rad/s: ``(re_lo, re_hi, im_lo, im_hi)``.

    Re spans 0.5..1.5 times the frequencies involved; Im spans ten total
    linewidths below the axis plus a small margin above it so that undamped
    (real) roots are not on the contour.
    """
    lo = 0.5 * min(atom.omega_0, res.omega_c)
    hi = 1.5 * max(atom.omega_0, res.omega_c)
    damping = atom.gamma_vac + res.kappa_c
    pad = damping + 1e-6 * atom.omega_0
    return lo, hi, -10 * damping - pad, pad


def solve_azz_roots(atom: AtomModel, res: SurfaceResonance, coupling_prefactor=None,
                    rectangle=None, constants: PhysicalConstants = CODATA):
    """All zeros of A_zz inside the search rectangle, sorted by real part.

    The roots are counted with the argument principle applied to the
    pole-free numerator of A_zz, isolated by recursive subdivision of the
    rectangle, and polished with Newton's method until the numerator (in
    units of omega_0**3) is below 1e-8.
    """
    K = coupling_length(constants) if coupling_prefactor is None else coupling_prefactor
    w0 = atom.omega_0
    rect_si = search_rectangle(atom, res) if rectangle is None else tuple(rectangle)
    rect = tuple(x / w0 for x in rect_si)
    P = _scaled_polynomial(atom, res, K)
    dP = P.deriv()
    floor = 1e-300
    try:
        expected = _winding(P, rect, floor)
    except _OnContour:
        raise RootCountMismatchError(-1, 0, rect_si) from None
    candidates = _isolate(P, dP, rect, expected, floor)

    # tolerance on the pole-cleared numerator: A_zz itself loses all precision
    # for roots within ~1e-10 omega_0 of the Green-function pole (tiny chi)
    roots = [complex(z * w0) for z in candidates if abs(P(z)) < 1e-8]
    if len(roots) != expected:
        raise RootCountMismatchError(expected, len(roots), rect_si)
    return sorted(roots, key=lambda w: (w.real, w.imag))


# --- bridging simulated reflectivity to the pole model ------------------------------


@dataclass(frozen=True)
class ResonanceFit:
    """Single-pole fit ``r(omega) ~ background + residue / (omega - omega_c + i kappa_c)``.

    ``chi`` is reported as ``|residue|`` [rad/s]: the pole strength of the
    reflection amplitude.  Converting it to Green-function units needs a
    geometry-dependent factor that is not modelled here.
    """

    omega_c: float
    kappa_c: float
    chi: float
    background: complex
    residue: complex
    residual: float  # rms misfit relative to rms |r|

    @property
    def resonance(self) -> SurfaceResonance:
        return SurfaceResonance(self.omega_c, self.kappa_c, self.chi)


def _project(x, r, xc, k):
    basis = np.stack([np.ones_like(x, dtype=complex), 1.0 / (x - xc + 1j * k)], axis=1)
    coef, *_ = np.linalg.lstsq(basis, r, rcond=None)
    return coef, r - basis @ coef


def fit_surface_resonance(samples, max_residual=0.05) -> ResonanceFit:
    """Least-squares single-pole fit to ``(omega, r)`` samples of a bare stack.

    The linear parameters (background, residue) are eliminated by projection,
    leaving a two-parameter nonlinear fit for (omega_c, kappa_c).
    """
    samples = list(samples)
    if len(samples) < 8:
        raise ValueError("need at least 8 samples")
    omega = np.array([s[0] for s in samples], dtype=float)
    r = np.array([s[1] for s in samples], dtype=complex)
    order = np.argsort(omega)
    omega, r = omega[order], r[order]
    mid = 0.5 * (omega[0] + omega[-1])
    span = omega[-1] - omega[0]
    if not span > 0:
        raise ValueError("samples must span a frequency range")
    x = (omega - mid) / span
    scale = math.sqrt(np.mean(np.abs(r) ** 2)) or 1.0

    def fun(p):
        _, res = _project(x, r, p[0], math.exp(p[1]))
        return np.concatenate([res.real, res.imag]) / scale

    starts = {float(x[np.argmin(np.abs(r))])}
    dr = np.abs(np.diff(r))
    starts.add(float(0.5 * (x[np.argmax(dr)] + x[np.argmax(dr) + 1])))
    best = None
    for xc0 in sorted(starts):
        for k0 in (0.02, 0.1, 0.3):
            sol = least_squares(fun, [xc0, math.log(k0)], xtol=1e-14, ftol=1e-14, gtol=1e-14)
            if best is None or sol.cost < best.cost:
                best = sol
    xc, k = best.x[0], math.exp(best.x[1])
    coef, res = _project(x, r, xc, k)
    residual = math.sqrt(np.mean(np.abs(res) ** 2)) / scale
    a, b = coef
    if abs(b) / k <= 1e-6 * np.max(np.abs(r)):
        raise FitFailureError("no resonance pole present in samples", residual)
    if not -0.5 <= xc <= 0.5:
        raise FitFailureError("fitted resonance lies outside the sampled range", residual)
    if residual > max_residual:
        raise FitFailureError("single-pole model does not describe the samples", residual)
    return ResonanceFit(
        omega_c=float(mid + xc * span),
        kappa_c=float(k * span),
        chi=float(abs(b) * span),
        background=complex(a),
        residue=complex(b * span),
        residual=float(residual),
    )
