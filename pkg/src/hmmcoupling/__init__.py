"""Weak-to-strong coupling of dye ensembles on a hyperbolic metamaterial film.

Dispersive materials, layered effective-medium homogenization, uniaxial
transfer-matrix reflectivity, coupled-oscillator polariton modes and
reflectivity-dip analysis for Kretschmann-Raether sensing.
"""
from .errors import (
    BandEdgeNotFoundError,
    ConfigError,
    DegenerateInterfaceError,
    DipCountError,
    EstimationError,
    FitFailureError,
    HMMCouplingError,
    NumericalError,
    RootCountMismatchError,
    SingularInputError,
    WavelengthRangeError,
)
from .homogenization import (
    BandEdges,
    BandType,
    HomogenizationSpec,
    UniaxialMedium,
    UniaxialPermittivity,
    band_map,
    calibrate_drude,
    classify_band,
    default_hmm,
    emt_uniaxial,
    find_band_edges,
)
from .materials import (
    CODATA,
    SILICA,
    SILVER,
    TIO2,
    Constant,
    Drude,
    DyeModel,
    Lorentz,
    PhysicalConstants,
    Tabulated,
    dye_plasma_frequency,
    dye_permittivity,
    evaluate_permittivity,
    omega_to_wavelength,
    wavelength_to_omega,
)
from .polariton import (
    AtomModel,
    CoupledModeResult,
    Regime,
    ResonanceFit,
    SurfaceResonance,
    azz,
    classify_coupling,
    coupled_eigenfrequencies,
    fit_surface_resonance,
    rabi_estimate,
    rabi_splitting_meV,
    solve_azz_roots,
    vacuum_decay_rate,
)
from .presets import kretschmann_stack, r6g
from .spectra import (
    Dip,
    DipReport,
    SensingCurve,
    Spectrum,
    concentration_sweep,
    estimate_concentration,
    find_dips,
    simulate_spectrum,
    splitting_energy,
)
from .tmm import (
    Layer,
    PlaneWaveState,
    ReflectivityMap,
    Stack,
    reflectance,
    reflectivity_map,
    stack_reflection,
)

__version__ = "0.1.0"
