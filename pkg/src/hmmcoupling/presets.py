"""Ready-made Kretschmann-Raether geometry: silica prism / Ag-TiO2 HMM film / R6G solution."""
from .homogenization import default_hmm
from .materials import SILICA, DyeModel
from .tmm import Layer, Stack

HMM_THICKNESS = 50e-9
FILL_FRACTION = 0.6


def r6g(concentration=0.0, **overrides) -> DyeModel:
    """Rhodamine 6G in solution; resonance near 538 nm."""
    params = dict(omega_0=3.5e15, gamma=2.07e14, h=0.74, host_eps=1.0)
    params.update(overrides)
    return DyeModel(concentration=concentration, **params)


def kretschmann_stack(concentration=0.0, thickness=HMM_THICKNESS,
                      fill_fraction=FILL_FRACTION, dye_thickness=None, **dye_overrides) -> Stack:
    """Prism / EMT film / dye.  The dye is semi-infinite unless ``dye_thickness`` is given,
    in which case it sits on a vacuum substrate."""
    dye = r6g(concentration, **dye_overrides)
    layers = [Layer(default_hmm(fill_fraction), thickness)]
    if dye_thickness is None:
        return Stack(SILICA, layers, dye)
    return Stack(SILICA, layers + [Layer(dye, dye_thickness)], 1.0)
