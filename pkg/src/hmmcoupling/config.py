"""Job configuration: a JSON document describing materials, the stack,
sweep grids and analysis settings.

Units in the file are nm, degrees and mol/l; rates are rad/s.  Everything
is converted to SI when the simulation objects are built.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError
from .homogenization import HomogenizationSpec, UniaxialMedium
from .materials import Constant, Drude, DyeModel, Lorentz, Tabulated
from .tmm import Layer, Stack

SCHEMA_VERSION = 1
DATA_DIR = Path(__file__).parent / "data"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ConstantSpec(_Strict):
    model: Literal["constant"]
    eps: float
    eps_im: float = Field(0.0, ge=0)


class DrudeSpec(_Strict):
    model: Literal["drude"]
    eps_inf: float
    omega_p: float = Field(ge=0)
    gamma: float = Field(ge=0)


class LorentzSpec(_Strict):
    model: Literal["lorentz"]
    eps_b: float = 1.0
    omega_p: float = Field(ge=0)
    omega_0: float = Field(ge=0)
    gamma: float = Field(ge=0)


class TabulatedSpec(_Strict):
    model: Literal["tabulated"]
    csv: Optional[str] = None
    data: Optional[List[Tuple[float, float, float]]] = None  # (wavelength_nm, eps_re, eps_im)

    @model_validator(mode="after")
    def _one_source(self):
        if (self.csv is None) == (self.data is None):
            raise ValueError("give exactly one of 'csv' or 'data'")
        return self


class DyeSpec(_Strict):
    model: Literal["dye"]
    omega_0: float = Field(3.5e15, gt=0)
    gamma: float = Field(2.07e14, gt=0)
    h: float = Field(0.74, gt=0, le=1)
    concentration: float = Field(0.0, ge=0)  # mol/l
    host_eps: float = 1.0


class EMTSpec(_Strict):
    model: Literal["emt"]
    metal: str
    dielectric: str
    fill_fraction: float = Field(ge=0, le=1)


class UniaxialSpec(_Strict):
    model: Literal["uniaxial"]
    eps_perp: str
    eps_par: str


MaterialSpec = Annotated[
    Union[ConstantSpec, DrudeSpec, LorentzSpec, TabulatedSpec, DyeSpec, EMTSpec, UniaxialSpec],
    Field(discriminator="model"),
]
ISOTROPIC = (ConstantSpec, DrudeSpec, LorentzSpec, TabulatedSpec, DyeSpec)


class LayerSpec(_Strict):
    material: str
    thickness_nm: float = Field(gt=0)


class StackSpec(_Strict):
    incidence: str
    layers: List[LayerSpec] = []
    substrate: str


class RangeSpec(_Strict):
    start: float
    stop: float
    step: float = Field(gt=0)

    @model_validator(mode="after")
    def _ordered(self):
        if self.stop < self.start:
            raise ValueError("stop must be >= start")
        return self

    def grid(self):
        """Inclusive grid ``start, start+step, ..., <= stop``."""
        n = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(n)


class SweepSpec(_Strict):
    lambda_nm: RangeSpec = RangeSpec(start=400, stop=700, step=0.5)
    theta_deg: RangeSpec = RangeSpec(start=40, stop=60, step=0.25)
    angle_deg: float = Field(48.0, ge=0, lt=90)
    concentrations_M: List[float] = [0.0, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1]
    polarization: Literal["p", "s"] = "p"

    @model_validator(mode="after")
    def _sorted(self):
        c = self.concentrations_M
        if any(x < 0 for x in c) or any(b < a for a, b in zip(c, c[1:])):
            raise ValueError("concentrations_M must be nonnegative and sorted")
        return self


class AnalysisSpec(_Strict):
    prominence: float = Field(0.02, ge=0)
    window_nm: Optional[Tuple[float, float]] = (450.0, 650.0)
    map_window_nm: Optional[Tuple[float, float]] = None  # None: whole map grid
    band_window_nm: Tuple[float, float] = (350.0, 650.0)
    band_resolution_nm: float = Field(1.0, gt=0)
    hmm_material: Optional[str] = None  # default: first EMT material in the stack


class ModesSpec(_Strict):
    omega_0: float = Field(gt=0)
    gamma_vac: Optional[float] = Field(None, ge=0)  # default: free-space rate at omega_0
    omega_c: Optional[float] = Field(None, gt=0)  # default: omega_0
    kappa_c: float = Field(gt=0)
    g: Optional[float] = Field(None, ge=0)
    chi: Optional[float] = Field(None, ge=0)

    @model_validator(mode="after")
    def _coupling(self):
        if (self.g is None) == (self.chi is None):
            raise ValueError("give exactly one of 'g' or 'chi'")
        return self


class FitSpec(_Strict):
    window_nm: Tuple[float, float] = (500.0, 580.0)
    step_nm: float = Field(1.0, gt=0)
    max_residual: float = Field(0.05, gt=0)


class EstimateSpec(_Strict):
    observable: Literal["R_min", "lambda_1", "splitting_meV"] = "R_min"
    value: float  # lambda_1 in nm
    concentrations_M: Optional[List[float]] = None  # calibration grid; default: sweep grid

    @model_validator(mode="after")
    def _sorted(self):
        c = self.concentrations_M
        if c is not None and (any(x < 0 for x in c) or any(b <= a for a, b in zip(c, c[1:]))):
            raise ValueError("concentrations_M must be nonnegative and strictly increasing")
        return self


class OutputSpec(_Strict):
    dir: str = "out"


class JobConfig(_Strict):
    schema_version: Literal[1]
    description: str = ""
    materials: Dict[str, MaterialSpec]
    stack: StackSpec
    sweep: SweepSpec = SweepSpec()
    analysis: AnalysisSpec = AnalysisSpec()
    modes: Optional[ModesSpec] = None
    fit: FitSpec = FitSpec()
    estimate: Optional[EstimateSpec] = None
    output: OutputSpec = OutputSpec()


def _reference_violations(cfg: JobConfig) -> List[str]:
    names = set(cfg.materials)
    out = []

    def need(name, path, isotropic=False):
        if name not in names:
            out.append(f"{path}: undefined material '{name}'")
        elif isotropic and not isinstance(cfg.materials[name], ISOTROPIC):
            out.append(f"{path}: material '{name}' must be isotropic")

    for key, spec in cfg.materials.items():
        if isinstance(spec, EMTSpec):
            need(spec.metal, f"materials.{key}.metal", True)
            need(spec.dielectric, f"materials.{key}.dielectric", True)
        elif isinstance(spec, UniaxialSpec):
            need(spec.eps_perp, f"materials.{key}.eps_perp", True)
            need(spec.eps_par, f"materials.{key}.eps_par", True)
    need(cfg.stack.incidence, "stack.incidence", True)
    for i, layer in enumerate(cfg.stack.layers):
        need(layer.material, f"stack.layers.{i}.material")
    need(cfg.stack.substrate, "stack.substrate")
    if cfg.analysis.hmm_material is not None:
        need(cfg.analysis.hmm_material, "analysis.hmm_material")
    return out


def _format_pydantic(exc: ValidationError) -> List[str]:
    lines = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{path}: {err['msg']}")
    return lines


def parse_config(text: str) -> JobConfig:
    """Validate a JSON configuration; raises ConfigError listing every violation."""
    if not text.strip():
        raise ConfigError(["<root>: empty configuration"])
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from None
    if not isinstance(raw, dict):
        raise ConfigError(["<root>: configuration must be a JSON object"])
    try:
        cfg = JobConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(_format_pydantic(exc)) from None
    violations = _reference_violations(cfg)
    if violations:
        raise ConfigError(violations)
    return cfg


def dump_config(cfg: JobConfig) -> str:
    return cfg.model_dump_json(indent=2) + "\n"


def shipped_config(name="kretschmann_r6g") -> Path:
    return DATA_DIR / f"{name}.json"


def load_config(path) -> Tuple[JobConfig, Path]:
    """Read a config file (or the name of a shipped one) and return it with its directory."""
    p = Path(path)
    if not p.exists() and shipped_config(str(path)).exists():
        p = shipped_config(str(path))
    text = p.read_text(encoding="utf-8")
    return parse_config(text), p.resolve().parent


def build_material(cfg: JobConfig, name: str, base_dir: Path = Path(".")):
    spec = cfg.materials[name]
    if isinstance(spec, ConstantSpec):
        return Constant(complex(spec.eps, spec.eps_im))
    if isinstance(spec, DrudeSpec):
        return Drude(spec.eps_inf, spec.omega_p, spec.gamma)
    if isinstance(spec, LorentzSpec):
        return Lorentz(spec.eps_b, spec.omega_p, spec.omega_0, spec.gamma)
    if isinstance(spec, TabulatedSpec):
        if spec.csv is not None:
            return Tabulated.from_csv(Path(base_dir) / spec.csv)
        return Tabulated(tuple(r[0] * 1e-9 for r in spec.data),
                         tuple(complex(r[1], r[2]) for r in spec.data))
    if isinstance(spec, DyeSpec):
        return DyeModel(omega_0=spec.omega_0, gamma=spec.gamma, h=spec.h,
                        concentration=spec.concentration, host_eps=spec.host_eps)
    if isinstance(spec, EMTSpec):
        return HomogenizationSpec(build_material(cfg, spec.metal, base_dir),
                                  build_material(cfg, spec.dielectric, base_dir),
                                  spec.fill_fraction)
    if isinstance(spec, UniaxialSpec):
        return UniaxialMedium(build_material(cfg, spec.eps_perp, base_dir),
                              build_material(cfg, spec.eps_par, base_dir))
    raise TypeError(f"unsupported material spec {type(spec).__name__}")


def build_stack(cfg: JobConfig, base_dir: Path = Path(".")) -> Stack:
    s = cfg.stack
    layers = [Layer(build_material(cfg, layer.material, base_dir), layer.thickness_nm * 1e-9)
              for layer in s.layers]
    return Stack(build_material(cfg, s.incidence, base_dir), layers,
                 build_material(cfg, s.substrate, base_dir))


def hmm_material_name(cfg: JobConfig) -> str:
    if cfg.analysis.hmm_material is not None:
        return cfg.analysis.hmm_material
    for layer in cfg.stack.layers:
        if isinstance(cfg.materials[layer.material], EMTSpec):
            return layer.material
    for name, spec in cfg.materials.items():
        if isinstance(spec, EMTSpec):
            return name
    raise ConfigError(["analysis.hmm_material: no EMT material defined"])
