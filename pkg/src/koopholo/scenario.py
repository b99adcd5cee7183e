"""
Scenario and report schemas.

A scenario file is a JSON object (or an array of them for a batch):

    {
      "name": "cat-unitarity",
      "system": {"kind": "automorphism", "matrix": [[1, 1], [1, 2]]},
      "task": "unitarity",
      "task_params": {"sample_size": 100, "seed": 7}
    }

The system may also be written inline ({"omega": [1, 3], "t": 1, "task": ...});
a missing "kind" is inferred from the keys present.
"""

import json
import math
from typing import Annotated, Any, Dict, List, Literal, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, ValidationError, field_validator, model_validator

from .errors import KoopholoError, ScenarioError
from .koopman import ComposedOperator, KoopmanOperator, ToralAutomorphism, TorusTranslation
from .modes import KetVector

SCHEMA_VERSION = 1
TaskName = Literal["holonomy", "moving_frame", "hannay", "holonomy_sample", "unitarity", "cyclic"]

_SYSTEM_KEYS = {"omega": "translation", "matrix": "automorphism", "factors": "composed"}
_INLINE_SYSTEM_FIELDS = ("kind", "omega", "t", "matrix", "convention", "factors")


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid")


# --- systems ---
class TranslationSpec(_Spec):
    kind: Literal["translation"] = "translation"
    omega: List[float] = Field(min_length=1)
    t: float = 1.0

    @field_validator("omega")
    @classmethod
    def _finite(cls, value):
        if not all(math.isfinite(w) for w in value):
            raise ValueError("omega must be finite")
        return value


class AutomorphismSpec(_Spec):
    kind: Literal["automorphism"] = "automorphism"
    matrix: List[List[int]]
    convention: Literal["direct", "pullback"] = "direct"

    @field_validator("matrix")
    @classmethod
    def _unimodular(cls, value):
        try:
            ToralAutomorphism(value)
        except KoopholoError as e:
            raise ValueError(str(e)) from e
        return value


class ComposedSpec(_Spec):
    kind: Literal["composed"] = "composed"
    factors: List["SystemSpec"] = Field(min_length=1)


SystemSpec = Annotated[Union[TranslationSpec, AutomorphismSpec, ComposedSpec], Field(discriminator="kind")]
ComposedSpec.model_rebuild()


class AmplitudeSpec(_Spec):
    mode: List[int] = Field(min_length=1)
    re: float = 0.0
    im: float = 0.0


# --- loops in PH ---
class TwoModeCircleSpec(_Spec):
    kind: Literal["two_mode_circle"] = "two_mode_circle"
    theta: float
    resolution: int = Field(default=32, ge=2)
    modes: List[List[int]] = Field(default_factory=lambda: [[1, 0], [0, 1]], min_length=2, max_length=2)


class PolygonSpec(_Spec):
    kind: Literal["polygon"] = "polygon"
    nodes: List[List[AmplitudeSpec]] = Field(min_length=2)


class StoredLoopSpec(_Spec):
    kind: Literal["stored"] = "stored"
    path: str


class LuneSpec(_Spec):
    kind: Literal["lune"] = "lune"
    base: List[int]
    partner: List[int]
    theta: float


LoopSpec = Annotated[Union[TwoModeCircleSpec, PolygonSpec, StoredLoopSpec, LuneSpec], Field(discriminator="kind")]


# --- families and parameter loops ---
class CoherentRingSpec(_Spec):
    kind: Literal["coherent_ring"] = "coherent_ring"
    r: float = Field(gt=0)
    k_cut: Optional[int] = Field(default=None, ge=0)


class TabulatedSpec(_Spec):
    kind: Literal["tabulated"] = "tabulated"
    path: str
    period: Optional[float] = Field(default=None, gt=0)
    mode: Optional[List[int]] = None


class ConstantFamilySpec(_Spec):
    kind: Literal["constant"] = "constant"
    ket: List[AmplitudeSpec] = Field(min_length=1)


FamilySpec = Annotated[Union[CoherentRingSpec, TabulatedSpec, ConstantFamilySpec], Field(discriminator="kind")]


class AngleLoopSpec(_Spec):
    kind: Literal["angle"] = "angle"
    period: float = 2 * math.pi
    start: float = 0.0
    resolution: int = Field(default=32, ge=2)


class CircleLoopSpec(_Spec):
    kind: Literal["circle"] = "circle"
    center: List[float] = Field(min_length=2, max_length=2)
    radius: float = Field(gt=0)
    resolution: int = Field(default=32, ge=2)


class PolylineSpec(_Spec):
    kind: Literal["polyline"] = "polyline"
    points: List[List[float]] = Field(min_length=2)
    periods: Optional[List[Optional[float]]] = None


ParamLoopSpec = Annotated[Union[AngleLoopSpec, CircleLoopSpec, PolylineSpec], Field(discriminator="kind")]


# --- task parameters ---
class HolonomyParams(_Spec):
    loop: LoopSpec
    rtol: float = Field(default=1e-6, gt=0)
    max_doublings: Optional[int] = Field(default=None, ge=0)


class MovingFrameParams(_Spec):
    mode: List[int] = Field(min_length=1)
    theta: float
    frame_modes: List[List[int]] = Field(default_factory=list)
    partner: Optional[List[int]] = None
    rtol: float = Field(default=1e-6, gt=0)


class HannayParams(_Spec):
    family: FamilySpec
    loop: ParamLoopSpec = Field(default_factory=AngleLoopSpec)
    rtol: float = Field(default=1e-6, gt=0)
    max_doublings: Optional[int] = Field(default=None, ge=0)


class HolonomySampleParams(_Spec):
    basepoint: List[AmplitudeSpec] = Field(min_length=1)
    modes: List[List[int]] = Field(default_factory=list)
    n_loops: int = Field(default=200, ge=1)
    n_vertices: int = Field(default=3, ge=1)
    seed: int = 0


class UnitarityParams(_Spec):
    sample_size: int = Field(default=10, ge=1)
    n_max: int = Field(default=3, ge=0)
    support: int = Field(default=4, ge=1)
    seed: int = 0


class CyclicParams(_Spec):
    ket: List[AmplitudeSpec] = Field(min_length=1)
    period: float = Field(default=1.0, gt=0)
    rtol: float = Field(default=1e-6, gt=0)


PARAMS_MODELS = {
    "holonomy": HolonomyParams,
    "moving_frame": MovingFrameParams,
    "hannay": HannayParams,
    "holonomy_sample": HolonomySampleParams,
    "unitarity": UnitarityParams,
    "cyclic": CyclicParams,
}
_NEEDS_SYSTEM = {"moving_frame", "unitarity", "cyclic"}


def _infer_kind(system: Any) -> Any:
    if isinstance(system, dict) and "kind" not in system:
        for key, kind in _SYSTEM_KEYS.items():
            if key in system:
                system = {"kind": kind, **system}
                break
    if isinstance(system, dict) and isinstance(system.get("factors"), list):
        system = {**system, "factors": [_infer_kind(f) for f in system["factors"]]}
    return system


def _format_loc(loc: Sequence[Any]) -> str:
    return ".".join(str(part) for part in loc)


class Scenario(_Spec):
    schema_version: int = SCHEMA_VERSION
    name: str = "scenario"
    system: Optional[SystemSpec] = None
    task: TaskName
    task_params: Dict[str, Any] = Field(default_factory=dict)

    _params: Any = PrivateAttr(default=None)

    @model_validator(mode="before")
    @classmethod
    def _inline_system(cls, data):
        if not isinstance(data, dict):
            return data
        data = dict(data)
        if "system" not in data and any(k in data for k in _SYSTEM_KEYS):
            data["system"] = {k: data.pop(k) for k in _INLINE_SYSTEM_FIELDS if k in data}
        if "system" in data:
            data["system"] = _infer_kind(data["system"])
        return data

    @model_validator(mode="after")
    def _check_task(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"schema_version {self.schema_version} is not supported")
        try:
            self._params = PARAMS_MODELS[self.task].model_validate(self.task_params)
        except ValidationError as e:
            first = e.errors()[0]
            raise ValueError(f"task_params.{_format_loc(first['loc'])}: {first['msg']}") from None
        if self.task in _NEEDS_SYSTEM and self.system is None:
            raise ValueError(f"task {self.task!r} needs a system")
        if self.task == "cyclic" and not isinstance(self.system, TranslationSpec):
            raise ValueError("task 'cyclic' needs a translation system")
        if self.system is not None:
            dim = system_dim(self.system)
            for length in _mode_lengths(self._params):
                if length != dim:
                    raise ValueError(
                        f"dimension mismatch: system acts on T^{dim} but task_params use modes of length {length}"
                    )
        return self

    @property
    def params(self):
        return self._params


def system_dim(spec) -> int:
    if isinstance(spec, TranslationSpec):
        return len(spec.omega)
    if isinstance(spec, AutomorphismSpec):
        return len(spec.matrix)
    dims = {system_dim(f) for f in spec.factors}
    if len(dims) != 1:
        raise ValueError(f"composed factors act on tori of different dimensions {sorted(dims)}")
    return dims.pop()


def _mode_lengths(params) -> List[int]:
    lengths = []
    if isinstance(params, MovingFrameParams):
        lengths.append(len(params.mode))
        lengths.extend(len(m) for m in params.frame_modes)
        if params.partner is not None:
            lengths.append(len(params.partner))
    elif isinstance(params, (HolonomySampleParams,)):
        lengths.extend(len(a.mode) for a in params.basepoint)
        lengths.extend(len(m) for m in params.modes)
    elif isinstance(params, CyclicParams):
        lengths.extend(len(a.mode) for a in params.ket)
    return lengths


def build_operator(spec) -> KoopmanOperator:
    if isinstance(spec, TranslationSpec):
        return TorusTranslation(spec.omega, spec.t)
    if isinstance(spec, AutomorphismSpec):
        return ToralAutomorphism(spec.matrix, spec.convention)
    return ComposedOperator([build_operator(f) for f in spec.factors])


def build_ket(terms: Sequence[AmplitudeSpec]) -> KetVector:
    dims = {len(t.mode) for t in terms}
    if len(dims) != 1:
        raise ScenarioError(f"ket mixes mode lengths {sorted(dims)}")
    amplitudes: Dict[tuple, complex] = {}
    for t in terms:
        key = tuple(t.mode)
        amplitudes[key] = amplitudes.get(key, 0j) + complex(t.re, t.im)
    return KetVector(dims.pop(), amplitudes)


def _as_scenario(data: Any) -> Scenario:
    try:
        return Scenario.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        message = first["msg"]
        if message.startswith("Value error, "):
            message = message[len("Value error, "):]
        raise ScenarioError(message, _format_loc(first["loc"]) or None) from None


def parse_scenario(text: str) -> Scenario:
    """Parse and validate one scenario document."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"not valid JSON ({e.msg} at line {e.lineno})") from None
    if isinstance(data, list):
        raise ScenarioError("expected a single scenario, got a batch; use parse_scenarios")
    return _as_scenario(data)


def parse_scenarios(text: str) -> List[Scenario]:
    """Parse a scenario document or a batch (JSON array) of them."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"not valid JSON ({e.msg} at line {e.lineno})") from None
    items = data if isinstance(data, list) else [data]
    scenarios = []
    for i, item in enumerate(items):
        try:
            scenarios.append(_as_scenario(item))
        except ScenarioError as e:
            raise ScenarioError(str(e), f"[{i}]" if len(items) > 1 else None) from None
    seen = {}
    for i, scenario in enumerate(scenarios):
        if scenario.name in seen:
            raise ScenarioError(
                f"duplicate scenario name '{scenario.name}' (first used at [{seen[scenario.name]}]); "
                "batch outputs are named after scenarios",
                f"[{i}].name",
            )
        seen[scenario.name] = i
    return scenarios


def serialize_scenario(scenario: Scenario) -> str:
    return scenario.model_dump_json(indent=2)


def with_overrides(scenario: Scenario, seed: Optional[int] = None, rtol: Optional[float] = None) -> Scenario:
    data = scenario.model_dump()
    fields = PARAMS_MODELS[scenario.task].model_fields
    if seed is not None and "seed" in fields:
        data["task_params"]["seed"] = seed
    if rtol is not None and "rtol" in fields:
        data["task_params"]["rtol"] = rtol
    return _as_scenario(data)


# --- reports ---
class ConvergenceRow(BaseModel):
    level: int
    K: int
    phase: float
    delta: float


class Provenance(BaseModel):
    tool: str = "koopholo"
    version: str
    seed: Optional[int] = None
    tolerances: Dict[str, float] = Field(default_factory=dict)


class ReportError(BaseModel):
    type: str
    category: Literal["config", "numerical", "io"]
    message: str


def _check_finite(value: Any, where: str = "results"):
    if isinstance(value, float) and not math.isfinite(value):
        raise ValueError(f"{where} is not finite")
    if isinstance(value, dict):
        for k, v in value.items():
            _check_finite(v, f"{where}.{k}")
    if isinstance(value, (list, tuple)):
        for i, v in enumerate(value):
            _check_finite(v, f"{where}[{i}]")


class Report(BaseModel):
    schema_version: int = SCHEMA_VERSION
    status: Literal["ok", "failed"]
    scenario: Dict[str, Any]
    results: Dict[str, Any] = Field(default_factory=dict)
    convergence: Optional[List[ConvergenceRow]] = None
    provenance: Provenance
    error: Optional[ReportError] = None

    @field_validator("results")
    @classmethod
    def _finite_results(cls, value):
        _check_finite(value)
        return value

    @field_validator("convergence")
    @classmethod
    def _ordered_levels(cls, value):
        if value is not None:
            levels = [row.level for row in value]
            if levels != sorted(levels):
                raise ValueError("convergence rows must be ordered by refinement level")
            _check_finite([row.phase for row in value] + [row.delta for row in value], "convergence")
        return value
