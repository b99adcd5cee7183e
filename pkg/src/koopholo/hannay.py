"""
Hannay phase as the holonomy of the Stiefel connection pulled back along an
eigenfamily map f_n(R) = |n,R><n,R| from a parameter space M into PH.

Refinement always subdivides the loop in M and re-queries the section; the
pulled-back connection lives over M, so shortcuts along PH geodesics would
compute the holonomy of a different (inscribed) loop.
"""

import cmath
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import ive

from .errors import CutoffTooSmallError, FamilyDiscontinuityError, SectionImpurityError
from .holonomy import RayLoop, RefinementLevel, SampledLoop, holonomy_at
from .koopman import KoopmanOperator, ToralAutomorphism, wrap_phase
from .models import Tolerances, resolve
from .modes import KetVector, ModeIndex, as_mode, inner, normalize

logger = logging.getLogger(__name__)

ParameterPoint = Tuple[float, ...]

_TAIL_BOUND = 1e-16


def as_point(coords: Union[float, Sequence[float]]) -> ParameterPoint:
    if isinstance(coords, (int, float)):
        coords = (coords,)
    point = tuple(float(c) for c in coords)
    if not point or not all(math.isfinite(c) for c in point):
        raise ValueError(f"parameter point must have finite coordinates, got {coords}")
    return point


class ParamLoop:
    """Closed loop in a chart of M, based at its first sample.

    A loop is either a curve s -> R(s) on [0, 1), refined by evaluating the
    curve more densely, or a fixed sample sequence, refined by linear
    subdivision in the chart (periodic coordinates take the short way round).
    """

    def __init__(
        self,
        samples: Optional[Sequence[Sequence[float]]] = None,
        curve: Optional[Callable[[float], Sequence[float]]] = None,
        resolution: Optional[int] = None,
        periods: Optional[Sequence[Optional[float]]] = None,
    ):
        if (samples is None) == (curve is None):
            raise ValueError("give either samples or a curve")
        self.curve = curve
        self.periods = tuple(periods) if periods is not None else None
        if samples is not None:
            self._samples = [as_point(p) for p in samples]
            if len(self._samples) < 2:
                raise ValueError("a parameter loop needs at least 2 samples")
            self.resolution = len(self._samples)
        else:
            self._samples = None
            self.resolution = resolution or 32
            if self.resolution < 2:
                raise ValueError("resolution must be >= 2")

    @classmethod
    def from_samples(cls, points: Sequence[Sequence[float]], periods: Optional[Sequence[Optional[float]]] = None) -> "ParamLoop":
        return cls(samples=points, periods=periods)

    @classmethod
    def from_curve(cls, curve: Callable[[float], Sequence[float]], resolution: int = 32) -> "ParamLoop":
        return cls(curve=curve, resolution=resolution)

    @classmethod
    def angle(cls, period: float = 2 * math.pi, resolution: int = 32, start: float = 0.0) -> "ParamLoop":
        """One turn of a periodic coordinate, beta = start + period * s."""
        return cls.from_curve(lambda s: (start + period * s,), resolution)

    @classmethod
    def circle(cls, center: Sequence[float], radius: float, resolution: int = 32) -> "ParamLoop":
        cx, cy = as_point(center)
        return cls.from_curve(
            lambda s: (cx + radius * math.cos(2 * math.pi * s), cy + radius * math.sin(2 * math.pi * s)),
            resolution,
        )

    @property
    def samples(self) -> List[ParameterPoint]:
        return self.at_resolution(self.resolution)

    @property
    def basepoint(self) -> ParameterPoint:
        return self.samples[0]

    def at_resolution(self, resolution: int) -> List[ParameterPoint]:
        if self.curve is not None:
            return [as_point(self.curve(k / resolution)) for k in range(resolution)]
        n = len(self._samples)
        if resolution % n:
            raise ValueError(f"sampled loop of {n} points cannot be subdivided into {resolution}")
        per_segment = resolution // n
        points = []
        for i, start in enumerate(self._samples):
            step = self._difference(start, self._samples[(i + 1) % n])
            for j in range(per_segment):
                t = j / per_segment
                points.append(tuple(a + t * d for a, d in zip(start, step)))
        return points

    def _difference(self, a: ParameterPoint, b: ParameterPoint) -> Tuple[float, ...]:
        diff = [y - x for x, y in zip(a, b)]
        if self.periods:
            for i, period in enumerate(self.periods):
                if period:
                    diff[i] = math.remainder(diff[i], period)
        return tuple(diff)

    def reversed(self) -> "ParamLoop":
        if self.curve is not None:
            curve = self.curve
            return ParamLoop.from_curve(lambda s: curve((1.0 - s) % 1.0), self.resolution)
        return ParamLoop.from_samples([self._samples[0]] + self._samples[:0:-1], self.periods)

    def reparametrized(self, warp: Callable[[float], float]) -> "ParamLoop":
        """Same image curve traversed as s -> R(warp(s)); warp must be increasing with warp(0) = 0, warp(1) = 1."""
        if self.curve is None:
            raise ValueError("only curve loops can be reparametrized")
        curve = self.curve
        return ParamLoop.from_curve(lambda s: curve(warp(s)), self.resolution)

    def rotated(self, shift: float) -> "ParamLoop":
        """Move the basepoint forward by a fraction of the loop."""
        if self.curve is not None:
            curve = self.curve
            return ParamLoop.from_curve(lambda s: curve((s + shift) % 1.0), self.resolution)
        k = int(round(shift * len(self._samples))) % len(self._samples)
        return ParamLoop.from_samples(self._samples[k:] + self._samples[:k], self.periods)


class EigenFamily:
    """Mode label n together with its section R -> |n, R>."""

    def __init__(self, mode: Sequence[int], section: Callable[[ParameterPoint], KetVector], name: str = "custom"):
        self.mode = as_mode(mode)
        self.section = section
        self.name = name

    def evaluate(self, point: Sequence[float]) -> KetVector:
        return normalize(self.section(as_point(point)))

    def __call__(self, point: Sequence[float]) -> KetVector:
        return self.evaluate(point)

    def __repr__(self) -> str:
        return f"EigenFamily({self.name!r}, mode={self.mode})"


class PullbackLoop(SampledLoop):
    """The ParamLoop pushed into PH by the family; re-sampled in M on refinement."""

    def __init__(self, family: EigenFamily, loop: ParamLoop, tolerances: Optional[Tolerances] = None):
        self.family = family
        self.loop = loop
        self.resolution = loop.resolution
        self.tolerances = resolve(tolerances)

    def at_resolution(self, resolution: int) -> RayLoop:
        points = self.loop.at_resolution(resolution)
        kets = [self.family.evaluate(p) for p in points]
        again = self.family.evaluate(points[0])
        if again.distance(kets[0]) > self.tolerances.purity:
            raise SectionImpurityError(f"section of {self.family.name!r} is not reproducible at {points[0]}")
        ray_loop = RayLoop.from_kets(kets, self.tolerances)
        weak = np.flatnonzero(np.abs(ray_loop.overlaps()) <= self.tolerances.overlap)
        if weak.size:
            raise FamilyDiscontinuityError(int(weak[0]))
        return ray_loop


@dataclass(frozen=True)
class HannayRecord:
    phase: float
    mode: ModeIndex
    loop_resolution: int
    refinement_error: float
    levels: Tuple[RefinementLevel, ...] = field(default_factory=tuple)


def pullback_loop(family: EigenFamily, loop: ParamLoop, tolerances: Optional[Tolerances] = None) -> PullbackLoop:
    return PullbackLoop(family, loop, tolerances)


def pullback_ray_loop(family: EigenFamily, loop: ParamLoop, tolerances: Optional[Tolerances] = None) -> RayLoop:
    return PullbackLoop(family, loop, tolerances).at_resolution(loop.resolution)


def hannay_phase(
    family: EigenFamily,
    loop: ParamLoop,
    rtol: Optional[float] = None,
    tolerances: Optional[Tolerances] = None,
    max_doublings: Optional[int] = None,
) -> HannayRecord:
    result = holonomy_at(PullbackLoop(family, loop, tolerances), rtol, tolerances, max_doublings)
    logger.info("hannay phase of %r: %.12f at K=%d", family.name, result.phase, result.resolution)
    return HannayRecord(result.phase, family.mode, result.resolution, result.refinement_error, result.levels)


def adiabatic_eigen_check(
    family: EigenFamily,
    op_at: Callable[[ParameterPoint], KoopmanOperator],
    loop: ParamLoop,
) -> float:
    """max over the loop samples of ||U psi - <psi|U psi> psi||."""
    worst = 0.0
    for point in loop.samples:
        psi = family.evaluate(point)
        image = op_at(point).apply(psi)
        residual = image - psi.scaled(inner(psi, image))
        worst = max(worst, residual.norm())
    return worst


# --- built-in families ---
def constant_family(ket: KetVector, mode: Optional[Sequence[int]] = None) -> EigenFamily:
    fixed = normalize(ket)
    return EigenFamily(mode or min(fixed.amplitudes), lambda point: fixed, name="constant")


def pure_phase_family(
    ket: KetVector,
    chi: Callable[[ParameterPoint], float],
    mode: Optional[Sequence[int]] = None,
) -> EigenFamily:
    fixed = normalize(ket)
    return EigenFamily(mode or min(fixed.amplitudes), lambda point: fixed.phase_shifted(chi(point)), name="pure_phase")


def regauged(family: EigenFamily, chi: Callable[[ParameterPoint], float]) -> EigenFamily:
    """Same rays, section multiplied by exp(i chi(R))."""
    return EigenFamily(
        family.mode,
        lambda point: family.section(point).phase_shifted(chi(point)),
        name=f"{family.name}+gauge",
    )


def _coherent_terms(r: float):
    terms = [1.0]
    k = 0
    while True:
        k += 1
        terms.append(terms[-1] * r * r / (k * k))
        if k > r * r and terms[-1] < _TAIL_BOUND * 1e-6:
            return terms


def required_coherent_cut(r: float) -> int:
    """Smallest k_cut with sum_{k > k_cut} r^2k / (k!)^2 below 1e-16."""
    terms = _coherent_terms(r)
    tail = 0.0
    for k in range(len(terms) - 1, -1, -1):
        if tail + terms[k] >= _TAIL_BOUND:
            return k
        tail += terms[k]
    return 0


def coherent_ring_family(r: float, k_cut: Optional[int] = None) -> EigenFamily:
    """Section over the circle beta: amplitudes (r e^{i beta})^k / k! on one-dimensional modes k."""
    if not r > 0:
        raise ValueError(f"coherent ring radius must be positive, got {r}")
    required = required_coherent_cut(r)
    if k_cut is None:
        k_cut = required
    elif k_cut < required:
        raise CutoffTooSmallError(k_cut, required)
    weights = [1.0]
    for k in range(1, k_cut + 1):
        weights.append(weights[-1] * r / k)

    def section(point: ParameterPoint) -> KetVector:
        beta = point[0]
        return KetVector(1, {(k,): w * cmath.exp(1j * k * beta) for k, w in enumerate(weights)})

    return EigenFamily((0,), section, name=f"coherent_ring(r={r})")


def coherent_ring_mean_mode(r: float) -> float:
    """Mean mode number r I1(2r) / I0(2r) of the coherent ring."""
    return r * float(ive(1, 2 * r) / ive(0, 2 * r))


def coherent_ring_phase(r: float) -> float:
    """Exact pullback holonomy of one positive turn of the coherent ring."""
    return wrap_phase(-2 * math.pi * coherent_ring_mean_mode(r))


def orbit_family(op: ToralAutomorphism, n: Sequence[int]) -> EigenFamily:
    """Section k -> |C^k n> over an integer chart (coordinates are rounded)."""
    start = as_mode(n)

    def section(point: ParameterPoint) -> KetVector:
        k = int(round(point[0]))
        mode = start
        step = op if k >= 0 else op.inverse()
        for _ in range(abs(k)):
            mode = step.act(mode)
        return KetVector.basis(mode)

    return EigenFamily(start, section, name="automorphism_orbit")


def read_tabulated_family(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path)


def tabulated_family(
    table: Union[str, Path, pd.DataFrame],
    period: Optional[float] = None,
    mode: Optional[Sequence[int]] = None,
) -> EigenFamily:
    """Family sampled on a one-dimensional chart and interpolated linearly.

    Columns: param_0, mode_0 .. mode_{d-1}, re, im; one row per
    (parameter value, mode). Between parameter values the amplitudes are
    interpolated linearly and the result renormalized; with a period the
    chart wraps around.
    """
    frame = table if isinstance(table, pd.DataFrame) else read_tabulated_family(table)
    params = sorted(c for c in frame.columns if c.startswith("param_"))
    mode_cols = sorted((c for c in frame.columns if c.startswith("mode_")), key=lambda c: int(c.split("_")[1]))
    missing = {"re", "im"} - set(frame.columns)
    if missing or not mode_cols:
        raise ValueError(f"tabulated family needs mode_* columns and re, im; missing {sorted(missing) or ['mode_*']}")
    if len(params) != 1:
        raise ValueError(f"tabulated families support a one-dimensional chart, got {len(params)} param columns")
    dim = len(mode_cols)
    grid = np.array(sorted(frame[params[0]].astype(float).unique()))
    modes: List[ModeIndex] = sorted({tuple(int(x) for x in row) for row in frame[mode_cols].itertuples(index=False)})
    index = {m: i for i, m in enumerate(modes)}
    position = {x: i for i, x in enumerate(grid)}
    values = np.zeros((len(grid), len(modes)), dtype=np.complex128)
    for row in frame.itertuples(index=False):
        record = row._asdict()
        m = tuple(int(record[c]) for c in mode_cols)
        values[position[float(record[params[0]])], index[m]] = complex(record["re"], record["im"])

    def section(point: ParameterPoint) -> KetVector:
        s = point[0]
        dense = [
            complex(
                np.interp(s, grid, values[:, i].real, period=period),
                np.interp(s, grid, values[:, i].imag, period=period),
            )
            for i in range(len(modes))
        ]
        return KetVector.from_dense(modes, dense, dim)

    label = as_mode(mode) if mode is not None else modes[0]
    return EigenFamily(label, section, name="tabulated")
