"""
Holonomy of the Stiefel connection on the U(1) bundle S(H) -> PH.

Discrete loops of rays are evaluated through the Bargmann product

    theta = -arg prod_k <psi_k | psi_{k+1 mod K}>

which is exactly gauge invariant at every resolution, and cross-checked
against an explicit horizontal lift. Loops given as curves are refined by
re-sampling the curve; plain ray loops are refined along PH geodesics.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConvergenceError, DimensionMismatchError, OrthogonalNeighborsError, TrivialHolonomyError
from .koopman import wrap_phase
from .models import Tolerances, resolve
from .modes import KetVector, ModeIndex, Ray, as_mode, inner, random_ket, to_ray

logger = logging.getLogger(__name__)

# Random polygon vertices closer than this to orthogonal are redrawn.
_MIN_SAMPLE_OVERLAP = 1e-3


def phase_distance(a: float, b: float) -> float:
    """Distance between two angles on the circle."""
    return abs(wrap_phase(a - b))


@dataclass(frozen=True)
class RefinementLevel:
    level: int
    resolution: int
    phase: float
    delta: float

    def to_dict(self) -> dict:
        return {"level": self.level, "K": self.resolution, "phase": self.phase, "delta": self.delta}


@dataclass(frozen=True)
class HolonomyResult:
    phase: float
    min_overlap: float
    refinement_error: float = 0.0
    resolution: int = 0
    levels: Tuple[RefinementLevel, ...] = field(default_factory=tuple)

    @property
    def holonomy(self) -> complex:
        return complex(math.cos(self.phase), math.sin(self.phase))


class RayLoop:
    """Closed polygon of rays; node K-1 connects back to node 0 (the basepoint)."""

    def __init__(self, nodes: Sequence[Ray]):
        nodes = list(nodes)
        if len(nodes) < 2:
            raise ValueError(f"a loop needs at least 2 nodes, got {len(nodes)}")
        dim = nodes[0].dim
        for node in nodes[1:]:
            if node.dim != dim:
                raise DimensionMismatchError(dim, node.dim)
        self.nodes = nodes
        self._dense = None

    @classmethod
    def from_kets(cls, kets: Sequence[KetVector], tolerances: Optional[Tolerances] = None) -> "RayLoop":
        return cls([to_ray(k, tolerances) for k in kets])

    @classmethod
    def from_dense(cls, modes: Sequence[ModeIndex], rows: np.ndarray, tolerances: Optional[Tolerances] = None) -> "RayLoop":
        dim = len(modes[0])
        return cls([to_ray(KetVector.from_dense(modes, row, dim), tolerances) for row in rows])

    @property
    def dim(self) -> int:
        return self.nodes[0].dim

    @property
    def basepoint(self) -> Ray:
        return self.nodes[0]

    def __len__(self) -> int:
        return len(self.nodes)

    def modes(self) -> List[ModeIndex]:
        return sorted({m for node in self.nodes for m in node.representative.amplitudes})

    def to_dense(self) -> Tuple[List[ModeIndex], np.ndarray]:
        """Representatives as rows of a K x D matrix over the union of supports."""
        if self._dense is None:
            modes = self.modes()
            matrix = np.array([node.representative.to_dense(modes) for node in self.nodes])
            self._dense = (modes, matrix)
        return self._dense

    def overlaps(self) -> np.ndarray:
        """<psi_k | psi_{k+1 mod K}> for every segment, closing pair last."""
        _, matrix = self.to_dense()
        return np.einsum("kd,kd->k", matrix.conj(), np.roll(matrix, -1, axis=0))

    def min_overlap(self) -> float:
        return float(np.min(np.abs(self.overlaps())))

    def is_constant(self, tolerances: Optional[Tolerances] = None) -> bool:
        return self.min_overlap() >= 1.0 - resolve(tolerances).ray_equality

    def reversed(self) -> "RayLoop":
        return RayLoop([self.nodes[0]] + self.nodes[:0:-1])

    def rotated(self, shift: int) -> "RayLoop":
        shift %= len(self.nodes)
        return RayLoop(self.nodes[shift:] + self.nodes[:shift])

    def __repr__(self) -> str:
        return f"RayLoop(K={len(self.nodes)}, dim={self.dim})"


class SampledLoop(ABC):
    """Loop in PH that can be evaluated at any number of samples."""

    resolution: int

    @abstractmethod
    def at_resolution(self, resolution: int) -> RayLoop:
        pass


class CurveLoop(SampledLoop):
    """Loop s -> curve(s) for s in [0, 1), curve(1) on the ray of curve(0)."""

    def __init__(
        self,
        curve: Callable[[float], KetVector],
        resolution: int = 32,
        tolerances: Optional[Tolerances] = None,
    ):
        if resolution < 2:
            raise ValueError("resolution must be >= 2")
        self.curve = curve
        self.resolution = resolution
        self.tolerances = tolerances

    def at_resolution(self, resolution: int) -> RayLoop:
        return RayLoop([to_ray(self.curve(k / resolution), self.tolerances) for k in range(resolution)])


LoopLike = Union[RayLoop, SampledLoop]


def _checked_overlaps(loop: RayLoop, tolerances: Tolerances) -> np.ndarray:
    overlaps = loop.overlaps()
    bad = np.flatnonzero(np.abs(overlaps) <= tolerances.overlap)
    if bad.size:
        raise OrthogonalNeighborsError(index=int(bad[0]))
    return overlaps


def pancharatnam_phase(loop: RayLoop, tolerances: Optional[Tolerances] = None) -> HolonomyResult:
    tolerances = resolve(tolerances)
    overlaps = _checked_overlaps(loop, tolerances)
    phase = wrap_phase(-math.fsum(np.angle(overlaps)))
    return HolonomyResult(phase=phase, min_overlap=float(np.min(np.abs(overlaps))), resolution=len(loop))


def horizontal_lift(loop: RayLoop, tolerances: Optional[Tolerances] = None) -> np.ndarray:
    """Representatives phi_k with <phi_k|phi_{k+1}> real positive for k < K-1."""
    tolerances = resolve(tolerances)
    overlaps = _checked_overlaps(loop, tolerances)
    _, matrix = loop.to_dense()
    turned = np.concatenate(([0.0], np.cumsum(np.angle(overlaps[:-1]))))
    return matrix * np.exp(-1j * turned)[:, None]


def parallel_transport_phase(loop: RayLoop, tolerances: Optional[Tolerances] = None) -> HolonomyResult:
    tolerances = resolve(tolerances)
    lifted = horizontal_lift(loop, tolerances)
    _, matrix = loop.to_dense()
    start = matrix[0]
    closing = np.vdot(lifted[-1], start)
    # transport the last lifted vector onto the basepoint ray
    arrived = start * (np.conj(closing) / abs(closing))
    phase = wrap_phase(float(np.angle(np.vdot(start, arrived))))
    return HolonomyResult(phase=phase, min_overlap=loop.min_overlap(), resolution=len(loop))


def refine(loop: RayLoop, factor: int, tolerances: Optional[Tolerances] = None) -> RayLoop:
    """Insert factor-1 slerp points on the PH geodesic of every segment."""
    if factor < 2:
        raise ValueError("refinement factor must be >= 2")
    tolerances = resolve(tolerances)
    overlaps = loop.overlaps()
    bad = np.flatnonzero(np.abs(overlaps) <= tolerances.overlap)
    if bad.size:
        raise OrthogonalNeighborsError("no unique geodesic between orthogonal endpoints", int(bad[0]))
    modes, start = loop.to_dense()
    end = np.roll(start, -1, axis=0) * (np.conj(overlaps) / np.abs(overlaps))[:, None]
    angle = np.arccos(np.clip(np.abs(overlaps), 0.0, 1.0))
    flat = angle < 1e-12

    nodes: List[Ray] = []
    points = []
    for j in range(1, factor):
        t = j / factor
        with np.errstate(invalid="ignore", divide="ignore"):
            a = np.where(flat, 1.0 - t, np.sin((1.0 - t) * angle) / np.sin(angle))
            b = np.where(flat, t, np.sin(t * angle) / np.sin(angle))
        rows = a[:, None] * start + b[:, None] * end
        points.append(rows / np.linalg.norm(rows, axis=1)[:, None])
    dim = loop.dim
    for k, node in enumerate(loop.nodes):
        nodes.append(node)
        for rows in points:
            nodes.append(to_ray(KetVector.from_dense(modes, rows[k], dim), tolerances))
    return RayLoop(nodes)


def holonomy_at(
    loop: LoopLike,
    rtol: Optional[float] = None,
    tolerances: Optional[Tolerances] = None,
    max_doublings: Optional[int] = None,
) -> HolonomyResult:
    """Refine by doubling until successive phases agree within rtol.

    RayLoops are refined geodesically; SampledLoops are re-sampled at twice
    the resolution. Every level is kept in the result for convergence tables.
    """
    tolerances = resolve(tolerances)
    rtol = tolerances.rtol if rtol is None else rtol
    if not rtol > 0:
        raise ValueError(f"rtol must be positive, got {rtol}")
    cap = tolerances.max_doublings if max_doublings is None else max_doublings

    if isinstance(loop, RayLoop):
        current = loop

        def advance(previous: RayLoop) -> RayLoop:
            return refine(previous, 2, tolerances)
    else:
        current = loop.at_resolution(loop.resolution)

        def advance(previous: RayLoop) -> RayLoop:
            return loop.at_resolution(2 * len(previous))

    result = pancharatnam_phase(current, tolerances)
    levels = [RefinementLevel(0, len(current), result.phase, 0.0)]
    logger.debug("level 0 K=%d phase=%.15f", len(current), result.phase)
    looks_constant = current.is_constant(tolerances)
    if looks_constant and isinstance(loop, RayLoop):
        return HolonomyResult(result.phase, result.min_overlap, 0.0, len(current), tuple(levels))

    # a re-sampled loop that looks constant may be aliased: it has to stay
    # put over two doublings before it counts as converged
    needed = 2 if looks_constant else 1
    quiet = 0
    previous = result
    for level in range(1, cap + 1):
        current = advance(current)
        result = pancharatnam_phase(current, tolerances)
        delta = phase_distance(result.phase, previous.phase)
        levels.append(RefinementLevel(level, len(current), result.phase, delta))
        logger.debug("level %d K=%d phase=%.15f delta=%.3e", level, len(current), result.phase, delta)
        quiet = quiet + 1 if delta < rtol else 0
        if quiet >= needed:
            return HolonomyResult(result.phase, result.min_overlap, delta, len(current), tuple(levels))
        previous = result
    raise ConvergenceError((previous.phase, result.phase), cap)


def two_mode_circle(
    theta: float,
    resolution: int = 32,
    modes: Sequence[Sequence[int]] = ((1, 0), (0, 1)),
) -> CurveLoop:
    """cos(theta/2)|e1> + sin(theta/2) exp(2 pi i s)|e2>; phase -pi(1 - cos theta)."""
    e1, e2 = (as_mode(m) for m in modes)
    if len(e1) != len(e2):
        raise DimensionMismatchError(len(e1), len(e2))
    if e1 == e2:
        raise ValueError("two-mode circle needs two distinct modes")
    a, b = math.cos(theta / 2.0), math.sin(theta / 2.0)

    def curve(s: float) -> KetVector:
        return KetVector(len(e1), {e1: a, e2: b * complex(math.cos(2 * math.pi * s), math.sin(2 * math.pi * s))})

    return CurveLoop(curve, resolution)


def two_mode_circle_phase(theta: float) -> float:
    return wrap_phase(-math.pi * (1.0 - math.cos(theta)))


def lune_loop(
    base: KetVector,
    partner: KetVector,
    theta: float,
    max_step: float = math.pi / 2,
    tolerances: Optional[Tolerances] = None,
) -> RayLoop:
    """Geodesic polygon based at `base` whose holonomy is exactly theta.

    The loop runs base -> (base + e^{i phi_j} partner)/sqrt2 along the
    equator phi_j = 0..phi -> base, with phi = 2((-theta) mod 2pi); its
    Bargmann phase is -phi/2.
    """
    tolerances = resolve(tolerances)
    base = to_ray(base, tolerances).representative
    partner = to_ray(partner, tolerances).representative
    if abs(inner(base, partner)) > tolerances.orthogonality:
        raise ValueError("lune loop needs a partner orthogonal to the base")
    if not 0 < max_step < math.pi:
        raise ValueError("max_step must lie in (0, pi)")
    sweep = 2.0 * math.fmod(math.fmod(-theta, 2 * math.pi) + 2 * math.pi, 2 * math.pi)
    if sweep == 0.0 or sweep == 4 * math.pi:
        return RayLoop([to_ray(base, tolerances)] * 2)
    steps = max(1, math.ceil(sweep / max_step))
    nodes = [base]
    for j in range(steps + 1):
        phi = sweep * j / steps
        nodes.append((base + partner.phase_shifted(phi)).scaled(1 / math.sqrt(2.0)))
    return RayLoop.from_kets(nodes, tolerances)


def _lattice_neighbours(support: Iterable[ModeIndex]) -> List[ModeIndex]:
    out = []
    for m in support:
        for i in range(len(m)):
            for step in (-1, 1):
                out.append(m[:i] + (m[i] + step,) + m[i + 1:])
    return out


def sample_loops(
    basepoint: Ray,
    n_loops: int,
    seed: int,
    modes: Optional[Sequence[Sequence[int]]] = None,
    n_vertices: int = 3,
    tolerances: Optional[Tolerances] = None,
) -> List[RayLoop]:
    """Random geodesic polygons through the basepoint; the first one is trivial.

    Vertices are drawn on the basepoint support plus ``modes``. Without
    ``modes`` the lattice neighbours n ± e_i of every support mode are added.
    """
    if n_loops < 1:
        raise ValueError("n_loops must be >= 1")
    if n_vertices < 1:
        raise ValueError("n_vertices must be >= 1")
    span = set(basepoint.representative.amplitudes)
    if modes is None:
        span.update(_lattice_neighbours(span))
    for m in modes or ():
        m = as_mode(m)
        if len(m) != basepoint.dim:
            raise DimensionMismatchError(basepoint.dim, len(m))
        span.add(m)
    if len(span) < 2:
        raise TrivialHolonomyError()
    span = sorted(span)
    rng = np.random.default_rng(seed)
    loops = [RayLoop([basepoint, basepoint])]
    while len(loops) < n_loops:
        vertices = [to_ray(random_ket(span, rng), tolerances) for _ in range(n_vertices)]
        candidate = RayLoop([basepoint] + vertices)
        if candidate.min_overlap() > _MIN_SAMPLE_OVERLAP:
            loops.append(candidate)
    return loops


def holonomy_group_sample(
    basepoint: Ray,
    n_loops: int,
    seed: int,
    modes: Optional[Sequence[Sequence[int]]] = None,
    n_vertices: int = 3,
    tolerances: Optional[Tolerances] = None,
) -> List[float]:
    loops = sample_loops(basepoint, n_loops, seed, modes, n_vertices, tolerances)
    return [pancharatnam_phase(loop, tolerances).phase for loop in loops]


def max_circular_gap(phases: Sequence[float]) -> float:
    """Largest empty arc between sorted phases on the circle."""
    ordered = sorted(wrap_phase(p) for p in phases)
    if not ordered:
        return 2 * math.pi
    gaps = [b - a for a, b in zip(ordered, ordered[1:])]
    gaps.append(ordered[0] + 2 * math.pi - ordered[-1])
    return max(gaps)
