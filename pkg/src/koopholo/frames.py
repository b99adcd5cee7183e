"""
Moving frames of projectors carried around loops in PH while the dynamics runs.

At t = 1 an observable seen through a frame member |n> that followed a loop
gamma reads e^{i theta} U|n>, theta being the holonomy of gamma.
"""

import cmath
import logging
import math
from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence, Tuple, Union

from .errors import BasepointMismatchError, InconsistentObservationError, NotCyclicError
from .holonomy import CurveLoop, HolonomyResult, LoopLike, RayLoop, RefinementLevel, holonomy_at, lune_loop, phase_distance
from .koopman import KoopmanOperator, TorusTranslation, wrap_phase
from .models import Tolerances, resolve
from .modes import KetVector, Ray, inner, normalize, to_ray, zero_mode

logger = logging.getLogger(__name__)


class Frame:
    """Family of mutually orthogonal rays, the projectors |n><n|."""

    def __init__(self, members: Sequence[Union[Ray, KetVector]], tolerances: Optional[Tolerances] = None):
        tolerances = resolve(tolerances)
        rays = [m if isinstance(m, Ray) else to_ray(m, tolerances) for m in members]
        if not rays:
            raise ValueError("a frame needs at least one member")
        for i, a in enumerate(rays):
            for j in range(i + 1, len(rays)):
                overlap = abs(inner(a.representative, rays[j].representative))
                if overlap > tolerances.orthogonality:
                    raise ValueError(f"frame members {i} and {j} are not orthogonal (|<a|b>| = {overlap:.3g})")
        self.members = rays

    @classmethod
    def fourier(cls, modes: Sequence[Sequence[int]]) -> "Frame":
        return cls([to_ray(KetVector.basis(m)) for m in modes])

    def member_ket(self, index: int) -> KetVector:
        return self.members[index].representative

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class FrameExcursion:
    """Loop followed by one frame member during the unit time interval."""

    member_loop: LoopLike
    duration: Tuple[float, float] = (0.0, 1.0)

    @property
    def basepoint(self) -> Ray:
        loop = self.member_loop
        if not isinstance(loop, RayLoop):
            loop = loop.at_resolution(loop.resolution)
        return loop.basepoint


@dataclass(frozen=True)
class NetPhaseRecord:
    total: KetVector
    geometric_phase: float
    dynamical_part: KetVector
    member: int = 0
    levels: Tuple[RefinementLevel, ...] = ()

    def defect(self) -> float:
        return self.total.distance(self.dynamical_part.phase_shifted(self.geometric_phase))


def excursion_net_state(
    op: KoopmanOperator,
    frame: Frame,
    exc: FrameExcursion,
    member: int,
    rtol: Optional[float] = None,
    tolerances: Optional[Tolerances] = None,
) -> NetPhaseRecord:
    tolerances = resolve(tolerances)
    if not 0 <= member < len(frame):
        raise IndexError(f"frame has no member {member}")
    if exc.basepoint != frame.members[member]:
        raise BasepointMismatchError(f"excursion does not start at frame member {member}")
    result = holonomy_at(exc.member_loop, rtol, tolerances)
    dynamical = op.apply(frame.member_ket(member))
    record = NetPhaseRecord(dynamical.phase_shifted(result.phase), result.phase, dynamical, member, result.levels)
    if record.defect() > tolerances.record:
        raise InconsistentObservationError()
    return record


def frame_net_states(
    op: KoopmanOperator,
    frame: Frame,
    excursions: Mapping[int, FrameExcursion],
    rtol: Optional[float] = None,
    tolerances: Optional[Tolerances] = None,
) -> List[NetPhaseRecord]:
    """Records for every member; members that stay put see only the dynamics."""
    records = []
    for index in range(len(frame)):
        if index in excursions:
            records.append(excursion_net_state(op, frame, excursions[index], index, rtol, tolerances))
        else:
            moved = op.apply(frame.member_ket(index))
            records.append(NetPhaseRecord(moved, 0.0, moved, index))
    return records


def _orthogonal_partner(base: KetVector) -> KetVector:
    support = set(base.amplitudes)
    candidate = list(min(support))
    while tuple(candidate) in support:
        candidate[0] += 1
    return KetVector.basis(candidate)


def excursion_for_phase(
    frame: Frame,
    member: int,
    theta: float,
    partner: Optional[KetVector] = None,
    tolerances: Optional[Tolerances] = None,
) -> FrameExcursion:
    """Excursion of one member along a loop whose holonomy is theta."""
    base = frame.member_ket(member)
    if partner is None:
        partner = _orthogonal_partner(base)
    else:
        partner = normalize(partner - base.scaled(inner(base, partner)))
    return FrameExcursion(lune_loop(base, partner, theta, tolerances=tolerances))


def extract_geometric_phase(
    observed: KetVector,
    op: KoopmanOperator,
    n_ket: KetVector,
    tolerances: Optional[Tolerances] = None,
) -> float:
    overlap = inner(op.apply(n_ket), observed)
    if abs(overlap) <= resolve(tolerances).overlap:
        raise InconsistentObservationError()
    return wrap_phase(cmath.phase(overlap))


def heisenberg_state_expectation(v: KetVector) -> complex:
    """Haar integral of the observable: its zero-mode amplitude."""
    return v.amplitude(zero_mode(v.dim))


@dataclass(frozen=True)
class CyclicPhaseRecord:
    total_phase: float
    dynamical_phase: float
    geometric_phase: float
    closure_defect: float
    holonomy: HolonomyResult


def cyclic_evolution_phase(
    op: TorusTranslation,
    v: KetVector,
    period: float,
    rtol: Optional[float] = None,
    tolerances: Optional[Tolerances] = None,
) -> CyclicPhaseRecord:
    """Split the phase picked up over a cyclic evolution into dynamics and geometry.

    The ray of U_{T_t} v must return to itself at t = period. The total phase
    arg<v|U v> equals the dynamical phase sum |c_n|^2 n.omega T plus the
    holonomy of the ray orbit.
    """
    if not isinstance(op, TorusTranslation):
        raise TypeError("cyclic evolution is defined for torus translation flows")
    if not period > 0:
        raise ValueError("period must be positive")
    tolerances = resolve(tolerances)
    v = normalize(v)
    flow = op.at_time(period)
    returned = inner(v, flow.apply(v))
    if 1.0 - abs(returned) > tolerances.cyclicity:
        raise NotCyclicError(f"ray does not return after period {period} (|<v|Uv>| = {abs(returned):.12f})")
    total = cmath.phase(returned)
    dynamical = math.fsum(abs(c) ** 2 * flow.phase(m) for m, c in v.amplitudes.items())

    def orbit(s: float) -> KetVector:
        return op.at_time(s * period).apply(v)

    result = holonomy_at(CurveLoop(orbit, tolerances.initial_resolution, tolerances), rtol, tolerances)
    defect = phase_distance(result.phase, total - dynamical)
    logger.info("cyclic phase: total=%.12f dynamical=%.12f geometric=%.12f", total, dynamical, result.phase)
    return CyclicPhaseRecord(wrap_phase(total), dynamical, result.phase, defect, result)

