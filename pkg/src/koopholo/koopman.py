"""
Koopman unitaries of torus translation flows and toral automorphisms.

Translation:   U_{T_t} |n> = exp(i n.omega t) |n>
Automorphism:  U_C |n> = |C n>

The direct basis action |n> -> |C n> is the default (convention="direct").
Pulling exp(i n.phi) back through phi -> C phi actually gives the mode
C^T n; pass convention="pullback" for that. The two agree for symmetric C,
the Arnold cat matrix included.
"""

import cmath
import itertools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatchError, ModeOverflowError, NotUnimodularError
from .modes import KetVector, ModeIndex, as_mode, inner

MODE_LIMIT = 2 ** 62
ARNOLD_CAT = ((1, 1), (1, 2))
CONVENTIONS = ("direct", "pullback")


def wrap_phase(x: float) -> float:
    """Reduce an angle to (-pi, pi]."""
    y = math.fmod(x + math.pi, 2.0 * math.pi)
    if y < 0.0:
        y += 2.0 * math.pi
    y -= math.pi
    return math.pi if y == -math.pi else y


class KoopmanOperator(ABC):
    @property
    @abstractmethod
    def dim(self) -> int:
        pass

    @abstractmethod
    def apply(self, v: KetVector) -> KetVector:
        pass

    def __call__(self, v: KetVector) -> KetVector:
        return self.apply(v)

    def __matmul__(self, other: "KoopmanOperator") -> "ComposedOperator":
        return ComposedOperator([self, other])

    def _check(self, v: KetVector):
        if v.dim != self.dim:
            raise DimensionMismatchError(self.dim, v.dim)


class TorusTranslation(KoopmanOperator):
    """Koopman unitary of phi -> phi + omega t, a fixed unitary for each t."""

    def __init__(self, omega: Sequence[float], t: float = 1.0):
        omega = tuple(float(w) for w in omega)
        if not omega:
            raise ValueError("omega needs at least one component")
        if not all(math.isfinite(w) for w in omega) or not math.isfinite(t):
            raise ValueError("omega and t must be finite")
        self.omega = omega
        self.t = float(t)

    @property
    def dim(self) -> int:
        return len(self.omega)

    def at_time(self, t: float) -> "TorusTranslation":
        return TorusTranslation(self.omega, t)

    def phase(self, n: Sequence[int]) -> float:
        """Unreduced dynamical phase n.omega t."""
        n = as_mode(n)
        if len(n) != self.dim:
            raise DimensionMismatchError(self.dim, len(n))
        return math.fsum(k * w for k, w in zip(n, self.omega)) * self.t

    def eigenphase(self, n: Sequence[int]) -> float:
        return wrap_phase(self.phase(n))

    def apply(self, v: KetVector) -> KetVector:
        self._check(v)
        return v.map_amplitudes(lambda m, c: c * cmath.exp(1j * self.phase(m)))

    def __repr__(self) -> str:
        return f"TorusTranslation(omega={self.omega}, t={self.t})"


@dataclass(frozen=True)
class OrbitResult:
    modes: List[ModeIndex]
    cycle_start: Optional[int] = None
    cycle_length: Optional[int] = None

    @property
    def has_cycle(self) -> bool:
        return self.cycle_length is not None


class ToralAutomorphism(KoopmanOperator):
    """Koopman unitary of phi -> C phi for an integer matrix with |det C| = 1."""

    def __init__(self, matrix: Sequence[Sequence[int]], convention: str = "direct"):
        rows = tuple(tuple(int(x) for x in row) for row in matrix)
        if not rows or any(len(row) != len(rows) for row in rows):
            raise ValueError("automorphism matrix must be square")
        for row, given in zip(rows, matrix):
            if any(float(a) != float(b) for a, b in zip(row, given)):
                raise ValueError("automorphism matrix must have integer entries")
        if convention not in CONVENTIONS:
            raise ValueError(f"unknown convention {convention!r}; expected one of {CONVENTIONS}")
        inverse, det = _exact_inverse(rows)
        if abs(det) != 1:
            raise NotUnimodularError(det)
        self.matrix = rows
        self.convention = convention
        self.determinant = det
        self._inverse = inverse
        if convention == "direct":
            self._action = rows
        else:
            self._action = tuple(zip(*rows))

    @classmethod
    def arnold_cat(cls) -> "ToralAutomorphism":
        return cls(ARNOLD_CAT)

    @property
    def dim(self) -> int:
        return len(self.matrix)

    def act(self, n: Sequence[int]) -> ModeIndex:
        """Mode that |n> is moved to."""
        n = as_mode(n)
        if len(n) != self.dim:
            raise DimensionMismatchError(self.dim, len(n))
        image = tuple(sum(a * k for a, k in zip(row, n)) for row in self._action)
        if any(abs(k) > MODE_LIMIT for k in image):
            raise ModeOverflowError(f"mode {image} exceeds the 2^62 component limit")
        return image

    def inverse(self) -> "ToralAutomorphism":
        return ToralAutomorphism(self._inverse, self.convention)

    def apply(self, v: KetVector) -> KetVector:
        self._check(v)
        return v.map_modes(self.act)

    def orbit(self, n: Sequence[int], k_max: int) -> OrbitResult:
        if k_max < 0:
            raise ValueError("k_max must be >= 0")
        current = as_mode(n)
        modes = [current]
        seen = {current: 0}
        for k in range(1, k_max + 1):
            current = self.act(current)
            if current in seen:
                return OrbitResult(modes, seen[current], k - seen[current])
            seen[current] = k
            modes.append(current)
        return OrbitResult(modes)

    def __repr__(self) -> str:
        return f"ToralAutomorphism({self.matrix}, convention={self.convention!r})"


class ComposedOperator(KoopmanOperator):
    """Product of Koopman operators, applied right-to-left."""

    def __init__(self, factors: Sequence[KoopmanOperator]):
        factors = list(factors)
        if not factors:
            raise ValueError("composed operator needs at least one factor")
        dims = {f.dim for f in factors}
        if len(dims) != 1:
            a, b = sorted(dims)[:2]
            raise DimensionMismatchError(a, b)
        self.factors = factors

    @property
    def dim(self) -> int:
        return self.factors[0].dim

    def apply(self, v: KetVector) -> KetVector:
        self._check(v)
        for factor in reversed(self.factors):
            v = factor.apply(v)
        return v

    def __repr__(self) -> str:
        return f"ComposedOperator({self.factors!r})"


def _exact_inverse(rows: Tuple[Tuple[int, ...], ...]) -> Tuple[Tuple[Tuple[int, ...], ...], int]:
    """Gauss-Jordan over the rationals; returns (inverse if unimodular, det)."""
    d = len(rows)
    work = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(d)] for i, row in enumerate(rows)]
    det = Fraction(1)
    for col in range(d):
        pivot = next((r for r in range(col, d) if work[r][col] != 0), None)
        if pivot is None:
            return rows, 0
        if pivot != col:
            work[col], work[pivot] = work[pivot], work[col]
            det = -det
        p = work[col][col]
        det *= p
        work[col] = [x / p for x in work[col]]
        for r in range(d):
            if r != col and work[r][col] != 0:
                f = work[r][col]
                work[r] = [a - f * b for a, b in zip(work[r], work[col])]
    det_int = int(det)
    if abs(det_int) != 1:
        return rows, det_int
    inverse = tuple(tuple(int(x) for x in row[d:]) for row in work)
    return inverse, det_int


def apply(op: KoopmanOperator, v: KetVector) -> KetVector:
    return op.apply(v)


def eigenphase(op: TorusTranslation, n: Sequence[int]) -> float:
    return op.eigenphase(n)


def orbit(op: ToralAutomorphism, n: Sequence[int], k_max: int) -> OrbitResult:
    return op.orbit(n, k_max)


def unitarity_defect(op: KoopmanOperator, sample: Sequence[KetVector]) -> float:
    """max |<Ua|Ub> - <a|b>| over all ordered pairs of the sample."""
    sample = list(sample)
    if not sample:
        raise ValueError("unitarity check needs a nonempty sample")
    images = [op.apply(v) for v in sample]
    worst = 0.0
    for (a, ua), (b, ub) in itertools.product(zip(sample, images), repeat=2):
        worst = max(worst, abs(inner(ua, ub) - inner(a, b)))
    return worst


def random_unimodular(dim: int, rng: np.random.Generator, steps: int = 6) -> ToralAutomorphism:
    """Product of random elementary shears, always in SL(d, Z)."""
    m = [[int(i == j) for j in range(dim)] for i in range(dim)]
    for _ in range(steps):
        i, j = rng.choice(dim, size=2, replace=False) if dim > 1 else (0, 0)
        if i == j:
            break
        s = int(rng.choice([-1, 1]))
        m[i] = [a + s * b for a, b in zip(m[i], m[j])]
    return ToralAutomorphism(m)
