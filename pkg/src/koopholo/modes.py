"""
Truncated Fourier Hilbert space of the d-torus.

A KetVector is a sparse map from integer mode vectors n to the complex
amplitude of exp(i n.phi). Storage is unbounded in n; only enumeration
helpers such as box_modes impose a box.
"""

import cmath
import itertools
import math
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatchError, NullVectorError
from .models import Tolerances, resolve

ModeIndex = Tuple[int, ...]


def as_mode(components: Iterable[int]) -> ModeIndex:
    mode = tuple(int(c) for c in components)
    if not mode:
        raise ValueError("mode index needs at least one component")
    return mode


def zero_mode(dim: int) -> ModeIndex:
    return (0,) * dim


def box_modes(dim: int, n_max: int) -> List[ModeIndex]:
    """All modes with |n_i| <= n_max, in lexicographic order."""
    axis = range(-n_max, n_max + 1)
    return [tuple(m) for m in itertools.product(axis, repeat=dim)]


class KetVector:
    """Finitely supported element of L2(T^d, Haar).

    Amplitudes keep insertion order; operations that move amplitudes
    around (automorphisms) preserve it so inner products are summed in
    the same order before and after.
    """

    __slots__ = ("dim", "_amplitudes")

    def __init__(
        self,
        dim: int,
        amplitudes: Optional[Mapping[Sequence[int], complex]] = None,
        dropout: Optional[float] = None,
    ):
        if dim < 1:
            raise ValueError(f"torus dimension must be >= 1, got {dim}")
        threshold = resolve(None).dropout if dropout is None else dropout
        stored: Dict[ModeIndex, complex] = {}
        for key, value in (amplitudes or {}).items():
            mode = as_mode(key)
            if len(mode) != dim:
                raise DimensionMismatchError(dim, len(mode))
            value = complex(value)
            if not (math.isfinite(value.real) and math.isfinite(value.imag)):
                raise ValueError(f"non-finite amplitude on mode {mode}")
            if abs(value) > threshold:
                stored[mode] = stored.get(mode, 0j) + value
        self.dim = dim
        self._amplitudes = MappingProxyType(stored)

    # --- construction ---
    @classmethod
    def basis(cls, mode: Sequence[int]) -> "KetVector":
        mode = as_mode(mode)
        return cls(len(mode), {mode: 1.0})

    @classmethod
    def from_dense(cls, modes: Sequence[ModeIndex], values: Sequence[complex], dim: Optional[int] = None) -> "KetVector":
        if dim is None:
            if not modes:
                raise ValueError("dimension required for an empty mode list")
            dim = len(modes[0])
        return cls(dim, dict(zip(modes, values)))

    # --- access ---
    @property
    def amplitudes(self) -> Mapping[ModeIndex, complex]:
        return self._amplitudes

    @property
    def support(self) -> List[ModeIndex]:
        return sorted(self._amplitudes)

    def amplitude(self, mode: Sequence[int]) -> complex:
        return self._amplitudes.get(as_mode(mode), 0j)

    def norm_squared(self) -> float:
        return math.fsum(abs(c) ** 2 for c in self._amplitudes.values())

    def norm(self) -> float:
        return math.sqrt(self.norm_squared())

    def is_normalized(self, tolerances: Optional[Tolerances] = None) -> bool:
        return abs(self.norm_squared() - 1.0) <= resolve(tolerances).normalization

    def to_dense(self, modes: Sequence[ModeIndex]) -> np.ndarray:
        return np.array([self._amplitudes.get(m, 0j) for m in modes], dtype=np.complex128)

    def to_records(self) -> List[dict]:
        return [
            {"mode": list(m), "re": c.real, "im": c.imag}
            for m, c in sorted(self._amplitudes.items())
        ]

    # --- arithmetic ---
    def scaled(self, factor: complex) -> "KetVector":
        return KetVector(self.dim, {m: factor * c for m, c in self._amplitudes.items()})

    def phase_shifted(self, alpha: float) -> "KetVector":
        return self.scaled(cmath.exp(1j * alpha))

    def map_modes(self, relocate) -> "KetVector":
        moved: Dict[ModeIndex, complex] = {}
        for m, c in self._amplitudes.items():
            target = relocate(m)
            if target in moved:
                raise ValueError(f"mode map is not injective at {target}")
            moved[target] = c
        return KetVector(self.dim, moved)

    def map_amplitudes(self, transform) -> "KetVector":
        return KetVector(self.dim, {m: transform(m, c) for m, c in self._amplitudes.items()})

    def __add__(self, other: "KetVector") -> "KetVector":
        if not isinstance(other, KetVector):
            return NotImplemented
        _check_dims(self, other)
        total = dict(self._amplitudes)
        for m, c in other._amplitudes.items():
            total[m] = total.get(m, 0j) + c
        return KetVector(self.dim, total)

    def __sub__(self, other: "KetVector") -> "KetVector":
        if not isinstance(other, KetVector):
            return NotImplemented
        return self + other.scaled(-1.0)

    def __neg__(self) -> "KetVector":
        return self.scaled(-1.0)

    def __mul__(self, factor) -> "KetVector":
        if isinstance(factor, (int, float, complex, np.number)):
            return self.scaled(complex(factor))
        return NotImplemented

    __rmul__ = __mul__

    def distance(self, other: "KetVector") -> float:
        return (self - other).norm()

    def allclose(self, other: "KetVector", tol: float = 1e-12) -> bool:
        return self.dim == other.dim and self.distance(other) <= tol

    def __len__(self) -> int:
        return len(self._amplitudes)

    def __repr__(self) -> str:
        terms = ", ".join(f"{m}: {c:.6g}" for m, c in sorted(self._amplitudes.items()))
        return f"KetVector(dim={self.dim}, {{{terms}}})"


class Ray:
    """Unit ket modulo global phase, stored in canonical gauge.

    The amplitude on the lexicographically smallest supported mode of the
    representative is real and strictly positive.
    """

    __slots__ = ("representative", "tol")

    def __init__(self, representative: KetVector, tol: float = 1e-12):
        self.representative = representative
        self.tol = tol

    @property
    def dim(self) -> int:
        return self.representative.dim

    def __eq__(self, other) -> bool:
        if not isinstance(other, Ray):
            return NotImplemented
        return self.representative.allclose(other.representative, self.tol)

    __hash__ = None

    def __repr__(self) -> str:
        return f"Ray({self.representative!r})"


def _check_dims(a: KetVector, b: KetVector):
    if a.dim != b.dim:
        raise DimensionMismatchError(a.dim, b.dim)


def inner(a: KetVector, b: KetVector) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    _check_dims(a, b)
    other = b.amplitudes
    total = 0j
    for m, c in a.amplitudes.items():
        d = other.get(m)
        if d is not None:
            total += c.conjugate() * d
    return total


def normalize(a: KetVector) -> KetVector:
    norm = a.norm()
    if norm == 0.0:
        raise NullVectorError()
    return a.scaled(1.0 / norm)


def to_ray(a: KetVector, tolerances: Optional[Tolerances] = None) -> Ray:
    tolerances = resolve(tolerances)
    unit = normalize(a)
    pivot = min(unit.amplitudes)
    c = unit.amplitudes[pivot]
    rotation = c.conjugate() / abs(c)
    fixed = {m: rotation * v for m, v in unit.amplitudes.items()}
    fixed[pivot] = complex(abs(c), 0.0)
    return Ray(KetVector(unit.dim, fixed), tolerances.ray_equality)


def fubini_study_distance(r1: Ray, r2: Ray) -> float:
    overlap = abs(inner(r1.representative, r2.representative))
    return math.acos(min(1.0, overlap))


def random_ket(modes: Sequence[ModeIndex], rng: np.random.Generator) -> KetVector:
    """Haar-distributed unit vector on the span of the given modes."""
    values = rng.standard_normal(len(modes)) + 1j * rng.standard_normal(len(modes))
    values /= np.linalg.norm(values)
    return KetVector.from_dense(list(modes), values)
