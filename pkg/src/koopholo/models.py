from typing import Optional


class Tolerances:
    def __init__(
        self,
        dropout: float = 1e-15,
        normalization: float = 1e-12,
        ray_equality: float = 1e-12,
        overlap: float = 1e-8,
        orthogonality: float = 1e-10,
        rtol: float = 1e-6,
        max_doublings: int = 16,
        initial_resolution: int = 32,
        purity: float = 1e-14,
        record: float = 1e-10,
        cyclicity: float = 1e-9,
    ):
        """Numerical thresholds shared by every operation in the package.

        Args:
            dropout: Amplitudes with modulus at or below this are not stored
            normalization: Allowed deviation of a unit vector's squared norm from 1
            ray_equality: Norm distance under which two ray representatives are equal
            overlap: Minimum |<a|b>| between consecutive loop nodes
            orthogonality: Maximum |<a|b>| between members of a frame
            rtol: Default refinement tolerance for holonomy_at
            max_doublings: Refinement cap for holonomy_at
            initial_resolution: Starting number of samples for re-sampled loops
            purity: Allowed drift when a section is queried twice at one point
            record: Tolerance for re-verifying the moving-frame product form
            cyclicity: Allowed 1 - |<v|U v>| for a cyclic evolution
        """
        self.dropout = dropout
        self.normalization = normalization
        self.ray_equality = ray_equality
        self.overlap = overlap
        self.orthogonality = orthogonality
        self.rtol = rtol
        self.max_doublings = max_doublings
        self.initial_resolution = initial_resolution
        self.purity = purity
        self.record = record
        self.cyclicity = cyclicity

    @staticmethod
    def from_kwargs(kwargs: dict) -> "Tolerances":
        defaults = DEFAULT_TOLERANCES.to_dict()
        defaults.update({k: v for k, v in kwargs.items() if v is not None})
        return Tolerances(**defaults)

    def to_dict(self):
        return {
            "dropout": self.dropout,
            "normalization": self.normalization,
            "ray_equality": self.ray_equality,
            "overlap": self.overlap,
            "orthogonality": self.orthogonality,
            "rtol": self.rtol,
            "max_doublings": self.max_doublings,
            "initial_resolution": self.initial_resolution,
            "purity": self.purity,
            "record": self.record,
            "cyclicity": self.cyclicity,
        }

    def clone(self, **kwargs):
        """Create a copy of these tolerances with updated values.

        Args:
            **kwargs: Key-value pairs of thresholds to update

        Returns:
            tolerances: A new instance with the specified updates
        """
        values = self.to_dict()
        values.update(kwargs)
        return Tolerances.from_kwargs(values)


DEFAULT_TOLERANCES = Tolerances()


def resolve(tolerances: Optional[Tolerances]) -> Tolerances:
    return tolerances if tolerances is not None else DEFAULT_TOLERANCES
