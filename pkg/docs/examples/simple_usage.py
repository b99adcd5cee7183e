"""
Simple usage example for koopholo
"""

import math

import numpy as np

from koopholo import (
    ComposedOperator,
    Frame,
    ParamLoop,
    ToralAutomorphism,
    TorusTranslation,
    coherent_ring_family,
    excursion_net_state,
    extract_geometric_phase,
    hannay_phase,
    holonomy_at,
    two_mode_circle,
    unitarity_defect,
)
from koopholo.frames import excursion_for_phase
from koopholo.modes import KetVector, box_modes, random_ket


# Koopman operators are unitary on mode space
cat = ToralAutomorphism.arnold_cat()
oscillators = TorusTranslation((1.0, 3.0), t=1.0)
rng = np.random.default_rng(0)
sample = [random_ket(box_modes(2, 3), rng) for _ in range(10)]
print(f"cat map defect: {unitarity_defect(cat, sample)}")
print(f"cat after oscillators: {unitarity_defect(ComposedOperator([cat, oscillators]), sample):.2e}")

# Berry phase of the two-mode circle, refined until two levels agree
print("\nTwo-mode circle at theta = pi/3...")
result = holonomy_at(two_mode_circle(math.pi / 3), rtol=1e-7)
for level in result.levels:
    print(f"  K={level.resolution:6d} phase={level.phase:.12f} delta={level.delta:.2e}")
print(f"expected {-math.pi * (1 - math.cos(math.pi / 3)):.12f}")

# Moving-frame excursion: the observable comes back with the loop's holonomy
print("\nMoving frame under the oscillator flow...")
frame = Frame.fourier([(1, 2), (0, 1)])
record = excursion_net_state(oscillators, frame, excursion_for_phase(frame, 0, math.pi / 2), 0)
print(f"geometric phase: {record.geometric_phase:.12f}")
print(f"recovered: {extract_geometric_phase(record.total, oscillators, KetVector.basis((1, 2))):.12f}")

# Hannay phase of the coherent ring
print("\nCoherent ring at r = 1...")
record = hannay_phase(coherent_ring_family(1.0), ParamLoop.angle(), rtol=1e-6)
print(f"phase {record.phase:.6f} after refining the parameter loop to {record.loop_resolution} samples")
