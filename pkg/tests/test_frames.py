"""
Test module for moving frames and the net-phase decomposition
"""

import cmath
import math

import numpy as np
import pytest

from koopholo.errors import BasepointMismatchError, InconsistentObservationError, NotCyclicError
from koopholo.frames import (
    Frame,
    FrameExcursion,
    cyclic_evolution_phase,
    excursion_for_phase,
    excursion_net_state,
    extract_geometric_phase,
    frame_net_states,
    heisenberg_state_expectation,
)
from koopholo.holonomy import RayLoop, phase_distance
from koopholo.koopman import ComposedOperator, ToralAutomorphism, TorusTranslation
from koopholo.modes import KetVector, box_modes, random_ket, to_ray


@pytest.fixture
def oscillators():
    return TorusTranslation((1.0, 3.0), 1.0)


@pytest.fixture
def cat():
    return ToralAutomorphism.arnold_cat()


def test_frame_rejects_non_orthogonal_members():
    """Test frames are families of orthogonal projectors"""
    with pytest.raises(ValueError, match="not orthogonal"):
        Frame([KetVector.basis((1, 0)), KetVector(2, {(1, 0): 1.0, (0, 1): 1.0})])
    assert len(Frame.fourier([(1, 0), (0, 1), (2, 2)])) == 3


def test_constant_excursion_sees_only_dynamics(oscillators):
    """Test an unmoved member ends at U|n>"""
    frame = Frame.fourier([(1, 2)])
    still = FrameExcursion(RayLoop([frame.members[0]] * 2))
    record = excursion_net_state(oscillators, frame, still, 0)
    assert record.geometric_phase == 0
    assert record.total.allclose(oscillators.apply(KetVector.basis((1, 2))), 0.0)


def test_oscillator_excursion_example(oscillators):
    """Test total = exp(i(7 + pi/2))|(1,2)>"""
    frame = Frame.fourier([(1, 2)])
    record = excursion_net_state(oscillators, frame, excursion_for_phase(frame, 0, math.pi / 2), 0)
    assert phase_distance(record.geometric_phase, math.pi / 2) < 1e-12
    assert abs(record.total.amplitude((1, 2)) - cmath.exp(1j * (7 + math.pi / 2))) < 1e-12
    assert record.defect() <= 1e-10


def test_cat_excursion_example(cat):
    """Test total = -|(1,1)> for theta = pi"""
    frame = Frame.fourier([(1, 0)])
    record = excursion_net_state(cat, frame, excursion_for_phase(frame, 0, math.pi), 0)
    assert record.total.allclose(KetVector.basis((1, 1)).scaled(-1.0), 1e-12)
    assert record.dynamical_part.allclose(KetVector.basis((1, 1)), 0.0)


def test_basepoint_mismatch(oscillators):
    """Test the excursion must start at the chosen member"""
    frame = Frame.fourier([(1, 2), (0, 1)])
    excursion = excursion_for_phase(frame, 1, 0.4)
    with pytest.raises(BasepointMismatchError):
        excursion_net_state(oscillators, frame, excursion, 0)


def test_extract_geometric_phase_examples(oscillators):
    """Test phase injection round trips"""
    n = KetVector.basis((1, 2))
    moved = oscillators.apply(n)
    assert extract_geometric_phase(moved, oscillators, n) == pytest.approx(0.0, abs=1e-15)
    assert extract_geometric_phase(moved.phase_shifted(math.pi / 3), oscillators, n) == pytest.approx(math.pi / 3, abs=1e-12)

    frame = Frame.fourier([(1, 2)])
    record = excursion_net_state(oscillators, frame, excursion_for_phase(frame, 0, -2.0), 0)
    assert extract_geometric_phase(record.total, oscillators, n) == pytest.approx(-2.0, abs=1e-10)


def test_extract_from_orthogonal_observation(cat):
    """Test an observation orthogonal to U|n> is inconsistent"""
    with pytest.raises(InconsistentObservationError, match="observed state inconsistent with dynamics"):
        extract_geometric_phase(KetVector.basis((5, 5)), cat, KetVector.basis((1, 0)))


@pytest.mark.parametrize("system", ["oscillators", "cat"])
def test_round_trip_on_random_excursions(system, request):
    """Test 100 random excursions recover their injected holonomy"""
    op = request.getfixturevalue(system)
    rng = np.random.default_rng(12)
    modes = box_modes(2, 3)
    for _ in range(100):
        n = modes[int(rng.integers(len(modes)))]
        theta = float(rng.uniform(-math.pi, math.pi))
        frame = Frame.fourier([n])
        record = excursion_net_state(op, frame, excursion_for_phase(frame, 0, theta), 0)
        extracted = extract_geometric_phase(record.total, op, KetVector.basis(n))
        assert phase_distance(extracted, theta) < 1e-10


def test_phase_locality(oscillators):
    """Test only the moving member changes"""
    frame = Frame.fourier([(1, 2), (0, 1), (-1, 1)])
    records = frame_net_states(oscillators, frame, {0: excursion_for_phase(frame, 0, 1.1)})
    assert phase_distance(records[0].geometric_phase, 1.1) < 1e-12
    for record in records[1:]:
        assert record.geometric_phase == 0
        assert record.total.distance(oscillators.apply(frame.member_ket(record.member))) <= 1e-12


def test_non_eigen_member_uses_same_product_form():
    """Test the decomposition for a superposition member"""
    op = TorusTranslation((0.4, 1.3))
    member = KetVector(2, {(0, 0): 0.6, (1, 1): 0.8j})
    frame = Frame([member])
    record = excursion_net_state(op, frame, excursion_for_phase(frame, 0, 0.7), 0)
    assert record.total.allclose(op.apply(to_ray(member).representative).phase_shifted(0.7), 1e-10)


def test_heisenberg_state_examples(cat):
    """Test the Haar integral picks the zero mode"""
    assert heisenberg_state_expectation(KetVector.basis((0, 0))) == 1
    assert heisenberg_state_expectation(KetVector.basis((3, 1))) == 0


def test_heisenberg_state_is_stationary(cat, oscillators):
    """Test omega(U f) = omega(f) for the built-in systems"""
    rng = np.random.default_rng(1)
    modes = box_modes(2, 2)
    composed = ComposedOperator([cat, oscillators])
    for _ in range(10):
        v = random_ket(modes, rng)
        for op in (cat, oscillators, composed):
            assert abs(heisenberg_state_expectation(op.apply(v)) - heisenberg_state_expectation(v)) <= 1e-14


def test_cyclic_evolution_splits_phase():
    """Test total = dynamical + geometric for a cyclic superposition"""
    op = TorusTranslation((1.0, 2.0))
    v = KetVector(2, {(0, 0): math.sqrt(0.75), (1, 0): 0.5})
    record = cyclic_evolution_phase(op, v, 2 * math.pi, rtol=1e-7)
    # the ray orbit is a circle of latitude carrying weight 1/4 on the moving mode
    assert phase_distance(record.geometric_phase, -2 * math.pi * 0.25) < 1e-6
    assert record.dynamical_phase == pytest.approx(0.25 * 2 * math.pi)
    assert phase_distance(record.total_phase, 0.0) < 1e-12
    assert record.closure_defect < 1e-6


def test_cyclic_evolution_requires_return():
    """Test a ray that does not come back is refused"""
    op = TorusTranslation((1.0, 2.0))
    v = KetVector(2, {(0, 0): 1.0, (1, 0): 1.0})
    with pytest.raises(NotCyclicError):
        cyclic_evolution_phase(op, v, 1.0)
