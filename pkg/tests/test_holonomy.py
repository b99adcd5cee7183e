"""
Test module for the holonomy engine
"""

import math

import numpy as np
import pytest

from koopholo.errors import ConvergenceError, OrthogonalNeighborsError, TrivialHolonomyError
from koopholo.holonomy import (
    CurveLoop,
    RayLoop,
    holonomy_at,
    holonomy_group_sample,
    lune_loop,
    max_circular_gap,
    pancharatnam_phase,
    parallel_transport_phase,
    phase_distance,
    refine,
    sample_loops,
    two_mode_circle,
    two_mode_circle_phase,
)
from koopholo.koopman import wrap_phase
from koopholo.modes import KetVector, box_modes, fubini_study_distance, random_ket, to_ray

E1, E2 = (1, 0), (0, 1)


def ket(amplitudes):
    return KetVector(2, amplitudes)


@pytest.fixture
def triangle():
    s = 1 / math.sqrt(2)
    return RayLoop.from_kets([ket({E1: 1.0}), ket({E1: s, E2: s}), ket({E1: s, E2: 1j * s})])


@pytest.fixture
def random_loops():
    rng = np.random.default_rng(4)
    modes = box_modes(1, 2)[:4]
    loops = []
    while len(loops) < 500:
        size = int(rng.integers(3, 8))
        loop = RayLoop.from_kets([random_ket(modes, rng) for _ in range(size)])
        if loop.min_overlap() > 1e-3:
            loops.append(loop)
    return loops


def test_constant_loop_has_zero_phase():
    """Test all-equal nodes give phase 0 at level 0"""
    loop = RayLoop([to_ray(ket({E1: 0.6, E2: 0.8j}))] * 5)
    assert pancharatnam_phase(loop).phase == 0
    assert parallel_transport_phase(loop).phase == pytest.approx(0, abs=1e-15)
    result = holonomy_at(loop, rtol=1e-3)
    assert result.phase == 0
    assert len(result.levels) == 1


def winding_circle(theta, winding, resolution):
    a, b = math.cos(theta / 2), math.sin(theta / 2)

    def curve(s):
        angle = 2 * math.pi * winding * s
        return KetVector(2, {E1: a, E2: b * complex(math.cos(angle), math.sin(angle))})

    return CurveLoop(curve, resolution)


def test_aliased_curve_is_refined():
    """Test a curve that looks constant at its starting resolution keeps refining"""
    loop = winding_circle(1.0, 8, 8)
    assert loop.at_resolution(8).is_constant()
    result = holonomy_at(loop, rtol=1e-4)
    assert len(result.levels) > 3
    assert result.resolution >= 1024
    assert phase_distance(result.phase, wrap_phase(8 * -math.pi * (1 - math.cos(1.0)))) < 1e-3


def test_constant_curve_converges_after_two_doublings():
    """Test a truly constant curve stops once two doublings agree"""
    psi = ket({E1: 0.6, E2: 0.8j})
    result = holonomy_at(CurveLoop(lambda s: psi, 4), rtol=1e-8)
    assert result.phase == 0
    assert [level.resolution for level in result.levels] == [4, 8, 16]


def test_bargmann_triangle(triangle):
    """Test the hand-computed (1 + i)/4 product"""
    assert pancharatnam_phase(triangle).phase == pytest.approx(-math.pi / 4, abs=1e-12)
    assert parallel_transport_phase(triangle).phase == pytest.approx(-math.pi / 4, abs=1e-12)
    assert pancharatnam_phase(triangle).min_overlap == pytest.approx(1 / math.sqrt(2))


def test_geodesic_triangle_converges_at_coarse_value(triangle):
    """Test geodesic refinement keeps the Bargmann phase"""
    result = holonomy_at(triangle, rtol=1e-9)
    assert result.phase == pytest.approx(-math.pi / 4, abs=1e-8)
    assert result.resolution == 6


def test_real_great_circle_picks_up_pi():
    """Test a real loop around a closed geodesic circuit"""
    s = 1 / math.sqrt(2)
    loop = RayLoop.from_kets([ket({E1: 1.0}), ket({E1: s, E2: s}), ket({E2: 1.0}), ket({E1: s, E2: -s})])
    assert phase_distance(pancharatnam_phase(loop).phase, math.pi) < 1e-12
    assert phase_distance(parallel_transport_phase(loop).phase, math.pi) < 1e-12


def test_orthogonal_neighbors_rejected():
    """Test loops with orthogonal consecutive nodes are too coarse"""
    loop = RayLoop.from_kets([ket({E1: 1.0}), ket({E2: 1.0}), ket({E1: 1.0, E2: 1.0})])
    with pytest.raises(OrthogonalNeighborsError, match="loop too coarse: orthogonal neighbors"):
        pancharatnam_phase(loop)
    with pytest.raises(OrthogonalNeighborsError):
        refine(loop, 2)


def test_refine_midpoint():
    """Test the slerp midpoint sits at pi/8 from |e1>"""
    s = 1 / math.sqrt(2)
    loop = RayLoop.from_kets([ket({E1: 1.0}), ket({E1: s, E2: s})])
    finer = refine(loop, 2)
    assert len(finer) == 4
    assert finer.nodes[0] is loop.nodes[0] and finer.nodes[2] is loop.nodes[1]
    assert fubini_study_distance(finer.nodes[0], finer.nodes[1]) == pytest.approx(math.pi / 8, abs=1e-12)


def test_refine_constant_loop():
    """Test refining a constant loop keeps it constant"""
    ray = to_ray(ket({E1: 1.0, E2: 2.0}))
    finer = refine(RayLoop([ray] * 3), 4)
    assert len(finer) == 12
    assert all(node == ray for node in finer.nodes)


@pytest.mark.parametrize("theta", [math.pi / 6, math.pi / 3, math.pi / 2])
def test_two_mode_circle_oracle(theta):
    """Test the analytic -pi(1 - cos theta) Berry phase"""
    result = holonomy_at(two_mode_circle(theta, 32), rtol=1e-6)
    assert phase_distance(result.phase, -math.pi * (1 - math.cos(theta))) < 1e-5
    coarse = two_mode_circle(theta, 32).at_resolution(32)
    assert phase_distance(pancharatnam_phase(coarse).phase, parallel_transport_phase(coarse).phase) < 1e-12


def test_two_mode_circle_fine_resolution():
    """Test K = 4096 at theta = pi/2 lands on -pi"""
    loop = two_mode_circle(math.pi / 2).at_resolution(4096)
    assert phase_distance(pancharatnam_phase(loop).phase, -math.pi) < 1e-5
    assert phase_distance(two_mode_circle_phase(math.pi / 2), math.pi) < 1e-12


def test_convergence_is_second_order():
    """Test deltas shrink by at least 3.5 per doubling beyond K = 64"""
    result = holonomy_at(two_mode_circle(math.pi / 3, 32), rtol=1e-7)
    deltas = [level.delta for level in result.levels if level.resolution > 64]
    assert len(deltas) >= 3
    for coarse, fine in zip(deltas, deltas[1:]):
        assert coarse / fine >= 3.5
    assert [level.level for level in result.levels] == list(range(len(result.levels)))
    assert result.refinement_error == result.levels[-1].delta


def test_refining_the_circle_moves_phase_by_order_k_squared():
    """Test the K = 64 to K = 4096 shift is O(1/64^2)"""
    circle = two_mode_circle(math.pi / 3)
    coarse = pancharatnam_phase(circle.at_resolution(64)).phase
    fine = pancharatnam_phase(circle.at_resolution(4096)).phase
    assert phase_distance(coarse, fine) <= 10 / 64**2
    assert phase_distance(fine, -math.pi / 2) < 1e-5


def test_convergence_cap_raises():
    """Test hitting the doubling cap reports the last two phases"""
    with pytest.raises(ConvergenceError) as info:
        holonomy_at(two_mode_circle(math.pi / 3, 8), rtol=1e-12, max_doublings=2)
    assert len(info.value.phases) == 2


def test_invalid_rtol():
    """Test rtol must be positive"""
    with pytest.raises(ValueError):
        holonomy_at(two_mode_circle(1.0), rtol=-1e-6)


def test_gauge_rotation_reversal_invariance(random_loops):
    """Test the three invariances on 500 random loops in a 4-mode space"""
    rng = np.random.default_rng(9)
    for loop in random_loops:
        phase = pancharatnam_phase(loop).phase
        regauged = RayLoop.from_kets(
            [node.representative.phase_shifted(alpha) for node, alpha in zip(loop.nodes, rng.uniform(-4, 4, len(loop)))]
        )
        assert phase_distance(pancharatnam_phase(regauged).phase, phase) < 1e-12
        assert phase_distance(pancharatnam_phase(loop.rotated(int(rng.integers(1, len(loop))))).phase, phase) < 1e-12
        assert phase_distance(pancharatnam_phase(loop.reversed()).phase, -phase) < 1e-12
        assert phase_distance(parallel_transport_phase(loop).phase, phase) < 1e-12


def test_real_loops_give_zero_or_pi():
    """Test loops of real-amplitude rays carry a sign only"""
    rng = np.random.default_rng(21)
    modes = box_modes(1, 1)
    for _ in range(100):
        kets = [KetVector.from_dense(modes, rng.standard_normal(len(modes))) for _ in range(5)]
        loop = RayLoop.from_kets(kets)
        if loop.min_overlap() < 1e-3:
            continue
        phase = pancharatnam_phase(loop).phase
        assert min(phase_distance(phase, 0.0), phase_distance(phase, math.pi)) < 1e-9


@pytest.mark.parametrize("theta", [-2.0, -0.3, 0.0, 1.0, math.pi / 2, math.pi])
def test_lune_loop_has_requested_holonomy(theta):
    """Test the lune loop realizes any phase exactly"""
    loop = lune_loop(KetVector.basis((1, 2)), KetVector.basis((2, 2)), theta)
    assert phase_distance(pancharatnam_phase(loop).phase, theta) < 1e-12
    assert loop.basepoint == to_ray(KetVector.basis((1, 2)))


def test_holonomy_group_sample():
    """Test sampled holonomies fill the circle"""
    base = to_ray(KetVector.basis((0,)))
    assert holonomy_group_sample(base, 1, seed=0, modes=[(1,)]) == [0.0]

    phases = holonomy_group_sample(base, 200, seed=17, modes=[(1,), (2,)])
    assert len(phases) == 200
    assert phases[0] == 0.0
    assert all(-math.pi < p <= math.pi for p in phases)
    assert max_circular_gap(phases) < 0.5
    assert phases == holonomy_group_sample(base, 200, seed=17, modes=[(1,), (2,)])


def test_sampled_loops_reverse_to_negated_phase():
    """Test reversal pairing on the sampled loops"""
    base = to_ray(KetVector.basis((0, 0)))
    for loop in sample_loops(base, 50, seed=3, modes=[(1, 0), (0, 1)]):
        phase = pancharatnam_phase(loop).phase
        assert phase_distance(pancharatnam_phase(loop.reversed()).phase, -phase) < 1e-12


def test_one_dimensional_ray_space_is_trivial():
    """Test a single available mode cannot carry holonomy"""
    with pytest.raises(TrivialHolonomyError, match="holonomy trivial"):
        holonomy_group_sample(to_ray(KetVector.basis((3,))), 10, seed=0, modes=[(3,)])
    with pytest.raises(TrivialHolonomyError):
        sample_loops(to_ray(KetVector.basis((3,))), 10, seed=0, modes=[])


def test_basis_ket_samples_lattice_neighbours():
    """Test a basis-ket basepoint reaches its neighbours when no modes are given"""
    base = to_ray(KetVector.basis((1, 2)))
    assert holonomy_group_sample(base, 1, seed=0) == [0.0]

    loops = sample_loops(base, 20, seed=5)
    support = set()
    for loop in loops:
        for node in loop.nodes:
            support.update(node.representative.amplitudes)
    assert support <= {(1, 2), (0, 2), (2, 2), (1, 1), (1, 3)}
    assert len(support) > 1

    phases = holonomy_group_sample(base, 200, seed=17)
    assert all(-math.pi < p <= math.pi for p in phases)
    assert max_circular_gap(phases) < 0.5
