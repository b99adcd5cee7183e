"""
Scenario runner: turns validated scenarios into reports.
"""

import json
import logging
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from . import __version__
from .errors import KoopholoError, error_category
from .frames import (
    Frame,
    cyclic_evolution_phase,
    excursion_for_phase,
    extract_geometric_phase,
    frame_net_states,
    heisenberg_state_expectation,
)
from .hannay import (
    EigenFamily,
    ParamLoop,
    PullbackLoop,
    adiabatic_eigen_check,
    coherent_ring_family,
    coherent_ring_mean_mode,
    constant_family,
    hannay_phase,
    tabulated_family,
)
from .holonomy import (
    LoopLike,
    RayLoop,
    RefinementLevel,
    holonomy_at,
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
from .koopman import unitarity_defect, wrap_phase
from .loopstore import load_loop
from .models import Tolerances, resolve
from .modes import KetVector, box_modes, random_ket, to_ray
from .scenario import (
    AngleLoopSpec,
    CircleLoopSpec,
    CoherentRingSpec,
    ConvergenceRow,
    LuneSpec,
    PolygonSpec,
    Provenance,
    Report,
    ReportError,
    Scenario,
    TabulatedSpec,
    TwoModeCircleSpec,
    build_ket,
    build_operator,
    parse_scenarios,
    with_overrides,
)

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ["level", "K", "phase", "delta"]
_Outcome = Tuple[dict, Optional[Sequence[RefinementLevel]], Optional[RayLoop]]


def _pair(z: complex) -> List[float]:
    return [z.real, z.imag]


class ScenarioRunner:
    """Runs scenarios one after another and keeps the finest loop of the last run.

    Args:
        tolerances: Numerical thresholds; defaults to DEFAULT_TOLERANCES
        seed: Overrides the scenario seed of randomized tasks
        rtol: Overrides the scenario refinement tolerance
        base_dir: Directory that relative paths in scenarios are resolved against
    """

    def __init__(
        self,
        tolerances: Optional[Tolerances] = None,
        seed: Optional[int] = None,
        rtol: Optional[float] = None,
        base_dir: Optional[Union[str, Path]] = None,
    ):
        self.tolerances = resolve(tolerances)
        self.seed = seed
        self.rtol = rtol
        self.base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
        self.last_loop: Optional[RayLoop] = None
        self._handlers = {
            "holonomy": self._holonomy,
            "moving_frame": self._moving_frame,
            "hannay": self._hannay,
            "holonomy_sample": self._holonomy_sample,
            "unitarity": self._unitarity,
            "cyclic": self._cyclic,
        }

    def run(self, scenario: Scenario) -> Report:
        scenario = with_overrides(scenario, self.seed, self.rtol)
        self.last_loop = None
        provenance = Provenance(
            version=__version__,
            seed=getattr(scenario.params, "seed", None),
            tolerances=self.tolerances.to_dict(),
        )
        echo = scenario.model_dump(mode="json")
        logger.info("running %s (%s)", scenario.name, scenario.task)
        start = time.process_time()
        try:
            results, levels, loop = self._handlers[scenario.task](scenario)
        except (KoopholoError, ValueError, OSError, OverflowError, RuntimeError) as e:
            category = error_category(e)
            logger.warning("%s failed (%s): %s", scenario.name, category, e)
            error = ReportError(type=type(e).__name__, category=category, message=str(e))
            return Report(status="failed", scenario=echo, provenance=provenance, error=error)
        logger.info("%s finished in %.3fs", scenario.name, time.process_time() - start)
        self.last_loop = loop
        convergence = [ConvergenceRow(**level.to_dict()) for level in levels] if levels else None
        return Report(status="ok", scenario=echo, results=results, convergence=convergence, provenance=provenance)

    def run_all(self, scenarios: Sequence[Scenario]) -> List[Report]:
        return [self.run(s) for s in scenarios]

    def _path(self, name: str) -> Path:
        path = Path(name)
        return path if path.is_absolute() else self.base_dir / path

    # --- holonomy ---
    def _build_loop(self, spec) -> LoopLike:
        if isinstance(spec, TwoModeCircleSpec):
            return two_mode_circle(spec.theta, spec.resolution, spec.modes)
        if isinstance(spec, PolygonSpec):
            return RayLoop.from_kets([build_ket(node) for node in spec.nodes], self.tolerances)
        if isinstance(spec, LuneSpec):
            return lune_loop(KetVector.basis(spec.base), KetVector.basis(spec.partner), spec.theta, tolerances=self.tolerances)
        return load_loop(self._path(spec.path), self.tolerances)

    def _holonomy(self, scenario: Scenario) -> _Outcome:
        params = scenario.params
        loop = self._build_loop(params.loop)
        result = holonomy_at(loop, params.rtol, self.tolerances, params.max_doublings)
        if isinstance(loop, RayLoop):
            coarse = loop
            doublings = len(result.levels) - 1
            finest = refine(loop, 2**doublings, self.tolerances) if doublings else loop
        else:
            coarse = loop.at_resolution(loop.resolution)
            finest = loop.at_resolution(result.resolution)
        gap = phase_distance(
            pancharatnam_phase(coarse, self.tolerances).phase,
            parallel_transport_phase(coarse, self.tolerances).phase,
        )
        results = {
            "phase": result.phase,
            "holonomy": _pair(result.holonomy),
            "min_overlap": result.min_overlap,
            "refinement_error": result.refinement_error,
            "resolution": result.resolution,
            "estimator_gap": gap,
        }
        if isinstance(params.loop, TwoModeCircleSpec):
            exact = two_mode_circle_phase(params.loop.theta)
            results["analytic_phase"] = exact
            results["analytic_error"] = phase_distance(result.phase, exact)
        return results, result.levels, finest

    # --- moving frame ---
    def _moving_frame(self, scenario: Scenario) -> _Outcome:
        params = scenario.params
        op = build_operator(scenario.system)
        frame = Frame([KetVector.basis(m) for m in [params.mode] + params.frame_modes], self.tolerances)
        partner = KetVector.basis(params.partner) if params.partner is not None else None
        excursion = excursion_for_phase(frame, 0, params.theta, partner, self.tolerances)
        records = frame_net_states(op, frame, {0: excursion}, params.rtol, self.tolerances)
        moved = records[0]
        member = frame.member_ket(0)
        extracted = extract_geometric_phase(moved.total, op, member, self.tolerances)
        bystanders = [r.total.distance(op.apply(frame.member_ket(r.member))) for r in records[1:]]
        before = heisenberg_state_expectation(member)
        after = heisenberg_state_expectation(moved.total)
        results = {
            "theta": wrap_phase(params.theta),
            "geometric_phase": moved.geometric_phase,
            "extracted_phase": extracted,
            "round_trip_error": phase_distance(extracted, params.theta),
            "record_defect": moved.defect(),
            "bystander_defect": max(bystanders, default=0.0),
            "state_expectation": {"before": _pair(before), "after": _pair(after)},
            "total": moved.total.to_records(),
        }
        return results, moved.levels, excursion.member_loop

    # --- hannay ---
    def _build_family(self, spec) -> EigenFamily:
        if isinstance(spec, CoherentRingSpec):
            return coherent_ring_family(spec.r, spec.k_cut)
        if isinstance(spec, TabulatedSpec):
            return tabulated_family(self._path(spec.path), spec.period, spec.mode)
        return constant_family(build_ket(spec.ket))

    @staticmethod
    def _build_param_loop(spec) -> ParamLoop:
        if isinstance(spec, AngleLoopSpec):
            return ParamLoop.angle(spec.period, spec.resolution, spec.start)
        if isinstance(spec, CircleLoopSpec):
            return ParamLoop.circle(spec.center, spec.radius, spec.resolution)
        return ParamLoop.from_samples(spec.points, spec.periods)

    def _hannay(self, scenario: Scenario) -> _Outcome:
        params = scenario.params
        family = self._build_family(params.family)
        loop = self._build_param_loop(params.loop)
        record = hannay_phase(family, loop, params.rtol, self.tolerances, params.max_doublings)
        results = {
            "phase": record.phase,
            "mode": list(record.mode),
            "loop_resolution": record.loop_resolution,
            "refinement_error": record.refinement_error,
        }
        if isinstance(params.family, CoherentRingSpec) and isinstance(params.loop, AngleLoopSpec):
            turns = params.loop.period / (2 * np.pi)
            if abs(turns - round(turns)) < 1e-12:
                mean = coherent_ring_mean_mode(params.family.r)
                exact = wrap_phase(-params.loop.period * mean)
                results["mean_mode"] = mean
                results["analytic_phase"] = exact
                results["analytic_error"] = phase_distance(record.phase, exact)
        if scenario.system is not None:
            op = build_operator(scenario.system)
            results["eigen_residual"] = adiabatic_eigen_check(family, lambda point: op, loop)
        finest = PullbackLoop(family, loop, self.tolerances).at_resolution(record.loop_resolution)
        return results, record.levels, finest

    # --- holonomy group sample ---
    def _holonomy_sample(self, scenario: Scenario) -> _Outcome:
        params = scenario.params
        basepoint = to_ray(build_ket(params.basepoint), self.tolerances)
        loops = sample_loops(
            basepoint, params.n_loops, params.seed, params.modes or None, params.n_vertices, self.tolerances
        )
        phases = [pancharatnam_phase(loop, self.tolerances).phase for loop in loops]
        reversal = max(
            phase_distance(pancharatnam_phase(loop.reversed(), self.tolerances).phase, -phase)
            for loop, phase in zip(loops, phases)
        )
        rotation = max(
            phase_distance(pancharatnam_phase(loop.rotated(1), self.tolerances).phase, phase)
            for loop, phase in zip(loops, phases)
        )
        results = {
            "n_loops": len(loops),
            "phases": phases,
            "max_gap": max_circular_gap(phases),
            "reversal_defect": reversal,
            "rotation_defect": rotation,
        }
        return results, None, None

    # --- unitarity ---
    def _unitarity(self, scenario: Scenario) -> _Outcome:
        params = scenario.params
        op = build_operator(scenario.system)
        modes = box_modes(op.dim, params.n_max)
        rng = np.random.default_rng(params.seed)
        sample: List[KetVector] = []
        for _ in range(params.sample_size):
            picked = rng.choice(len(modes), size=min(params.support, len(modes)), replace=False)
            sample.append(random_ket([modes[i] for i in sorted(picked)], rng))
        images = [op.apply(v) for v in sample]
        results = {
            "sample_size": len(sample),
            "max_defect": unitarity_defect(op, sample),
            "norm_defect": max(abs(u.norm() - v.norm()) for u, v in zip(images, sample)),
            "state_drift": max(
                abs(heisenberg_state_expectation(u) - heisenberg_state_expectation(v)) for u, v in zip(images, sample)
            ),
        }
        return results, None, None

    # --- cyclic evolution ---
    def _cyclic(self, scenario: Scenario) -> _Outcome:
        params = scenario.params
        op = build_operator(scenario.system)
        record = cyclic_evolution_phase(op, build_ket(params.ket), params.period, params.rtol, self.tolerances)
        results = {
            "total_phase": record.total_phase,
            "dynamical_phase": record.dynamical_phase,
            "geometric_phase": record.geometric_phase,
            "closure_defect": record.closure_defect,
            "resolution": record.holonomy.resolution,
        }
        return results, record.holonomy.levels, None


def run(scenario: Scenario, **kwargs) -> Report:
    """Run one scenario with a fresh ScenarioRunner(**kwargs)."""
    return ScenarioRunner(**kwargs).run(scenario)


def load_scenarios(path: Union[str, Path]) -> List[Scenario]:
    return parse_scenarios(Path(path).read_text(encoding="utf-8"))


def write_report(report: Union[Report, Sequence[Report]], path: Union[str, Path]) -> None:
    if isinstance(report, Report):
        text = report.model_dump_json(indent=2)
    else:
        text = json.dumps([r.model_dump(mode="json") for r in report], indent=2)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_report(path: Union[str, Path]) -> Report:
    return Report.model_validate_json(Path(path).read_text(encoding="utf-8"))


def convergence_frame(report: Report) -> pd.DataFrame:
    if report.status != "ok" or not report.convergence:
        raise ValueError("report has no refinement sequence")
    return pd.DataFrame([row.model_dump() for row in report.convergence], columns=TABLE_COLUMNS)


def emit_convergence_table(report: Report, path: Union[str, Path]) -> None:
    """Write the refinement sequence as a CSV with columns level,K,phase,delta."""
    convergence_frame(report).to_csv(path, index=False, float_format="%.17g")


def summarize(report: Report) -> Dict[str, object]:
    """Scalar results only, for terminal display."""
    return {k: v for k, v in report.results.items() if isinstance(v, (int, float, str))}
