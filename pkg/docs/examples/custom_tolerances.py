"""
Example demonstrating custom tolerances with the scenario runner
"""

from pathlib import Path

from koopholo import DEFAULT_TOLERANCES, ScenarioRunner, emit_convergence_table
from koopholo.runner import load_scenarios

SCENARIOS = Path(__file__).parent / "scenarios"


def main():
    print("koopholo with custom tolerances")
    print("===============================\n")

    # Stricter node overlap and a lower refinement cap
    strict = DEFAULT_TOLERANCES.clone(overlap=1e-4, max_doublings=10)
    print(f"overlap threshold: {strict.overlap}, doubling cap: {strict.max_doublings}")

    runner = ScenarioRunner(tolerances=strict, base_dir=SCENARIOS)
    for scenario in load_scenarios(SCENARIOS / "convergence_study.json"):
        report = runner.run(scenario)
        print(f"\n{scenario.name}: {report.status}")
        if report.status == "ok":
            print(f"  phase {report.results['phase']:.12f} (exact {report.results['analytic_phase']:.12f})")
            emit_convergence_table(report, f"{scenario.name}.csv")
            print(f"  table written to {scenario.name}.csv")
        else:
            print(f"  {report.error.type}: {report.error.message}")

    # A tight rtol that the capped refinement cannot reach
    print("\nForcing non-convergence with --rtol 1e-13...")
    capped = ScenarioRunner(tolerances=DEFAULT_TOLERANCES.clone(max_doublings=3), rtol=1e-13)
    report = capped.run(load_scenarios(SCENARIOS / "convergence_study.json")[1])
    print(f"status {report.status}, category {report.error.category}: {report.error.message}")


if __name__ == "__main__":
    main()
