"""
Test module for the koopholo command line
"""

import json
import math
import shutil
from pathlib import Path

import pandas as pd
import pytest

from koopholo.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, main
from koopholo.loopstore import load_loop

SCENARIOS = Path(__file__).parent.parent / "docs" / "examples" / "scenarios"


def write_scenario(tmp_path, payload, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def test_run_writes_report(tmp_path):
    """Test a successful run exits 0 with a report on disk"""
    out = tmp_path / "report.json"
    assert main(["unitarity", str(SCENARIOS / "unitarity_cat.json"), "-o", str(out)]) == EXIT_OK
    report = json.loads(out.read_text())
    assert report["status"] == "ok"
    assert report["results"]["max_defect"] == 0.0


def test_task_subcommand_rejects_other_tasks():
    """Test a holonomy command refuses a unitarity scenario"""
    assert main(["holonomy", str(SCENARIOS / "unitarity_cat.json")]) == EXIT_CONFIG


def test_invalid_scenario_exit_code(tmp_path):
    """Test det = 4 is a configuration error"""
    path = write_scenario(tmp_path, {"system": {"matrix": [[2, 0], [0, 2]]}, "task": "unitarity"})
    assert main(["run", path]) == EXIT_CONFIG


def test_missing_file_exit_code(tmp_path):
    """Test unreadable scenarios are I/O errors"""
    assert main(["run", str(tmp_path / "missing.json")]) == EXIT_IO


def test_negative_rtol_override():
    """Test overrides are validated like the file"""
    assert main(["holonomy", str(SCENARIOS / "holonomy_two_mode_circle.json"), "--rtol", "-1"]) == EXIT_CONFIG


def test_convergence_failure_writes_no_table(tmp_path):
    """Test a capped refinement exits 3 without a table"""
    path = write_scenario(
        tmp_path,
        {
            "task": "holonomy",
            "task_params": {
                "loop": {"kind": "two_mode_circle", "theta": math.pi / 3},
                "rtol": 1e-12,
                "max_doublings": 1,
            },
        },
    )
    table = tmp_path / "table.csv"
    out = tmp_path / "report.json"
    assert main(["holonomy", path, "--table", str(table), "-o", str(out)]) == EXIT_NUMERICAL
    assert not table.exists()
    report = json.loads(out.read_text())
    assert report["status"] == "failed"
    assert report["error"]["type"] == "ConvergenceError"


def test_table_requested_without_sequence(tmp_path):
    """Test tasks without refinement cannot produce a table"""
    table = tmp_path / "table.csv"
    assert main(["run", str(SCENARIOS / "unitarity_cat.json"), "--table", str(table)]) == EXIT_NUMERICAL
    assert not table.exists()


def test_table_and_loop_dump(tmp_path):
    """Test the table and cached loop of a holonomy run"""
    table = tmp_path / "table.csv"
    cache = tmp_path / "loop.khloop"
    args = ["holonomy", str(SCENARIOS / "holonomy_two_mode_circle.json"), "--table", str(table), "--dump-loop", str(cache)]
    assert main(args) == EXIT_OK
    frame = pd.read_csv(table)
    assert list(frame.columns) == ["level", "K", "phase", "delta"]
    assert frame["K"].iloc[0] == 32
    assert len(load_loop(cache)) == frame["K"].iloc[-1]
    assert main(["show-loop", str(cache)]) == EXIT_OK


def test_show_loop_on_foreign_file(tmp_path):
    """Test show-loop refuses files without the loop header"""
    path = tmp_path / "junk.khloop"
    path.write_bytes(b"junk" * 8)
    assert main(["show-loop", str(path)]) == EXIT_CONFIG
    assert main(["show-loop", str(tmp_path / "absent.khloop")]) == EXIT_IO


@pytest.mark.parametrize("content", [b"KHLOOP", b"KHLOOP" + b"\0\0\0\1" + b"\0" * 7 + b"\x40" + b"\xff" * 64])
def test_corrupt_loop_cache_exits_with_config_status(tmp_path, content):
    """Test truncated or garbled caches map to exit 2 in show-loop and stored loops"""
    cache = tmp_path / "bad.khloop"
    cache.write_bytes(content)
    assert main(["show-loop", str(cache)]) == EXIT_CONFIG
    path = write_scenario(tmp_path, {"task": "holonomy", "task_params": {"loop": {"kind": "stored", "path": "bad.khloop"}}})
    assert main(["holonomy", path]) == EXIT_CONFIG


def test_batch_tables_are_suffixed(tmp_path):
    """Test one table per scenario of a batch file"""
    table = tmp_path / "study.csv"
    out = tmp_path / "reports.json"
    assert main(["holonomy", str(SCENARIOS / "convergence_study.json"), "--table", str(table), "-o", str(out)]) == EXIT_OK
    assert (tmp_path / "study-circle-pi-6.csv").exists()
    assert (tmp_path / "study-circle-pi-3.csv").exists()


def test_batch_with_duplicate_names_is_refused(tmp_path):
    """Test a batch whose outputs would overwrite each other exits 2 before running"""
    circle = {"name": "circle", "task": "holonomy", "task_params": {"loop": {"kind": "two_mode_circle", "theta": 1.0}}}
    path = write_scenario(tmp_path, [circle, circle])
    table = tmp_path / "study.csv"
    assert main(["holonomy", path, "--table", str(table)]) == EXIT_CONFIG
    assert not (tmp_path / "study-circle.csv").exists()
    assert not table.exists()
    assert [r["scenario"]["name"] for r in json.loads(out.read_text())] == ["circle-pi-6", "circle-pi-3"]


def test_relative_paths_resolve_next_to_scenario(tmp_path):
    """Test tabulated families load relative to the scenario file"""
    shutil.copy(SCENARIOS / "hannay_tabulated.json", tmp_path)
    shutil.copy(SCENARIOS / "tabulated_ring.csv", tmp_path)
    assert main(["hannay", str(tmp_path / "hannay_tabulated.json")]) == EXIT_OK


def test_seed_override_in_report(tmp_path):
    """Test --seed lands in the provenance block"""
    out = tmp_path / "report.json"
    assert main(["run", str(SCENARIOS / "holonomy_sample.json"), "--seed", "3", "-o", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["provenance"]["seed"] == 3


def test_version_flag(capsys):
    """Test --version exits through argparse"""
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "koopholo" in capsys.readouterr().out
