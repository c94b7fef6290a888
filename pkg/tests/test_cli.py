"""Command line surface: every subcommand through main(), plus the
plan -> replay round trip and its tamper detection."""

import io
import json

import pytest

from pushclutter.cli import main
from pushclutter.geometry import Box, Disk, Pose2
from pushclutter.scene import (
    GOAL_OBJECT, MOVABLE, ROBOT, BodySpec, Rect, Scene, save_scene,
)
from pushclutter.strategies import load_script

SCRIPT = """version: 1
entries:
- {object: a, centroid: [0.45, 0.4]}
- {object: b, centroid: [0.45, -0.4]}
- {object: goal}
"""

FAST = ["--overall", "40000", "--pushing", "8000",
        "--budget-mode", "iterations", "--seed", "2"]


def crates_scene() -> Scene:
    return Scene(name="crates", bodies=(
        BodySpec("robot", ROBOT, Box(0.05, 0.08), Pose2(0.0, 0.0, 0.0)),
        BodySpec("a", MOVABLE, Disk(0.05), Pose2(0.45, 0.25, 0.0)),
        BodySpec("b", MOVABLE, Disk(0.05), Pose2(0.45, -0.25, 0.0)),
        BodySpec("goal", GOAL_OBJECT, Disk(0.04), Pose2(0.9, 0.0, 0.0)),
    ), workspace=Rect(-1, -1, 1.5, 1), pocket=Rect(0.05, -0.06, 0.20, 0.06))


@pytest.fixture()
def crates(tmp_path):
    path = tmp_path / "crates.yaml"
    save_scene(crates_scene(), path)
    return path


@pytest.fixture()
def script_file(tmp_path):
    path = tmp_path / "script.yaml"
    path.write_text(SCRIPT, encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# gen-scenes

def test_gen_scenes_writes_deterministic_files(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["gen-scenes", "--out", str(out), "--count", "2",
                     "--seed", "5", "--objects", "4"]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == ["scene_0005.yaml", "scene_0006.yaml"]
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert "scene_0005.yaml" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# plan

def test_plan_scripted_success_exit_zero(crates, script_file, capsys):
    code = main(["plan", "--scene", str(crates), "--mode", "scripted",
                 "--script", str(script_file), *FAST])
    assert code == 0
    out = capsys.readouterr().out
    assert "status: success" in out
    assert "push a" in out and "reach goal" in out


def test_plan_failure_exit_one(crates, script_file, capsys):
    code = main(["plan", "--scene", str(crates), "--mode", "scripted",
                 "--script", str(script_file), "--seed", "2",
                 "--overall", "4", "--pushing", "1",
                 "--budget-mode", "iterations"])
    assert code == 1
    assert "status: overall_timeout" in capsys.readouterr().out


def test_plan_rejects_hitl(crates, capsys):
    code = main(["plan", "--scene", str(crates), "--mode", "hitl", *FAST])
    assert code == 1
    assert "record" in capsys.readouterr().err


def test_plan_scripted_needs_script(crates, capsys):
    code = main(["plan", "--scene", str(crates), "--mode", "scripted",
                 *FAST])
    assert code == 1
    assert "script" in capsys.readouterr().err


def test_usage_error_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["plan", "--mode", "scripted"])  # --scene missing
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


# ---------------------------------------------------------------------------
# plan -> replay

def test_plan_then_replay_round_trip(crates, script_file, tmp_path, capsys):
    controls = tmp_path / "run.json"
    assert main(["plan", "--scene", str(crates), "--mode", "scripted",
                 "--script", str(script_file), *FAST,
                 "--save-controls", str(controls)]) == 0
    assert main(["replay", "--controls", str(controls)]) == 0
    assert "replay ok" in capsys.readouterr().out

    data = json.loads(controls.read_text())
    assert data["controls_version"] == 1
    assert data["status"] == "success"
    assert all(len(u) == 4 for u in data["controls"])


def test_replay_detects_tampered_controls(crates, script_file, tmp_path,
                                          capsys):
    controls = tmp_path / "run.json"
    main(["plan", "--scene", str(crates), "--mode", "scripted",
          "--script", str(script_file), *FAST,
          "--save-controls", str(controls)])
    data = json.loads(controls.read_text())
    data["controls"][0][0] += 0.05
    controls.write_text(json.dumps(data))
    assert main(["replay", "--controls", str(controls)]) == 1
    assert "diverged" in capsys.readouterr().err


def test_replay_detects_tampered_final_state(crates, script_file, tmp_path,
                                             capsys):
    controls = tmp_path / "run.json"
    main(["plan", "--scene", str(crates), "--mode", "scripted",
          "--script", str(script_file), *FAST,
          "--save-controls", str(controls)])
    data = json.loads(controls.read_text())
    data["final"]["robot"][1] += 1e-6
    controls.write_text(json.dumps(data))
    assert main(["replay", "--controls", str(controls)]) == 1


def test_replay_rejects_unknown_version(tmp_path):
    controls = tmp_path / "run.json"
    controls.write_text('{"controls_version": 99}')
    assert main(["replay", "--controls", str(controls)]) == 1


# ---------------------------------------------------------------------------
# record

def test_record_writes_script_from_stdin(crates, tmp_path, monkeypatch,
                                         capsys):
    monkeypatch.setattr("sys.stdin", io.StringIO(
        "select a\npoint 0.45 0.4\n"
        "select zz\n"          # rejected, does not reach the session
        "select b\npoint 0.45 -0.4\n"
        "goal\n"))
    out = tmp_path / "recorded.yaml"
    code = main(["record", "--scene", str(crates), "--out", str(out),
                 *FAST])
    assert code == 0
    err = capsys.readouterr().err
    assert "unknown object zz" in err
    script = load_script(out)
    assert [e.object for e in script.entries] == ["a", "b", "goal"]
    assert script.entries[0].centroid == (0.45, 0.4)
    assert script.entries[-1].centroid is None


def test_record_abort_exits_nonzero(crates, tmp_path, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO("abort\n"))
    out = tmp_path / "recorded.yaml"
    assert main(["record", "--scene", str(crates), "--out", str(out),
                 *FAST]) == 1
    assert not out.exists()


# ---------------------------------------------------------------------------
# benchmark

def test_benchmark_writes_results_and_table(crates, tmp_path, capsys):
    scenes = tmp_path / "scenes"
    scenes.mkdir()
    save_scene(crates_scene(), scenes / "crates.yaml")
    scripts = tmp_path / "scripts"
    scripts.mkdir()
    (scripts / "crates.yaml").write_text(
        "version: 1\nentries:\n- {object: goal}\n")
    results = tmp_path / "results.jsonl"
    code = main(["benchmark", "--scenes", str(scenes),
                 "--modes", "scripted,bare_kpiece", "--seeds", "0,2",
                 "--scripts", str(scripts), "--out", str(results),
                 "--overall", "20000", "--pushing", "4000",
                 "--budget-mode", "iterations"])
    assert code == 0
    lines = [l for l in results.read_text().splitlines() if l]
    assert len(lines) == 1 + 4  # header + 2 modes x 2 seeds
    out = capsys.readouterr().out
    assert "bare_kpiece" in out and "scripted" in out


def test_benchmark_rejects_unknown_mode(crates, tmp_path, capsys):
    scenes = tmp_path / "scenes"
    scenes.mkdir()
    save_scene(crates_scene(), scenes / "crates.yaml")
    code = main(["benchmark", "--scenes", str(scenes),
                 "--modes", "telepathy", "--seeds", "1"])
    assert code == 1


def test_benchmark_empty_scene_dir_fails(tmp_path, capsys):
    scenes = tmp_path / "scenes"
    scenes.mkdir()
    assert main(["benchmark", "--scenes", str(scenes),
                 "--modes", "bare_rrt", "--seeds", "1"]) == 1
