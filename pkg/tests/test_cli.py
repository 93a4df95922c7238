import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from windguide.cli import Scenario, dump_scenario, load_scenario, main
from windguide.sim import TrajectoryLog

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _csv_rows(text):
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def _write(tmp_path, text, name="scenario.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_solve_linear_wind_scenario(capsys):
    code, out, _ = _run(capsys, "solve", SCENARIOS / "linear_wind_2d.yaml")
    assert code == 0
    doc = json.loads(out)
    assert doc["p_r"] == pytest.approx([1.33, 0.74, 0.0], abs=0.01)
    assert doc["p_v0"] == pytest.approx([1.99, 2.32, 0.0], abs=0.01)
    assert doc["roots"] and all({"tf", "cost", "admissible", "critical"} <= set(r) for r in doc["roots"])
    assert doc["classification"]["t_r"] == 30.0


def test_solve_reports_critical_root(capsys):
    _, out, _ = _run(capsys, "solve", SCENARIOS / "critical_1d.yaml")
    roots = json.loads(out)["roots"]
    assert [r["critical"] for r in roots] == [False, True]
    assert roots[1]["tf"] == pytest.approx(2.0)


def test_solve_at_target_sentinel(capsys):
    code, out, _ = _run(capsys, "solve", SCENARIOS / "at_target.yaml")
    assert code == 0 and json.loads(out)["tf"] == 0.0


def test_over_critical_heading_exits_3(capsys):
    code, _, err = _run(capsys, "solve", SCENARIOS / "over_critical_heading.yaml")
    assert code == 3
    assert "45 deg" in err and "30 deg" in err


def test_classify(capsys):
    code, out, _ = _run(capsys, "classify", SCENARIOS / "bifurcation_intercept.yaml")
    doc = json.loads(out)
    assert code == 0 and doc["category"] and doc["K"] > 0


@pytest.mark.parametrize(
    "text, path",
    [
        ("kind: rendezvous\ntrade_off: 1\nboundary: {r0: [1, 0, 0], vg0: [0, 0, 0], vgf: [0, 0, 0]}\nextra: 1\n", "extra"),
        ("kind: rendezvous\ntrade_off: 1\nboundary: {r0: [1, 0], vg0: [0, 0, 0], vgf: [0, 0, 0]}\n", "boundary.r0"),
        ("kind: intercept\ntrade_off: -1\nboundary: {r0: [1, 0, 0], vg0: [0, 0, 0]}\n", "trade_off"),
        ("kind: intercept\ntrade_off: 1\nboundary: {r0: [1, 0, 0], vg0: [0, 0, 0]}\nwind: {type: linear, k: [1, 0]}\n", "wind.linear.k"),
        ("kind: intercept\ntrade_off: 1\nboundary: {r0: [1, 0, 0], vg0: [0, 0, 0]}\nwind: {type: gusty}\n", "wind"),
        ("kind: rendezvous\ntrade_off: 1\nboundary: {r0: [1, 0, 0], vg0: [0, 0, 0]}\n", "boundary.vgf"),
    ],
)
def test_validation_errors_name_the_field(tmp_path, capsys, text, path):
    code, _, err = _run(capsys, "solve", _write(tmp_path, text))
    assert code == 2
    assert path in err


def test_missing_file_and_bad_yaml(tmp_path, capsys):
    assert _run(capsys, "solve", tmp_path / "nope.yaml")[0] == 2
    assert _run(capsys, "solve", _write(tmp_path, "kind: [unclosed\n"))[0] == 2


def test_simulate_open_loop_csv(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    code, _, _ = _run(capsys, "simulate", SCENARIOS / "linear_wind_2d.yaml", "--out", out, "--seed", 7)
    assert code == 0
    text = out.read_text()
    assert text.splitlines()[0] == ",".join(TrajectoryLog.COLUMNS)
    rows = _csv_rows(text)
    last = rows[-1]
    assert max(abs(float(last[c])) for c in ("x", "y", "z")) < 1e-6
    assert any(line.startswith("# t_arrival=") for line in text.splitlines())
    meta = json.loads((tmp_path / "traj.csv.meta.json").read_text())
    assert meta["seed"] == 7 and meta["command"] == "simulate"


def test_simulate_piecewise_footer(capsys):
    code, out, _ = _run(capsys, "simulate", SCENARIOS / "spatial_field.yaml")
    assert code == 0
    arrival = [line for line in out.splitlines() if line.startswith("# t_arrival=")]
    assert arrival and float(arrival[0].split("=")[1]) > 0


def test_simulate_json_lines(capsys):
    code, out, _ = _run(capsys, "simulate", SCENARIOS / "shear.yaml", "--format", "json-lines")
    lines = [json.loads(line) for line in out.splitlines()]
    assert code == 0 and set(lines[0]) == set(TrajectoryLog.COLUMNS)
    assert lines[-1]["summary"]["position_error"] < 1e-9


def test_simulate_divergence_exits_4(tmp_path, capsys):
    text = (SCENARIOS / "linear_wind_2d.yaml").read_text() + "sim: {max_time: 1.0}\n"
    assert _run(capsys, "simulate", _write(tmp_path, text))[0] == 4


def test_pareto_branch_collapse_near_eighteen(capsys):
    code, out, _ = _run(capsys, "pareto", SCENARIOS / "critical_1d.yaml", "--min", 0.1, "--max", 30, "--steps", 40, "--log")
    assert code == 0
    rows = _csv_rows(out)
    counts = {}
    for r in rows:
        counts[float(r["c_i"])] = counts.get(float(r["c_i"]), 0) + 1
    below = [n for c, n in counts.items() if c < 17.5]
    above = [n for c, n in counts.items() if c > 18.5]
    assert set(below) == {3} and set(above) == {1}


def test_roots_bifurcations(capsys):
    found = {}
    for name in ("bifurcation_intercept", "bifurcation_rendezvous"):
        code, out, _ = _run(capsys, "roots", SCENARIOS / f"{name}.yaml", "--min", 0, "--max", 1.2, "--steps", 121)
        assert code == 0
        (bif,) = [r for r in _csv_rows(out) if r["row"].startswith("bifurcation")]
        found[name] = float(bif["param"])
        assert float(bif["K"]) == pytest.approx(1.5, abs=1e-3)
    assert found["bifurcation_intercept"] == pytest.approx(0.577, abs=0.01)
    assert found["bifurcation_rendezvous"] == pytest.approx(1.0, abs=0.01)


def test_single_step_grid_gives_single_row(capsys):
    _, out, _ = _run(capsys, "pareto", SCENARIOS / "linear_wind_2d.yaml", "--min", 5, "--max", 5, "--steps", 1)
    assert len(_csv_rows(out)) == 1
    _, out, _ = _run(capsys, "roots", SCENARIOS / "bifurcation_intercept.yaml", "--min", 2, "--max", 2, "--steps", 1)
    assert len({r["param"] for r in _csv_rows(out)}) == 1


@pytest.mark.parametrize("flags", [("--min", 3, "--max", 1, "--steps", 4), ("--min", 0, "--max", 1, "--steps", 0), ("--min", 0, "--max", 1, "--steps", 3, "--log")])
def test_invalid_grid_exits_2(capsys, flags):
    assert _run(capsys, "pareto", SCENARIOS / "critical_1d.yaml", *flags)[0] == 2


def test_outputs_are_deterministic(tmp_path, capsys):
    for cmd, extra in (("simulate", ()), ("pareto", ("--min", 0.1, "--max", 30, "--steps", 9, "--log"))):
        texts = []
        for i in range(2):
            out = tmp_path / f"{cmd}{i}.csv"
            _run(capsys, cmd, SCENARIOS / "critical_1d.yaml", "--out", out, *extra)
            texts.append(out.read_bytes())
        assert texts[0] == texts[1]


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.yaml")), ids=lambda p: p.stem)
def test_bundled_scenarios_round_trip(path):
    once = dump_scenario(load_scenario(path.read_text()))
    assert dump_scenario(load_scenario(once)) == once


finite = st.floats(-1e6, 1e6, allow_nan=False).filter(lambda x: x == 0 or abs(x) > 1e-300)
triple = st.tuples(finite, finite, finite).map(list)
wind = st.one_of(
    st.fixed_dictionaries({"type": st.just("constant"), "w0": triple}),
    st.fixed_dictionaries({"type": st.just("linear"), "w0": triple, "k": triple}),
    st.fixed_dictionaries({"type": st.just("shear"), "k_shear": finite}),
    st.fixed_dictionaries({
        "type": st.just("piecewise"),
        "segments": st.lists(st.fixed_dictionaries({"t_start": finite, "w0": triple, "k": triple}), min_size=1, max_size=3),
    }),
    st.fixed_dictionaries({
        "type": st.just("spatial"),
        "wx": st.dictionaries(st.sampled_from(["1", "x", "y", "xx", "xy", "yy"]), finite),
        "wy": st.dictionaries(st.sampled_from(["1", "x", "y", "xx", "xy", "yy"]), finite),
    }),
)
scenarios = st.builds(
    lambda kind, c, r0, rf, vg0, vgf, w: {
        "kind": kind,
        "trade_off": abs(c),
        "boundary": {"r0": r0, "rf": rf, "vg0": vg0, **({"vgf": vgf} if kind == "rendezvous" else {})},
        "wind": w,
    },
    st.sampled_from(["rendezvous", "intercept"]), finite, triple, triple, triple, triple, wind,
)


@given(scenarios)
def test_round_trip_is_byte_identical(data):
    first = dump_scenario(Scenario.model_validate(data))
    assert dump_scenario(load_scenario(first)) == first


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "windguide", "solve", str(SCENARIOS / "critical_1d.yaml")],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0 and json.loads(proc.stdout)["tf"] == pytest.approx(0.8284271247, rel=1e-9)
