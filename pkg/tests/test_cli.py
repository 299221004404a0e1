import json
import subprocess
import sys
from pathlib import Path

import pytest

from subgoal_pdfa import simulator as sim
from subgoal_pdfa.automaton import learn_pdfa, save_pdfa
from subgoal_pdfa.cli import main
from subgoal_pdfa.trace import write_demonstrations

DATA = Path(__file__).parent / "data"


@pytest.fixture
def four_blocks_run(tmp_path):
    script = sim.four_blocks()
    corpus, _ = sim.generate_demos(script, 24, seed=0, exact=True)
    demos = tmp_path / "demos.csv"
    write_demonstrations(demos, corpus)
    cfg = tmp_path / "config.json"
    script.schema().save(cfg)
    return demos, cfg


def test_infer_summary_and_artifacts(four_blocks_run, tmp_path, capsys):
    demos, cfg = four_blocks_run
    out = tmp_path / "out"
    assert main(["infer", "--demos", str(demos), "--config", str(cfg), "--out-dir", str(out)]) == 0
    assert capsys.readouterr().out.splitlines() == ["|G| = 4", "|Q| = 16", "|F| = 1", "|L| = 24"]
    assert sorted(p.name for p in out.iterdir()) == ["pdfa.json", "subgoals.json", "words.txt"]
    assert len((out / "words.txt").read_text().splitlines()) == 24


def test_infer_is_byte_identical(four_blocks_run, tmp_path):
    demos, cfg = four_blocks_run
    for d in ("a", "b"):
        assert main(["infer", "--demos", str(demos), "--config", str(cfg), "--out-dir", str(tmp_path / d), "--seed", "3"]) == 0
    for name in ("pdfa.json", "subgoals.json", "words.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_infer_flags_override_config(four_blocks_run, tmp_path):
    demos, cfg = four_blocks_run
    raw = json.loads(cfg.read_text())
    raw["radius"] = 0.01
    cfg.write_text(json.dumps(raw))
    out = tmp_path / "o"
    assert main(["infer", "--demos", str(demos), "--config", str(cfg), "--out-dir", str(out), "--radius", "max-member"]) == 0
    assert json.loads((out / "subgoals.json").read_text())["radius_policy"] == "max-member"
    assert main(["infer", "--demos", str(demos), "--config", str(cfg), "--out-dir", str(out)]) == 0
    assert json.loads((out / "subgoals.json").read_text())["radius_policy"] == "fixed(0.01)"


def test_infer_empty_corpus_is_data_error(four_blocks_run, tmp_path, capsys):
    _, cfg = four_blocks_run
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["infer", "--demos", str(empty), "--config", str(cfg), "--out-dir", str(tmp_path)]) == 2
    assert "no demonstrations" in capsys.readouterr().err


def test_infer_bad_config_is_usage_error(four_blocks_run, tmp_path):
    demos, _ = four_blocks_run
    bad = tmp_path / "bad.json"
    bad.write_text('{"n_features": 2, "candidates": [[0, 5]]}')
    assert main(["infer", "--demos", str(demos), "--config", str(bad)]) == 1
    assert main(["infer", "--demos", str(demos), "--config", str(tmp_path / "missing.json")]) == 1
    assert main(["infer", "--demos", str(demos), "--config", str(bad), "--eps", "-1"]) == 1


@pytest.fixture
def three_one(tmp_path):
    p = tmp_path / "pdfa.json"
    save_pdfa(p, learn_pdfa([0, 1], [(0, 1)] * 3 + [(1, 0)]))
    return p


def test_plan(three_one, capsys):
    assert main(["plan", "--pdfa", str(three_one)]) == 0
    assert capsys.readouterr().out.splitlines() == ["plan: 0 1", "expected_probability: 0.750000"]
    assert main(["plan", "--pdfa", str(three_one), "--unreachable", "0"]) == 0
    assert capsys.readouterr().out.startswith("plan: 1 0")


def test_plan_from_accepting_state(three_one, capsys):
    assert main(["plan", "--pdfa", str(three_one), "--start", "2"]) == 0
    assert capsys.readouterr().out.startswith("plan: e\n")


def test_plan_stuck_exit(three_one, tmp_path, capsys):
    assert main(["plan", "--pdfa", str(three_one), "--unreachable", "0,1"]) == 3
    sched = tmp_path / "s.json"
    sched.write_text(json.dumps({"unreachable": {}, "default": [0, 1]}))
    trace = tmp_path / "t.jsonl"
    assert main(["plan", "--pdfa", str(three_one), "--schedule", str(sched), "--trace", str(trace)]) == 3
    assert json.loads(trace.read_text().splitlines()[-1])["event"] == "stuck"


def test_plan_simulate_writes_trace(three_one, tmp_path, capsys):
    sched = tmp_path / "s.json"
    sched.write_text(json.dumps({"unreachable": {"0": [0]}}))
    assert main(["plan", "--pdfa", str(three_one), "--simulate", str(sched), "--out-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "executed: 1 0" in out and "outcome: finished" in out
    events = [json.loads(x)["event"] for x in (tmp_path / "trace.jsonl").read_text().splitlines()]
    assert events[-1] == "finished"


def test_plan_bad_start(three_one):
    assert main(["plan", "--pdfa", str(three_one), "--start", "9"]) == 1


def test_export_golden(tmp_path, capsys):
    p = tmp_path / "p.json"
    save_pdfa(p, learn_pdfa([0], [(0,)]))
    assert main(["export", "--pdfa", str(p)]) == 0
    assert capsys.readouterr().out == (DATA / "two_state.dot").read_text()
    out = tmp_path / "g.dot"
    assert main(["export", "--pdfa", str(p), "--probabilities", "off", "--out", str(out)]) == 0
    assert "label=\"0 :" not in out.read_text() and "q0 -> q1;" in out.read_text()


def test_export_missing_file(tmp_path):
    assert main(["export", "--pdfa", str(tmp_path / "nope.json")]) == 1


def test_export_corrupt_file(tmp_path):
    p = tmp_path / "p.json"
    p.write_text("[1, 2")
    assert main(["export", "--pdfa", str(p)]) == 2


def test_bench_bad_axis():
    with pytest.raises(SystemExit) as exc:
        main(["bench", "--axis", "colour"])
    assert exc.value.code == 1


def test_bench_single_rep_warns(tmp_path, capsys, caplog):
    assert main(["bench", "--axis", "subgoals", "--levels", "3,6", "--reps", "1", "--out-dir", str(tmp_path)]) == 0
    cap = capsys.readouterr()
    assert "single repetition" in caplog.text
    assert cap.out.splitlines()[0] == "axis\tlevel\tstage\tmedian_s\tmad_s"
    assert (tmp_path / "bench_subgoals.tsv").exists()


def test_bench_bad_levels():
    assert main(["bench", "--axis", "demos", "--levels", "200,100"]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["bench", "--axis", "demos", "--levels", "x"])
    assert exc.value.code == 1


def test_generate_then_infer(tmp_path, capsys):
    gen = tmp_path / "gen"
    assert main(["generate", "--preset", "late-block", "--count", "60", "--exact", "--out-dir", str(gen)]) == 0
    assert sorted(p.name for p in gen.iterdir()) == ["config.json", "demos.csv", "schedule.json"]
    out = tmp_path / "out"
    assert main(["infer", "--demos", str(gen / "demos.csv"), "--config", str(gen / "config.json"), "--out-dir", str(out)]) == 0
    capsys.readouterr()
    assert main(["plan", "--pdfa", str(out / "pdfa.json"), "--schedule", str(gen / "schedule.json"), "--out-dir", str(out)]) == 0
    assert "replanned: 2" in capsys.readouterr().out


def test_generate_from_script_file(tmp_path):
    script = tmp_path / "s.json"
    sim.drone_surveillance().save(script)
    assert main(["generate", "--script", str(script), "--count", "3", "--out-dir", str(tmp_path)]) == 0
    assert main(["generate", "--script", str(tmp_path / "none.json"), "--out-dir", str(tmp_path)]) == 1


def test_usage_errors_exit_one():
    for argv in ([], ["infer"], ["frobnicate"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "subgoal_pdfa", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "infer" in res.stdout
