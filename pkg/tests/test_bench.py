import json

import numpy as np
import pytest

from subgoal_pdfa import bench


def test_r_squared_matches_correlation():
    rng = np.random.default_rng(0)
    x = np.arange(10.0)
    y = 2 * x + rng.normal(size=10)
    assert bench.r_squared(x, y) == pytest.approx(np.corrcoef(x, y)[0, 1] ** 2)
    assert bench.r_squared([1, 2, 3], [5, 5, 5]) == 1.0


@pytest.mark.parametrize("axis,level,n_sym", [("subgoals", 6, 6), ("objects", 3, 5), ("language", 6, 4), ("demos", 30, 4)])
def test_design_isolates_axis(axis, level, n_sym):
    script, corpus = bench.design(axis, level, seed=0, n_demos=30)
    assert len(script.targets) == n_sym
    assert len(corpus) == 30
    if axis == "objects":
        assert len(script.objects) == level
    if axis == "language":
        assert len(script.weighted_extensions()) == level


def test_design_rejects_bad_axis():
    with pytest.raises(ValueError):
        bench.design("colour", 1)


def test_bench_rows_and_outputs(tmp_path):
    rows = bench.scaling_bench("subgoals", [3, 6], repetitions=1, min_time=0.001)
    assert [(r.level, r.stage) for r in rows] == [(l, s) for l in (3, 6) for s in bench.STAGES]
    assert all(r.median > 0 and r.mad == 0 for r in rows)
    assert {r.n_symbols for r in rows} == {3, 6}
    assert all(r.language == 1 for r in rows)
    tsv, js = bench.write_outputs(rows, tmp_path, "subgoals")
    lines = tsv.read_text().splitlines()
    assert lines[0] == "axis\tlevel\tstage\tmedian_s\tmad_s"
    assert len(lines) == 7 and lines[1].startswith("subgoals\t3\tcluster\t")
    assert len(json.loads(js.read_text())) == 6


def test_bench_validation():
    with pytest.raises(ValueError):
        bench.scaling_bench("bogus")
    with pytest.raises(ValueError):
        bench.scaling_bench("demos", [200, 100])
    with pytest.raises(ValueError):
        bench.scaling_bench("demos", [100], repetitions=0)
    with pytest.raises(ValueError):
        bench.scaling_bench("demos", [100], stages=("render",))


def test_demos_axis_grows():
    rows = bench.scaling_bench("demos", [25, 400], repetitions=3, stages=("cluster", "pdfa"), min_time=0.005)
    for stage in ("cluster", "pdfa"):
        _, t = bench.stage_series(rows, stage)
        assert t[0] <= t[1]
