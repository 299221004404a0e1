"""Wall-clock scaling of sub-goal clustering and PDFA inference.

Each axis varies one task property while the others stay fixed:

* ``demos``: four blocks to fixed spots, all orderings, |Omega| = level
* ``subgoals``: three blocks stacked and restacked, |Sigma| = level
* ``language``: four blocks, |Omega| fixed, ``level`` distinct orderings
* ``objects``: five placements shared by ``level`` objects
"""
from __future__ import annotations

import json
import statistics
import timeit
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import simulator as sim
from .automaton import enumerate_language, learn_pdfa
from .subgoals import DbscanParams, RadiusPolicy, infer_subgoals
from .wordgen import corpus_to_words

AXES = ("demos", "subgoals", "language", "objects")
STAGES = ("cluster", "words", "pdfa")
DEFAULT_LEVELS = {
    "demos": [100, 200, 400, 800],
    "subgoals": [3, 6, 9, 12],
    "language": [1, 2, 6, 24],
    "objects": [2, 3, 4, 5],
}
FIXED_DEMOS = {"subgoals": 50, "language": 240, "objects": 50}
JITTER = 0.003


@dataclass
class BenchRow:
    axis: str
    level: int
    stage: str
    median: float
    mad: float
    n_demos: int
    n_symbols: int
    language: int


def design(axis: str, level: int, seed: int = 0, n_demos: Optional[int] = None):
    """Corpus isolating one axis; returns (script, corpus)."""
    if axis == "demos":
        script = sim.four_blocks(jitter=JITTER)
        corpus, _ = sim.generate_demos(script, level, seed)
    elif axis == "language":
        exts = sim.linear_extensions(4, [])
        if not 1 <= level <= len(exts):
            raise ValueError(f"language level must be in 1..{len(exts)}")
        weights = {e: 1.0 for e in exts[:level]}
        script = sim.four_blocks(weights=weights, jitter=JITTER)
        corpus, _ = sim.generate_demos(script, n_demos or FIXED_DEMOS[axis], seed, exact=True)
    elif axis == "subgoals":
        script = sim.stack_unstack(level, jitter=JITTER)
        corpus, _ = sim.generate_demos(script, n_demos or FIXED_DEMOS[axis], seed)
    elif axis == "objects":
        script = sim.objects_design(level, jitter=JITTER)
        corpus, _ = sim.generate_demos(script, n_demos or FIXED_DEMOS[axis], seed)
    else:
        raise ValueError(f"unknown axis {axis!r}; choose from {', '.join(AXES)}")
    return script, corpus


def time_call(fn: Callable[[], object], min_time: float = 0.02) -> float:
    """Seconds per call; fast calls are repeated until ``min_time`` has elapsed (GC off)."""
    timer = timeit.Timer(fn)
    n = 1
    while True:
        elapsed = timer.timeit(n)
        if elapsed >= min_time:
            return elapsed / n
        n = max(2 * n, int(n * min_time / max(elapsed, 1e-9) * 1.1))


def _median_mad(xs: Sequence[float]) -> tuple[float, float]:
    med = statistics.median(xs)
    return med, statistics.median(abs(x - med) for x in xs)


def scaling_bench(
    axis: str,
    levels: Optional[Sequence[int]] = None,
    repetitions: int = 3,
    seed: int = 0,
    stages: Sequence[str] = STAGES,
    params: DbscanParams = DbscanParams(),
    policy: RadiusPolicy = RadiusPolicy("fixed", 0.03),
    min_time: float = 0.02,
) -> list[BenchRow]:
    if axis not in AXES:
        raise ValueError(f"unknown axis {axis!r}; choose from {', '.join(AXES)}")
    levels = list(levels or DEFAULT_LEVELS[axis])
    if any(b < a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be monotone nondecreasing")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    bad = set(stages) - set(STAGES)
    if bad:
        raise ValueError(f"unknown stages {sorted(bad)}")

    setups = []
    for level in levels:
        script, corpus = design(axis, level, seed)
        cands = script.schema().candidates
        sgs = infer_subgoals(corpus, cands, params, policy)
        words = corpus_to_words(corpus, sgs.subgoals)
        alphabet = [g.symbol_id for g in sgs.subgoals]
        lang = len(enumerate_language(learn_pdfa(alphabet, words)))
        calls = {
            "cluster": lambda c=corpus, f=cands: infer_subgoals(c, f, params, policy),
            "words": lambda c=corpus, g=sgs.subgoals: corpus_to_words(c, g),
            "pdfa": lambda a=alphabet, w=words: learn_pdfa(a, w),
        }
        setups.append((level, len(corpus), len(alphabet), lang, calls))

    # each stage gets its own sweep, so large clustering allocations do not
    # disturb the caches seen by the sub-millisecond stages; within a sweep,
    # repetitions cycle through all levels so slow drift in machine speed
    # lands on every level alike
    samples = {}
    for stage in stages:
        for _ in range(repetitions):
            for level, *_, calls in setups:
                samples.setdefault((level, stage), []).append(time_call(calls[stage], min_time))

    rows = []
    for level, n_demos, n_sym, lang, _ in setups:
        for stage in stages:
            med, mad = _median_mad(samples[level, stage])
            rows.append(BenchRow(axis, level, stage, med, mad, n_demos, n_sym, lang))
    return rows


def r_squared(x: Sequence[float], y: Sequence[float]) -> float:
    """Coefficient of determination of the least-squares line through (x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, icept = np.polyfit(x, y, 1)
    resid = y - (slope * x + icept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    return 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0


def stage_series(rows: Sequence[BenchRow], stage: str) -> tuple[list, list]:
    sel = [r for r in rows if r.stage == stage]
    return [r.level for r in sel], [r.median for r in sel]


def to_tsv(rows: Sequence[BenchRow]) -> str:
    lines = ["axis\tlevel\tstage\tmedian_s\tmad_s"]
    for r in rows:
        lines.append(f"{r.axis}\t{r.level}\t{r.stage}\t{r.median:.6g}\t{r.mad:.3g}")
    return "\n".join(lines) + "\n"


def write_outputs(rows: Sequence[BenchRow], out_dir, axis: str) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tsv = out / f"bench_{axis}.tsv"
    tsv.write_text(to_tsv(rows))
    plot = out / f"bench_{axis}.json"
    plot.write_text(json.dumps([asdict(r) for r in rows], indent=2) + "\n")
    return tsv, plot
