"""World states, demonstrations and the ball-membership predicate.

A feature value of ``None`` marks an undefined feature (for example an
object that was not detected). It is never encoded as a number.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

UNDEF_TOKEN = "undef"


class SchemaError(ValueError):
    """Feature indices or dimensions do not match the corpus."""


class LoadError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


def _check_value(v) -> Optional[float]:
    if v is None:
        return None
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"feature values must be finite, got {v!r}")
    return v


@dataclass(frozen=True)
class WorldState:
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(_check_value(v) for v in self.values))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def is_complete(self) -> bool:
        return all(v is not None for v in self.values)


@dataclass(frozen=True)
class Demonstration:
    states: tuple

    def __post_init__(self):
        states = tuple(s if isinstance(s, WorldState) else WorldState(s) for s in self.states)
        if not states:
            raise ValueError("a demonstration needs at least one state")
        n = len(states[0])
        if any(len(s) != n for s in states):
            raise SchemaError("all states of a demonstration must share one dimension")
        object.__setattr__(self, "states", states)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def n_features(self) -> int:
        return len(self.states[0])

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(values, defined) arrays of shape (T, n); undefined entries hold 0."""
        defined = np.array([[v is not None for v in s.values] for s in self.states], dtype=bool)
        values = np.array(
            [[0.0 if v is None else v for v in s.values] for s in self.states], dtype=float
        )
        return values, defined

    @classmethod
    def from_arrays(cls, values: np.ndarray, defined: Optional[np.ndarray] = None) -> "Demonstration":
        values = np.asarray(values, dtype=float)
        if defined is None:
            defined = np.ones(values.shape, dtype=bool)
        rows = []
        for row, ok in zip(values.tolist(), defined.tolist()):
            rows.append(WorldState(tuple(v if d else None for v, d in zip(row, ok))))
        demo = cls(tuple(rows))
        # seed the cache so large synthetic corpora skip the rebuild
        demo.__dict__["arrays"] = (np.where(defined, values, 0.0), defined.copy())
        return demo


@dataclass(frozen=True)
class FeatureSubset:
    indices: tuple
    id: int = 0

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise SchemaError("feature subset must be non-empty")
        if any(i < 0 for i in idx) or any(b <= a for a, b in zip(idx, idx[1:])):
            raise SchemaError(f"feature subset indices must be strictly increasing and >= 0: {idx}")
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return len(self.indices)

    def check(self, n_features: int) -> None:
        if self.indices[-1] >= n_features:
            raise SchemaError(
                f"feature subset {self.indices} out of range for {n_features} features"
            )


@dataclass(frozen=True)
class PartialState:
    values: tuple
    subset_id: int


@dataclass(frozen=True)
class SubGoal:
    center: tuple
    radius: float
    subset: FeatureSubset
    symbol_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.radius > 0:
            raise ValueError(f"sub-goal radius must be positive, got {self.radius}")
        if len(self.center) != len(self.subset):
            raise SchemaError("sub-goal center dimension must match its feature subset")

    @property
    def subset_id(self) -> int:
        return self.subset.id


def project(subset: FeatureSubset, state: WorldState) -> Optional[PartialState]:
    """Select the subset's features from ``state``; None if any of them is undefined."""
    subset.check(len(state))
    vals = tuple(state.values[i] for i in subset.indices)
    if any(v is None for v in vals):
        return None
    return PartialState(vals, subset.id)


def distance(a: Sequence[float], b: Sequence[float]) -> float:
    return math.dist(a, b)


def satisfies(g: SubGoal, state: WorldState, radius: Optional[float] = None) -> bool:
    p = project(g.subset, state)
    if p is None:
        return False
    r = g.radius if radius is None else radius
    return distance(p.values, g.center) <= r


def satisfied_mask(g: SubGoal, demo: Demonstration, radius: Optional[float] = None) -> np.ndarray:
    """Vectorised ``satisfies`` over every state of a demonstration."""
    g.subset.check(demo.n_features)
    values, defined = demo.arrays
    idx = list(g.subset.indices)
    diff = values[:, idx] - np.asarray(g.center)
    dist = np.sqrt(np.sum(diff * diff, axis=1))
    r = g.radius if radius is None else radius
    return defined[:, idx].all(axis=1) & (dist <= r)


@dataclass
class Schema:
    n_features: int
    candidates: list = field(default_factory=list)
    feature_names: Optional[list] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        subsets = []
        for i, c in enumerate(self.candidates):
            fs = c if isinstance(c, FeatureSubset) else FeatureSubset(tuple(c), i)
            fs.check(self.n_features)
            subsets.append(fs)
        self.candidates = subsets
        if self.feature_names is not None and len(self.feature_names) != self.n_features:
            raise SchemaError("feature_names length must equal n_features")

    @classmethod
    def load(cls, path) -> "Schema":
        with open(path) as f:
            try:
                raw = json.load(f)
            except json.JSONDecodeError as e:
                raise LoadError(f"invalid config: {e.msg}", e.lineno, path) from None
        try:
            n = int(raw.pop("n_features"))
            candidates = raw.pop("candidates", None)
            names = raw.pop("feature_names", None)
        except KeyError as e:
            raise LoadError(f"config is missing {e}", path=path) from None
        if candidates is None:
            candidates = [list(range(n))]
        return cls(n, candidates, names, raw)

    def to_json(self) -> dict:
        out = {"n_features": self.n_features}
        if self.feature_names is not None:
            out["feature_names"] = list(self.feature_names)
        out["candidates"] = [list(c.indices) for c in self.candidates]
        out.update(self.extra)
        return out

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")


def _parse_field(tok: str, lineno: int, path) -> Optional[float]:
    tok = tok.strip()
    if tok == UNDEF_TOKEN:
        return None
    try:
        v = float(tok)
    except ValueError:
        raise LoadError(f"not a number: {tok!r}", lineno, path) from None
    if not math.isfinite(v):
        raise LoadError(f"non-finite value {tok!r} is not allowed", lineno, path)
    return v


def load_demonstrations(path, schema) -> list[Demonstration]:
    """Read a demonstration file.

    Each line is ``demo_index, time_index, f_0, ..., f_{n-1}``; fields are
    decimal literals or ``undef``. Lines are sorted by (demo, time), time
    indices of a demo run 0, 1, 2, ... Blank lines and ``#`` comments are
    skipped.
    """
    n = schema if isinstance(schema, int) else schema.n_features
    demos: list[list[WorldState]] = []
    last = None
    with open(path, newline="") as f:
        for lineno, row in enumerate(csv.reader(f), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            if len(row) != n + 2:
                raise LoadError(f"expected {n + 2} fields, got {len(row)}", lineno, path)
            try:
                d, t = int(row[0]), int(row[1])
            except ValueError:
                raise LoadError("demo and time indices must be integers", lineno, path) from None
            if last is None:
                ok = t == 0
            elif d == last[0]:
                ok = t == last[1] + 1
            else:
                ok = d > last[0] and t == 0
            if not ok:
                raise LoadError(
                    f"record ({d}, {t}) out of order after {last}", lineno, path
                )
            if last is None or d != last[0]:
                demos.append([])
            demos[-1].append(WorldState(tuple(_parse_field(x, lineno, path) for x in row[2:])))
            last = (d, t)
    if not demos:
        raise LoadError("no demonstrations in file", path=path)
    return [Demonstration(tuple(states)) for states in demos]


def _fmt(v) -> str:
    return UNDEF_TOKEN if v is None else repr(float(v))


def write_demonstrations(path, corpus: Iterable[Demonstration]) -> None:
    with open(path, "w") as f:
        for d, demo in enumerate(corpus):
            for t, s in enumerate(demo.states):
                f.write(",".join([str(d), str(t)] + [_fmt(v) for v in s.values]) + "\n")
