"""Sub-goal discovery by density clustering of partial states."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .trace import Demonstration, FeatureSubset, SubGoal, satisfied_mask

NOISE = -1
# ~2M float64 cells per distance block
_BLOCK_CELLS = 1 << 21


@dataclass
class PartialDataset:
    subset: FeatureSubset
    points: np.ndarray  # (N, |subset|)
    provenance: list  # (demo_index, time_index) per point

    @property
    def subset_id(self) -> int:
        return self.subset.id

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class DbscanParams:
    eps: float = 0.05
    min_pts: Optional[int] = None  # None: max(2, ceil(|D| / 2))

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.min_pts is not None and self.min_pts < 1:
            raise ValueError("min_pts must be >= 1")

    def resolve_min_pts(self, n_demos: int) -> int:
        if self.min_pts is not None:
            return self.min_pts
        return default_min_pts(n_demos)


def default_min_pts(n_demos: int) -> int:
    return max(2, math.ceil(0.5 * n_demos))


@dataclass(frozen=True)
class RadiusPolicy:
    kind: str = "fixed"
    radius: float = 0.03

    def __post_init__(self):
        if self.kind not in ("fixed", "max-member"):
            raise ValueError(f"unknown radius policy {self.kind!r}")
        if self.kind == "fixed" and not self.radius > 0:
            raise ValueError("fixed radius must be positive")

    @classmethod
    def parse(cls, text) -> "RadiusPolicy":
        """``"max-member"`` or a positive number for a fixed radius."""
        if isinstance(text, RadiusPolicy):
            return text
        if text in ("max-member", "max_member"):
            return cls("max-member")
        return cls("fixed", float(text))

    def __str__(self) -> str:
        return "max-member" if self.kind == "max-member" else f"fixed({self.radius:g})"


@dataclass
class Normalizer:
    """Shift each dimension to start at 0 and divide by one scale for the whole subspace.

    A shared scale keeps Euclidean balls round, so centers and radii map
    back to raw units exactly.
    """

    offset: np.ndarray
    scale: float

    @classmethod
    def fit(cls, points: np.ndarray) -> "Normalizer":
        if len(points) == 0:
            return cls(np.zeros(points.shape[1]), 1.0)
        lo = points.min(axis=0)
        span = float((points.max(axis=0) - lo).max())
        return cls(lo, span if span > 0 else 1.0)

    def apply(self, points: np.ndarray) -> np.ndarray:
        return (points - self.offset) / self.scale

    def invert(self, points: np.ndarray) -> np.ndarray:
        return points * self.scale + self.offset


@dataclass
class Cluster:
    subset: FeatureSubset
    member_indices: np.ndarray
    members: np.ndarray  # raw units
    center: np.ndarray
    radius: float
    eps_raw: float = 0.0

    @property
    def subset_id(self) -> int:
        return self.subset.id

    def contains(self, point) -> bool:
        return math.dist(point, self.center) <= self.radius


def build_partial_datasets(corpus: Sequence[Demonstration], candidates) -> list[PartialDataset]:
    if not candidates:
        raise ValueError("need at least one candidate feature subset")
    out = []
    for subset in candidates:
        chunks, prov = [], []
        for d, demo in enumerate(corpus):
            subset.check(demo.n_features)
            values, defined = demo.arrays
            idx = list(subset.indices)
            keep = np.flatnonzero(defined[:, idx].all(axis=1))
            chunks.append(values[keep][:, idx])
            prov.extend((d, int(t)) for t in keep)
        pts = np.concatenate(chunks) if chunks else np.empty((0, len(subset)))
        out.append(PartialDataset(subset, pts, prov))
    return out


def _within(a: np.ndarray, b: np.ndarray, eps: float) -> np.ndarray:
    """Boolean matrix ``||a_i - b_j|| <= eps``.

    Squared distances come from a matrix product; entries close enough to
    the boundary for rounding to matter are recomputed directly.
    """
    shift = a.mean(axis=0)
    a = a - shift
    b = b - shift
    na = np.einsum("ij,ij->i", a, a)
    nb = np.einsum("ij,ij->i", b, b)
    d2 = a @ b.T
    d2 *= -2.0
    d2 += na[:, None]
    d2 += nb[None, :]
    e2 = eps * eps
    band = 1e-10 * (e2 + na.max(initial=0.0) + nb.max(initial=0.0))
    out = d2 <= e2
    d2 -= e2
    np.abs(d2, out=d2)
    ii, jj = np.nonzero(d2 <= band)
    if ii.size:
        diff = a[ii] - b[jj]
        out[ii, jj] = np.sqrt(np.einsum("ij,ij->i", diff, diff)) <= eps
    return out


def _dense_cells(X: np.ndarray, eps: float, min_pts: int) -> np.ndarray:
    """Points whose grid cell alone holds ``min_pts`` points.

    Cells have diagonal just under ``eps``, so every such point is core.
    """
    side = eps / math.sqrt(X.shape[1]) * (1 - 1e-9)
    cells = np.floor((X - X.min(axis=0)) / side).astype(np.int64)
    _, inv, cnt = np.unique(cells, axis=0, return_inverse=True, return_counts=True)
    return cnt[inv.ravel()] >= min_pts


def dbscan(points, eps: float, min_pts: int) -> np.ndarray:
    """Label each point with a cluster id (0, 1, ...) or ``NOISE``.

    Core points have at least ``min_pts`` points (themselves included) within
    ``eps``. Clusters are numbered in the input order of their first core
    point, and a border point joins the first cluster that reaches it.

    Points in a grid cell that is dense on its own are core without any
    distance test. Everything else is brute force over a window of points
    sorted along the widest axis, so the worst case stays O(N^2) and the
    cost grows with the square of the number of demonstrations.
    """
    X = np.asarray(points, dtype=float)
    n = len(X)
    labels = np.full(n, NOISE, dtype=int)
    if n == 0:
        return labels
    X = X.reshape(n, -1)
    axis = int(np.argmax(X.max(axis=0) - X.min(axis=0)))
    order = np.argsort(X[:, axis], kind="stable")
    Xs = X[order]
    key = Xs[:, axis]
    # a pair just past eps on one axis can round to <= eps overall
    pad = eps * (1 + 1e-9) + 1e-12
    block = max(1, _BLOCK_CELLS // n)

    core = _dense_cells(Xs, eps, min_pts)
    todo = np.flatnonzero(~core)
    step = min(block, 64)
    for start in range(0, todo.size, step):
        rows = todo[start:start + step]
        lo = np.searchsorted(key, key[rows[0]] - pad, "left")
        hi = np.searchsorted(key, key[rows[-1]] + pad, "right")
        core[rows] = _within(Xs[rows], Xs[lo:hi], eps).sum(axis=1) >= min_pts

    rank = np.empty(n, dtype=int)
    rank[order] = np.arange(n)
    lab = np.full(n, NOISE, dtype=int)  # indexed by sorted position
    cluster = -1
    for i in range(n):
        s = rank[i]
        if lab[s] != NOISE or not core[s]:
            continue
        cluster += 1
        lab[s] = cluster
        frontier = np.array([s])
        while frontier.size:
            frontier.sort()
            batch, frontier = frontier[:block], frontier[block:]
            lo = np.searchsorted(key, key[batch[0]] - pad, "left")
            hi = np.searchsorted(key, key[batch[-1]] + pad, "right")
            cand = lo + np.flatnonzero(lab[lo:hi] == NOISE)
            if cand.size == 0:
                continue
            new = cand[_within(Xs[batch], Xs[cand], eps).any(axis=0)]
            lab[new] = cluster
            grow = new[core[new]]
            if grow.size:
                frontier = np.concatenate([frontier, grow])
    labels[order] = lab
    return labels


def make_cluster(subset, member_indices, members, policy: RadiusPolicy, eps_raw: float) -> Cluster:
    members = np.asarray(members, dtype=float)
    center = members.mean(axis=0)
    if policy.kind == "fixed":
        radius = policy.radius
    else:
        spread = float(np.sqrt(((members - center) ** 2).sum(axis=1)).max())
        radius = max(spread, eps_raw)
    return Cluster(subset, np.asarray(member_indices), members, center, radius, eps_raw)


def cluster_dataset(
    ds: PartialDataset, eps: float, min_pts: int, policy: RadiusPolicy
) -> tuple[list[Cluster], Normalizer]:
    """Run DBSCAN in normalised units and return clusters in raw units."""
    norm = Normalizer.fit(ds.points)
    labels = dbscan(norm.apply(ds.points), eps, min_pts)
    clusters = []
    for k in range(labels.max(initial=NOISE) + 1):
        idx = np.flatnonzero(labels == k)
        clusters.append(make_cluster(ds.subset, idx, ds.points[idx], policy, eps * norm.scale))
    return clusters, norm


def filter_initial(clusters: Sequence[Cluster], corpus: Sequence[Demonstration]) -> list[Cluster]:
    """Drop clusters whose closed ball holds any demonstration's first state."""
    kept = []
    for c in clusters:
        g = SubGoal(tuple(c.center), c.radius, c.subset)
        if not any(satisfied_mask(g, demo)[0] for demo in corpus):
            kept.append(c)
    return kept


def clusters_to_subgoals(clusters: Sequence[Cluster], radius_policy=None) -> list[SubGoal]:
    """One sub-goal per cluster; symbol ids follow (subset id, center)."""
    ordered = sorted(clusters, key=lambda c: (c.subset.id, tuple(c.center.tolist())))
    goals = []
    for sym, c in enumerate(ordered):
        radius = c.radius
        if radius_policy is not None:
            policy = RadiusPolicy.parse(radius_policy)
            radius = make_cluster(c.subset, c.member_indices, c.members, policy, c.eps_raw).radius
        goals.append(SubGoal(tuple(c.center.tolist()), radius, c.subset, sym))
    return goals


@dataclass
class SubGoalSet:
    subgoals: list
    member_counts: list = field(default_factory=list)
    normalizers: dict = field(default_factory=dict)  # subset id -> Normalizer
    eps: float = 0.05
    min_pts: int = 2
    policy: RadiusPolicy = field(default_factory=RadiusPolicy)

    def __len__(self) -> int:
        return len(self.subgoals)

    def to_json(self) -> dict:
        return {
            "eps": self.eps,
            "min_pts": self.min_pts,
            "radius_policy": str(self.policy),
            "normalization": {
                str(k): {"offset": v.offset.tolist(), "scale": v.scale}
                for k, v in sorted(self.normalizers.items())
            },
            "subgoals": [
                {
                    "symbol_id": g.symbol_id,
                    "subset_id": g.subset.id,
                    "subset": list(g.subset.indices),
                    "center": list(g.center),
                    "radius": g.radius,
                    "members": n,
                }
                for g, n in zip(self.subgoals, self.member_counts)
            ],
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "SubGoalSet":
        raw = json.loads(Path(path).read_text())
        goals, counts = [], []
        for g in raw["subgoals"]:
            subset = FeatureSubset(tuple(g["subset"]), g["subset_id"])
            goals.append(SubGoal(tuple(g["center"]), g["radius"], subset, g["symbol_id"]))
            counts.append(g.get("members", 0))
        norms = {
            int(k): Normalizer(np.asarray(v["offset"], dtype=float), float(v["scale"]))
            for k, v in raw.get("normalization", {}).items()
        }
        pol = raw.get("radius_policy", "fixed(0.03)")
        if pol.startswith("fixed("):
            policy = RadiusPolicy("fixed", float(pol[6:-1]))
        else:
            policy = RadiusPolicy("max-member")
        return cls(goals, counts, norms, raw.get("eps", 0.05), raw.get("min_pts", 2), policy)


def infer_subgoals(
    corpus: Sequence[Demonstration],
    candidates,
    params: DbscanParams = DbscanParams(),
    policy: RadiusPolicy = RadiusPolicy(),
) -> SubGoalSet:
    """Cluster every candidate subspace, drop initial-state clusters, assign symbols."""
    if not corpus:
        raise ValueError("empty demonstration corpus")
    min_pts = params.resolve_min_pts(len(corpus))
    clusters, norms = [], {}
    for ds in build_partial_datasets(corpus, candidates):
        found, norm = cluster_dataset(ds, params.eps, min_pts, policy)
        norms[ds.subset.id] = norm
        clusters.extend(filter_initial(found, corpus))
    goals = clusters_to_subgoals(clusters)
    by_key = {(c.subset.id, tuple(c.center.tolist())): len(c.members) for c in clusters}
    counts = [by_key[(g.subset.id, g.center)] for g in goals]
    return SubGoalSet(goals, counts, norms, params.eps, min_pts, policy)
