"""Synthetic block world used in place of recorded human demonstrations.

Each object contributes three features (x, y, z) and one candidate feature
subset. A task script lists target balls, ordering constraints between them
and preference weights over the admissible orderings.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .planner import AvailabilityView
from .trace import Demonstration, Schema, SubGoal, WorldState, satisfies


@dataclass(frozen=True)
class Target:
    object: int
    center: tuple
    radius: float = 0.03


@dataclass
class TaskScript:
    objects: list  # initial (x, y, z) per object
    targets: list  # Target per scripted sub-goal
    constraints: list = field(default_factory=list)  # (i, j): target i before target j
    weights: Optional[dict] = None  # ordering tuple -> weight; None = uniform
    jitter: float = 0.0
    dropout: float = 0.0
    step_length: float = 0.4
    dwell: int = 3
    lead: int = 2
    absent: dict = field(default_factory=dict)  # step -> objects missing at that step

    def __post_init__(self):
        self.objects = [tuple(float(v) for v in p) for p in self.objects]
        self.targets = [t if isinstance(t, Target) else Target(**t) for t in self.targets]
        self.constraints = [tuple(c) for c in self.constraints]
        n = len(self.targets)
        for i, j in self.constraints:
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise ValueError(f"bad constraint {(i, j)}")
        for t in self.targets:
            if not 0 <= t.object < len(self.objects):
                raise ValueError(f"target refers to unknown object {t.object}")
        if not linear_extensions(n, self.constraints):
            raise ValueError("ordering constraints are cyclic")
        if self.weights is not None:
            self.weights = {tuple(k): float(v) for k, v in self.weights.items()}
            if any(v < 0 for v in self.weights.values()) or not any(self.weights.values()):
                raise ValueError("weights must be nonnegative and not all zero")
            valid = set(self.extensions())
            bad = [k for k in self.weights if k not in valid]
            if bad:
                raise ValueError(f"weighted orderings violate the constraints: {bad}")
        if self.step_length <= 0 or self.dwell < 1 or self.lead < 1:
            raise ValueError("step_length must be positive, dwell and lead at least 1")

    @property
    def n_features(self) -> int:
        return 3 * len(self.objects)

    def extensions(self) -> list:
        return linear_extensions(len(self.targets), self.constraints)

    def weighted_extensions(self) -> list:
        exts = self.extensions()
        if self.weights is None:
            return [(e, 1.0) for e in exts]
        return [(e, self.weights.get(e, 0.0)) for e in exts if self.weights.get(e, 0.0) > 0]

    def modal_ordering(self) -> tuple:
        return max(self.weighted_extensions(), key=lambda ew: ew[1])[0]

    def schema(self) -> Schema:
        names = [f"o{i}.{a}" for i in range(len(self.objects)) for a in "xyz"]
        cands = [[3 * i, 3 * i + 1, 3 * i + 2] for i in range(len(self.objects))]
        return Schema(self.n_features, cands, names)

    def subgoals(self) -> list:
        """The scripted targets as sub-goals, symbol id = target index."""
        subsets = self.schema().candidates
        return [
            SubGoal(t.center, t.radius, subsets[t.object], k) for k, t in enumerate(self.targets)
        ]

    def to_json(self) -> dict:
        out = {
            "objects": [list(p) for p in self.objects],
            "targets": [
                {"object": t.object, "center": list(t.center), "radius": t.radius}
                for t in self.targets
            ],
            "constraints": [list(c) for c in self.constraints],
            "jitter": self.jitter,
            "dropout": self.dropout,
            "step_length": self.step_length,
            "dwell": self.dwell,
            "lead": self.lead,
        }
        if self.weights is not None:
            out["weights"] = [{"order": list(k), "weight": v} for k, v in self.weights.items()]
        if self.absent:
            out["absent"] = {str(k): sorted(v) for k, v in sorted(self.absent.items())}
        return out

    @classmethod
    def from_json(cls, raw: dict) -> "TaskScript":
        raw = dict(raw)
        if "weights" in raw and raw["weights"] is not None:
            raw["weights"] = {tuple(w["order"]): w["weight"] for w in raw["weights"]}
        if "absent" in raw:
            raw["absent"] = {int(k): set(v) for k, v in raw["absent"].items()}
        raw["targets"] = [
            Target(t["object"], tuple(t["center"]), t.get("radius", 0.03)) for t in raw["targets"]
        ]
        return cls(**raw)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "TaskScript":
        return cls.from_json(json.loads(Path(path).read_text()))


def linear_extensions(n: int, constraints: Sequence) -> list:
    """All orderings of range(n) respecting ``i before j`` pairs, in lexicographic order."""
    preds = [0] * n
    for i, j in constraints:
        preds[j] |= 1 << i
    out = []
    prefix = []

    def rec(done: int):
        if len(prefix) == n:
            out.append(tuple(prefix))
            return
        for k in range(n):
            if not done >> k & 1 and preds[k] & done == preds[k]:
                prefix.append(k)
                rec(done | 1 << k)
                prefix.pop()

    rec(0)
    return out


def allocate(weights: Sequence[float], count: int) -> list:
    """Split ``count`` proportionally to ``weights`` (largest remainder, ties to the front)."""
    w = np.asarray(weights, dtype=float)
    share = w / w.sum() * count
    base = np.floor(share).astype(int)
    rem = count - base.sum()
    order = sorted(range(len(w)), key=lambda i: (-(share[i] - base[i]), i))
    for i in order[:rem]:
        base[i] += 1
    return base.tolist()


def trajectory(script: TaskScript, ordering: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    """Noise-free object positions, shape (T, n_objects, 3).

    Objects move one at a time in straight lines with a fixed step length;
    the first step has a random phase so that paths of different
    demonstrations do not line up. Each placement dwells ``dwell`` steps.
    """
    pos = np.array(script.objects, dtype=float)
    frames = [pos.copy() for _ in range(script.lead)]
    for k in ordering:
        tgt = script.targets[k]
        a = pos[tgt.object].copy()
        b = np.asarray(tgt.center, dtype=float)
        dist = float(np.linalg.norm(b - a))
        if dist > 0:
            direction = (b - a) / dist
            s = rng.uniform(0.0, 1.0) * script.step_length
            while s < dist:
                pos[tgt.object] = a + direction * s
                frames.append(pos.copy())
                s += script.step_length
        pos[tgt.object] = b
        frames.extend(pos.copy() for _ in range(script.dwell))
    return np.stack(frames)


def render_demo(script: TaskScript, ordering: Sequence[int], rng: np.random.Generator) -> Demonstration:
    frames = trajectory(script, ordering, rng)
    T, n_obj, _ = frames.shape
    if script.jitter > 0:
        frames = frames + rng.normal(0.0, script.jitter, frames.shape)
    visible = np.ones((T, n_obj), dtype=bool)
    if script.dropout > 0:
        visible = rng.random((T, n_obj)) >= script.dropout
    defined = np.repeat(visible, 3, axis=1)
    return Demonstration.from_arrays(frames.reshape(T, -1), defined)


def generate_demos(
    script: TaskScript, count: int, seed: int = 0, exact: bool = False
) -> tuple[list, list]:
    """Sample ``count`` demonstrations; returns (corpus, orderings).

    With ``exact`` the orderings are allocated in proportion to the weights
    instead of being sampled, so every weighted ordering is represented.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    ss = np.random.SeedSequence(seed)
    choose_rng = np.random.default_rng(ss.spawn(1)[0])
    exts = script.weighted_extensions()
    w = [wt for _, wt in exts]
    if exact:
        orderings = [e for (e, _), c in zip(exts, allocate(w, count)) for _ in range(c)]
    else:
        p = np.asarray(w) / sum(w)
        orderings = [exts[i][0] for i in choose_rng.choice(len(exts), size=count, p=p)]
    demo_seeds = ss.spawn(count)
    corpus = [
        render_demo(script, o, np.random.default_rng(s)) for o, s in zip(orderings, demo_seeds)
    ]
    return corpus, orderings


class BlockWorld:
    """Current object positions; an absent object has undefined features."""

    def __init__(self, positions: Sequence, absent=(), seed: int = 0):
        self.positions = [np.asarray(p, dtype=float) for p in positions]
        if not all(np.isfinite(p).all() and p.shape == (3,) for p in self.positions):
            raise ValueError("object positions must be finite 3-vectors")
        self.absent = set(absent)
        self.rng = np.random.default_rng(seed)

    @classmethod
    def from_script(cls, script: TaskScript, seed: int = 0) -> "BlockWorld":
        return cls(script.objects, seed=seed)

    def state(self) -> WorldState:
        vals = []
        for i, p in enumerate(self.positions):
            vals.extend([None] * 3 if i in self.absent else p.tolist())
        return WorldState(tuple(vals))

    def place(self, obj: int, position) -> None:
        self.positions[obj] = np.asarray(position, dtype=float)


def symbol_objects(subgoals: Sequence[SubGoal]) -> dict:
    """Object owning each sub-goal, read off the first feature of its subset."""
    return {g.symbol_id: g.subset.indices[0] // 3 for g in subgoals}


def availability_oracle(world: BlockWorld, schedule: dict, sym_objects: dict):
    """Return ``step -> AvailabilityView``: a symbol is unreachable while its object is absent."""

    def view(step: int) -> AvailabilityView:
        missing = set(world.absent) | set(schedule.get(step, ()))
        return AvailabilityView(frozenset(s for s, o in sym_objects.items() if o in missing))

    return view


class SimulatedEnvironment:
    """Planner environment backed by a block world and an absence schedule.

    The low-level controller is ideal: a present object is placed at the
    commanded sub-goal's center, and success is checked with ``satisfies``.
    """

    def __init__(self, world: BlockWorld, subgoals: Sequence[SubGoal], schedule: Optional[dict] = None):
        self.world = world
        self.goals = {g.symbol_id: g for g in subgoals}
        self.objects = symbol_objects(subgoals)
        self.schedule = {int(k): set(v) for k, v in (schedule or {}).items()}
        self._view = availability_oracle(world, self.schedule, self.objects)

    def availability(self, step: int) -> AvailabilityView:
        return self._view(step)

    def achieve(self, symbol, step: int) -> bool:
        if symbol in self._view(step).unreachable:
            return False
        g = self.goals[symbol]
        obj = self.objects[symbol]
        pos = self.world.positions[obj].copy()
        for k, i in enumerate(g.subset.indices):
            pos[i - 3 * obj] = g.center[k]
        self.world.place(obj, pos)
        return satisfies(g, self.world.state())


def match_subgoals(subgoals: Sequence[SubGoal], script: TaskScript) -> dict:
    """Map learned symbols to script target indices by nearest same-object target within its radius."""
    out = {}
    objs = symbol_objects(subgoals)
    for g in subgoals:
        best, best_d = None, math.inf
        for k, t in enumerate(script.targets):
            if t.object != objs[g.symbol_id] or len(g.center) != 3:
                continue
            d = math.dist(g.center, t.center)
            if d <= t.radius and d < best_d:
                best, best_d = k, d
        out[g.symbol_id] = best
    return out


# presets

_TABLE_Z = 0.025
_LAYER = 0.05


def four_blocks(weights=None, **kw) -> TaskScript:
    """Four blocks, each moved to its own location, in any order."""
    objects = [(0.2 + 0.2 * i, 0.1, _TABLE_Z) for i in range(4)]
    targets = [Target(i, (0.2 + 0.2 * i, 0.7, _TABLE_Z)) for i in range(4)]
    return TaskScript(objects, targets, weights=weights, **kw)


def two_stacks(weights=None, **kw) -> TaskScript:
    """Two stacks of two blocks: 0 under 1 at one spot, 2 under 3 at another."""
    objects = [(0.1, 0.1 + 0.2 * i, _TABLE_Z) for i in range(4)]
    a, b = (0.5, 0.3), (0.5, 0.7)
    targets = [
        Target(0, (*a, _TABLE_Z)),
        Target(1, (*a, _TABLE_Z + _LAYER)),
        Target(2, (*b, _TABLE_Z)),
        Target(3, (*b, _TABLE_Z + _LAYER)),
    ]
    return TaskScript(objects, targets, [(0, 1), (2, 3)], weights=weights, **kw)


# most demonstrators build the second stack first; a late block then
# forces the planner off its preferred ordering
PREFERRED_STACKING = {
    (2, 3, 0, 1): 5.0,
    (2, 0, 3, 1): 2.0,
    (0, 2, 3, 1): 2.0,
    (2, 0, 1, 3): 1.0,
    (0, 2, 1, 3): 1.0,
    (0, 1, 2, 3): 1.0,
}


def late_block(**kw) -> TaskScript:
    """Two stacks with skewed preferences; block 3 is missing for the first three commands."""
    kw.setdefault("absent", {0: {3}, 1: {3}, 2: {3}})
    return two_stacks(weights=dict(PREFERRED_STACKING), **kw)


def stack_unstack(n_subgoals: int, **kw) -> TaskScript:
    """Three blocks restacked at successive corners, reversing the stack each time.

    ``n_subgoals`` is 3, 6, 9 or 12 (one placement per block per stack).
    """
    if n_subgoals not in (3, 6, 9, 12):
        raise ValueError("n_subgoals must be 3, 6, 9 or 12")
    corners = [(0.3, 0.3), (0.7, 0.3), (0.7, 0.7), (0.3, 0.7)]
    objects = [(0.05, 0.4 + 0.1 * i, _TABLE_Z) for i in range(3)]
    targets = []
    order = [0, 1, 2]
    for s in range(n_subgoals // 3):
        x, y = corners[s]
        for level, blk in enumerate(order):
            targets.append(Target(blk, (x, y, _TABLE_Z + level * _LAYER)))
        order = order[::-1]
    chain = [(k, k + 1) for k in range(len(targets) - 1)]
    return TaskScript(objects, targets, chain, **kw)


def objects_design(n_objects: int, n_subgoals: int = 5, **kw) -> TaskScript:
    """``n_subgoals`` placements on a circle shared round-robin by ``n_objects`` objects."""
    if not 1 <= n_objects <= n_subgoals:
        raise ValueError("need 1 <= n_objects <= n_subgoals")
    objects = [(0.5, 0.5, _TABLE_Z + i * _LAYER) for i in range(n_objects)]
    targets = []
    for k in range(n_subgoals):
        ang = 2 * math.pi * k / n_subgoals
        targets.append(Target(k % n_objects, (0.5 + 0.3 * math.cos(ang), 0.5 + 0.3 * math.sin(ang), _TABLE_Z)))
    chain = [(k, k + 1) for k in range(n_subgoals - 1)]
    return TaskScript(objects, targets, chain, **kw)


def drone_surveillance(**kw) -> TaskScript:
    """One vehicle visiting three waypoints in a fixed order; a single feature subset."""
    targets = [Target(0, (0.2, 0.8, 0.5)), Target(0, (0.8, 0.8, 0.6)), Target(0, (0.8, 0.2, 0.4))]
    return TaskScript([(0.1, 0.1, 0.0)], targets, [(0, 1), (1, 2)], **kw)


def reacher(**kw) -> TaskScript:
    """Planar end effector touching four points, clockwise or counter-clockwise."""
    r = 0.2
    pts = [(r, 0.0), (0.0, r), (-r, 0.0), (0.0, -r)]  # +x, +y, -x, -y
    targets = [Target(0, (x, y, 0.0)) for x, y in pts]
    weights = {(0, 1, 2, 3): 1.0, (0, 3, 2, 1): 1.0}
    kw.setdefault("weights", weights)
    return TaskScript([(0.0, 0.0, 0.0)], targets, **kw)
