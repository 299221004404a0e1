"""Demonstrations -> sub-goals -> words -> PDFA."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .automaton import Pdfa, learn_pdfa
from .subgoals import DbscanParams, RadiusPolicy, SubGoalSet, infer_subgoals
from .trace import Demonstration
from .wordgen import corpus_to_words


@dataclass
class Learned:
    subgoals: SubGoalSet
    words: list
    pdfa: Pdfa

    @property
    def alphabet(self) -> tuple:
        return tuple(g.symbol_id for g in self.subgoals.subgoals)


def symbol_refs(subgoals) -> dict:
    return {
        g.symbol_id: {"subset": list(g.subset.indices), "center": list(g.center), "radius": g.radius}
        for g in subgoals
    }


def learn(
    corpus: Sequence[Demonstration],
    candidates,
    params: DbscanParams = DbscanParams(),
    policy: RadiusPolicy = RadiusPolicy(),
    radius_override: Optional[float] = None,
) -> Learned:
    sgs = infer_subgoals(corpus, candidates, params, policy)
    words = corpus_to_words(corpus, sgs.subgoals, radius_override)
    alphabet = [g.symbol_id for g in sgs.subgoals]
    pdfa = learn_pdfa(alphabet, words, symbol_refs(sgs.subgoals))
    return Learned(sgs, words, pdfa)
