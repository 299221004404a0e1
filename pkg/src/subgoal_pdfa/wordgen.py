"""Turn demonstrations into words of first-time sub-goal completions."""
from __future__ import annotations

from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .trace import Demonstration, SubGoal, satisfied_mask

EMPTY_TOKEN = "e"

Word = tuple  # of int symbol ids; () is the empty word


def demo_to_word(
    demo: Demonstration, subgoals: Sequence[SubGoal], radius: Optional[float] = None
) -> Word:
    """Scan the states in order and record each sub-goal the first time it is met.

    At most one symbol is appended per state: sub-goals are tried in symbol
    order and the scan moves to the next state after the first new hit.
    ``radius`` replaces every sub-goal's own radius when given.
    """
    goals = sorted(subgoals, key=lambda g: g.symbol_id)
    if not goals:
        return ()
    hits = np.stack([satisfied_mask(g, demo, radius) for g in goals])  # (|G|, T)
    word: list[int] = []
    done = np.zeros(len(goals), dtype=bool)
    for t in np.flatnonzero(hits.any(axis=0)):
        fresh = np.flatnonzero(hits[:, t] & ~done)
        if fresh.size:
            k = fresh[0]
            done[k] = True
            word.append(goals[k].symbol_id)
    return tuple(word)


def corpus_to_words(
    corpus: Iterable[Demonstration], subgoals: Sequence[SubGoal], radius: Optional[float] = None
) -> list[Word]:
    return [demo_to_word(d, subgoals, radius) for d in corpus]


def format_word(word: Word) -> str:
    return " ".join(str(s) for s in word) if word else EMPTY_TOKEN


def parse_word(text: str) -> Word:
    text = text.strip()
    if text == EMPTY_TOKEN:
        return ()
    return tuple(int(tok) for tok in text.split())


def save_words(path, words: Iterable[Word]) -> None:
    Path(path).write_text("".join(format_word(w) + "\n" for w in words))


def load_words(path) -> list[Word]:
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(parse_word(line))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: bad word {line!r}") from None
    return out
