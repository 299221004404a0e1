"""DFA inference over completed-sub-goal sets and the derived PDFA.

Every reachable state is identified by the set of symbols completed on the
way to it, stored as a bitmask over the alphabet. Transitions can only add a
symbol, so the automaton is acyclic and its language is finite.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

Word = tuple


class InputError(ValueError):
    """A word is not usable for inference (unknown or repeated symbol)."""


@dataclass
class Dfa:
    alphabet: tuple
    states: list = field(default_factory=lambda: [0])  # masks, creation order
    delta: dict = field(default_factory=dict)  # (mask, symbol) -> mask
    accepting: set = field(default_factory=set)
    initial: int = 0

    def __post_init__(self):
        self.alphabet = tuple(self.alphabet)
        if len(set(self.alphabet)) != len(self.alphabet):
            raise InputError("alphabet symbols must be distinct")
        self._bits = {s: 1 << i for i, s in enumerate(self.alphabet)}
        self._ids = {q: i for i, q in enumerate(self.states)}

    def bit(self, symbol) -> int:
        try:
            return self._bits[symbol]
        except KeyError:
            raise InputError(f"symbol {symbol!r} is not in the alphabet") from None

    def psi(self, q: int) -> frozenset:
        return frozenset(s for s, b in self._bits.items() if q & b)

    def state_id(self, q: int) -> int:
        return self._ids[q]

    def add_state(self, q: int) -> None:
        self._ids[q] = len(self.states)
        self.states.append(q)

    def __contains__(self, q) -> bool:
        return q in self._ids

    def step(self, q: int, symbol) -> Optional[int]:
        return self.delta.get((q, symbol))

    def run(self, word: Iterable) -> Optional[int]:
        q = self.initial
        for s in word:
            q = self.delta.get((q, s))
            if q is None:
                return None
        return q

    def successors(self, q: int) -> list:
        """(symbol, target) pairs leaving ``q`` in alphabet order."""
        return [(s, self.delta[q, s]) for s in self.alphabet if (q, s) in self.delta]

    def accepts(self, word: Iterable) -> bool:
        q = self.run(word)
        return q is not None and q in self.accepting


@dataclass
class FrequencyMap:
    """Observed transition counts between state pairs."""

    counts: Counter = field(default_factory=Counter)  # (q, q') -> int
    n_words: int = 0

    def __getitem__(self, key) -> int:
        return self.counts.get(key, 0)

    def outgoing(self, q: int) -> int:
        return sum(c for (a, _), c in self.counts.items() if a == q)

    def incoming(self, q: int) -> int:
        return sum(c for (_, b), c in self.counts.items() if b == q)

    def total(self) -> int:
        return sum(self.counts.values())


def infer_dfa(alphabet: Sequence, words: Iterable[Word]) -> tuple[Dfa, FrequencyMap]:
    """Build the DFA and frequency map from positive words in one pass."""
    dfa = Dfa(tuple(alphabet))
    freq = FrequencyMap()
    for word in words:
        q = dfa.initial
        done = 0
        for sym in word:
            b = dfa.bit(sym)
            if done & b:
                raise InputError(f"symbol {sym!r} repeats in word {tuple(word)!r}")
            done |= b
            if done not in dfa:
                dfa.add_state(done)
            # state identity is the completed set, so the target is always `done`
            dfa.delta.setdefault((q, sym), done)
            freq.counts[q, done] += 1
            q = done
        dfa.accepting.add(q)
        freq.n_words += 1
    return dfa, freq


@dataclass
class Pdfa:
    dfa: Dfa
    freq: FrequencyMap
    trans_prob: dict  # (q, symbol) -> Fraction
    accept_prob: dict  # q in F -> Fraction
    symbol_refs: dict = field(default_factory=dict)  # symbol -> sub-goal description

    @property
    def initial(self) -> int:
        return self.dfa.initial

    @property
    def accepting(self) -> set:
        return self.dfa.accepting

    def delta_p(self, q: int, symbol, exact: bool = False):
        p = self.trans_prob.get((q, symbol), Fraction(0))
        return p if exact else float(p)

    def f_p(self, q: int, exact: bool = False):
        p = self.accept_prob.get(q, Fraction(0))
        return p if exact else float(p)

    def successors(self, q: int) -> list:
        """(symbol, target, probability) leaving ``q`` in alphabet order."""
        return [(s, t, self.trans_prob[q, s]) for s, t in self.dfa.successors(q)]


def pdfa_from_counts(dfa: Dfa, freq: FrequencyMap, symbol_refs=None) -> Pdfa:
    """Normalise outgoing counts per state and incoming counts over accepting states.

    The initial state has no incoming edges; it is credited one visit per
    word so that an accepting initial state (some demonstrations complete
    nothing) keeps a positive termination probability.
    """
    if freq.n_words == 0:
        raise InputError("cannot build a PDFA from an empty corpus")
    out_tot = Counter()
    in_tot = Counter()
    for (a, b), c in freq.counts.items():
        out_tot[a] += c
        in_tot[b] += c
    in_tot[dfa.initial] += freq.n_words

    trans = {}
    for (q, sym), target in dfa.delta.items():
        if out_tot[q] == 0:
            raise InputError(f"state {dfa.state_id(q)} has transitions but no counts")
        trans[q, sym] = Fraction(freq[q, target], out_tot[q])
    denom = sum(in_tot[q] for q in dfa.accepting)
    if denom == 0:
        raise InputError("accepting states carry no counts")
    accept = {q: Fraction(in_tot[q], denom) for q in dfa.accepting}
    return Pdfa(dfa, freq, trans, accept, dict(symbol_refs or {}))


def learn_pdfa(alphabet: Sequence, words: Sequence[Word], symbol_refs=None) -> Pdfa:
    dfa, freq = infer_dfa(alphabet, words)
    return pdfa_from_counts(dfa, freq, symbol_refs)


def word_probability(pdfa: Pdfa, word: Iterable, exact: bool = False):
    p = Fraction(1)
    q = pdfa.initial
    for sym in word:
        nxt = pdfa.dfa.step(q, sym)
        if nxt is None:
            return Fraction(0) if exact else 0.0
        p *= pdfa.trans_prob[q, sym]
        q = nxt
    p *= pdfa.accept_prob.get(q, Fraction(0))
    return p if exact else float(p)


def accepts(pdfa: Pdfa, word: Iterable) -> bool:
    return word_probability(pdfa, word, exact=True) > 0


def enumerate_language(automaton) -> set:
    """All accepted words, found by depth-first search (paths are at most |alphabet| long)."""
    dfa = automaton.dfa if isinstance(automaton, Pdfa) else automaton
    out = set()
    stack = [(dfa.initial, ())]
    while stack:
        q, word = stack.pop()
        if q in dfa.accepting:
            out.add(word)
        for sym, nxt in dfa.successors(q):
            stack.append((nxt, word + (sym,)))
    if isinstance(automaton, Pdfa):
        out = {w for w in out if accepts(automaton, w)}
    return out


def _set_label(dfa: Dfa, q: int) -> str:
    return "{" + ",".join(str(s) for s in dfa.alphabet if q & dfa.bit(s)) + "}"


def export_dot(pdfa: Pdfa, probabilities: bool = True) -> str:
    dfa = pdfa.dfa
    lines = [
        "digraph pdfa {",
        "  rankdir=LR;",
        "  node [shape=circle];",
        '  __start [shape=point, label=""];',
        f"  __start -> q{dfa.state_id(dfa.initial)};",
    ]
    for i, q in enumerate(dfa.states):
        label = _set_label(dfa, q)
        if q in dfa.accepting:
            if probabilities:
                label += f"\\nF_P={float(pdfa.accept_prob[q]):.4f}"
            lines.append(f'  q{i} [shape=doublecircle, label="{label}"];')
        else:
            lines.append(f'  q{i} [label="{label}"];')
    for i, q in enumerate(dfa.states):
        for sym, target in dfa.successors(q):
            attr = f' [label="{sym} : {float(pdfa.trans_prob[q, sym]):.4f}"]' if probabilities else ""
            lines.append(f"  q{i} -> q{dfa.state_id(target)}{attr};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def pdfa_to_json(pdfa: Pdfa) -> dict:
    dfa = pdfa.dfa
    sid = dfa.state_id
    return {
        "format": "pdfa/1",
        "n_states": len(dfa.states),
        "n_symbols": len(dfa.alphabet),
        "initial": sid(dfa.initial),
        "n_words": pdfa.freq.n_words,
        "symbols": [
            {"id": s, "ref": pdfa.symbol_refs.get(s)} for s in dfa.alphabet
        ],
        "states": [
            {
                "id": i,
                "psi": q,
                "completed": sorted(dfa.psi(q)),
                "accepting": q in dfa.accepting,
                "f_p": str(pdfa.accept_prob.get(q, Fraction(0))),
                "f_p_decimal": float(pdfa.accept_prob.get(q, Fraction(0))),
            }
            for i, q in enumerate(dfa.states)
        ],
        "transitions": [
            {
                "src": sid(q),
                "symbol": sym,
                "dst": sid(t),
                "count": pdfa.freq[q, t],
                "p": str(pdfa.trans_prob[q, sym]),
                "p_decimal": float(pdfa.trans_prob[q, sym]),
            }
            for q in dfa.states
            for sym, t in dfa.successors(q)
        ],
    }


def pdfa_from_json(raw: dict) -> Pdfa:
    if raw.get("format") != "pdfa/1":
        raise InputError("not a pdfa/1 document")
    alphabet = tuple(s["id"] for s in raw["symbols"])
    masks = [int(s["psi"]) for s in raw["states"]]
    dfa = Dfa(alphabet, states=masks)
    if len(set(masks)) != len(masks) or masks[int(raw["initial"])] != 0:
        raise InputError("state sets must be distinct and the initial state empty")
    dfa.initial = 0
    freq = FrequencyMap(n_words=int(raw["n_words"]))
    trans, accept = {}, {}
    for t in raw["transitions"]:
        q, r, sym = masks[t["src"]], masks[t["dst"]], t["symbol"]
        if r != q | dfa.bit(sym) or q & dfa.bit(sym):
            raise InputError(f"transition {t} does not add exactly its symbol")
        dfa.delta[q, sym] = r
        freq.counts[q, r] += int(t["count"])
        trans[q, sym] = Fraction(t["p"])
    for s in raw["states"]:
        if s["accepting"]:
            dfa.accepting.add(masks[s["id"]])
            accept[masks[s["id"]]] = Fraction(s["f_p"])
    refs = {s["id"]: s["ref"] for s in raw["symbols"] if s.get("ref") is not None}
    return Pdfa(dfa, freq, trans, accept, refs)


def save_pdfa(path, pdfa: Pdfa) -> None:
    Path(path).write_text(json.dumps(pdfa_to_json(pdfa), indent=2) + "\n")


def load_pdfa(path) -> Pdfa:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: invalid JSON at line {e.lineno}") from None
    try:
        return pdfa_from_json(raw)
    except (KeyError, IndexError, TypeError) as e:
        raise InputError(f"{path}: malformed PDFA file ({e!r})") from None


class PrefixTreeAcceptor:
    """Baseline that accepts exactly the demonstrated words."""

    def __init__(self, words: Iterable[Word] = ()):
        self.children: list[dict] = [{}]
        self.final: set[int] = set()
        for w in words:
            self.add(w)

    def add(self, word: Word) -> None:
        node = 0
        for sym in word:
            nxt = self.children[node].get(sym)
            if nxt is None:
                nxt = len(self.children)
                self.children.append({})
                self.children[node][sym] = nxt
            node = nxt
        self.final.add(node)

    def __len__(self) -> int:
        return len(self.children)

    def accepts(self, word: Word) -> bool:
        node = 0
        for sym in word:
            node = self.children[node].get(sym)
            if node is None:
                return False
        return node in self.final
