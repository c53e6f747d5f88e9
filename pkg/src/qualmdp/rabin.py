"""Deterministic Rabin automata, the synchronous product, and qualitative Rabin objectives.

A path is accepted when, for some pair ``(P, R)``, it visits ``P`` finitely
often and ``R`` infinitely often.  The pair fixpoints below are written with
the complement of ``P`` as the set the play must eventually stay in.
"""
from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .fixpoint import StateSet, apre, cpre, gfp, lfp, pre
from .formula import Mode, Quantifier, dual
from .mdp import Mdp, ModelError, build


class NotDeterministic(ValueError):
    def __init__(self, violations: Sequence["DeterminismViolation"]):
        first = violations[0]
        super().__init__(f"automaton is not deterministic: clause {first.clause}: {first.detail}")
        self.violations = tuple(violations)


class MissingComplement(ValueError):
    pass


def _subsets(alphabet: Sequence[str]) -> list[frozenset[str]]:
    return [frozenset(c) for k in range(len(alphabet) + 1)
            for c in itertools.combinations(alphabet, k)]


@dataclass(frozen=True)
class RabinAutomaton:
    alphabet: tuple[str, ...]
    locations: tuple[str, ...]
    labels: tuple[frozenset[str], ...]
    successors: tuple[tuple[int, ...], ...]
    initial: tuple[int, ...]
    pairs: tuple[tuple[frozenset[int], frozenset[int]], ...]

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "RabinAutomaton":
        alphabet = tuple(raw["alphabet"])
        locs = list(raw["locations"])
        names = [str(loc["name"]) for loc in locs]
        index = {n: i for i, n in enumerate(names)}
        if len(index) != len(names):
            raise ModelError("duplicate location name")

        def ids(seq: Iterable[str], where: str) -> tuple[int, ...]:
            try:
                return tuple(index[x] for x in seq)
            except KeyError as err:
                raise ModelError(f"unknown location {err.args[0]!r} in {where}") from None

        labels = []
        for loc in locs:
            lab = frozenset(loc.get("labels", ()))
            if not lab <= set(alphabet):
                raise ModelError(f"location {loc['name']!r} uses propositions outside the alphabet")
            labels.append(lab)
        return cls(
            alphabet=alphabet,
            locations=tuple(names),
            labels=tuple(labels),
            successors=tuple(ids(loc.get("successors", ()), loc["name"]) for loc in locs),
            initial=ids(raw.get("initial", ()), "initial"),
            pairs=tuple((frozenset(ids(p.get("P", ()), "P")), frozenset(ids(p.get("R", ()), "R")))
                        for p in raw.get("pairs", ())),
        )

    def to_dict(self) -> dict[str, Any]:
        loc = self.locations
        return {
            "alphabet": list(self.alphabet),
            "locations": [{"name": loc[i], "labels": sorted(self.labels[i]),
                           "successors": [loc[j] for j in self.successors[i]]}
                          for i in range(len(loc))],
            "initial": [loc[i] for i in self.initial],
            "pairs": [{"P": sorted(loc[i] for i in P), "R": sorted(loc[i] for i in R)}
                      for P, R in self.pairs],
        }

    @classmethod
    def from_transition_function(
        cls,
        alphabet: Sequence[str],
        start: Hashable,
        step: Callable[[Hashable, frozenset[str]], Hashable],
        pairs: Iterable[tuple[Iterable[Hashable], Iterable[Hashable]]],
    ) -> "RabinAutomaton":
        """Build a deterministic automaton from a letter-driven machine.

        Locations are ``(k, eta)``: the machine is in ``k`` after reading the
        letter ``eta``, and the location is labelled ``eta``.  Pairs are given
        over machine states ``k``.
        """
        letters = _subsets(alphabet)
        init = [(step(start, eta), eta) for eta in letters]
        order: dict[tuple, int] = {}
        queue = deque()
        for loc in init:
            if loc not in order:
                order[loc] = len(order)
                queue.append(loc)
        succ: dict[tuple, list[tuple]] = {}
        while queue:
            loc = queue.popleft()
            nxt = [(step(loc[0], eta), eta) for eta in letters]
            succ[loc] = nxt
            for t in nxt:
                if t not in order:
                    order[t] = len(order)
                    queue.append(t)
        locs = sorted(order, key=order.get)

        def name(loc) -> str:
            return f"{loc[0]}:{{{','.join(sorted(loc[1]))}}}"

        pair_sets = []
        for P, R in pairs:
            P, R = set(P), set(R)
            pair_sets.append((frozenset(order[l] for l in locs if l[0] in P),
                              frozenset(order[l] for l in locs if l[0] in R)))
        return cls(
            alphabet=tuple(alphabet),
            locations=tuple(name(l) for l in locs),
            labels=tuple(l[1] for l in locs),
            successors=tuple(tuple(order[t] for t in succ[l]) for l in locs),
            initial=tuple(order[l] for l in init),
            pairs=tuple(pair_sets),
        )


def load_automaton(path: str | Path) -> RabinAutomaton:
    return RabinAutomaton.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class DeterminismViolation:
    clause: int
    detail: str


@dataclass(frozen=True)
class DeterminismReport:
    violations: tuple[DeterminismViolation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def is_deterministic(a: RabinAutomaton, ap: Sequence[str] | None = None) -> DeterminismReport:
    """Check the three determinism clauses over all letters of the alphabet."""
    alphabet = tuple(ap) if ap is not None else a.alphabet
    letters = _subsets(alphabet)
    out = []
    for eta in letters:
        hits = [a.locations[i] for i in a.initial if a.labels[i] == eta]
        if len(hits) != 1:
            out.append(DeterminismViolation(1, f"{len(hits)} initial locations labelled {sorted(eta)}: {hits}"))
    for l, succ in enumerate(a.successors):
        for eta in letters:
            if not any(a.labels[t] == eta for t in succ):
                out.append(DeterminismViolation(2, f"{a.locations[l]} has no successor labelled {sorted(eta)}"))
        seen: dict[frozenset[str], int] = {}
        for t in dict.fromkeys(succ):
            if a.labels[t] in seen:
                out.append(DeterminismViolation(
                    3, f"{a.locations[l]} has successors {a.locations[seen[a.labels[t]]]} and "
                       f"{a.locations[t]} with the same label"))
            seen[a.labels[t]] = t
    return DeterminismReport(tuple(out))


@dataclass(frozen=True)
class ProductMdp:
    mdp: Mdp
    pairs: tuple[tuple[StateSet, StateSet], ...]
    # product state index -> (model state, automaton location)
    origin: tuple[tuple[int, int], ...]
    # model state -> product index of (s, l_init(s))
    init: tuple[int, ...]

    def restrict_reachable(self) -> "ProductMdp":
        """The sub-product reachable from the initial pairs (same state order)."""
        m = self.mdp
        seen = np.zeros(m.n, dtype=bool)
        stack = list(self.init)
        seen[stack] = True
        while stack:
            x = stack.pop()
            for dist in m.trans[x]:
                for t, _ in dist:
                    if not seen[t]:
                        seen[t] = True
                        stack.append(t)
        keep = np.flatnonzero(seen)
        remap = {int(old): new for new, old in enumerate(keep)}
        states = []
        for old in keep:
            acts = {a: {m.names[t]: p for t, p in dist} for a, dist in zip(m.moves[old], m.trans[old])}
            states.append((m.names[old], sorted(m.labels[old]), acts))
        sub = build(states, m.propositions)
        return ProductMdp(
            mdp=sub,
            pairs=tuple((P[keep], R[keep]) for P, R in self.pairs),
            origin=tuple(self.origin[int(old)] for old in keep),
            init=tuple(remap[x] for x in self.init),
        )


def _letter(m: Mdp, s: int, alphabet: Sequence[str]) -> frozenset[str]:
    return frozenset(m.labels[s] & set(alphabet))


def product(m: Mdp, a: RabinAutomaton) -> ProductMdp:
    """Synchronous product; model labels are read on the automaton's alphabet."""
    report = is_deterministic(a)
    if not report:
        raise NotDeterministic(report.violations)
    letters = [_letter(m, s, a.alphabet) for s in range(m.n)]
    pairs_sl = [(s, l) for s in range(m.n) for l in range(len(a.locations)) if a.labels[l] == letters[s]]
    index = {sl: i for i, sl in enumerate(pairs_sl)}

    def step(l: int, eta: frozenset[str]) -> int:
        for t in a.successors[l]:
            if a.labels[t] == eta:
                return t
        raise AssertionError("determinism clause 2 guarantees a successor")

    names = [f"({m.names[s]},{a.locations[l]})" for s, l in pairs_sl]
    states = []
    for s, l in pairs_sl:
        acts = {}
        for act, dist in zip(m.moves[s], m.trans[s]):
            acts[act] = {names[index[(t, step(l, letters[t]))]]: p for t, p in dist}
        states.append((names[index[(s, l)]], sorted(a.labels[l]), acts))
    pm = build(states, a.alphabet)

    init_loc = {a.labels[l]: l for l in a.initial}
    init = tuple(index[(s, init_loc[letters[s]])] for s in range(m.n))
    lifted = []
    for P, R in a.pairs:
        lifted.append((np.array([l in P for _, l in pairs_sl], dtype=bool),
                       np.array([l in R for _, l in pairs_sl], dtype=bool)))
    return ProductMdp(pm, tuple(lifted), tuple(pairs_sl), init)


def _pair_core(mode: Mode, m: Mdp, allowed: StateSet, R: StateSet) -> StateSet:
    # States that can stay inside `allowed` forever while visiting R infinitely often.
    if mode == Mode.SURE:
        return gfp(lambda Y: lfp(lambda X: allowed & (cpre(m, X) | (R & cpre(m, Y))), m), m)
    if mode == Mode.ALMOST:
        return gfp(lambda Y: lfp(lambda X: allowed & (apre(m, Y, X) | (R & cpre(m, Y))), m), m)
    return gfp(lambda Y: lfp(lambda X: allowed & (pre(m, X) | (R & pre(m, Y))), m), m)


def accepting_core(pm: ProductMdp, mode: Mode) -> StateSet:
    m = pm.mdp
    out = np.zeros(m.n, dtype=bool)
    core_mode = Mode.ALMOST if mode == Mode.POS else mode
    for P, R in pm.pairs:
        out |= _pair_core(core_mode, m, ~P, R)
    return out


def rabin_qual(pm: ProductMdp, mode: Mode) -> StateSet:
    """Product states from which the Rabin objective holds with the given quantifier mode."""
    m = pm.mdp
    core = accepting_core(pm, mode)
    if mode == Mode.SURE:
        return lfp(lambda W: core | cpre(m, W), m)
    if mode == Mode.ALMOST:
        return gfp(lambda Z: lfp(lambda W: apre(m, Z, W) | core, m), m)
    return lfp(lambda W: core | pre(m, W), m)


def check_star(m: Mdp, quantifier: Quantifier, a: RabinAutomaton,
               complement: RabinAutomaton | None = None) -> StateSet:
    """States of ``m`` satisfying ``quantifier`` applied to the automaton's language.

    A universal quantifier needs an automaton for the complement language:
    ``A^mode phi`` is evaluated as ``not E^dual(mode) not phi``.
    """
    if not quantifier.exists:
        if complement is None:
            raise MissingComplement(f"{quantifier.token} needs a complement automaton")
        return ~check_star(m, dual(quantifier), complement)
    pm = product(m, a)
    sat = rabin_qual(pm, quantifier.mode)
    return sat[list(pm.init)]


# ----------------------------------------------------------- automata builders

def dra_next(q: str, alphabet: Sequence[str]) -> RabinAutomaton:
    """X q."""
    def step(k, eta):
        if k == "start":
            return "one"
        if k == "one":
            return "acc" if q in eta else "rej"
        return k
    return RabinAutomaton.from_transition_function(alphabet, "start", step, [({"rej"}, {"acc"})])


def dra_until(q: str | None, r: str, alphabet: Sequence[str]) -> RabinAutomaton:
    """q U r; ``q=None`` gives eventually r."""
    def step(k, eta):
        if k != "wait":
            return k
        if r in eta:
            return "acc"
        if q is None or q in eta:
            return "wait"
        return "rej"
    return RabinAutomaton.from_transition_function(alphabet, "wait", step, [({"wait", "rej"}, {"acc"})])


def dra_wait(q: str, r: str | None, alphabet: Sequence[str]) -> RabinAutomaton:
    """q W r (inclusive); ``r=None`` gives always q."""
    def step(k, eta):
        if k != "wait":
            return k
        if q not in eta:
            return "rej"
        if r is not None and r in eta:
            return "acc"
        return "wait"
    return RabinAutomaton.from_transition_function(alphabet, "wait", step, [({"rej"}, {"wait", "acc"})])


def dra_eventually_and_always(q: str, p: str, alphabet: Sequence[str]) -> RabinAutomaton:
    """F q & G p."""
    def step(k, eta):
        if k == "dead" or p not in eta:
            return "dead"
        if k == "seen" or q in eta:
            return "seen"
        return "todo"
    return RabinAutomaton.from_transition_function(alphabet, "todo", step, [({"todo", "dead"}, {"seen"})])


def dra_true(alphabet: Sequence[str]) -> RabinAutomaton:
    """Every word is accepted."""
    return RabinAutomaton.from_transition_function(alphabet, "any", lambda k, eta: k, [((), {"any"})])


def dra_infinitely_often(q: str, alphabet: Sequence[str]) -> RabinAutomaton:
    """G F q."""
    return RabinAutomaton.from_transition_function(
        alphabet, "miss", lambda k, eta: "hit" if q in eta else "miss", [((), {"hit"})])
