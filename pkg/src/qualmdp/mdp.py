"""Explicit finite Markov decision processes.

States are addressed by dense indices ``0..n-1``; names are kept in a table
for I/O.  Supports of every (state, action) pair are flattened once into
CSR-style arrays so that the predecessor operators in :mod:`qualmdp.fixpoint`
run as a single vectorised pass over all pairs.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Mapping, Union

import numpy as np

TURN = "turn"
TOLERANCE = 1e-9

Prob = Union[Fraction, float]


class ModelError(ValueError):
    """Base class for malformed model descriptions."""


class EmptyMoveSet(ModelError):
    def __init__(self, state: str):
        super().__init__(f"state {state!r} has no actions")
        self.state = state


class BadDistribution(ModelError):
    def __init__(self, state: str, action: str, total, reason: str = ""):
        msg = f"distribution of ({state!r}, {action!r}) sums to {total}"
        if reason:
            msg = f"distribution of ({state!r}, {action!r}): {reason}"
        super().__init__(msg)
        self.state = state
        self.action = action
        self.sum = total


class UndeclaredProposition(ModelError):
    def __init__(self, prop: str):
        super().__init__(f"proposition {prop!r} is not declared")
        self.proposition = prop


class DuplicateState(ModelError):
    def __init__(self, name: str):
        super().__init__(f"duplicate state name {name!r}")
        self.name = name


class UnknownState(ModelError):
    def __init__(self, name: str, where: str):
        super().__init__(f"unknown successor {name!r} in {where}")
        self.name = name


class NameCollision(ModelError):
    def __init__(self, name: str):
        super().__init__(f"synthesized state name {name!r} collides with an existing state")
        self.name = name


class TurnLabelWarning(UserWarning):
    """``turn`` appears on a state that cannot be a player-1 state."""


def parse_prob(value: Any) -> Prob:
    """Read a probability: ints and ``"p/q"`` strings are exact, floats stay floats."""
    if isinstance(value, bool):
        raise TypeError(f"not a probability: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        text = value.strip()
        if "/" in text or text.lstrip("-").isdigit():
            return Fraction(text)
        return float(text)
    raise TypeError(f"not a probability: {value!r}")


def format_prob(p: Prob) -> Union[str, int, float]:
    if isinstance(p, Fraction):
        if p.denominator == 1:
            return int(p)
        return f"{p.numerator}/{p.denominator}"
    return float(p)


@dataclass(frozen=True, eq=False)
class Mdp:
    """A validated finite MDP.  Build it with :func:`validate` or :func:`build`."""

    names: tuple[str, ...]
    propositions: tuple[str, ...]
    labels: tuple[frozenset[str], ...]
    moves: tuple[tuple[str, ...], ...]
    # trans[s][k] is the distribution of action moves[s][k]: ((succ, prob), ...)
    trans: tuple[tuple[tuple[tuple[int, Prob], ...], ...], ...]
    index: Mapping[str, int] = field(init=False, repr=False)
    succ: np.ndarray = field(init=False, repr=False)
    pair_start: np.ndarray = field(init=False, repr=False)
    state_start: np.ndarray = field(init=False, repr=False)
    pair_state: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {n: i for i, n in enumerate(self.names)})
        succ, pair_start, state_start, pair_state = [], [], [], []
        for s, dists in enumerate(self.trans):
            state_start.append(len(pair_start))
            for dist in dists:
                pair_start.append(len(succ))
                pair_state.append(s)
                succ.extend(t for t, _ in dist)
        for name, arr in (("succ", succ), ("pair_start", pair_start),
                          ("state_start", state_start), ("pair_state", pair_state)):
            a = np.asarray(arr, dtype=np.intp)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n(self) -> int:
        return len(self.names)

    def __len__(self) -> int:
        return len(self.names)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Mdp):
            return NotImplemented
        return (self.names, self.propositions, self.labels, self.moves, self.trans) == (
            other.names, other.propositions, other.labels, other.moves, other.trans)

    def __hash__(self) -> int:
        return hash((self.names, self.moves))

    @property
    def size_delta(self) -> int:
        """|delta|: total support size over all state-action pairs."""
        return int(self.succ.size)

    def distribution(self, s: int, action: str) -> dict[int, Prob]:
        k = self.moves[s].index(action)
        return dict(self.trans[s][k])

    def dest(self, s: int, action: str) -> frozenset[int]:
        k = self.moves[s].index(action)
        return frozenset(t for t, _ in self.trans[s][k])

    def supports(self, s: int) -> list[frozenset[int]]:
        return [frozenset(t for t, _ in dist) for dist in self.trans[s]]

    def prop_set(self, prop: str) -> np.ndarray:
        if prop not in self.propositions:
            raise UndeclaredProposition(prop)
        return np.array([prop in lab for lab in self.labels], dtype=bool)

    def names_of(self, states: Iterable[int] | np.ndarray) -> list[str]:
        """Names of a state set, sorted by name."""
        if isinstance(states, np.ndarray) and states.dtype == bool:
            states = np.flatnonzero(states)
        return sorted(self.names[int(i)] for i in states)

    def mask(self, names: Iterable[str]) -> np.ndarray:
        out = np.zeros(self.n, dtype=bool)
        for nm in names:
            out[self.index[nm]] = True
        return out

    def is_markov_chain(self) -> bool:
        return all(len(mv) == 1 for mv in self.moves)


@dataclass(frozen=True)
class EdgeRelation:
    adjacency: tuple[frozenset[int], ...]

    def __getitem__(self, s: int) -> frozenset[int]:
        return self.adjacency[s]


def edge_relation(m: Mdp) -> EdgeRelation:
    return EdgeRelation(tuple(frozenset().union(*m.supports(s)) for s in range(m.n)))


def build(states: Iterable[tuple[str, Iterable[str], Mapping[str, Mapping[str, Any]]]],
          propositions: Iterable[str] | None = None) -> Mdp:
    """Build and validate an MDP from ``(name, labels, {action: {succ: prob}})`` triples.

    When ``propositions`` is omitted the alphabet is the union of all labels.
    """
    states = [(name, list(labels), actions) for name, labels, actions in states]
    if propositions is None:
        seen: dict[str, None] = {}
        for _, labels, _ in states:
            for p in labels:
                seen.setdefault(p, None)
        propositions = list(seen)
    return validate({
        "propositions": list(propositions),
        "states": [{"name": n, "labels": lab, "actions": acts} for n, lab, acts in states],
    })


def validate(raw: Mapping[str, Any]) -> Mdp:
    """Validate a parsed model description (the JSON layout) into an :class:`Mdp`.

    Distributions are checked, never renormalised: a sum away from one is an
    error.
    """
    props = tuple(raw.get("propositions", ()))
    if len(set(props)) != len(props):
        raise ModelError("duplicate proposition in declaration")
    declared = set(props)
    entries = list(raw["states"])
    names: list[str] = []
    index: dict[str, int] = {}
    for entry in entries:
        name = str(entry["name"])
        if name in index:
            raise DuplicateState(name)
        index[name] = len(names)
        names.append(name)

    labels, moves, trans = [], [], []
    for entry in entries:
        name = str(entry["name"])
        lab = frozenset(entry.get("labels", ()))
        for p in sorted(lab):
            if p not in declared:
                raise UndeclaredProposition(p)
        actions = entry.get("actions") or {}
        if not actions:
            raise EmptyMoveSet(name)
        acts, dists = [], []
        for action, dist in actions.items():
            if not dist:
                raise BadDistribution(name, action, 0, "empty support")
            pairs = []
            for succ_name, value in dist.items():
                if succ_name not in index:
                    raise UnknownState(succ_name, f"({name}, {action})")
                p = parse_prob(value)
                if not 0 < p <= 1:
                    raise BadDistribution(name, action, p, f"probability {value!r} outside (0, 1]")
                pairs.append((index[succ_name], p))
            total = sum(p for _, p in pairs)
            exact = all(isinstance(p, Fraction) for _, p in pairs)
            if (exact and total != 1) or (not exact and abs(float(total) - 1.0) > TOLERANCE):
                raise BadDistribution(name, action, total)
            pairs.sort(key=lambda tp: tp[0])
            acts.append(str(action))
            dists.append(tuple(pairs))
        if TURN in lab and any(len(d) != 1 for d in dists):
            warnings.warn(f"state {name!r} carries {TURN!r} but has a probabilistic action",
                          TurnLabelWarning, stacklevel=2)
        labels.append(lab)
        moves.append(tuple(acts))
        trans.append(tuple(dists))
    return Mdp(tuple(names), props, tuple(labels), tuple(moves), tuple(trans))


def to_dict(m: Mdp) -> dict[str, Any]:
    return {
        "propositions": list(m.propositions),
        "states": [
            {
                "name": m.names[s],
                "labels": sorted(m.labels[s]),
                "actions": {
                    a: {m.names[t]: format_prob(p) for t, p in dist}
                    for a, dist in zip(m.moves[s], m.trans[s])
                },
            }
            for s in range(m.n)
        ],
    }


def dumps(m: Mdp) -> str:
    return json.dumps(to_dict(m), indent=2)


def loads(text: str) -> Mdp:
    return validate(json.loads(text))


def load(path: str | Path) -> Mdp:
    return loads(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class Violation:
    state: str
    clause: int
    reason: str


@dataclass(frozen=True)
class AmdpPartition:
    player1: frozenset[int]
    player_p: frozenset[int]


@dataclass(frozen=True)
class AlternationReport:
    partition: AmdpPartition | None
    violations: tuple[Violation, ...]

    @property
    def accepted(self) -> bool:
        return self.partition is not None

    def __bool__(self) -> bool:
        return self.accepted


def check_alternating(m: Mdp) -> AlternationReport:
    """Test the two alternation clauses; the partition is the one implied by ``turn``."""
    violations = []
    p1, pp = set(), set()
    for s in range(m.n):
        if TURN in m.labels[s]:
            p1.add(s)
            for a, dist in zip(m.moves[s], m.trans[s]):
                if len(dist) != 1:
                    violations.append(Violation(m.names[s], 1, f"action {a!r} has {len(dist)} successors"))
        else:
            pp.add(s)
            if len(m.moves[s]) != 1:
                violations.append(Violation(m.names[s], 2, f"{len(m.moves[s])} actions without {TURN!r}"))
    if violations:
        return AlternationReport(None, tuple(violations))
    return AlternationReport(AmdpPartition(frozenset(p1), frozenset(pp)), ())


def alternate(m: Mdp) -> tuple[Mdp, AmdpPartition]:
    """Split every state-action pair into its own probabilistic state.

    Original states become player-1 states (labelled ``turn``) whose actions
    lead deterministically to ``<s,a>``; ``<s,a>`` carries ``trans(s, a)``.
    """
    taken = set(m.names)
    mid_names: list[list[str]] = []
    for s in range(m.n):
        row = []
        for a in m.moves[s]:
            name = f"<{m.names[s]},{a}>"
            if name in taken:
                name += "#1"
                if name in taken:
                    raise NameCollision(name)
            taken.add(name)
            row.append(name)
        mid_names.append(row)

    props = m.propositions if TURN in m.propositions else m.propositions + (TURN,)
    states = []
    for s in range(m.n):
        states.append((m.names[s], sorted(m.labels[s] | {TURN}),
                       {a: {mid: 1} for a, mid in zip(m.moves[s], mid_names[s])}))
    for s in range(m.n):
        for k, a in enumerate(m.moves[s]):
            dist = {m.names[t]: p for t, p in m.trans[s][k]}
            states.append((mid_names[s][k], sorted(m.labels[s] - {TURN}), {a: dist}))
    out = build(states, props)
    return out, AmdpPartition(frozenset(range(m.n)), frozenset(range(m.n, out.n)))
