"""Brute-force reference semantics used to cross-check the fixpoint algorithms.

Every memoryless deterministic strategy is enumerated and the induced Markov
chain is analysed directly.  Nothing here shares code with the fixpoint
evaluators beyond the model representation.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from typing import Iterator, Sequence

import networkx as nx
import numpy as np

from . import formula as fm
from .checker import check
from .formula import Mode, Quantifier
from .mdp import Mdp, build

DEFAULT_MAX_STATES = 8
DEFAULT_MAX_ACTIONS = 3
DEFAULT_MAX_STRATEGIES = 200_000

ZERO, POSITIVE, ONE = 0, 1, 2


class BoundExceeded(ValueError):
    pass


@dataclass(frozen=True)
class MemorylessStrategy:
    choice: tuple[int, ...]  # per state, index into moves[s]

    def action(self, m: Mdp, s: int) -> str:
        return m.moves[s][self.choice[s]]


def strategy_count(m: Mdp) -> int:
    return math.prod(len(mv) for mv in m.moves)


def strategies(m: Mdp, max_strategies: int = DEFAULT_MAX_STRATEGIES) -> Iterator[MemorylessStrategy]:
    count = strategy_count(m)
    if count > max_strategies:
        raise BoundExceeded(f"{count} memoryless strategies exceed the bound {max_strategies}")
    for choice in itertools.product(*(range(len(mv)) for mv in m.moves)):
        yield MemorylessStrategy(choice)


def induced_chain(m: Mdp, sigma: MemorylessStrategy) -> Mdp:
    states = []
    for s in range(m.n):
        k = sigma.choice[s]
        dist = {m.names[t]: p for t, p in m.trans[s][k]}
        states.append((m.names[s], sorted(m.labels[s]), {m.moves[s][k]: dist}))
    return build(states, m.propositions)


def _succ_lists(chain: Mdp) -> list[list[int]]:
    return [[t for t, _ in chain.trans[s][0]] for s in range(chain.n)]


def _matrix(chain: Mdp) -> np.ndarray:
    P = np.zeros((chain.n, chain.n))
    for s in range(chain.n):
        for t, p in chain.trans[s][0]:
            P[s, t] += float(p)
    return P


def _backward(succ: list[list[int]], seeds: np.ndarray, through: np.ndarray) -> np.ndarray:
    """States that reach ``seeds`` along paths whose intermediate states lie in ``through``."""
    n = len(succ)
    preds: list[list[int]] = [[] for _ in range(n)]
    for s in range(n):
        for t in succ[s]:
            preds[t].append(s)
    seen = seeds.copy()
    stack = list(np.flatnonzero(seeds))
    while stack:
        t = stack.pop()
        for s in preds[t]:
            if not seen[s] and through[s]:
                seen[s] = True
                stack.append(s)
    return seen


def reach_classes(chain: Mdp, target: np.ndarray, avoid: np.ndarray | None = None) -> np.ndarray:
    """Graph-only classification of Pr(reach target before avoid): ZERO, POSITIVE or ONE."""
    target = np.asarray(target, dtype=bool)
    avoid = np.zeros(chain.n, dtype=bool) if avoid is None else (np.asarray(avoid, dtype=bool) & ~target)
    succ = _succ_lists(chain)
    free = ~target & ~avoid
    can = _backward(succ, target, free)
    zero = ~can
    # Not almost sure iff some path through free states hits a zero state.
    leak = _backward(succ, zero, free)
    out = np.full(chain.n, POSITIVE, dtype=np.int8)
    out[zero] = ZERO
    out[~leak] = ONE
    return out


def chain_reach_prob(chain: Mdp, target: np.ndarray, avoid: np.ndarray | None = None,
                     tolerance: float = 1e-12, max_iter: int = 1_000_000) -> np.ndarray:
    """Probability of reaching ``target`` (before ``avoid``) from each state of a Markov chain."""
    if not chain.is_markov_chain():
        raise ValueError("chain_reach_prob needs exactly one action per state")
    cls = reach_classes(chain, target, avoid)
    x = (cls == ONE).astype(float)
    unknown = cls == POSITIVE
    if unknown.any():
        P = _matrix(chain)[unknown]
        for _ in range(max_iter):
            new = P @ x
            delta = np.max(np.abs(new - x[unknown]))
            x[unknown] = new
            if delta <= tolerance:
                break
    return x


def _sure_until(succ: list[list[int]], Q: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Every path satisfies Q U R."""
    n = len(succ)
    wait = Q & ~R
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    g.add_edges_from((s, t) for s in range(n) if wait[s] for t in succ[s] if wait[t])
    # Waiting forever needs a cycle inside the wait region.
    cyclic = np.zeros(n, dtype=bool)
    for comp in nx.strongly_connected_components(g):
        comp = list(comp)
        if len(comp) > 1 or g.has_edge(comp[0], comp[0]):
            cyclic[comp] = True
    bad_now = wait & (cyclic | np.array([any(not (Q[t] or R[t]) for t in succ[s]) for s in range(n)]))
    bad = _backward(succ, bad_now, wait)
    return R | (wait & ~bad)


def _some_until(succ: list[list[int]], Q: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Some path satisfies Q U R."""
    return _backward(succ, R, Q & ~R)


@dataclass(frozen=True)
class ChainVerdict:
    sure: np.ndarray
    some: np.ndarray
    cls: np.ndarray


def _chain_verdict(chain: Mdp, op: str, Q: np.ndarray, R: np.ndarray) -> ChainVerdict:
    succ = _succ_lists(chain)
    n = chain.n
    if op == "X":
        sure = np.array([all(R[t] for t in succ[s]) for s in range(n)])
        some = np.array([any(R[t] for t in succ[s]) for s in range(n)])
        cls = np.where(sure, ONE, np.where(some, POSITIVE, ZERO)).astype(np.int8)
        return ChainVerdict(sure, some, cls)
    if op == "U":
        return ChainVerdict(_sure_until(succ, Q, R), _some_until(succ, Q, R),
                            reach_classes(chain, R, ~Q & ~R))
    if op == "W":
        # Q W R holds exactly when (not R) U (not Q) fails.
        dual = _chain_verdict(chain, "U", ~R, ~Q)
        return ChainVerdict(~dual.some, ~dual.sure, (ONE - dual.cls).astype(np.int8))
    raise ValueError(f"unknown path operator {op!r}")


@dataclass(frozen=True)
class OracleVerdict:
    """Per strategy (rows) and state (columns): path event verdicts."""
    sure: np.ndarray
    some: np.ndarray
    cls: np.ndarray

    @property
    def strategies(self) -> int:
        return self.sure.shape[0]

    def holds(self, q: Quantifier) -> np.ndarray:
        per = {
            Mode.SURE: self.sure,
            Mode.NULLO: self.some,
            Mode.ALMOST: self.cls == ONE,
            Mode.POS: self.cls >= POSITIVE,
        }[q.mode]
        return per.any(axis=0) if q.exists else per.all(axis=0)


def _check_bounds(m: Mdp, max_states: int, max_actions: int) -> None:
    if m.n > max_states:
        raise BoundExceeded(f"{m.n} states exceed the oracle bound {max_states}")
    acts = {a for mv in m.moves for a in mv}
    if len(acts) > max_actions:
        raise BoundExceeded(f"{len(acts)} actions exceed the oracle bound {max_actions}")


def qualitative_verdict(m: Mdp, op: str, Q: np.ndarray, R: np.ndarray | None = None,
                        max_states: int = DEFAULT_MAX_STATES,
                        max_actions: int = DEFAULT_MAX_ACTIONS) -> OracleVerdict:
    """``op`` is ``X`` (operand ``Q``), ``U`` or ``W`` (operands ``Q``, ``R``)."""
    _check_bounds(m, max_states, max_actions)
    Q = np.asarray(Q, dtype=bool)
    R = Q if op == "X" else np.asarray(R, dtype=bool)
    rows = [_chain_verdict(induced_chain(m, sigma), op, Q, R) for sigma in strategies(m)]
    return OracleVerdict(np.stack([r.sure for r in rows]), np.stack([r.some for r in rows]),
                         np.stack([r.cls for r in rows]))


def _closure(adj: Sequence[int], start: int, within: int) -> int:
    seen = frontier = 1 << start
    while frontier:
        nxt = 0
        bits = frontier
        while bits:
            low = bits & -bits
            nxt |= adj[low.bit_length() - 1]
            bits ^= low
        frontier = nxt & within & ~seen
        seen |= frontier
    return seen


def _sc_subsets(adj: Sequence[int], radj: Sequence[int], size: int) -> Iterator[int]:
    """Bitmasks of the strongly connected node subsets of a small graph."""
    for sub in range(1, 1 << size):
        first = (sub & -sub).bit_length() - 1
        if sub & (sub - 1) == 0:
            if adj[first] >> first & 1:
                yield sub
        elif _closure(adj, first, sub) == sub and _closure(radj, first, sub) == sub:
            yield sub


def rabin_verdict(pm, mode: Mode, max_states: int = 12,
                  max_strategies: int = DEFAULT_MAX_STRATEGIES) -> np.ndarray:
    """Existential Rabin verdict per product state, by strategy and lasso enumeration.

    Under a fixed strategy the possible infinity sets are exactly the strongly
    connected subsets of the induced graph; almost-sure behaviour is decided
    by its bottom components.
    """
    m = pm.mdp
    if m.n > max_states:
        raise BoundExceeded(f"{m.n} product states exceed the bound {max_states}")
    pairs = [(sum(1 << int(s) for s in np.flatnonzero(P)), sum(1 << int(s) for s in np.flatnonzero(R)))
             for P, R in pm.pairs]

    def accepting(sub: int) -> bool:
        return any(not sub & P and sub & R for P, R in pairs)

    cache: dict = {}

    def component_flag(members: tuple[int, ...], succ: list[list[int]]) -> bool | None:
        # None: no infinity set lives here (a transient singleton).
        key = tuple((s, tuple(t for t in succ[s] if t in members)) for s in members)
        if key in cache:
            return cache[key]
        local = {s: i for i, s in enumerate(members)}
        adj = [0] * len(members)
        radj = [0] * len(members)
        for s in members:
            for t in succ[s]:
                if t in local:
                    adj[local[s]] |= 1 << local[t]
                    radj[local[t]] |= 1 << local[s]
        found = []
        for sub in _sc_subsets(adj, radj, len(members)):
            found.append(accepting(sum(1 << members[i] for i in range(len(members)) if sub >> i & 1)))
        if not found:
            flag = None
        elif mode == Mode.SURE:
            flag = all(found)
        else:
            flag = any(found)
        cache[key] = flag
        return flag

    out = np.zeros(m.n, dtype=bool)
    for sigma in strategies(m, max_strategies):
        succ = [[t for t, _ in m.trans[s][sigma.choice[s]]] for s in range(m.n)]
        g = nx.DiGraph()
        g.add_nodes_from(range(m.n))
        g.add_edges_from((s, t) for s in range(m.n) for t in succ[s])
        cond = nx.condensation(g)
        good = {}
        for c in cond.nodes:
            members = tuple(sorted(cond.nodes[c]["members"]))
            if mode in (Mode.ALMOST, Mode.POS):
                # A bottom component is visited entirely, infinitely often, almost surely.
                good[c] = accepting(sum(1 << s for s in members)) if cond.out_degree(c) == 0 else None
            else:
                good[c] = component_flag(members, succ)
        for s in range(m.n):
            if out[s]:
                continue
            c0 = cond.graph["mapping"][s]
            flags = [good[c] for c in (c0, *nx.descendants(cond, c0)) if good[c] is not None]
            out[s] = all(flags) if mode in (Mode.SURE, Mode.ALMOST) else any(flags)
    return out


def oracle_check(m: Mdp, f, max_states: int = DEFAULT_MAX_STATES) -> np.ndarray:
    """Evaluate a QRCTL formula bottom-up with strategy enumeration at every quantifier.

    Universal quantifiers are read directly (all strategies) rather than through
    the dualities, so this is an independent semantics for whole formulas.
    """
    if isinstance(f, str):
        f = fm.parse(f)
    if not fm.is_qrctl(f):
        raise ValueError(f"not a QRCTL formula: {fm.show(f)}")

    def state(g) -> np.ndarray:
        if isinstance(g, fm.TrueF):
            return np.ones(m.n, dtype=bool)
        if isinstance(g, fm.Atom):
            return m.prop_set(g.name)
        if isinstance(g, fm.Not):
            return ~state(g.arg)
        if isinstance(g, fm.Or):
            return state(g.left) | state(g.right)
        p = g.path
        if isinstance(p, fm.Embed):
            return state(p.state)
        if isinstance(p, fm.Next):
            v = qualitative_verdict(m, "X", state(p.arg.state), max_states=max_states)
        else:
            op = "U" if isinstance(p, fm.Until) else "W"
            v = qualitative_verdict(m, op, state(p.left.state), state(p.right.state), max_states=max_states)
        return v.holds(g.quantifier)

    return state(f)


# ---------------------------------------------------------------- distinguishers

def _templates(fragment: str) -> list[tuple[str, str, str]]:
    """(quantifier token, operator, ...) triples generated at each depth."""
    if fragment == "pos":
        qs, ops = ("Epos", "Eas"), ("X", "U", "W")
    elif fragment == "sure":
        qs, ops = ("Esure", "Eex"), ("X", "U", "W")
    elif fragment == "pos_next":
        qs, ops = ("Epos", "Eas"), ("X",)
    elif fragment == "bisim":
        qs, ops = ("Eex",), ("X",)
    else:
        raise ValueError(f"unknown fragment {fragment!r}")
    return [(q, op) for op in ops for q in qs]


def _refine(keys: list, column: np.ndarray) -> list:
    return [k + (bool(v),) for k, v in zip(keys, column)]


def enumerate_distinguishers(m: Mdp, fragment: str = "pos", depth: int = 3,
                             max_states: int = 6, max_blocks: int = 7):
    """Partition induced by all fragment formulas up to ``depth`` nested temporal steps.

    Round ``k + 1`` applies every quantified next, until and wait-for to every
    union (and pair of unions) of the blocks found in round ``k``.  The unions
    are bound to pseudo-atoms and each template is evaluated by the checker in
    one batched call.
    """
    from .equivalence import Partition
    if m.n > max_states:
        raise BoundExceeded(f"{m.n} states exceed the distinguisher bound {max_states}")
    keys = [tuple(sorted(lab)) for lab in m.labels]
    part = Partition(keys)
    templates = _templates(fragment)
    for _ in range(depth):
        k = len(part)
        if k > max_blocks:
            raise BoundExceeded(f"{k} blocks exceed the distinguisher bound {max_blocks}")
        blocks = np.stack(part.blocks)
        sel = np.array(list(itertools.product((False, True), repeat=k)), dtype=bool)
        unions = (sel.astype(np.uint8) @ blocks.astype(np.uint8)) > 0
        u = len(unions)
        left = np.repeat(unions, u, axis=0)
        right = np.tile(unions, (u, 1))
        keys = [(b,) for b in part.block_of.tolist()]
        for q, op in templates:
            if op == "X":
                f = fm.parse(f"{q} X __u")
                res = check(m, f, env={"__u": unions})
            else:
                f = fm.parse(f"{q} (__l {op} __r)")
                res = check(m, f, env={"__l": left, "__r": right})
            for row in np.unique(np.atleast_2d(res), axis=0):
                keys = _refine(keys, row)
        new = Partition(keys)
        if new == part:
            break
        part = new
    return part


# ---------------------------------------------------------------- perturbation

def perturb(m: Mdp, rng: random.Random, eps: float = 0.2) -> Mdp:
    """Scale every probability by a factor in ``[1 - eps, 1 + eps]`` and renormalise (as floats)."""
    states = []
    for s in range(m.n):
        acts = {}
        for a, dist in zip(m.moves[s], m.trans[s]):
            raw = {m.names[t]: float(p) * rng.uniform(1 - eps, 1 + eps) for t, p in dist}
            total = sum(raw.values())
            acts[a] = {t: v / total for t, v in raw.items()}
        states.append((m.names[s], sorted(m.labels[s]), acts))
    return build(states, m.propositions)

