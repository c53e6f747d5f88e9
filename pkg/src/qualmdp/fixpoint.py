"""One-step predecessor operators and least/greatest fixpoints over state sets.

A state set is a boolean numpy array of shape ``(n,)``.  Every operator also
accepts a stack of sets of shape ``(batch, n)`` and evaluates all of them in one
pass; the splitter search in :mod:`qualmdp.equivalence` relies on this.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .mdp import Mdp

StateSet = np.ndarray


class NonConvergence(RuntimeError):
    """A fixpoint iteration ran past ``|S| + 1`` steps (the operator is not monotone)."""


def empty(m: Mdp) -> StateSet:
    return np.zeros(m.n, dtype=bool)


def full(m: Mdp) -> StateSet:
    return np.ones(m.n, dtype=bool)


def _per_state(m: Mdp, per_pair: np.ndarray) -> np.ndarray:
    return np.logical_or.reduceat(per_pair, m.state_start, axis=-1)


def pre(m: Mdp, X: StateSet) -> StateSet:
    """States with an action whose support meets ``X``."""
    hit = np.logical_or.reduceat(X[..., m.succ], m.pair_start, axis=-1)
    return _per_state(m, hit)


def cpre(m: Mdp, X: StateSet) -> StateSet:
    """States with an action whose support lies inside ``X``."""
    inside = np.logical_and.reduceat(X[..., m.succ], m.pair_start, axis=-1)
    return _per_state(m, inside)


def apre(m: Mdp, Y: StateSet, X: StateSet) -> StateSet:
    """States with an action whose support lies inside ``Y`` and meets ``X``."""
    inside = np.logical_and.reduceat(Y[..., m.succ], m.pair_start, axis=-1)
    hit = np.logical_or.reduceat(X[..., m.succ], m.pair_start, axis=-1)
    return _per_state(m, inside & hit)


def _iterate(f: Callable[[StateSet], StateSet], start: StateSet, bound: int) -> StateSet:
    current = start
    for _ in range(bound + 1):
        nxt = f(current)
        if np.array_equal(nxt, current):
            return nxt
        current = nxt
    raise NonConvergence(f"no fixpoint after {bound + 1} iterations")


def lfp(f: Callable[[StateSet], StateSet], m: Mdp, shape: tuple[int, ...] | None = None) -> StateSet:
    """Least fixpoint of a monotone ``f``, iterated from the empty set."""
    start = np.zeros(shape or (m.n,), dtype=bool)
    return _iterate(f, start, m.n)


def gfp(f: Callable[[StateSet], StateSet], m: Mdp, shape: tuple[int, ...] | None = None) -> StateSet:
    """Greatest fixpoint of a monotone ``f``, iterated from the full set."""
    start = np.ones(shape or (m.n,), dtype=bool)
    return _iterate(f, start, m.n)
