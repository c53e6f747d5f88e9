"""Qualitative equivalences by partition refinement.

A partition is refined by *splitters*: a predecessor operator applied to a
union of blocks whose result cuts some block in two.  Every applied splitter
is logged so that a refinement can be replayed and checked independently.

``pre`` distributes over unions, so single blocks suffice.  For ``cpre`` the
minimal per-action block-sets of each state form an exact and polynomial
signature; the smallest splitting union is always one of them.  ``EU``
(almost-sure constrained reachability) has no such shortcut and is searched
over disjoint pairs of unions in order of increasing size.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .checker import eu_almost, check
from .fixpoint import StateSet, cpre, pre
from .mdp import Mdp, build

OPS = ("pre", "cpre", "EU")
RELATIONS = {
    "bisim": ("pre",),
    "simclo": ("pre", "cpre"),
    "sure": ("pre", "cpre"),
    "pos_next": ("pre", "cpre"),
    "pos": ("pre", "cpre", "EU"),
}
DEFAULT_BUDGET = 20
# Number of (C1, C2) candidates evaluated in one batched fixpoint call.
EU_CHUNK = 4096


class BudgetExceeded(RuntimeError):
    def __init__(self, blocks: int, budget: int):
        super().__init__(f"EU splitter search needs {blocks} blocks, budget is {budget}")
        self.blocks = blocks
        self.budget = budget


class Partition:
    """A partition of ``range(n)`` with dense block ids ordered by least member."""

    __slots__ = ("block_of",)

    def __init__(self, keys: Sequence):
        ids: dict = {}
        block_of = np.empty(len(keys), dtype=np.intp)
        for s, key in enumerate(keys):
            block_of[s] = ids.setdefault(key, len(ids))
        block_of.setflags(write=False)
        self.block_of = block_of

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable[int]], n: int) -> "Partition":
        keys = [None] * n
        for b, members in enumerate(blocks):
            for s in members:
                keys[s] = b
        if any(k is None for k in keys):
            raise ValueError("blocks do not cover every state")
        return cls(keys)

    @property
    def n(self) -> int:
        return len(self.block_of)

    def __len__(self) -> int:
        return int(self.block_of.max()) + 1 if self.n else 0

    @property
    def blocks(self) -> list[StateSet]:
        return [self.block_of == b for b in range(len(self))]

    def members(self) -> list[tuple[int, ...]]:
        out: list[list[int]] = [[] for _ in range(len(self))]
        for s, b in enumerate(self.block_of):
            out[b].append(s)
        return [tuple(x) for x in out]

    def union(self, ids: Iterable[int]) -> StateSet:
        return np.isin(self.block_of, list(ids))

    def same(self, s: int, t: int) -> bool:
        return self.block_of[s] == self.block_of[t]

    def refines(self, other: "Partition") -> bool:
        """True when every block of ``self`` lies inside a block of ``other``."""
        pairs = set(zip(self.block_of.tolist(), other.block_of.tolist()))
        return len(pairs) == len(self)

    def named(self, m: Mdp) -> list[list[str]]:
        """Blocks as sorted name lists, sorted by their first name."""
        return sorted(sorted(m.names[s] for s in blk) for blk in self.members())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return np.array_equal(self.block_of, other.block_of)

    def __hash__(self) -> int:
        return hash(self.block_of.tobytes())

    def __repr__(self) -> str:
        return f"Partition({self.members()})"


@dataclass(frozen=True)
class Splitter:
    """One refinement step: ``kind`` applied to unions ``c1`` (and ``c2`` for EU).

    Block ids refer to the partition the step was applied to; ``split`` lists
    the blocks the predicate cut.
    """
    kind: str
    c1: tuple[int, ...]
    c2: tuple[int, ...] = ()
    split: tuple[int, ...] = ()

    def describe(self, m: Mdp, p: Partition) -> str:
        def names(ids):
            return "{" + ",".join(n for b in ids for n in sorted(m.names[s] for s in p.members()[b])) + "}"
        if self.kind == "EU":
            return f"EU({names(self.c1)}, {names(self.c2)})"
        return f"{self.kind}({names(self.c1)})"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "c1": list(self.c1), "c2": list(self.c2), "split": list(self.split)}


@dataclass(frozen=True)
class Refinement:
    partition: Partition
    log: tuple[Splitter, ...]
    # partition in force before each logged step
    history: tuple[Partition, ...] = field(repr=False, default=())

    def count(self, kind: str) -> int:
        return sum(1 for sp in self.log if sp.kind == kind)


def initial_partition(m: Mdp) -> Partition:
    return Partition(m.labels)


def eu_almost_set(m: Mdp, C1: StateSet, C2: StateSet) -> StateSet:
    return eu_almost(m, C1, C2)


def splitter_predicate(m: Mdp, p: Partition, sp: Splitter) -> StateSet:
    if sp.kind == "pre":
        return pre(m, p.union(sp.c1))
    if sp.kind == "cpre":
        return cpre(m, p.union(sp.c1))
    if sp.kind == "EU":
        return eu_almost(m, p.union(sp.c1), p.union(sp.c2))
    raise ValueError(f"unknown splitter kind {sp.kind!r}")


def _cut_blocks(p: Partition, pred: np.ndarray) -> np.ndarray:
    """For a (batch, n) predicate stack, a (batch, blocks) mask of cut blocks."""
    k = len(p)
    onehot = np.zeros((p.n, k), dtype=np.intp)
    onehot[np.arange(p.n), p.block_of] = 1
    ones = pred.astype(np.intp) @ onehot
    sizes = np.bincount(p.block_of, minlength=k)
    return (ones > 0) & (ones < sizes)


def _apply(p: Partition, pred: StateSet) -> Partition:
    return Partition(list(zip(p.block_of.tolist(), pred.tolist())))


def _first_cut(p: Partition, pred: np.ndarray) -> tuple[int, tuple[int, ...]] | None:
    cut = _cut_blocks(p, pred)
    hits = np.flatnonzero(cut.any(axis=1))
    if hits.size == 0:
        return None
    i = int(hits[0])
    return i, tuple(int(b) for b in np.flatnonzero(cut[i]))


def _block_sets(m: Mdp, p: Partition) -> list[list[frozenset[int]]]:
    """Per state, the minimal block-sets among its actions' supports."""
    out = []
    for s in range(m.n):
        sets = {frozenset(int(p.block_of[t]) for t, _ in dist) for dist in m.trans[s]}
        out.append([a for a in sets if not any(b < a for b in sets)])
    return out


def _pre_splitter(m: Mdp, p: Partition) -> tuple[Splitter, StateSet] | None:
    stack = np.stack(p.blocks)
    hit = _first_cut(p, pre(m, stack))
    if hit is None:
        return None
    i, split = hit
    sp = Splitter("pre", (i,), (), split)
    return sp, pre(m, stack[i])


def _cpre_candidates_signature(m: Mdp, p: Partition) -> list[tuple[int, ...]]:
    cands = {tuple(sorted(a)) for sets in _block_sets(m, p) for a in sets}
    return sorted(cands, key=lambda c: (len(c), c))


def _cpre_candidates_enumerated(k: int) -> Iterator[tuple[int, ...]]:
    for size in range(1, k + 1):
        yield from itertools.combinations(range(k), size)


def _cpre_splitter(m: Mdp, p: Partition, exhaustive: bool = False) -> tuple[Splitter, StateSet] | None:
    if exhaustive:
        cands = list(_cpre_candidates_enumerated(len(p)))
    else:
        cands = _cpre_candidates_signature(m, p)
    if not cands:
        return None
    stack = np.stack([p.union(c) for c in cands])
    pred = cpre(m, stack)
    hit = _first_cut(p, pred)
    if hit is None:
        return None
    i, split = hit
    return Splitter("cpre", cands[i], (), split), pred[i]


def _eu_candidates(k: int) -> Iterator[tuple[tuple[int, ...], tuple[int, ...]]]:
    # Disjoint (C1, C2) with C2 nonempty, by total size then lexicographically.
    # EU(C1, C2) = EU(C1 minus C2, C2), so overlapping pairs are redundant.
    for total in range(1, k + 1):
        level = []
        for n2 in range(1, total + 1):
            for c2 in itertools.combinations(range(k), n2):
                rest = [b for b in range(k) if b not in c2]
                for c1 in itertools.combinations(rest, total - n2):
                    level.append((c1, c2))
        level.sort()
        yield from level


def _eu_splitter(m: Mdp, p: Partition) -> tuple[Splitter, StateSet] | None:
    k = len(p)
    block_mask = np.stack(p.blocks)
    cands = _eu_candidates(k)
    while True:
        chunk = list(itertools.islice(cands, EU_CHUNK))
        if not chunk:
            return None
        sel1 = np.zeros((len(chunk), k), dtype=bool)
        sel2 = np.zeros((len(chunk), k), dtype=bool)
        for i, (c1, c2) in enumerate(chunk):
            sel1[i, list(c1)] = True
            sel2[i, list(c2)] = True
        C1 = (sel1.astype(np.uint8) @ block_mask.astype(np.uint8)) > 0
        C2 = (sel2.astype(np.uint8) @ block_mask.astype(np.uint8)) > 0
        pred = eu_almost(m, C1, C2)
        hit = _first_cut(p, pred)
        if hit is not None:
            i, split = hit
            c1, c2 = chunk[i]
            return Splitter("EU", c1, c2, split), pred[i]


def coarsest_stable(m: Mdp, ops: Iterable[str], budget: int = DEFAULT_BUDGET,
                    start: Partition | None = None, exhaustive_cpre: bool = False) -> Refinement:
    """Coarsest refinement of the label partition stable under ``ops``.

    Cheap operators are exhausted before the EU search starts, and the search
    restarts from ``pre`` after every split.
    """
    ops = tuple(ops)
    bad = set(ops) - set(OPS)
    if bad:
        raise ValueError(f"unknown operators: {sorted(bad)}")
    p = start if start is not None else initial_partition(m)
    log: list[Splitter] = []
    history: list[Partition] = []
    if m.n <= 1:
        return Refinement(p, (), ())
    searches = []
    if "pre" in ops:
        searches.append(_pre_splitter)
    if "cpre" in ops:
        searches.append(lambda m_, p_: _cpre_splitter(m_, p_, exhaustive_cpre))
    if "EU" in ops:
        def guarded(m_, p_):
            if len(p_) > budget:
                raise BudgetExceeded(len(p_), budget)
            return _eu_splitter(m_, p_)
        searches.append(guarded)
    while len(p) < m.n:
        for search in searches:
            found = search(m, p)
            if found is not None:
                sp, pred = found
                log.append(sp)
                history.append(p)
                p = _apply(p, pred)
                break
        else:
            break
    return Refinement(p, tuple(log), tuple(history))


def certify(m: Mdp, relation: str, budget: int = DEFAULT_BUDGET) -> Refinement:
    try:
        ops = RELATIONS[relation]
    except KeyError:
        raise ValueError(f"unknown relation {relation!r}; expected one of {sorted(RELATIONS)}") from None
    return coarsest_stable(m, ops, budget)


def equiv(m: Mdp, relation: str, budget: int = DEFAULT_BUDGET) -> Partition:
    return certify(m, relation, budget).partition


def verify_certificates(m: Mdp, r: Refinement) -> bool:
    """Replay the log from the label partition, checking that every step really cuts."""
    p = initial_partition(m)
    for sp in r.log:
        pred = splitter_predicate(m, p, sp)
        cut = _cut_blocks(p, pred[None, :])[0]
        if not cut.any() or tuple(int(b) for b in np.flatnonzero(cut)) != sp.split:
            return False
        p = _apply(p, pred)
    return p == r.partition


def is_stable(m: Mdp, p: Partition, ops: Iterable[str]) -> bool:
    ops = set(ops)
    if "pre" in ops and _pre_splitter(m, p) is not None:
        return False
    if "cpre" in ops and _cpre_splitter(m, p, exhaustive=True) is not None:
        return False
    if "EU" in ops and _eu_splitter(m, p) is not None:
        return False
    return True


def quotient(m: Mdp, p: Partition) -> Mdp:
    """One state per block, named and labelled after its lowest-index member."""
    reps = [blk[0] for blk in p.members()]
    states = []
    for rep in reps:
        acts = {}
        for a, dist in zip(m.moves[rep], m.trans[rep]):
            summed: dict[str, object] = {}
            for t, prob in dist:
                key = m.names[reps[p.block_of[t]]]
                summed[key] = summed[key] + prob if key in summed else prob
            acts[a] = summed
        states.append((m.names[rep], sorted(m.labels[rep]), acts))
    return build(states, m.propositions)


def one_neighbourhood_isomorphic(m: Mdp, p: Partition, s: int, t: int) -> bool:
    """Whether some bijections between successors and between actions of ``s``
    and ``t`` respect ``p`` and preserve every transition probability."""
    if not p.same(s, t) or len(m.moves[s]) != len(m.moves[t]):
        return False
    es = sorted(frozenset().union(*m.supports(s)))
    et = sorted(frozenset().union(*m.supports(t)))
    if len(es) != len(et):
        return False
    ds = [dict(d) for d in m.trans[s]]
    dt = [dict(d) for d in m.trans[t]]
    for image in itertools.permutations(et):
        if not all(p.same(x, y) for x, y in zip(es, image)):
            continue
        r = dict(zip(es, image))
        mapped = [{r[x]: q for x, q in d.items()} for d in ds]
        for order in itertools.permutations(range(len(dt))):
            if all(mapped[i] == dt[j] for i, j in enumerate(order)):
                return True
    return False


@dataclass(frozen=True)
class NeighbourhoodReport:
    model: Mdp
    pos: Refinement
    local: Refinement
    eu_splits: int
    isomorphic_pairs: tuple[tuple[str, str], ...]
    witness: str
    witness_set: tuple[str, ...]

    @property
    def ok(self) -> bool:
        m = self.model
        i = m.index
        pos, local = self.pos.partition, self.local.partition
        return (self.eu_splits > 0
                and pos != local
                and pos.same(i["s1"], i["s2"])
                and not pos.same(i["s1"], i["s3"])
                and local.same(i["s1"], i["s3"])
                and ("s2", "s3") in self.isomorphic_pairs
                and ("s3", "s4") in self.isomorphic_pairs
                and ("s1" in self.witness_set) != ("s3" in self.witness_set))


def regression_1neighbourhood(m: Mdp | None = None) -> NeighbourhoodReport:
    """Show on the separation family that a purely local refinement is not enough.

    ``s2``, ``s3`` and ``s4`` have isomorphic 1-neighbourhoods with respect to
    the label partition, yet ``s1`` and ``s2`` are equivalent while ``s3`` is
    not; only the EU splitter notices.
    """
    from .models import separation_family
    m = m if m is not None else separation_family()
    labels = initial_partition(m)
    quad = ["s1", "s2", "s3", "s4"]
    iso = tuple((a, b) for a, b in itertools.combinations(quad, 2)
                if one_neighbourhood_isomorphic(m, labels, m.index[a], m.index[b]))
    witness = "Eas F r"
    pos = certify(m, "pos")
    return NeighbourhoodReport(
        model=m,
        pos=pos,
        local=certify(m, "simclo"),
        eu_splits=pos.count("EU"),
        isomorphic_pairs=iso,
        witness=witness,
        witness_set=tuple(m.names_of(check(m, witness))),
    )
