"""Built-in example models, random generators and scaling families."""
from __future__ import annotations

import random
from fractions import Fraction
from typing import Iterator, Sequence

from . import formula as fm
from .mdp import Mdp, TURN, build

HALF = Fraction(1, 2)


def example_chain() -> Mdp:
    """Two-state chain: ``s`` (q) flips a fair coin between itself and the r-sink ``t``."""
    return build([
        ("s", ["q"], {"a": {"s": HALF, "t": HALF}}),
        ("t", ["r"], {"a": {"t": 1}}),
    ], ["q", "r"])


def convex_choice() -> Mdp:
    """``s`` and ``s'`` choose between the q-sink and the r-sink; ``s'`` may also mix them."""
    return build([
        ("s", [], {"a": {"u": 1}, "b": {"v": 1}}),
        ("s'", [], {"a": {"u": 1}, "b": {"v": 1}, "c": {"u": HALF, "v": HALF}}),
        ("u", ["q"], {"a": {"u": 1}}),
        ("v", ["r"], {"a": {"v": 1}}),
    ], ["q", "r"])


def apre_gap(p: Fraction = HALF) -> Mdp:
    """``s`` and ``t`` agree on every next-step ATL property, but only ``s``
    reaches q almost surely: its action ``a`` stays safe and makes progress at
    once, while ``t`` must pick between staying put and risking the trap ``h``."""
    return build([
        ("s", [], {"a": {"s": 1 - p, "g": p}, "b": {"s": 1}, "d": {"g": p, "h": 1 - p}}),
        ("t", [], {"b": {"t": 1}, "d": {"g": p, "h": 1 - p}}),
        ("g", ["q"], {"a": {"g": 1}}),
        ("h", [], {"a": {"h": 1}}),
    ], ["q"])


def separation_family(p: Fraction = HALF) -> Mdp:
    """Four look-alike states over an r-sink ``g`` and a trap ``h``.

    ``s2``, ``s3`` and ``s4`` have isomorphic one-step neighbourhoods; ``s1``
    and ``s2`` reach r almost surely (``s2`` by moving to ``s1``), ``s3`` and
    ``s4`` do not.
    """
    risky = {"g": p, "h": 1 - p}
    return build([
        ("s1", [], {"a": {"s1": 1 - p, "g": p}, "b": {"s1": 1}, "d": dict(risky)}),
        ("s2", [], {"b": {"s1": 1}, "d": dict(risky)}),
        ("s3", [], {"b": {"s3": 1}, "d": dict(risky)}),
        ("s4", [], {"b": {"s3": 1}, "d": dict(risky)}),
        ("g", ["r"], {"a": {"g": 1}}),
        ("h", ["p"], {"a": {"h": 1}}),
    ], ["p", "r"])


def chain_family(n: int) -> Mdp:
    """Chain ``0 -> 1 -> ... -> n-1`` where each step falls back to ``0`` with
    probability 1/2.  Every state is labelled q and the last one also r."""
    states = []
    for i in range(n):
        nxt = min(i + 1, n - 1)
        dist = {str(nxt): HALF, "0": HALF} if nxt != 0 else {"0": 1}
        states.append((str(i), ["q", "r"] if i == n - 1 else ["q"], {"a": dist}))
    return build(states, ["q", "r"])


def _distribution(rng: random.Random, targets: Sequence[str]) -> dict[str, Fraction]:
    weights = [rng.randint(1, 4) for _ in targets]
    total = sum(weights)
    return {t: Fraction(w, total) for t, w in zip(targets, weights)}


def random_mdp(rng: random.Random, n_states: int, n_actions: int = 3,
               propositions: Sequence[str] = ("q", "r"), max_support: int = 3) -> Mdp:
    names = [f"s{i}" for i in range(n_states)]
    acts = "abc"[:n_actions]
    states = []
    for name in names:
        labels = [p for p in propositions if rng.random() < 0.5]
        k = rng.randint(1, n_actions)
        actions = {}
        for a in sorted(rng.sample(acts, k)):
            support = rng.sample(names, rng.randint(1, min(max_support, n_states)))
            actions[a] = _distribution(rng, sorted(support))
        states.append((name, labels, actions))
    return build(states, propositions)


def random_amdp(rng: random.Random, n_player1: int, n_random: int,
                propositions: Sequence[str] = ("q", "r"), max_support: int = 3) -> Mdp:
    """Random alternating MDP: player-1 states carry ``turn`` and only have
    deterministic actions; the others have a single randomized action."""
    p1 = [f"c{i}" for i in range(n_player1)]
    pp = [f"p{i}" for i in range(n_random)]
    names = p1 + pp
    states = []
    for name in p1:
        labels = [p for p in propositions if rng.random() < 0.5] + [TURN]
        targets = rng.sample(names, rng.randint(1, min(3, len(names))))
        states.append((name, labels, {a: {t: 1} for a, t in zip("abc", sorted(targets))}))
    for name in pp:
        labels = [p for p in propositions if rng.random() < 0.5]
        support = rng.sample(names, rng.randint(1, min(max_support, len(names))))
        states.append((name, labels, {"a": _distribution(rng, sorted(support))}))
    return build(states, list(propositions) + [TURN])


def random_formula(rng: random.Random, propositions: Sequence[str], depth: int = 3) -> fm.StateFormula:
    """Random QRCTL state formula over ``propositions`` using all eight quantifiers."""
    if depth <= 0 or rng.random() < 0.2:
        choice = rng.randrange(len(propositions) + 1)
        return fm.TRUE if choice == len(propositions) else fm.Atom(propositions[choice])
    kind = rng.choice(("not", "or", "and", "quant", "quant", "quant"))
    sub = lambda: random_formula(rng, propositions, depth - 1)  # noqa: E731
    if kind == "not":
        return fm.Not(sub())
    if kind == "or":
        return fm.Or(sub(), sub())
    if kind == "and":
        return fm.And(sub(), sub())
    q = rng.choice(sorted(fm.QUANTIFIERS.values(), key=str))
    op = rng.choice("XUW")
    if op == "X":
        return fm.Quant(q, fm.Next(fm.Embed(sub())))
    node = fm.Until if op == "U" else fm.WaitFor
    return fm.Quant(q, node(fm.Embed(sub()), fm.Embed(sub())))


def builtin_models() -> dict[str, Mdp]:
    return {
        "example_chain": example_chain(),
        "convex_choice": convex_choice(),
        "apre_gap": apre_gap(),
        "separation_family": separation_family(),
    }


def corpus(count: int = 200, max_states: int = 8, seed: int = 0,
           include_builtin: bool = True) -> Iterator[tuple[str, Mdp]]:
    """Built-in models of at most ``max_states`` states followed by ``count`` seeded random ones."""
    if include_builtin:
        for name, m in builtin_models().items():
            if m.n <= max_states:
                yield name, m
    rng = random.Random(seed)
    for i in range(count):
        n = rng.randint(1, max_states)
        yield f"random-{seed}-{i}", random_mdp(rng, n, n_actions=rng.randint(1, 3))
