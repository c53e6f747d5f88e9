import random
from fractions import Fraction

import numpy as np
import pytest

from qualmdp.checker import check
from qualmdp.equivalence import equiv
from qualmdp.formula import QUANTIFIERS
from qualmdp.mdp import build
from qualmdp.models import apre_gap, convex_choice, corpus, example_chain, random_mdp
from qualmdp.oracle import (
    ONE, POSITIVE, ZERO, BoundExceeded, chain_reach_prob, enumerate_distinguishers, induced_chain,
    oracle_check, perturb, qualitative_verdict, reach_classes, strategies, strategy_count,
)


def test_strategy_enumeration(m2):
    assert strategy_count(m2) == 2 * 3
    sigmas = list(strategies(m2))
    assert len(sigmas) == 6 and len(set(sigmas)) == 6
    with pytest.raises(BoundExceeded):
        list(strategies(m2, max_strategies=5))


def test_induced_chain_is_markov(m2):
    for sigma in strategies(m2):
        assert induced_chain(m2, sigma).is_markov_chain()


def test_reach_probability_on_m1(m1):
    chain = induced_chain(m1, next(strategies(m1)))
    t = m1.mask(["t"])
    assert np.allclose(chain_reach_prob(chain, t), [1.0, 1.0])
    assert reach_classes(chain, t).tolist() == [ONE, ONE]
    assert reach_classes(chain, m1.mask(["s"])).tolist() == [ONE, ZERO]


def test_reach_with_avoid_set():
    m = build([("a", [], {"x": {"b": Fraction(1, 3), "c": Fraction(2, 3)}}),
               ("b", ["r"], {"x": {"b": 1}}), ("c", [], {"x": {"c": 1}})], ["r"])
    chain = induced_chain(m, next(strategies(m)))
    probs = chain_reach_prob(chain, m.mask(["b"]), avoid=m.mask(["c"]))
    assert probs[0] == pytest.approx(1 / 3)
    assert reach_classes(chain, m.mask(["b"]), m.mask(["c"]))[0] == POSITIVE


def test_verdict_on_m1(m1):
    S = np.ones(2, bool)
    v = qualitative_verdict(m1, "U", S, m1.mask(["t"]))
    assert v.strategies == 1
    assert v.holds(QUANTIFIERS["Eas"]).tolist() == [True, True]
    assert v.holds(QUANTIFIERS["Asure"]).tolist() == [False, True]


def test_oracle_bounds():
    m = random_mdp(random.Random(0), 9)
    with pytest.raises(BoundExceeded):
        qualitative_verdict(m, "X", np.ones(9, bool))


def test_unknown_operator(m1):
    with pytest.raises(ValueError):
        qualitative_verdict(m1, "R", np.ones(2, bool), np.ones(2, bool))


def test_oracle_check_matches_checker():
    from qualmdp.models import random_formula
    for i, (_, m) in enumerate(corpus(count=40, max_states=4, seed=21, include_builtin=False)):
        rng = random.Random(i)
        for _ in range(5):
            f = random_formula(rng, ["q", "r"])
            assert np.array_equal(oracle_check(m, f), check(m, f))


def test_oracle_check_rejects_path_formulas(m1):
    with pytest.raises(ValueError):
        oracle_check(m1, "Eas (F q & G r)")


@pytest.mark.parametrize("fragment, relation", [("pos", "pos"), ("sure", "sure"),
                                                 ("pos_next", "pos_next"), ("bisim", "bisim")])
def test_distinguishers_match_equivalences(fragment, relation):
    for _, m in corpus(count=30, max_states=4, seed=22):
        d3 = enumerate_distinguishers(m, fragment, 3)
        if d3 == enumerate_distinguishers(m, fragment, 4):
            assert d3 == equiv(m, relation)


def test_distinguishers_on_examples():
    gap = apre_gap()
    assert enumerate_distinguishers(gap, "pos").named(gap) == [["g"], ["h"], ["s"], ["t"]]
    assert enumerate_distinguishers(gap, "pos_next").named(gap) == [["g"], ["h"], ["s", "t"]]
    m2 = convex_choice()
    assert enumerate_distinguishers(m2, "pos").same(0, 1)


def test_distinguisher_bounds():
    with pytest.raises(BoundExceeded):
        enumerate_distinguishers(random_mdp(random.Random(1), 7), max_states=6)
    with pytest.raises(ValueError):
        enumerate_distinguishers(example_chain(), "ltl")


def test_perturb_keeps_supports():
    rng = random.Random(5)
    for _, m in corpus(count=20, max_states=6, seed=23):
        pm = perturb(m, rng)
        assert pm.names == m.names
        for s in range(m.n):
            assert pm.supports(s) == m.supports(s)
            for dist in pm.trans[s]:
                assert sum(p for _, p in dist) == pytest.approx(1.0)
