import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings

from qualmdp.checker import check
from qualmdp.equivalence import (
    RELATIONS, BudgetExceeded, Partition, certify, coarsest_stable, equiv, eu_almost_set,
    initial_partition, is_stable, quotient, regression_1neighbourhood, verify_certificates,
)
from qualmdp.mdp import build
from qualmdp.models import apre_gap, corpus, random_amdp, separation_family

from conftest import names, small_mdps

ORDER = ["bisim", "simclo", "pos"]


def test_partition_basics():
    p = Partition(["a", "b", "a", "c"])
    assert len(p) == 3 and p.n == 4
    assert p.members() == [(0, 2), (1,), (3,)]
    assert p.same(0, 2) and not p.same(0, 1)
    assert p == Partition.from_blocks([[3], [1], [0, 2]], 4)
    assert Partition(range(4)).refines(p) and not p.refines(Partition(range(4)))
    assert p.union([0, 2]).tolist() == [True, False, True, True]


def test_initial_partition_groups_by_labels(m2):
    assert initial_partition(m2).named(m2) == [["s", "s'"], ["u"], ["v"]]


def test_eu_almost_set_examples():
    m = apre_gap()
    assert names(m, eu_almost_set(m, m.mask(["s", "t"]), m.mask(["g"]))) == {"s", "g"}
    assert names(m, eu_almost_set(m, m.mask([]), m.mask(["g"]))) == {"g"}
    assert names(m, eu_almost_set(m, np.ones(m.n, bool), m.mask(["h"]))) == {"h"}


def test_unknown_relation():
    with pytest.raises(ValueError):
        certify(apre_gap(), "trace")


def test_unknown_operator():
    with pytest.raises(ValueError):
        coarsest_stable(apre_gap(), ["post"])


def test_builtin_partitions():
    gap = apre_gap()
    assert equiv(gap, "simclo").named(gap) == [["g"], ["h"], ["s", "t"]]
    assert equiv(gap, "pos").named(gap) == [["g"], ["h"], ["s"], ["t"]]
    sep = separation_family()
    assert equiv(sep, "pos").named(sep) == [["g"], ["h"], ["s1", "s2"], ["s3", "s4"]]


def test_pos_merges_m2(m2):
    assert equiv(m2, "pos").same(0, 1)


def test_eu_certificate_is_logged():
    m = apre_gap()
    r = certify(m, "pos")
    assert r.count("EU") >= 1
    eu = next(sp for sp in r.log if sp.kind == "EU")
    before = r.history[r.log.index(eu)]
    assert eu.describe(m, before).startswith("EU(")
    assert verify_certificates(m, r)


def test_tampered_certificate_fails():
    m = apre_gap()
    r = certify(m, "pos")
    bad = type(r)(r.partition, r.log[:-1], r.history[:-1])
    assert not verify_certificates(m, bad)


def test_budget_exceeded():
    m = separation_family()
    with pytest.raises(BudgetExceeded) as err:
        certify(m, "pos", budget=2)
    assert err.value.blocks > 2
    assert equiv(m, "simclo", budget=0) == equiv(m, "simclo")


def test_single_state_model():
    m = build([("only", [], {"a": {"only": 1}})])
    for rel in RELATIONS:
        assert len(equiv(m, rel)) == 1


@settings(max_examples=60, deadline=None)
@given(small_mdps())
def test_relations_are_stable_and_ordered(m):
    parts = {rel: certify(m, rel) for rel in ORDER}
    for rel, r in parts.items():
        assert is_stable(m, r.partition, RELATIONS[rel])
        assert r.partition.refines(initial_partition(m))
        assert verify_certificates(m, r)
    assert parts["simclo"].partition.refines(parts["bisim"].partition)
    assert parts["pos"].partition.refines(parts["simclo"].partition)


@settings(max_examples=40, deadline=None)
@given(small_mdps())
def test_signature_cpre_matches_exhaustive(m):
    a = coarsest_stable(m, ["pre", "cpre"]).partition
    b = coarsest_stable(m, ["pre", "cpre"], exhaustive_cpre=True).partition
    assert a == b


def test_pos_classes_agree_on_pos_formulas():
    formulas = ["Eas F q", "Epos X r", "Eas (q U r)", "Epos (q W r)", "Aas G q", "Eas X (Epos F r)"]
    for _, m in corpus(count=60, max_states=6, seed=8, include_builtin=False):
        p = equiv(m, "pos")
        for f in formulas:
            sat = check(m, f)
            for blk in p.members():
                assert len({bool(sat[s]) for s in blk}) == 1


def test_amdp_pos_equals_simclo():
    rng = random.Random(3)
    for _ in range(30):
        m = random_amdp(rng, rng.randint(1, 3), rng.randint(1, 3))
        assert equiv(m, "pos") == equiv(m, "simclo")


def test_quotient_sums_probabilities():
    m = build([
        ("a", [], {"x": {"b": Fraction(1, 4), "c": Fraction(1, 4), "d": Fraction(1, 2)}}),
        ("b", ["q"], {"x": {"b": 1}}),
        ("c", ["q"], {"x": {"c": 1}}),
        ("d", [], {"x": {"d": 1}}),
    ], ["q"])
    p = equiv(m, "pos")
    qm = quotient(m, p)
    assert qm.names == ("a", "b", "d")
    assert qm.distribution(qm.index["a"], "x") == {qm.index["b"]: Fraction(1, 2), qm.index["d"]: Fraction(1, 2)}


@settings(max_examples=40, deadline=None)
@given(small_mdps())
def test_quotient_preserves_pos_verdicts(m):
    p = equiv(m, "pos")
    qm = quotient(m, p)
    reps = [blk[0] for blk in p.members()]
    for f in ("Eas F q", "Epos (q U r)", "Eas G r", "Esure X q"):
        assert check(m, f)[reps].tolist() == check(qm, f).tolist()


def test_regression_1neighbourhood():
    rep = regression_1neighbourhood()
    assert rep.ok
    assert set(rep.isomorphic_pairs) == {("s2", "s3"), ("s2", "s4"), ("s3", "s4")}
    assert rep.eu_splits >= 1


@pytest.mark.parametrize("p", [Fraction(1, 3), Fraction(1, 2), Fraction(3, 4)])
def test_separation_family_parameters(p):
    assert regression_1neighbourhood(separation_family(p)).ok
