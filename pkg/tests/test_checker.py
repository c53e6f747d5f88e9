import random

import numpy as np
import pytest
from hypothesis import given, settings

from qualmdp import formula as fm
from qualmdp.checker import (
    NotAlternating, NotQrctl, check, check_atl, check_names, eval_f_apre, ex_next, ex_until,
    ex_wait, with_label,
)
from qualmdp.fixpoint import apre, cpre, pre
from qualmdp.formula import Mode
from qualmdp.mdp import UndeclaredProposition, alternate
from qualmdp.models import apre_gap, corpus, random_amdp

from conftest import mdp_and_sets, names


@pytest.mark.parametrize("text, expected", [
    ("Eas F r", {"s", "t"}),
    ("Asure F r", {"t"}),
    ("Asure F q", {"s"}),
    ("Epos F r", {"s", "t"}),
    ("Esure F r", {"t"}),
    ("Aas G q", set()),
    ("Epos G q", set()),
    ("Eex G q", {"s"}),
    ("Apos X r", {"s", "t"}),
    ("q & !r", {"s"}),
])
def test_m1_verdicts(m1, text, expected):
    assert set(check_names(m1, text)) == expected


def test_operator_examples(m1):
    S, t = np.ones(2, bool), m1.mask(["t"])
    assert names(m1, ex_next(Mode.POS, m1, t)) == {"s", "t"}
    assert names(m1, ex_next(Mode.SURE, m1, t)) == {"t"}
    assert names(m1, ex_until(Mode.ALMOST, m1, S, t)) == {"s", "t"}
    assert names(m1, ex_until(Mode.SURE, m1, S, t)) == {"t"}
    assert names(m1, ex_wait(Mode.SURE, m1, m1.mask(["s"]), ~S)) == set()
    for mode in Mode:
        assert ex_wait(mode, m1, S, ~S).all()


@settings(max_examples=100, deadline=None)
@given(mdp_and_sets(k=2))
def test_collapsing_mode_identities(args):
    m, Q, R = args
    assert np.array_equal(ex_next(Mode.ALMOST, m, Q), ex_next(Mode.SURE, m, Q))
    assert np.array_equal(ex_next(Mode.POS, m, Q), ex_next(Mode.NULLO, m, Q))
    assert np.array_equal(ex_until(Mode.POS, m, Q, R), ex_until(Mode.NULLO, m, Q, R))
    assert np.array_equal(ex_wait(Mode.ALMOST, m, Q, R), ex_wait(Mode.SURE, m, Q, R))


@settings(max_examples=100, deadline=None)
@given(mdp_and_sets(k=2))
def test_mode_strength_ordering(args):
    m, Q, R = args
    for ex in (ex_next, ex_until, ex_wait):
        sure, almost, pos, nullo = (ex(mode, m, Q, R) if ex is not ex_next else ex(mode, m, R)
                                    for mode in (Mode.SURE, Mode.ALMOST, Mode.POS, Mode.NULLO))
        assert not (sure & ~almost).any()
        assert not (almost & ~pos).any()
        assert not (pos & ~nullo).any()


def test_pos_wait_as_until():
    for _, m in corpus(count=60, max_states=7, seed=4, include_builtin=False):
        lhs = check(m, "Epos (q W r)")
        rhs = check(m, "<1,p> (q U ((q & r) | <1> G q))")
        assert np.array_equal(lhs, rhs)


def test_atl_aliases_agree():
    for _, m in corpus(count=40, max_states=6, seed=5, include_builtin=False):
        a = check_atl(m, "<1,p> (q U r)")
        assert np.array_equal(a, check(m, "Eex (q U r)"))
        assert np.array_equal(a, check(m, "Epos (q U r)"))


def test_f_apre_matches_apre_on_amdps():
    rng = random.Random(2)
    for _ in range(60):
        m = random_amdp(rng, rng.randint(1, 3), rng.randint(1, 3))
        for _ in range(5):
            phi = np.array([rng.random() < 0.5 for _ in range(m.n)])
            psi = np.array([rng.random() < 0.5 for _ in range(m.n)])
            assert np.array_equal(eval_f_apre(m, phi, psi), apre(m, phi, psi))


def test_f_apre_diverges_on_a_non_alternating_model():
    m = apre_gap()
    phi = m.mask(["s", "t", "g"])
    psi = m.mask(["g"])
    with pytest.raises(NotAlternating):
        eval_f_apre(m, phi, psi)
    assert not np.array_equal(eval_f_apre(m, phi, psi, require_alternating=False), apre(m, phi, psi))


def test_f_apre_on_alternated_model(m2):
    alt, _ = alternate(m2)
    phi = alt.mask(["u", "v", "<u,a>", "<v,a>"])
    assert np.array_equal(eval_f_apre(alt, phi, alt.mask(["u"])), apre(alt, phi, alt.mask(["u"])))


def test_qrctl_star_is_rejected(m1):
    with pytest.raises(NotQrctl):
        check(m1, "Eas (F q & G r)")


def test_undeclared_proposition(m1):
    with pytest.raises(UndeclaredProposition):
        check(m1, "Eas F z")


def test_env_binds_pseudo_atoms(m1):
    assert names(m1, check(m1, "Esure X __x", env={"__x": m1.mask(["t"])})) == {"t"}
    with pytest.raises(ValueError):
        check(m1, "q", env={"q": m1.mask(["t"])})


def test_env_accepts_batches(m1):
    batch = np.array([[True, False], [False, True]])
    assert check(m1, "Epos X __x", env={"__x": batch}).tolist() == [[True, False], [True, True]]


def test_trace_lists_subformulas(m1):
    trace = []
    check(m1, "Eas F (q & Epos X r)", trace=trace)
    shown = [sub for sub, _ in trace]
    assert shown[-1] == fm.show(fm.parse("Eas F (q & Epos X r)"))
    assert "Epos X r" in shown


def test_with_label(m1):
    m = with_label(m1, "p", "Epos X r")
    assert names(m, m.prop_set("p")) == {"s", "t"}
    with pytest.raises(ValueError):
        with_label(m1, "q", "true")


@settings(max_examples=50, deadline=None)
@given(mdp_and_sets(k=1))
def test_sure_next_is_cpre(args):
    m, Q = args
    assert np.array_equal(check(m, "Esure X __q", env={"__q": Q}), cpre(m, Q))
    assert np.array_equal(check(m, "Eex X __q", env={"__q": Q}), pre(m, Q))
