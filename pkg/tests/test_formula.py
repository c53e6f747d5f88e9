import random

import pytest
from hypothesis import given, settings, strategies as st

from qualmdp import formula as fm
from qualmdp.formula import (
    QRCTL, QRCTL_POS, QRCTL_STAR, QRCTL_SURE, NEXT_ONLY, Atom, Embed, FormulaSyntaxError,
    Next, Not, Quant, QUANTIFIERS, UnknownQuantifier, Until, WaitFor, classify, dual,
    dualize, is_qrctl, parse, show,
)
from qualmdp.models import random_formula

q, r = Atom("q"), Atom("r")


def test_parse_eventually():
    f = parse("Eas F r")
    assert f == Quant(QUANTIFIERS["Eas"], Until(Embed(fm.TRUE), Embed(r)))


def test_quantifier_scopes_over_until():
    assert parse("Epos q U r") == parse("Epos (q U r)")


def test_globally_is_wait_for_false():
    assert parse("Asure G q") == Quant(QUANTIFIERS["Asure"], WaitFor(Embed(q), Embed(fm.FALSE)))


def test_nested_quantifier():
    f = parse("Eas X (Epos X q)")
    assert f.path == Next(Embed(Quant(QUANTIFIERS["Epos"], Next(Embed(q)))))


def test_boolean_connectives():
    assert parse("q -> r") == fm.Implies(q, r)
    assert parse("!q & r") == fm.And(Not(q), r)
    assert parse("~q") == Not(q)


@pytest.mark.parametrize("alias, token", [("<1>", "Esure"), ("<1,p>", "Eex"), ("< 1 , p >", "Eex"),
                                          ("<p>", "Aex"), ("<0>", "Asure")])
def test_atl_aliases(alias, token):
    assert parse(f"{alias} X q") == parse(f"{token} X q")


def test_unknown_atl_alias():
    with pytest.raises(UnknownQuantifier):
        parse("<2> X q")


def test_unknown_quantifier_word():
    with pytest.raises(UnknownQuantifier) as err:
        parse("Emaybe (q U r)")
    assert err.value.position == 0


def test_error_position_unbalanced():
    with pytest.raises(FormulaSyntaxError) as err:
        parse("Eas (q U r")
    assert err.value.position == 10
    assert "')'" in str(err.value)


def test_error_position_bad_character():
    with pytest.raises(FormulaSyntaxError) as err:
        parse("q $ r")
    assert err.value.position == 2


def test_unquantified_temporal_operator_is_rejected():
    with pytest.raises(FormulaSyntaxError):
        parse("q U r")


@pytest.mark.parametrize("text, tags", [
    ("Eas F r", {QRCTL, QRCTL_STAR, QRCTL_POS}),
    ("Esure X q", {QRCTL, QRCTL_STAR, QRCTL_SURE, NEXT_ONLY}),
    ("Epos X q & Eex X r", {QRCTL, QRCTL_STAR, NEXT_ONLY}),
    ("Eas (F q & G Epos X q)", {QRCTL_STAR}),
    ("Eas F G q", {QRCTL_STAR}),
    ("q", {QRCTL, QRCTL_STAR, QRCTL_POS, QRCTL_SURE, NEXT_ONLY}),
])
def test_classify(text, tags):
    assert classify(parse(text)) == tags


def test_dual_quantifiers():
    assert dual(QUANTIFIERS["Asure"]) == QUANTIFIERS["Eex"]
    assert dual(QUANTIFIERS["Aas"]) == QUANTIFIERS["Epos"]
    assert dual(QUANTIFIERS["Apos"]) == QUANTIFIERS["Eas"]
    assert dual(QUANTIFIERS["Aex"]) == QUANTIFIERS["Esure"]


@pytest.mark.parametrize("text, expected", [
    ("Asure X q", "!Eex X !q"),
    ("Aas (q U r)", "!Epos (!r W !q)"),
    ("Apos (q W r)", "!Eas (!r U !q)"),
    ("Eas F r", "Eas F r"),
    ("!!q", "q"),
])
def test_dualize_examples(text, expected):
    assert dualize(parse(text)) == parse(expected)


def test_dualize_stays_existential_and_qrctl():
    rng = random.Random(0)
    for _ in range(200):
        g = dualize(random_formula(rng, ["q", "r"]))
        assert is_qrctl(g)
        assert all(quant.exists for quant in fm.quantifiers(g))


@pytest.mark.parametrize("text", [
    "Eas F r", "Asure (q W r)", "Eas (Epos X q)", "Eas X (Epos X q)", "!(q | r) & Eex X true",
    "Esure X (Epos X q & Epos X r)", "Eas (F q & G Epos X q)", "Epos (X q | q U r)",
])
def test_show_round_trip_examples(text):
    f = parse(text)
    assert parse(show(f)) == f


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_show_round_trip_random(seed):
    f = random_formula(random.Random(seed), ["q", "r", "turn"])
    assert parse(show(f)) == f


def test_size_and_propositions():
    f = parse("Eas (q U Epos X r)")
    assert fm.propositions(f) == {"q", "r"}
    assert sorted(x.token for x in fm.quantifiers(f)) == ["Eas", "Epos"]
    assert fm.size(f) >= 4
