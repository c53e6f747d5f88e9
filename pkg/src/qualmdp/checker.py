"""Bottom-up QRCTL model checking.

Universal quantifiers are removed by :func:`qualmdp.formula.dualize`; each
existential temporal step is then one of the fixpoint schemata below, applied
to the already-evaluated operand sets.

Wait-for is read inclusively: ``q W r`` holds when ``q`` holds forever, or
``r`` occurs at some position where ``q`` also still holds.  This is the
reading under which ``not (q U r) == not r W not q``.  The wait-for schemata
therefore take ``q & r`` as their target set.
"""
from __future__ import annotations

from typing import Mapping, Optional

import numpy as np

from . import formula as fm
from .fixpoint import StateSet, apre, cpre, gfp, lfp, pre
from .formula import Mode
from .mdp import Mdp, UndeclaredProposition, build, check_alternating


class NotQrctl(ValueError):
    """The formula nests temporal operators under a single quantifier."""


class NotAlternating(ValueError):
    pass


def ex_next(mode: Mode, m: Mdp, Q: StateSet) -> StateSet:
    if mode in (Mode.SURE, Mode.ALMOST):
        return cpre(m, Q)
    return pre(m, Q)


def ex_until(mode: Mode, m: Mdp, Q: StateSet, R: StateSet) -> StateSet:
    shape = np.broadcast_shapes(Q.shape, R.shape)
    if mode == Mode.SURE:
        return lfp(lambda X: R | (Q & cpre(m, X)), m, shape)
    if mode in (Mode.POS, Mode.NULLO):
        return lfp(lambda X: R | (Q & pre(m, X)), m, shape)
    # nu Y. mu X. R | (Q & apre(Y, X)); the inner fixpoint restarts from empty.
    return gfp(lambda Y: lfp(lambda X: R | (Q & apre(m, Y, X)), m, shape), m, shape)


def ex_wait(mode: Mode, m: Mdp, Q: StateSet, R: StateSet) -> StateSet:
    shape = np.broadcast_shapes(Q.shape, R.shape)
    target = Q & R
    if mode in (Mode.SURE, Mode.ALMOST):
        return gfp(lambda Y: target | (Q & cpre(m, Y)), m, shape)
    if mode == Mode.NULLO:
        return gfp(lambda Y: target | (Q & pre(m, Y)), m, shape)
    stay = gfp(lambda Y: Q & cpre(m, Y), m, shape)
    return ex_until(Mode.POS, m, Q, target | stay)


def eu_almost(m: Mdp, C1: StateSet, C2: StateSet) -> StateSet:
    """States that reach ``C2`` through ``C1`` with probability one under some strategy."""
    return ex_until(Mode.ALMOST, m, C1, C2)


class _Evaluator:
    def __init__(self, m: Mdp, env: Mapping[str, StateSet], trace: Optional[list]):
        self.m = m
        self.env = env
        self.trace = trace
        self.memo: dict = {}

    def state(self, f) -> StateSet:
        hit = self.memo.get(f)
        if hit is not None:
            return hit
        m = self.m
        if isinstance(f, fm.TrueF):
            out = np.ones(m.n, dtype=bool)
        elif isinstance(f, fm.Atom):
            if f.name in self.env:
                out = np.asarray(self.env[f.name], dtype=bool)
            else:
                out = m.prop_set(f.name)
        elif isinstance(f, fm.Not):
            out = ~self.state(f.arg)
        elif isinstance(f, fm.Or):
            out = self.state(f.left) | self.state(f.right)
        elif isinstance(f, fm.Quant):
            out = self.quant(f.quantifier, f.path)
        else:
            raise TypeError(f"not a state formula: {f!r}")
        self.memo[f] = out
        if self.trace is not None and not isinstance(f, (fm.TrueF, fm.Atom)):
            self.trace.append((fm.show(f), out))
        return out

    def quant(self, q: fm.Quantifier, p) -> StateSet:
        assert q.exists, "universal quantifiers are dualized away before evaluation"
        if isinstance(p, fm.Embed):
            return self.state(p.state)
        if isinstance(p, fm.Next):
            return ex_next(q.mode, self.m, self.state(p.arg.state))
        if isinstance(p, fm.Until):
            return ex_until(q.mode, self.m, self.state(p.left.state), self.state(p.right.state))
        if isinstance(p, fm.WaitFor):
            return ex_wait(q.mode, self.m, self.state(p.left.state), self.state(p.right.state))
        raise NotQrctl(fm.show(p))


def _prepare(f) -> fm.StateFormula:
    if isinstance(f, str):
        f = fm.parse(f)
    g = fm.dualize(f)
    if not fm.is_qrctl(g):
        raise NotQrctl(f"not a QRCTL formula: {fm.show(f)}")
    return g


def check(m: Mdp, f, env: Mapping[str, StateSet] | None = None,
          trace: list | None = None) -> StateSet:
    """The set of states of ``m`` satisfying the QRCTL formula ``f``.

    ``env`` binds extra proposition names to precomputed state sets (used for
    pseudo-atoms standing for already-evaluated subformulas).  When ``trace``
    is a list, ``(subformula, set)`` pairs are appended innermost first.
    """
    env = dict(env or {})
    for name in env:
        if name in m.propositions:
            raise ValueError(f"pseudo-atom {name!r} shadows a model proposition")
    g = _prepare(f)
    for p in sorted(fm.propositions(g)):
        if p not in env and p not in m.propositions:
            raise UndeclaredProposition(p)
    return _Evaluator(m, env, trace).state(g)


def check_names(m: Mdp, f, **kw) -> list[str]:
    return m.names_of(check(m, f, **kw))


def check_atl(m: Mdp, f) -> StateSet:
    """Checking with ATL quantifiers; the parser already maps them onto QRCTL ones."""
    return check(m, f)


def f_apre_formula(phi: fm.StateFormula, psi: fm.StateFormula) -> fm.StateFormula:
    """(<1> X (phi & psi)) | (<0> X phi & <p> X psi)."""
    one, none, prob = fm.ATL_ALIASES["<1>"], fm.ATL_ALIASES["<0>"], fm.ATL_ALIASES["<p>"]
    return fm.Or(
        fm.Quant(one, fm.Next(fm.Embed(fm.And(phi, psi)))),
        fm.And(fm.Quant(none, fm.Next(fm.Embed(phi))), fm.Quant(prob, fm.Next(fm.Embed(psi)))),
    )


def eval_f_apre(m: Mdp, Phi: StateSet, Psi: StateSet, require_alternating: bool = True) -> StateSet:
    """Evaluate the ATL encoding of ``apre(Phi, Psi)``; exact on alternating MDPs only."""
    if require_alternating and not check_alternating(m):
        raise NotAlternating("the apre encoding is only valid on alternating MDPs")
    f = f_apre_formula(fm.Atom("__phi"), fm.Atom("__psi"))
    return check(m, f, env={"__phi": Phi, "__psi": Psi})


def with_label(m: Mdp, prop: str, f) -> Mdp:
    """A copy of ``m`` with the fresh proposition ``prop`` marking the states satisfying ``f``."""
    if prop in m.propositions:
        raise ValueError(f"proposition {prop!r} already exists")
    sat = check(m, f)
    states = [(m.names[s], sorted(m.labels[s] | ({prop} if sat[s] else set())),
               {a: {m.names[t]: p for t, p in dist} for a, dist in zip(m.moves[s], m.trans[s])})
              for s in range(m.n)]
    return build(states, m.propositions + (prop,))
