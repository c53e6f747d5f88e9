"""QRCTL / QRCTL* syntax: AST, parser, canonical printer, fragments, dualities.

Concrete syntax::

    state := "true" | "false" | ident | "!" state | state ("&" | "|" | "->") state
           | quant "(" path ")" | quant path
    quant := Esure | Asure | Eas | Aas | Epos | Apos | Eex | Aex
           | <1> | <p> | <1,p> | <0>
    path  := state | "!" path | path ("&" | "|") path
           | "X" path | "F" path | "G" path | path "U" path | path "W" path

Precedence, tightest first: unary (``!``, ``X``, ``F``, ``G``, quantifiers),
``U``/``W`` (right associative), ``&``, ``|``, ``->``.

Only negation and disjunction are primitive; ``&``, ``->``, ``false``, ``F``
and ``G`` are desugared while parsing, and the four ATL quantifiers are
replaced by their QRCTL counterparts.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Union


class Mode(str, Enum):
    SURE = "sure"
    ALMOST = "almost"
    POS = "pos"
    NULLO = "nullo"


@dataclass(frozen=True)
class Quantifier:
    exists: bool
    mode: Mode

    @property
    def token(self) -> str:
        return ("E" if self.exists else "A") + _MODE_TOKEN[self.mode]

    def __str__(self) -> str:
        return self.token


_MODE_TOKEN = {Mode.SURE: "sure", Mode.ALMOST: "as", Mode.POS: "pos", Mode.NULLO: "ex"}

QUANTIFIERS = {
    (("E" if e else "A") + tok): Quantifier(e, mode)
    for mode, tok in _MODE_TOKEN.items() for e in (True, False)
}
ATL_ALIASES = {
    "<1>": QUANTIFIERS["Esure"],
    "<1,p>": QUANTIFIERS["Eex"],
    "<p>": QUANTIFIERS["Aex"],
    "<0>": QUANTIFIERS["Asure"],
}

# The dual of each quantifier under [[Q phi]] = [[not dual(Q) not phi]].
DUAL_MODE = {Mode.SURE: Mode.NULLO, Mode.NULLO: Mode.SURE,
             Mode.POS: Mode.ALMOST, Mode.ALMOST: Mode.POS}


def dual(q: Quantifier) -> Quantifier:
    return Quantifier(not q.exists, DUAL_MODE[q.mode])


# ---------------------------------------------------------------- state formulas

@dataclass(frozen=True)
class TrueF:
    pass


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Not:
    arg: "StateFormula"


@dataclass(frozen=True)
class Or:
    left: "StateFormula"
    right: "StateFormula"


@dataclass(frozen=True)
class Quant:
    quantifier: Quantifier
    path: "PathFormula"


StateFormula = Union[TrueF, Atom, Not, Or, Quant]

# ----------------------------------------------------------------- path formulas


@dataclass(frozen=True)
class Embed:
    state: StateFormula


@dataclass(frozen=True)
class PNot:
    arg: "PathFormula"


@dataclass(frozen=True)
class POr:
    left: "PathFormula"
    right: "PathFormula"


@dataclass(frozen=True)
class Next:
    arg: "PathFormula"


@dataclass(frozen=True)
class Until:
    left: "PathFormula"
    right: "PathFormula"


@dataclass(frozen=True)
class WaitFor:
    left: "PathFormula"
    right: "PathFormula"


PathFormula = Union[Embed, PNot, POr, Next, Until, WaitFor]

TRUE = TrueF()
FALSE = Not(TRUE)


def And(a: StateFormula, b: StateFormula) -> StateFormula:
    return Not(Or(Not(a), Not(b)))


def Implies(a: StateFormula, b: StateFormula) -> StateFormula:
    return Or(Not(a), b)


def Eventually(p: PathFormula) -> PathFormula:
    return Until(Embed(TRUE), p)


def Globally(p: PathFormula) -> PathFormula:
    return WaitFor(p, Embed(FALSE))


# ------------------------------------------------------------------------ errors

class FormulaSyntaxError(SyntaxError):
    def __init__(self, message: str, position: int, expected: str = ""):
        super().__init__(f"{message} at position {position}" + (f" (expected {expected})" if expected else ""))
        self.position = position
        self.expected = expected


class UnknownQuantifier(FormulaSyntaxError):
    pass


# ------------------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<atl><\s*1\s*,\s*p\s*>|<\s*1\s*>|<\s*p\s*>|<\s*0\s*>|<\s*[^>]*>)
  | (?P<op>->|[()!&|~])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
""", re.VERBOSE)

_KEYWORDS = {"true", "false", "X", "F", "G", "U", "W"}


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _lex(text: str) -> list[_Tok]:
    out, pos = [], 0
    while pos < len(text):
        mt = _TOKEN_RE.match(text, pos)
        if not mt:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = mt.lastgroup
        if kind == "atl":
            tok = re.sub(r"\s+", "", mt.group())
            if tok not in ATL_ALIASES:
                raise UnknownQuantifier(f"unknown quantifier {tok!r}", pos)
            out.append(_Tok("quant", tok, pos))
        elif kind == "ident":
            word = mt.group()
            if word in QUANTIFIERS:
                out.append(_Tok("quant", word, pos))
            elif word in _KEYWORDS:
                out.append(_Tok(word, word, pos))
            else:
                out.append(_Tok("ident", word, pos))
        elif kind == "op":
            out.append(_Tok("~" if mt.group() == "~" else mt.group(), mt.group(), pos))
        pos = mt.end()
    out.append(_Tok("eof", "", len(text)))
    return out


# ------------------------------------------------------------------------ parser
# The parser builds path formulas everywhere; combinators collapse
# temporal-free subtrees into embedded state formulas as they go.

class _Parser:
    def __init__(self, text: str):
        self.toks = _lex(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def take(self, kind: str, expected: str = "") -> _Tok:
        t = self.tok
        if t.kind != kind:
            where = "end of input" if t.kind == "eof" else repr(t.text)
            raise FormulaSyntaxError(f"unexpected {where}", t.pos, expected or repr(kind))
        self.i += 1
        return t

    def parse(self) -> PathFormula:
        f = self.implication()
        if self.tok.kind != "eof":
            raise FormulaSyntaxError(f"unexpected {self.tok.text!r}", self.tok.pos, "end of input")
        return f

    def implication(self) -> PathFormula:
        left = self.disjunction()
        if self.tok.kind == "->":
            self.i += 1
            right = self.implication()
            return _por(_pnot(left), right)
        return left

    def disjunction(self) -> PathFormula:
        left = self.conjunction()
        while self.tok.kind == "|":
            self.i += 1
            left = _por(left, self.conjunction())
        return left

    def conjunction(self) -> PathFormula:
        left = self.temporal()
        while self.tok.kind == "&":
            self.i += 1
            right = self.temporal()
            left = _pnot(_por(_pnot(left), _pnot(right)))
        return left

    def temporal(self) -> PathFormula:
        left = self.unary()
        if self.tok.kind in ("U", "W"):
            op = self.take(self.tok.kind)
            right = self.temporal()
            return Until(left, right) if op.kind == "U" else WaitFor(left, right)
        return left

    def unary(self) -> PathFormula:
        t = self.tok
        if t.kind in ("!", "~"):
            self.i += 1
            return _pnot(self.unary())
        if t.kind == "X":
            self.i += 1
            return Next(self.unary())
        if t.kind == "F":
            self.i += 1
            return Eventually(self.unary())
        if t.kind == "G":
            self.i += 1
            return Globally(self.unary())
        if t.kind == "quant":
            self.i += 1
            q = ATL_ALIASES.get(t.text) or QUANTIFIERS[t.text]
            # A quantifier scopes over a whole until/wait-for: "Eas q U r".
            body = self.temporal()
            return Embed(Quant(q, body))
        return self.atom()

    def atom(self) -> PathFormula:
        t = self.tok
        if t.kind == "(":
            self.i += 1
            f = self.implication()
            self.take(")", "')'")
            return f
        if t.kind == "true":
            self.i += 1
            return Embed(TRUE)
        if t.kind == "false":
            self.i += 1
            return Embed(FALSE)
        if t.kind == "ident":
            self.i += 1
            if self.tok.kind == "(":
                raise UnknownQuantifier(f"unknown quantifier {t.text!r}", t.pos)
            return Embed(Atom(t.text))
        where = "end of input" if t.kind == "eof" else repr(t.text)
        raise FormulaSyntaxError(f"unexpected {where}", t.pos, "a formula")


def _pnot(p: PathFormula) -> PathFormula:
    if isinstance(p, Embed):
        return Embed(Not(p.state))
    return PNot(p)


def _por(a: PathFormula, b: PathFormula) -> PathFormula:
    if isinstance(a, Embed) and isinstance(b, Embed):
        return Embed(Or(a.state, b.state))
    return POr(a, b)


def parse(text: str) -> StateFormula:
    """Parse a state formula."""
    f = _Parser(text).parse()
    if not isinstance(f, Embed):
        raise FormulaSyntaxError("temporal operator outside the scope of a path quantifier", 0)
    return f.state


def parse_path(text: str) -> PathFormula:
    return _Parser(text).parse()


# ----------------------------------------------------------------------- printer

def show(f: StateFormula | PathFormula) -> str:
    """Canonical concrete syntax; ``parse(show(f)) == f``."""
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, Atom):
        return f.name
    if f == FALSE:
        return "false"
    if isinstance(f, (Not, PNot)):
        g = f.arg
        if isinstance(g, (Or, POr)):
            a, b = _negand(g.left), _negand(g.right)
            if a is not None and b is not None:
                return f"({show(a)} & {show(b)})"
        return "!" + _show_arg(f.arg)
    if isinstance(f, (Or, POr)):
        return f"({show(f.left)} | {show(f.right)})"
    if isinstance(f, Quant):
        body = show(f.path)
        if isinstance(f.path, Embed) and isinstance(f.path.state, Quant):
            body = f"({body})"
        return f"{f.quantifier.token} {body}"
    if isinstance(f, Embed):
        return show(f.state)
    if isinstance(f, Next):
        return "X " + _show_arg(f.arg)
    if isinstance(f, Until) and f.left == Embed(TRUE):
        return "F " + _show_arg(f.right)
    if isinstance(f, WaitFor) and f.right == Embed(FALSE):
        return "G " + _show_arg(f.left)
    if isinstance(f, Until):
        return f"({_show_arg(f.left)} U {_show_arg(f.right)})"
    if isinstance(f, WaitFor):
        return f"({_show_arg(f.left)} W {_show_arg(f.right)})"
    raise TypeError(f"not a formula: {f!r}")


def _negand(f):
    """The operand of a (state or path) negation, or None."""
    if isinstance(f, (Not, PNot)):
        return f.arg
    if isinstance(f, Embed) and isinstance(f.state, Not):
        return f.state.arg
    return None


def _show_arg(f) -> str:
    if isinstance(f, Embed):
        f = f.state
    if isinstance(f, Quant):
        return f"({show(f)})"
    return show(f)


# ------------------------------------------------------------------ traversals

def subformulas(f) -> Iterator:
    """Post-order traversal of state and path nodes."""
    if isinstance(f, (Not, PNot, Next)):
        yield from subformulas(f.arg)
    elif isinstance(f, (Or, POr, Until, WaitFor)):
        yield from subformulas(f.left)
        yield from subformulas(f.right)
    elif isinstance(f, Quant):
        yield from subformulas(f.path)
    elif isinstance(f, Embed):
        yield from subformulas(f.state)
    yield f


def propositions(f) -> set[str]:
    return {g.name for g in subformulas(f) if isinstance(g, Atom)}


def quantifiers(f) -> list[Quantifier]:
    return [g.quantifier for g in subformulas(f) if isinstance(g, Quant)]


def size(f) -> int:
    return sum(1 for g in subformulas(f) if not isinstance(g, Embed))


# --------------------------------------------------------------------- fragments

QRCTL = "QRCTL"
QRCTL_STAR = "QRCTL*"
QRCTL_POS = "QRCTLpos"
QRCTL_SURE = "QRCTLsure"
NEXT_ONLY = "next-only"


def _is_qrctl_path(p: PathFormula) -> bool:
    if isinstance(p, Embed):
        return True
    if isinstance(p, Next):
        return isinstance(p.arg, Embed)
    if isinstance(p, (Until, WaitFor)):
        return isinstance(p.left, Embed) and isinstance(p.right, Embed)
    return False


def is_qrctl(f: StateFormula) -> bool:
    """Every temporal operator sits directly under a path quantifier."""
    return all(_is_qrctl_path(g.path) for g in subformulas(f) if isinstance(g, Quant))


def classify(f: StateFormula) -> set[str]:
    """Fragment tags of ``f``; the tags are not mutually exclusive.

    The pos and sure fragments are read up to the dualities, so ``Eas`` counts
    as pos-fragment and ``Eex`` as sure-fragment.
    """
    tags = {QRCTL_STAR}
    if not is_qrctl(f):
        return tags
    tags.add(QRCTL)
    modes = {q.mode for q in quantifiers(f)}
    if modes <= {Mode.POS, Mode.ALMOST}:
        tags.add(QRCTL_POS)
    if modes <= {Mode.SURE, Mode.NULLO}:
        tags.add(QRCTL_SURE)
    if not any(isinstance(g, (Until, WaitFor)) for g in subformulas(f)):
        tags.add(NEXT_ONLY)
    return tags


# ----------------------------------------------------------------------- duality

def negate_path(p: PathFormula) -> PathFormula:
    """Negation pushed through one temporal layer.

    Uses not X a = X not a, not (a U b) = not b W not a and
    not (a W b) = not b U not a.
    """
    if isinstance(p, Embed):
        return Embed(_neg(p.state))
    if isinstance(p, PNot):
        return p.arg
    if isinstance(p, Next):
        return Next(negate_path(p.arg))
    if isinstance(p, Until):
        return WaitFor(negate_path(p.right), negate_path(p.left))
    if isinstance(p, WaitFor):
        return Until(negate_path(p.right), negate_path(p.left))
    return PNot(p)


def _neg(f: StateFormula) -> StateFormula:
    return f.arg if isinstance(f, Not) else Not(f)


def _dual_path(p: PathFormula) -> PathFormula:
    if isinstance(p, Embed):
        return Embed(dualize(p.state))
    if isinstance(p, PNot):
        inner = _dual_path(p.arg)
        return negate_path(inner)
    if isinstance(p, POr):
        return POr(_dual_path(p.left), _dual_path(p.right))
    if isinstance(p, Next):
        return Next(_dual_path(p.arg))
    if isinstance(p, Until):
        return Until(_dual_path(p.left), _dual_path(p.right))
    if isinstance(p, WaitFor):
        return WaitFor(_dual_path(p.left), _dual_path(p.right))
    raise TypeError(p)


def dualize(f: StateFormula) -> StateFormula:
    """Rewrite every universal quantifier as a negated existential one.

    Path negations are pushed inward with the until/wait-for identities and
    double negations are removed, so a QRCTL input stays QRCTL.
    """
    if isinstance(f, (TrueF, Atom)):
        return f
    if isinstance(f, Not):
        inner = dualize(f.arg)
        return inner.arg if isinstance(inner, Not) else Not(inner)
    if isinstance(f, Or):
        return Or(dualize(f.left), dualize(f.right))
    if isinstance(f, Quant):
        path = _dual_path(f.path)
        q = f.quantifier
        if q.exists:
            return Quant(q, path)
        return Not(Quant(dual(q), negate_path(path)))
    raise TypeError(f"not a state formula: {f!r}")


def universalize(f: StateFormula) -> StateFormula:
    """The mirror of :func:`dualize`: existentials become negated universals."""
    if isinstance(f, (TrueF, Atom)):
        return f
    if isinstance(f, Not):
        inner = universalize(f.arg)
        return inner.arg if isinstance(inner, Not) else Not(inner)
    if isinstance(f, Or):
        return Or(universalize(f.left), universalize(f.right))
    if isinstance(f, Quant):
        path = _map_states(f.path, universalize)
        q = f.quantifier
        if not q.exists:
            return Quant(q, path)
        return Not(Quant(dual(q), negate_path(path)))
    raise TypeError(f"not a state formula: {f!r}")


def _map_states(p: PathFormula, fn) -> PathFormula:
    if isinstance(p, Embed):
        return Embed(fn(p.state))
    if isinstance(p, PNot):
        return PNot(_map_states(p.arg, fn))
    if isinstance(p, Next):
        return Next(_map_states(p.arg, fn))
    if isinstance(p, (POr, Until, WaitFor)):
        return type(p)(_map_states(p.left, fn), _map_states(p.right, fn))
    raise TypeError(p)
