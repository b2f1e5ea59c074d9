"""Fundamental-equation expressions: parsing, printing and exact differentiation.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := atom ('^' atom)?
    atom   := number | ident | '(' expr ')' | ('ln'|'exp') '(' expr ')' | '-' atom

Derivatives are exact: evaluation runs on truncated Taylor jets (see
:mod:`gtd.jet`), so no step size is involved.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

from .errors import DomainError, ParseError, UndeclaredIdentifierError
from .jet import MAX_ORDER, Jet

FUNCTIONS = ("ln", "exp")


# ---------------------------------------------------------------------------
# Tree nodes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Par:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Par, Neg, BinOp, Pow, Call]


def _fold(node: Node) -> Node:
    """Constant folding for a freshly built node whose children are folded."""
    try:
        if isinstance(node, Neg) and isinstance(node.arg, Num):
            return Num(-node.arg.value)
        if isinstance(node, BinOp) and isinstance(node.left, Num) and isinstance(node.right, Num):
            x, y = node.left.value, node.right.value
            if node.op == "+":
                return Num(x + y)
            if node.op == "-":
                return Num(x - y)
            if node.op == "*":
                return Num(x * y)
            if y != 0.0:
                return Num(x / y)
        if isinstance(node, Pow) and isinstance(node.base, Num) and isinstance(node.exponent, Num):
            x, p = node.base.value, node.exponent.value
            if x > 0 or (float(p).is_integer() and (x != 0 or p >= 0)):
                return Num(float(x**p))
        if isinstance(node, Call) and isinstance(node.arg, Num):
            if node.func == "exp":
                return Num(math.exp(node.arg.value))
            if node.arg.value > 0:
                return Num(math.log(node.arg.value))
    except OverflowError:
        pass
    return node


# ---------------------------------------------------------------------------
# Canonical printer
# ---------------------------------------------------------------------------


def to_source(node: Node) -> str:
    """Canonical text form; ``parse(to_source(e))`` rebuilds the same tree."""
    if isinstance(node, Num):
        text = repr(float(node.value))
        return f"({text})" if node.value < 0 or text.startswith("-") else text
    if isinstance(node, (Var, Par)):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if isinstance(node, Neg):
        return f"(-{_atom(node.arg)})"
    if isinstance(node, Pow):
        return f"{_atom(node.base)} ^ {_atom(node.exponent)}"
    return f"{_operand(node.left)} {node.op} {_operand(node.right)}"


def _atom(node: Node) -> str:
    text = to_source(node)
    return f"({text})" if isinstance(node, (BinOp, Pow)) else text


def _operand(node: Node) -> str:
    text = to_source(node)
    return f"({text})" if isinstance(node, BinOp) else text


# ---------------------------------------------------------------------------
# Lexer and recursive-descent parser
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(source: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "ws":
            for i, ch in enumerate(m.group(), start=pos):
                if ch == "\n":
                    line += 1
                    line_start = i + 1
        else:
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("end", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, source, variables, parameters):
        self.toks = _tokenize(source)
        self.i = 0
        self.variables = None if variables is None else tuple(variables)
        self.parameters = tuple(parameters)
        self.seen_vars: list[str] = []

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def take(self, text=None):
        tok = self.tok
        if text is not None and tok.text != text:
            self.error(f"expected {text!r}, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            self.error(f"unexpected {self.tok.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.tok.text in ("+", "-"):
            op = self.take().text
            node = _fold(BinOp(op, node, self.term()))
        return node

    def term(self):
        node = self.factor()
        while self.tok.text in ("*", "/"):
            op = self.take().text
            node = _fold(BinOp(op, node, self.factor()))
        return node

    def factor(self):
        node = self.atom()
        if self.tok.text == "^":
            self.take()
            node = _fold(Pow(node, self.atom()))
        return node

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.take()
            return Num(float(tok.text))
        if tok.text == "-":
            self.take()
            return _fold(Neg(self.atom()))
        if tok.text == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        if tok.kind == "ident":
            self.take()
            if self.tok.text == "(":
                if tok.text not in FUNCTIONS:
                    self.error(f"unknown function {tok.text!r}", tok)
                self.take()
                arg = self.expr()
                self.take(")")
                return _fold(Call(tok.text, arg))
            if tok.text in FUNCTIONS:
                self.error(f"function {tok.text!r} requires an argument", tok)
            return self.identifier(tok)
        self.error(f"unexpected {tok.text or 'end of input'!r}")

    def identifier(self, tok):
        name = tok.text
        if name in self.parameters:
            return Par(name)
        if self.variables is None:
            if name not in self.seen_vars:
                self.seen_vars.append(name)
            return Var(name)
        if name in self.variables:
            return Var(name)
        raise UndeclaredIdentifierError(f"undeclared identifier {name!r}", tok.line, tok.col)


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Expression:
    """Immutable expression tree with declared variables and parameters."""

    root: Node
    variables: tuple[str, ...]
    parameters: tuple[str, ...] = ()

    def __str__(self):
        return to_source(self.root)

    def free_names(self) -> tuple[set[str], set[str]]:
        """Variables and parameters actually referenced in the tree."""
        vs, ps = set(), set()
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Var):
                vs.add(node.name)
            elif isinstance(node, Par):
                ps.add(node.name)
            elif isinstance(node, Neg):
                stack.append(node.arg)
            elif isinstance(node, Call):
                stack.append(node.arg)
            elif isinstance(node, BinOp):
                stack += [node.left, node.right]
            elif isinstance(node, Pow):
                stack += [node.base, node.exponent]
        return vs, ps

    @property
    def is_constant(self) -> bool:
        return isinstance(self.root, Num)

    def substitute(self, env: Mapping[str, object], params: Mapping[str, float] | None = None):
        """Evaluate with arbitrary jets or floats bound to variable names."""
        return _eval(self.root, env, dict(params or {}))

    def __call__(self, params: Mapping[str, float] | None = None, **values: float) -> float:
        out = _eval(self.root, values, dict(params or {}))
        return out.value if isinstance(out, Jet) else float(out)


def parse(
    source: str,
    variables: Sequence[str] | None = None,
    parameters: Sequence[str] = (),
) -> Expression:
    """Parse ``source`` into an :class:`Expression`.

    With ``variables=None`` every identifier that is not a declared parameter
    becomes a variable, in order of first appearance.
    """
    p = _Parser(source, variables, parameters)
    root = p.parse()
    declared = tuple(variables) if variables is not None else tuple(p.seen_vars)
    return Expression(root, declared, tuple(parameters))


def constant(value: float) -> Expression:
    return Expression(Num(float(value)), ())


@dataclass(frozen=True)
class DerivativeBundle:
    """Value and all partial derivatives up to ``order`` at one point.

    ``partials`` is keyed by exponent tuples aligned with ``variables``, so
    ``(1, 1)`` is the mixed second derivative for two variables.
    """

    value: float
    partials: dict
    variables: tuple[str, ...]
    order: int
    jet: Jet = field(repr=False, compare=False, default=None)

    def d(self, *which) -> float:
        """Partial derivative by variable names or indices, in any order."""
        exps = [0] * len(self.variables)
        for w in which:
            exps[self.variables.index(w) if isinstance(w, str) else w] += 1
        if sum(exps) > self.order:
            raise ValueError(f"order {sum(exps)} not computed (max {self.order})")
        return self.partials[tuple(exps)]

    def gradient(self):
        return self.jet.gradient()

    def hessian(self):
        return self.jet.hessian()


def evaluate(
    expr: Expression,
    point,
    params: Mapping[str, float] | None = None,
    order: int = 2,
) -> DerivativeBundle:
    """Exact value and partials of ``expr`` up to ``order`` at ``point``."""
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in [0, {MAX_ORDER}]")
    jet = jet_of(expr, point, params, order)
    n = len(expr.variables)
    return DerivativeBundle(
        value=jet.value,
        partials=jet.partials() if n else {(): jet.value},
        variables=expr.variables,
        order=order,
        jet=jet,
    )


def jet_of(expr: Expression, point, params=None, order: int = 2) -> Jet:
    """Taylor jet of ``expr`` in its declared variables at ``point``."""
    if isinstance(point, Mapping):
        point = [point[v] for v in expr.variables]
    if len(point) != len(expr.variables):
        raise ValueError(
            f"expected {len(expr.variables)} coordinates for {expr.variables}, got {len(point)}"
        )
    n = max(len(expr.variables), 1)
    env = {
        v: Jet.variable(float(x), i, n, order) for i, (v, x) in enumerate(zip(expr.variables, point))
    }
    out = _eval(expr.root, env, dict(params or {}))
    if not isinstance(out, Jet):
        out = Jet.constant(out, n, order)
    return out


# ---------------------------------------------------------------------------
# Evaluation over floats or jets
# ---------------------------------------------------------------------------


def _value(x) -> float:
    return x.value if isinstance(x, Jet) else float(x)


def _eval(node: Node, env, params):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise DomainError(f"no value bound for variable {node.name!r}") from None
    if isinstance(node, Par):
        try:
            return float(params[node.name])
        except KeyError:
            raise DomainError(f"no value bound for parameter {node.name!r}") from None
    if isinstance(node, Neg):
        return -_eval(node.arg, env, params)
    if isinstance(node, BinOp):
        x = _eval(node.left, env, params)
        y = _eval(node.right, env, params)
        if node.op == "+":
            return x + y
        if node.op == "-":
            return x - y
        if node.op == "*":
            return x * y
        if _value(y) == 0.0:
            raise DomainError("division by zero", to_source(node))
        if isinstance(x, Jet) or isinstance(y, Jet):
            return x * (y.reciprocal() if isinstance(y, Jet) else 1.0 / y)
        return x / y
    if isinstance(node, Call):
        x = _eval(node.arg, env, params)
        if node.func == "ln":
            if _value(x) <= 0.0:
                raise DomainError("ln of non-positive argument", to_source(node))
            return x.log() if isinstance(x, Jet) else math.log(x)
        return x.exp() if isinstance(x, Jet) else math.exp(x)
    if isinstance(node, Pow):
        base = _eval(node.base, env, params)
        p = _eval(node.exponent, env, params)
        b = _value(base)
        if isinstance(p, Jet) and any(p.coef[1:]):
            if b <= 0.0:
                raise DomainError("variable exponent requires a positive base", to_source(node))
            return ((base.log() if isinstance(base, Jet) else math.log(b)) * p).exp()
        p = _value(p)
        if not float(p).is_integer() and b <= 0.0:
            raise DomainError("non-integer power of non-positive base", to_source(node))
        if b == 0.0 and p < 0:
            raise DomainError("negative power of zero", to_source(node))
        if isinstance(base, Jet):
            return base.power(p)
        return float(b**p)
    raise TypeError(f"unknown node {node!r}")


# ---------------------------------------------------------------------------
# key = value definition files
# ---------------------------------------------------------------------------


def parse_keyvalue(text: str) -> dict[str, str]:
    """Parse ``key = value`` entries separated by newlines or ';'.

    ``params: a = 1, b = 2`` (or ``params = a = 1, b = 2``) is kept as a raw
    string under ``params`` for the caller to split.
    """
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        for chunk in line.split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            m = re.match(r"([A-Za-z_][A-Za-z_0-9]*)\s*[:=]\s*(.*)$", chunk)
            if m is None:
                raise ParseError(f"expected 'key = value', got {chunk!r}", lineno, 1)
            key, value = m.group(1), m.group(2).strip()
            if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
                value = value[1:-1]
            out[key] = value
    return out


def parse_params(text: str) -> dict[str, float]:
    params = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        name, _, value = item.partition("=")
        if not _:
            raise ParseError(f"expected 'name = value' in parameter list, got {item!r}")
        try:
            params[name.strip()] = float(value)
        except ValueError:
            raise ParseError(f"parameter {name.strip()!r} has non-numeric value {value!r}") from None
    return params
