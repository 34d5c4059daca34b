"""Coefficient expressions: a small arithmetic language over named variables.

Grammar (``^`` binds tighter than unary minus, and is right-associative)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'

Evaluation accepts scalars or numpy arrays for the variables and always goes
through numpy, so a point evaluated alone and the same point inside an array
give bit-identical results.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import EvalDomainError, InvalidArgument, ParseError, UnknownVariable

FUNCTIONS = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "sqrt": np.sqrt,
    "abs": np.abs,
}


class _Fault(Exception):
    """Raised inside evaluation; carries the mask of offending entries."""

    def __init__(self, message, mask):
        self.message = message
        self.mask = mask


# --- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float

    def eval(self, env):
        return np.float64(self.value)

    def __str__(self):
        return repr(float(self.value))


@dataclass(frozen=True)
class Var:
    name: str

    def eval(self, env):
        return env[self.name]

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Neg:
    operand: object

    def eval(self, env):
        return -self.operand.eval(env)

    def __str__(self):
        return f"(-{self.operand})"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object

    def eval(self, env):
        lhs = self.left.eval(env)
        rhs = self.right.eval(env)
        if self.op == "+":
            return lhs + rhs
        if self.op == "-":
            return lhs - rhs
        if self.op == "*":
            return lhs * rhs
        if self.op == "/":
            bad = rhs == 0
            if np.any(bad):
                raise _Fault("division by zero", bad)
            return lhs / rhs
        return _power(lhs, rhs)

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Call:
    func: str
    arg: object

    def eval(self, env):
        v = self.arg.eval(env)
        if self.func == "sqrt":
            bad = v < 0
            if np.any(bad):
                raise _Fault("sqrt of a negative number", bad)
        return FUNCTIONS[self.func](v)

    def __str__(self):
        return f"{self.func}({self.arg})"


def _power(base, exponent):
    integral = exponent == np.floor(exponent)
    bad = (base < 0) & ~integral
    if np.any(bad):
        raise _Fault("non-integer power of a negative base", bad)
    bad = (base == 0) & (exponent < 0)
    if np.any(bad):
        raise _Fault("division by zero (zero to a negative power)", bad)
    return np.power(base, exponent)


# --- parser ----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))")


class _Parser:
    def __init__(self, text: str, allowed_vars):
        self.text = text
        self.allowed = frozenset(allowed_vars)
        self.tokens = []  # (kind, value, offset)
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                if text[pos:].strip() == "":
                    break
                bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
                raise ParseError(f"unexpected character {text[bad]!r}", bad, text)
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.tokens.append(("end", "", len(text)))
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, v, off = self.take()
        if v != value or kind != "op":
            found = "end of input" if kind == "end" else repr(v)
            raise ParseError(f"expected {value!r}, found {found}", off, self.text)

    def parse(self):
        node = self.expr()
        kind, v, off = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {v!r}", off, self.text)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        kind, v, _ = self.peek()
        if kind == "op" and v == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and v == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        kind, v, _ = self.peek()
        if kind == "op" and v == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, v, off = self.take()
        if kind == "num":
            return Num(float(v))
        if kind == "name":
            if v in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(v, arg)
            if v not in self.allowed:
                raise UnknownVariable(v, off, self.allowed, self.text)
            return Var(v)
        if kind == "op" and v == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(v)
        raise ParseError(f"expected a number, variable or '(', found {found}", off, self.text)


def _variables(node) -> frozenset:
    if isinstance(node, Var):
        return frozenset([node.name])
    if isinstance(node, Num):
        return frozenset()
    if isinstance(node, Neg):
        return _variables(node.operand)
    if isinstance(node, Call):
        return _variables(node.arg)
    return _variables(node.left) | _variables(node.right)


@dataclass(frozen=True)
class CoefficientExpr:
    """A parsed expression together with the variable set it was checked against."""

    text: str
    root: object
    allowed_vars: frozenset
    variables: frozenset = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "variables", _variables(self.root))

    @property
    def is_constant(self) -> bool:
        return not self.variables

    def depends_on(self, name: str) -> bool:
        return name in self.variables

    def __call__(self, **bindings):
        return eval_expr(self, bindings)

    def __str__(self):
        return str(self.root)

    def sample(self, shape, **bindings) -> np.ndarray:
        """Evaluate and broadcast to ``shape`` (constants included)."""
        return np.broadcast_to(eval_expr(self, bindings), shape)


def parse_expr(text: str, allowed_vars=("x", "t")) -> CoefficientExpr:
    """Parse ``text``; any name outside ``allowed_vars`` is rejected.

    >>> parse_expr("1/(1+x^2*t^2)")(x=1.0, t=1.0)
    0.5
    """
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty expression", 0, text if isinstance(text, str) else "")
    root = _Parser(text, allowed_vars).parse()
    return CoefficientExpr(text, root, frozenset(allowed_vars))


def eval_expr(expr: CoefficientExpr, bindings: Mapping[str, object]):
    """Evaluate ``expr``; returns a float for scalar bindings, else an array.

    Raises:
        EvalDomainError: division by zero, sqrt of a negative number, or a
            negative base raised to a non-integer power.  The offending point
            is attached when it can be located.
    """
    missing = expr.variables - set(bindings)
    if missing:
        raise InvalidArgument(f"no value bound for {', '.join(sorted(missing))}")
    env = {k: np.asarray(bindings[k], dtype=np.float64) for k in expr.variables}
    scalar = all(v.ndim == 0 for v in env.values())
    with np.errstate(all="ignore"):
        try:
            out = expr.root.eval(env)
        except _Fault as fault:
            raise EvalDomainError(f"{fault.message} in {expr.text!r}",
                                  _locate(fault.mask, env)) from None
    return float(out) if scalar else out


def _locate(mask, env):
    mask = np.asarray(mask)
    if not env:
        return None
    arrays = np.broadcast_arrays(*env.values(), mask)
    first = np.argmax(arrays[-1].ravel()) if mask.ndim else 0
    return {k: float(a.ravel()[first]) for k, a in zip(env, arrays[:-1])}


def sup_abs_sampled(expr: CoefficientExpr, box, samples_per_axis: int = 64) -> float:
    """Largest ``|expr|`` over a tensor-product lattice spanning ``box``.

    ``box`` maps each variable to its ``(lo, hi)`` interval; endpoints are
    always sampled.  The result is a lower estimate of the true supremum.
    Refining the lattice from ``n`` to ``2n - 1`` points keeps every old
    sample, so the estimate never decreases along that sequence.
    """
    if samples_per_axis < 2:
        raise InvalidArgument("samples_per_axis must be at least 2")
    box = dict(box)
    missing = expr.variables - set(box)
    if missing:
        raise InvalidArgument(f"box has no interval for {', '.join(sorted(missing))}")
    names = sorted(expr.variables)
    if not names:
        return abs(eval_expr(expr, {}))
    axes = [np.linspace(box[n][0], box[n][1], samples_per_axis) for n in names]
    grids = np.meshgrid(*axes, indexing="ij")
    values = eval_expr(expr, dict(zip(names, grids)))
    return float(np.max(np.abs(values)))


def sampled_signs(expr: CoefficientExpr, box, samples_per_axis: int = 64):
    """Return ``(has_positive, has_negative, where)`` on the sample lattice.

    ``where`` is the sample closest to zero when both signs occur.
    """
    box = dict(box)
    names = sorted(expr.variables)
    if not names:
        v = eval_expr(expr, {})
        return v > 0, v < 0, None
    axes = [np.linspace(box[n][0], box[n][1], samples_per_axis) for n in names]
    grids = np.meshgrid(*axes, indexing="ij")
    values = np.asarray(eval_expr(expr, dict(zip(names, grids))))
    pos, neg = bool(np.any(values > 0)), bool(np.any(values < 0))
    where = None
    if pos and neg:
        idx = np.unravel_index(np.argmin(np.abs(values)), values.shape)
        where = {n: float(g[idx]) for n, g in zip(names, grids)}
    return pos, neg, where


__all__ = [
    "CoefficientExpr", "parse_expr", "eval_expr", "sup_abs_sampled", "sampled_signs",
    "FUNCTIONS",
]
