"""A small arithmetic language for nonlinearities ``f(x, s)``.

Grammar, loosest binding first::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

``-s^2`` therefore means ``-(s^2)`` and ``2^-1`` is accepted. Functions are
``abs exp log sqrt sin cos`` (one argument) and ``min max`` (two).

Evaluation works on floats or numpy arrays alike. Domain violations raise
:class:`EvalError` carrying the source offset of the failing node (and, for
array bindings, the first failing element) instead of producing NaN.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

UNARY_FUNCS = ("abs", "exp", "log", "sqrt", "sin", "cos")
BINARY_FUNCS = ("min", "max")
DEFAULT_NAMES = ("x1", "x2", "s", "p", "L")


class ExprSyntaxError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at offset {pos}")
        self.pos = pos


class EvalError(ArithmeticError):
    def __init__(self, msg: str, pos: int, index: int | None = None):
        where = f"offset {pos}" if index is None else f"offset {pos}, element {index}"
        super().__init__(f"{msg} ({where})")
        self.pos = pos
        self.index = index


@dataclass(frozen=True)
class Num:
    value: float
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or one of UNARY_FUNCS
    arg: "Node"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str  # + - * / ^ min max
    left: "Node"
    right: "Node"
    pos: int = field(default=0, compare=False)


Node = Union[Num, Var, Unary, Binary]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    toks = []
    i = 0
    while i < len(src):
        if src[i].isspace():
            i += 1
            continue
        m = _TOKEN.match(src, i)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[i]!r}", i)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append((kind, m.group(kind), start))
        i = m.end()
    toks.append(("end", "", len(src)))
    return toks


class _Parser:
    def __init__(self, src: str, names: frozenset[str]):
        self.toks = _tokenize(src)
        self.i = 0
        self.names = names

    def peek(self) -> tuple[str, str, int]:
        return self.toks[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> None:
        kind, val, pos = self.take()
        if val != text or kind != "op":
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", pos)

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            _, op, pos = self.take()
            node = Binary(op, node, self.term(), pos)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            _, op, pos = self.take()
            node = Binary(op, node, self.unary(), pos)
        return node

    def unary(self) -> Node:
        kind, val, pos = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Unary("neg", self.unary(), pos)
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        kind, val, pos = self.peek()
        if kind == "op" and val == "^":
            self.take()
            return Binary("^", base, self.unary(), pos)
        return base

    def atom(self) -> Node:
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val), pos)
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                return self.call(val, pos)
            if val in UNARY_FUNCS or val in BINARY_FUNCS:
                raise ExprSyntaxError(f"function {val!r} needs arguments", pos)
            if val not in self.names:
                raise ExprSyntaxError(f"unknown identifier {val!r}", pos)
            return Var(val, pos)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {found}", pos)

    def call(self, name: str, pos: int) -> Node:
        self.expect("(")
        args = [self.expr()]
        while self.peek()[1] == "," and self.peek()[0] == "op":
            self.take()
            args.append(self.expr())
        self.expect(")")
        if name in UNARY_FUNCS:
            if len(args) != 1:
                raise ExprSyntaxError(f"{name} takes 1 argument, got {len(args)}", pos)
            return Unary(name, args[0], pos)
        if name in BINARY_FUNCS:
            if len(args) != 2:
                raise ExprSyntaxError(f"{name} takes 2 arguments, got {len(args)}", pos)
            return Binary(name, args[0], args[1], pos)
        raise ExprSyntaxError(f"unknown function {name!r}", pos)


def parse(
    src: str,
    names: tuple[str, ...] = DEFAULT_NAMES,
    constants: Mapping[str, float] | None = None,
) -> Node:
    """Parse ``src`` into an AST.

    Args:
        names: identifiers allowed as variables.
        constants: identifiers replaced by numbers right after parsing
            (for example ``{"p": 3}``); they are accepted even if absent
            from ``names``.
    """
    if not src or not src.strip():
        raise ExprSyntaxError("empty expression", 0)
    allowed = frozenset(names) | frozenset(constants or ())
    parser = _Parser(src, allowed)
    node = parser.expr()
    kind, val, pos = parser.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected {val!r}", pos)
    if constants:
        node = substitute(node, constants)
    return node


def substitute(node: Node, values: Mapping[str, float]) -> Node:
    """Replace variables named in ``values`` by numeric constants."""
    if isinstance(node, Var):
        return Num(float(values[node.name]), node.pos) if node.name in values else node
    if isinstance(node, Unary):
        return Unary(node.op, substitute(node.arg, values), node.pos)
    if isinstance(node, Binary):
        return Binary(node.op, substitute(node.left, values), substitute(node.right, values), node.pos)
    return node


def free_variables(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Unary):
        return free_variables(node.arg)
    if isinstance(node, Binary):
        return free_variables(node.left) | free_variables(node.right)
    return set()


def to_text(node: Node) -> str:
    """Print ``node`` so that ``parse(to_text(node)) == node``."""
    if isinstance(node, Num):
        return repr(node.value) if node.value >= 0 else f"({node.value!r})"
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        if node.op == "neg":
            return f"(-{to_text(node.arg)})"
        return f"{node.op}({to_text(node.arg)})"
    if node.op in BINARY_FUNCS:
        return f"{node.op}({to_text(node.left)}, {to_text(node.right)})"
    return f"({to_text(node.left)} {node.op} {to_text(node.right)})"


def _first_bad(mask) -> int | None:
    if np.ndim(mask) == 0:
        return None
    return int(np.flatnonzero(mask)[0])


def _check(result, node: Node, msg: str = "non-finite result"):
    bad = ~np.isfinite(result)
    if np.any(bad):
        raise EvalError(msg, node.pos, _first_bad(bad))
    return result


def evaluate(node: Node, bindings: Mapping[str, float | np.ndarray]):
    """Evaluate ``node``; returns a float or an array matching the bindings."""
    with np.errstate(all="ignore"):
        return _eval(node, bindings)


def _eval(node: Node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise EvalError(f"unbound variable {node.name!r}", node.pos) from None
    if isinstance(node, Unary):
        a = _eval(node.arg, env)
        op = node.op
        if op == "neg":
            return -a
        if op == "abs":
            return np.abs(a)
        if op == "exp":
            return _check(np.exp(a), node, "exp overflow")
        if op == "log":
            bad = np.asarray(a) <= 0
            if np.any(bad):
                raise EvalError("log of nonpositive value", node.pos, _first_bad(bad))
            return np.log(a)
        if op == "sqrt":
            bad = np.asarray(a) < 0
            if np.any(bad):
                raise EvalError("sqrt of negative value", node.pos, _first_bad(bad))
            return np.sqrt(a)
        if op == "sin":
            return np.sin(a)
        return np.cos(a)
    a = _eval(node.left, env)
    b = _eval(node.right, env)
    op = node.op
    if op == "+":
        return _check(a + b, node)
    if op == "-":
        return _check(a - b, node)
    if op == "*":
        return _check(a * b, node)
    if op == "/":
        bad = np.asarray(b) == 0
        if np.any(bad):
            raise EvalError("division by zero", node.pos, _first_bad(bad))
        return _check(np.true_divide(a, b), node)
    if op == "^":
        aa, bb = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
        bad = (aa < 0) & (bb != np.round(bb))
        if np.any(bad):
            raise EvalError("negative base with non-integer exponent", node.pos, _first_bad(bad))
        bad = (aa == 0) & (bb < 0)
        if np.any(bad):
            raise EvalError("division by zero (zero to a negative power)", node.pos, _first_bad(bad))
        out = _check(np.power(aa, bb), node, "power overflow")
        return float(out) if out.ndim == 0 else out
    if op == "min":
        return np.minimum(a, b)
    return np.maximum(a, b)
