"""Simple path functionals ``phi(X0; T1, ..., Tm)`` with exact time partials.

Expressions come from a small closed grammar (constants, ``x0``, ``x1``,
``t1 .. tm``, ``+``, ``-``, ``*``, ``exp``, integer powers, and ``% k`` on
time-free operands) and are parsed from Python-like source text::

    >>> f = SimpleFunctional.parse("exp(-t1) * t2**2")
    >>> f.arity
    2

Evaluation on a path with fewer than ``m`` jumps uses ``t_i = 1`` for the
missing instants. ``x1`` is the terminal state; it is constant under time
perturbations, so its partials vanish.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .paths import Path, PathBatch

__all__ = ["Expr", "SimpleFunctional", "FunctionalSyntaxError"]


class FunctionalSyntaxError(ValueError):
    pass


class Expr:
    def eval(self, env) -> np.ndarray:
        raise NotImplementedError

    def diff(self, j: int) -> "Expr":
        raise NotImplementedError

    def max_time(self) -> int:
        raise NotImplementedError


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def eval(self, env):
        return np.full(env["n"], float(self.value))

    def diff(self, j):
        return ZERO

    def max_time(self):
        return 0

    def __str__(self):
        return f"{self.value:g}"


ZERO = Const(0.0)
ONE = Const(1.0)


@dataclass(frozen=True)
class Initial(Expr):
    def eval(self, env):
        return env["x0"].astype(float)

    def diff(self, j):
        return ZERO

    def max_time(self):
        return 0

    def __str__(self):
        return "x0"


@dataclass(frozen=True)
class Terminal(Expr):
    def eval(self, env):
        return env["x1"].astype(float)

    def diff(self, j):
        return ZERO

    def max_time(self):
        return 0

    def __str__(self):
        return "x1"


@dataclass(frozen=True)
class Time(Expr):
    index: int  # 1-based

    def eval(self, env):
        return env["T"][:, self.index - 1]

    def diff(self, j):
        return ONE if j == self.index else ZERO

    def max_time(self):
        return self.index

    def __str__(self):
        return f"t{self.index}"


@dataclass(frozen=True)
class Add(Expr):
    a: Expr
    b: Expr

    def eval(self, env):
        return self.a.eval(env) + self.b.eval(env)

    def diff(self, j):
        return add(self.a.diff(j), self.b.diff(j))

    def max_time(self):
        return max(self.a.max_time(), self.b.max_time())

    def __str__(self):
        return f"({self.a} + {self.b})"


@dataclass(frozen=True)
class Mul(Expr):
    a: Expr
    b: Expr

    def eval(self, env):
        return self.a.eval(env) * self.b.eval(env)

    def diff(self, j):
        return add(mul(self.a.diff(j), self.b), mul(self.a, self.b.diff(j)))

    def max_time(self):
        return max(self.a.max_time(), self.b.max_time())

    def __str__(self):
        return f"{self.a}*{self.b}"


@dataclass(frozen=True)
class Exp(Expr):
    a: Expr

    def eval(self, env):
        return np.exp(self.a.eval(env))

    def diff(self, j):
        return mul(self, self.a.diff(j))

    def max_time(self):
        return self.a.max_time()

    def __str__(self):
        return f"exp({self.a})"


@dataclass(frozen=True)
class Pow(Expr):
    a: Expr
    n: int

    def eval(self, env):
        return self.a.eval(env) ** self.n

    def diff(self, j):
        if self.n == 0:
            return ZERO
        return mul(mul(Const(float(self.n)), power(self.a, self.n - 1)), self.a.diff(j))

    def max_time(self):
        return self.a.max_time()

    def __str__(self):
        return f"{self.a}**{self.n}"


@dataclass(frozen=True)
class Mod(Expr):
    """``a mod k`` for a time-free integer-valued operand."""

    a: Expr
    k: int

    def eval(self, env):
        return np.mod(self.a.eval(env), self.k)

    def diff(self, j):
        return ZERO

    def max_time(self):
        return 0

    def __str__(self):
        return f"({self.a} % {self.k})"


def add(a: Expr, b: Expr) -> Expr:
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Add(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return Mul(a, b)


def power(a: Expr, n: int) -> Expr:
    if n == 0:
        return ONE
    if n == 1:
        return a
    return Pow(a, n)


_TIME_NAME = re.compile(r"t([1-9][0-9]*)$")


def _int_literal(node) -> int:
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        return -_int_literal(node.operand)
    if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
        return node.value
    raise FunctionalSyntaxError("exponents and moduli must be integer literals")


def _build(node) -> Expr:
    if isinstance(node, ast.Expression):
        return _build(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return Const(float(node.value))
    if isinstance(node, ast.Name):
        if node.id in ("x", "x0"):
            return Initial()
        if node.id == "x1":
            return Terminal()
        m = _TIME_NAME.match(node.id)
        if m:
            return Time(int(m.group(1)))
        raise FunctionalSyntaxError(f"unknown variable {node.id!r}")
    if isinstance(node, ast.UnaryOp):
        if isinstance(node.op, ast.USub):
            return mul(Const(-1.0), _build(node.operand))
        if isinstance(node.op, ast.UAdd):
            return _build(node.operand)
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Add):
            return add(_build(node.left), _build(node.right))
        if isinstance(node.op, ast.Sub):
            return add(_build(node.left), mul(Const(-1.0), _build(node.right)))
        if isinstance(node.op, ast.Mult):
            return mul(_build(node.left), _build(node.right))
        if isinstance(node.op, ast.Div):
            right = _build(node.right)
            if not isinstance(right, Const) or right.value == 0:
                raise FunctionalSyntaxError("division only by nonzero constants")
            return mul(_build(node.left), Const(1.0 / right.value))
        if isinstance(node.op, ast.Pow):
            n = _int_literal(node.right)
            if n < 0:
                raise FunctionalSyntaxError("only nonnegative integer powers")
            return power(_build(node.left), n)
        if isinstance(node.op, ast.Mod):
            k = _int_literal(node.right)
            left = _build(node.left)
            if k <= 0 or left.max_time() > 0:
                raise FunctionalSyntaxError("'% k' needs k > 0 and a time-free operand")
            return Mod(left, k)
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "exp":
        if len(node.args) != 1 or node.keywords:
            raise FunctionalSyntaxError("exp takes one argument")
        return Exp(_build(node.args[0]))
    raise FunctionalSyntaxError(f"unsupported syntax: {ast.dump(node)}")


PathLike = Union[Path, PathBatch]


def _as_batch(paths: PathLike) -> PathBatch:
    return PathBatch.from_paths([paths]) if isinstance(paths, Path) else paths


class SimpleFunctional:
    """``phi(X0; T1..Tm)`` together with its symbolic time partials."""

    def __init__(self, expr: Expr, source: str | None = None):
        self.expr = expr
        self.source = source if source is not None else str(expr)
        self.arity = expr.max_time()
        self.partials = tuple(expr.diff(j) for j in range(1, self.arity + 1))

    @classmethod
    def parse(cls, source: str) -> "SimpleFunctional":
        try:
            tree = ast.parse(source.strip(), mode="eval")
        except SyntaxError as exc:
            raise FunctionalSyntaxError(f"cannot parse {source!r}: {exc.msg}") from None
        return cls(_build(tree), source.strip())

    def __repr__(self):
        return f"SimpleFunctional({self.source!r})"

    def __str__(self):
        return self.source

    def __eq__(self, other):
        return isinstance(other, SimpleFunctional) and self.expr == other.expr

    def __hash__(self):
        return hash(self.expr)

    def __mul__(self, other: "SimpleFunctional") -> "SimpleFunctional":
        return SimpleFunctional(mul(self.expr, other.expr), f"({self.source})*({other.source})")

    def _env(self, batch: PathBatch, times=None) -> dict:
        T = batch.padded_times(max(self.arity, 1)) if times is None else times
        return {"n": len(batch), "x0": batch.x0, "x1": batch.x1, "T": T}

    def __call__(self, paths: PathLike):
        """Evaluate on a path (returns float) or a batch (returns array)."""
        out = self.expr.eval(self._env(_as_batch(paths)))
        return float(out[0]) if isinstance(paths, Path) else out

    def evaluate_at(self, x0, T) -> np.ndarray:
        """Evaluate at explicit ``(x0, T)`` with ``x1`` taken from jump counts of ``T < 1``."""
        x0 = np.asarray(x0, dtype=np.int64)
        T = np.atleast_2d(np.asarray(T, dtype=float))
        x1 = x0 + np.sum(T < 1.0, axis=1)
        return self.expr.eval({"n": len(x0), "x0": x0, "x1": x1, "T": T})

    def partial(self, j: int, paths: PathLike):
        """``d phi / d t_j`` evaluated on a path or batch."""
        batch = _as_batch(paths)
        out = self.partials[j - 1].eval(self._env(batch))
        return float(out[0]) if isinstance(paths, Path) else out
