"""Expression trees and their evaluation.

Trees are immutable frozen dataclasses, so structural equality (``==``) is tree equality
and a parsed expression can be shared freely between threads.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterable, Mapping, Tuple

from ..errors import DomainError, InputError, UnboundVariableError

VarBinding = Mapping[str, float]


def _sqrt(x: float) -> float:
    if x < 0.0:
        msg = f"sqrt of negative value {x!r}"
        raise DomainError(msg)
    return math.sqrt(x)


def _log(x: float) -> float:
    if x <= 0.0:
        msg = f"log of non-positive value {x!r}"
        raise DomainError(msg)
    return math.log(x)


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError as e:
        msg = f"exp overflow at {x!r}"
        raise DomainError(msg) from e


FUNCTIONS: Dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "sqrt": _sqrt,
    "exp": _exp,
    "log": _log,
    "abs": abs,
}

CONSTANTS: Dict[str, float] = {"pi": math.pi}

# Binding strength used by the parser and the printer.
PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}
NEGATE_PRECEDENCE = 4
ATOM_PRECEDENCE = 5


def _checked(value: float, what: str) -> float:
    if not math.isfinite(value):
        msg = f"non-finite result {value!r} from {what}"
        raise DomainError(msg)
    return value


class Expression(ABC):
    """Abstract expression node."""

    @abstractmethod
    def evaluate(self, env: VarBinding) -> float:
        """Evaluate the tree under a variable binding."""

    @abstractmethod
    def children(self) -> Tuple["Expression", ...]:
        """Direct sub-trees."""


@dataclass(frozen=True)
class Number(Expression):
    """Decimal literal."""

    value: float

    def evaluate(self, env: VarBinding) -> float:
        return self.value

    def children(self) -> Tuple[Expression, ...]:
        return ()


@dataclass(frozen=True)
class Constant(Expression):
    """Named mathematical constant such as ``pi``."""

    name: str

    def evaluate(self, env: VarBinding) -> float:
        return CONSTANTS[self.name]

    def children(self) -> Tuple[Expression, ...]:
        return ()


@dataclass(frozen=True)
class Variable(Expression):
    """Free variable, resolved from the binding at evaluation time."""

    name: str

    def evaluate(self, env: VarBinding) -> float:
        try:
            return float(env[self.name])
        except KeyError as e:
            msg = f"unbound variable '{self.name}'"
            raise UnboundVariableError(msg) from e

    def children(self) -> Tuple[Expression, ...]:
        return ()


@dataclass(frozen=True)
class Negate(Expression):
    """Unary minus."""

    operand: Expression

    def evaluate(self, env: VarBinding) -> float:
        return -self.operand.evaluate(env)

    def children(self) -> Tuple[Expression, ...]:
        return (self.operand,)


@dataclass(frozen=True)
class BinaryOp(Expression):
    """Binary arithmetic: one of ``+ - * / ^``."""

    op: str
    left: Expression
    right: Expression

    def evaluate(self, env: VarBinding) -> float:
        a = self.left.evaluate(env)
        b = self.right.evaluate(env)
        op = self.op
        if op == "+":
            return _checked(a + b, "sum")
        if op == "-":
            return _checked(a - b, "difference")
        if op == "*":
            return _checked(a * b, "product")
        if op == "/":
            if b == 0.0:
                msg = "division by zero"
                raise DomainError(msg)
            return _checked(a / b, "quotient")
        try:
            return _checked(math.pow(a, b), "power")
        except (ValueError, ZeroDivisionError, OverflowError) as e:
            msg = f"power {a!r}^{b!r} is undefined"
            raise DomainError(msg) from e

    def children(self) -> Tuple[Expression, ...]:
        return (self.left, self.right)


@dataclass(frozen=True)
class Call(Expression):
    """Call of a built-in one-argument function."""

    function: str
    argument: Expression

    def evaluate(self, env: VarBinding) -> float:
        return _checked(FUNCTIONS[self.function](self.argument.evaluate(env)), f"{self.function}()")

    def children(self) -> Tuple[Expression, ...]:
        return (self.argument,)


ZERO = Number(0.0)
ONE = Number(1.0)


def evaluate(e: Expression, b: VarBinding) -> float:
    """Evaluate ``e`` in double precision.

    Raises:
        UnboundVariableError: If a free variable of ``e`` is missing from ``b``
        DomainError: If a function is evaluated outside its real domain
    """
    return e.evaluate(b)


def make_binding(pairs: Iterable[Tuple[str, float]]) -> Dict[str, float]:
    """Build a variable binding from ordered (name, value) pairs.

    Raises:
        InputError: If a name occurs twice
    """
    binding: Dict[str, float] = {}
    for name, value in pairs:
        if name in binding:
            msg = f"duplicate variable '{name}' in binding"
            raise InputError(msg)
        binding[name] = float(value)
    return binding


def free_variables(e: Expression) -> FrozenSet[str]:
    """Names of all variables occurring in ``e``."""
    if isinstance(e, Variable):
        return frozenset((e.name,))
    names: FrozenSet[str] = frozenset()
    for child in e.children():
        names = names | free_variables(child)
    return names


def substitute(e: Expression, mapping: Mapping[str, Expression]) -> Expression:
    """Replace variables by sub-trees."""
    if isinstance(e, Variable):
        return mapping.get(e.name, e)
    if isinstance(e, Negate):
        return Negate(substitute(e.operand, mapping))
    if isinstance(e, BinaryOp):
        return BinaryOp(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Call):
        return Call(e.function, substitute(e.argument, mapping))
    return e


def _format(e: Expression) -> Tuple[str, int]:
    if isinstance(e, Number):
        text = repr(float(e.value))
        return text, NEGATE_PRECEDENCE if e.value < 0 or text.startswith("-") else ATOM_PRECEDENCE
    if isinstance(e, Constant):
        return e.name, ATOM_PRECEDENCE
    if isinstance(e, Variable):
        return e.name, ATOM_PRECEDENCE
    if isinstance(e, Call):
        return f"{e.function}({pretty(e.argument)})", ATOM_PRECEDENCE
    if isinstance(e, Negate):
        text, prec = _format(e.operand)
        if prec < NEGATE_PRECEDENCE:
            text = f"({text})"
        return f"-{text}", NEGATE_PRECEDENCE
    if isinstance(e, BinaryOp):
        level = PRECEDENCE[e.op]
        left, left_prec = _format(e.left)
        right, right_prec = _format(e.right)
        if left_prec < level or (e.op == "^" and left_prec == level):
            left = f"({left})"
        if right_prec < level or (e.op != "^" and right_prec == level):
            right = f"({right})"
        sep = f" {e.op} " if level == 1 else e.op
        return f"{left}{sep}{right}", level
    msg = f"cannot format node {e!r}"
    raise TypeError(msg)


def pretty(e: Expression) -> str:
    """Render ``e`` with the fewest parentheses that parse back to the same tree."""
    return _format(e)[0]
