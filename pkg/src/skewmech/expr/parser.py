"""Recursive-descent parser for the coefficient expression language.

Grammar (EBNF, normative for model files)::

    expr    = term , { ( "+" | "-" ) , term } ;
    term    = power , { ( "*" | "/" ) , power } ;
    power   = unary , [ "^" , power ] ;
    unary   = "-" , unary | primary ;
    primary = number | "pi" | name | func , "(" , expr , ")" | "(" , expr , ")" ;
    func    = "sin" | "cos" | "tan" | "sqrt" | "exp" | "log" | "abs" ;
    number  = digits , [ "." , [ digits ] ] , [ exponent ] | "." , digits , [ exponent ] ;

Unary minus binds tighter than ``^``, so ``-x^2`` reads as ``(-x)^2``; ``^`` is
right-associative, so ``a^b^c`` reads as ``a^(b^c)``.
"""

import logging
import re
from typing import List, NamedTuple

from ..errors import ExpressionSyntaxError, UnknownFunctionError
from .nodes import CONSTANTS, FUNCTIONS, BinaryOp, Call, Constant, Expression, Negate, Number, Variable

logger = logging.getLogger(__name__)

_TOKEN = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<number>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()])"
)


class Token(NamedTuple):
    """Lexical token with its byte offset in the UTF-8 source."""

    kind: str
    text: str
    offset: int


def _byte_offsets(source: str) -> List[int]:
    offsets = [0]
    for ch in source:
        offsets.append(offsets[-1] + len(ch.encode("utf-8")))
    return offsets


def tokenize(source: str) -> List[Token]:
    """Split source text into tokens, ending with an ``end`` token.

    Raises:
        ExpressionSyntaxError: On a character that starts no token
    """
    offsets = _byte_offsets(source)
    tokens: List[Token] = []
    pos = 0
    while pos < len(source):
        match = _TOKEN.match(source, pos)
        if match is None:
            msg = f"unexpected character {source[pos]!r}"
            raise ExpressionSyntaxError(msg, offsets[pos], source)
        kind = match.lastgroup or ""
        if kind != "ws":
            tokens.append(Token(kind, match.group(), offsets[pos]))
        pos = match.end()
    tokens.append(Token("end", "", offsets[-1]))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def _advance(self) -> Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def _error(self, message: str, token: Token) -> ExpressionSyntaxError:
        return ExpressionSyntaxError(message, token.offset, self.source)

    def _describe(self, token: Token) -> str:
        return "end of input" if token.kind == "end" else repr(token.text)

    def parse(self) -> Expression:
        if self.current.kind == "end":
            msg = "expression is empty"
            raise self._error(msg, self.current)
        tree = self._expr()
        if self.current.kind != "end":
            msg = f"unexpected {self._describe(self.current)}"
            raise self._error(msg, self.current)
        return tree

    def _expr(self) -> Expression:
        tree = self._term()
        while self.current.kind == "op" and self.current.text in "+-":
            op = self._advance().text
            tree = BinaryOp(op, tree, self._term())
        return tree

    def _term(self) -> Expression:
        tree = self._power()
        while self.current.kind == "op" and self.current.text in "*/":
            op = self._advance().text
            tree = BinaryOp(op, tree, self._power())
        return tree

    def _power(self) -> Expression:
        base = self._unary()
        if self.current.kind == "op" and self.current.text == "^":
            self._advance()
            return BinaryOp("^", base, self._power())
        return base

    def _unary(self) -> Expression:
        if self.current.kind == "op" and self.current.text == "-":
            self._advance()
            return Negate(self._unary())
        return self._primary()

    def _primary(self) -> Expression:
        token = self.current
        if token.kind == "number":
            self._advance()
            return Number(float(token.text))
        if token.kind == "name":
            self._advance()
            follows_paren = self.current.kind == "op" and self.current.text == "("
            if follows_paren:
                if token.text not in FUNCTIONS:
                    msg = f"unknown function '{token.text}'"
                    raise UnknownFunctionError(msg, token.offset, self.source)
                self._advance()
                argument = self._expr()
                self._expect_close()
                return Call(token.text, argument)
            if token.text in FUNCTIONS:
                msg = f"function '{token.text}' needs a parenthesized argument"
                raise self._error(msg, self.current)
            if token.text in CONSTANTS:
                return Constant(token.text)
            return Variable(token.text)
        if token.kind == "op" and token.text == "(":
            self._advance()
            inner = self._expr()
            self._expect_close()
            return inner
        msg = f"unexpected {self._describe(token)}"
        raise self._error(msg, token)

    def _expect_close(self) -> None:
        if self.current.kind == "op" and self.current.text == ")":
            self._advance()
            return
        msg = f"expected ')' but found {self._describe(self.current)}"
        raise self._error(msg, self.current)


def parse(source: str) -> Expression:
    """Parse expression source text.

    Args:
        source: Expression text

    Returns:
        The expression tree

    Raises:
        ExpressionSyntaxError: On malformed or empty input (carries the byte offset)
        UnknownFunctionError: When a call names a function outside the built-in set
    """
    tree = _Parser(source).parse()
    logger.debug(f"Parsed expression {source!r}")
    return tree
