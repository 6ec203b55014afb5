"""Expressions, values and the small term language used in labels and guards.

Expressions appear in three places: guard conditions on transitions, emission
payloads, and initial bindings in scenario files. The language is first order
and deliberately small: variables (regular or context, marked with ``~`` in
the concrete syntax), function applications, and literals. Literal constants
are represented as nullary applications so that an evaluated expression is
still an expression.

Values form a closed set: integers, booleans, strings, and opaque named
constants.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Union


class ExpressionError(Exception):
    """Raised for malformed expression text or bad literal payloads."""


class EvaluationError(Exception):
    """Raised when evaluation cannot produce a value (unbound variable,
    ill-typed builtin application, irreducible symbol)."""


@dataclass(frozen=True)
class Constant:
    """An opaque named constant, written ``#name`` in the concrete syntax."""

    name: str

    def __repr__(self) -> str:
        return f"#{self.name}"


Value = Union[int, bool, str, Constant]


@dataclass(frozen=True)
class Var:
    """A variable occurrence.

    ``is_context`` marks dynamic context attributes (written ``~name``);
    they are late bound and survive regular evaluation untouched.
    ``concept`` is the ontology concept used for dependency matching and
    defaults to the variable name when absent.
    """

    name: str
    type: str
    is_context: bool = False
    concept: Optional[str] = None

    @property
    def concept_name(self) -> str:
        return self.concept if self.concept is not None else self.name


@dataclass(frozen=True)
class App:
    """Function application. Nullary applications encode literals."""

    symbol: str
    args: tuple["Expression", ...] = ()


Expression = Union[Var, App]

TRUE: App = App("true")
FALSE: App = App("false")


## Literal encoding


def lit(value: Value) -> App:
    """Wrap a value as a literal (nullary) expression node."""
    if isinstance(value, bool):
        return App("true") if value else App("false")
    if isinstance(value, int):
        return App(str(value))
    if isinstance(value, Constant):
        return App(f"#{value.name}")
    if isinstance(value, str):
        return App(_quote(value))
    raise ExpressionError(f"value outside the closed value set: {value!r}")


def is_literal(expr: Expression) -> bool:
    if not isinstance(expr, App) or expr.args:
        return False
    return _literal_value(expr.symbol) is not None


def literal_value(expr: Expression) -> Value:
    """The value of a literal node. Raises ExpressionError otherwise."""
    if isinstance(expr, App) and not expr.args:
        got = _literal_value(expr.symbol)
        if got is not None:
            return got[0]
    raise ExpressionError(f"not a literal expression: {format_expression(expr)}")


def _literal_value(symbol: str) -> Optional[tuple[Value]]:
    # Returned inside a 1-tuple so that False/0 are distinguishable from "no".
    if symbol == "true":
        return (True,)
    if symbol == "false":
        return (False,)
    if symbol.startswith("#") and len(symbol) > 1:
        return (Constant(symbol[1:]),)
    if symbol.startswith("'"):
        return (_unquote(symbol),)
    try:
        return (int(symbol),)
    except ValueError:
        return None


def _quote(text: str) -> str:
    escaped = text.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


def _unquote(symbol: str) -> str:
    if len(symbol) < 2 or not symbol.endswith("'"):
        raise ExpressionError(f"unterminated string literal: {symbol}")
    body = symbol[1:-1]
    out: list[str] = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            if i + 1 >= len(body):
                raise ExpressionError(f"dangling escape in string literal: {symbol}")
            out.append(body[i + 1])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


## Types

# Static types of values and builtin results. Variable occurrences carry
# their declared type name; these are the types of everything else.
INT_TYPE = "Int"
BOOL_TYPE = "Bool"
STRING_TYPE = "String"
CONST_TYPE = "Const"
OPAQUE_TYPE = "Opaque"

_ARITH = {"plus", "minus", "times"}
_COMPARE = {"eq", "neq", "lt", "leq", "gt", "geq"}
_LOGIC = {"and", "or", "not"}

BUILTINS = _ARITH | _COMPARE | _LOGIC


def value_type(value: Value) -> str:
    if isinstance(value, bool):
        return BOOL_TYPE
    if isinstance(value, int):
        return INT_TYPE
    if isinstance(value, str):
        return STRING_TYPE
    if isinstance(value, Constant):
        return CONST_TYPE
    raise ExpressionError(f"value outside the closed value set: {value!r}")


def static_type(expr: Expression) -> str:
    """Declaration-level type of an expression, used for payload matching."""
    if isinstance(expr, Var):
        return expr.type
    if is_literal(expr):
        return value_type(literal_value(expr))
    if expr.symbol in _ARITH:
        return INT_TYPE
    if expr.symbol in _COMPARE or expr.symbol in _LOGIC:
        return BOOL_TYPE
    return OPAQUE_TYPE


## Builtin reduction


def reduce_builtin(symbol: str, args: tuple[Value, ...]) -> Value:
    """Apply a builtin symbol to ground values.

    Raises EvaluationError for unknown symbols or ill-typed arguments.
    """
    if symbol in _ARITH:
        if len(args) != 2 or not all(_is_int(a) for a in args):
            raise EvaluationError(f"{symbol} expects two integers, got {args!r}")
        a, b = args
        if symbol == "plus":
            return a + b
        if symbol == "minus":
            return a - b
        return a * b
    if symbol in ("eq", "neq"):
        if len(args) != 2:
            raise EvaluationError(f"{symbol} expects two arguments")
        same = args[0] == args[1] and value_type(args[0]) == value_type(args[1])
        return same if symbol == "eq" else not same
    if symbol in ("lt", "leq", "gt", "geq"):
        if len(args) != 2 or not all(_is_int(a) for a in args):
            raise EvaluationError(f"{symbol} expects two integers, got {args!r}")
        a, b = args
        return {"lt": a < b, "leq": a <= b, "gt": a > b, "geq": a >= b}[symbol]
    if symbol in ("and", "or"):
        if len(args) != 2 or not all(isinstance(a, bool) for a in args):
            raise EvaluationError(f"{symbol} expects two booleans, got {args!r}")
        return (args[0] and args[1]) if symbol == "and" else (args[0] or args[1])
    if symbol == "not":
        if len(args) != 1 or not isinstance(args[0], bool):
            raise EvaluationError(f"not expects one boolean, got {args!r}")
        return not args[0]
    raise EvaluationError(f"cannot reduce unknown symbol {symbol!r}")


def _is_int(value: Value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


## Concrete syntax

# expr  := '~' IDENT | '#' IDENT | INT | STRING | 'true' | 'false'
#        | IDENT | IDENT '(' expr (',' expr)* ')'
# Strings are single quoted with backslash escapes.


def format_expression(expr: Expression) -> str:
    if isinstance(expr, Var):
        return f"~{expr.name}" if expr.is_context else expr.name
    if not expr.args:
        return expr.symbol
    inner = ", ".join(format_expression(a) for a in expr.args)
    return f"{expr.symbol}({inner})"


def format_value(value: Value) -> str:
    return format_expression(lit(value))


def parse_value(text: str) -> Value:
    expr = parse_expression(text)
    if not is_literal(expr):
        raise ExpressionError(f"expected a literal value, got: {text!r}")
    return literal_value(expr)


def parse_expression(
    text: str,
    var_types: Optional[Mapping[str, str]] = None,
    context_names: Optional[Mapping[str, str]] = None,
) -> Expression:
    """Parse expression text.

    ``var_types`` supplies declared types for bare identifiers;
    ``context_names`` maps dynamic context attribute names to their types so
    that ``~x`` occurrences get the profile-declared type. Unknown variables
    get the opaque type, which only matters for payload matching.
    """
    parser = _Parser(text, var_types or {}, context_names or {})
    expr = parser.parse_expr()
    parser.expect_end()
    return expr


class _Parser:
    def __init__(self, text: str, var_types: Mapping[str, str], context_names: Mapping[str, str]):
        self.text = text
        self.var_types = var_types
        self.context_names = context_names
        self.tokens = list(_tokenize(text))
        self.pos = 0

    def peek(self) -> Optional[str]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ExpressionError(f"unexpected end of expression: {self.text!r}")
        self.pos += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.take()
        if got != tok:
            raise ExpressionError(f"expected {tok!r} but found {got!r} in {self.text!r}")

    def expect_end(self) -> None:
        if self.peek() is not None:
            raise ExpressionError(f"trailing input after expression: {self.text!r}")

    def parse_expr(self) -> Expression:
        tok = self.take()
        if tok == "~":
            name = self.take()
            _require_ident(name, self.text)
            vtype = self.context_names.get(name, self.var_types.get(name, OPAQUE_TYPE))
            return Var(name, vtype, is_context=True)
        if tok == "#":
            name = self.take()
            _require_ident(name, self.text)
            return App(f"#{name}")
        if tok in ("true", "false"):
            return App(tok)
        if tok.startswith("'") or _looks_like_int(tok):
            got = _literal_value(tok)
            if got is None:
                raise ExpressionError(f"bad literal {tok!r} in {self.text!r}")
            return App(tok)
        _require_ident(tok, self.text)
        if self.peek() == "(":
            self.take()
            args: list[Expression] = []
            if self.peek() != ")":
                args.append(self.parse_expr())
                while self.peek() == ",":
                    self.take()
                    args.append(self.parse_expr())
            self.expect(")")
            return App(tok, tuple(args))
        return Var(tok, self.var_types.get(tok, OPAQUE_TYPE))


def _require_ident(tok: str, text: str) -> None:
    if not tok or not (tok[0].isalpha() or tok[0] == "_"):
        raise ExpressionError(f"expected identifier, found {tok!r} in {text!r}")
    if not all(c.isalnum() or c == "_" for c in tok):
        raise ExpressionError(f"bad identifier {tok!r} in {text!r}")


def _looks_like_int(tok: str) -> bool:
    body = tok[1:] if tok.startswith("-") else tok
    return body.isdigit()


def _tokenize(text: str) -> Iterator[str]:
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "~#(),":
            yield ch
            i += 1
            continue
        if ch == "'":
            j = i + 1
            while j < n:
                if text[j] == "\\":
                    j += 2
                    continue
                if text[j] == "'":
                    break
                j += 1
            if j >= n:
                raise ExpressionError(f"unterminated string literal in {text!r}")
            yield text[i : j + 1]
            i = j + 1
            continue
        if ch == "-" and i + 1 < n and text[i + 1].isdigit():
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            yield text[i:j]
            i = j
            continue
        if ch.isalnum() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            yield text[i:j]
            i = j
            continue
        raise ExpressionError(f"unexpected character {ch!r} in {text!r}")


def variables(expr: Expression) -> Iterator[Var]:
    """All variable occurrences, left to right."""
    if isinstance(expr, Var):
        yield expr
    else:
        for arg in expr.args:
            yield from variables(arg)
