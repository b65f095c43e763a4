"""Text format (``.cas``) for polynomial control-affine systems.

Grammar::

    system      := { decl }
    decl        := vars | constrained | param | equilibrium | field
    vars        := "vars" ident { ident } ";"
    constrained := "constrained" ident ":" ident "^2" "=" expr ";"
    param       := "param" ident "=" ["-"] integer ["/" integer] ";"
    equilibrium := "equilibrium" "=" "[" expr { "," expr } "]" ";"
    field       := "field" ident "=" "[" expr { "," expr } "]" ";"
    expr        := term { ("+" | "-") term }
    term        := factor { ("*" | "/") factor }
    factor      := "-" factor | base [ "^" ["-"] integer ]
    base        := integer | ident | "(" expr ")"

``#`` starts a comment.  Fields must be named ``f0 .. fm``.  Division is
allowed by nonzero constants and by powers of the constrained variable.
Expressions in ``equilibrium`` are evaluated to rationals and default to 0.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Mapping

from .expr import ConstraintViolation, Expr, ExprError, Ring
from .system import SystemSpec, make_system

KEYWORDS = {"vars", "constrained", "param", "field", "equilibrium"}
MAX_EXPONENT = 256
MAX_DEPTH = 200


class DslError(ValueError):
    """Diagnostic with a 1-based source position."""

    kind = "DslError"

    def __init__(self, message: str, line: int = 1, col: int = 1):
        super().__init__(f"{line}:{col}: {self.kind}: {message}")
        self.message = message
        self.line = line
        self.col = col


class DslSyntaxError(DslError):
    kind = "SyntaxError"


class UndeclaredIdentifier(DslError):
    kind = "UndeclaredIdentifier"


class ArityMismatch(DslError):
    kind = "ArityMismatch"


class NonPolynomial(DslError):
    kind = "NonPolynomial"


# ---------------------------------------------------------------------------
# lexer

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<num>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\^2(?![0-9])|[-+*/^()\[\],;:=])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # num | ident | op | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    text = text.replace("−", "-")
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DslSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------------------
# AST nodes; each keeps the token that locates it


@dataclass(frozen=True)
class Num:
    value: int
    tok: Token


@dataclass(frozen=True)
class Name:
    name: str
    tok: Token


@dataclass(frozen=True)
class Neg:
    arg: object
    tok: Token


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    tok: Token


@dataclass(frozen=True)
class Pow:
    base: object
    exp: int
    tok: Token


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.depth = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def fail(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        raise DslSyntaxError(msg, tok.line, tok.col)

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind not in ("op", "ident"):
            found = self.tok.text or "end of input"
            self.fail(f"expected {text!r}, found {found!r}")
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            self.fail(f"expected identifier, found {self.tok.text or 'end of input'!r}")
        if self.tok.text in KEYWORDS:
            self.fail(f"{self.tok.text!r} is a keyword")
        return self.advance()

    def integer(self) -> int:
        if self.tok.kind != "num":
            self.fail(f"expected integer, found {self.tok.text or 'end of input'!r}")
        return int(self.advance().text)

    # expressions

    def expr(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            self.fail("expression nested too deeply")
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance()
            node = BinOp(op.text, node, self.term(), op)
        self.depth -= 1
        return node

    def term(self):
        node = self.factor()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            op = self.advance()
            node = BinOp(op.text, node, self.factor(), op)
        return node

    def factor(self):
        if self.tok.kind == "op" and self.tok.text == "-":
            op = self.advance()
            self.depth += 1
            if self.depth > MAX_DEPTH:
                self.fail("expression nested too deeply")
            node = Neg(self.factor(), op)
            self.depth -= 1
            return node
        node = self.base()
        if self.tok.kind == "op" and self.tok.text in ("^", "^2"):
            op = self.advance()
            if op.text == "^2":
                exp = 2
            else:
                sign = 1
                if self.tok.kind == "op" and self.tok.text == "-":
                    self.advance()
                    sign = -1
                exp = sign * self.integer()
            if abs(exp) > MAX_EXPONENT:
                self.fail(f"exponent {exp} exceeds {MAX_EXPONENT}", op)
            node = Pow(node, exp, op)
        return node

    def base(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(int(t.text), t)
        if t.kind == "ident":
            if t.text in KEYWORDS:
                self.fail(f"unexpected keyword {t.text!r}")
            self.advance()
            if self.tok.kind == "op" and self.tok.text == "(":
                raise NonPolynomial(f"function application {t.text}(...) is not supported",
                                    t.line, t.col)
            return Name(t.text, t)
        if t.kind == "op" and t.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        self.fail(f"unexpected {t.text or 'end of input'!r}")

    def vector(self) -> tuple[list, Token]:
        open_tok = self.expect("[")
        items = [self.expr()]
        while self.tok.kind == "op" and self.tok.text == ",":
            self.advance()
            items.append(self.expr())
        self.expect("]")
        return items, open_tok

    # declarations

    def system(self):
        out = {"vars": None, "constrained": None, "params": {}, "fields": {},
               "equilibrium": None}
        if self.tok.kind == "eof":
            self.fail("empty system: expected a 'vars' declaration")
        while self.tok.kind != "eof":
            kw = self.tok
            if kw.kind != "ident" or kw.text not in KEYWORDS:
                self.fail(f"expected a declaration, found {kw.text!r}")
            self.advance()
            if kw.text == "vars":
                if out["vars"] is not None:
                    self.fail("duplicate 'vars' declaration", kw)
                names = [self.ident()]
                while self.tok.kind == "ident":
                    names.append(self.ident())
                out["vars"] = names
            elif kw.text == "constrained":
                if out["constrained"] is not None:
                    self.fail("only one constrained variable is supported", kw)
                name = self.ident()
                self.expect(":")
                again = self.ident()
                if again.text != name.text:
                    self.fail(f"expected {name.text!r}", again)
                if self.tok.kind == "op" and self.tok.text == "^2":
                    self.advance()
                else:
                    self.expect("^")
                    two = self.tok
                    if self.integer() != 2:
                        self.fail("expected exponent 2", two)
                self.expect("=")
                out["constrained"] = (name, self.expr())
            elif kw.text == "param":
                name = self.ident()
                self.expect("=")
                sign = 1
                if self.tok.kind == "op" and self.tok.text == "-":
                    self.advance()
                    sign = -1
                num = self.integer()
                den = 1
                if self.tok.kind == "op" and self.tok.text == "/":
                    self.advance()
                    den_tok = self.tok
                    den = self.integer()
                    if den == 0:
                        self.fail("zero denominator", den_tok)
                if name.text in out["params"]:
                    self.fail(f"duplicate parameter {name.text!r}", name)
                out["params"][name.text] = (Fraction(sign * num, den), name)
            elif kw.text == "equilibrium":
                if out["equilibrium"] is not None:
                    self.fail("duplicate 'equilibrium' declaration", kw)
                self.expect("=")
                out["equilibrium"] = self.vector()
            else:
                name = self.ident()
                self.expect("=")
                if name.text in out["fields"]:
                    self.fail(f"duplicate field {name.text!r}", name)
                out["fields"][name.text] = (name, *self.vector())
            self.expect(";")
        return out


# ---------------------------------------------------------------------------
# semantic pass


class _Builder:
    def __init__(self, ring: Ring, params: Mapping[str, Fraction], allowed: set[str]):
        self.ring = ring
        self.params = params
        self.allowed = allowed

    def build(self, node) -> Expr:
        try:
            return self._build(node)
        except ExprError as exc:
            tok = node.tok
            raise NonPolynomial(str(exc), tok.line, tok.col) from None

    def _build(self, node) -> Expr:
        ring = self.ring
        if isinstance(node, Num):
            return ring.const(node.value)
        if isinstance(node, Name):
            if node.name in self.params:
                return ring.const(self.params[node.name])
            if node.name not in self.allowed:
                raise UndeclaredIdentifier(f"undeclared identifier {node.name!r}",
                                           node.tok.line, node.tok.col)
            return ring.var(node.name)
        if isinstance(node, Neg):
            return -self._build(node.arg)
        if isinstance(node, Pow):
            base = self._build(node.base)
            if node.exp < 0:
                base = self._invert(base, node.tok)
                return base ** (-node.exp)
            return base ** node.exp
        left, right = self._build(node.left), self._build(node.right)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        return left * self._invert(right, node.tok)

    def _invert(self, e: Expr, tok: Token) -> Expr:
        if e.is_constant() and e.constant_value() == 0:
            raise NonPolynomial("division by zero", tok.line, tok.col)
        try:
            return e.inverse()
        except ExprError:
            raise NonPolynomial(f"cannot divide by {e}: only nonzero constants and powers "
                                f"of the constrained variable", tok.line, tok.col) from None


def parse_system(text: str, params: Mapping[str, Fraction] | None = None,
                 name: str = "system") -> SystemSpec:
    """Parse ``.cas`` source; ``params`` override values bound in the text."""
    try:
        ast = _Parser(text).system()
    except RecursionError:
        raise DslSyntaxError("input nested too deeply") from None
    if ast["vars"] is None:
        raise DslSyntaxError("missing 'vars' declaration")
    var_toks = ast["vars"]
    names = [t.text for t in var_toks]
    seen: set[str] = set()
    for t in var_toks:
        if t.text in seen:
            raise DslSyntaxError(f"duplicate variable {t.text!r}", t.line, t.col)
        seen.add(t.text)

    values = {k: v for k, (v, _) in ast["params"].items()}
    for k, (_, tok) in ast["params"].items():
        if k in seen:
            raise DslSyntaxError(f"parameter {k!r} shadows a variable", tok.line, tok.col)
    for k, v in (params or {}).items():
        if k not in values:
            raise UndeclaredIdentifier(f"parameter {k!r} is not declared in the source")
        values[k] = Fraction(v)

    free = Ring(names)
    if ast["constrained"] is not None:
        ctok, rel_ast = ast["constrained"]
        if ctok.text in seen or ctok.text in values:
            raise DslSyntaxError(f"{ctok.text!r} already declared", ctok.line, ctok.col)
        rel = _Builder(free, values, set(names)).build(rel_ast)
        if rel.is_zero():
            raise DslError("constraint polynomial is zero", ctok.line, ctok.col)
        try:
            ring = Ring(names, ctok.text, rel)
        except ExprError as exc:
            raise DslError(str(exc), ctok.line, ctok.col) from None
        allowed = set(names) | {ctok.text}
    else:
        ring = free
        allowed = set(names)
    builder = _Builder(ring, values, allowed)

    fields = ast["fields"]
    if not fields:
        raise DslSyntaxError("no fields declared")
    indices = {}
    for fname, (tok, _, _) in fields.items():
        m = re.fullmatch(r"f(0|[1-9][0-9]*)", fname)
        if m is None:
            raise DslSyntaxError(f"field names must be f0, f1, ...; got {fname!r}", tok.line, tok.col)
        indices[int(m.group(1))] = fname
    if sorted(indices) != list(range(len(indices))):
        missing = min(set(range(len(indices) + 1)) - set(indices))
        raise DslSyntaxError(f"field f{missing} is missing")
    built = []
    for i in range(len(indices)):
        tok, items, open_tok = fields[indices[i]]
        if len(items) != ring.n:
            raise ArityMismatch(f"field {tok.text} has {len(items)} components, expected {ring.n}",
                                open_tok.line, open_tok.col)
        built.append([builder.build(node) for node in items])

    if ast["equilibrium"] is not None:
        items, open_tok = ast["equilibrium"]
        if len(items) != ring.n:
            raise ArityMismatch(f"equilibrium has {len(items)} coordinates, expected {ring.n}",
                                open_tok.line, open_tok.col)
        eq = []
        for node in items:
            e = _Builder(free, values, set()).build(node)
            eq.append(e.constant_value())
    else:
        open_tok = ast["vars"][0]
        eq = [Fraction(0)] * ring.n
    if ring.constrained is not None:
        try:
            ring.constrained_value(eq)
        except ConstraintViolation as exc:
            raise DslError(f"equilibrium: {exc}", open_tok.line, open_tok.col) from None
    return make_system(ring, built, eq, values, name=name)


def _fmt_rational(v: Fraction) -> str:
    return str(v)


def serialize_system(sys: SystemSpec) -> str:
    """Deterministic ``.cas`` text; ``parse_system`` inverts it exactly."""
    ring = sys.ring
    lines = [f"vars {' '.join(ring.names)};"]
    if ring.constrained is not None:
        lines.append(f"constrained {ring.constrained} : {ring.constrained}^2 = "
                     f"{ring.relation_expr().render()};")
    for k, v in sys.params:
        lines.append(f"param {k} = {_fmt_rational(v)};")
    if any(sys.equilibrium):
        lines.append(f"equilibrium = [{', '.join(_fmt_rational(v) for v in sys.equilibrium)}];")
    for i, f in enumerate(sys.fields):
        lines.append(f"field f{i} = [{', '.join(c.render() for c in f)}];")
    return "\n".join(lines) + "\n"


def load_satellite_source() -> str:
    return resources.files("magctl").joinpath("data/satellite.cas").read_text(encoding="utf-8")
