"""Exact expressions in a polynomial ring with one square-root variable.

An :class:`Expr` lives in a :class:`Ring` made of free variables ``x1..xn``
and, optionally, a constrained variable ``c`` tied to them by ``c**2 = R(x)``
where ``R`` is a polynomial.  For the satellite model the free variables are
``w1 w2 w3 q1 q2 q3`` and ``c = q4`` with ``R = 1 - q1^2 - q2^2 - q3^2``.

Every expression is stored in the canonical form::

    (A(x) + B(x) * c) / R(x)**k

with ``A, B`` polynomials over the rationals and ``k >= 0`` minimal, i.e. not
both ``A`` and ``B`` are divisible by ``R``.  When ``k == 0`` this is the
usual "q4 exponent at most one" polynomial form.  When ``k > 0`` the same
value reads as a Laurent polynomial ``A*c^(-2k) + B*c^(1-2k)``, which is how
:meth:`Expr.terms` and the text rendering present it.  Since the form is
unique, structural equality is mathematical equality on ``{c != 0}``.

Polynomials are dicts mapping a packed monomial to a :class:`Fraction`.  A
packed monomial stores each exponent in a 16-bit field, first variable in the
most significant field, so monomial multiplication is integer addition and
integer order is lexicographic order.
"""
from __future__ import annotations

import heapq
import math
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

__all__ = [
    "ConstraintViolation",
    "DomainViolation",
    "Expr",
    "ExprError",
    "Ring",
]

_BITS = 16
_MASK = (1 << _BITS) - 1

Number = Union[int, Fraction]
Poly = dict  # packed monomial (int) -> Fraction


class ExprError(ValueError):
    """Base class for algebra errors."""


class ConstraintViolation(ExprError):
    """An exact point does not satisfy ``c**2 = R(x)``."""


class DomainViolation(ExprError):
    """A floating point lies outside ``R(x) > 0``."""


# ---------------------------------------------------------------------------
# packed monomials and polynomial helpers


def _pack(exps: Sequence[int]) -> int:
    key = 0
    for e in exps:
        if e < 0 or e > _MASK:
            raise ExprError(f"exponent {e} out of range")
        key = (key << _BITS) | e
    return key


def _unpack(key: int, n: int) -> tuple[int, ...]:
    out = [0] * n
    for i in range(n - 1, -1, -1):
        out[i] = key & _MASK
        key >>= _BITS
    return tuple(out)


def _padd(a: Poly, b: Poly, scale: Number = 1) -> Poly:
    out = dict(a)
    for m, v in b.items():
        if scale != 1:
            v = v * scale
        w = out.get(m)
        if w is None:
            out[m] = v
        else:
            s = w + v
            if s:
                out[m] = s
            else:
                del out[m]
    return out


def _pscale(a: Poly, s: Number) -> Poly:
    if not s:
        return {}
    return {m: v * s for m, v in a.items()}


def _pmul(a: Poly, b: Poly) -> Poly:
    if len(a) > len(b):
        a, b = b, a
    out: Poly = {}
    get = out.get
    for ma, va in a.items():
        for mb, vb in b.items():
            m = ma + mb
            w = get(m)
            out[m] = va * vb if w is None else w + va * vb
    return {m: v for m, v in out.items() if v}


def _pdiff(a: Poly, i: int, n: int) -> Poly:
    shift = (n - 1 - i) * _BITS
    unit = 1 << shift
    out: Poly = {}
    for m, v in a.items():
        e = (m >> shift) & _MASK
        if e:
            out[m - unit] = v * e
    return out


def _peval(a: Poly, values: Sequence, n: int):
    total = 0
    for m, v in a.items():
        term = v
        for i in range(n - 1, -1, -1):
            e = m & _MASK
            m >>= _BITS
            if e:
                term = term * values[i] ** e
        total = total + term
    return total


def _divides(lead: int, m: int, n: int) -> bool:
    for _ in range(n):
        if (lead & _MASK) > (m & _MASK):
            return False
        lead >>= _BITS
        m >>= _BITS
    return True


def _pdiv_exact(a: Poly, r: Poly, r_lead: int, n: int) -> Poly | None:
    """Quotient ``a / r`` if ``r`` divides ``a`` exactly, else ``None``."""
    if not a:
        return {}
    rem = dict(a)
    heap = [-m for m in rem]
    heapq.heapify(heap)
    lc = r[r_lead]
    quot: Poly = {}
    while rem:
        m = -heapq.heappop(heap)
        v = rem.get(m)
        if v is None:
            continue
        if not _divides(r_lead, m, n):
            return None
        q = v / lc
        qm = m - r_lead
        quot[qm] = q
        for rm, rv in r.items():
            t = qm + rm
            w = rem.get(t)
            if w is None:
                rem[t] = -q * rv
                heapq.heappush(heap, -t)
            else:
                s = w - q * rv
                if s:
                    rem[t] = s
                else:
                    del rem[t]
    return quot


# ---------------------------------------------------------------------------


class Ring:
    """Free variables plus at most one constrained variable.

    ``relation`` is the polynomial ``R`` in the free variables with
    ``constrained**2 = R``.  It must not be a perfect square, otherwise the
    canonical form is not unique.
    """

    def __init__(self, names: Sequence[str], constrained: str | None = None,
                 relation: "Expr | Mapping[tuple[int, ...], Number] | None" = None):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise ExprError("duplicate variable names")
        if constrained is not None and constrained in names:
            raise ExprError(f"constrained variable {constrained!r} is also free")
        if (constrained is None) != (relation is None):
            raise ExprError("a constrained variable needs a defining relation")
        self.names = names
        self.n = len(names)
        self.constrained = constrained
        self._index = {v: i for i, v in enumerate(names)}
        self.relation: Poly = {}
        self.relation_lead = 0
        if relation is not None:
            if isinstance(relation, Expr):
                if relation._B or relation._k:
                    raise ExprError("relation must be polynomial in the free variables")
                rel = dict(relation._A)
            else:
                rel = {_pack(e): Fraction(v) for e, v in relation.items() if v}
            if not rel:
                raise ExprError("relation must be nonzero")
            self.relation = rel
            self.relation_lead = max(rel)
        self._rel_pows: list[Poly] = [{0: Fraction(1)}, self.relation]
        self._rel_grad = [_pdiff(self.relation, i, self.n) for i in range(self.n)]

    @property
    def variables(self) -> tuple[str, ...]:
        """All variable names, constrained one last."""
        if self.constrained is None:
            return self.names
        return self.names + (self.constrained,)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ExprError(f"unknown variable {name!r}") from None

    def __eq__(self, other):
        if not isinstance(other, Ring):
            return NotImplemented
        return (self.names == other.names and self.constrained == other.constrained
                and self.relation == other.relation)

    def __hash__(self):
        return hash((self.names, self.constrained, frozenset(self.relation.items())))

    def __repr__(self):
        if self.constrained is None:
            return f"Ring({' '.join(self.names)})"
        return f"Ring({' '.join(self.names)}; {self.constrained}^2 = {self.relation_expr()})"

    def _rel_pow(self, k: int) -> Poly:
        while len(self._rel_pows) <= k:
            self._rel_pows.append(_pmul(self._rel_pows[-1], self.relation))
        return self._rel_pows[k]

    # constructors

    def const(self, value: Number) -> "Expr":
        value = Fraction(value)
        return Expr(self, {0: value} if value else {}, {}, 0)

    def zero(self) -> "Expr":
        return Expr(self, {}, {}, 0)

    def one(self) -> "Expr":
        return self.const(1)

    def var(self, name: str) -> "Expr":
        if name == self.constrained:
            return Expr(self, {}, {0: Fraction(1)}, 0)
        exps = [0] * self.n
        exps[self.index(name)] = 1
        return Expr(self, {_pack(exps): Fraction(1)}, {}, 0)

    def c_inverse(self) -> "Expr":
        """``1/c``, i.e. ``c / R``."""
        if self.constrained is None:
            raise ExprError("ring has no constrained variable")
        return Expr._normal(self, {}, {0: Fraction(1)}, 1)

    def monomial(self, coeff: Number, exps: Sequence[int], c_exp: int = 0) -> "Expr":
        """``coeff * prod(x_i**exps[i]) * c**c_exp``; ``c_exp`` may be negative."""
        coeff = Fraction(coeff)
        if len(exps) != self.n:
            raise ExprError("exponent vector has wrong length")
        if c_exp and self.constrained is None:
            raise ExprError("ring has no constrained variable")
        if not coeff:
            return self.zero()
        m = _pack(exps)
        if c_exp >= 0:
            half, odd = divmod(c_exp, 2)
            poly = _pscale(self._rel_pow(half), coeff)
            poly = _pmul(poly, {m: Fraction(1)})
            return Expr(self, {} if odd else poly, poly if odd else {}, 0)
        # c^(-j): j = 2k -> 1/R^k ; j = 2k - 1 -> c/R^k
        j = -c_exp
        k = (j + 1) // 2
        if j % 2 == 0:
            return Expr._normal(self, {m: coeff}, {}, k)
        return Expr._normal(self, {}, {m: coeff}, k)

    def relation_expr(self) -> "Expr":
        return Expr(self, dict(self.relation), {}, 0)

    def constrained_value(self, point: Sequence[Fraction]) -> Fraction:
        """Exact nonnegative root of ``R`` at a rational point, if rational."""
        r = Fraction(_peval(self.relation, [Fraction(v) for v in point], self.n))
        if r < 0:
            raise ConstraintViolation(f"{self.constrained}^2 = {r} < 0")
        num, den = math.isqrt(r.numerator), math.isqrt(r.denominator)
        if num * num != r.numerator or den * den != r.denominator:
            raise ConstraintViolation(f"{self.constrained}^2 = {r} has no rational root")
        return Fraction(num, den)


class Expr:
    """Immutable exact expression over a :class:`Ring`.  See module docstring."""

    __slots__ = ("ring", "_A", "_B", "_k", "_hash", "_dcache")

    def __init__(self, ring: Ring, A: Poly, B: Poly, k: int):
        # trusted constructor: callers guarantee canonical form
        self.ring = ring
        self._A = A
        self._B = B
        self._k = k
        self._hash = None
        self._dcache = None

    @classmethod
    def _normal(cls, ring: Ring, A: Poly, B: Poly, k: int) -> "Expr":
        if not A and not B:
            return cls(ring, {}, {}, 0)
        while k > 0:
            qa = _pdiv_exact(A, ring.relation, ring.relation_lead, ring.n)
            if qa is None:
                break
            qb = _pdiv_exact(B, ring.relation, ring.relation_lead, ring.n)
            if qb is None:
                break
            A, B, k = qa, qb, k - 1
        return cls(ring, A, B, k)

    # ----------------------------------------------------------- structure

    @property
    def denominator_power(self) -> int:
        """``k`` in ``(A + B c) / R^k``."""
        return self._k

    def is_zero(self) -> bool:
        return not self._A and not self._B

    def is_constant(self) -> bool:
        return not self._B and self._k == 0 and all(m == 0 for m in self._A)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ExprError(f"{self} is not constant")
        return self._A.get(0, Fraction(0))

    def is_polynomial(self) -> bool:
        """True when no negative power of the constrained variable is needed."""
        return self._k == 0

    def terms(self) -> list[tuple[Fraction, tuple[int, ...], int]]:
        """Laurent monomials ``(coeff, free exponents, c exponent)`` in canonical order."""
        n = self.ring.n
        ca, cb = -2 * self._k, 1 - 2 * self._k
        out = [(v, _unpack(m, n), ca) for m, v in self._A.items()]
        out += [(v, _unpack(m, n), cb) for m, v in self._B.items()]
        out.sort(key=lambda t: t[1] + (t[2],), reverse=True)
        return out

    def __len__(self):
        return len(self._A) + len(self._B)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.ring.const(other)
        if not isinstance(other, Expr):
            return NotImplemented
        return (self._k == other._k and self._A == other._A and self._B == other._B
                and self.ring == other.ring)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self._k, frozenset(self._A.items()), frozenset(self._B.items())))
        return self._hash

    def __bool__(self):
        return not self.is_zero()

    # ---------------------------------------------------------- arithmetic

    def _coerce(self, other) -> "Expr":
        if isinstance(other, Expr):
            if other.ring is not self.ring and other.ring != self.ring:
                raise ExprError("expressions belong to different rings")
            return other
        if isinstance(other, (int, Fraction)):
            return self.ring.const(other)
        return NotImplemented

    def _lift(self, k: int) -> tuple[Poly, Poly]:
        if k == self._k:
            return self._A, self._B
        rp = self.ring._rel_pow(k - self._k)
        return _pmul(self._A, rp), _pmul(self._B, rp)

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not other._A and not other._B:
            return self
        if not self._A and not self._B:
            return other
        k = max(self._k, other._k)
        a1, b1 = self._lift(k)
        a2, b2 = other._lift(k)
        A, B = _padd(a1, a2), _padd(b1, b2)
        if k == 0:
            return Expr(self.ring, A, B, 0)
        return Expr._normal(self.ring, A, B, k)

    __radd__ = __add__

    def __neg__(self):
        return Expr(self.ring, _pscale(self._A, -1), _pscale(self._B, -1), self._k)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        ring = self.ring
        A1, B1, A2, B2 = self._A, self._B, other._A, other._B
        A = _pmul(A1, A2)
        if B1 and B2:
            A = _padd(A, _pmul(_pmul(B1, B2), ring.relation))
        B = _padd(_pmul(A1, B2), _pmul(A2, B1))
        k = self._k + other._k
        if k == 0:
            return Expr(ring, A, B, 0)
        return Expr._normal(ring, A, B, k)

    __rmul__ = __mul__

    def scale(self, s: Number) -> "Expr":
        s = Fraction(s)
        if not s:
            return self.ring.zero()
        return Expr(self.ring, _pscale(self._A, s), _pscale(self._B, s), self._k)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                raise ZeroDivisionError("division by zero constant")
            return self.scale(1 / Fraction(other))
        return NotImplemented

    def __pow__(self, e: int):
        if not isinstance(e, int):
            return NotImplemented
        if e < 0:
            return self.inverse() ** (-e)
        out = self.ring.one()
        base = self
        while e:
            if e & 1:
                out = out * base
            e >>= 1
            if e:
                base = base * base
        return out

    def inverse(self) -> "Expr":
        """Inverse of a nonzero constant times a power of the constrained variable."""
        ring = self.ring
        if self.is_constant():
            v = self.constant_value()
            if not v:
                raise ZeroDivisionError("inverse of zero")
            return ring.const(1 / v)
        # s * c^j  with  j odd:  (s c) / R^k  has A = 0, B = s
        if (not self._A and len(self._B) == 1 and 0 in self._B):
            s = self._B[0]
            j = 1 - 2 * self._k
            return ring.monomial(1 / s, [0] * ring.n, -j)
        if (not self._B and len(self._A) == 1 and 0 in self._A):
            s = self._A[0]
            j = -2 * self._k
            return ring.monomial(1 / s, [0] * ring.n, -j)
        raise ExprError(f"cannot invert {self}")

    # ------------------------------------------------------ differentiation

    def diff(self, var: str | int) -> "Expr":
        """Partial derivative with respect to a free variable.

        The constrained variable is a function of the free ones:
        ``dc/dx = (dR/dx) / (2c)``.
        """
        ring = self.ring
        if isinstance(var, str):
            if var == ring.constrained:
                raise ExprError(f"{var} is not an independent variable")
            i = ring.index(var)
        else:
            i = var
            if not 0 <= i < ring.n:
                raise ExprError(f"variable index {i} out of range")
        if self._dcache is None:
            self._dcache = {}
        hit = self._dcache.get(i)
        if hit is not None:
            return hit
        n, k = ring.n, self._k
        dA = _pdiff(self._A, i, n)
        dB = _pdiff(self._B, i, n)
        if ring.constrained is None or not self._B and k == 0:
            out = Expr(ring, dA, {}, 0)
        else:
            dR = ring._rel_grad[i]
            if not dR:
                out = Expr._normal(ring, dA, dB, k)
            else:
                # d[(A + B c)/R^k] = [R dA + (R dB + B dR/2) c - k (A + B c) dR] / R^(k+1)
                R = ring.relation
                A = _pmul(R, dA)
                B = _padd(_pmul(R, dB), _pmul(self._B, dR), Fraction(1, 2))
                if k:
                    A = _padd(A, _pmul(self._A, dR), -k)
                    B = _padd(B, _pmul(self._B, dR), -k)
                out = Expr._normal(ring, A, B, k + 1)
        self._dcache[i] = out
        return out

    def gradient(self) -> list["Expr"]:
        return [self.diff(i) for i in range(self.ring.n)]

    # ----------------------------------------------------------- evaluation

    def evaluate_exact(self, point: Sequence[Number], c: Number | None = None) -> Fraction:
        """Exact value at a rational point.

        ``point`` holds the free variables; ``c`` the constrained variable
        (it may also be passed as an extra trailing entry of ``point``).
        ``c`` must satisfy ``c**2 = R(point)`` exactly.
        """
        ring = self.ring
        pt = [Fraction(v) for v in point]
        if ring.constrained is not None:
            if c is None:
                if len(pt) != ring.n + 1:
                    raise ExprError(f"expected {ring.n + 1} coordinates")
                c = pt.pop()
            c = Fraction(c)
        if len(pt) != ring.n:
            raise ExprError(f"expected {ring.n} free coordinates")
        if ring.constrained is None:
            return Fraction(_peval(self._A, pt, ring.n))
        r = Fraction(_peval(ring.relation, pt, ring.n))
        if c * c != r:
            raise ConstraintViolation(f"{ring.constrained}^2 = {c * c} but relation gives {r}")
        num = _peval(self._A, pt, ring.n) + _peval(self._B, pt, ring.n) * c
        if self._k:
            if r == 0:
                raise ZeroDivisionError(f"{ring.constrained} = 0 with a negative power")
            return Fraction(num) / r ** self._k
        return Fraction(num)

    def evaluate_float(self, point: Sequence[float]) -> float:
        """Double precision value; the constrained variable is ``sqrt(R)``."""
        ring = self.ring
        pt = [float(v) for v in point]
        if len(pt) != ring.n:
            raise ExprError(f"expected {ring.n} free coordinates")
        if ring.constrained is None:
            return float(_peval(self._A, pt, ring.n))
        r = float(_peval(ring.relation, pt, ring.n))
        if r <= 0.0:
            raise DomainViolation(f"{ring.constrained}^2 = {r} is not positive")
        c = math.sqrt(r)
        num = float(_peval(self._A, pt, ring.n)) + float(_peval(self._B, pt, ring.n)) * c
        return num / r ** self._k if self._k else num

    def evaluate_float_with(self, point: Sequence[float], c: float) -> float:
        """Double precision value with an explicitly supplied constrained value."""
        ring = self.ring
        pt = [float(v) for v in point]
        total = 0.0
        for coeff, exps, ce in self.terms():
            t = float(coeff)
            for v, e in zip(pt, exps):
                if e:
                    t *= v ** e
            if ce:
                t *= c ** ce
            total += t
        return total

    # -------------------------------------------------------------- display

    def __str__(self):
        return self.render()

    def __repr__(self):
        return f"Expr({self.render()})"

    def render(self) -> str:
        """Canonical text: descending lex term order, rationals as ``p/q``."""
        terms = self.terms()
        if not terms:
            return "0"
        names = self.ring.names
        cname = self.ring.constrained
        parts = []
        for idx, (coeff, exps, ce) in enumerate(terms):
            factors = []
            for name, e in zip(names, exps):
                if e == 1:
                    factors.append(name)
                elif e:
                    factors.append(f"{name}^{e}")
            if ce == 1:
                factors.append(cname)
            elif ce:
                factors.append(f"{cname}^{ce}")
            mag = abs(coeff)
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = f"{mag}*" + "*".join(factors)
            if idx == 0:
                parts.append(("-" if coeff < 0 else "") + body)
            else:
                parts.append((" - " if coeff < 0 else " + ") + body)
        return "".join(parts)


def sum_exprs(ring: Ring, items: Iterable[Expr]) -> Expr:
    out = ring.zero()
    for e in items:
        out = out + e
    return out
