"""Iterated Lie brackets, weighted enumeration and the rank/Sussmann certificates.

Bracket convention: ``[f, g] = (Dg) f - (Df) g``.

A bracket is *bad* when its drift count ``delta_0`` is odd and every control
count ``delta_i`` (``i >= 1``) is even; otherwise it is *good*.  For
``theta`` in ``[0, 1]`` the weight of a bracket is
``theta * delta_0 + sum_i delta_i``.  Sussmann's condition ``S(theta)`` asks
that the value at the equilibrium of every bad bracket lie in the span of the
values of all brackets of strictly smaller weight.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .exact import RowSpace, rational_rank
from .expr import Expr
from .system import Field, SystemSpec

log = logging.getLogger(__name__)

DEFAULT_THETA = Fraction(1, 2)
DEFAULT_CUTOFF = Fraction(7, 2)
DEFAULT_MAX_TREES = 10**6


class CutoffTooLarge(RuntimeError):
    pass


class BracketSyntaxError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


# ---------------------------------------------------------------------------
# trees


class BracketTree:
    """Formal iterated bracket over leaves ``f0..fm``."""

    __slots__ = ("delta", "key", "_str")

    def __lt__(self, other: "BracketTree") -> bool:
        return self.key < other.key

    def __eq__(self, other):
        return isinstance(other, BracketTree) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"BracketTree({self})"

    def __str__(self):
        return self._str

    @property
    def leaves(self) -> int:
        return sum(self.delta)

    def is_bad(self) -> bool:
        return is_bad_delta(self.delta)

    def weight(self, theta) -> Fraction:
        return weight_of(self.delta, theta)


class Leaf(BracketTree):
    __slots__ = ("index",)

    def __init__(self, index: int, m: int | None = None):
        if index < 0:
            raise ValueError("leaf index must be nonnegative")
        self.index = index
        size = (m + 1) if m is not None else index + 1
        if index >= size:
            raise ValueError(f"leaf f{index} but only f0..f{size - 1} exist")
        d = [0] * size
        d[index] = 1
        self.delta = tuple(d)
        self.key = (0, index)
        self._str = f"f{index}"


class Node(BracketTree):
    __slots__ = ("left", "right")

    def __init__(self, left: BracketTree, right: BracketTree):
        self.left = left
        self.right = right
        dl, dr = left.delta, right.delta
        if len(dl) < len(dr):
            dl = dl + (0,) * (len(dr) - len(dl))
        elif len(dr) < len(dl):
            dr = dr + (0,) * (len(dl) - len(dr))
        self.delta = tuple(a + b for a, b in zip(dl, dr))
        self.key = (1, left.key, right.key)
        self._str = f"[{left},{right}]"


def delta(tree: BracketTree, m: int | None = None) -> tuple[int, ...]:
    """Leaf counts ``(delta_0, ..., delta_m)``."""
    d = tree.delta
    if m is not None and len(d) < m + 1:
        d = d + (0,) * (m + 1 - len(d))
    return d


def is_bad_delta(d: Sequence[int]) -> bool:
    return d[0] % 2 == 1 and all(x % 2 == 0 for x in d[1:])


def weight_of(d: Sequence[int], theta) -> Fraction:
    theta = Fraction(theta)
    return theta * d[0] + sum(d[1:])


def weight(tree: BracketTree, theta) -> Fraction:
    return tree.weight(theta)


def canonical(tree: BracketTree) -> tuple[int, BracketTree | None]:
    """Antisymmetry normal form: ``(sign, tree)`` or ``(0, None)`` when ``[t, t]`` appears."""
    if isinstance(tree, Leaf):
        return 1, tree
    sl, l = canonical(tree.left)
    sr, r = canonical(tree.right)
    if l is None or r is None or l.key == r.key:
        return 0, None
    if r.key < l.key:
        return -sl * sr, Node(r, l)
    return sl * sr, Node(l, r)


def parse_bracket(text: str) -> BracketTree:
    """Parse ``bracket := "f" digits | "[" bracket "," bracket "]"`` (spaces allowed)."""
    pos = 0

    def skip():
        nonlocal pos
        while pos < len(text) and text[pos].isspace():
            pos += 1

    def parse() -> BracketTree:
        nonlocal pos
        skip()
        if pos >= len(text):
            raise BracketSyntaxError("unexpected end of input", pos)
        ch = text[pos]
        if ch == "f":
            pos += 1
            start = pos
            while pos < len(text) and text[pos].isdigit():
                pos += 1
            if start == pos:
                raise BracketSyntaxError("expected field index after 'f'", pos)
            return Leaf(int(text[start:pos]))
        if ch == "[":
            pos += 1
            left = parse()
            skip()
            if pos >= len(text) or text[pos] != ",":
                raise BracketSyntaxError("expected ','", pos)
            pos += 1
            right = parse()
            skip()
            if pos >= len(text) or text[pos] != "]":
                raise BracketSyntaxError("expected ']'", pos)
            pos += 1
            return Node(left, right)
        raise BracketSyntaxError(f"unexpected character {ch!r}", pos)

    tree = parse()
    skip()
    if pos != len(text):
        raise BracketSyntaxError(f"trailing input {text[pos:]!r}", pos)
    return tree


# ---------------------------------------------------------------------------
# symbolic brackets


def lie_bracket(f: Field, g: Field) -> Field:
    """``[f, g] = (Dg) f - (Df) g`` computed exactly."""
    if len(f) != len(g):
        raise ValueError("fields have different dimensions")
    n = len(f)
    ring = f[0].ring
    out = []
    fnz = [j for j in range(n) if not f[j].is_zero()]
    gnz = [j for j in range(n) if not g[j].is_zero()]
    for i in range(n):
        acc = ring.zero()
        gi, fi = g[i], f[i]
        if not gi.is_zero():
            for j in fnz:
                d = gi.diff(j)
                if not d.is_zero():
                    acc = acc + d * f[j]
        if not fi.is_zero():
            for j in gnz:
                d = fi.diff(j)
                if not d.is_zero():
                    acc = acc - d * g[j]
        out.append(acc)
    return tuple(out)


def field_add(f: Field, g: Field) -> Field:
    return tuple(a + b for a, b in zip(f, g))


def is_zero_field(f: Field) -> bool:
    return all(c.is_zero() for c in f)


class BracketEvaluator:
    """Symbolic bracket fields and equilibrium values, memoized per system."""

    def __init__(self, sys: SystemSpec):
        self.sys = sys
        self._fields: dict = {}
        self._values: dict = {}
        self._point = sys.equilibrium
        self._c = sys.equilibrium_c
        self._grad_at: dict = {}

    def field(self, tree: BracketTree) -> Field:
        hit = self._fields.get(tree.key)
        if hit is not None:
            return hit
        if isinstance(tree, Leaf):
            if tree.index > self.sys.m:
                raise ValueError(f"{tree} does not exist: system has f0..f{self.sys.m}")
            out = self.sys.fields[tree.index]
        else:
            out = lie_bracket(self.field(tree.left), self.field(tree.right))
        self._fields[tree.key] = out
        return out

    def _eval(self, e: Expr) -> Fraction:
        return e.evaluate_exact(self._point, self._c)

    def _jacobian_at(self, tree: BracketTree) -> list[list[Fraction]]:
        hit = self._grad_at.get(tree.key)
        if hit is None:
            f = self.field(tree)
            n = self.sys.n
            hit = [[self._eval(comp.diff(j)) if not comp.is_zero() else Fraction(0)
                    for j in range(n)] for comp in f]
            self._grad_at[tree.key] = hit
        return hit

    def value(self, tree: BracketTree) -> tuple[Fraction, ...]:
        """Exact value at the equilibrium.

        The outermost bracket only needs the children's Jacobians at the
        point, so the top-level field is never expanded symbolically.
        """
        hit = self._values.get(tree.key)
        if hit is not None:
            return hit
        if tree.key in self._fields or isinstance(tree, Leaf):
            out = tuple(self._eval(c) for c in self.field(tree))
        else:
            lv, rv = self.value(tree.left), self.value(tree.right)
            jl, jr = self._jacobian_at(tree.left), self._jacobian_at(tree.right)
            n = self.sys.n
            out = tuple(
                sum((jr[i][j] * lv[j] for j in range(n) if lv[j]), Fraction(0))
                - sum((jl[i][j] * rv[j] for j in range(n) if rv[j]), Fraction(0))
                for i in range(n)
            )
        self._values[tree.key] = out
        return out


def eval_tree(tree: BracketTree, sys: SystemSpec,
              evaluator: BracketEvaluator | None = None) -> Field:
    return (evaluator or BracketEvaluator(sys)).field(tree)


# ---------------------------------------------------------------------------
# enumeration


def _delta_vectors(m: int, theta: Fraction, cutoff: Fraction, max_leaves: int | None):
    """All nonzero count vectors of weight <= cutoff, by increasing leaf count."""
    if theta == 0 and max_leaves is None:
        raise CutoffTooLarge("theta = 0 gives infinitely many brackets below any cutoff; "
                             "pass max_leaves")
    d0_max = int(cutoff / theta) if theta else max_leaves
    ctrl_max = int(cutoff)
    out = []
    for d0 in range(d0_max + 1):
        for ctrl in itertools.product(range(ctrl_max + 1), repeat=m):
            d = (d0,) + ctrl
            total = sum(d)
            if total == 0 or weight_of(d, theta) > cutoff:
                continue
            if max_leaves is not None and total > max_leaves:
                continue
            out.append(d)
    out.sort(key=lambda d: (sum(d), d))
    return out


def enumerate_trees(m: int, theta=DEFAULT_THETA, cutoff=DEFAULT_CUTOFF,
                    max_trees: int = DEFAULT_MAX_TREES,
                    max_leaves: int | None = None) -> list[BracketTree]:
    """Canonical bracket trees of weight <= cutoff in nondecreasing weight order.

    Trees containing ``[t, t]`` are dropped and ``[a, b]`` with ``b < a`` is
    represented by ``-[b, a]`` (so omitted).  Pure drift brackets with two or
    more leaves drop out automatically since ``[f0, f0] = 0``.
    """
    theta, cutoff = Fraction(theta), Fraction(cutoff)
    if not 0 <= theta <= 1:
        raise ValueError("theta must lie in [0, 1]")
    by_delta: dict[tuple[int, ...], list[BracketTree]] = {}
    count = 0
    for d in _delta_vectors(m, theta, cutoff, max_leaves):
        total = sum(d)
        trees: list[BracketTree] = []
        if total == 1:
            trees.append(Leaf(d.index(1), m))
        else:
            for dl in itertools.product(*(range(x + 1) for x in d)):
                if sum(dl) == 0 or dl == d:
                    continue
                dr = tuple(a - b for a, b in zip(d, dl))
                lefts, rights = by_delta.get(dl), by_delta.get(dr)
                if not lefts or not rights:
                    continue
                for l in lefts:
                    for r in rights:
                        if l.key < r.key:
                            trees.append(Node(l, r))
        count += len(trees)
        if count > max_trees:
            raise CutoffTooLarge(f"more than {max_trees} brackets below weight {cutoff}")
        by_delta[d] = trees
    out = [t for ts in by_delta.values() for t in ts]
    out.sort(key=lambda t: (t.weight(theta), t.leaves, t.key))
    return out


def enumerate_brackets(sys: SystemSpec, theta=DEFAULT_THETA, cutoff=DEFAULT_CUTOFF,
                       max_trees: int = DEFAULT_MAX_TREES, max_leaves: int | None = None,
                       evaluator: BracketEvaluator | None = None):
    """``(tree, value at equilibrium)`` for every canonical tree up to ``cutoff``."""
    ev = evaluator or BracketEvaluator(sys)
    return [(t, ev.value(t)) for t in enumerate_trees(sys.m, theta, cutoff, max_trees, max_leaves)]


# ---------------------------------------------------------------------------
# certificates


@dataclass
class LarcResult:
    certified: bool
    dimension: int
    trees: list[BracketTree]
    values: list[tuple[Fraction, ...]]


@dataclass
class BracketVerdict:
    tree: BracketTree
    weight: Fraction
    bad: bool
    value: tuple[Fraction, ...]
    span_member: bool | None = None  # set for bad brackets

    @property
    def classification(self) -> str:
        return "bad" if self.bad else "good"


@dataclass
class SussmannReport:
    theta: Fraction
    cutoff: Fraction
    status: str  # "certified" | "not_certified" | "inconclusive"
    larc_certified: bool
    sussmann_certified: bool
    dimension: int
    span_by_weight: list[tuple[Fraction, int]]
    bad_verdicts: list[BracketVerdict]
    good_set: list[tuple[BracketTree, tuple[Fraction, ...]]]
    stopped_at: Fraction | None = None  # weight where the lower span became full
    failures: list[BracketVerdict] = field(default_factory=list)


def certify_larc(sys: SystemSpec, theta=DEFAULT_THETA, cutoff=DEFAULT_CUTOFF,
                 max_trees: int = DEFAULT_MAX_TREES,
                 evaluator: BracketEvaluator | None = None) -> LarcResult:
    """Span of bracket values at the equilibrium up to ``cutoff``; greedy by weight."""
    ev = evaluator or BracketEvaluator(sys)
    space = RowSpace(sys.n)
    trees, values = [], []
    for t in enumerate_trees(sys.m, theta, cutoff, max_trees):
        v = ev.value(t)
        if space.add(v):
            trees.append(t)
            values.append(v)
            if space.full:
                break
    return LarcResult(space.full, space.dim, trees, values)


def certify_sussmann(sys: SystemSpec, theta=DEFAULT_THETA, cutoff=DEFAULT_CUTOFF,
                     max_trees: int = DEFAULT_MAX_TREES,
                     evaluator: BracketEvaluator | None = None) -> SussmannReport:
    """Check ``S(theta)`` for every bad bracket up to ``cutoff``.

    Levels of equal weight are processed in increasing order.  Each bad
    bracket is tested against the span of all strictly lighter brackets.
    Once that span is the whole space every heavier bad bracket passes
    trivially and enumeration stops.
    """
    theta, cutoff = Fraction(theta), Fraction(cutoff)
    ev = evaluator or BracketEvaluator(sys)
    trees = enumerate_trees(sys.m, theta, cutoff, max_trees)
    lower = RowSpace(sys.n)
    good_space = RowSpace(sys.n)
    good_set: list = []
    verdicts: list[BracketVerdict] = []
    span_by_weight: list[tuple[Fraction, int]] = []
    stopped_at = None
    for w, level in itertools.groupby(trees, key=lambda t: t.weight(theta)):
        if lower.full:
            stopped_at = w
            break
        level = list(level)
        level_values = []
        for t in level:
            v = ev.value(t)
            level_values.append(v)
            if t.is_bad():
                verdicts.append(BracketVerdict(t, w, True, v, lower.contains(v)))
            elif good_space.add(v):
                good_set.append((t, v))
        for v in level_values:
            lower.add(v)
        span_by_weight.append((w, lower.dim))
        log.debug("weight %s: %d brackets, span %d", w, len(level), lower.dim)
    failures = [v for v in verdicts if not v.span_member]
    larc = lower.full
    if failures:
        status = "not_certified"
    elif not larc:
        status = "inconclusive"
    else:
        status = "certified"
    return SussmannReport(
        theta=theta, cutoff=cutoff, status=status, larc_certified=larc,
        sussmann_certified=status == "certified", dimension=lower.dim,
        span_by_weight=span_by_weight, bad_verdicts=verdicts, good_set=good_set,
        stopped_at=stopped_at, failures=failures,
    )


def span_rank(values: Iterable[Sequence[Fraction]]) -> int:
    return rational_rank([list(v) for v in values])


# The bracket set used in the controllability proof for the satellite.
REFERENCE_GOOD_BRACKETS = {
    "g1": "[f0,[f3,[f0,[f0,f2]]]]",
    "g2": "f3",
    "g3": "f2",
    "g4": "[f2,[f0,[f0,f3]]]",
    "g5": "[f0,f3]",
    "g6": "[f0,f2]",
}
REFERENCE_BAD_BRACKETS = {
    "h1": "[f2,[f0,[f0,[f0,f2]]]]",
    "h2": "[f3,[f0,[f0,[f0,f3]]]]",
}
