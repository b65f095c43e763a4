"""Control-affine systems ``x' = f0(x) + sum_i u_i f_i(x)`` with exact fields."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .expr import Expr, ExprError, Ring

Field = tuple[Expr, ...]


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """Drift ``fields[0]``, control fields ``fields[1:]`` and an equilibrium.

    ``equilibrium`` holds the free coordinates; the constrained coordinate
    (if the ring has one) is recovered exactly as the nonnegative root.
    """

    ring: Ring
    fields: tuple[Field, ...]
    equilibrium: tuple[Fraction, ...]
    params: tuple[tuple[str, Fraction], ...] = ()
    name: str = "system"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        n = self.ring.n
        if not self.fields:
            raise ExprError("a system needs at least a drift field")
        for i, f in enumerate(self.fields):
            if len(f) != n:
                raise ExprError(f"field f{i} has {len(f)} components, expected {n}")
            for comp in f:
                if comp.ring != self.ring:
                    raise ExprError("field component from a foreign ring")
        if len(self.equilibrium) != n:
            raise ExprError(f"equilibrium has {len(self.equilibrium)} coordinates, expected {n}")

    @property
    def n(self) -> int:
        return self.ring.n

    @property
    def m(self) -> int:
        return len(self.fields) - 1

    @property
    def param_dict(self) -> dict[str, Fraction]:
        return dict(self.params)

    @property
    def equilibrium_c(self) -> Fraction | None:
        if self.ring.constrained is None:
            return None
        if "eq_c" not in self._cache:
            self._cache["eq_c"] = self.ring.constrained_value(self.equilibrium)
        return self._cache["eq_c"]

    def eval_field_exact(self, f: Sequence[Expr], point: Sequence[Fraction] | None = None,
                         c: Fraction | None = None) -> tuple[Fraction, ...]:
        """Exact values of a vector field, at the equilibrium by default."""
        if point is None:
            point, c = self.equilibrium, self.equilibrium_c
        elif self.ring.constrained is not None and c is None:
            c = self.ring.constrained_value(point)
        return tuple(comp.evaluate_exact(point, c) for comp in f)

    def __eq__(self, other):
        if not isinstance(other, SystemSpec):
            return NotImplemented
        return (self.ring == other.ring and self.fields == other.fields
                and self.equilibrium == other.equilibrium and self.params == other.params)

    def __hash__(self):
        return hash((self.ring, self.fields, self.equilibrium))


def make_system(ring: Ring, fields: Sequence[Sequence[Expr]],
                equilibrium: Sequence | None = None,
                params: Mapping[str, Fraction] | None = None,
                name: str = "system") -> SystemSpec:
    eq = tuple(Fraction(v) for v in (equilibrium if equilibrium is not None else [0] * ring.n))
    return SystemSpec(
        ring=ring,
        fields=tuple(tuple(f) for f in fields),
        equilibrium=eq,
        params=tuple(sorted((k, Fraction(v)) for k, v in (params or {}).items())),
        name=name,
    )
