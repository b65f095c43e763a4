"""Magnetically actuated rigid satellite on a circular equatorial orbit.

State ``(w1, w2, w3, q1, q2, q3)``: body angular velocity and vector part of
the attitude quaternion relative to the orbit frame.  The scalar part ``q4``
is the constrained variable ``q4 = sqrt(1 - q1^2 - q2^2 - q3^2)``.

Control ``u`` is the magnetic dipole moment; the torque is ``beta * u x eta1``
where ``eta1`` (orbit normal) is expressed in body axes.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .expr import Expr, Ring
from .system import SystemSpec, make_system

STATE_NAMES = ("w1", "w2", "w3", "q1", "q2", "q3")
CONSTRAINED = "q4"
PARAM_NAMES = ("I1", "I2", "I3", "omega0", "beta")


class InvalidParams(ValueError):
    pass


@dataclass(frozen=True)
class Params:
    I1: Fraction
    I2: Fraction
    I3: Fraction
    omega0: Fraction
    beta: Fraction

    def __post_init__(self):
        for name in PARAM_NAMES:
            try:
                object.__setattr__(self, name, Fraction(getattr(self, name)))
            except (TypeError, ValueError) as exc:
                raise InvalidParams(f"{name}: {exc}") from None
        for name in ("I1", "I2", "I3"):
            if getattr(self, name) <= 0:
                raise InvalidParams(f"{name} must be positive, got {getattr(self, name)}")
        if self.omega0 == 0:
            raise InvalidParams("omega0 must be nonzero")
        if self.beta == 0:
            raise InvalidParams("beta must be nonzero")

    def as_dict(self) -> dict[str, Fraction]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def __str__(self):
        return ",".join(f"{k}={v}" for k, v in self.as_dict().items())

    @classmethod
    def parse(cls, text: str) -> "Params":
        """Parse ``"I1=4,I2=2,I3=1,omega0=1,beta=1"``; values may be ``p/q``.

        ``omega0`` and ``beta`` default to 1 when omitted.
        """
        values: dict[str, Fraction] = {"omega0": Fraction(1), "beta": Fraction(1)}
        for item in filter(None, (s.strip() for s in text.split(","))):
            key, sep, val = item.partition("=")
            key = key.strip()
            if not sep:
                raise InvalidParams(f"expected name=value, got {item!r}")
            if key not in PARAM_NAMES:
                raise InvalidParams(f"unknown parameter {key!r}")
            try:
                values[key] = Fraction(val.strip())
            except (ValueError, ZeroDivisionError):
                raise InvalidParams(f"{key}: not a rational number: {val.strip()!r}") from None
        missing = [k for k in PARAM_NAMES if k not in values]
        if missing:
            raise InvalidParams(f"missing parameters: {', '.join(missing)}")
        return cls(**values)


P_STAR = Params(4, 2, 1, 1, 1)


class ParamDiagnostics(NamedTuple):
    flat_body: bool
    axisymmetric: bool
    triangle_violations: list[str]

    @property
    def nondegenerate(self) -> bool:
        return not (self.flat_body or self.axisymmetric)


def diagnose_params(p: Params) -> ParamDiagnostics:
    """Degeneracy flags of the inertia; triangle violations are warnings only."""
    moments = {"I1": p.I1, "I2": p.I2, "I3": p.I3}
    violations = []
    for a, b, c in (("I1", "I2", "I3"), ("I2", "I1", "I3"), ("I3", "I1", "I2")):
        if moments[a] > moments[b] + moments[c]:
            violations.append(f"{a} > {b}+{c}")
    return ParamDiagnostics(
        flat_body=p.I1 == p.I2 + p.I3,
        axisymmetric=p.I2 == p.I3,
        triangle_violations=violations,
    )


def satellite_ring() -> Ring:
    free = Ring(STATE_NAMES)
    q1, q2, q3 = (free.var(v) for v in ("q1", "q2", "q3"))
    return Ring(STATE_NAMES, CONSTRAINED, 1 - q1 * q1 - q2 * q2 - q3 * q3)


_RING = satellite_ring()


def equilibrium(p: Params) -> tuple[Fraction, ...]:
    """Relative equilibrium: ``w = (-omega0, 0, 0)``, ``q = 0`` (so ``q4 = 1``)."""
    return (-p.omega0, Fraction(0), Fraction(0), Fraction(0), Fraction(0), Fraction(0))


def magnetic_field(p: Params, ring: Ring = _RING) -> tuple[Expr, Expr, Expr]:
    """``(b1, b2, b3) = beta * eta1`` in body axes, reduced by the constraint."""
    q1, q2, q3, q4 = (ring.var(v) for v in ("q1", "q2", "q3", "q4"))
    b = p.beta
    return (
        b * (1 - 2 * q2 * q2 - 2 * q3 * q3),
        2 * b * (q1 * q2 - q3 * q4),
        2 * b * (q1 * q3 + q2 * q4),
    )


def build_system(p: Params) -> SystemSpec:
    ring = _RING
    w1, w2, w3, q1, q2, q3, q4 = (ring.var(v) for v in ring.variables)
    I1, I2, I3, w0, beta = p.I1, p.I2, p.I3, p.omega0, p.beta
    zero = ring.zero()

    f0 = (
        (I2 - I3) / I1 * w2 * w3
        + 6 * w0**2 * (I2 - I3) / I1 * (q1 * q4 + q2 * q3) * (2 * q1 * q1 + 2 * q2 * q2 - 1),
        (I3 - I1) / I2 * w1 * w3
        + 6 * w0**2 * (I3 - I1) / I2 * (q1 * q3 - q2 * q4) * (2 * q1 * q1 + 2 * q2 * q2 - 1),
        (I1 - I2) / I3 * w1 * w2
        + 12 * w0**2 * (I1 - I2) / I3 * (q1 * q4 + q2 * q3) * (q2 * q4 - q1 * q3),
        Fraction(1, 2) * ((w1 + w0) * q4 - w2 * q3 + w3 * q2),
        Fraction(1, 2) * ((w1 - w0) * q3 + w2 * q4 - w3 * q1),
        Fraction(1, 2) * (-(w1 - w0) * q2 + w2 * q1 + w3 * q4),
    )
    # torque beta * u x eta1 = u x b, divided by the matching moment
    b1, b2, b3 = magnetic_field(p, ring)
    f1 = (zero, -b3 / I2, b2 / I3, zero, zero, zero)
    f2 = (b3 / I1, zero, -b1 / I3, zero, zero, zero)
    f3 = (-b2 / I1, b1 / I2, zero, zero, zero, zero)
    return make_system(ring, (f0, f1, f2, f3), equilibrium(p), p.as_dict(), name="satellite")
