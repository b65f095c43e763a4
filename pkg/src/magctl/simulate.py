"""Floating-point integration of control-affine systems.

Two modes:

* 6-dim (``integrate_rk4``): state is the free coordinates; the constrained
  variable is recomputed as ``sqrt(R(x))`` at every stage.
* 7-dim (``integrate_full7``): the constrained variable is carried as a state
  with its own derivative and never renormalized, so drift of ``c^2 - R(x)``
  is a genuine diagnostic.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .expr import DomainViolation, Expr, ExprError
from .lie import BracketEvaluator, BracketTree, Leaf, Node
from .system import SystemSpec

DOMAIN_GUARD = 1e-12


class SimulationError(RuntimeError):
    def __init__(self, message: str, trajectory: "Trajectory | None" = None,
                 time: float | None = None):
        super().__init__(message)
        self.trajectory = trajectory
        self.time = time


class DomainExit(SimulationError):
    """The trajectory left the domain ``R(x) > 0``."""


class StepTooLarge(SimulationError):
    """An intermediate RK stage left the domain although the trajectory did not."""


class ControlBoundExceeded(ValueError):
    pass


# ---------------------------------------------------------------------------
# compiled programs


@dataclass(frozen=True)
class Program:
    n: int
    m: int
    coef: np.ndarray
    exps: np.ndarray
    offsets: np.ndarray
    comp_index: np.ndarray

    @property
    def arrays(self):
        return self.coef, self.exps, self.offsets, self.comp_index


def _dc_along(sys: SystemSpec, f: Sequence[Expr]) -> Expr:
    """Time derivative of the constrained variable along ``f`` (chain rule)."""
    ring = sys.ring
    c = ring.var(ring.constrained)
    out = ring.zero()
    for j, comp in enumerate(f):
        if not comp.is_zero():
            d = c.diff(j)
            if not d.is_zero():
                out = out + d * comp
    return out


def compile_program(sys: SystemSpec) -> Program:
    cache = sys._cache
    if "program" in cache:
        return cache["program"]
    ring = sys.ring
    comps: list[Expr | None] = [comp for f in sys.fields for comp in f]
    if ring.constrained is not None:
        comps.append(ring.relation_expr())
        comps.extend(_dc_along(sys, f) for f in sys.fields)
    else:
        comps.append(ring.one())
        comps.extend(ring.zero() for _ in sys.fields)
    coef, exps, offsets = [], [], [0]
    for e in comps:
        for v, ex, ce in e.terms():
            coef.append(float(v))
            exps.append(list(ex) + [ce])
        offsets.append(len(coef))
    coef_a = np.asarray(coef, dtype=np.float64)
    exps_a = np.asarray(exps, dtype=np.int32).reshape(-1, ring.n + 1)
    offsets_a = np.asarray(offsets, dtype=np.int64)
    comp_index = np.repeat(np.arange(len(comps), dtype=np.int64), np.diff(offsets_a))
    prog = Program(ring.n, sys.m, coef_a, np.ascontiguousarray(exps_a), offsets_a, comp_index)
    cache["program"] = prog
    return prog


# ---------------------------------------------------------------------------
# controls


class ControlLaw:
    """Bounded control ``u(t, x)``.

    Piecewise-constant laws expose ``sample(t)`` and are integrated in the
    compiled kernel; general feedback laws go through a Python stage loop.
    """

    piecewise = False

    def __init__(self, fn: Callable[[float, np.ndarray], Sequence[float]], bound: float):
        self.fn = fn
        self.bound = float(bound)

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        u = np.asarray(self.fn(t, x), dtype=float)
        if np.linalg.norm(u) > self.bound * (1 + 1e-12):
            raise ControlBoundExceeded(f"|u({t})| = {np.linalg.norm(u)} exceeds {self.bound}")
        return u


class ConstantLaw(ControlLaw):
    piecewise = True

    def __init__(self, u: Sequence[float], bound: float | None = None):
        self.u = np.asarray(u, dtype=float)
        norm = float(np.linalg.norm(self.u))
        if bound is not None and norm > bound:
            raise ControlBoundExceeded(f"|u| = {norm} exceeds declared bound {bound}")
        super().__init__(lambda t, x: self.u, norm if bound is None else bound)

    def sample(self, t: float) -> np.ndarray:
        return self.u


def zero_law(m: int) -> ConstantLaw:
    return ConstantLaw([0.0] * m)


class TableLaw(ControlLaw):
    """Zero-order hold of ``(t_k, u_k)`` rows; ``u`` before ``t_0`` is ``u_0``."""

    piecewise = True

    def __init__(self, times: Sequence[float], values: Sequence[Sequence[float]],
                 bound: float | None = None):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.values.ndim != 2 or len(self.times) != len(self.values) or not len(self.times):
            raise ValueError("control table needs matching, nonempty time and value rows")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("control table times must increase strictly")
        norm = float(np.max(np.linalg.norm(self.values, axis=1)))
        if bound is not None and norm > bound:
            raise ControlBoundExceeded(f"control table reaches |u| = {norm} > {bound}")
        super().__init__(lambda t, x: self.sample(t), norm if bound is None else bound)

    def sample(self, t: float) -> np.ndarray:
        i = int(np.searchsorted(self.times, t + 1e-12, side="right")) - 1
        return self.values[max(i, 0)]

    @classmethod
    def from_csv(cls, path, bound: float | None = None) -> "TableLaw":
        times, values = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    nums = [float(v) for v in row]
                except ValueError:
                    continue  # header
                times.append(nums[0])
                values.append(nums[1:])
        return cls(times, values, bound)


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray  # free coordinates, shape (N, n)
    c: np.ndarray  # constrained coordinate, shape (N,)
    u: np.ndarray  # control held on the step starting at each sample, shape (N, m)
    names: tuple[str, ...]
    c_name: str | None
    max_constraint_residual: float = 0.0
    max_norm_drift: float = 0.0
    status: str = "ok"
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    @property
    def final(self) -> np.ndarray:
        return self.x[-1]

    def to_csv(self, path) -> None:
        """Header ``t,<vars>,<constrained>,u1..um``; 17 significant digits; LF endings."""
        header = ["t", *self.names]
        if self.c_name is not None:
            header.append(self.c_name)
        header += [f"u{i + 1}" for i in range(self.u.shape[1])]
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for k in range(len(self.t)):
                row = [self.t[k], *self.x[k]]
                if self.c_name is not None:
                    row.append(self.c[k])
                row += list(self.u[k])
                fh.write(",".join(f"{float(v):.17g}" for v in row) + "\n")


def _relation_values(prog: Program, x: np.ndarray) -> np.ndarray:
    lo, hi = prog.offsets[(prog.m + 1) * prog.n], prog.offsets[(prog.m + 1) * prog.n + 1]
    coef, exps = prog.coef[lo:hi], prog.exps[lo:hi, : prog.n]
    return np.array([float(np.sum(coef * np.prod(np.power(row, exps), axis=1))) for row in x])


def _finish(sys: SystemSpec, prog: Program, states: np.ndarray, t: np.ndarray, U: np.ndarray,
            full7: bool, status: str) -> Trajectory:
    n = sys.n
    x = states[:, :n]
    r = _relation_values(prog, x)
    if sys.ring.constrained is None:
        c = np.ones(len(t))
        resid = np.zeros(len(t))
        drift = np.zeros(len(t))
    elif full7:
        c = states[:, n]
        resid = np.abs(c * c - r)
        # for R = 1 - |q|^2 this is | |(q, c)| - 1 |
        drift = np.abs(np.sqrt(np.maximum(c * c - r + 1.0, 0.0)) - 1.0)
    else:
        c = np.sqrt(np.maximum(r, 0.0))
        resid = np.abs(c * c - r)
        drift = np.abs(np.sqrt(c * c - r + 1.0) - 1.0)
    return Trajectory(
        t=t, x=x.copy(), c=c, u=U[: len(t)], names=sys.ring.names, c_name=sys.ring.constrained,
        max_constraint_residual=float(resid.max(initial=0.0)),
        max_norm_drift=float(drift.max(initial=0.0)), status=status,
    )


def _check_start(sys: SystemSpec, x0: Sequence[float]) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (sys.n,):
        raise ValueError(f"initial state must have {sys.n} coordinates")
    if sys.ring.constrained is not None:
        r = _relation_values(compile_program(sys), x0[None, :])[0]
        if r <= DOMAIN_GUARD:
            raise ExprError(f"initial state outside the domain: {sys.ring.constrained}^2 = {r}")
    return x0


def rhs(sys: SystemSpec, x: Sequence[float], u: Sequence[float] | None = None) -> np.ndarray:
    """``f0(x) + sum_i u_i f_i(x)`` in double precision (6-dim mode)."""
    prog = compile_program(sys)
    w = np.concatenate([[1.0], np.zeros(sys.m) if u is None else np.asarray(u, dtype=float)])
    out = kernels.rhs(*prog.arrays, prog.n, prog.m, np.asarray(x, dtype=float), w, False,
                      DOMAIN_GUARD)
    if out is None:
        raise DomainViolation("state outside the domain")
    return out


def _integrate(sys, x0, law, t_end, h, full7, backend):
    if h <= 0:
        raise ValueError("step must be positive")
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    law = law if law is not None else zero_law(sys.m)
    prog = compile_program(sys)
    kern = kernels.get_backend(backend)
    # shrink h slightly when t_end is not a multiple of it
    nsteps = max(1, math.ceil(t_end / h - 1e-9)) if t_end > 0 else 0
    h = t_end / nsteps if nsteps else h
    t = np.arange(nsteps + 1) * h
    x0 = _check_start(sys, x0)
    if full7:
        c0 = math.sqrt(_relation_values(prog, x0[None, :])[0]) if sys.ring.constrained else 1.0
        start = np.append(x0, c0)
    else:
        start = x0
    if law.piecewise:
        U = np.array([law.sample(tk) for tk in t], dtype=float).reshape(len(t), sys.m)
        W = np.ascontiguousarray(np.hstack([np.ones((len(t), 1)), U]))
        states, code, done = kern.rk4(*prog.arrays, prog.n, prog.m, start, W, h, nsteps,
                                      full7, DOMAIN_GUARD)
    else:
        states, code, done, U = _feedback_loop(kern, prog, start, law, t, h, full7)
    status = {0: "ok", 1: "step_too_large", 2: "domain_exit"}[code]
    if code == 0 and not full7 and sys.ring.constrained is not None:
        if _relation_values(prog, states[-1:, : sys.n])[0] <= DOMAIN_GUARD:
            code, status = 2, "domain_exit"
    traj = _finish(sys, prog, states, t[: len(states)], U, full7, status)
    traj.meta["h"] = h
    if code == 1:
        raise StepTooLarge(f"an RK stage left the domain at t = {t[done]}", traj, float(t[done]))
    if code == 2:
        raise DomainExit(f"trajectory left the domain at t = {t[len(states) - 1]}", traj,
                         float(t[len(states) - 1]))
    return traj


def _feedback_loop(kern, prog, start, law, t, h, full7):
    n, m = prog.n, prog.m
    states = np.zeros((len(t), len(start)))
    states[0] = start
    U = np.zeros((len(t), m))
    args = (*prog.arrays, n, m)
    for step in range(len(t) - 1):
        x, tk = states[step], t[step]
        ks = []
        for a, dt in ((0.0, 0.0), (0.5, 0.5), (0.5, 0.5), (1.0, 1.0)):
            y = x if not ks else x + a * h * ks[-1]
            u = law(tk + dt * h, y[:n])
            if not ks:
                U[step] = u
            k = kern.rhs(*args, y, np.concatenate([[1.0], u]), full7, DOMAIN_GUARD)
            if k is None:
                if not ks:
                    return states[: step + 1], 2, step, U
                u1 = U[step]
                out = kern.rhs(*args, x + h * ks[0], np.concatenate([[1.0], u1]), full7,
                               DOMAIN_GUARD)
                return states[: step + 1], 2 if out is None else 1, step, U
            ks.append(k)
        k1, k2, k3, k4 = ks
        states[step + 1] = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    U[-1] = law(t[-1], states[-1, :n])
    return states, 0, len(t) - 1, U


def integrate_rk4(sys: SystemSpec, x0: Sequence[float], law: ControlLaw | None = None,
                  t_end: float = 1.0, h: float = 1e-3, backend: str | None = None) -> Trajectory:
    """Classical fixed-step RK4 in the free coordinates; ``h`` is shrunk to divide ``t_end``."""
    return _integrate(sys, x0, law, t_end, h, False, backend)


def integrate_full7(sys: SystemSpec, x0: Sequence[float], law: ControlLaw | None = None,
                    t_end: float = 1.0, h: float = 1e-3, backend: str | None = None) -> Trajectory:
    """RK4 carrying the constrained variable as a state, started at ``sqrt(R(x0))``."""
    if sys.ring.constrained is None:
        raise ValueError("system has no constrained variable")
    return _integrate(sys, x0, law, t_end, h, True, backend)


def equilibrium_float(sys: SystemSpec) -> np.ndarray:
    return np.array([float(v) for v in sys.equilibrium])


def orbit_period(omega0) -> float:
    return 2 * math.pi / abs(float(omega0))


# ---------------------------------------------------------------------------
# flow commutators


def _weights(sys: SystemSpec, spec) -> np.ndarray:
    """Field weights from a leaf index, a Leaf, or an explicit weight vector."""
    if isinstance(spec, Leaf):
        spec = spec.index
    if isinstance(spec, (int, np.integer)):
        w = np.zeros(sys.m + 1)
        w[int(spec)] = 1.0
        return w
    w = np.asarray(spec, dtype=float)
    if w.shape != (sys.m + 1,):
        raise ValueError(f"weight vector must have length {sys.m + 1}")
    return w


def flow(sys: SystemSpec, weights, x0, duration: float, substeps: int = 20,
         backend: str | None = None) -> np.ndarray:
    """Endpoint of the flow of ``sum_k w_k f_k`` over ``duration`` (may be negative)."""
    prog = compile_program(sys)
    kern = kernels.get_backend(backend)
    w = _weights(sys, weights)
    h = abs(duration) / substeps
    if duration < 0:
        w = -w
    W = np.ascontiguousarray(np.tile(w, (substeps, 1)))
    states, code, _ = kern.rk4(*prog.arrays, prog.n, prog.m, np.asarray(x0, dtype=float), W,
                               h, substeps, False, DOMAIN_GUARD)
    if code:
        raise DomainExit("flow left the domain")
    return states[-1]


def commutator_displacement(sys: SystemSpec, f, g, s: float, x=None, substeps: int = 20,
                            backend: str | None = None) -> np.ndarray:
    """``phi_{-g,s} o phi_{-f,s} o phi_{g,s} o phi_{f,s}(x) - x``, which is ``s^2 [f,g](x) + O(s^3)``."""
    x0 = equilibrium_float(sys) if x is None else np.asarray(x, dtype=float)
    y = x0
    for w, d in ((f, s), (g, s), (f, -s), (g, -s)):
        y = flow(sys, w, y, d, substeps, backend)
    return y - x0


def _symbolic_value(sys: SystemSpec, f, g) -> np.ndarray:
    if isinstance(f, BracketTree) and isinstance(g, BracketTree):
        v = BracketEvaluator(sys).value(Node(f, g))
        return np.array([float(x) for x in v])
    if isinstance(f, (int, np.integer)) and isinstance(g, (int, np.integer)):
        v = BracketEvaluator(sys).value(Node(Leaf(int(f)), Leaf(int(g))))
        return np.array([float(x) for x in v])
    raise TypeError("symbolic comparison needs leaf indices or trees")


def commutator_flow_test(sys: SystemSpec, f, g, s: float, substeps: int = 20,
                         backend: str | None = None, bracket_value=None) -> float:
    """``|Phi(x_e) - x_e - s^2 [f,g](x_e)|`` with the exact symbolic bracket; ``O(s^3)``."""
    if s <= 0:
        raise ValueError("s must be positive")
    if bracket_value is None:
        bracket_value = _symbolic_value(sys, f, g)
    disp = commutator_displacement(sys, f, g, s, substeps=substeps, backend=backend)
    return float(np.linalg.norm(disp - s * s * np.asarray(bracket_value, dtype=float)))


def richardson_bracket(sys: SystemSpec, f, g, s_values: Sequence[float] = (1e-2, 5e-3, 2.5e-3),
                       substeps: int = 20, backend: str | None = None) -> np.ndarray:
    """Extrapolate ``displacement / s^2`` to ``s -> 0`` by a polynomial fit in ``s``."""
    s_arr = np.asarray(s_values, dtype=float)
    D = np.array([commutator_displacement(sys, f, g, s, substeps=substeps, backend=backend) / s**2
                  for s in s_arr])
    deg = len(s_arr) - 1
    V = np.vander(s_arr, deg + 1, increasing=True)
    coeffs = np.linalg.solve(V, D) if deg + 1 == len(s_arr) else np.linalg.lstsq(V, D, rcond=None)[0]
    return coeffs[0]
