"""Decoupled IMEX time integrators for the thermistor system.

The continuous problem couples a heat equation for the temperature ``u`` with
a quasi-static potential equation for ``phi`` through the temperature
dependent conductivity ``sigma(u)`` and the Joule heating source
``sigma(u) |grad phi|^2``:

    u_t - Laplace(u) = sigma(u) |grad phi|^2 + f1,
    -div(sigma(u) grad phi) = f2,

with homogeneous Dirichlet data for ``u`` and prescribed boundary values
``g`` for ``phi``.  All schemes here decouple the system by extrapolating the
conductivity from known time levels, so each step costs two linear solves:
one potential solve and one temperature solve.

The workhorse scheme is the two-step backward differentiation formula with
the second-order extrapolation ``sigma* = 2 sigma(U^{n-1}) - sigma(U^{n-2})``,
started with one implicit Euler step.  Variants: a three-step BDF with cubic
extrapolation, a scheme that advances the temperature first using Joule data
extrapolated from previous potentials, and a first-order-extrapolation
variant (``sigma* = sigma(U^{n-1})``); the latter two lose accuracy and are
kept for comparison studies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .analysis import interpolate_nodal
from .fem import (
    DirichletSystem,
    FeSpace,
    assemble_joule_load,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    assemble_weighted_stiffness,
)
from .mesh import build_mesh

__all__ = [
    "ProblemData",
    "SchemeConfig",
    "TimeState",
    "StepRecord",
    "OperatorCache",
    "d_tau",
    "resolve_tau",
    "validate_config",
    "potential_solve",
    "temperature_solve_bdf2",
    "euler_init",
    "euler_step",
    "bdf2_step",
    "bdf3_step",
    "gao_step",
    "ext1_step",
    "run_simulation",
]

SCHEMES = ("euler", "bdf2", "bdf3", "gao", "ext1")
TAU_RULES = ("sqrt-h", "equal-h")  # plus "fixed:<value>"


@dataclass(frozen=True)
class ProblemData:
    """Data defining one thermistor problem instance.

    ``exact_u`` and ``exact_phi`` are space-time fields ``f(x, y, t)`` used
    for the initial condition, the potential's Dirichlet data, and error
    norms.  ``grad_u``/``grad_phi`` return pairs of partials and are only
    needed for H1 error reporting.  ``sigma_bounds`` documents constants
    ``0 < k1 <= sigma <= k2``.
    """

    sigma: Callable
    exact_u: Callable
    exact_phi: Callable
    f1: Callable
    f2: Callable
    grad_u: Optional[Callable] = None
    grad_phi: Optional[Callable] = None
    sigma_bounds: tuple = (None, None)


@dataclass(frozen=True)
class TimeState:
    """Solution history after completing time level ``n`` (``t = n * tau``).

    ``u_n`` is the newest temperature; ``u_nm1``/``u_nm2`` are the one- and
    two-level-old values (``None`` until the history fills up), likewise for
    the potential.
    """

    n: int
    t: float
    u_n: np.ndarray
    u_nm1: Optional[np.ndarray] = None
    u_nm2: Optional[np.ndarray] = None
    phi_n: Optional[np.ndarray] = None
    phi_nm1: Optional[np.ndarray] = None
    phi_nm2: Optional[np.ndarray] = None

    def advanced(self, u_new: np.ndarray, phi_new: np.ndarray, tau: float) -> "TimeState":
        """Shift the history by one level."""
        return TimeState(
            n=self.n + 1,
            t=(self.n + 1) * tau,
            u_n=u_new,
            u_nm1=self.u_n,
            u_nm2=self.u_nm1,
            phi_n=phi_new,
            phi_nm1=self.phi_n,
            phi_nm2=self.phi_nm1,
        )


@dataclass(frozen=True)
class StepRecord:
    """Per-step diagnostics collected by `run_simulation`."""

    n: int
    t: float
    sigma_star_min: float
    res_phi: float
    res_u: float


@dataclass(frozen=True)
class SchemeConfig:
    """Configuration of one simulation run.

    ``tau_rule`` is one of ``"sqrt-h"`` (time step targeting the square root
    of the mesh size), ``"equal-h"`` (targeting the mesh size), or
    ``"fixed:<value>"``.  The realized step divides ``T`` evenly:
    ``N = ceil(T / target)``, ``tau = T / N``.

    ``init`` selects the start-up: ``"euler"`` (one implicit Euler step) or
    ``"exact"`` (nodal interpolants of the exact solution for the starting
    levels); the empty string picks the scheme default (exact for bdf3,
    Euler otherwise).
    """

    scheme: str
    M: int
    elem_kind: str = "quad"
    T: float = 1.0
    tau_rule: str = "sqrt-h"
    solver: str = "direct"
    solver_tol: float = 1e-12
    assembly_points: Optional[int] = None
    error_points: Optional[int] = None
    init: str = ""


def validate_config(config: SchemeConfig) -> None:
    """Raise ValueError for configurations that cannot be run."""
    if config.scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {config.scheme!r}; choose from {SCHEMES}")
    if config.elem_kind not in ("quad", "tri"):
        raise ValueError(f"elem_kind must be 'quad' or 'tri', got {config.elem_kind!r}")
    if not isinstance(config.M, (int, np.integer)) or config.M < 2 or config.M % 2:
        raise ValueError(f"M must be an even integer >= 2, got {config.M!r}")
    if not (config.T > 0):
        raise ValueError(f"T must be positive, got {config.T!r}")
    if config.solver not in ("direct", "cg"):
        raise ValueError(f"solver must be 'direct' or 'cg', got {config.solver!r}")
    if config.init not in ("", "euler", "exact"):
        raise ValueError(f"init must be 'euler' or 'exact', got {config.init!r}")
    _parse_tau_rule(config.tau_rule)


def _parse_tau_rule(rule: str) -> Optional[float]:
    """Return the fixed step if the rule is ``fixed:<v>``, else None."""
    if rule in TAU_RULES:
        return None
    if rule.startswith("fixed:"):
        try:
            v = float(rule.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad fixed step in tau rule {rule!r}") from None
        if not (v > 0):
            raise ValueError(f"fixed time step must be positive, got {v}")
        return v
    raise ValueError(f"unknown tau rule {rule!r}; use 'sqrt-h', 'equal-h' or 'fixed:<v>'")


def resolve_tau(config: SchemeConfig, h: float) -> tuple[float, int]:
    """Realize the time step: ``N = ceil(T / target)``, ``tau = T / N``."""
    fixed = _parse_tau_rule(config.tau_rule)
    if fixed is not None:
        target = fixed
    elif config.tau_rule == "sqrt-h":
        target = math.sqrt(h)
    else:  # equal-h
        target = h
    N = max(1, math.ceil(config.T / target - 1e-12))
    return config.T / N, N


def d_tau(f_n: np.ndarray, f_nm1: np.ndarray, f_nm2: np.ndarray, tau: float) -> np.ndarray:
    """Two-step backward difference ``(3 f^n - 4 f^{n-1} + f^{n-2}) / (2 tau)``."""
    return (3.0 * f_n - 4.0 * f_nm1 + f_nm2) / (2.0 * tau)


class OperatorCache:
    """Assembled operators and factorizations reused across time steps.

    The temperature system matrix ``alpha * Mass + Stiffness`` is constant in
    time for every scheme here, so its Dirichlet reduction (and, with the
    direct solver, its factorization) is built once per ``alpha``.  The
    potential matrix changes every step and is rebuilt on demand.
    """

    def __init__(self, space: FeSpace, solver: str = "direct", tol: float = 1e-12):
        self.space = space
        self.solver = solver
        self.tol = tol
        self.mass = assemble_mass(space)
        self.stiffness = assemble_stiffness(space)
        self._heat: dict[float, DirichletSystem] = {}

    def heat_system(self, alpha: float) -> DirichletSystem:
        key = float(alpha)
        if key not in self._heat:
            A = (key * self.mass + self.stiffness).tocsr()
            self._heat[key] = DirichletSystem(self.space, A, self.solver, self.tol)
        return self._heat[key]

    def potential_system(self, sigma_star: np.ndarray) -> DirichletSystem:
        A = assemble_weighted_stiffness(self.space, sigma_star)
        return DirichletSystem(self.space, A, self.solver, self.tol)


def _ops(space: FeSpace, ops: Optional[OperatorCache], solver="direct", tol=1e-12) -> OperatorCache:
    return ops if ops is not None else OperatorCache(space, solver, tol)


def _sigma_at_quad(space: FeSpace, problem: ProblemData, u_coeffs: np.ndarray) -> np.ndarray:
    return problem.sigma(space.values_at_quad(u_coeffs))


def _boundary_values(space: FeSpace, field, t: float) -> np.ndarray:
    xb = space.mesh.nodes[space.boundary_dofs]
    return np.asarray(field(xb[:, 0], xb[:, 1], t), dtype=float)


def potential_solve(
    space: FeSpace,
    sigma_star: np.ndarray,
    g_at_t,
    f2_at_t,
    *,
    ops: Optional[OperatorCache] = None,
    solver: str = "direct",
    tol: float = 1e-12,
) -> np.ndarray:
    """Solve the discrete potential equation for given conductivity values.

    ``(sigma* grad Phi_h, grad xi) = (f2, xi)`` for all interior test
    functions, with ``Phi_h`` equal to the nodal interpolant of ``g`` on the
    boundary.  ``g_at_t`` and ``f2_at_t`` are spatial callables at the time
    level being solved.
    """
    ops = _ops(space, ops, solver, tol)
    system = ops.potential_system(sigma_star)
    b = assemble_load(space, f2_at_t)
    xb = space.mesh.nodes[space.boundary_dofs]
    g = np.asarray(g_at_t(xb[:, 0], xb[:, 1]), dtype=float)
    g = np.broadcast_to(g, (space.boundary_dofs.size,)).copy()
    return system.solve(b, g)


def temperature_solve_bdf2(
    space: FeSpace,
    u_nm1: np.ndarray,
    u_nm2: np.ndarray,
    phi_n: np.ndarray,
    sigma_star: np.ndarray,
    f1_at_tn,
    tau: float,
    *,
    ops: Optional[OperatorCache] = None,
    solver: str = "direct",
    tol: float = 1e-12,
) -> np.ndarray:
    """One BDF2 temperature solve with known potential and conductivity.

    Solves ``(D_tau U^n, xi) + (grad U^n, grad xi) = (sigma* |grad Phi^n|^2 +
    f1, xi)`` for the homogeneous-Dirichlet temperature, i.e. the SPD system
    ``(3/(2 tau)) Mass + Stiffness`` against the history-dependent right-hand
    side.
    """
    ops = _ops(space, ops, solver, tol)
    joule = assemble_joule_load(space, sigma_star, phi_n)
    b1 = assemble_load(space, f1_at_tn)
    rhs = ops.mass @ ((4.0 * u_nm1 - u_nm2) / (2.0 * tau)) + joule + b1
    system = ops.heat_system(1.5 / tau)
    zero = np.zeros(space.boundary_dofs.size)
    return system.solve(rhs, zero)


# ----------------------------------------------------------------------------
# Steps.  Each maps the state at level n to the state at level n+1; sources
# and boundary data are evaluated at the new time.
# ----------------------------------------------------------------------------


def _potential_at(space, problem, ops, sigma_star, t, record=None):
    system = ops.potential_system(sigma_star)
    b = assemble_load(space, lambda x, y: problem.f2(x, y, t))
    g = _boundary_values(space, problem.exact_phi, t)
    phi = system.solve(b, g)
    if record is not None:
        record["res_phi"] = system.residual(phi, b)
    return phi


def _temperature_at(space, problem, ops, alpha, mass_history, joule, t, record=None):
    b1 = assemble_load(space, lambda x, y: problem.f1(x, y, t))
    rhs = ops.mass @ mass_history + joule + b1
    system = ops.heat_system(alpha)
    u = system.solve(rhs, np.zeros(space.boundary_dofs.size))
    if record is not None:
        record["res_u"] = system.residual(u, rhs)
    return u


def euler_step(
    state: TimeState,
    space: FeSpace,
    problem: ProblemData,
    tau: float,
    ops: Optional[OperatorCache] = None,
    record: Optional[dict] = None,
) -> TimeState:
    """First-order step: conductivity frozen at the previous level."""
    ops = _ops(space, ops)
    t_new = (state.n + 1) * tau
    sigma_star = _sigma_at_quad(space, problem, state.u_n)
    if record is not None:
        record["sigma_star_min"] = float(sigma_star.min())
    phi_new = _potential_at(space, problem, ops, sigma_star, t_new, record)
    joule = assemble_joule_load(space, sigma_star, phi_new)
    u_new = _temperature_at(
        space, problem, ops, 1.0 / tau, state.u_n / tau, joule, t_new, record
    )
    return state.advanced(u_new, phi_new, tau)


def euler_init(
    space: FeSpace,
    problem: ProblemData,
    tau: float,
    ops: Optional[OperatorCache] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Starting step: implicit Euler from the interpolated initial datum.

    Returns ``(U^1, Phi^1)``, where the potential is solved with conductivity
    ``sigma(U^0)`` at the first time level and the temperature update is one
    backward Euler step including the Joule load.
    """
    u0 = interpolate_nodal(space, problem.exact_u, 0.0)
    state = TimeState(n=0, t=0.0, u_n=u0)
    state = euler_step(state, space, problem, tau, ops)
    return state.u_n, state.phi_n


def bdf2_step(
    state: TimeState,
    space: FeSpace,
    problem: ProblemData,
    tau: float,
    ops: Optional[OperatorCache] = None,
    record: Optional[dict] = None,
) -> TimeState:
    """One decoupled BDF2 step with second-order conductivity extrapolation.

    The potential is solved first with ``sigma* = 2 sigma(U^n) -
    sigma(U^{n-1})`` evaluated at quadrature points, then the temperature is
    advanced with the fresh potential in the Joule term.
    """
    if state.u_nm1 is None:
        raise ValueError("bdf2_step needs two history levels; run the starting step first")
    ops = _ops(space, ops)
    t_new = (state.n + 1) * tau
    sq_n = _sigma_at_quad(space, problem, state.u_n)
    sq_nm1 = _sigma_at_quad(space, problem, state.u_nm1)
    sigma_star = 2.0 * sq_n - sq_nm1
    if record is not None:
        record["sigma_star_min"] = float(sigma_star.min())
    phi_new = _potential_at(space, problem, ops, sigma_star, t_new, record)
    joule = assemble_joule_load(space, sigma_star, phi_new)
    u_new = _temperature_at(
        space,
        problem,
        ops,
        1.5 / tau,
        (4.0 * state.u_n - state.u_nm1) / (2.0 * tau),
        joule,
        t_new,
        record,
    )
    return state.advanced(u_new, phi_new, tau)


def bdf3_step(
    state: TimeState,
    space: FeSpace,
    problem: ProblemData,
    tau: float,
    ops: Optional[OperatorCache] = None,
    record: Optional[dict] = None,
) -> TimeState:
    """One decoupled BDF3 step with third-order conductivity extrapolation.

    ``sigma* = 3 sigma(U^n) - 3 sigma(U^{n-1}) + sigma(U^{n-2})`` and the
    three-step backward difference for the time derivative.
    """
    if state.u_nm2 is None:
        raise ValueError("bdf3_step needs three history levels")
    ops = _ops(space, ops)
    t_new = (state.n + 1) * tau
    sigma_star = (
        3.0 * _sigma_at_quad(space, problem, state.u_n)
        - 3.0 * _sigma_at_quad(space, problem, state.u_nm1)
        + _sigma_at_quad(space, problem, state.u_nm2)
    )
    if record is not None:
        record["sigma_star_min"] = float(sigma_star.min())
    phi_new = _potential_at(space, problem, ops, sigma_star, t_new, record)
    joule = assemble_joule_load(space, sigma_star, phi_new)
    u_new = _temperature_at(
        space,
        problem,
        ops,
        11.0 / (6.0 * tau),
        (18.0 * state.u_n - 9.0 * state.u_nm1 + 2.0 * state.u_nm2) / (6.0 * tau),
        joule,
        t_new,
        record,
    )
    return state.advanced(u_new, phi_new, tau)


def gao_step(
    state: TimeState,
    space: FeSpace,
    problem: ProblemData,
    tau: float,
    ops: Optional[OperatorCache] = None,
    record: Optional[dict] = None,
) -> TimeState:
    """Temperature-first BDF2 step with extrapolated Joule data.

    The temperature update uses ``2 sigma(U^n) |grad Phi^n|^2 -
    sigma(U^{n-1}) |grad Phi^{n-1}|^2`` from past potentials, then the
    potential equation is solved with the new conductivity ``sigma(U^{n+1})``.
    """
    if state.u_nm1 is None or state.phi_nm1 is None:
        raise ValueError("gao_step needs two history levels of both fields")
    ops = _ops(space, ops)
    t_new = (state.n + 1) * tau
    joule = 2.0 * assemble_joule_load(
        space, _sigma_at_quad(space, problem, state.u_n), state.phi_n
    ) - assemble_joule_load(
        space, _sigma_at_quad(space, problem, state.u_nm1), state.phi_nm1
    )
    u_new = _temperature_at(
        space,
        problem,
        ops,
        1.5 / tau,
        (4.0 * state.u_n - state.u_nm1) / (2.0 * tau),
        joule,
        t_new,
        record,
    )
    sigma_new = _sigma_at_quad(space, problem, u_new)
    if record is not None:
        record["sigma_star_min"] = float(sigma_new.min())
    phi_new = _potential_at(space, problem, ops, sigma_new, t_new, record)
    return state.advanced(u_new, phi_new, tau)


def ext1_step(
    state: TimeState,
    space: FeSpace,
    problem: ProblemData,
    tau: float,
    ops: Optional[OperatorCache] = None,
    record: Optional[dict] = None,
) -> TimeState:
    """BDF2 step with only first-order conductivity extrapolation.

    Identical to `bdf2_step` except ``sigma* = sigma(U^n)``; the mismatch
    between the first-order coefficient and the second-order difference
    operator spoils the convergence rate.
    """
    if state.u_nm1 is None:
        raise ValueError("ext1_step needs two history levels")
    ops = _ops(space, ops)
    t_new = (state.n + 1) * tau
    sigma_star = _sigma_at_quad(space, problem, state.u_n)
    if record is not None:
        record["sigma_star_min"] = float(sigma_star.min())
    phi_new = _potential_at(space, problem, ops, sigma_star, t_new, record)
    joule = assemble_joule_load(space, sigma_star, phi_new)
    u_new = _temperature_at(
        space,
        problem,
        ops,
        1.5 / tau,
        (4.0 * state.u_n - state.u_nm1) / (2.0 * tau),
        joule,
        t_new,
        record,
    )
    return state.advanced(u_new, phi_new, tau)


_STEPPERS = {
    "euler": euler_step,
    "bdf2": bdf2_step,
    "bdf3": bdf3_step,
    "gao": gao_step,
    "ext1": ext1_step,
}


def run_simulation(
    config: SchemeConfig,
    problem: ProblemData,
    space: Optional[FeSpace] = None,
) -> tuple[TimeState, list[StepRecord]]:
    """Run one scheme from ``t = 0`` to ``t = T``.

    Builds the mesh and space (unless one is passed in), realizes the time
    step from the tau rule, performs the scheme's starting procedure, then
    steps to the final time.  Returns the final `TimeState` (whose newest
    levels are the fields at ``T``) and the per-step diagnostics trace.
    """
    validate_config(config)
    if space is None:
        mesh = build_mesh(config.M, config.elem_kind)
        space = FeSpace(mesh, config.assembly_points, config.error_points)
    tau, N = resolve_tau(config, space.mesh.h)
    init = config.init or ("exact" if config.scheme == "bdf3" else "euler")

    n_start = {"euler": 0, "bdf2": 1, "ext1": 1, "gao": 1, "bdf3": 2}[config.scheme]
    if N < n_start + 1:
        raise ValueError(
            f"scheme {config.scheme!r} needs at least {n_start + 1} time steps; "
            f"tau rule {config.tau_rule!r} gives N={N}"
        )

    ops = OperatorCache(space, config.solver, config.solver_tol)
    u0 = interpolate_nodal(space, problem.exact_u, 0.0)
    state = TimeState(n=0, t=0.0, u_n=u0)
    trace: list[StepRecord] = []

    def note(record, state):
        trace.append(
            StepRecord(
                n=state.n,
                t=state.t,
                sigma_star_min=record.get("sigma_star_min", np.nan),
                res_phi=record.get("res_phi", np.nan),
                res_u=record.get("res_u", np.nan),
            )
        )

    if config.scheme == "gao":
        # The first temperature-first step consumes two potential levels, so
        # the start-up also solves for the initial potential.
        sigma0 = _sigma_at_quad(space, problem, u0)
        phi0 = _potential_at(space, problem, ops, sigma0, 0.0)
        state = replace(state, phi_n=phi0)

    if config.scheme != "euler":
        if init == "euler":
            record: dict = {}
            state = euler_step(state, space, problem, tau, ops, record)
            note(record, state)
        else:
            u1 = interpolate_nodal(space, problem.exact_u, tau)
            sigma1 = _sigma_at_quad(space, problem, u1)
            phi1 = _potential_at(space, problem, ops, sigma1, tau)
            state = state.advanced(u1, phi1, tau)
        if config.scheme == "bdf3":
            if init == "euler":
                record = {}
                state = bdf2_step(state, space, problem, tau, ops, record)
                note(record, state)
            else:
                u2 = interpolate_nodal(space, problem.exact_u, 2 * tau)
                sigma2 = _sigma_at_quad(space, problem, u2)
                phi2 = _potential_at(space, problem, ops, sigma2, 2 * tau)
                state = state.advanced(u2, phi2, tau)

    stepper = _STEPPERS[config.scheme]
    while state.n < N:
        record = {}
        state = stepper(state, space, problem, tau, ops, record)
        note(record, state)
        if __debug__:
            assert np.all(state.u_n[space.boundary_dofs] == 0.0)
            g = _boundary_values(space, problem.exact_phi, state.t)
            assert np.array_equal(state.phi_n[space.boundary_dofs], g)

    return state, trace
