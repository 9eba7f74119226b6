"""Time-stepping schemes: step resolution, algebraic identities, step-level
structure (decoupling, degeneracies), and the dense reference step."""

from dataclasses import replace

import numpy as np
import pytest

import _dense_oracle as oracle
from thermistor_fem import (
    FeSpace,
    SchemeConfig,
    TimeState,
    bdf2_step,
    bdf3_step,
    build_mesh,
    d_tau,
    euler_init,
    ext1_step,
    gao_step,
    interpolate_nodal,
    l2_error,
    make_problem,
    potential_solve,
    resolve_tau,
    run_simulation,
    validate_config,
)
from thermistor_fem.manufactured import exact_phi, exact_u, sigma, source_f2


def cfg(**kw):
    base = dict(scheme="bdf2", M=4, elem_kind="tri", T=1.0, tau_rule="fixed:0.25")
    base.update(kw)
    return SchemeConfig(**base)


# ----------------------------------------------------------------------------
# Configuration and step resolution
# ----------------------------------------------------------------------------


def test_resolve_tau_fixed_divides_t_evenly():
    tau, N = resolve_tau(cfg(tau_rule="fixed:0.3"), h=0.1)
    assert (tau, N) == (0.25, 4)
    # no spurious extra step from floating point: 1.0 / 0.1 stays at N = 10
    tau, N = resolve_tau(cfg(tau_rule="fixed:0.1"), h=0.1)
    assert (tau, N) == (0.1, 10)


def test_resolve_tau_mesh_coupled_rules():
    h = 0.25
    tau, N = resolve_tau(cfg(tau_rule="sqrt-h"), h=h)
    assert (tau, N) == (0.5, 2)
    tau, N = resolve_tau(cfg(tau_rule="equal-h"), h=h)
    assert (tau, N) == (0.25, 4)


def test_resolve_tau_step_never_exceeds_horizon():
    tau, N = resolve_tau(cfg(T=0.1, tau_rule="fixed:0.7"), h=0.1)
    assert (tau, N) == (0.1, 1)


@pytest.mark.parametrize(
    "bad",
    [
        dict(scheme="leapfrog"),
        dict(elem_kind="hex"),
        dict(M=5),
        dict(M=0),
        dict(M=2.0),
        dict(T=0.0),
        dict(T=-1.0),
        dict(solver="gmres"),
        dict(init="taylor"),
        dict(tau_rule="weekly"),
        dict(tau_rule="fixed:zero"),
        dict(tau_rule="fixed:-0.1"),
        dict(tau_rule="fixed:0"),
    ],
)
def test_validate_config_rejects_bad_values(bad):
    with pytest.raises(ValueError):
        validate_config(cfg(**bad))


def test_run_simulation_validates_first():
    with pytest.raises(ValueError):
        run_simulation(cfg(M=3), make_problem())


# ----------------------------------------------------------------------------
# The backward-difference operator and its energy identity
# ----------------------------------------------------------------------------


def test_d_tau_formula():
    rng = np.random.default_rng(0)
    a, b, c = rng.standard_normal((3, 17))
    tau = 0.125
    assert np.array_equal(d_tau(a, b, c, tau), (3 * a - 4 * b + c) / (2 * tau))


def test_bdf2_energy_identity_telescopes():
    # G-stability of the two-step backward difference: testing D_tau u^n
    # against u^n itself telescopes into a difference of positive "energies"
    # plus a positive dissipation term,
    #
    #   2 tau (D_tau u^n, u^n) = E(u^n, u^{n-1}) - E(u^{n-1}, u^{n-2})
    #                            + 0.5 |u^n - 2 u^{n-1} + u^{n-2}|^2,
    #   E(a, b) = 0.5 (|a|^2 + |2a - b|^2).
    #
    # This is the structural reason the scheme is unconditionally stable, and
    # it must hold exactly (to rounding) for arbitrary sequences.
    rng = np.random.default_rng(42)
    m, levels = 60, 9
    u = rng.standard_normal((levels, m))
    tau = 0.05

    def energy(a, b):
        return 0.5 * (a @ a + (2 * a - b) @ (2 * a - b))

    lhs_total = 0.0
    for n in range(2, levels):
        lhs = 2 * tau * (d_tau(u[n], u[n - 1], u[n - 2], tau) @ u[n])
        jump = u[n] - 2 * u[n - 1] + u[n - 2]
        rhs = energy(u[n], u[n - 1]) - energy(u[n - 1], u[n - 2]) + 0.5 * (jump @ jump)
        assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))
        lhs_total += lhs

    dissipation = sum(
        0.5 * ((u[n] - 2 * u[n - 1] + u[n - 2]) @ (u[n] - 2 * u[n - 1] + u[n - 2]))
        for n in range(2, levels)
    )
    rhs_total = energy(u[-1], u[-2]) - energy(u[1], u[0]) + dissipation
    assert abs(lhs_total - rhs_total) < 1e-12 * max(1.0, abs(lhs_total))


# ----------------------------------------------------------------------------
# One step against the dense reference implementation
# ----------------------------------------------------------------------------


@pytest.mark.parametrize("kind", ["tri", "quad"])
def test_bdf2_step_matches_dense_reference(kind):
    space = FeSpace(build_mesh(8, kind))
    problem = make_problem()
    tau = 0.1
    u_nm1 = interpolate_nodal(space, exact_u, 0.1)
    u_n = interpolate_nodal(space, exact_u, 0.2)
    state = TimeState(n=2, t=0.2, u_n=u_n, u_nm1=u_nm1)
    new = bdf2_step(state, space, problem, tau)
    u_ref, phi_ref = oracle.oracle_bdf2_step(space.mesh, problem, u_n, u_nm1, tau, 0.3)
    assert np.abs(new.u_n - u_ref).max() < 1e-9
    assert np.abs(new.phi_n - phi_ref).max() < 1e-9


# ----------------------------------------------------------------------------
# Structural properties of the steps
# ----------------------------------------------------------------------------


def history_state(space, tau, n=2):
    """Exact-interpolant history up to level n (newest last)."""
    levels = [interpolate_nodal(space, exact_u, k * tau) for k in range(n + 1)]
    phi = [
        potential_solve(
            space,
            sigma(space.values_at_quad(levels[k])),
            lambda x, y, k=k: exact_phi(x, y, k * tau),
            lambda x, y, k=k: source_f2(x, y, k * tau),
        )
        for k in range(n + 1)
    ]
    return TimeState(
        n=n,
        t=n * tau,
        u_n=levels[n],
        u_nm1=levels[n - 1],
        u_nm2=levels[n - 2],
        phi_n=phi[n],
        phi_nm1=phi[n - 1],
        phi_nm2=phi[n - 2],
    )


@pytest.mark.parametrize("step", [bdf2_step, bdf3_step, ext1_step])
def test_potential_update_is_decoupled_from_the_heat_source(step):
    # Within a step the potential is computed before the temperature, from
    # history only, so perturbing f1 must change U^n but leave Phi^n bitwise
    # identical.
    space = FeSpace(build_mesh(4, "tri"))
    tau = 0.2
    state = history_state(space, tau)
    problem = make_problem()
    shifted = replace(problem, f1=lambda x, y, t: problem.f1(x, y, t) + 50.0)
    a = step(state, space, problem, tau)
    b = step(state, space, shifted, tau)
    assert np.array_equal(a.phi_n, b.phi_n)
    assert np.abs(a.u_n - b.u_n).max() > 1e-3


def test_gao_temperature_is_decoupled_from_the_new_potential():
    # The comparison scheme goes the other way: U^n is computed from old
    # potentials, so perturbing the potential source f2 leaves U^n bitwise
    # identical while Phi^n changes.
    space = FeSpace(build_mesh(4, "tri"))
    tau = 0.2
    state = history_state(space, tau)
    problem = make_problem()
    shifted = replace(problem, f2=lambda x, y, t: problem.f2(x, y, t) + 50.0)
    a = gao_step(state, space, problem, tau)
    b = gao_step(state, space, shifted, tau)
    assert np.array_equal(a.u_n, b.u_n)
    assert np.abs(a.phi_n - b.phi_n).max() > 1e-3


def constant_sigma_problem():
    problem = make_problem()
    return replace(problem, sigma=lambda s: np.full_like(np.asarray(s, dtype=float), 1.3))


def test_constant_conductivity_collapses_extrapolation_orders():
    # With sigma constant, first- and second-order extrapolation coincide, so
    # the workhorse scheme and its first-order variant produce identical steps.
    space = FeSpace(build_mesh(4, "tri"))
    tau = 0.2
    state = history_state(space, tau)
    problem = constant_sigma_problem()
    a = bdf2_step(state, space, problem, tau)
    b = ext1_step(state, space, problem, tau)
    assert np.array_equal(a.u_n, b.u_n)
    assert np.array_equal(a.phi_n, b.phi_n)


def test_stationary_potential_and_constant_sigma_collapse_the_orderings():
    # With sigma constant and potential data independent of time, every
    # potential solve returns the same field, and the temperature-first
    # ordering produces exactly the potential-first trajectory.
    problem = replace(
        constant_sigma_problem(),
        exact_phi=lambda x, y, t: 1.0 + x * y,  # harmonic
        f2=lambda x, y, t: np.zeros_like(np.asarray(x, dtype=float)),
        grad_phi=lambda x, y, t: (y, x),
    )
    a, _ = run_simulation(cfg(scheme="bdf2"), problem)
    b, _ = run_simulation(cfg(scheme="gao"), problem)
    assert np.array_equal(a.u_n, b.u_n)
    assert np.array_equal(a.phi_n, b.phi_n)


@pytest.mark.parametrize(
    "step, needs",
    [
        (bdf2_step, "u_nm1"),
        (ext1_step, "u_nm1"),
        (bdf3_step, "u_nm2"),
        (gao_step, "phi_nm1"),
    ],
)
def test_steps_refuse_to_run_without_history(step, needs):
    space = FeSpace(build_mesh(4, "tri"))
    u0 = interpolate_nodal(space, exact_u, 0.0)
    state = TimeState(n=0, t=0.0, u_n=u0)
    if needs == "phi_nm1":
        state = replace(state, u_nm1=u0, u_nm2=u0)
    elif needs == "u_nm2":
        state = replace(state, u_nm1=u0)
    with pytest.raises(ValueError):
        step(state, space, make_problem(), 0.1)


# ----------------------------------------------------------------------------
# Start-up and full runs
# ----------------------------------------------------------------------------


def test_euler_init_returns_first_level():
    space = FeSpace(build_mesh(8, "tri"))
    tau = 0.05
    u1, phi1 = euler_init(space, make_problem(), tau)
    # first-order accurate but consistent: both fields near the exact ones
    assert l2_error(space, u1, exact_u, tau) < 0.05
    assert l2_error(space, phi1, exact_phi, tau) < 0.01
    assert np.all(u1[space.boundary_dofs] == 0.0)


def test_run_simulation_reaches_final_time_and_traces_every_step():
    problem = make_problem()
    state, trace = run_simulation(cfg(scheme="euler"), problem)
    assert state.n == 4
    assert state.t == pytest.approx(1.0)
    assert [r.n for r in trace] == [1, 2, 3, 4]
    assert [r.t for r in trace] == pytest.approx([0.25, 0.5, 0.75, 1.0])

    state, trace = run_simulation(cfg(scheme="bdf2"), problem)
    assert state.n == 4
    assert [r.n for r in trace] == [1, 2, 3, 4]  # Euler start is recorded too

    state, trace = run_simulation(cfg(scheme="bdf3"), problem)
    assert state.n == 4
    assert [r.n for r in trace] == [3, 4]  # exact start levels are not steps

    state, trace = run_simulation(cfg(scheme="bdf3", init="euler"), problem)
    assert [r.n for r in trace] == [1, 2, 3, 4]


def test_run_simulation_records_solver_and_coefficient_diagnostics():
    _, trace = run_simulation(cfg(scheme="bdf2"), make_problem())
    for record in trace:
        assert 0.9 < record.sigma_star_min <= 2.0
        assert record.res_phi < 1e-10
        assert record.res_u < 1e-10


def test_run_simulation_rejects_horizons_shorter_than_the_startup():
    with pytest.raises(ValueError):
        run_simulation(cfg(scheme="bdf2", tau_rule="fixed:1.0"), make_problem())
    with pytest.raises(ValueError):
        run_simulation(cfg(scheme="bdf3", tau_rule="fixed:0.5"), make_problem())


def test_exact_init_seeds_interpolants():
    problem = make_problem()
    space = FeSpace(build_mesh(4, "tri"))
    config = cfg(scheme="bdf2", init="exact", tau_rule="fixed:0.5")
    state, trace = run_simulation(config, problem, space)
    # one exact level + one bdf2 step
    assert [r.n for r in trace] == [2]
    assert np.array_equal(state.u_nm1, interpolate_nodal(space, exact_u, 0.5))


def test_cg_and_direct_solvers_agree_on_a_full_run():
    problem = make_problem()
    a, _ = run_simulation(cfg(solver="direct"), problem)
    b, _ = run_simulation(cfg(solver="cg", solver_tol=1e-14), problem)
    assert np.abs(a.u_n - b.u_n).max() < 1e-9
    assert np.abs(a.phi_n - b.phi_n).max() < 1e-9


def test_potential_solve_is_second_order_accurate():
    t = 0.4
    errs = []
    for M in (8, 16):
        space = FeSpace(build_mesh(M, "tri"))
        u = interpolate_nodal(space, exact_u, t)
        phi = potential_solve(
            space,
            sigma(space.values_at_quad(u)),
            lambda x, y: exact_phi(x, y, t),
            lambda x, y: source_f2(x, y, t),
        )
        errs.append(l2_error(space, phi, exact_phi, t))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.15)
