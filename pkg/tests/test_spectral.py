import numpy as np
import pytest
import scipy.linalg as sla

from frontrelax import (
    AssumptionError,
    Grid1D,
    InputError,
    WaveProfile,
    apply_semigroup_L1,
    assemble_L1,
    bistable_model,
    compute_adjoint_zero_mode,
    double_bistable_model,
    eigenvalues_L1,
    exact_bistable_profile,
    project_P0,
    project_Q0,
    resolvent_norm_sweep,
    semigroup_trajectory,
    solve_L1_inverse_Q0,
    solve_profile,
)
from frontrelax.decomposition import column_h1_norms


def flat_profile(grid, c=0.0):
    """Constant zero 'profile' used to probe the bare stencil (f = 0)."""
    zeros = np.zeros((1, grid.node_count))
    return WaveProfile(grid=grid, phi=zeros, phi_prime=zeros,
                       phi_double_prime=zeros, speed=c, tail_rate=1.0)


def zero_model():
    from frontrelax import polynomial_model

    return polynomial_model(1, [], (np.zeros(1), np.zeros(1)), name="zero")


def test_stencil_matches_symbol_on_sine():
    grid = Grid1D(10.0, 2049)
    c = 0.7
    op = assemble_L1(flat_profile(grid, c), zero_model())
    k = 1.3
    g = np.sin(k * grid.nodes)[None, :]
    out = op.apply(g)
    expected = -k**2 * np.sin(k * grid.nodes) + c * k * np.cos(k * grid.nodes)
    interior = slice(1, -1)
    err = np.max(np.abs(out[0, interior] - expected[interior]))
    assert err <= 2.0 * grid.spacing**2 * k**3


def test_constant_in_kernel_without_potential():
    grid = Grid1D(10.0, 257)
    op = assemble_L1(flat_profile(grid, 0.0), zero_model())
    g = np.ones((1, grid.node_count))
    out = op.apply(g)
    assert np.max(np.abs(out[0, 1:-1])) < 1e-12


def test_adjoint_zero_mode_selfadjoint_case():
    # a = 1/2 gives c = 0: psi is proportional to phi' itself, up to the
    # O(h^2) gap between the discrete kernel vector and the sampled phi'
    grid = Grid1D(24.0, 2049)
    model = bistable_model(0.5)
    guess = (model.exact_front.phi(grid.nodes), 0.0)
    prof = solve_profile(model, grid, guess)
    op = assemble_L1(prof, model)
    spec = compute_adjoint_zero_mode(op, prof)
    scale = grid.inner(prof.phi_prime, prof.phi_prime)
    ref = prof.phi_prime / scale
    err = np.max(np.abs(spec.psi - ref)) / np.max(np.abs(ref))
    assert err <= 0.5 * grid.spacing**2


def test_adjoint_zero_mode_drift_conjugation(front, spectral):
    # psi is e^{cz} phi' up to normalization; compare away from the clamped
    # ends where the finite-domain boundary layer lives.  The interior gap
    # is the O(h^2) stencil error.
    grid = front.grid
    z = grid.nodes
    ref = np.exp(front.speed * z)[None, :] * front.phi_prime
    ref = ref / grid.inner(ref, front.phi_prime)
    mask = np.abs(z) <= grid.half_length - 8.0
    err = np.max(np.abs((spectral.psi - ref)[:, mask])) / np.max(np.abs(ref))
    assert err <= 0.5 * grid.spacing**2


def test_normalization_and_gap(spectral):
    assert abs(spectral.normalization_check - 1.0) <= 1e-10
    assert abs(spectral.zero_eigenvalue) <= 1e-6
    assert 0.0 < spectral.gap <= 0.25
    assert spectral.essential_gap == pytest.approx(0.25, abs=1e-12)
    # the clamped-interval matrix sees the absolute spectrum, strictly to
    # the left of the infinite-line essential edge for this drift speed
    assert spectral.matrix_gap > spectral.essential_gap
    assert spectral.adjoint_residual <= 1e-8


def test_double_zero_mode_rejected():
    grid = Grid1D(20.0, 513)
    model = double_bistable_model(0.25)
    guess = (model.exact_front.phi(grid.nodes), model.exact_front.speed)
    prof = solve_profile(model, grid, guess)
    op = assemble_L1(prof, model)
    with pytest.raises(AssumptionError):
        compute_adjoint_zero_mode(op, prof)


def test_projection_identities(front, spectral, rng):
    g = rng.standard_normal((1, front.grid.node_count))
    q = project_Q0(spectral, g, front)
    p = project_P0(spectral, g, front)
    assert np.allclose(p + q, g, atol=1e-14)
    # idempotence and complementarity
    assert np.max(np.abs(project_Q0(spectral, q, front) - q)) <= 1e-12
    assert np.max(np.abs(project_Q0(spectral, p, front))) <= 1e-12
    # phi' is annihilated
    assert np.max(np.abs(project_Q0(spectral, front.phi_prime, front))) <= 1e-10
    # fixed point for psi-orthogonal input
    assert np.max(np.abs(project_Q0(spectral, q, front) - q)) <= 1e-12


def test_projections_commute_with_operator(front, spectral, operator, rng):
    g = rng.standard_normal((1, front.grid.node_count))
    g[:, 0] = g[:, -1] = 0.0
    lhs = operator.apply(project_Q0(spectral, g, front))
    rhs = project_Q0(spectral, operator.apply(g), front)
    h2 = front.grid.spacing**2
    scale = np.max(np.abs(operator.apply(g)))
    assert np.max(np.abs(lhs - rhs)) <= 20.0 * h2 * max(scale, 1.0)


def test_semigroup_identity_and_stationarity(front, operator):
    g = front.phi_prime
    assert np.allclose(apply_semigroup_L1(operator, 0.0, g), g)
    out = apply_semigroup_L1(operator, 2.0, g, dt_target=0.02)
    # the zero mode is stationary to stencil accuracy
    assert np.max(np.abs(out - g)) <= 50.0 * front.grid.spacing**2


def test_semigroup_rejects_negative_time(operator, front):
    with pytest.raises(InputError):
        apply_semigroup_L1(operator, -1.0, front.phi_prime)


def test_semigroup_property(front, operator, spectral, rng):
    g = project_Q0(spectral, rng.standard_normal((1, front.grid.node_count)), front)
    g[:, 0] = g[:, -1] = 0.0
    a = apply_semigroup_L1(operator, 0.5, g, dt_target=2e-3)
    ab = apply_semigroup_L1(operator, 1.0, a, dt_target=2e-3)
    direct = apply_semigroup_L1(operator, 1.5, g, dt_target=2e-3)
    rel = np.max(np.abs(ab - direct)) / np.max(np.abs(direct))
    assert rel <= 2e-2  # first-order propagator tolerance


def test_semigroup_against_dense_exponential():
    grid = Grid1D(16.0, 193)
    model = bistable_model(0.25)
    prof = solve_profile(model, grid, exact_bistable_profile(0.25, grid))
    op = assemble_L1(prof, model)
    spec = compute_adjoint_zero_mode(op, prof)
    rng = np.random.default_rng(5)
    g = project_Q0(spec, rng.standard_normal((1, grid.node_count)), prof)
    g[:, 0] = g[:, -1] = 0.0
    s = 1.0
    stepped = apply_semigroup_L1(op, s, g, dt_target=5e-4)
    interior = op.interior_indices()
    dense = sla.expm(s * op.interior_matrix().toarray())
    exact = np.zeros(grid.node_count)
    exact[interior] = dense @ g.reshape(-1)[interior]
    rel = np.max(np.abs(stepped[0] - exact)) / np.max(np.abs(exact))
    assert rel <= 2e-3


def test_q0_range_decay_slope(front, operator, spectral, rng):
    grid = front.grid
    z = grid.nodes
    s_grid = np.linspace(1.0, 20.0, 10)
    for _ in range(3):
        g = np.zeros((1, grid.node_count))
        for _ in range(4):
            g[0] += rng.standard_normal() * np.exp(
                -((z - rng.uniform(-8, 8)) / rng.uniform(1.5, 4.0)) ** 2)
        g[:, 0] = g[:, -1] = 0.0
        g = project_Q0(spectral, g, front)
        traj = semigroup_trajectory(operator, s_grid, g, dt_target=0.01)
        norms = [float(column_h1_norms(grid, o[..., None])[0]) for o in traj]
        slope = np.polyfit(s_grid, np.log(norms), 1)[0]
        assert slope <= -0.5 * spectral.gap + 0.02


def test_inverse_on_q0_range(front, operator, spectral, rng):
    g = rng.standard_normal((1, front.grid.node_count))
    g[:, 0] = g[:, -1] = 0.0
    h = solve_L1_inverse_Q0(operator, spectral, g, front)
    # defining equation holds on the interior
    lhs = operator.apply(h)
    rhs = project_Q0(spectral, g, front)
    interior = slice(1, -1)
    assert np.max(np.abs((lhs - rhs)[:, interior])) <= 1e-8 * np.max(np.abs(rhs))
    # deflation: psi-component vanishes
    assert abs(front.grid.inner(spectral.psi, h)) <= 1e-10
    # Q0 phi' = 0 gives the zero solution
    h0 = solve_L1_inverse_Q0(operator, spectral, front.phi_prime, front)
    assert np.max(np.abs(h0)) <= 1e-9


def test_radiation_profile_object(front, operator, spectral):
    obj = solve_L1_inverse_Q0(operator, spectral, front.phi_double_prime, front)
    assert np.max(np.abs(obj)) > 0.05  # nonzero shape used by the rate analysis
    assert abs(front.grid.inner(spectral.psi, obj)) <= 1e-10


def test_resolvent_sweep_decay():
    grid = Grid1D(20.0, 385)
    model = bistable_model(0.25)
    prof = solve_profile(model, grid, exact_bistable_profile(0.25, grid))
    op = assemble_L1(prof, model)
    spec = compute_adjoint_zero_mode(op, prof)
    mu = np.geomspace(10.0, 1000.0, 7)
    vals = resolvent_norm_sweep(op, 0.5 * spec.gap, mu)
    assert np.all(np.isfinite(vals))
    slope = np.polyfit(np.log(mu), np.log(vals), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.2)


def test_resolvent_selfadjoint_at_zero_shift():
    # c = 0: L1 is self-adjoint; at mu = 0 the H1 resolvent norm matches
    # 1/dist(-delta1, spectrum)
    grid = Grid1D(20.0, 385)
    model = bistable_model(0.5)
    prof = solve_profile(model, grid, (model.exact_front.phi(grid.nodes), 0.0))
    op = assemble_L1(prof, model)
    spec = compute_adjoint_zero_mode(op, prof)
    eigs = eigenvalues_L1(op).real
    delta1 = 0.5 * spec.gap
    dist = np.min(np.abs(eigs + delta1))
    val = resolvent_norm_sweep(op, delta1, np.array([0.0]))[0]
    # the H1-weight conjugation is not exactly normal, so the operator norm
    # sits slightly above the spectral bound 1/dist
    assert val >= 1.0 / dist - 1e-10
    assert val == pytest.approx(1.0 / dist, rel=0.05)


def test_resolvent_near_singular_warning():
    grid = Grid1D(20.0, 257)
    model = bistable_model(0.25)
    prof = solve_profile(model, grid, exact_bistable_profile(0.25, grid))
    op = assemble_L1(prof, model)
    with pytest.warns(UserWarning, match="nearly on the spectrum"):
        # shift straight through the translational eigenvalue
        resolvent_norm_sweep(op, 0.0, np.array([0.0]))


def test_spectrum_report_payload(spectral):
    payload = spectral.summary()
    assert payload["gap"] == spectral.gap
    assert len(payload["eigenvalues_near_zero_real"]) > 0
