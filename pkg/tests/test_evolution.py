import numpy as np
import pytest

from frontrelax import (
    ConfigError,
    EvolutionConfig,
    Field,
    Grid1D,
    InputError,
    StabilityError,
    TransverseGrid,
    bistable_model,
    decompose,
    eval_nonlinearities,
    evolve,
    exact_bistable_profile,
    geometric_ladder,
    make_initial_data,
    make_transverse_bump,
    solve_profile,
    step,
)
from frontrelax.decomposition import ProfileInterpolant


@pytest.fixture(scope="module")
def small():
    model = bistable_model(0.25)
    grid_z = Grid1D(30.0, 257)
    grid_y = TransverseGrid(1, 60.0, 64)
    prof = solve_profile(model, grid_z, exact_bistable_profile(0.25, grid_z))
    from frontrelax import assemble_L1, compute_adjoint_zero_mode

    op = assemble_L1(prof, model)
    spec = compute_adjoint_zero_mode(op, prof)
    interp = ProfileInterpolant(prof, model)
    return model, grid_z, grid_y, prof, spec, interp


def zero_field(grid_z, grid_y, m=1):
    return Field(np.zeros((m, grid_z.node_count) + grid_y.shape), grid_z, grid_y)


def test_geometric_ladder():
    times = geometric_ladder(1024.0)
    assert times[0] == 1.0
    assert np.allclose(np.diff(np.log(times)), 0.25 * np.log(2.0))
    assert times[-1] == pytest.approx(1024.0)
    with pytest.raises(InputError):
        geometric_ladder(0.5)


def test_front_is_stationary_over_many_steps(small):
    model, grid_z, grid_y, prof, spec, interp = small
    for scheme in ("strang", "imex1"):
        w = zero_field(grid_z, grid_y)
        for _ in range(10_000):
            w = step(w, prof, model, 0.05, scheme)
        assert np.max(np.abs(w.values)) <= 1e-8


def test_heat_kernel_oracle():
    # f = 0, c = 0: a Gaussian bump follows the heat kernel exactly
    from frontrelax import polynomial_model
    from frontrelax.profile import WaveProfile

    grid_z = Grid1D(30.0, 513)
    grid_y = TransverseGrid(1, 60.0, 128)
    model = polynomial_model(1, [], (np.zeros(1), np.zeros(1)))
    zeros = np.zeros((1, grid_z.node_count))
    prof = WaveProfile(grid=grid_z, phi=zeros, phi_prime=zeros,
                       phi_double_prime=zeros, speed=0.0, tail_rate=1.0)
    yy = grid_y.axis_nodes
    zz = grid_z.nodes
    w0 = np.exp(-zz[:, None] ** 2 / 8.0 - yy[None, :] ** 2 / 8.0)[None]
    w = Field(w0.copy(), grid_z, grid_y)
    t_final, dt = 1.0, 0.01
    for _ in range(int(t_final / dt)):
        w = step(w, prof, model, dt, "strang")
    # exact heat solution: e^{-r^2/s} spreads as s(t) = s(0) + 4t per axis
    s0 = 8.0
    s1 = s0 + 4.0 * t_final
    exact = (s0 / s1) * np.exp(-zz[:, None] ** 2 / s1 - yy[None, :] ** 2 / s1)[None]
    err = np.max(np.abs(w.values - exact))
    assert err <= 2e-3  # O(dt^2) + O(h^2) z-stencil floor


def test_richardson_ratio_first_order(small):
    model, grid_z, grid_y, prof, spec, interp = small
    sigma0 = make_transverse_bump(grid_y, {"kind": "gaussian", "width": 3.0})
    w0 = make_initial_data(prof, spec, sigma0, None, 0.05, grid_y,
                           interpolant=interp)
    t_final = 0.8

    def advance(dt, scheme):
        w = w0
        for _ in range(int(round(t_final / dt))):
            w = step(w, prof, model, dt, scheme)
        return w.values

    # successive step-halving differences: ratio 2^order
    coarse = advance(0.1, "imex1")
    fine = advance(0.05, "imex1")
    finest = advance(0.025, "imex1")
    d1 = np.max(np.abs(coarse - fine))
    d2 = np.max(np.abs(fine - finest))
    assert d1 / d2 == pytest.approx(2.0, rel=0.25)  # first-order splitting

    coarse = advance(0.1, "strang")
    fine = advance(0.05, "strang")
    finest = advance(0.025, "strang")
    d1 = np.max(np.abs(coarse - fine))
    d2 = np.max(np.abs(fine - finest))
    assert d1 / d2 == pytest.approx(4.0, rel=0.3)  # second order


def test_y_translation_equivariance(small):
    model, grid_z, grid_y, prof, spec, interp = small
    rng = np.random.default_rng(8)
    bump = make_transverse_bump(grid_y, {"kind": "gaussian", "width": 4.0})
    w0 = make_initial_data(prof, spec, bump, None, 0.02, grid_y, interpolant=interp)
    shifted0 = Field(np.roll(w0.values, 5, axis=2), grid_z, grid_y)
    a = w0
    b = shifted0
    for _ in range(20):
        a = step(a, prof, model, 0.05, "strang")
        b = step(b, prof, model, 0.05, "strang")
    # the periodic FFT path commutes with cell shifts (to round-off)
    assert np.max(np.abs(np.roll(a.values, 5, axis=2) - b.values)) <= 1e-13


def test_make_initial_data_roundtrip(small):
    model, grid_z, grid_y, prof, spec, interp = small
    eps = 0.01
    sigma0 = make_transverse_bump(grid_y, {"kind": "gaussian", "width": 3.0})
    w0 = make_initial_data(prof, spec, sigma0, None, eps, grid_y, interpolant=interp)
    dec = decompose(prof, spec, w0, interpolant=interp)
    assert np.max(np.abs(dec.sigma - eps * sigma0)) <= 1e-8
    assert np.max(np.abs(dec.v.values)) <= 1e-10
    # zero amplitude gives the zero field
    w_zero = make_initial_data(prof, spec, sigma0, None, 0.0, grid_y,
                               interpolant=interp)
    assert np.max(np.abs(w_zero.values)) == 0.0


def test_make_initial_data_with_radiation(small):
    model, grid_z, grid_y, prof, spec, interp = small
    eps = 0.01
    sigma0 = make_transverse_bump(grid_y, {"kind": "gaussian", "width": 3.0})
    v0 = (np.exp(-((grid_z.nodes - 1.0) / 2.0) ** 2)[None, :, None]
          * np.exp(-(grid_y.axis_nodes / 10.0) ** 2)[None, None, :])
    w0 = make_initial_data(prof, spec, sigma0, v0, eps, grid_y, interpolant=interp)
    dec = decompose(prof, spec, w0, interpolant=interp)
    # v0 is projected columnwise before scaling
    from frontrelax import project_Q0

    expected = eps * project_Q0(spec, v0, prof)
    assert np.max(np.abs(dec.sigma - eps * sigma0)) <= 1e-7
    assert np.max(np.abs(dec.v.values - expected)) <= 1e-7


def test_mean_zero_bump_has_zero_mass(small):
    model, grid_z, grid_y, prof, spec, interp = small
    bump = make_transverse_bump(grid_y, {"kind": "dgaussian", "width": 3.0})
    assert abs(grid_y.integrate(bump)) <= 1e-12
    assert np.max(np.abs(bump)) == pytest.approx(1.0)


def test_admissibility_guard(small):
    model, grid_z, grid_y, prof, spec, interp = small
    sigma0 = make_transverse_bump(grid_y, {"kind": "gaussian", "width": 3.0,
                                           "normalize": "sup"})
    with pytest.raises(InputError):
        make_initial_data(prof, spec, sigma0, None, 0.5, grid_y, interpolant=interp)


def test_blowup_detection(small):
    model, grid_z, grid_y, prof, spec, interp = small
    vals = np.full((1, grid_z.node_count) + grid_y.shape, 11.0)
    vals[:, 0] = vals[:, -1] = 0.0
    w = Field(vals, grid_z, grid_y)
    with pytest.raises(StabilityError):
        step(w, prof, model, 0.05, "strang")


def test_evolution_config_validation(small):
    model, grid_z, grid_y, prof, spec, interp = small
    with pytest.raises(ConfigError):
        EvolutionConfig(dt=-0.1, t_final=10.0)
    with pytest.raises(ConfigError):
        EvolutionConfig(dt=0.1, t_final=10.0, scheme="rk4")
    with pytest.raises(ConfigError):
        EvolutionConfig(dt=0.1, t_final=10.0,
                        snapshot_times=np.array([1.0, 20.0]))
    cfg = EvolutionConfig(dt=0.1, t_final=200.0)
    with pytest.raises(ConfigError):
        cfg.validate_against(grid_y, model)  # horizon (60/6)^2 - 1 = 99
    with pytest.raises(ConfigError):
        EvolutionConfig(dt=5.0, t_final=10.0).validate_against(grid_y, model)


def test_evolve_zero_data_keeps_zero_ledger(small):
    model, grid_z, grid_y, prof, spec, interp = small
    w0 = zero_field(grid_z, grid_y)
    cfg = EvolutionConfig(dt=0.1, t_final=4.0, epsilon=0.0)
    traj = evolve(w0, cfg, prof, model, spec, interpolant=interp)
    tab = traj.ledger_table()
    # the interpolant's periodic seam at the +L node caps the v floor at
    # the tail size e^{-tail_rate L}; sigma stays at the Newton tolerance
    seam = 4.0 * np.exp(-prof.tail_rate * grid_z.half_length)
    assert np.max(tab["sup_sigma"]) <= 1e-10
    assert np.max(tab["sup_v"]) <= seam
    assert np.all(np.diff(traj.times) > 0)


def test_evolve_ledger_sobolev_consistency(small):
    # ||v||_inf is controlled by the columnwise H1_z norm (1D embedding)
    model, grid_z, grid_y, prof, spec, interp = small
    sigma0 = make_transverse_bump(grid_y, {"kind": "gaussian", "width": 3.0})
    w0 = make_initial_data(prof, spec, sigma0, None, 0.02, grid_y,
                           interpolant=interp)
    cfg = EvolutionConfig(dt=0.1, t_final=8.0)
    traj = evolve(w0, cfg, prof, model, spec, interpolant=interp)
    tab = traj.ledger_table()
    embed = 1.0 / np.sqrt(2.0)  # |u|_inf^2 <= |u| |u'| <= (1/2)|u|_H1^2
    assert np.all(tab["sup_v"] <= embed * tab["v_supy_h1z"] + 1e-15)


def test_eval_nonlinearities_zero_radiation(small):
    model, grid_z, grid_y, prof, spec, interp = small
    v = zero_field(grid_z, grid_y)
    sigma = np.full(grid_y.shape, 0.03)
    h_field, n1, n2 = eval_nonlinearities(prof, spec, model, sigma, v, interp)
    assert np.max(np.abs(h_field)) == 0.0
    # constant sigma: no gradient term, no radiation coupling
    assert np.max(np.abs(n2)) <= 1e-12
    assert np.max(np.abs(n1)) <= 1e-12


def test_eval_nonlinearities_coefficients_at_zero_shift(small):
    # K1(0) = -<psi, phi''> equals c/2 exactly for the conjugated adjoint,
    # and K2(0) = 1 by the normalization
    model, grid_z, grid_y, prof, spec, interp = small
    psi_phi2 = grid_z.inner(spec.psi, prof.phi_double_prime)
    assert psi_phi2 == pytest.approx(-prof.speed / 2.0, abs=2e-4)
    denom = grid_z.inner(spec.psi, prof.phi_prime)
    assert denom == pytest.approx(1.0, abs=1e-10)


def test_eval_nonlinearities_quadratic_structure(small):
    model, grid_z, grid_y, prof, spec, interp = small
    rng = np.random.default_rng(4)
    sigma = 0.02 * np.exp(-(grid_y.axis_nodes / 8.0) ** 2)
    base = (np.exp(-(grid_z.nodes / 2.5) ** 2)[None, :, None]
            * np.exp(-(grid_y.axis_nodes / 8.0) ** 2)[None, None, :])
    h1, n11, n21 = eval_nonlinearities(
        prof, spec, model, sigma, Field(1e-3 * base, grid_z, grid_y), interp)
    h2, n12, n22 = eval_nonlinearities(
        prof, spec, model, sigma, Field(2e-3 * base, grid_z, grid_y), interp)
    # H is quadratic in v at leading order
    ratio = np.max(np.abs(h2)) / np.max(np.abs(h1))
    assert ratio == pytest.approx(4.0, rel=0.05)
    # with tiny v the v-coupled part of N2 is dominated by the term linear
    # in v (the shifted-Jacobian coupling)
    _, _, n2_zero = eval_nonlinearities(
        prof, spec, model, sigma, zero_field(grid_z, grid_y), interp)
    _, _, n2_a = eval_nonlinearities(
        prof, spec, model, sigma, Field(1e-5 * base, grid_z, grid_y), interp)
    _, _, n2_b = eval_nonlinearities(
        prof, spec, model, sigma, Field(2e-5 * base, grid_z, grid_y), interp)
    lin1 = np.max(np.abs(n2_a - n2_zero))
    lin2 = np.max(np.abs(n2_b - n2_zero))
    assert lin2 / lin1 == pytest.approx(2.0, rel=0.05)
