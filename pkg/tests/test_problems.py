"""Problem builders: assembly correctness, refinement, Stokes structure."""

import numpy as np
import pytest

import partialcrit as pc


# ------------------------------------------------------------ nonlinearity

def test_pointwise_zero():
    pw = pc.make_pointwise(pc.NonlinearitySpec.zero(), arg_dim=2)
    x = np.ones((5, 2))
    assert np.all(pw.F(x, x) == 0.0)
    assert np.all(pw.f1(x, x) == 0.0)
    assert pw.growth == (0.0, 0.0, 0.0)


def test_pointwise_quadratic_gradients():
    spec = pc.NonlinearitySpec.quadratic(0.3, -0.5, 0.2, 1.1)
    pw = pc.make_pointwise(spec, arg_dim=1)
    x = np.array([[1.0], [2.0]])
    y = np.array([[0.5], [-1.0]])
    f = pw.F(x, y)
    expect = 0.3 * x[:, 0]**2 - 0.5 * x[:, 0] * y[:, 0] + 0.2 * y[:, 0]**2 \
        + 1.1 * x[:, 0]
    assert np.allclose(f, expect)
    assert np.allclose(pw.f1(x, y), 0.6 * x - 0.5 * y + 1.1)
    assert np.allclose(pw.f2(x, y), -0.5 * x + 0.4 * y)
    assert np.allclose(pw.monotony, [[0.6, 0.5], [0.5, 0.0]])


def test_pointwise_sincos_values_and_bounds():
    pw = pc.make_pointwise(pc.NonlinearitySpec.sincos(0.2), arg_dim=2)
    rng = np.random.default_rng(4)
    x = rng.uniform(-3, 3, (50, 2))
    y = rng.uniform(-3, 3, (50, 2))
    f = pw.F(x, y)
    assert np.allclose(f, 0.2 * np.sum(np.sin(x) * np.cos(y), axis=1))
    assert np.max(np.abs(f)) <= 0.4 + 1e-12  # d * eps
    assert pw.growth == (0.0, 0.0, 0.4)
    # gradients against central differences
    h = 1e-6
    for j in range(2):
        dx = np.zeros_like(x)
        dx[:, j] = h
        fd = (pw.F(x + dx, y) - pw.F(x - dx, y)) / (2 * h)
        assert np.allclose(fd, pw.f1(x, y)[:, j], atol=1e-8)


def test_pointwise_custom_dimension_checked():
    pw = pc.make_pointwise(pc.NonlinearitySpec.sincos(0.1), arg_dim=1)
    spec = pc.NonlinearitySpec.custom(pw)
    with pytest.raises(ValueError):
        pc.make_pointwise(spec, arg_dim=2)
    assert pc.make_pointwise(spec, arg_dim=1) is pw


def test_nonlinearity_spec_validation():
    with pytest.raises(ValueError):
        pc.NonlinearitySpec(kind="bogus")
    with pytest.raises(ValueError):
        pc.NonlinearitySpec(kind="custom")
    with pytest.raises(ValueError):
        pc.NonlinearitySpec.sincos(-0.1)


# ----------------------------------------------------------------- builders

def test_spec_invariants():
    nl = pc.NonlinearitySpec.zero()
    with pytest.raises(ValueError):
        pc.DirichletSpec(dims=3, n_per_dim=5, lengths=(1, 1, 1), nonlinearity=nl)
    with pytest.raises(ValueError):
        pc.DirichletSpec(dims=1, n_per_dim=2, lengths=(1.0,), nonlinearity=nl)
    with pytest.raises(ValueError):
        pc.DirichletSpec(dims=1, n_per_dim=5, lengths=(-1.0,), nonlinearity=nl)
    with pytest.raises(ValueError):
        pc.DirichletSpec(dims=1, n_per_dim=5, lengths=(1.0,),
                         potential_c=-0.5, nonlinearity=nl)
    with pytest.raises(ValueError):
        pc.StokesSpec(n_per_dim=4, lengths=(1.0, 1.0), mu_coeff=1.0)
    with pytest.raises(ValueError):
        pc.StokesSpec(n_per_dim=7, lengths=(1.0, 1.0), mu_coeff=0.0)
    with pytest.raises(ValueError):
        pc.build_scalar(0.0, nl)


def test_dirichlet_1d_stiffness_entries():
    spec = pc.DirichletSpec(dims=1, n_per_dim=3, lengths=(1.0,),
                            potential_c=2.0,
                            nonlinearity=pc.NonlinearitySpec.zero())
    system = pc.build_dirichlet(spec)
    h = 0.25
    dense = system.space.operator.as_dense()
    expect = (1.0 / h) * (np.diag([2.0, 2.0, 2.0])
                          + np.diag([-1.0, -1.0], 1)
                          + np.diag([-1.0, -1.0], -1)) + 2.0 * h * np.eye(3)
    assert np.allclose(dense, expect, atol=1e-14)
    assert np.allclose(system.space.mass_weights, h)


def test_dirichlet_2d_matches_kron_assembly():
    spec = pc.DirichletSpec(dims=2, n_per_dim=3, lengths=(1.0, 2.0),
                            nonlinearity=pc.NonlinearitySpec.zero())
    system = pc.build_dirichlet(spec)
    hx, hy = 0.25, 0.5
    d = (1.0 / hx**2) * (np.diag([-2.0] * 3) + np.diag([1.0, 1.0], 1)
                         + np.diag([1.0, 1.0], -1))
    dyy = (1.0 / hy**2) * (np.diag([-2.0] * 3) + np.diag([1.0, 1.0], 1)
                           + np.diag([1.0, 1.0], -1))
    lap = np.kron(np.eye(3), d) + np.kron(dyy, np.eye(3))
    assert np.allclose(system.space.operator.as_dense(), -hx * hy * lap,
                       atol=1e-13)


def test_embedding_refinement_is_second_order():
    # eigenvalue error of the discrete Laplacian scales like h^2
    errs = []
    for n in (15, 31, 63):
        spec = pc.DirichletSpec(dims=1, n_per_dim=n, lengths=(1.0,),
                                nonlinearity=pc.NonlinearitySpec.zero())
        system = pc.build_dirichlet(spec)
        c = pc.embedding_constant(system.space)
        errs.append(abs(c - 1.0 / np.pi))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.5)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.5)


def test_solution_refinement_on_shared_nodes():
    # nested grids share nodes; differences against the finest level
    # shrink at second order
    solutions = {}
    for n in (15, 31, 63):
        spec = pc.DirichletSpec(dims=1, n_per_dim=n, lengths=(1.0,),
                                nonlinearity=pc.NonlinearitySpec.sincos(0.5))
        pair, _ = pc.run_scheme(pc.build_dirichlet(spec))
        assert pair.converged
        solutions[n] = pair.u_star.coeffs

    # node x_i of the n=15 grid is index 2i+1 on n=31, 4i+3 on n=63
    u15, u31, u63 = solutions[15], solutions[31], solutions[63]
    shared_31 = u31[1::2]
    shared_63 = u63[3::4]
    assert shared_31.shape == u15.shape
    assert shared_63.shape == u15.shape
    e15 = np.max(np.abs(u15 - shared_63))
    e31 = np.max(np.abs(shared_31 - shared_63))
    ratio = e15 / e31
    assert 2.5 <= ratio <= 6.0


def test_scalar_builder_closed_form_residual(scalar_linear):
    # one unknown: A = [[2]], so Nu(u, v) = (0.2 v + 1) / 2
    space = scalar_linear.space
    u = space.wrap(np.array([0.3]))
    v = space.wrap(np.array([-0.2]))
    nu = scalar_linear.eval_Nu(u, v)
    assert nu.coeffs[0] == pytest.approx((0.2 * -0.2 + 1.0) / 2.0, rel=1e-12)
    nv = scalar_linear.eval_Nv(u, v)
    assert nv.coeffs[0] == pytest.approx((0.2 * 0.3) / 2.0, rel=1e-12)


# ------------------------------------------------------------------- stokes

def test_stokes_operator_spd_across_viscosities(rng):
    for mu in (0.1, 1.0, 10.0):
        spec = pc.StokesSpec(n_per_dim=7, lengths=(1.0, 1.0), mu_coeff=mu)
        system, _ = pc.build_stokes_manufactured(spec)
        dense = system.space.operator.as_dense()
        assert np.allclose(dense, dense.T, atol=1e-12)
        for _ in range(8):
            x = rng.standard_normal(dense.shape[0])
            assert x @ dense @ x > 0.0


def test_stokes_theta_increases_with_viscosity():
    thetas = []
    for mu in (0.1, 1.0, 10.0):
        spec = pc.StokesSpec(n_per_dim=7, lengths=(1.0, 1.0), mu_coeff=mu)
        system, _ = pc.build_stokes_manufactured(spec)
        thetas.append(system.space.operator.theta)
    assert thetas[0] < thetas[1] < thetas[2]


def test_velocity_field_is_discretely_divergence_free(stokes_17, stokes_spec,
                                                      solved):
    pair, _ = solved["stokes_17"]
    vx, vy = pc.reconstruct_velocity(pair.u_star, stokes_spec)
    div = pc.discrete_divergence(vx, vy, stokes_spec)
    assert np.max(np.abs(div)) <= 1e-13
    # boundary velocities vanish
    assert np.all(vx[0, :] == 0.0) and np.all(vx[-1, :] == 0.0)
    assert np.all(vy[:, 0] == 0.0) and np.all(vy[:, -1] == 0.0)
    assert np.all(vx[:, 0] == 0.0) and np.all(vy[0, :] == 0.0)


def test_manufactured_stokes_recovers_exact_pair(stokes_spec):
    system, (u_star, v_star) = pc.build_stokes_manufactured(stokes_spec)
    pair, _ = pc.run_scheme(system)
    assert pair.converged
    err_u = pc.norm_a(pair.u_star - u_star, system.space)
    err_v = pc.norm_a(pair.v_star - v_star, system.space)
    assert max(err_u, err_v) <= 1e-6


def test_velocity_reconstruction_shape_checks(stokes_spec):
    with pytest.raises(ValueError):
        pc.reconstruct_velocity(pc.HVector(np.zeros(10), "short"), stokes_spec)
    with pytest.raises(ValueError):
        pc.discrete_divergence(np.zeros((3, 3)), np.zeros((3, 3)), stokes_spec)


def test_stokes_curl_matches_analytic_gradient(stokes_17, rng):
    # the lifted gradients are exact partial derivatives of eval_N
    space = stokes_17.space
    u = space.wrap(0.1 * rng.standard_normal(space.dim))
    v = space.wrap(0.1 * rng.standard_normal(space.dim))
    err = pc.fd_gradient_check(stokes_17, u, v, step=1e-4, n_dirs=4)
    assert err <= 1e-6
