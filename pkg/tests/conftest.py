"""Shared fixtures: the bundled systems and their converged runs.

Session scope keeps the expensive builds (Stokes especially) to one per
test run; solved pairs are cached alongside so cross-check tests do not
re-solve.
"""

import numpy as np
import pytest

import partialcrit as pc


@pytest.fixture(scope="session")
def scalar_linear():
    # one unknown per side, operator [[2]]; closed form available
    return pc.build_scalar(2.0, pc.NonlinearitySpec.quadratic(0.0, 0.2, 0.0, 1.0))


@pytest.fixture(scope="session")
def scalar_sincos():
    return pc.build_scalar(2.0, pc.NonlinearitySpec.sincos(0.1))


@pytest.fixture(scope="session")
def scalar_stiff():
    # stronger coupling: several outer stages needed, still convergent
    return pc.build_scalar(2.0, pc.NonlinearitySpec.quadratic(0.0, 1.2, 0.0, 1.0))


@pytest.fixture(scope="session")
def sincos_1d():
    spec = pc.DirichletSpec(dims=1, n_per_dim=31, lengths=(1.0,),
                            nonlinearity=pc.NonlinearitySpec.sincos(0.1))
    return pc.build_dirichlet(spec)


@pytest.fixture(scope="session")
def dirichlet_stiff():
    spec = pc.DirichletSpec(dims=1, n_per_dim=31, lengths=(1.0,),
                            nonlinearity=pc.NonlinearitySpec.quadratic(
                                0.0, 4.0, 0.0, 1.0))
    return pc.build_dirichlet(spec)


@pytest.fixture(scope="session")
def sincos_2d():
    spec = pc.DirichletSpec(dims=2, n_per_dim=17, lengths=(1.0, 1.0),
                            nonlinearity=pc.NonlinearitySpec.sincos(0.1))
    return pc.build_dirichlet(spec)


@pytest.fixture(scope="session")
def stokes_spec():
    return pc.StokesSpec(n_per_dim=17, lengths=(1.0, 1.0), mu_coeff=1.0,
                         nonlinearity=pc.NonlinearitySpec.sincos(0.1))


@pytest.fixture(scope="session")
def stokes_17(stokes_spec):
    return pc.build_stokes(stokes_spec)


@pytest.fixture(scope="session")
def bundled(scalar_linear, scalar_sincos, scalar_stiff, sincos_1d,
            dirichlet_stiff, sincos_2d, stokes_17):
    return {
        "scalar_linear": scalar_linear,
        "scalar_sincos": scalar_sincos,
        "scalar_stiff": scalar_stiff,
        "sincos_1d": sincos_1d,
        "dirichlet_stiff": dirichlet_stiff,
        "sincos_2d": sincos_2d,
        "stokes_17": stokes_17,
    }


@pytest.fixture(scope="session")
def solved(bundled):
    out = {}
    for name, system in bundled.items():
        pair, trace = pc.run_scheme(system)
        assert pair.converged, f"bundled system {name} did not converge"
        out[name] = (pair, trace)
    return out


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
