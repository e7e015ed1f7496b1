import numpy as np
import pytest

from frontrelax import (
    Grid1D,
    TransverseGrid,
    ProfileInterpolant,
    assemble_L1,
    bistable_model,
    compute_adjoint_zero_mode,
    exact_bistable_profile,
    solve_profile,
)


@pytest.fixture(scope="session")
def bistable():
    return bistable_model(0.25)


@pytest.fixture(scope="session")
def grid_z():
    return Grid1D(24.0, 1025)


@pytest.fixture(scope="session")
def front(bistable, grid_z):
    return solve_profile(bistable, grid_z, exact_bistable_profile(0.25, grid_z))


@pytest.fixture(scope="session")
def operator(front, bistable):
    return assemble_L1(front, bistable)


@pytest.fixture(scope="session")
def spectral(operator, front):
    return compute_adjoint_zero_mode(operator, front)


@pytest.fixture(scope="session")
def interpolant(front, bistable):
    return ProfileInterpolant(front, bistable)


@pytest.fixture(scope="session")
def grid_eta():
    return TransverseGrid(1, 16.0, 256)


@pytest.fixture(scope="session")
def grid_eta_2d():
    return TransverseGrid(2, 16.0, 128)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


# -- session-scoped experiment runs shared by the acceptance criteria --------


@pytest.fixture(scope="session")
def acceptance_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.fixture(scope="session")
def rates_run(acceptance_dir):
    """The relaxation-rate run of the acceptance suite (minutes)."""
    from frontrelax import run_experiment

    return run_experiment({
        "kind": "relaxation_rates",
        "seed": 7,
        "out": str(acceptance_dir / "relaxation_rates"),
    })


@pytest.fixture(scope="session")
def sharpness_run(acceptance_dir):
    """The mean-zero contrast run of the acceptance suite (minutes)."""
    from frontrelax import run_experiment

    return run_experiment({
        "kind": "profile_sharpness",
        "seed": 7,
        "out": str(acceptance_dir / "profile_sharpness"),
    })
