import numpy as np
import pytest

from spinquad.hamiltonian import CenterParams
from spinquad.kinetics import RateParams
from spinquad.odmr import DriveParams
from spinquad.spin_algebra import make_spin_operators


@pytest.fixture(scope="session")
def center():
    return CenterParams()


@pytest.fixture(scope="session")
def rates():
    return RateParams()


@pytest.fixture(scope="session")
def drive():
    # Small amplitude keeps every test safely inside the quadratic regime.
    return DriveParams(b1=0.002)


@pytest.fixture(scope="session")
def ops():
    return make_spin_operators()


@pytest.fixture(scope="session")
def quad_op(ops):
    return ops.sz @ ops.sz - 1.25 * np.eye(4)


def random_hermitian(rng, scale=1.0):
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    return scale * (m + m.conj().T) / 2.0


def random_valid_rates(rng):
    return RateParams(
        pump=float(rng.uniform(0.2, 5.0)),
        recomb=float(rng.uniform(1.0, 30.0)),
        gamma_ms=float(rng.uniform(0.05, 3.0)),
        eta_g=float(rng.uniform(-0.9, 0.9)),
        eta_e=float(rng.uniform(-0.9, 0.9)),
        gamma_g=float(rng.uniform(1e-3, 0.5)),
        gamma_e=float(rng.uniform(1e-3, 0.5)),
    )
