import numpy as np
import pytest

from plateau_lab.ensembles import RngStream, haar_unitary


@pytest.fixture
def gen():
    return np.random.default_rng(1234)


def random_state(n, gen):
    v = gen.standard_normal(2**n) + 1j * gen.standard_normal(2**n)
    return v / np.linalg.norm(v)


def random_density(n, gen):
    d = 2**n
    g = gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def ginibre(d, gen):
    return (gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))) / np.sqrt(2)


def random_unitary(d, gen):
    z = ginibre(d, gen)
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))
