import math
import sys

import numpy as np
import pytest

from wvctx.qmath import ket_projector


def random_pure(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return ket_projector(v)


def random_projector(rng, d, rank=None):
    if rank is None:
        rank = int(rng.integers(1, d))
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, _ = np.linalg.qr(m)
    q = q[:, :rank]
    return q @ q.conj().T


def random_density(rng, d):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = m @ m.conj().T
    return rho / np.trace(rho).real


def anomalous_operators():
    """Qubit instance with p_F = 1/5 and weak value -1/2 for E = |1><1|."""
    a = math.pi / 4
    b = math.pi / 4 - math.acos(1 / math.sqrt(5))
    rho = ket_projector([math.cos(a), math.sin(a)])
    Pi = ket_projector([math.cos(b), math.sin(b)])
    E = ket_projector([0, 1])
    return rho, E, Pi


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


@pytest.fixture
def anomalous():
    return anomalous_operators()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
