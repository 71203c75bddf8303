"""Shared fixtures: annealed reference states reused across test modules.

Session scope keeps the integration cost paid once; every consumer treats the
states as read-only.
"""

import numpy as np
import pytest

from shadowanneal.dynamics import (
    AffineHamiltonian,
    IntegratorConfig,
    NoiseSpec,
    integrate,
)
from shadowanneal.linalg import ground_state_energy
from shadowanneal.model import (
    DriverParams,
    XxzParams,
    build_all_regions,
    build_driver,
    build_local_terms,
    build_problem,
    initial_state,
)


class AnnealCase:
    """One annealed state bundled with its problem context."""

    def __init__(self, n: int, noise_rate: float, t_final: float, seed: int,
                 dt: float = 0.01):
        self.n_qubits = n
        self.params = XxzParams(n_qubits=n)
        self.h_p = build_problem(self.params)
        self.terms = build_local_terms(self.params)
        self.driver = DriverParams.from_seed(n, seed)
        self.h_d = build_driver(self.driver)
        self.e_g = ground_state_energy(self.h_p)
        ham = AffineHamiltonian(h_start=self.h_d, h_end=self.h_p, t_final=t_final)
        result = integrate(ham, initial_state(self.driver), t_final,
                           NoiseSpec(rate=noise_rate), IntegratorConfig(dt=dt))
        self.state = result.state

    def regions(self, w: int):
        return build_all_regions(self.n_qubits, w)


@pytest.fixture(scope="session")
def annealed_n6():
    return AnnealCase(6, noise_rate=0.0025, t_final=20.0, seed=1)


@pytest.fixture(scope="session")
def annealed_n7():
    return AnnealCase(7, noise_rate=0.0025, t_final=20.0, seed=1)
