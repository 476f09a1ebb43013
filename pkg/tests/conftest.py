import math
from functools import lru_cache

import numpy as np
import pytest

from randsurf import _kernels as K
from randsurf.rng import RngStream
from randsurf.surface import sample_uniform_map

# Why the Poisson(log n) total-variation targets fail at n ~ 10^4: the cycle
# count of a uniform permutation of S_2n has mean H_2n ~ log n + log 2 + 0.577,
# an O(1) shift that only vanishes relative to sqrt(log n).  An exact
# computation gives TV ~ 0.17 at n = 10^4, above the thresholds.
POISSON_LOG_N_SHIFT = (
    "finite-n shift: E[cycles of S_2n] = H_2n exceeds log n by log 2 + gamma; "
    "exact TV ~ 0.17 at n = 1e4 (see decisions ledger)"
)


@lru_cache(maxsize=None)
def uniform_map_face_counts(n: int, samples: int, seed: int = 0):
    V = np.empty(samples, dtype=np.int64)
    F = np.empty(samples, dtype=np.int64)
    for i in range(samples):
        lm = sample_uniform_map(n, RngStream(seed, i))
        V[i] = K.count_cycles(lm.sigma)
        F[i] = K.count_cycles(lm.phi)
    return V, F


@pytest.fixture
def gen():
    return np.random.default_rng(12345)


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
