import numpy as np
import pytest

from gielab.states import random_cm


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_local_symplectic(rng):
    """Random single-mode symplectic (rotation-squeeze-rotation)."""
    from gielab.symplectic import build_symplectic

    t1, t2 = rng.uniform(0, 2 * np.pi, 2)
    r = rng.uniform(0, 0.7)
    return build_symplectic([t1, r, t2]).m


def random_two_mode_mixed(rng, nu_max=2.2):
    return random_cm(2, rng, nu_max=nu_max)


def random_rank_one_mixed(rng, nu_max=2.0):
    """Random two-mode CM with exactly one symplectic eigenvalue above 1."""
    from scipy.linalg import block_diag

    from gielab.symplectic import build_symplectic

    p = np.concatenate([rng.uniform(0, 2 * np.pi, 4), rng.uniform(-0.6, 0.6, 2),
                        rng.uniform(0, 2 * np.pi, 4)])
    S = build_symplectic(p).m
    nu = 1 + rng.uniform(0.2, nu_max - 1)
    return S @ np.diag([nu, nu, 1.0, 1.0]) @ S.T
