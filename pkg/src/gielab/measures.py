"""Companion entanglement quantifiers: entropy of entanglement, Gaussian
Renyi-2 entanglement (closed form and numeric), logarithmic negativity."""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize

from .errors import InvalidCM, NotPure
from .symplectic import (
    _as_matrix,
    build_symplectic,
    partial_transpose,
    symplectic_eigenvalues,
)

PENALTY = 1e4


def pure_state_squeezing(gamma) -> float:
    """Squeezing parameter r with cosh(2r) = sqrt(det gamma_A) of a pure state."""
    g = _as_matrix(gamma)
    if np.abs(symplectic_eigenvalues(g) - 1).max() > 1e-7:
        raise NotPure("input is not a pure two-mode state")
    return 0.5 * np.arccosh(max(np.sqrt(np.linalg.det(g[:2, :2])), 1.0))


def entropy_of_entanglement_pure(gamma) -> float:
    """Marginal von Neumann entropy of a pure two-mode Gaussian state, in nats."""
    rt = pure_state_squeezing(gamma)
    if rt < 1e-12:
        return 0.0
    ch2, sh2 = np.cosh(rt) ** 2, np.sinh(rt) ** 2
    return ch2 * np.log(ch2) - sh2 * np.log(sh2)


def _ghz_nu(r: float) -> float:
    return np.sqrt(5 + 4 * np.cosh(4 * r)) / 3


def gr2_ghz(r: float) -> float:
    """Closed-form Gaussian Renyi-2 entanglement of the GHZ reduction."""
    if r < 0:
        raise ValueError("squeezing must be nonnegative")
    nu = _ghz_nu(r)
    if nu <= 1 + 1e-9:
        return 0.0
    nu2 = nu * nu
    zeta = 3 * nu2 ** 2 + 6 * nu2 - 1 - np.sqrt((nu2 - 1) ** 3 * (9 * nu2 - 1))
    return 0.5 * np.log(zeta / (8 * nu2))


def gr2_numeric(gamma, seed: int = 7, n_starts: int = 6, maxiter: int = 1500):
    """Gaussian Renyi-2 entanglement by direct minimization.

    Minimizes (1/2) ln det theta_A over pure two-mode CMs theta = S S^T
    with gamma - theta >= 0, the constraint handled by an exact penalty on
    the minimum eigenvalue. Parameterized around the feasible Williamson
    point theta_0 = S_w^{-1} S_w^{-T}, which satisfies gamma - theta_0 =
    S_w^{-1}(D - I)S_w^{-T} >= 0. Returns (value, converged flag).
    """
    g = _as_matrix(gamma)
    if g.shape != (4, 4):
        raise InvalidCM("GR2 is implemented for two-mode states")
    if symplectic_eigenvalues(g).min() < 1 - 1e-9:
        raise InvalidCM("input CM is unphysical")
    rng = np.random.default_rng(seed)
    from .symplectic import williamson

    S_base = williamson(g).S.inv

    def objective(x):
        S = S_base @ build_symplectic(x).m
        theta = S @ S.T
        viol = -min(np.linalg.eigvalsh(g - theta).min(), 0.0)
        return 0.5 * np.log(np.linalg.det(theta[:2, :2])) + PENALTY * viol

    starts = [np.zeros(10)]
    for _ in range(n_starts - 1):
        starts.append(np.concatenate([rng.uniform(0, 2 * np.pi, 4),
                                      rng.uniform(-0.8, 0.8, 2),
                                      rng.uniform(0, 2 * np.pi, 4)]))
    best, ok = np.inf, False
    for x0 in starts:
        res = minimize(objective, x0, method="Nelder-Mead",
                       options=dict(xatol=1e-6, fatol=1e-10, maxiter=maxiter))
        if res.fun < best:
            best, ok = res.fun, bool(res.success)
    return max(best, 0.0), ok


def log_negativity(gamma) -> float:
    """max(0, -ln nu_minus) from the partial-transpose symplectic spectrum."""
    g = _as_matrix(gamma)
    if g.shape != (4, 4):
        raise InvalidCM("logarithmic negativity is implemented for two-mode states")
    if symplectic_eigenvalues(g).min() < 1 - 1e-9:
        raise InvalidCM("input CM is unphysical")
    nu_min = symplectic_eigenvalues(partial_transpose(g, [1])).min()
    return max(0.0, -np.log(nu_min))
