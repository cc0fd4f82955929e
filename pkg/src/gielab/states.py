"""State constructors, purifications, conditioning and CM-level channels."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import block_diag
from scipy.optimize import minimize

from .errors import InvalidCM, InvalidDecomposition
from .measurements import Measurement, as_measurement, gaussian_condition
from .symplectic import (
    CovarianceMatrix,
    PHYSICALITY_TOL,
    SIGMA_Z,
    _as_matrix,
    partial_transpose,
    rotation,
    symplectic_eigenvalues,
    symplectic_form,
    williamson,
)

PURITY_TOL = 1e-7


def tmsv_cm(r: float) -> CovarianceMatrix:
    """Two-mode squeezed vacuum: cosh(2r) on the diagonal blocks, sinh(2r) sigma_z off."""
    if r < 0:
        raise ValueError("squeezing must be nonnegative")
    c, s = np.cosh(2 * r), np.sinh(2 * r)
    g = np.block([[c * np.eye(2), s * SIGMA_Z], [s * SIGMA_Z, c * np.eye(2)]])
    return CovarianceMatrix(g)


def ghz_cm(r: float):
    """Three-mode CV GHZ covariance matrix and its two-mode reduction.

    x_pm = (e^{±2r} + 2 e^{∓2r})/3; the three-mode CM is symmetric under
    any mode exchange and pure for all r >= 0.
    """
    if r < 0:
        raise ValueError("squeezing must be nonnegative")
    xp = (np.exp(2 * r) + 2 * np.exp(-2 * r)) / 3
    xm = (np.exp(-2 * r) + 2 * np.exp(2 * r)) / 3
    alpha = np.diag([xp, xm])
    kappa = (xm - xp) * SIGMA_Z
    g3 = np.block([[alpha, kappa, kappa],
                   [kappa, alpha, kappa],
                   [kappa, kappa, alpha]])
    return CovarianceMatrix(g3), CovarianceMatrix(g3[:4, :4])


@dataclass(frozen=True)
class Purification:
    """Block-structured CM of a pure (N+M+R)-mode Gaussian state."""

    n_A: int
    n_B: int
    n_E: int
    gamma_AB: np.ndarray
    gamma_ABE: np.ndarray
    gamma_E: np.ndarray

    @property
    def full(self) -> np.ndarray:
        return np.block([[self.gamma_AB, self.gamma_ABE],
                         [self.gamma_ABE.T, self.gamma_E]])

    @property
    def n_AB(self) -> int:
        return self.n_A + self.n_B

    def is_pure(self, tol: float = PURITY_TOL) -> bool:
        return bool(np.abs(symplectic_eigenvalues(self.full) - 1).max() < tol)

    @staticmethod
    def from_pure_cm(gamma, n_A: int, n_B: int) -> "Purification":
        """Treat an explicit pure CM as a purification; trailing modes are E."""
        g = _as_matrix(gamma)
        n = g.shape[0] // 2
        n_E = n - n_A - n_B
        if n_E < 0:
            raise InvalidCM("mode split exceeds the CM size")
        if np.abs(symplectic_eigenvalues(g) - 1).max() > PURITY_TOL:
            raise InvalidCM("purification CM is not pure")
        k = 2 * (n_A + n_B)
        return Purification(n_A=n_A, n_B=n_B, n_E=n_E,
                            gamma_AB=g[:k, :k], gamma_ABE=g[:k, k:], gamma_E=g[k:, k:])


def minimal_purification(gamma, n_A: int = 1) -> Purification:
    """Minimal purification of a physical CM.

    E carries one mode per symplectic eigenvalue above 1; gamma_E is the
    direct sum of nu_i * I and the AB-E block follows from the Williamson
    symplectic of gamma_AB with sqrt(nu_i^2 - 1) sigma_z couplings.
    """
    g = _as_matrix(gamma)
    n = g.shape[0] // 2
    if symplectic_eigenvalues(g).min() < 1 - PHYSICALITY_TOL:
        raise InvalidCM("cannot purify an unphysical CM")
    dec = williamson(g)
    nu = dec.nu
    R = int(np.sum(nu > 1 + PURITY_TOL))
    if R == 0:
        return Purification(n_A=n_A, n_B=n - n_A, n_E=0, gamma_AB=g.copy(),
                            gamma_ABE=np.zeros((2 * n, 0)), gamma_E=np.zeros((0, 0)))
    gamma_E = block_diag(*[nu[i] * np.eye(2) for i in range(R)])
    top = block_diag(*[np.sqrt(nu[i] ** 2 - 1) * SIGMA_Z for i in range(R)])
    blk = np.vstack([top, np.zeros((2 * (n - R), 2 * R))])
    gamma_ABE = dec.S.inv @ blk
    return Purification(n_A=n_A, n_B=n - n_A, n_E=R,
                        gamma_AB=g.copy(), gamma_ABE=gamma_ABE, gamma_E=gamma_E)


def conditional_cm(pi: Purification, meas_E) -> np.ndarray:
    """CM of the AB state after a Gaussian measurement on the purifying modes."""
    if pi.n_E == 0:
        return pi.gamma_AB.copy()
    modes_E = list(range(pi.n_AB, pi.n_AB + pi.n_E))
    return gaussian_condition(pi.full, modes_E, meas_E)


def outcome_ccm(pi: Purification, meas_A, meas_B, meas_E) -> np.ndarray:
    """Classical covariance matrix of the joint measurement-outcome distribution.

    Assembled with respect to the AB|E splitting; all three measurements
    must be finite seed CMs here.
    """
    GA = as_measurement(meas_A, pi.n_A)
    GB = as_measurement(meas_B, pi.n_B)
    GE = as_measurement(meas_E, pi.n_E)
    for m, name in ((GA, "A"), (GB, "B"), (GE, "E")):
        if m.seed is None and m.n_modes:
            raise InvalidCM(f"outcome CCM requires a finite seed CM on {name}")
    alpha = pi.gamma_AB + block_diag(GA.seed, GB.seed)
    delta = pi.gamma_E + (GE.seed if pi.n_E else np.zeros((0, 0)))
    return np.block([[alpha, pi.gamma_ABE], [pi.gamma_ABE.T, delta]])


def ppt_separable(gamma, tol: float = PHYSICALITY_TOL) -> bool:
    """Partial-transpose criterion; necessary and sufficient for 1x1 modes."""
    g = _as_matrix(gamma)
    if g.shape != (4, 4):
        raise InvalidCM("PPT test implemented for two-mode CMs")
    if symplectic_eigenvalues(g).min() < 1 - tol:
        raise InvalidCM("PPT test requires a physical CM")
    return bool(symplectic_eigenvalues(partial_transpose(g, [1])).min() >= 1 - tol)


@dataclass(frozen=True)
class SeparableDecomposition:
    """gamma = gamma_A_pure ⊕ gamma_B_pure + Q with Q >= 0.

    lambdas/vcols hold the strictly positive eigenpairs of Q that encode
    the classical displacement correlations of the separable state.
    """

    gamma_A_pure: np.ndarray
    gamma_B_pure: np.ndarray
    Q: np.ndarray
    lambdas: np.ndarray
    vcols: np.ndarray


def _pure_single_mode(r: float, theta: float) -> np.ndarray:
    return rotation(theta) @ np.diag([np.exp(2 * r), np.exp(-2 * r)]) @ rotation(theta).T


def find_separable_decomposition(gamma, grid: int = 9, seed: int = 0,
                                 psd_tol: float = 1e-8) -> Optional[SeparableDecomposition]:
    """Search for pure local CMs with gamma - gA ⊕ gB >= 0.

    Coarse grid over two (squeezing, angle) pairs followed by simplex
    refinement of the minimum eigenvalue of Q. Returns None when the
    search fails, which is not a separability verdict.
    """
    g = _as_matrix(gamma)
    if g.shape != (4, 4):
        raise InvalidCM("decomposition search implemented for two-mode CMs")

    def min_eig(x):
        ra, ta, rb, tb = x
        Q = g - block_diag(_pure_single_mode(ra, ta), _pure_single_mode(rb, tb))
        return np.linalg.eigvalsh(Q)[0]

    rs = np.linspace(-1.0, 1.0, grid)
    ts = np.linspace(0, np.pi, grid, endpoint=False)
    best, best_x = -np.inf, None
    for ra in rs:
        for ta in ts:
            for rb in rs:
                for tb in ts:
                    v = min_eig((ra, ta, rb, tb))
                    if v > best:
                        best, best_x = v, (ra, ta, rb, tb)
    res = minimize(lambda x: -min_eig(x), best_x, method="Nelder-Mead",
                   options=dict(xatol=1e-9, fatol=1e-12, maxiter=800))
    if -res.fun > best:
        best, best_x = -res.fun, tuple(res.x)
    if best < -psd_tol:
        return None
    ra, ta, rb, tb = best_x
    gA = _pure_single_mode(ra, ta)
    gB = _pure_single_mode(rb, tb)
    Q = g - block_diag(gA, gB)
    w, V = np.linalg.eigh(Q)
    pos = w > max(psd_tol, 1e-12)
    lams = w[pos][::-1]
    vcols = V[:, pos][:, ::-1]
    return SeparableDecomposition(gamma_A_pure=gA, gamma_B_pure=gB, Q=Q,
                                  lambdas=lams, vcols=vcols)


def displacement_purification(dec: SeparableDecomposition) -> Purification:
    """Pure CM realizing the separable state with displacement-encoding E modes.

    Each positive eigenvalue of Q feeds one purifying mode whose x
    quadrature carries the classical displacement (variance lambda_i) and
    whose p quadrature carries the conjugate squeezing; a CX-type
    symplectic then correlates AB with the encoded displacements so the
    global state is pure and its AB reduction equals the separable CM.
    """
    gp = block_diag(dec.gamma_A_pure, dec.gamma_B_pure)
    n2 = gp.shape[0]
    P = len(dec.lambdas)
    if P == 0:
        return Purification(n_A=1, n_B=n2 // 2 - 1, n_E=0, gamma_AB=gp,
                            gamma_ABE=np.zeros((n2, 0)), gamma_E=np.zeros((0, 0)))
    om = symplectic_form(n2 // 2)
    V = dec.vcols
    S = np.eye(n2 + 2 * P)
    for j in range(P):
        S[:n2, n2 + 2 * j] += V[:, j]
        S[n2 + 2 * j + 1, :n2] -= V[:, j] @ om
        for k in range(P):
            S[n2 + 2 * j + 1, n2 + 2 * k] -= 0.5 * (V[:, j] @ om @ V[:, k])
    g0 = block_diag(gp, *[np.diag([lam, 1.0 / lam]) for lam in dec.lambdas])
    full = S @ g0 @ S.T
    return Purification.from_pure_cm(full, n_A=1, n_B=n2 // 2 - 1)


def product_projecting_measurement(dec: SeparableDecomposition, pi: Purification,
                                   s: float) -> Measurement:
    """Eve measurement on the minimal purification that projects AB to a product.

    Built by measuring the displacement-encoding purification of the
    separable state with x-squeezed seeds of squeezing s on every E mode
    and mapping that measurement onto the given minimal purification. As
    s grows the conditional AB state factorizes.
    """
    from .reductions import reduce_purification_measurement

    if s <= 0:
        raise ValueError("seed squeezing must be positive")
    Q = pi.gamma_AB - block_diag(dec.gamma_A_pure, dec.gamma_B_pure)
    if np.linalg.eigvalsh(Q)[0] < -1e-7:
        raise InvalidDecomposition("decomposition does not match the purified state")
    pi_disp = displacement_purification(dec)
    if pi_disp.n_E == 0:
        return Measurement.empty()
    seed = block_diag(*[np.diag([np.exp(-2 * s), np.exp(2 * s)])
                        for _ in range(pi_disp.n_E)])
    return reduce_purification_measurement(pi_disp, Measurement.from_cm(seed), pi_min=pi)


@dataclass(frozen=True)
class LocalChannel:
    """Per-side CM maps gamma_j -> X_j gamma_j X_j^T + Y_j."""

    X_A: np.ndarray
    Y_A: np.ndarray
    X_B: np.ndarray
    Y_B: np.ndarray

    def is_cp(self, tol: float = 1e-9) -> bool:
        for X, Y in ((self.X_A, self.Y_A), (self.X_B, self.Y_B)):
            om = symplectic_form(X.shape[0] // 2)
            herm = Y.astype(complex) + 1j * om - 1j * X @ om @ X.T
            if np.linalg.eigvalsh((herm + herm.conj().T) / 2).min() < -tol:
                return False
        return True

    @staticmethod
    def pure_loss(eta_A: float, eta_B: float) -> "LocalChannel":
        if not (0 <= eta_A <= 1 and 0 <= eta_B <= 1):
            raise ValueError("loss transmittance must lie in [0, 1]")
        return LocalChannel(X_A=np.sqrt(eta_A) * np.eye(2), Y_A=(1 - eta_A) * np.eye(2),
                            X_B=np.sqrt(eta_B) * np.eye(2), Y_B=(1 - eta_B) * np.eye(2))

    @staticmethod
    def from_json_dict(d: dict) -> "LocalChannel":
        eta_A = float(d.get("eta_A", 1.0))
        eta_B = float(d.get("eta_B", 1.0))
        ch = LocalChannel.pure_loss(eta_A, eta_B)
        return LocalChannel(X_A=ch.X_A, Y_A=ch.Y_A + float(d.get("noise_A", 0.0)) * np.eye(2),
                            X_B=ch.X_B, Y_B=ch.Y_B + float(d.get("noise_B", 0.0)) * np.eye(2))


def apply_local_channel(gamma, channel: LocalChannel) -> np.ndarray:
    """Apply a completely positive local Gaussian channel at CM level."""
    if not channel.is_cp():
        raise InvalidCM("channel violates complete positivity")
    g = _as_matrix(gamma)
    X = block_diag(channel.X_A, channel.X_B)
    Y = block_diag(channel.Y_A, channel.Y_B)
    return X @ g @ X.T + Y


def random_cm(n: int, rng: np.random.Generator, nu_max: float = 2.5,
              squeeze: float = 0.6, pure: bool = False) -> np.ndarray:
    """Random physical CM: random symplectic applied to a thermal spectrum."""
    S = np.eye(2 * n)
    for _ in range(3):
        blocks = []
        for _ in range(n):
            th1, th2 = rng.uniform(0, 2 * np.pi, 2)
            r = rng.uniform(0, squeeze)
            blocks.append(rotation(th1) @ np.diag([np.exp(-r), np.exp(r)]) @ rotation(th2))
        S = block_diag(*blocks) @ S
        for i in range(n - 1):
            th = rng.uniform(0, 2 * np.pi)
            bs = np.eye(2 * n)
            c, sn = np.cos(th), np.sin(th)
            bs[2 * i:2 * i + 2, 2 * i:2 * i + 2] = c * np.eye(2)
            bs[2 * i + 2:2 * i + 4, 2 * i + 2:2 * i + 4] = c * np.eye(2)
            bs[2 * i:2 * i + 2, 2 * i + 2:2 * i + 4] = sn * np.eye(2)
            bs[2 * i + 2:2 * i + 4, 2 * i:2 * i + 2] = -sn * np.eye(2)
            S = bs @ S
    nus = np.ones(n) if pure else 1 + rng.uniform(0, nu_max - 1, n)
    return S @ np.diag(np.repeat(nus, 2)) @ S.T
