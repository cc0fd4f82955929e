"""Structural reductions of Eve's side: classical post-processing channels
absorbed into her measurement, and measurements on arbitrary purifications
mapped onto the minimal one."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from .errors import InvalidCM
from .measurements import Measurement, as_measurement
from .states import Purification, minimal_purification
from .symplectic import williamson


@dataclass(frozen=True)
class ChannelSpec:
    """Classical Gaussian channel d -> X d + y on measurement outcomes.

    X is L x 2K; Y is the L x L covariance of the added noise y.
    """

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        Y = np.atleast_2d(np.asarray(self.Y, dtype=float))
        if Y.shape[0] != Y.shape[1] or Y.shape[0] != X.shape[0]:
            raise ValueError("Y must be square with the channel output dimension")
        if np.abs(Y - Y.T).max() > 1e-10 * max(1.0, np.abs(Y).max()):
            raise ValueError("Y must be symmetric")
        if np.linalg.eigvalsh((Y + Y.T) / 2).min() < -1e-10:
            raise ValueError("Y must be positive semidefinite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", (Y + Y.T) / 2)


def integrate_channel(pi: Purification, meas_E, channel: ChannelSpec,
                      x: float = 1e8) -> Measurement:
    """Absorb a classical channel on Eve's outcomes into her measurement.

    Returns the seed CM whose direct conditioning reproduces, in the
    large-x limit, the Schur complement of the channel-processed outcome
    distribution. Built from the SVD of X with the noise matrix pinched
    into the row space.
    """
    if x < 0:
        raise ValueError("x must be nonnegative")
    GE = as_measurement(meas_E, pi.n_E)
    if GE.seed is None:
        raise InvalidCM("channel absorption requires a finite seed CM")
    twoK = 2 * pi.n_E
    X, Y = channel.X, channel.Y
    if X.shape[1] != twoK:
        raise InvalidCM(f"channel input dimension {X.shape[1]} does not match E")
    L = X.shape[0]
    U, sv, Vt = np.linalg.svd(X)
    cutoff = 1e-12 * (sv[0] if sv.size and sv[0] > 0 else 1.0)
    Q = int(np.sum(sv > cutoff))
    tau_inv = np.diag(np.concatenate([1.0 / sv[:Q], np.ones(L - Q)]))
    Yt = tau_inv @ U.T @ Y @ U @ tau_inv
    A = Yt[:Q, :Q]
    if L > Q:
        C = Yt[:Q, Q:]
        B = Yt[Q:, Q:]
        core = A - C @ np.linalg.pinv(B, rcond=1e-12) @ C.T
    else:
        core = A
    mid = np.zeros((twoK, twoK))
    mid[:Q, :Q] = core
    if twoK > Q:
        mid[Q:, Q:] = x * np.eye(twoK - Q)
    V = Vt.T
    return Measurement.from_cm(GE.seed + V @ mid @ V.T, check_physical=False)


def channel_processed_sigma(pi: Purification, meas_A, meas_B, meas_E,
                            channel: ChannelSpec) -> np.ndarray:
    """Outcome CCM of AB conditioned on the channel-processed Eve data.

    Direct evaluation of alpha - beta X^T (X delta X^T + Y)^+ X beta^T;
    the reference the absorbed measurement must reproduce.
    """
    GA = as_measurement(meas_A, pi.n_A).seed
    GB = as_measurement(meas_B, pi.n_B).seed
    GE = as_measurement(meas_E, pi.n_E).seed
    alpha = pi.gamma_AB + block_diag(GA, GB)
    beta = pi.gamma_ABE
    delta = pi.gamma_E + GE
    X, Y = channel.X, channel.Y
    M = np.linalg.pinv(X @ delta @ X.T + Y, rcond=1e-12)
    return alpha - beta @ X.T @ M @ X @ beta.T


def _align_to_minimal(pi_big: Purification, pi_min: Purification,
                      S_w: np.ndarray, nu: np.ndarray, group_tol: float = 1e-7):
    """Fix the Williamson diagonalizer of Eve's local CM so the cross block
    matches the canonical minimal-purification coupling.

    Within degenerate symplectic-eigenvalue groups the diagonalizer is only
    unique up to an orthosymplectic rotation, which the state-level identity
    does fix; recover it by aligning the transformed AB-E block group by
    group (least squares followed by a polar projection).
    """
    K = pi_big.n_E
    R = pi_min.n_E
    cross = pi_big.gamma_ABE @ S_w.T
    target = np.hstack([pi_min.gamma_ABE, np.zeros((2 * pi_min.n_AB, 2 * (K - R)))])
    G = np.eye(2 * K)
    i = 0
    while i < R:
        j = i + 1
        while j < R and abs(nu[j] - nu[i]) < group_tol * max(1.0, nu[i]):
            j += 1
        idx = np.arange(2 * i, 2 * j)
        Cp = cross[:, idx]
        Ct = target[:, idx]
        M, *_ = np.linalg.lstsq(Cp, Ct, rcond=None)
        U, _, Vt = np.linalg.svd(M)
        G[np.ix_(idx, idx)] = (U @ Vt).T
        i = j
    return G @ S_w


def reduce_purification_measurement(pi_big: Purification, meas_E,
                                    pi_min: Purification | None = None,
                                    tol: float = 1e-8) -> Measurement:
    """Map Eve's measurement on any purification onto the minimal one.

    The symplectic diagonalizing Eve's local CM transports the seed CM;
    projecting its ancilla block onto the vacuum (the coherent-state
    Schur complement A - C (B + I)^{-1} C^T) leaves an R-mode physical
    seed whose conditioning reproduces the original sigma_AB.
    """
    if pi_min is None:
        pi_min = minimal_purification(pi_big.gamma_AB, n_A=pi_big.n_A)
    if np.abs(pi_big.gamma_AB - pi_min.gamma_AB).max() > tol:
        raise InvalidCM("purifications reduce to different AB states")
    GE = as_measurement(meas_E, pi_big.n_E)
    if GE.seed is None:
        raise InvalidCM("reduction requires a finite seed CM on E")
    K, R = pi_big.n_E, pi_min.n_E
    if K < R:
        raise InvalidCM("purification has fewer E modes than the minimal one")
    dec = williamson(pi_big.gamma_E)
    S_w = _align_to_minimal(pi_big, pi_min, dec.S.m, dec.nu)
    GbarS = S_w @ GE.seed @ S_w.T
    if K == R:
        return Measurement.from_cm(GbarS, check_physical=False)
    Abar = GbarS[:2 * R, :2 * R]
    Cbar = GbarS[:2 * R, 2 * R:]
    Bbar = GbarS[2 * R:, 2 * R:]
    red = Abar - Cbar @ np.linalg.inv(Bbar + np.eye(2 * (K - R))) @ Cbar.T
    return Measurement.from_cm(red, check_physical=False)
