"""Symplectic linear algebra for covariance matrices.

Conventions used throughout the package: quadratures are ordered
(x1, p1, ..., xn, pn), covariance matrices carry anticommutator second
moments so the vacuum is the identity, and a CM is physical iff all of
its symplectic eigenvalues are >= 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import block_diag, schur

from .errors import InvalidCM

SYMMETRY_TOL = 1e-10
SYMPLECTIC_TOL = 1e-9
PHYSICALITY_TOL = 1e-9
PINV_RCOND = 1e-10

SIGMA_Z = np.diag([1.0, -1.0])


def symplectic_form(n: int) -> np.ndarray:
    """Block-diagonal symplectic form of n modes, [[0, 1], [-1, 0]] per mode."""
    if n < 1:
        raise ValueError("need at least one mode")
    w = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return block_diag(*([w] * n))


def rotation(phi: float) -> np.ndarray:
    """Single-mode phase-space rotation by phi (pi-periodic for seed CMs)."""
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s], [s, c]])


def _as_matrix(gamma) -> np.ndarray:
    if isinstance(gamma, CovarianceMatrix):
        return gamma.m
    return np.asarray(gamma, dtype=float)


@dataclass(frozen=True)
class CovarianceMatrix:
    """A 2n x 2n real symmetric covariance matrix, symmetrized on construction."""

    m: np.ndarray
    n_modes: int = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
            raise InvalidCM(f"bad CM shape {m.shape}")
        if np.abs(m - m.T).max() > SYMMETRY_TOL * max(1.0, np.abs(m).max()):
            raise InvalidCM("matrix is not symmetric")
        object.__setattr__(self, "m", (m + m.T) / 2)
        object.__setattr__(self, "n_modes", m.shape[0] // 2)

    def is_physical(self, tol: float = PHYSICALITY_TOL) -> bool:
        try:
            return symplectic_eigenvalues(self.m).min() >= 1.0 - tol
        except InvalidCM:
            return False

    def require_physical(self, tol: float = PHYSICALITY_TOL) -> "CovarianceMatrix":
        if not self.is_physical(tol):
            raise InvalidCM("covariance matrix violates the uncertainty relation")
        return self


@dataclass(frozen=True)
class SymplecticMatrix:
    """A real matrix S with S Omega S^T = Omega."""

    m: np.ndarray
    n_modes: int = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        n = m.shape[0] // 2
        om = symplectic_form(n)
        if np.abs(m @ om @ m.T - om).max() > SYMPLECTIC_TOL:
            raise InvalidCM("matrix is not symplectic")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n_modes", n)

    @property
    def inv(self) -> np.ndarray:
        # Omega S^T Omega^T is the symplectic inverse; cheaper and exact.
        n = self.n_modes
        om = symplectic_form(n)
        return -om @ self.m.T @ om


@dataclass(frozen=True)
class WilliamsonDecomposition:
    """S gamma S^T = diag(nu_1, nu_1, ..., nu_n, nu_n) with nu descending."""

    S: SymplecticMatrix
    nu: np.ndarray
    degenerate: bool = False


@dataclass(frozen=True)
class StandardForm:
    """Two-mode standard form parameters and the local symplectics reaching it.

    (S_A + S_B) gamma (S_A + S_B)^T equals the standard-form matrix with
    diagonal blocks a*I, b*I and off-diagonal diag(c1, c2), c1 >= |c2|.
    """

    a: float
    b: float
    c1: float
    c2: float
    local_symplectics: tuple

    @property
    def matrix(self) -> np.ndarray:
        g = np.diag([self.a, self.a, self.b, self.b])
        g[0, 2] = g[2, 0] = self.c1
        g[1, 3] = g[3, 1] = self.c2
        return g


def symplectic_eigenvalues(gamma) -> np.ndarray:
    """Symplectic eigenvalues of a positive-definite CM, descending, one per mode.

    Computed from the spectrum of -(Omega gamma)^2, which avoids matrix
    square roots.
    """
    g = _as_matrix(gamma)
    n = g.shape[0] // 2
    if np.linalg.eigvalsh(g).min() <= 0:
        raise InvalidCM("covariance matrix must be positive definite")
    m = symplectic_form(n) @ g
    ev = np.linalg.eigvals(-(m @ m))
    ev = np.sort(np.abs(np.real(ev)))
    return np.sqrt(ev[::2])[::-1]


def williamson(gamma, degeneracy_tol: float = 1e-8) -> WilliamsonDecomposition:
    """Williamson normal form of a positive-definite covariance matrix.

    Returns S and nu with S gamma S^T = diag(nu_1, nu_1, ..., nu_n, nu_n).
    The symplectic S is assembled from the real Schur form of
    gamma^{-1/2} Omega gamma^{-1/2}; for degenerate spectra any valid
    diagonalizer may be returned (flagged, not an error).

    Raises:
        InvalidCM: if gamma is not positive definite.
    """
    g = _as_matrix(gamma)
    n = g.shape[0] // 2
    w, V = np.linalg.eigh(g)
    if w.min() <= 0:
        raise InvalidCM("covariance matrix must be positive definite")
    g_isqrt = V @ np.diag(1.0 / np.sqrt(w)) @ V.T
    A = g_isqrt @ symplectic_form(n) @ g_isqrt  # antisymmetric
    T, O = schur(A)

    # T is block diagonal with antisymmetric 2x2 blocks [[0, 1/nu], [-1/nu, 0]];
    # orient each block positive and sort modes by descending nu.
    nus = []
    cols = []
    for i in range(n):
        b = T[2 * i, 2 * i + 1]
        c1, c2 = O[:, 2 * i], O[:, 2 * i + 1]
        if b < 0:
            b, c1, c2 = -b, c2.copy(), c1.copy()
        nus.append(1.0 / b)
        cols.append((c1, c2))
    order = np.argsort(nus)[::-1]
    nu = np.array([nus[i] for i in order])
    Ot = np.empty_like(O)
    for k, i in enumerate(order):
        Ot[:, 2 * k] = cols[i][0]
        Ot[:, 2 * k + 1] = cols[i][1]
    S = np.diag(np.sqrt(np.repeat(nu, 2))) @ Ot.T @ g_isqrt
    degenerate = bool(n > 1 and np.min(np.abs(np.diff(nu))) < degeneracy_tol)
    return WilliamsonDecomposition(S=SymplecticMatrix(S), nu=nu, degenerate=degenerate)


def schur_complement(M, keep) -> np.ndarray:
    """Schur complement M_kk - M_kc (M_cc)^+ M_ck onto the kept indices.

    The inverse is a pseudoinverse with relative rank cutoff so that
    singular complement blocks (homodyne limits) degrade gracefully.

    Args:
        M: symmetric matrix.
        keep: sequence of row/column indices to keep.
    """
    M = np.asarray(M, dtype=float)
    keep = np.asarray(keep, dtype=int)
    comp = np.setdiff1d(np.arange(M.shape[0]), keep)
    if comp.size == 0:
        return M[np.ix_(keep, keep)].copy()
    A = M[np.ix_(keep, keep)]
    C = M[np.ix_(keep, comp)]
    B = M[np.ix_(comp, comp)]
    return A - C @ np.linalg.pinv(B, rcond=PINV_RCOND) @ C.T


def partial_transpose(gamma, modes) -> np.ndarray:
    """Flip the p-quadrature sign of the listed modes (Lambda gamma Lambda)."""
    g = _as_matrix(gamma).copy()
    n = g.shape[0] // 2
    lam = np.ones(2 * n)
    for m in modes:
        if not 0 <= m < n:
            raise IndexError(f"mode {m} out of range for {n} modes")
        lam[2 * m + 1] = -1.0
    return lam[:, None] * g * lam[None, :]


def _single_mode_diagonalizer(gA: np.ndarray):
    """Symplectic S with S gA S^T = a*I for a 2x2 block; returns (S, a)."""
    a = float(np.sqrt(np.linalg.det(gA)))
    w, V = np.linalg.eigh(gA / a)
    if np.linalg.det(V) < 0:
        V = V[:, ::-1]
        w = w[::-1]
    S = V @ np.diag(1.0 / np.sqrt(w)) @ V.T  # det 1, symmetric, hence symplectic
    return S, a


def standard_form(gamma) -> StandardForm:
    """Reduce a two-mode physical CM to standard form by local symplectics.

    a and b are the local symplectic eigenvalues sqrt(det gamma_A) and
    sqrt(det gamma_B); the off-diagonal block is rotated to diag(c1, c2)
    with c1 >= |c2| via a signed SVD.
    """
    g = _as_matrix(gamma)
    if g.shape != (4, 4):
        raise InvalidCM("standard form requires a two-mode CM")
    if symplectic_eigenvalues(g).min() < 1.0 - PHYSICALITY_TOL:
        raise InvalidCM("standard form requires a physical CM")
    SA0, a = _single_mode_diagonalizer(g[:2, :2])
    SB0, b = _single_mode_diagonalizer(g[2:, 2:])
    C = SA0 @ g[:2, 2:] @ SB0.T
    U, sv, Vt = np.linalg.svd(C)
    c1, c2 = sv
    if np.linalg.det(U) < 0:
        U = U @ SIGMA_Z
        c2 = -c2
    if np.linalg.det(Vt) < 0:
        Vt = SIGMA_Z @ Vt
        c2 = -c2
    SA = U.T @ SA0
    SB = Vt @ SB0
    return StandardForm(a=a, b=b, c1=float(c1), c2=float(c2),
                        local_symplectics=(SA, SB))


def _passive_two_mode(phi1, phi2, theta, phi3) -> np.ndarray:
    """Two-mode passive transformation (phases + beam splitter + phase)."""
    c, s = np.cos(theta), np.sin(theta)
    u = np.empty((2, 2), dtype=complex)
    u[0, 0] = np.exp(1j * (phi1 + phi3)) * c
    u[0, 1] = -np.exp(1j * phi1) * s
    u[1, 0] = np.exp(1j * (phi2 + phi3)) * s
    u[1, 1] = np.exp(1j * phi2) * c
    S = np.empty((4, 4))
    for j in range(2):
        for k in range(2):
            re, im = u[j, k].real, u[j, k].imag
            S[2 * j, 2 * k] = re
            S[2 * j, 2 * k + 1] = -im
            S[2 * j + 1, 2 * k] = im
            S[2 * j + 1, 2 * k + 1] = re
    return S


def build_symplectic(params) -> SymplecticMatrix:
    """Passive-squeeze-passive composition.

    Single mode: params = (theta1, r, theta2) gives
    U(theta1) diag(e^-r, e^r) U(theta2). Two modes: params is a flat
    10-vector, 4 passive + 2 squeeze magnitudes + 4 passive.
    """
    params = np.asarray(params, dtype=float)
    if params.size == 3:
        th1, r, th2 = params
        S = rotation(th1) @ np.diag([np.exp(-r), np.exp(r)]) @ rotation(th2)
    elif params.size == 10:
        Z = np.diag([np.exp(-params[4]), np.exp(params[4]),
                     np.exp(-params[5]), np.exp(params[5])])
        S = _passive_two_mode(*params[:4]) @ Z @ _passive_two_mode(*params[6:])
    else:
        raise ValueError("expected 3 (one mode) or 10 (two modes) parameters")
    return SymplecticMatrix(S)


def parse_cm_text(text: str) -> CovarianceMatrix:
    """Parse the CM text format: first line n_modes, then 2n rows of floats."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InvalidCM("empty CM file")
    try:
        n = int(lines[0].split()[0])
    except ValueError as exc:
        raise InvalidCM("first line must be the mode count") from exc
    if n < 1 or len(lines) < 1 + 2 * n:
        raise InvalidCM(f"expected {2 * n} matrix rows for {n} modes")
    rows = []
    for ln in lines[1:1 + 2 * n]:
        vals = [float(tok) for tok in ln.split()]
        if len(vals) != 2 * n:
            raise InvalidCM(f"expected {2 * n} entries per row, got {len(vals)}")
        rows.append(vals)
    m = np.array(rows)
    if np.abs(m - m.T).max() > 1e-8:
        raise InvalidCM("CM file is not symmetric beyond 1e-8")
    return CovarianceMatrix(m)


def format_cm_text(gamma) -> str:
    """Inverse of parse_cm_text."""
    g = _as_matrix(gamma)
    n = g.shape[0] // 2
    rows = [" ".join(f"{v:.17g}" for v in row) for row in g]
    return "\n".join([str(n)] + rows) + "\n"
