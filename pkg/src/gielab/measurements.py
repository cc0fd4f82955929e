"""Gaussian measurement seeds and conditioning of Gaussian states.

A Gaussian measurement on k modes is described by the covariance matrix
of its seed state. Two idealized limits get tagged variants instead of
huge finite entries: homodyne (zero noise along one quadrature,
conditioning through a pinched pseudoinverse) and drop (infinite
thermal seed, which reveals nothing and just traces the mode out).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import block_diag

from .errors import InvalidCM
from .symplectic import (
    CovarianceMatrix,
    PINV_RCOND,
    rotation,
    symplectic_eigenvalues,
    _as_matrix,
)


@dataclass(frozen=True)
class ModeVariant:
    """Measurement of a single mode: 'cm', 'homodyne' (angle) or 'drop'."""

    kind: str
    angle: float = 0.0
    cm: Optional[np.ndarray] = None


@dataclass(frozen=True)
class Measurement:
    """Gaussian measurement on n_modes modes.

    Either a full (possibly correlated) seed CM, or a list of per-mode
    variants. The empty measurement (n_modes == 0) is allowed and acts
    as the identity in conditioning.
    """

    n_modes: int
    seed: Optional[np.ndarray] = None
    variants: Optional[tuple] = None

    @staticmethod
    def from_cm(cm, check_physical: bool = True) -> "Measurement":
        m = _as_matrix(cm)
        n = m.shape[0] // 2
        # tolerance scales with the entries: extreme squeezed seeds are valid
        # but their eigencheck is ill-conditioned
        tol = 1e-7 * max(1.0, np.abs(m).max())
        if check_physical and n and symplectic_eigenvalues(m).min() < 1 - tol:
            raise InvalidCM("measurement seed CM is not physical")
        return Measurement(n_modes=n, seed=(m + m.T) / 2)

    @staticmethod
    def homodyne(angles: Sequence[float]) -> "Measurement":
        var = tuple(ModeVariant("homodyne", angle=float(a)) for a in angles)
        return Measurement(n_modes=len(var), variants=var)

    @staticmethod
    def heterodyne(n: int) -> "Measurement":
        return Measurement.from_cm(np.eye(2 * n))

    @staticmethod
    def drop(n: int) -> "Measurement":
        return Measurement(n_modes=n, variants=tuple(ModeVariant("drop") for _ in range(n)))

    @staticmethod
    def per_mode(variants: Sequence[ModeVariant]) -> "Measurement":
        return Measurement(n_modes=len(variants), variants=tuple(variants))

    @staticmethod
    def empty() -> "Measurement":
        return Measurement(n_modes=0, seed=np.zeros((0, 0)))


def as_measurement(obj, n_modes: int) -> Measurement:
    """Coerce a Measurement, CovarianceMatrix or bare array to a Measurement."""
    if isinstance(obj, Measurement):
        if obj.n_modes != n_modes:
            raise InvalidCM(f"measurement covers {obj.n_modes} modes, need {n_modes}")
        return obj
    if isinstance(obj, CovarianceMatrix) or hasattr(obj, "shape") or isinstance(obj, (list, tuple)):
        m = _as_matrix(obj)
        if m.shape != (2 * n_modes, 2 * n_modes):
            raise InvalidCM(f"seed CM shape {m.shape} does not match {n_modes} modes")
        return Measurement.from_cm(m, check_physical=False)
    raise TypeError(f"cannot interpret {type(obj)!r} as a Gaussian measurement")


def _mode_indices(modes) -> np.ndarray:
    return np.concatenate([[2 * m, 2 * m + 1] for m in modes]).astype(int)


def _condition_finite(g: np.ndarray, measured: Sequence[int], seed: np.ndarray) -> np.ndarray:
    n = g.shape[0] // 2
    rest = [i for i in range(n) if i not in set(measured)]
    mi = _mode_indices(measured)
    ri = _mode_indices(rest) if rest else np.array([], dtype=int)
    B = g[np.ix_(mi, mi)] + seed
    M = np.linalg.pinv(B, rcond=PINV_RCOND)
    return g[np.ix_(ri, ri)] - g[np.ix_(ri, mi)] @ M @ g[np.ix_(ri, mi)].T


def _condition_homodyne(g: np.ndarray, measured: Sequence[int], angles: Sequence[float]) -> np.ndarray:
    n = g.shape[0] // 2
    rest = [i for i in range(n) if i not in set(measured)]
    mi = _mode_indices(measured)
    ri = _mode_indices(rest) if rest else np.array([], dtype=int)
    B = g[np.ix_(mi, mi)]
    proj = block_diag(*[np.outer(rotation(a)[:, 0], rotation(a)[:, 0]) for a in angles])
    M = proj @ np.linalg.pinv(proj @ B @ proj, rcond=PINV_RCOND) @ proj
    return g[np.ix_(ri, ri)] - g[np.ix_(ri, mi)] @ M @ g[np.ix_(ri, mi)].T


def _drop_modes(g: np.ndarray, dropped: Sequence[int]) -> np.ndarray:
    n = g.shape[0] // 2
    rest = [i for i in range(n) if i not in set(dropped)]
    ri = _mode_indices(rest) if rest else np.array([], dtype=int)
    return g[np.ix_(ri, ri)].copy()


def gaussian_condition(gamma, measured_modes: Sequence[int], measurement) -> np.ndarray:
    """Conditional CM of the unmeasured modes after a Gaussian measurement.

    measured_modes lists the global indices (ascending) covered by the
    measurement, in the measurement's own mode order. Variants are
    resolved in the order drop, finite CM, homodyne; the groups act on
    disjoint modes so the sequence is exact.
    """
    g = _as_matrix(gamma)
    measured_modes = list(measured_modes)
    meas = as_measurement(measurement, len(measured_modes))
    if meas.n_modes == 0:
        return g.copy()
    if meas.seed is not None:
        return _condition_finite(g, measured_modes, meas.seed)

    dropped = [m for m, v in zip(measured_modes, meas.variants) if v.kind == "drop"]
    finite = [(m, v.cm) for m, v in zip(measured_modes, meas.variants) if v.kind == "cm"]
    hom = [(m, v.angle) for m, v in zip(measured_modes, meas.variants) if v.kind == "homodyne"]

    if dropped:
        g = _drop_modes(g, dropped)
        shift = {m: m - sum(1 for d in dropped if d < m) for m in
                 [x for x, _ in finite] + [x for x, _ in hom]}
        finite = [(shift[m], cm) for m, cm in finite]
        hom = [(shift[m], a) for m, a in hom]
    if finite:
        seed = block_diag(*[cm for _, cm in finite])
        fm = [m for m, _ in finite]
        g = _condition_finite(g, fm, seed)
        shift = {m: m - sum(1 for d in fm if d < m) for m, _ in hom}
        hom = [(shift[m], a) for m, a in hom]
    if hom:
        g = _condition_homodyne(g, [m for m, _ in hom], [a for _, a in hom])
    return g
