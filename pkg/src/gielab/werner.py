"""Photon-counting analysis of the continuous-variable Werner state
p |psi(lambda)><psi(lambda)| + (1-p) |00><00| with a qubit purifier."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

TAIL_WARN = 1e-12
STRATEGIES = ("eigenbasis", "computational", "plus_minus", "drop")


@dataclass(frozen=True)
class WernerParams:
    p: float
    lam: float
    cutoff: int = 40

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ValueError("mixing probability must lie in [0, 1]")
        if not 0 <= self.lam < 1:
            raise ValueError("lambda must lie in [0, 1)")
        if self.cutoff < 1:
            raise ValueError("cutoff must be at least 1")
        if self.tail_mass() > TAIL_WARN:
            warnings.warn(f"Fock truncation tail {self.tail_mass():.3e} above "
                          f"{TAIL_WARN:g}; increase the cutoff", stacklevel=2)

    def tail_mass(self) -> float:
        return self.p * self.lam ** (2 * (self.cutoff + 1))


@dataclass(frozen=True)
class QubitPovm:
    """POVM elements as 2x2 Hermitian PSD matrices summing to the identity."""

    elements: tuple

    def __post_init__(self):
        els = tuple(np.asarray(e, dtype=complex) for e in self.elements)
        total = sum(els)
        if np.abs(total - np.eye(2)).max() > 1e-10:
            raise ValueError("POVM elements must sum to the identity")
        for e in els:
            if np.abs(e - e.conj().T).max() > 1e-10:
                raise ValueError("POVM elements must be Hermitian")
            if np.linalg.eigvalsh((e + e.conj().T) / 2).min() < -1e-10:
                raise ValueError("POVM elements must be positive semidefinite")
        object.__setattr__(self, "elements", els)

    def __len__(self):
        return len(self.elements)


@dataclass(frozen=True)
class JointPmf:
    """Truncated table p(m, n, k) over photon counts and Eve's outcome."""

    table: np.ndarray

    @property
    def p_E(self) -> np.ndarray:
        return self.table.sum(axis=(0, 1))


def reduced_qubit_state(params: WernerParams) -> np.ndarray:
    p, lam = params.p, params.lam
    c = np.sqrt(p * (1 - p) * (1 - lam ** 2))
    return np.array([[p, c], [c, 1 - p]])


def strategy_povm(params: WernerParams, strategy: str) -> QubitPovm:
    if strategy == "computational":
        return QubitPovm((np.diag([1.0, 0.0]), np.diag([0.0, 1.0])))
    if strategy == "plus_minus":
        return QubitPovm((np.full((2, 2), 0.5), np.array([[0.5, -0.5], [-0.5, 0.5]])))
    if strategy == "drop":
        return QubitPovm((np.eye(2),))
    if strategy == "eigenbasis":
        _, V = np.linalg.eigh(reduced_qubit_state(params))
        return QubitPovm(tuple(np.outer(V[:, i], V[:, i].conj()) for i in range(2)))
    raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")


def joint_pmf(params: WernerParams, povm: QubitPovm) -> JointPmf:
    """Outcome distribution of photon counting on A, B and the POVM on Eve.

    p(m, n, k) vanishes for m != n except at the vacuum cell, whose weight
    is p_E(k) minus the squeezed-branch vacuum contribution.
    """
    p, lam, N = params.p, params.lam, params.cutoff
    table = np.zeros((N + 1, N + 1, len(povm)))
    for k, Pi in enumerate(povm.elements):
        p00 = Pi[0, 0].real
        p11 = Pi[1, 1].real
        re10 = Pi[1, 0].real
        pE = p * p00 + np.sqrt(p * (1 - p) * (1 - lam ** 2)) * 2 * re10 + (1 - p) * p11
        table[0, 0, k] = pE - lam ** 2 * p * p00
        m = np.arange(1, N + 1)
        table[m, m, k] = p * (1 - lam ** 2) * lam ** (2 * m) * p00
    return JointPmf(table=np.maximum(table, 0.0))


def _entropy(x: np.ndarray) -> float:
    x = x[x > 0]
    return float(-np.sum(x * np.log(x)))


def conditional_mutual_info(pmf: JointPmf) -> float:
    """I(A;B|E) = H(A,E) + H(B,E) - H(A,B,E) - H(E) in nats, 0 ln 0 = 0."""
    t = pmf.table
    return (_entropy(t.sum(axis=1).ravel()) + _entropy(t.sum(axis=0).ravel())
            - _entropy(t.ravel()) - _entropy(t.sum(axis=(0, 1))))


def photon_number_entropy(params: WernerParams) -> float:
    """Shannon entropy H(A) of the photon-number distribution of mode A."""
    p, lam = params.p, params.lam
    if p == 0 or lam == 0:
        return 0.0
    return -(np.log(1 - p * lam ** 2)
             + p * lam ** 2 * np.log(p * (1 - lam ** 2) / (1 - p * lam ** 2))
             + 2 * p * lam ** 2 * np.log(lam) / (1 - lam ** 2))


def purifier_entropy(params: WernerParams) -> float:
    """von Neumann entropy of the state, from its two nonzero eigenvalues."""
    p, lam = params.p, params.lam
    root = np.sqrt(1 - 4 * p * (1 - p) * lam ** 2)
    e = np.array([(1 + root) / 2, (1 - root) / 2])
    return _entropy(e)


def lower_bound(params: WernerParams) -> float:
    """Analytical lower bound H(A) - S(rho_E) on the intrinsic information."""
    return max(photon_number_entropy(params) - purifier_entropy(params), 0.0)


def eve_strategy_cmi(params: WernerParams, strategy: str) -> float:
    """Conditional mutual information under one of the named Eve strategies."""
    pmf = joint_pmf(params, strategy_povm(params, strategy))
    return conditional_mutual_info(pmf)


def oracle_entropies(params: WernerParams):
    """Independent density-matrix route to (H(A), S(rho_E), S(rho_A)).

    Mode-A populations come from the truncated Fock expansion; the global
    spectrum from the 2x2 Gram matrix of the two pure branches.
    """
    p, lam, N = params.p, params.lam, params.cutoff
    amp2 = (1 - lam ** 2) * lam ** (2 * np.arange(N + 1))
    pA = p * amp2
    pA[0] += 1 - p
    HA = _entropy(pA)
    overlap = np.sqrt(1 - lam ** 2)
    gram = np.array([[p, np.sqrt(p * (1 - p)) * overlap],
                     [np.sqrt(p * (1 - p)) * overlap, 1 - p]])
    SE = _entropy(np.linalg.eigvalsh(gram))
    return HA, SE, HA
