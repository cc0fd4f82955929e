"""Gaussian intrinsic entanglement: the mutual-information functional, the
nested sup-inf optimizer, the swapped-order upper bound, and closed forms."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import block_diag
from scipy.optimize import minimize

from .errors import DegenerateDistribution, InvalidCM, NotPure
from .measurements import Measurement, ModeVariant, as_measurement
from .states import Purification, conditional_cm, minimal_purification, ppt_separable
from .symplectic import (
    _as_matrix,
    rotation,
    standard_form,
    symplectic_eigenvalues,
)


# ---------------------------------------------------------------------------
# parameters and results


@dataclass(frozen=True)
class MeasurementParam:
    """Single-mode seed parameters (phi, log V_x, log V_p) or a homodyne angle."""

    phi: float
    log_vx: float = 0.0
    log_vp: float = 0.0
    homodyne: bool = False

    def clamped(self, t_max: float) -> "MeasurementParam":
        """Clamp log-variances to [-2 t_max, 2 t_max] and enforce Vx*Vp >= 1."""
        if self.homodyne:
            return self
        lim = 2 * t_max
        lvx = float(np.clip(self.log_vx, -lim, lim))
        lvp = float(np.clip(self.log_vp, -lim, lim))
        s = lvx + lvp
        if s < 0:
            lvx -= s / 2
            lvp -= s / 2
        return MeasurementParam(self.phi, lvx, lvp)

    def seed_cm(self) -> np.ndarray:
        if self.homodyne:
            raise InvalidCM("homodyne variant has no finite seed CM")
        U = rotation(self.phi)
        return U @ np.diag([np.exp(self.log_vx), np.exp(self.log_vp)]) @ U.T

    def measurement(self) -> Measurement:
        if self.homodyne:
            return Measurement.homodyne([self.phi])
        return Measurement.from_cm(self.seed_cm(), check_physical=False)

    def at_boundary(self, t_max: float, margin: float = 1e-6) -> bool:
        if self.homodyne:
            return True
        lim = 2 * t_max
        return max(abs(self.log_vx), abs(self.log_vp)) >= lim - margin

    def to_jsonable(self) -> dict:
        if self.homodyne:
            return {"homodyne": True, "phi": self.phi}
        return {"phi": self.phi, "log_vx": self.log_vx, "log_vp": self.log_vp}


@dataclass(frozen=True)
class OptimizerConfig:
    grid_points: int = 5
    refine_iters: int = 2
    tol: float = 1e-6
    t_max: float = 10.0
    seed: int = 1234

    @staticmethod
    def from_json(text: str) -> "OptimizerConfig":
        d = json.loads(text) if text else {}
        return OptimizerConfig(**{k: d[k] for k in
                                  ("grid_points", "refine_iters", "tol", "t_max", "seed")
                                  if k in d})


@dataclass
class GieResult:
    value: float
    gamma_A_opt: Optional[MeasurementParam] = None
    gamma_B_opt: Optional[MeasurementParam] = None
    gamma_E_opt: object = None
    iterations: int = 0
    converged: bool = True
    inner_tol_achieved: float = 0.0
    outer_tol_achieved: float = 0.0
    boundary_hit: bool = False
    reason: str = ""

    def to_jsonable(self) -> dict:
        def conv(p):
            if p is None:
                return None
            if isinstance(p, MeasurementParam):
                return p.to_jsonable()
            if isinstance(p, (tuple, list)):
                return [conv(x) for x in p]
            return p
        return {
            "value": self.value,
            "gamma_A_opt": conv(self.gamma_A_opt),
            "gamma_B_opt": conv(self.gamma_B_opt),
            "gamma_E_opt": conv(self.gamma_E_opt),
            "iterations": self.iterations,
            "converged": self.converged,
            "inner_tol_achieved": self.inner_tol_achieved,
            "outer_tol_achieved": self.outer_tol_achieved,
            "boundary_hit": self.boundary_hit,
            "reason": self.reason,
        }


# ---------------------------------------------------------------------------
# the mutual-information functional


def _side_selection(meas: Measurement, offset: int):
    """Rows selecting the measured outcome components of one side plus the
    additive seed noise for those components."""
    rows = []
    noise = []
    if meas.seed is not None:
        k = meas.n_modes
        for i in range(2 * k):
            r = np.zeros(2 * k)
            r[i] = 1.0
            rows.append((offset, r))
        noise.append(meas.seed)
    else:
        for j, v in enumerate(meas.variants):
            if v.kind == "drop":
                raise InvalidCM("A/B sides must be measured, not dropped")
            if v.kind == "cm":
                for i in range(2):
                    r = np.zeros(2 * meas.n_modes)
                    r[2 * j + i] = 1.0
                    rows.append((offset, r))
                noise.append(v.cm)
            else:
                r = np.zeros(2 * meas.n_modes)
                r[2 * j] = np.cos(v.angle)
                r[2 * j + 1] = np.sin(v.angle)
                rows.append((offset, r))
                noise.append(np.zeros((1, 1)))
    return rows, noise


def mutual_info_f(pi: Purification, meas_A, meas_B, meas_E) -> float:
    """Gaussian mutual information of the A/B outcome distribution after
    Eve's measurement: (1/2) ln(det sigma_A det sigma_B / det sigma_AB).

    Homodyne variants are evaluated exactly through their projected
    (pinched) limits rather than with large finite variances.
    """
    gc = conditional_cm(pi, meas_E)
    mA = as_measurement(meas_A, pi.n_A)
    mB = as_measurement(meas_B, pi.n_B)
    rows_A, noise_A = _side_selection(mA, 0)
    rows_B, noise_B = _side_selection(mB, 2 * pi.n_A)
    T = np.zeros((len(rows_A) + len(rows_B), 2 * pi.n_AB))
    for i, (off, r) in enumerate(rows_A + rows_B):
        T[i, off:off + r.size] = r
    sigma = T @ gc @ T.T + block_diag(*(noise_A + noise_B))
    dA = len(rows_A)
    det_A = np.linalg.det(sigma[:dA, :dA])
    det_B = np.linalg.det(sigma[dA:, dA:])
    det = np.linalg.det(sigma)
    if not np.isfinite(det) or det <= 0 or det_A <= 0 or det_B <= 0:
        raise DegenerateDistribution("singular outcome distribution")
    val = 0.5 * np.log(det_A * det_B / det)
    return max(val, 0.0)


def _f_general(gc: np.ndarray, GA: np.ndarray, GB: np.ndarray) -> float:
    """f for one-mode sides with finite seeds; fast path used by optimizers."""
    s = gc + block_diag(GA, GB)
    dA = s[0, 0] * s[1, 1] - s[0, 1] ** 2
    dB = s[2, 2] * s[3, 3] - s[2, 3] ** 2
    d = np.linalg.det(s)
    if d <= 0:
        return np.inf
    return max(0.5 * np.log(dA * dB / d), 0.0)


def _f_hompair(gc: np.ndarray, a0: float, a1: float) -> float:
    """f for exact x_theta homodyne on both sides."""
    v0 = np.array([np.cos(a0), np.sin(a0)])
    v1 = np.array([np.cos(a1), np.sin(a1)])
    sA = v0 @ gc[:2, :2] @ v0
    sB = v1 @ gc[2:, 2:] @ v1
    c = v0 @ gc[:2, 2:] @ v1
    det = sA * sB - c * c
    if det <= 0:
        return np.inf
    return max(0.5 * np.log(sA * sB / det), 0.0)


def _batch_f_general(gc_arr: np.ndarray, GAB: np.ndarray) -> np.ndarray:
    """f over (outer, eve): gc_arr (E,4,4), GAB (O,4,4) -> (O,E)."""
    s = gc_arr[None, :] + GAB[:, None]
    dA = s[..., 0, 0] * s[..., 1, 1] - s[..., 0, 1] ** 2
    dB = s[..., 2, 2] * s[..., 3, 3] - s[..., 2, 3] ** 2
    d = np.linalg.det(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = 0.5 * np.log(dA * dB / d)
    f[~np.isfinite(f)] = np.inf
    return np.maximum(f, 0.0)


def _batch_f_hompair(gc_arr: np.ndarray, a0: float, a1: float) -> np.ndarray:
    v0 = np.array([np.cos(a0), np.sin(a0)])
    v1 = np.array([np.cos(a1), np.sin(a1)])
    sA = np.einsum("i,eij,j->e", v0, gc_arr[:, :2, :2], v0)
    sB = np.einsum("i,eij,j->e", v1, gc_arr[:, 2:, 2:], v1)
    c = np.einsum("i,eij,j->e", v0, gc_arr[:, :2, 2:], v1)
    det = sA * sB - c * c
    with np.errstate(divide="ignore", invalid="ignore"):
        f = 0.5 * np.log(sA * sB / det)
    f[~np.isfinite(f) | (det <= 0)] = np.inf
    return np.maximum(f, 0.0)


# ---------------------------------------------------------------------------
# Eve's side: candidate sets and the inner infimum


def _two_mode_eve_cm(x: np.ndarray, t_max: float) -> np.ndarray:
    """Two-mode Eve seed S diag(nu1,nu1,nu2,nu2) S^T from 12 parameters.

    Squeeze magnitudes are clipped to the optimizer box; the symplectic is
    assembled raw since extreme probes would fail the strict type check
    on rounding alone.
    """
    from .symplectic import _passive_two_mode

    r1 = np.clip(x[4], -t_max, t_max)
    r2 = np.clip(x[5], -t_max, t_max)
    z = np.array([np.exp(-r1), np.exp(r1), np.exp(-r2), np.exp(r2)])
    S = (_passive_two_mode(*x[:4]) * z) @ _passive_two_mode(*x[6:10])
    n1 = np.exp(np.clip(x[10], 0.0, 2 * t_max))
    n2 = np.exp(np.clip(x[11], 0.0, 2 * t_max))
    return (S * np.array([n1, n1, n2, n2])) @ S.T


def _eve_measurement(desc, t_max: float) -> Measurement:
    kind = desc[0]
    if kind == "drop":
        return Measurement.drop(desc[1])
    if kind == "cm1":
        return MeasurementParam(*desc[1]).clamped(t_max).measurement()
    if kind == "hom1":
        return Measurement.homodyne([desc[1]])
    if kind == "prod":
        var = []
        for v in desc[1]:
            if v[0] == "drop":
                var.append(ModeVariant("drop"))
            elif v[0] == "hom1":
                var.append(ModeVariant("homodyne", angle=v[1]))
            else:
                var.append(ModeVariant("cm", cm=MeasurementParam(*v[1]).clamped(t_max).seed_cm()))
        return Measurement.per_mode(var)
    if kind == "gen2":
        return Measurement.from_cm(_two_mode_eve_cm(np.asarray(desc[1]), t_max),
                                   check_physical=False)
    raise ValueError(f"unknown Eve descriptor {kind!r}")


def _eve_param_of(desc, t_max: float):
    kind = desc[0]
    if kind == "drop":
        return "drop"
    if kind == "cm1":
        return MeasurementParam(*desc[1]).clamped(t_max)
    if kind == "hom1":
        return MeasurementParam(phi=desc[1], homodyne=True)
    if kind == "prod":
        return tuple(_eve_param_of(v if v[0] != "drop" else ("drop", 1), t_max)
                     for v in desc[1])
    if kind == "gen2":
        x = list(np.asarray(desc[1], dtype=float))
        return {"symplectic": x[:10], "log_nu": x[10:]}
    return None


def _fast_gamma_c(pi: Purification, desc, t_max: float) -> np.ndarray:
    """Conditional CM for the optimizer's hot descriptors without the
    generic conditioning overhead."""
    kind = desc[0]
    if kind == "drop":
        return pi.gamma_AB.copy()
    C = pi.gamma_ABE
    gE = pi.gamma_E
    if kind == "cm1":
        B = gE + MeasurementParam(*desc[1]).clamped(t_max).seed_cm()
        det = B[0, 0] * B[1, 1] - B[0, 1] ** 2
        Binv = np.array([[B[1, 1], -B[0, 1]], [-B[0, 1], B[0, 0]]]) / det
        return pi.gamma_AB - C @ Binv @ C.T
    if kind == "hom1":
        v = np.array([np.cos(desc[1]), np.sin(desc[1])])
        w = C @ v
        return pi.gamma_AB - np.outer(w, w) / (v @ gE @ v)
    if kind == "gen2":
        B = gE + _two_mode_eve_cm(np.asarray(desc[1]), t_max)
        try:
            Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            Binv = np.linalg.pinv(B, rcond=1e-12)
        return pi.gamma_AB - C @ Binv @ C.T
    if kind == "prod":
        return _prod_gamma_c(pi, desc[1], t_max)
    return conditional_cm(pi, _eve_measurement(desc, t_max))


def _prod_gamma_c(pi: Purification, parts, t_max: float) -> np.ndarray:
    """Conditional CM for a product measurement on two purifying modes."""
    gAB, C, gE = pi.gamma_AB, pi.gamma_ABE, pi.gamma_E
    live = [i for i, v in enumerate(parts) if v[0] != "drop"]
    if not live:
        return gAB.copy()
    idx = np.concatenate([[2 * i, 2 * i + 1] for i in live])
    C = C[:, idx]
    gE = gE[np.ix_(idx, idx)]
    kinds = [parts[i][0] for i in live]
    if all(k == "cm1" for k in kinds):
        B = gE.copy()
        for j, i in enumerate(live):
            B[2 * j:2 * j + 2, 2 * j:2 * j + 2] += \
                MeasurementParam(*parts[i][1]).clamped(t_max).seed_cm()
        return gAB - C @ np.linalg.inv(B) @ C.T
    if all(k == "hom1" for k in kinds):
        P = np.zeros((2 * len(live), len(live)))
        for j, i in enumerate(live):
            P[2 * j, j] = np.cos(parts[i][1])
            P[2 * j + 1, j] = np.sin(parts[i][1])
        W = C @ P
        M = P.T @ gE @ P
        return gAB - W @ np.linalg.inv(M) @ W.T
    # one finite seed, one homodyne: condition the seed mode first
    fin = kinds.index("cm1")
    hom = 1 - fin
    seed = MeasurementParam(*parts[live[fin]][1]).clamped(t_max).seed_cm()
    fi = slice(2 * fin, 2 * fin + 2)
    hi = slice(2 * hom, 2 * hom + 2)
    Bf = gE[fi, fi] + seed
    det = Bf[0, 0] * Bf[1, 1] - Bf[0, 1] ** 2
    Bfi = np.array([[Bf[1, 1], -Bf[0, 1]], [-Bf[0, 1], Bf[0, 0]]]) / det
    Cf, Ch = C[:, fi], C[:, hi]
    cross = gE[hi, fi]
    gAB2 = gAB - Cf @ Bfi @ Cf.T
    Ch2 = Ch - Cf @ Bfi @ cross.T
    gh2 = gE[hi, hi] - cross @ Bfi @ cross.T
    a = parts[live[hom]][1]
    v = np.array([np.cos(a), np.sin(a)])
    w = Ch2 @ v
    return gAB2 - np.outer(w, w) / (v @ gh2 @ v)


class _EveSet:
    """Candidate Eve measurements with cached conditional CMs."""

    def __init__(self, pi: Purification, cfg: OptimizerConfig, rng: np.random.Generator):
        self.pi = pi
        self.cfg = cfg
        self.descs = []
        self.gcs = []
        R = pi.n_E
        lim = 2 * cfg.t_max
        if R == 0:
            self._add(("drop", 0))
        elif R == 1:
            logs = np.linspace(-lim, lim, cfg.grid_points)
            for phi in np.linspace(0, np.pi, cfg.grid_points, endpoint=False):
                for lvx in logs:
                    for lvp in logs:
                        if lvx + lvp >= 0:
                            self._add(("cm1", (phi, lvx, lvp)))
            for phi in np.linspace(0, np.pi, 19, endpoint=False):
                self._add(("hom1", phi))
            self._add(("drop", 1))
        else:
            per = [("hom1", phi) for phi in np.linspace(0, np.pi, 5, endpoint=False)]
            per.append(("drop",))
            per.append(("cm1", (0.0, 0.0, 0.0)))
            per.append(("cm1", (0.0, lim / 2, lim / 2)))
            for phi in (0.0, np.pi / 3, 2 * np.pi / 3):
                per.append(("cm1", (phi, lim / 2, -lim / 2)))
            for a in per:
                for b in per:
                    self._add(("prod", (a, b)))
            for _ in range(80):
                x = np.concatenate([rng.uniform(0, 2 * np.pi, 4), rng.uniform(-3, 3, 2),
                                    rng.uniform(0, 2 * np.pi, 4), rng.uniform(0, 3, 2)])
                self._add(("gen2", x))
        self.gc_arr = np.array(self.gcs)

    def _add(self, desc):
        self.descs.append(desc)
        self.gcs.append(self.gamma_c(desc))

    def gamma_c(self, desc) -> np.ndarray:
        return _fast_gamma_c(self.pi, desc, self.cfg.t_max)


def _count(counter, n=1):
    counter[0] += n


def _refine_eve(eveset: _EveSet, outer_f, best_desc, best_val, counter,
                rng: np.random.Generator, thorough: bool = False):
    """Nelder-Mead descent over Eve's parameter family from the best candidate."""
    pi, cfg = eveset.pi, eveset.cfg
    R = pi.n_E
    maxit = 1200 if thorough else 120 * cfg.refine_iters
    results = [(best_val, best_desc)]

    def run(obj, x0, it):
        res = minimize(obj, x0, method="Nelder-Mead",
                       options=dict(xatol=1e-7, fatol=1e-12, maxiter=it))
        _count(counter, res.nfev)
        return res

    if R == 1:
        kind = best_desc[0]
        if kind == "hom1":
            res = run(lambda x: outer_f(eveset.gamma_c(("hom1", x[0]))), [best_desc[1]], maxit)
            results.append((res.fun, ("hom1", float(res.x[0]))))
        if kind in ("cm1", "drop"):
            x0 = list(best_desc[1]) if kind == "cm1" else [0.0, 2 * cfg.t_max, 2 * cfg.t_max]

            def obj(x):
                return outer_f(eveset.gamma_c(("cm1", (x[0], x[1], x[2]))))
            res = run(obj, x0, maxit * 2)
            results.append((res.fun, ("cm1", tuple(float(v) for v in res.x))))
        if thorough:
            for phi0 in np.linspace(0, np.pi, 4, endpoint=False):
                res = run(lambda x: outer_f(eveset.gamma_c(("hom1", x[0]))), [phi0], 200)
                results.append((res.fun, ("hom1", float(res.x[0]))))
    elif R == 2:
        def obj(x):
            return outer_f(eveset.gamma_c(("gen2", x)))
        starts = []
        if best_desc[0] == "gen2":
            starts.append(np.asarray(best_desc[1], dtype=float))
        for _ in range(4 if thorough else 1):
            starts.append(np.concatenate([rng.uniform(0, 2 * np.pi, 4), rng.uniform(-2, 2, 2),
                                          rng.uniform(0, 2 * np.pi, 4), rng.uniform(0, 2, 2)]))
        gen_maxit = 1500 if thorough else 250
        for x0 in starts:
            res = run(obj, x0, gen_maxit)
            results.append((res.fun, ("gen2", tuple(float(v) for v in res.x))))
        if best_desc[0] == "prod" or thorough:
            def hobj(x):
                return outer_f(eveset.gamma_c(("prod", (("hom1", x[0]), ("hom1", x[1])))))
            res = run(hobj, [0.0, 0.0], 150)
            results.append((res.fun, ("prod", (("hom1", float(res.x[0])),
                                               ("hom1", float(res.x[1]))))))
            for other in (("drop",), ("cm1", (0.0, 0.0, 0.0))):
                def mobj(x, other=other):
                    return outer_f(eveset.gamma_c(("prod", (("hom1", x[0]), other))))
                res = run(mobj, [0.0], 100)
                results.append((res.fun, ("prod", (("hom1", float(res.x[0])), other))))
    val, desc = min(results, key=lambda t: t[0])
    return val, desc


def inf_over_eve(pi: Purification, meas_A, meas_B,
                 cfg: OptimizerConfig = OptimizerConfig(),
                 thorough: bool = True):
    """Infimum of f over Eve's Gaussian measurements at fixed A/B measurements.

    Returns (value, eve_param). For R = 0 the value is f itself.
    """
    if pi.n_E > 2:
        raise InvalidCM("Eve optimization implemented for at most two purifying modes")
    rng = np.random.default_rng(cfg.seed)
    counter = [0]

    def outer_f(gc):
        _count(counter)
        return _f_on_conditional(gc, meas_A, meas_B, pi)

    if pi.n_E == 0:
        return outer_f(pi.gamma_AB), None
    eveset = _EveSet(pi, cfg, rng)
    vals = [outer_f(gc) for gc in eveset.gcs]
    i = int(np.argmin(vals))
    val, desc = _refine_eve(eveset, outer_f, eveset.descs[i], vals[i],
                            counter, rng, thorough=thorough)
    return val, _eve_param_of(desc, cfg.t_max)


def _f_on_conditional(gc: np.ndarray, meas_A, meas_B, pi: Purification) -> float:
    mA = as_measurement(meas_A, pi.n_A)
    mB = as_measurement(meas_B, pi.n_B)
    if mA.seed is not None and mB.seed is not None and gc.shape == (4, 4):
        return _f_general(gc, mA.seed, mB.seed)
    if (gc.shape == (4, 4) and mA.variants and mB.variants
            and mA.variants[0].kind == "homodyne" and mB.variants[0].kind == "homodyne"):
        return _f_hompair(gc, mA.variants[0].angle, mB.variants[0].angle)
    # general path through an explicit purification of the conditional state
    rows_A, noise_A = _side_selection(mA, 0)
    rows_B, noise_B = _side_selection(mB, 2 * pi.n_A)
    T = np.zeros((len(rows_A) + len(rows_B), gc.shape[0]))
    for i, (off, r) in enumerate(rows_A + rows_B):
        T[i, off:off + r.size] = r
    sigma = T @ gc @ T.T + block_diag(*(noise_A + noise_B))
    dA = len(rows_A)
    det_A = np.linalg.det(sigma[:dA, :dA])
    det_B = np.linalg.det(sigma[dA:, dA:])
    det = np.linalg.det(sigma)
    if det <= 0 or det_A <= 0 or det_B <= 0:
        return np.inf
    return max(0.5 * np.log(det_A * det_B / det), 0.0)


# ---------------------------------------------------------------------------
# the nested optimization


def _outer_side_grid(cfg: OptimizerConfig):
    lim = 2 * cfg.t_max
    logs = np.linspace(-lim, lim, cfg.grid_points)
    side = []
    for phi in np.linspace(0, np.pi, cfg.grid_points, endpoint=False):
        for lvx in logs:
            for lvp in logs:
                if lvx + lvp >= 0:
                    side.append((phi, lvx, lvp))
    return side


def _screen(eveset: _EveSet, cfg: OptimizerConfig, counter):
    """Vectorized grid screen: best general pair and best homodyne pair."""
    gc_arr = eveset.gc_arr
    side = _outer_side_grid(cfg)
    ns = len(side)
    side_cm = np.array([MeasurementParam(*p).seed_cm() for p in side])
    GAB = np.zeros((ns * ns, 4, 4))
    GAB[:, :2, :2] = np.repeat(side_cm, ns, axis=0)
    GAB[:, 2:, 2:] = np.tile(side_cm, (ns, 1, 1))
    best_g, best_gi = -np.inf, 0
    chunk = max(1, 4_000_000 // max(1, gc_arr.shape[0] * 16))
    for lo in range(0, ns * ns, chunk):
        f = _batch_f_general(gc_arr, GAB[lo:lo + chunk])
        _count(counter, f.size)
        fmin = f.min(axis=1)
        j = int(np.argmax(fmin))
        if fmin[j] > best_g:
            best_g, best_gi = fmin[j], lo + j
    pair_g = (side[best_gi // ns], side[best_gi % ns])

    angs = np.linspace(0, np.pi, 19, endpoint=False)
    best_h, pair_h = -np.inf, (0.0, 0.0)
    for a0 in angs:
        for a1 in angs:
            f = _batch_f_hompair(gc_arr, a0, a1)
            _count(counter, f.size)
            m = f.min()
            if m > best_h:
                best_h, pair_h = m, (a0, a1)
    return (best_g, pair_g), (best_h, pair_h)


def _quick_inner(eveset: _EveSet, single_f, batch_f, counter, rng):
    vals = batch_f(eveset.gc_arr)
    _count(counter, len(vals))
    i = int(np.argmin(vals))
    val, desc = _refine_eve(eveset, single_f, eveset.descs[i], vals[i], counter, rng,
                            thorough=False)
    return val, desc


def _sup_hom_pairs(eveset, cfg, counter, rng, start):
    def neg(x):
        val, _ = _quick_inner(eveset,
                              lambda gc: _f_hompair(gc, x[0], x[1]),
                              lambda arr: _batch_f_hompair(arr, x[0], x[1]),
                              counter, rng)
        return -val
    res = minimize(neg, list(start), method="Nelder-Mead",
                   options=dict(xatol=1e-6, fatol=1e-10, maxiter=60 * cfg.refine_iters))
    return -res.fun, tuple(float(a) for a in res.x), res


def _sup_general(eveset, cfg, counter, rng, start):
    def neg(x):
        pA = MeasurementParam(x[0], x[1], x[2]).clamped(cfg.t_max)
        pB = MeasurementParam(x[3], x[4], x[5]).clamped(cfg.t_max)
        GAB = np.zeros((1, 4, 4))
        GAB[0, :2, :2] = pA.seed_cm()
        GAB[0, 2:, 2:] = pB.seed_cm()
        val, _ = _quick_inner(eveset,
                              lambda gc: _f_general(gc, GAB[0, :2, :2], GAB[0, 2:, 2:]),
                              lambda arr: _batch_f_general(arr, GAB)[0],
                              counter, rng)
        return -val
    x0 = list(start[0]) + list(start[1])
    res = minimize(neg, x0, method="Nelder-Mead",
                   options=dict(xatol=1e-6, fatol=1e-10, maxiter=75 * cfg.refine_iters))
    pA = MeasurementParam(*res.x[:3]).clamped(cfg.t_max)
    pB = MeasurementParam(*res.x[3:]).clamped(cfg.t_max)
    return -res.fun, (pA, pB), res


def gie(gamma, cfg: OptimizerConfig = OptimizerConfig()) -> GieResult:
    """Gaussian intrinsic entanglement of a two-mode state.

    Nested optimization sup over (Gamma_A, Gamma_B) of inf over Gamma_E of
    the conditional Gaussian mutual information, computed on the standard
    form of the input and its minimal purification. PPT-separable inputs
    short-circuit to zero.
    """
    g = _as_matrix(gamma)
    if g.shape != (4, 4):
        raise InvalidCM("GIE is implemented for two-mode states")
    if symplectic_eigenvalues(g).min() < 1 - 1e-9:
        raise InvalidCM("input CM is unphysical")
    if ppt_separable(g):
        return GieResult(value=0.0, reason="ppt-separable")
    sf = standard_form(g)
    pi = minimal_purification(sf.matrix)
    rng = np.random.default_rng(cfg.seed)
    counter = [0]

    if pi.n_E == 0:
        val, pair, res = _best_classical_mi(pi.gamma_AB, cfg, counter)
        return GieResult(value=val, gamma_A_opt=pair[0], gamma_B_opt=pair[1],
                         gamma_E_opt=None, iterations=counter[0],
                         converged=True, boundary_hit=pair[0].homodyne,
                         reason="pure (no purifying mode)")

    eveset = _EveSet(pi, cfg, rng)
    (val_g, pair_g), (val_h, pair_h) = _screen(eveset, cfg, counter)

    vh, xh, res_h = _sup_hom_pairs(eveset, cfg, counter, rng, pair_h)
    vg, (pA, pB), res_g = _sup_general(eveset, cfg, counter, rng, pair_g)

    # honest final value: thorough inner infimum, evaluated at both simplex
    # winners and both grid winners, keeping the best. A single corrupted
    # argmax (quick inner missing Eve's decorrelating measurement during
    # the outer descent) then cannot sink the reported supremum.
    candidates = [
        (vh, MeasurementParam(phi=xh[0], homodyne=True),
         MeasurementParam(phi=xh[1], homodyne=True)),
        (vg, pA, pB),
        (val_h, MeasurementParam(phi=pair_h[0], homodyne=True),
         MeasurementParam(phi=pair_h[1], homodyne=True)),
        (val_g, MeasurementParam(*pair_g[0]).clamped(cfg.t_max),
         MeasurementParam(*pair_g[1]).clamped(cfg.t_max)),
    ]
    best = None
    for est, ca, cb in candidates:
        measA, measB = ca.measurement(), cb.measurement()

        def outer_f(gc):
            _count(counter)
            return _f_on_conditional(gc, measA, measB, pi)
        vals = np.array([outer_f(gc) for gc in eveset.gcs])
        i = int(np.argmin(vals))
        final, desc = _refine_eve(eveset, outer_f, eveset.descs[i], vals[i],
                                  counter, rng, thorough=True)
        if best is None or final > best[0]:
            best = (final, est, ca, cb, desc)
    final, outer_val, pa, pb, desc = best
    inner_gap = abs(final - outer_val)
    converged = bool(res_h.success or res_g.success) and inner_gap < max(500 * cfg.tol, 5e-4)
    return GieResult(value=max(final, 0.0),
                     gamma_A_opt=pa, gamma_B_opt=pb,
                     gamma_E_opt=_eve_param_of(desc, cfg.t_max),
                     iterations=counter[0], converged=converged,
                     inner_tol_achieved=inner_gap,
                     outer_tol_achieved=abs(vh - vg),
                     boundary_hit=pa.at_boundary(cfg.t_max) or pb.at_boundary(cfg.t_max))


def _best_classical_mi(gc: np.ndarray, cfg: OptimizerConfig, counter, quick: bool = False):
    """sup over A/B measurements of f on a fixed conditional CM.

    Homodyne-angle grid plus simplex refinement, then (unless quick)
    general noisy seeds refined from both the homodyne corner and the
    heterodyne point; the optimum can sit at either boundary or strictly
    inside the variance box.
    """
    angs = np.linspace(0, np.pi, (2 if quick else 4) * cfg.grid_points, endpoint=False)
    best, start = -np.inf, (0.0, 0.0)
    for a0 in angs:
        for a1 in angs:
            v = _f_hompair(gc, a0, a1)
            _count(counter)
            if np.isfinite(v) and v > best:
                best, start = v, (a0, a1)
    res = minimize(lambda x: -_f_hompair(gc, x[0], x[1]), list(start),
                   method="Nelder-Mead",
                   options=dict(xatol=1e-7, fatol=1e-12, maxiter=300))
    _count(counter, res.nfev)
    pair = (MeasurementParam(phi=float(res.x[0]), homodyne=True),
            MeasurementParam(phi=float(res.x[1]), homodyne=True))
    best = max(best, -res.fun)
    het = _f_general(gc, np.eye(2), np.eye(2))
    if het > best:
        best = het
        pair = (MeasurementParam(0.0), MeasurementParam(0.0))
    if quick:
        return best, pair, res

    def neg(x):
        _count(counter)
        pA = MeasurementParam(x[0], x[1], x[2]).clamped(cfg.t_max)
        pB = MeasurementParam(x[3], x[4], x[5]).clamped(cfg.t_max)
        return -_f_general(gc, pA.seed_cm(), pB.seed_cm())
    lim = 2 * cfg.t_max
    a0, a1 = start
    best_x = None
    for x0 in ([a0, lim, -lim, a1, lim, -lim], [a0, 0.0, 0.0, a1, 0.0, 0.0]):
        res2 = minimize(neg, x0, method="Nelder-Mead",
                        options=dict(xatol=1e-6, fatol=1e-11, maxiter=400))
        if -res2.fun > best:
            best, best_x = -res2.fun, res2.x
    if best_x is not None:
        # restart from the incumbent; simplex descent on this landscape
        # tends to collapse early
        res2 = minimize(neg, best_x, method="Nelder-Mead",
                        options=dict(xatol=1e-8, fatol=1e-13, maxiter=400))
        if -res2.fun > best:
            best, best_x = -res2.fun, res2.x
        pair = (MeasurementParam(*best_x[:3]).clamped(cfg.t_max),
                MeasurementParam(*best_x[3:]).clamped(cfg.t_max))
    return best, pair, res


def upper_bound_U(gamma, cfg: OptimizerConfig = OptimizerConfig()) -> float:
    """Swapped-order bound: inf over Eve of the conditional-state Gaussian
    classical mutual information. Always >= gie(gamma) up to tolerance."""
    g = _as_matrix(gamma)
    if g.shape != (4, 4):
        raise InvalidCM("upper bound is implemented for two-mode states")
    if ppt_separable(g):
        return 0.0
    sf = standard_form(g)
    pi = minimal_purification(sf.matrix)
    rng = np.random.default_rng(cfg.seed)
    counter = [0]
    if pi.n_E == 0:
        val, _, _ = _best_classical_mi(pi.gamma_AB, cfg, counter)
        return val

    def sup_ab(gc, quick=True):
        return _best_classical_mi(gc, cfg, counter, quick=quick)[0]

    eveset = _EveSet(pi, cfg, rng)
    vals = [sup_ab(gc) for gc in eveset.gcs]
    i = int(np.argmin(vals))
    best_val, best_desc = _refine_eve(eveset, sup_ab, eveset.descs[i], vals[i],
                                      counter, rng, thorough=True)
    final = sup_ab(eveset.gamma_c(best_desc), quick=False)
    return max(final, 0.0)


# ---------------------------------------------------------------------------
# closed forms


def gie_pure_closed(gamma) -> float:
    """GIE of a pure two-mode state: (1/2) ln det gamma_A."""
    g = _as_matrix(gamma)
    if np.abs(symplectic_eigenvalues(g) - 1).max() > 1e-7:
        raise NotPure("closed form requires a pure state")
    return 0.5 * np.log(np.linalg.det(g[:2, :2]))


def _ghz_xpm(r: float):
    xp = (np.exp(2 * r) + 2 * np.exp(-2 * r)) / 3
    xm = (np.exp(-2 * r) + 2 * np.exp(2 * r)) / 3
    return xp, xm


def gie_ghz_closed(r: float):
    """GIE of the two-mode GHZ reduction with branch diagnostics.

    Returns (value, diagnostics): the value is ln(x_- / (e^r sqrt(x_+)));
    diagnostics hold the three boundary candidates U1 >= U3, U2 >= U3, the
    threshold squeezing where a_max reaches 2, and a_max itself.
    """
    if r < 0:
        raise ValueError("squeezing must be nonnegative")
    xp, xm = _ghz_xpm(r)
    u1 = np.log(np.exp(r) * xp / np.sqrt(xm))
    u2 = np.log((np.exp(r) * (xm / xp) ** 0.25 + np.exp(-r) * (xp / xm) ** 0.25) / 2)
    u3 = np.log(xm / (np.exp(r) * np.sqrt(xp)))
    diag = {
        "U1": u1,
        "U2": u2,
        "U3": u3,
        "r_th": 0.25 * np.arccosh(31.0 / 4.0),
        "a_max": np.sqrt(xp * xm),
    }
    return u3, diag


def ghz_internal(v_x: float, v_p: float, phi: float, r: float):
    """Conditional-state entries for the GHZ family at one Eve measurement.

    v_x, v_p are the conditional single-mode variances of the purifying
    TMSV arm (region: 1/nu <= v_p <= nu, 1/v_p <= v_x <= nu, v_x >= v_p)
    and phi the measurement rotation. Returns (a, c1/a, s) with
    s = sqrt(a^2 - c1^2).
    """
    if r < 0:
        raise ValueError("squeezing must be nonnegative")
    xp, xm = _ghz_xpm(r)
    nu = np.sqrt(xp * xm)
    tol = 1e-9
    if not (1 / nu - tol <= v_p <= nu + tol and v_p - tol <= v_x <= nu + tol
            and v_x * v_p >= 1 - tol):
        raise ValueError("(v_p, v_x) outside the reachable region")
    q = r + 0.25 * np.log(xm / xp)
    vpl = (v_x + v_p) / 2
    vmi = (v_x - v_p) / 2
    a = 0.5 * np.sqrt(1 + v_x * v_p + 2 * (vpl * np.cosh(2 * q)
                                           + vmi * np.sinh(2 * q) * np.cos(2 * phi)))
    K = (v_x * v_p - 1) / 4
    g = K / a ** 2 + np.sqrt(max((K / a ** 2 - 1) ** 2 - 1 / a ** 2, 0.0))
    s = a * np.sqrt(max(1 - g ** 2, 0.0))
    return a, g, s


def sym_classical_mi(gamma_std, tol: float = 1e-8):
    """Gaussian classical mutual information of a symmetric standard-form CM.

    Valid closed form (double x homodyne optimal) when
    (2a+1)^2 >= a^2 (a^2 - c1^2); the flag reports whether that condition
    holds. The value (1/2) ln(a^2/(a^2 - c1^2)) is returned either way.
    """
    g = _as_matrix(gamma_std)
    if g.shape != (4, 4):
        raise InvalidCM("expected a two-mode CM")
    a = g[0, 0]
    offdiag_zero = max(abs(g[0, 1]), abs(g[2, 3]), abs(g[0, 3]), abs(g[1, 2]))
    if (abs(g[1, 1] - a) > tol or abs(g[2, 2] - a) > tol or abs(g[3, 3] - a) > tol
            or offdiag_zero > tol):
        raise InvalidCM("expected a symmetric (a = b) standard-form CM")
    c1, c2 = g[0, 2], g[1, 3]
    if c1 < abs(c2) - tol:
        raise InvalidCM("standard form requires c1 >= |c2|")
    value = 0.5 * np.log(a ** 2 / (a ** 2 - c1 ** 2)) if a ** 2 > c1 ** 2 else np.inf
    condition = (2 * a + 1) ** 2 >= a ** 2 * (a ** 2 - c1 ** 2)
    return value, bool(condition)
