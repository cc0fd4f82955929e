"""Command-line front end: state construction, GIE computation, figure-data
sweeps (CSV plus optional rendered figures), and property-suite execution.

stdout carries data only; all logging goes to stderr. Exit codes:
0 success, 1 input error, 2 convergence warning, 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from scipy.linalg import block_diag

from . import __version__
from .errors import GielabError
from .gie import OptimizerConfig, gie, gie_ghz_closed, gie_pure_closed, upper_bound_U
from .measures import entropy_of_entanglement_pure, gr2_ghz, log_negativity
from .measurements import Measurement
from .states import (
    LocalChannel,
    Purification,
    apply_local_channel,
    find_separable_decomposition,
    ghz_cm,
    minimal_purification,
    ppt_separable,
    product_projecting_measurement,
    random_cm,
    tmsv_cm,
)
from .symplectic import parse_cm_text, standard_form, williamson
from .werner import STRATEGIES, WernerParams, eve_strategy_cmi, lower_bound

log = logging.getLogger("gielab")

SCHEMA = "gie-lab/1"
EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CONVERGENCE = 2
EXIT_VERIFY = 3


def _fmt(x) -> str:
    return f"{float(x):.12g}"


def _parse_range(text: str) -> np.ndarray:
    try:
        a, b, step = (float(t) for t in text.split(":"))
    except ValueError as exc:
        raise GielabError(f"bad range {text!r}, expected start:stop:step") from exc
    if step <= 0 or b < a:
        raise GielabError("range must have positive step and stop >= start")
    n = int(round((b - a) / step)) + 1
    return a + step * np.arange(n)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("GIE_LAB_THREADS", "1")))
    except ValueError:
        return 1


def _load_state(args) -> np.ndarray:
    if args.state == "tmsv":
        return tmsv_cm(args.r).m
    if args.state == "ghz":
        return ghz_cm(args.r)[1].m
    if args.state.startswith("file:"):
        path = Path(args.state[5:])
        return parse_cm_text(path.read_text()).m
    raise GielabError(f"unknown state {args.state!r}; use tmsv, ghz or file:<path>")


def _optimizer_config(args) -> OptimizerConfig:
    return OptimizerConfig(grid_points=args.grid_points, refine_iters=args.refine_iters,
                           tol=args.tol, t_max=args.t_max, seed=args.seed)


def _write_rows(path, header, rows, fmt="csv"):
    if fmt == "json":
        text = json.dumps({"schema": SCHEMA, "columns": header,
                           "rows": [[float(_fmt(v)) for v in row] for row in rows]},
                          indent=2) + "\n"
    else:
        text = ",".join(header) + "\n"
        for row in rows:
            text += ",".join(_fmt(v) for v in row) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _render_figure(path, header, rows, title):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    arr = np.asarray(rows, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    for j in range(1, arr.shape[1]):
        ax.plot(arr[:, 0], arr[:, j], label=header[j])
    ax.set_xlabel(header[0])
    ax.set_ylabel("nats")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    log.info("wrote figure %s", path)


# ---------------------------------------------------------------------------
# commands


def cmd_gie(args) -> int:
    g = _load_state(args)
    if args.channel:
        ch = LocalChannel.from_json_dict(json.loads(args.channel))
        g = apply_local_channel(g, ch)
    cfg = _optimizer_config(args)
    result = gie(g, cfg)
    report = {
        "schema": SCHEMA,
        "version": __version__,
        "state": args.state,
        "config": cfg.__dict__,
        "result": result.to_jsonable(),
        "value": result.value,
    }
    if args.state == "tmsv":
        report["closed_form"] = gie_pure_closed(g) if not args.channel else None
    elif args.state == "ghz":
        closed, diag = gie_ghz_closed(args.r)
        if not args.channel:
            report["closed_form"] = closed
            report["diagnostics"] = diag
    if args.upper_bound:
        report["upper_bound"] = upper_bound_U(g, cfg)
    json.dump(report, sys.stdout, indent=2, default=float)
    sys.stdout.write("\n")
    return EXIT_OK if result.converged else EXIT_CONVERGENCE


def _sweep_pure(grid, cfg):
    header = ["r_tilde", "GIE", "E", "E_N"]
    rows = []
    for rt in grid:
        g = tmsv_cm(rt)
        rows.append([rt, np.log(np.cosh(2 * rt)), entropy_of_entanglement_pure(g),
                     2 * rt])
    return header, rows


def _sweep_ghz(grid, cfg):
    header = ["r", "GIE_numeric", "GIE_closed", "GR2", "E_N"]

    def row(r):
        g = ghz_cm(r)[1]
        closed, _ = gie_ghz_closed(r)
        num = gie(g.m, cfg).value
        return [r, num, closed, gr2_ghz(r), log_negativity(g.m)]

    with ThreadPoolExecutor(max_workers=_workers()) as ex:
        rows = list(ex.map(row, grid))
    return header, rows


def _sweep_werner(grid, lam, cutoff):
    header = ["p", "L", "cmi_eigen", "cmi_comp", "cmi_pm", "cmi_drop"]

    def row(p):
        params = WernerParams(p=p, lam=lam, cutoff=cutoff)
        return [p, lower_bound(params)] + [eve_strategy_cmi(params, s) for s in STRATEGIES]

    with ThreadPoolExecutor(max_workers=_workers()) as ex:
        rows = list(ex.map(row, grid))
    return header, rows


def cmd_sweep(args) -> int:
    cfg = _optimizer_config(args)
    if args.figure == "pure":
        grid = _parse_range(args.range or "0:2:0.05")
        header, rows = _sweep_pure(grid, cfg)
    elif args.figure == "ghz":
        grid = _parse_range(args.range or "0:2:0.1")
        header, rows = _sweep_ghz(grid, cfg)
    else:
        grid = _parse_range(args.p_grid or args.range or "0:1:0.02")
        header, rows = _sweep_werner(grid, args.lam, args.cutoff)
    _write_rows(args.out, header, rows, fmt=args.format)
    if args.out:
        log.info("wrote %s (%d rows)", args.out, len(rows))
        if args.plot:
            _render_figure(Path(args.out).with_suffix(".png"), header, rows,
                           f"{args.figure} sweep")
    return EXIT_OK


def cmd_werner(args) -> int:
    grid = _parse_range(args.p_grid)
    header, rows = _sweep_werner(grid, args.lam, args.cutoff)
    _write_rows(args.out, header, rows)
    if args.out and args.plot:
        _render_figure(Path(args.out).with_suffix(".png"), header, rows, "werner bound")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verification suites


def _suite_core(rng, checks):
    worst = 0.0
    for _ in range(300):
        n = int(rng.integers(1, 4))
        g = random_cm(n, rng)
        dec = williamson(g)
        D = np.diag(np.repeat(dec.nu, 2))
        worst = max(worst, np.abs(dec.S.m @ g @ dec.S.m.T - D).max())
    checks.append(("williamson-round-trip", worst, 1e-8))
    worst = 0.0
    from .symplectic import schur_complement
    for _ in range(100):
        M = rng.normal(size=(6, 6))
        M = M @ M.T + 0.5 * np.eye(6)
        A, C, B = M[:2, :2], M[:2, 2:], M[2:, 2:]
        direct = A - C @ np.linalg.inv(B) @ C.T
        worst = max(worst, np.abs(schur_complement(M, [0, 1]) - direct).max())
    checks.append(("schur-blockwise-identity", worst, 1e-10))
    worst = 0.0
    from .symplectic import partial_transpose
    for _ in range(50):
        g = random_cm(2, rng)
        pt = partial_transpose(g, [1])
        worst = max(worst, np.abs(partial_transpose(pt, [1]) - g).max())
        worst = max(worst, abs(np.linalg.det(pt) - np.linalg.det(g)))
    checks.append(("partial-transpose-involution", worst, 1e-8))
    worst = 0.0
    for _ in range(50):
        g = random_cm(2, rng)
        sf = standard_form(g)
        SA, SB = sf.local_symplectics
        T = block_diag(SA, SB)
        worst = max(worst, np.abs(T @ g @ T.T - sf.matrix).max())
    checks.append(("standard-form-reconstruction", worst, 1e-8))


def _suite_channel(rng, checks):
    from .reductions import ChannelSpec, channel_processed_sigma, integrate_channel
    from .states import conditional_cm

    pi = minimal_purification(ghz_cm(0.5)[1].m)
    worst = 0.0
    for _ in range(100):
        L = int(rng.integers(1, 5))
        X = rng.normal(size=(L, 2 * pi.n_E))
        W = rng.normal(size=(L, L))
        Y = W @ W.T + 0.1 * np.eye(L)
        GE = random_cm(pi.n_E, rng, nu_max=2.0)
        ch = ChannelSpec(X=X, Y=Y)
        s1 = channel_processed_sigma(pi, np.eye(2), np.eye(2), GE, ch)
        meas = integrate_channel(pi, GE, ch, x=1e8)
        s2 = conditional_cm(pi, meas) + np.eye(4)
        worst = max(worst, np.abs(s1 - s2).max())
    checks.append(("channel-absorption-sigma", worst, 1e-6))


def _suite_purification(rng, checks):
    from .reductions import reduce_purification_measurement
    from .states import conditional_cm

    worst = 0.0
    for _ in range(50):
        g = random_cm(2, rng)
        pi_min = minimal_purification(g)
        K = pi_min.n_E + 1
        SE = _random_symplectic(K, rng)
        pad = block_diag(pi_min.full, np.eye(2 * (K - pi_min.n_E)))
        T = block_diag(np.eye(4), np.linalg.inv(SE))
        pi_big = Purification.from_pure_cm(T @ pad @ T.T, n_A=1, n_B=1)
        GE = random_cm(K, rng, nu_max=2.0)
        red = reduce_purification_measurement(pi_big, Measurement.from_cm(GE))
        s_big = conditional_cm(pi_big, Measurement.from_cm(GE)) + np.eye(4)
        s_min = conditional_cm(pi_min, red) + np.eye(4)
        worst = max(worst, np.abs(s_big - s_min).max())
    checks.append(("purification-reduction-sigma", worst, 1e-8))


def _random_symplectic(n, rng):
    from .symplectic import rotation
    S = np.eye(2 * n)
    for _ in range(3):
        blocks = []
        for _ in range(n):
            t1, t2 = rng.uniform(0, 2 * np.pi, 2)
            r = rng.uniform(0, 0.5)
            blocks.append(rotation(t1) @ np.diag([np.exp(-r), np.exp(r)]) @ rotation(t2))
        S = block_diag(*blocks) @ S
        for i in range(n - 1):
            th = rng.uniform(0, 2 * np.pi)
            bs = np.eye(2 * n)
            bs[2 * i:2 * i + 2, 2 * i:2 * i + 2] = np.cos(th) * np.eye(2)
            bs[2 * i + 2:2 * i + 4, 2 * i + 2:2 * i + 4] = np.cos(th) * np.eye(2)
            bs[2 * i:2 * i + 2, 2 * i + 2:2 * i + 4] = np.sin(th) * np.eye(2)
            bs[2 * i + 2:2 * i + 4, 2 * i:2 * i + 2] = -np.sin(th) * np.eye(2)
            S = bs @ S
    return S


def _suite_separable(rng, checks):
    from .gie import mutual_info_f

    worst_f = 0.0
    all_zero = True
    n_ok = 0
    trials = 0
    while n_ok < 20 and trials < 200:
        trials += 1
        gA = _random_symplectic(1, rng)
        gB = _random_symplectic(1, rng)
        M = rng.normal(size=(4, int(rng.integers(1, 5)))) * 0.7
        g = block_diag(gA @ gA.T, gB @ gB.T) + M @ M.T
        if not ppt_separable(g):
            continue
        dec = find_separable_decomposition(g)
        if dec is None:
            continue
        n_ok += 1
        pi = minimal_purification(g)
        meas = product_projecting_measurement(dec, pi, s=10.0)
        f = mutual_info_f(pi, Measurement.homodyne([0.0]), Measurement.homodyne([0.0]), meas)
        worst_f = max(worst_f, f)
        res = gie(g)
        all_zero = all_zero and res.value == 0.0 and res.reason == "ppt-separable"
    checks.append(("separable-f-vanishes", worst_f, 1e-3))
    checks.append(("separable-count", 20 - n_ok, 0.5))
    checks.append(("separable-gie-zero", 0.0 if all_zero else 1.0, 0.5))


def _suite_monotonic(rng, checks, cfg):
    g = ghz_cm(0.5)[1].m
    vals = []
    for eta in (1.0, 0.8, 0.6, 0.4, 0.2):
        ch = LocalChannel.pure_loss(eta, eta)
        vals.append(gie(apply_local_channel(g, ch), cfg).value)
        log.info("monotonic: eta=%.1f gie=%.6f", eta, vals[-1])
    worst = max(max(vals[i + 1] - vals[i] for i in range(len(vals) - 1)), 0.0)
    checks.append(("pure-loss-monotonicity", worst, 2e-3))


def cmd_verify(args) -> int:
    rng = np.random.default_rng(args.seed)
    cfg = _optimizer_config(args)
    suites = {
        "core": lambda: _suite_core(rng, checks),
        "channel": lambda: _suite_channel(rng, checks),
        "purification": lambda: _suite_purification(rng, checks),
        "separable": lambda: _suite_separable(rng, checks),
        "monotonic": lambda: _suite_monotonic(rng, checks, cfg),
    }
    names = list(suites) if args.suite == "all" else [args.suite]
    checks = []
    for name in names:
        log.info("running suite %s", name)
        suites[name]()
    report = {
        "schema": SCHEMA,
        "suites": names,
        "checks": [{"name": n, "residual": float(r), "tolerance": t, "passed": bool(r <= t)}
                   for n, r, t in checks],
    }
    report["passed"] = all(c["passed"] for c in report["checks"])
    json.dump(report, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK if report["passed"] else EXIT_VERIFY


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gielab",
                                 description="Gaussian intrinsic entanglement toolkit")
    ap.add_argument("--log-level", default="INFO")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_optimizer_flags(p):
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--t-max", dest="t_max", type=float, default=10.0)
        p.add_argument("--grid-points", dest="grid_points", type=int, default=5)
        p.add_argument("--refine-iters", dest="refine_iters", type=int, default=2)
        p.add_argument("--seed", type=int, default=1234)

    p = sub.add_parser("gie", help="compute GIE of a state")
    p.add_argument("state", help="tmsv | ghz | file:<path>")
    p.add_argument("--r", type=float, default=0.5, help="squeezing parameter")
    p.add_argument("--channel", help='local channel JSON {"eta_A":..,"noise_A":..}')
    p.add_argument("--upper-bound", action="store_true",
                   help="also compute the swapped-order bound")
    add_optimizer_flags(p)
    p.set_defaults(func=cmd_gie)

    p = sub.add_parser("sweep", help="figure-data sweeps as CSV")
    p.add_argument("figure", choices=["pure", "ghz", "werner"])
    p.add_argument("--range", help="start:stop:step for the swept parameter")
    p.add_argument("--p-grid", dest="p_grid", help="start:stop:step (werner)")
    p.add_argument("--lambda", dest="lam", type=float, default=0.3)
    p.add_argument("--cutoff", type=int, default=40)
    p.add_argument("--out", help="CSV output path (stdout when omitted)")
    p.add_argument("--plot", action="store_true",
                   help="render a figure next to the CSV")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    add_optimizer_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("werner", help="Werner-state bound sweep")
    p.add_argument("--p-grid", dest="p_grid", default="0:1:0.02")
    p.add_argument("--lambda", dest="lam", type=float, default=0.3)
    p.add_argument("--cutoff", type=int, default=40)
    p.add_argument("--out", help="CSV output path (stdout when omitted)")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_werner)

    p = sub.add_parser("verify", help="run property suites")
    p.add_argument("suite", choices=["core", "channel", "purification",
                                     "separable", "monotonic", "all"])
    add_optimizer_flags(p)
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=args.log_level.upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (GielabError, OSError, json.JSONDecodeError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
