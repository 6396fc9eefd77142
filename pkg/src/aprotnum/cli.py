"""Command-line entry point: ``aprotnum {scan,apdiag,oracle-compare,decompose-check}``.

Exit codes: 0 success, 1 usage or configuration error, 2 numeric failure
(including an oracle deviation above tolerance).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Optional

from . import apmodels as ap
from .config import ConfigError, RunConfig, load_config
from .oracle import (
    OracleError,
    PeriodicSpec,
    circle_map_rho,
    closed_form_rho_constant,
    exact_piecewise_evolve,
    kp_discriminant,
)
from .prufer import NonFiniteError
from .rotnum import detect_plateaus, estimate_rho, estimate_rho_birkhoff, scan

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2
QUAD_TOL = 1e-6
FIELDS = ("E", "rho", "error_est", "n_steps", "x_final")


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, int):
        return str(v)
    return f"{v:.17g}"


def rows_to_csv(rows) -> str:
    with_err = any(r.error for r in rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(FIELDS + (("error",) if with_err else ()))
    for r in rows:
        line = [_fmt(r.energy), _fmt(r.rho), _fmt(r.error_est), str(r.n_steps), _fmt(r.x_final)]
        if with_err:
            line.append(r.error or "")
        w.writerow(line)
    return buf.getvalue()


def _finite_or_none(v):
    return v if math.isfinite(v) else None


def rows_to_json(rows) -> str:
    out = []
    for r in rows:
        d = {
            "E": r.energy,
            "rho": _finite_or_none(r.rho),
            "error_est": _finite_or_none(r.error_est),
            "n_steps": r.n_steps,
            "x_final": _finite_or_none(r.x_final),
        }
        if r.error:
            d["error"] = r.error
        out.append(d)
    return json.dumps(out, indent=1, allow_nan=False) + "\n"


def _jobs(arg: Optional[int]) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("ROTNUM_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"ROTNUM_JOBS must be an integer, got {env!r}")
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_scan(args) -> int:
    cfg = load_config(args.config)
    energies = cfg.energy_list()
    if not energies:
        raise UsageError("config has an empty energy list")
    p = cfg.build_potential()
    rows = scan(
        p,
        energies=energies,
        xi=cfg.initial_angle,
        n_steps=cfg.horizon,
        cfg=cfg.integrator_config(),
        jobs=_jobs(args.jobs),
    )
    fmt = args.format or (cfg.output or {}).get("format", "csv")
    text = rows_to_csv(rows) if fmt == "csv" else rows_to_json(rows)
    out_path = args.out or (cfg.output or {}).get("path")
    summary = sys.stderr if out_path is None else sys.stdout
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    plateaus = detect_plateaus(rows, args.flat_tol, args.min_width)
    print(f"# plateaus (flat_tol={args.flat_tol:g}, min_width={args.min_width}): {len(plateaus)}", file=summary)
    for lo, hi, rho in plateaus:
        print(f"#   E in [{lo:.6g}, {hi:.6g}]  rho = {rho:.10g}  rho/pi = {rho / math.pi:.6g}", file=summary)
    ok = sum(1 for r in rows if r.error is None)
    if ok == 0:
        print("error: every energy failed", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_apdiag(args) -> int:
    if not args.eps > 0:
        raise UsageError("--eps must be positive")
    if args.range < 0:
        raise UsageError("--range must be >= 0")
    cfg = load_config(args.config)
    p = cfg.build_potential()
    rep = ap.epsilon_periods(p, args.eps, args.range, args.window)
    print(rep.summary())
    print("eps-periods:", " ".join(str(t) for t in rep.found_periods) if rep.found_periods else "none")
    if rep.window_bound is None:
        print("relative denseness: not found in range")
    else:
        print(f"relative denseness: every {rep.window_bound} consecutive shifts in range contain a period")
    n = args.n
    print(f"density [Gamma] ~ {ap.density(p.gamma, n):.12g} (n={n})")
    print(f"mean value M(V) ~ {ap.mean_value_seq(p.V, 0, n):.12g} (indices 0..{n - 1})")
    span = p.gamma.x(n)
    print(f"mean value M(potential) ~ {ap.mean_value_potential(p, 0.0, span):.12g} (over [0, {span:.6g}))")
    return EXIT_OK


def _periodic_period(spec: dict) -> Optional[int]:
    """Lattice period of a config potential, or None if not periodic."""
    if spec["gamma"]["type"] != "periodic":
        return None

    def seq_period(s):
        t = s["type"]
        if t == "constant":
            return 1
        if t == "alternating":
            return 2
        if t == "periodic":
            return len(s["values"])
        return None

    pv = seq_period(spec["V"])
    q = spec["q"]
    if q["type"] == "constant":
        pq = 1
    elif q["type"] == "piecewise":
        pq = seq_period(q["values"])
    else:
        return None
    if pv is None or pq is None:
        return None
    return pv * pq // math.gcd(pv, pq)


def cmd_oracle_compare(args) -> int:
    cfg = load_config(args.config)
    energies = cfg.energy_list()
    if not energies:
        raise UsageError("config has an empty energy list")
    p = cfg.build_potential()
    icfg = cfg.integrator_config()
    spec = cfg.potential
    xi, n = cfg.initial_angle, cfg.horizon
    is_const = spec["q"]["type"] == "constant" and spec["V"]["type"] == "constant" and spec["V"]["value"] == 0
    period = _periodic_period(spec)
    piecewise = spec["q"]["type"] in ("constant", "piecewise")
    if is_const:
        mode = "constant"
    elif period is not None:
        mode = "periodic"
    elif piecewise:
        mode = "piecewise-exact"
    else:
        mode = "internal"
        print("no closed-form oracle; internal consistency only (direct vs Birkhoff)")
    print(f"oracle mode: {mode}  tol={args.tol:g}  n_steps={n}")
    worst = 0.0
    for e in energies:
        direct = estimate_rho(p, e, xi, n, icfg)
        birk = estimate_rho_birkhoff(p, e, xi, n, icfg)
        cols = [f"E={e:.10g}", f"direct={direct.rho:.12g}", f"birkhoff={birk.rho:.12g}"]
        devs = [abs(direct.rho - birk.rho)]
        if mode == "constant":
            ref = closed_form_rho_constant(spec["q"]["value"], e)
            cols.append(f"closed_form={ref:.12g}")
            devs.append(abs(direct.rho - ref))
        elif mode == "periodic":
            ref = circle_map_rho(PeriodicSpec(p, period), e, cfg=icfg)
            cols.append(f"circle_map={ref:.12g}")
            devs.append(abs(direct.rho - ref))
            if spec["q"]["type"] == "constant" and spec["q"]["value"] == 0 and spec["V"]["type"] == "constant":
                cols.append(f"kp_discriminant={kp_discriminant(e, p.gamma.x(1), spec['V']['value']):.8g}")
        elif mode == "piecewise-exact":
            traj = exact_piecewise_evolve(p, e, xi, n)
            ref = (traj.theta[-1] - xi) / traj.x[-1]
            cols.append(f"exact={ref:.12g}")
            devs.append(abs(direct.rho - ref))
        dev = max(devs)
        worst = max(worst, dev)
        cols.append(f"max_dev={dev:.3g}")
        cols.append("PASS" if dev <= args.tol else "FAIL")
        print("  ".join(cols))
    print(f"worst deviation {worst:.3g} {'<=' if worst <= args.tol else '>'} tol {args.tol:g}")
    return EXIT_OK if worst <= args.tol else EXIT_NUMERIC


def decompose_sides(p: ap.GeneralizedPotential, span: float) -> tuple:
    """Both sides of M(f + sum v delta) = M(f) + [Gamma] M(V) over [0, span)."""
    lhs = ap.mean_value_potential(p, 0.0, span)
    bare = ap.GeneralizedPotential(p.q, ap.constant_sequence(0.0), p.gamma)
    last = p.gamma.index_of(span)
    count = last if p.gamma.x(last) == span else last + 1
    rhs = ap.mean_value_potential(bare, 0.0, span) + ap.density(p.gamma, count) * ap.mean_value_seq(p.V, 0, count)
    return lhs, rhs


def cmd_decompose_check(args) -> int:
    if not args.span > 0:
        raise UsageError("--span must be positive")
    cfg = load_config(args.config)
    p = cfg.build_potential()
    lhs, rhs = decompose_sides(p, args.span)
    diff = abs(lhs - rhs)
    limit = 10 * (1 / args.span + QUAD_TOL)
    print(f"M(full)              = {lhs:.15g}")
    print(f"M(q) + [Gamma] M(V)  = {rhs:.15g}")
    print(f"difference           = {diff:.3g} (limit {limit:.3g})")
    return EXIT_OK if diff <= limit else EXIT_NUMERIC


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aprotnum", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("scan", help="rotation number over an energy grid")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--format", choices=("csv", "json"))
    s.add_argument("--jobs", type=int)
    s.add_argument("--flat-tol", type=float, default=1e-3)
    s.add_argument("--min-width", type=int, default=5)
    s.set_defaults(func=cmd_scan)

    a = sub.add_parser("apdiag", help="almost-periodicity diagnostics")
    a.add_argument("--config", required=True)
    a.add_argument("--eps", type=float, required=True)
    a.add_argument("--range", type=int, required=True)
    a.add_argument("--window", type=int, default=200)
    a.add_argument("--n", type=int, default=10_000, help="horizon for density and mean values")
    a.set_defaults(func=cmd_apdiag)

    o = sub.add_parser("oracle-compare", help="compare estimators with exact references")
    o.add_argument("--config", required=True)
    o.add_argument("--tol", type=float, default=1e-3)
    o.set_defaults(func=cmd_oracle_compare)

    d = sub.add_parser("decompose-check", help="check the mean-value decomposition")
    d.add_argument("--config", required=True)
    d.add_argument("--span", type=float, required=True)
    d.set_defaults(func=cmd_decompose_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, ConfigError, ap.PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonFiniteError, OracleError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
