"""Command-line experiment runner.

Every CSV starts with a ``# config sha256=...`` comment that records the fully
resolved configuration, followed by the header row.  Exit codes: 0 success,
1 numerical tolerance failure, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import os
import sys
import tempfile
from fractions import Fraction

import numpy as np

from godunov_tv import analysis, kernels, linear_wave, resonance
from godunov_tv.coupled_sim import DriftError, RunConfig, SourceFn, default_source, run
from godunov_tv.flux import ConfigError, FluxParams
from godunov_tv.shock_solution import ExactSolution, QuadratureError, QuadratureSpec

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2

# keys accepted in a config file, with the type used to parse them
CONFIG_KEYS = {
    "T": int, "mu": float, "lambda0_p": int, "lambda0_q": int, "u_star": float,
    "width": float, "left_margin": int, "right_margin": int, "quad_nodes": int,
    "T_list": str, "sigma": str, "y_range": str, "out": str, "seed": int,
}


def read_config(path: str) -> dict:
    """Flat ``key = value`` text; blank lines and ``#`` comments ignored."""
    cfg = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError([f"{path}:{lineno}: expected key=value"])
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise ConfigError([f"{path}:{lineno}: unknown key {key!r}"])
            try:
                cfg[key] = CONFIG_KEYS[key](val)
            except ValueError:
                raise ConfigError([f"{path}:{lineno}: bad value for {key}: {val!r}"]) from None
    return cfg


def merged_config(args) -> dict:
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def config_hash(cfg: dict) -> str:
    text = "\n".join(f"{k}={cfg[k]}" for k in sorted(cfg))
    return hashlib.sha256(text.encode()).hexdigest()


def write_csv(path: str, cfg: dict, header: list[str], rows) -> None:
    """Write atomically: comment line, header, then rows with repr-exact floats."""
    buf = io.StringIO()
    echo = " ".join(f"{k}={cfg[k]}" for k in sorted(cfg))
    buf.write(f"# config sha256={config_hash(cfg)} {echo}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)
                           for v in row) + "\n")
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(buf.getvalue())
    os.replace(tmp, path)


def flux_params(cfg: dict) -> FluxParams:
    kw = {k: cfg[k] for k in ("mu", "lambda0_p", "lambda0_q") if k in cfg}
    p = FluxParams(**kw)
    cfg.setdefault("mu", p.mu)
    cfg.setdefault("lambda0_p", p.lambda0_p)
    cfg.setdefault("lambda0_q", p.lambda0_q)
    return p


def parse_range(text: str) -> tuple[int, int]:
    try:
        a, b = (int(s) for s in text.split(":"))
    except ValueError:
        raise ConfigError([f"range {text!r} must look like lo:hi"]) from None
    if a > b:
        raise ConfigError([f"range {text!r} has lo > hi"])
    return a, b


def cmd_resonance(args) -> int:
    cfg = merged_config(args)
    out = cfg.setdefault("out", "out")
    if args.variable:
        T = cfg.get("T")
        if T is None or T < 16:
            raise ConfigError(["--variable needs --T >= 16"])
        cfg.pop("sigma", None)
        rows = resonance.dyadic_tv(T)
        write_csv(os.path.join(out, f"dyadic_T{T}.csv"), cfg, ["j", "y_lo", "y_hi", "tv"],
                  [(r.j, r.y_lo, r.y_hi, r.tv) for r in rows])
        if args.profile:
            lo, hi = rows[-1].y_lo, rows[0].y_hi
            y = np.arange(lo, hi + 1, dtype=float)
            v = resonance.variable_source_profile(T, y)
            write_csv(os.path.join(out, f"variable_T{T}.csv"), cfg, ["y", "v"],
                      [(int(a), b) for a, b in zip(y, v)])
        total = sum(r.tv for r in rows)
        N = resonance.dyadic_count(T)
        print(f"T={T} N={N} sum_tv={total:.6g}")
        return EXIT_OK
    if "sigma" not in cfg:
        raise ConfigError(["resonance needs --sigma or --variable"])
    try:
        exact = Fraction(cfg["sigma"])
    except ValueError:
        raise ConfigError([f"sigma={cfg['sigma']!r} is not a number"]) from None
    sigma = float(exact)
    if sigma <= 0:
        raise ConfigError([f"sigma={sigma} must be positive"])
    lo, hi = parse_range(cfg.setdefault("y_range", "-200:0"))
    y = np.arange(lo, hi + 1, dtype=float)
    phi = resonance.phi_profile(sigma, y)
    psi = resonance.psi_profile(exact, y)
    write_csv(os.path.join(out, f"resonance_sigma{cfg['sigma']}.csv"), cfg, ["y", "phi", "psi", "k"],
              [(int(a), b, c, c - b) for a, b, c in zip(y, phi, psi)])
    print(f"sigma={sigma} rows={y.size} tv_psi={float(np.abs(np.diff(psi)).sum()):.6g}")
    return EXIT_OK


def _source(cfg: dict, sol: ExactSolution) -> SourceFn:
    if "u_star" in cfg or "width" in cfg:
        d = default_source(sol)
        return SourceFn(cfg.get("u_star", d.u_star), cfg.get("width", d.width))
    return default_source(sol)


def cmd_simulate(args) -> int:
    cfg = merged_config(args)
    p = flux_params(cfg)
    T = cfg.setdefault("T", 1024)
    quad = QuadratureSpec(order=cfg.get("quad_nodes", QuadratureSpec.order))
    sol = ExactSolution(p, T, quad)
    src = _source(cfg, sol)
    cfg.setdefault("u_star", src.u_star)
    cfg.setdefault("width", src.width)
    rc = RunConfig(params=p, T=T, source=src, left_margin=cfg.get("left_margin"),
                   right_margin=cfg.get("right_margin", 64), quad=quad,
                   store_sources=args.crosscheck)
    cfg.setdefault("left_margin", rc.resolved_left_margin())
    cfg.setdefault("right_margin", rc.right_margin)
    out = cfg.setdefault("out", "out")
    res = run(rc, solution=sol)
    write_csv(os.path.join(out, f"V_T{T}.csv"), cfg, ["j", "V"], zip(res.V.j, res.V.values))
    ck_rows = []
    for n in sorted(res.checkpoints):
        prof, _ = res.checkpoints[n]
        ck_rows.extend((n, int(j), u) for j, u in zip(prof.j, prof.values))
    write_csv(os.path.join(out, f"u_checkpoints_T{T}.csv"), cfg, ["n", "j", "u"], ck_rows)
    row = analysis.measure_run(res, T)
    drift = max(e for _, e in res.checkpoints.values())
    print(f"T={T} tv_V={row.tv_V:.10g} tv_u={row.tv_u:.6g} l1_ratio={row.l1_ratio:.6g} "
          f"max_u_drift={drift:.3e}")
    if args.crosscheck:
        cache = analysis.build_repr_cache(sol, src)
        rep = analysis.v_representation(cache, res.V.j_min, res.V.j_max)
        diff = float(np.max(np.abs(rep.values - res.V.values)))
        tol = 5 * quad.tol
        print(f"crosscheck max|V_direct - V_repr|={diff:.3e} (tol {tol:.1e})")
        if diff > tol:
            return EXIT_NUMERIC
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = merged_config(args)
    p = flux_params(cfg)
    text = cfg.setdefault("T_list", "256,512,1024,2048")
    try:
        T_list = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError([f"T_list {text!r} must be comma-separated integers"]) from None
    if len(T_list) < 4:
        raise ConfigError([f"T_list has {len(T_list)} entries; the ln T fit needs >= 4"])
    ratios = {b / a for a, b in zip(sorted(T_list), sorted(T_list)[1:])}
    if len(ratios) != 1:
        raise ConfigError(["T_list must be geometric"])
    out = cfg.setdefault("out", "out")
    rep = analysis.tv_sweep(T_list, p)
    header = ["T", "tv_V", "tv_u", "l1_ratio", "beta_fit"]
    rows = [[r.T, r.tv_V, r.tv_u, r.l1_ratio, rep.slope] for r in rep.rows]
    if args.audit:
        header += ["predicted_sum", "pi_log10_scale"]
        sol = ExactSolution(p, max(T_list))
        spec = analysis.build_pi_spec(sol)
        for row, r in zip(rows, rep.rows):
            a = analysis.tv_lower_bound_audit(r.T, spec, r.tv_V)
            row += [a.predicted_sum, a.pi_log10_scale]
    write_csv(os.path.join(out, "sweep.csv"), cfg, header, rows)
    lo, hi = rep.slope_ci
    print(f"fit tv_V = {rep.intercept:.6g} + {rep.slope:.6g} ln T  (95% CI {lo:.4g}..{hi:.4g}); "
          f"increment cv={rep.cv:.3g}")
    return EXIT_OK


def cmd_kernels_check(args) -> int:
    ns = [2**k for k in range(8, 13)]
    errs = [kernels.diff_approx_error(n, args.delta) for n in ns]
    slope = float(np.polyfit(np.log(ns), np.log(errs), 1)[0])
    print(f"band error slope {slope:.4f} (threshold -1.8); C at n=256: {errs[0] * 256**1.8:.4g}")
    return EXIT_OK if slope <= -1.8 else EXIT_NUMERIC


def cmd_colehopf_check(args) -> int:
    cfg = merged_config(args)
    p = flux_params(cfg)
    rng = np.random.default_rng(cfg.get("seed", 0))
    worst = 0.0
    for _ in range(args.rows):
        row = linear_wave.LogRow(0, rng.uniform(-5.0, 5.0, size=args.length))
        worst = max(worst, linear_wave.verify_cole_hopf(row, p))
    print(f"rows={args.rows} max residual={worst:.3e} (tol 1e-11)")
    return EXIT_OK if worst <= 1e-11 else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="godunov-tv", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key=value config file")
        sp.add_argument("--out", help="output directory (default ./out)")
        sp.add_argument("--mu", type=float)
        sp.add_argument("--lambda0-p", dest="lambda0_p", type=int)
        sp.add_argument("--lambda0-q", dest="lambda0_q", type=int)

    sp = sub.add_parser("resonance", help="constant- or variable-speed heat resonance profiles")
    common(sp)
    sp.add_argument("--sigma", help="source speed (read as an exact decimal)")
    sp.add_argument("--y-range", dest="y_range", help="lo:hi integer range, e.g. --y-range=-200:0 (the default)")
    sp.add_argument("--variable", action="store_true", help="decelerating source; dyadic TV table")
    sp.add_argument("--T", type=int)
    sp.add_argument("--profile", action="store_true", help="with --variable, also write v(T, y)")
    sp.set_defaults(func=cmd_resonance)

    sp = sub.add_parser("simulate", help="one coupled run; writes V and u checkpoints")
    common(sp)
    sp.add_argument("--T", type=int)
    sp.add_argument("--u-star", dest="u_star", type=float)
    sp.add_argument("--width", type=float)
    sp.add_argument("--left-margin", dest="left_margin", type=int)
    sp.add_argument("--right-margin", dest="right_margin", type=int)
    sp.add_argument("--quad-nodes", dest="quad_nodes", type=int)
    sp.add_argument("--crosscheck", action="store_true", help="compare with the level-curve formula")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="TV growth over a geometric list of horizons")
    common(sp)
    sp.add_argument("--T-list", dest="T_list", help="comma-separated horizons")
    sp.add_argument("--audit", action="store_true", help="add Pi-based predicted lower bound columns")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("kernels-check", help="binomial vs heat-kernel difference error slope")
    sp.add_argument("--delta", type=float, default=0.05)
    sp.set_defaults(func=cmd_kernels_check)

    sp = sub.add_parser("colehopf-check", help="randomized Cole-Hopf residual suite")
    common(sp)
    sp.add_argument("--rows", type=int, default=100)
    sp.add_argument("--length", type=int, default=64)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_colehopf_check)
    return ap


def _join_ranges(argv: list[str]) -> list[str]:
    # "--y-range -200:0" would otherwise read -200:0 as an option
    out, i = [], 0
    while i < len(argv):
        if argv[i] == "--y-range" and i + 1 < len(argv):
            out.append(f"--y-range={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_ranges(argv))
    try:
        return args.func(args)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, DriftError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
