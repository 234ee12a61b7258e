"""Command-line interface.

Usage:
    fbm-pitman simulate --H 0.5 --trajectories 20000 --seed 7
    fbm-pitman table1 --trajectories 20000 --out table1.csv
    fbm-pitman closed-form --H 0.6287
    fbm-pitman ck --k 100
    fbm-pitman sample-path --H 0.7 --out path.csv
    fbm-pitman check --H 0.5

Exit codes: 0 ok, 1 a statistical check failed, 2 invalid arguments,
3 numerical fault, 4 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import closedform, montecarlo, streams
from .errors import ConfigInvalid, NumericalError
from .functionals import M_LIMIT, log_likelihood_field, posterior
from .sampler import FbmPath, paths_from_normals, plan_for_grid

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3, 4
SIG_DIGITS = 9


class UsageError(Exception):
    pass


def fmt(x) -> str:
    return f"{float(x):.{SIG_DIGITS}g}"


def fmt_exact(x) -> str:
    """Shortest string that round-trips to the same double."""
    return repr(float(x))


def _round_floats(obj):
    if isinstance(obj, float):
        return float(fmt(obj)) if math.isfinite(obj) else obj
    if isinstance(obj, (np.floating, np.integer)):
        return _round_floats(obj.item())
    if isinstance(obj, dict):
        return {str(k): _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(doc) -> str:
    return json.dumps(_round_floats(doc), sort_keys=True, indent=2) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def _check_hurst(H: float) -> None:
    if not 0.0 < H <= 1.0:
        raise UsageError(f"--H must lie in (0, 1], got {H}")


def _check_grid(args) -> None:
    if not args.half_width > 0:
        raise UsageError(f"--half-width must be positive, got {args.half_width}")
    if args.points < 3 or args.points % 2 == 0:
        raise UsageError(f"--points must be odd and >= 3 (grid needs a node at t=0), got {args.points}")


def _check_trajectories(n: int) -> None:
    if n < 2:
        raise UsageError(f"--trajectories must be >= 2, got {n}")


def _check_g_step(h: float) -> None:
    if not 0.0 < h < M_LIMIT:
        raise UsageError(f"--g-step must lie in (0, {M_LIMIT}), got {h}")


def _threads(args) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError(f"--threads must be >= 1, got {args.threads}")
        return args.threads
    return montecarlo.default_workers()


def _run_config(args, H: float, checks) -> montecarlo.RunConfig:
    return montecarlo.RunConfig(
        hurst=H,
        half_width=args.half_width,
        n_points=args.points,
        n_trajectories=args.trajectories,
        seed=args.seed,
        m_values=montecarlo.default_m_values(args.g_step),
        checks=frozenset(checks),
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def write_trajectories(summary: montecarlo.McSummary, path: str) -> None:
    cfg = summary.config
    h = max(cfg.m_values)
    table = summary.trajectories
    cols = ["trajectory_id", "zeta", "xi"]
    cols += [montecarlo.moment_column(p) for p in cfg.p_orders]
    cols += ["log_b0"]
    header = cols + ["log_beta_mh", "log_beta_ph"]
    src = cols + [montecarlo.log_beta_column(-h), montecarlo.log_beta_column(h)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(cfg.n_trajectories):
            row = [int(table["trajectory_id"][i])]
            row += [fmt(table[c][i]) for c in src[1:]]
            writer.writerow(row)


def cmd_simulate(args) -> int:
    _check_hurst(args.H)
    _check_grid(args)
    _check_trajectories(args.trajectories)
    _check_g_step(args.g_step)
    checks = args.checks or []
    if "gcurvature" in checks and args.H < 0.5:
        raise UsageError("--checks gcurvature requires --H >= 0.5")
    workers = _threads(args)
    cfg = _run_config(args, args.H, checks)
    summary = montecarlo.run_campaign(cfg, workers=workers,
                                      keep_trajectories=bool(args.dump_trajectories))
    if args.dump_trajectories:
        write_trajectories(summary, args.dump_trajectories)
    _emit(dumps(summary.to_dict()), args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    _check_hurst(args.H)
    _check_grid(args)
    _check_trajectories(args.trajectories)
    _check_g_step(args.g_step)
    checks = [c for c in montecarlo.CHECK_NAMES if c != "gcurvature" or args.H >= 0.5]
    cfg = _run_config(args, args.H, checks)
    summary = montecarlo.run_campaign(cfg, workers=_threads(args))
    doc = {"config": cfg.to_dict(),
           "checks": {k: vars(v) for k, v in summary.checks.items()},
           "all_passed": all(c.passed for c in summary.checks.values())}
    _emit(dumps(doc), args.out)
    return EXIT_OK if doc["all_passed"] else EXIT_CHECK_FAILED


TABLE1_HEADER = ["H", "var_zeta", "se_var_zeta", "var_xi", "se_var_xi", "n_trajectories", "seed"]


def cmd_table1(args) -> int:
    _check_grid(args)
    _check_trajectories(args.trajectories)
    hurst = args.hurst or list(montecarlo.TABLE1_HURST)
    for H in hurst:
        _check_hurst(H)
    workers = _threads(args)
    out = Path(args.out)
    figure = Path(args.figure_out) if args.figure_out else out.with_name("figure1.csv")
    rows = []
    for H in hurst:
        s = montecarlo.run_campaign(_run_config(args, H, ()), workers=workers)
        rows.append([H, s["var_zeta"], s.se("var_zeta"), s["var_xi"], s.se("var_xi"),
                     args.trajectories, args.seed])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE1_HEADER)
    for r in rows:
        writer.writerow([fmt(v) for v in r[:5]] + [r[5], r[6]])
    out.write_text(buf.getvalue())
    fig = io.StringIO()
    writer = csv.writer(fig, lineterminator="\n")
    writer.writerow(["H", "var_zeta", "var_xi"])
    for r in rows:
        writer.writerow([fmt(r[0]), fmt(r[1]), fmt(r[3])])
    figure.write_text(fig.getvalue())
    return EXIT_OK


def closed_form_document(H: float | None = None) -> dict:
    lemma_h = 0.5 if H is None else H
    doc = {
        "zeta3": closedform.riemann_zeta(3),
        "var_zeta_half": closedform.var_zeta_closed(0.5),
        "var_xi_half": closedform.yao_variance(),
        "D": closedform.D_CONSTANT,
        "H0": closedform.H0,
        "lemma2_bound": {"t": 1.0, "r": 1.0, "H": lemma_h,
                         "value": closedform.lemma2_bound(1.0, 1.0, lemma_h)},
    }
    if H is not None:
        doc["H"] = H
        doc["alpha_lower_bound"] = closedform.alpha_lower_bound(H)
        doc["var_zeta_closed"] = closedform.var_zeta_closed(H)
    return doc


def cmd_closed_form(args) -> int:
    if args.H is not None:
        _check_hurst(args.H)
    _emit(dumps(closed_form_document(args.H)), args.out)
    return EXIT_OK


def cmd_ck(args) -> int:
    if args.k < 2 or args.k % 2 or args.k > 10_000:
        raise UsageError(f"--k must be an even integer in [2, 10000], got {args.k}")
    sol = closedform.ck_root(args.k)
    asym = closedform.ck_asymptotic(args.k)
    doc = {"k": args.k, "root": sol.root, "residual": sol.residual, "asymptotic": asym,
           "relative_gap": (sol.root - asym) / sol.root}
    _emit(dumps(doc), args.out)
    return EXIT_OK


def cmd_sample_path(args) -> int:
    _check_hurst(args.H)
    _check_grid(args)
    if args.index < 0:
        raise UsageError(f"--index must be >= 0, got {args.index}")
    grid = montecarlo.RunConfig(args.H, args.half_width, args.points).grid
    plan = plan_for_grid(grid, args.H)
    normals = streams.trajectory_stream(args.seed, args.index).standard_normal(plan.normals_per_path)
    path = FbmPath(grid, args.H, paths_from_normals(plan, grid, normals))
    fld = log_likelihood_field(path)
    post = posterior(fld)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "W", "log_z", "q"])
    # full precision: 9-digit rounding of t and q breaks the unit-mass check
    for row in zip(grid.nodes, path.values, fld.log_z, post.q):
        writer.writerow([fmt_exact(v) for v in row])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _campaign_flags(p: argparse.ArgumentParser, need_h: bool = True) -> None:
    if need_h:
        p.add_argument("--H", type=float, required=True, help="Hurst parameter in (0, 1]")
    p.add_argument("--trajectories", type=int, default=montecarlo.DESK_TRAJECTORIES)
    p.add_argument("--half-width", type=float, default=montecarlo.DESK_HALF_WIDTH)
    p.add_argument("--points", type=int, default=montecarlo.DESK_POINTS,
                   help="odd number of grid nodes on [-T, T]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--g-step", type=float, default=0.02, help="step h for the g(m) curvature")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default: ${montecarlo.THREADS_ENV} or CPU count)")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="fbm-pitman", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key = value file mirroring the flags")
        p.add_argument("--out", help="output path (default: stdout)")
        p.set_defaults(func=func)
        subs[name] = p
        return p

    p = add("simulate", cmd_simulate, "run one Monte Carlo campaign")
    _campaign_flags(p)
    p.add_argument("--checks", nargs="*", choices=montecarlo.CHECK_NAMES, default=[])
    p.add_argument("--dump-trajectories", metavar="CSV", help="write per-trajectory functionals")

    p = add("check", cmd_check, "run the identity and inequality checks")
    _campaign_flags(p)

    p = add("table1", cmd_table1, "sweep the reference Hurst grid, write CSV")
    _campaign_flags(p, need_h=False)
    p.add_argument("--hurst", type=float, nargs="+", help="override the Hurst grid")
    p.add_argument("--figure-out", help="figure CSV path (default: figure1.csv next to --out)")
    p.set_defaults(out="table1.csv")

    p = add("closed-form", cmd_closed_form, "print closed-form constants as JSON")
    p.add_argument("--H", type=float, default=None)

    p = add("ck", cmd_ck, "solve for the moment-inequality constant c_k")
    p.add_argument("--k", type=int, required=True)

    p = add("sample-path", cmd_sample_path, "dump one sampled path as CSV")
    p.add_argument("--H", type=float, required=True)
    p.add_argument("--half-width", type=float, default=montecarlo.DESK_HALF_WIDTH)
    p.add_argument("--points", type=int, default=montecarlo.DESK_POINTS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--index", type=int, default=0, help="trajectory index within the seed")
    return parser, subs


def _load_config(path: str, sub: argparse.ArgumentParser) -> dict:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    text = Path(path).read_text()
    cp.read_string("[run]\n" + text)
    known = {a.dest: a for a in sub._actions}
    out = {}
    for key, raw in cp["run"].items():
        dest = key.strip().lstrip("-").replace("-", "_")
        if dest not in known or dest in ("config", "help"):
            raise UsageError(f"--config: unknown key {key!r}")
        action = known[dest]
        if action.nargs in ("*", "+"):
            conv = action.type or str
            out[dest] = [conv(v) for v in raw.replace(",", " ").split()]
        else:
            out[dest] = raw.strip()
    return out


def main(argv=None) -> int:
    parser, subs = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        # the config file must be read before required flags are enforced
        if argv and argv[0] in subs:
            pre = argparse.ArgumentParser(add_help=False)
            pre.add_argument("--config")
            config_path = pre.parse_known_args(argv[1:])[0].config
            if config_path:
                sub = subs[argv[0]]
                defaults = _load_config(config_path, sub)
                for action in sub._actions:
                    if action.dest in defaults:
                        action.required = False
                sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, ConfigInvalid, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
