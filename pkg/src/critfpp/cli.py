"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 resource-guard refusal, 3 audit failure.
"""
from __future__ import annotations

import argparse
import math
import re
import sys
from typing import Sequence

import numpy as np

from . import experiments as ex
from .fpp import T_plus, c_n_plus, cylinder_times, polygon_corner_time, sector_time
from .lattice import RegionError, RegionSpec, ResourceGuardError, build_region
from .percolation import sample_config
from .radial_sde import MEAN_Z, VAR_Z, ThetaParams, mgf_Z, sample_Z_exact, sample_Z_sde
from .rng import RngStream, stream_for

EXIT_OK, EXIT_USAGE, EXIT_GUARD, EXIT_AUDIT = 0, 1, 2, 3


class UsageError(Exception):
    pass


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        # let values such as "-1,-0.5,0.25" through as arguments, not options
        self._negative_number_matcher = re.compile(rf"^-(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?(?:,{_NUM})*$")

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    vals = _floats(text)
    if any(not float(v).is_integer() for v in vals):
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")
    return [int(v) for v in vals]


def _points(text: str) -> list[tuple[float, float]]:
    try:
        return [tuple(float(c) for c in p.split(",")) for p in text.split(";") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'x,y;x,y;...', got {text!r}")


def _region_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("region")
    g.add_argument("--variant", choices=("half_disk", "half_annulus", "sector", "strip", "polygon"),
                   default="half_disk", help="region family")
    g.add_argument("--n", type=int, default=8, help="half-disk radius, or strip top index")
    g.add_argument("--r", type=int, default=1, help="half-annulus inner radius")
    g.add_argument("--R", type=int, default=2, help="half-annulus outer radius")
    g.add_argument("--m", type=int, default=0, help="strip bottom index")
    g.add_argument("--halfwidth", type=float, default=None,
                   help="strip half-width; sqrt(3)(n - m) when None")
    g.add_argument("--alpha", type=float, default=math.pi / 2, help="sector opening angle")
    g.add_argument("--delta", type=float, default=0.125, help="sector/polygon lattice spacing")
    g.add_argument("--polygon", type=_points, default="0,0;1,0;1,1;0,1",
                   help="polygon vertices x,y;x,y;...")


def _spec_from(args) -> RegionSpec:
    v = args.variant
    if v == "half_disk":
        return RegionSpec.half_disk(args.n)
    if v == "half_annulus":
        return RegionSpec.half_annulus(args.r, args.R)
    if v == "sector":
        return RegionSpec.sector(args.alpha, args.delta)
    if v == "strip":
        return RegionSpec.strip(args.m, args.n, args.halfwidth)
    return RegionSpec.polygon(args.polygon, args.delta)


def _out(args):
    if args.out in (None, "-"):
        return sys.stdout, False
    return open(args.out, "w", encoding="utf-8", newline="\n"), True


# --------------------------------------------------------------------------
# subcommands


def cmd_region(args) -> int:
    mask = build_region(_spec_from(args))
    f, close = _out(args)
    try:
        f.write(mask.to_text())
    finally:
        if close:
            f.close()
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = _spec_from(args)
    mask = build_region(spec)
    cfg = sample_config(mask, stream_for(args.seed, "simulate", args.replica))
    v = spec.variant
    if v == "half_disk":
        res = {"c_n_plus": c_n_plus(args.n, cfg)}
    elif v == "half_annulus":
        res = {"T_plus": T_plus(args.r, args.R, cfg)}
    elif v == "strip":
        t, s = cylinder_times(args.m, args.n, cfg)
        res = {"t": t, "s": s}
    elif v == "sector":
        res = {"sector_time": sector_time(args.alpha, args.delta, cfg)}
    else:
        a, b = args.corners
        res = {"corner_time": polygon_corner_time(args.polygon, args.delta, a, b, cfg)}
    f, close = _out(args)
    try:
        f.write(cfg.to_text() + "\n")
        for k, val in res.items():
            f.write(f"{k} {val}\n")
    finally:
        if close:
            f.close()
    return EXIT_OK


def cmd_audit(args) -> int:
    shapes = list(ex.AUDIT_SHAPES) if args.shape == "all" else [args.shape]
    if any(s not in ex.AUDIT_SHAPES for s in shapes):
        raise UsageError(f"unknown shape {args.shape!r}; known: all, {', '.join(ex.AUDIT_SHAPES)}")
    reports = ex.run_equivalence_audit(shapes, corrupt=args.corrupt)
    for r in reports:
        print(r.text())
    return EXIT_OK if all(r.passed for r in reports) else EXIT_AUDIT


def cmd_sde(args) -> int:
    gen = RngStream(args.seed, 0).generator()
    if args.sampler == "exact":
        if args.kappa != 6.0:
            raise UsageError("the exact sampler exists only for kappa = 6")
        z = sample_Z_exact(gen, args.samples)
    else:
        z = sample_Z_sde(ThetaParams(args.kappa, args.dt, scheme=args.scheme), args.samples, gen)
    rows = [ex.ResultRow.from_state("sde_mean_Z", args.dt, ex.state_of(z), MEAN_Z),
            ex.variance_row("sde_var_Z", args.dt, z, VAR_Z, 1.0)]
    for lam in args.mgf:
        st = ex.state_of(np.exp(lam * z))
        target = mgf_Z(lam)
        rows.append(ex.ResultRow.from_state(f"sde_mgf_{lam:g}", args.dt, st, target, st.mean / target))
    _write_rows(args, rows)
    return EXIT_OK


def cmd_hs(args) -> int:
    f, close = _out(args)
    try:
        f.write("log_r,R,lambda,one_minus_lambda,expected_clusters,slope\n")
        for L, row in zip(args.log_r, ex.hs_table(args.log_r)):
            f.write(",".join(repr(float(x)) for x in (L, *row)) + "\n")
    finally:
        if close:
            f.close()
    return EXIT_OK


def _experiment_calls(args):
    """(label, thunk) pairs; each thunk returns rows for one independent chunk."""
    k, reps, seed, w = args.kind, args.reps, args.seed, args.workers

    def need(name):
        val = getattr(args, name)
        if val is None:
            raise UsageError(f"--{name.replace('_', '-')} is required for --kind {k}")
        return val

    if k == "cn_scaling":
        ns = need("n")
        if args.coupled:
            return [(None, lambda: ex.run_cn_scaling(ns, reps, seed, w, coupled=True))]
        return [(n, lambda n=n: ex.run_cn_scaling([n], reps, seed, w)) for n in ns]
    if k == "cylinder":
        return [(n, lambda n=n: ex.run_cylinder([n], reps, seed, w, args.halfwidth)) for n in need("n")]
    if k == "t_plus_stabilization":
        return [(None, lambda: ex.run_t_plus_stabilization(args.r, args.ratio, need("tau"), reps, seed, w,
                                                           args.renewal_reps or reps))]
    if k == "clt_renewal":
        return [(x, lambda x=x: [ex.ResultRow("clt_renewal_ks", x, ex.run_clt_renewal(x, reps, seed, w), math.nan,
                                              math.nan, reps, 0.0)]) for x in need("minus_log_eps")]
    if k == "tail":
        return [(None, lambda: ex.run_tail(args.r, args.R, args.x_grid or list(range(1, 16)), reps, seed, w))]
    if k == "sector":
        alphas = need("alpha")
        return [(d, lambda d=d: ex.run_sector(alphas, [d], reps, seed, w)) for d in sorted(need("delta"), reverse=True)]
    if k == "polygon":
        return [(d, lambda d=d: ex.run_polygon(args.polygon, args.corners, [d], reps, seed, w))
                for d in sorted(need("delta"), reverse=True)]
    if k == "renewal_slope":
        return [(x, lambda x=x: ex.run_renewal_slope([x], reps, seed, w)) for x in need("minus_log_eps")]
    if k == "hs_slope":
        return [(x, lambda x=x: ex.run_hs_slope([x])) for x in need("log_r")]
    shapes = list(ex.AUDIT_SHAPES) if args.shape == "all" else [args.shape]
    return [(None, lambda: ex.run_experiment(ex.ExperimentSpec("equivalence_audit", {"shapes": shapes}, reps, seed)))]


def _write_rows(args, rows):
    f, close = _out(args)
    try:
        f.write(ex.to_csv(rows))
    finally:
        if close:
            f.close()


def cmd_experiment(args) -> int:
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    ex.ExperimentSpec(args.kind, {}, args.reps, args.seed)
    calls = _experiment_calls(args)
    f, close = None, False
    failed = False
    try:
        try:
            for _, thunk in calls:
                rows = thunk()
                if f is None:
                    f, close = _out(args)
                    f.write(ex.CSV_HEADER + "\n")
                for row in rows:
                    f.write(ex.row_line(row) + "\n")
                    failed |= row.experiment == "equivalence_audit" and row.estimate != 1.0
                f.flush()
        except KeyboardInterrupt:
            if f is None:
                f, close = _out(args)
                f.write(ex.CSV_HEADER + "\n")
            f.write("# truncated\n")
            f.flush()
            return 130
    finally:
        if close:
            f.close()
    return EXIT_AUDIT if failed else EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="critfpp", description="Critical first-passage percolation toolkit.")
    p.add_argument("--config", default=None, help="key=value file of flag defaults")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    def common(sp, seed=True):
        sp.add_argument("--out", default=None, help="output file; stdout when omitted")
        if seed:
            sp.add_argument("--seed", type=int, default=0, help="64-bit seed")

    sp = sub.add_parser("region", help="build a region mask and print its snapshot", formatter_class=fmt)
    _region_flags(sp)
    common(sp, seed=False)
    sp.set_defaults(func=cmd_region)

    sp = sub.add_parser("simulate", help="sample one configuration and its passage time", formatter_class=fmt)
    _region_flags(sp)
    sp.add_argument("--replica", type=int, default=0, help="replica index of the random stream")
    sp.add_argument("--corners", type=_ints, default=[0, 2], help="polygon corner indices a,b")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("audit", help="exhaustive half-annulus identity audit", formatter_class=fmt)
    sp.add_argument("--shape", default="half_annulus_min", help=f"one of all, {', '.join(ex.AUDIT_SHAPES)}")
    sp.add_argument("--corrupt", action="store_true", help="corrupt the color switch (negative control)")
    sp.set_defaults(func=cmd_audit)

    sp = sub.add_parser("sde", help="sample Z and report moments and mgf values", formatter_class=fmt)
    sp.add_argument("--kappa", type=float, default=6.0, help="SLE parameter")
    sp.add_argument("--dt", type=float, default=1e-4, help="time step")
    sp.add_argument("--samples", type=int, default=1000, help="number of samples")
    sp.add_argument("--scheme", choices=("split", "euler"), default="split", help="discretization")
    sp.add_argument("--sampler", choices=("sde", "exact"), default="sde", help="SDE integration or exact law")
    sp.add_argument("--mgf", type=_floats, default=[-1.0, -0.5, 0.25], help="lambda values for E exp(lambda Z)")
    common(sp)
    sp.set_defaults(func=cmd_sde)

    sp = sub.add_parser("hs", help="crossing-cluster formula table", formatter_class=fmt)
    sp.add_argument("--log-r", type=_floats, default=[20.0, 50.0, 100.0], help="log R values")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_hs)

    sp = sub.add_parser("experiment", help="run a Monte Carlo experiment and write CSV", formatter_class=fmt)
    sp.add_argument("--kind", choices=ex.KINDS, required=True, help="experiment kind")
    sp.add_argument("--reps", type=int, required=True, help="replicas per scale")
    sp.add_argument("--workers", type=int, default=1, help="worker threads")
    sp.add_argument("--n", type=_ints, default=None, help="radii, comma-separated")
    sp.add_argument("--tau", type=_ints, default=None, help="scale factors, comma-separated")
    sp.add_argument("--alpha", type=_floats, default=None, help="sector angles, comma-separated")
    sp.add_argument("--delta", type=_floats, default=None, help="lattice spacings, comma-separated")
    sp.add_argument("--log-r", type=_floats, default=None, help="log R values, comma-separated")
    sp.add_argument("--minus-log-eps", type=_floats, default=None, help="-log epsilon values, comma-separated")
    sp.add_argument("--x-grid", type=_floats, default=None, help="survival grid, comma-separated; 1..15 when omitted")
    sp.add_argument("--r", type=int, default=1, help="inner radius (t_plus_stabilization, tail)")
    sp.add_argument("--R", type=int, default=64, help="outer radius (tail)")
    sp.add_argument("--ratio", type=int, default=2, help="R/r (t_plus_stabilization)")
    sp.add_argument("--renewal-reps", type=int, default=None, help="renewal replicas; --reps when omitted")
    sp.add_argument("--halfwidth", type=float, default=None, help="strip half-width (cylinder)")
    sp.add_argument("--coupled", action="store_true", help="share one field across radii (cn_scaling)")
    sp.add_argument("--polygon", type=_points, default="0,0;1,0;1,1;0,1", help="polygon vertices")
    sp.add_argument("--corners", type=_ints, default=[0, 2], help="polygon corner indices a,b")
    sp.add_argument("--shape", default="all", help="audit shape (equivalence_audit)")
    common(sp)
    sp.set_defaults(func=cmd_experiment)
    return p


def _read_config(path: str) -> dict[str, str]:
    out = {}
    try:
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected key=value")
                k, v = line.split("=", 1)
                out[k.strip().lstrip("-").replace("-", "_")] = v.strip()
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e}")
    return out


def _config_argv(cfg: dict[str, str], sub: argparse.ArgumentParser, explicit: Sequence[str]) -> list[str]:
    """Translate config entries into flags, skipping those given on the command line."""
    known = {a.dest: a for a in sub._actions if a.option_strings}
    given = {a.split("=", 1)[0] for a in explicit if a.startswith("--")}
    argv = []
    for key, val in cfg.items():
        if key == "config":
            continue
        act = known.get(key)
        if act is None:
            raise UsageError(f"unknown config key {key!r}")
        flag = next(o for o in act.option_strings if o.startswith("--"))
        if flag in given:
            continue
        if act.nargs == 0:
            if val.lower() in ("1", "true", "yes", "on"):
                argv.append(flag)
            elif val.lower() not in ("0", "false", "no", "off"):
                raise UsageError(f"config key {key!r} expects a boolean")
        else:
            argv.append(f"{flag}={val}")
    return argv


def _with_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Insert flags from ``--config`` right after the subcommand name."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    choices = parser._subparsers._group_actions[0].choices
    i = next((k for k, a in enumerate(argv) if a in choices and (k == 0 or argv[k - 1] != "--config")), None)
    if i is None:
        return argv
    known, _ = pre.parse_known_args(argv[:i])
    if not known.config:
        return argv
    extra = _config_argv(_read_config(known.config), choices[argv[i]], argv[i + 1:])
    return argv[:i + 1] + extra + argv[i + 1:]


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_with_config(parser, argv))
        return args.func(args)
    except SystemExit as e:
        return int(e.code or 0)
    except UsageError as e:
        print(f"critfpp: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceGuardError as e:
        print(f"critfpp: refused: {e}", file=sys.stderr)
        return EXIT_GUARD
    except (RegionError, ValueError) as e:
        print(f"critfpp: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
