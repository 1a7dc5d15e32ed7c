"""Command line entry point: ``python3 -m mobstab <command> ...``.

Exit codes: 0 on success, 1 when a check fails, 2 on usage errors
(bad flags, unknown suite, malformed map spec).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import experiments as ex
from .errors import CenteringFailed, MalformedSpec, ResourceLimit, UnknownSuite
from .map_model import load_spec


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mobstab", description="Quantitative stability experiments for conformal maps of spheres.")
    p.add_argument("--config", help="JSON file with default option values")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run an invariant suite")
    v.add_argument("--suite", default="all")
    v.add_argument("--n", type=int, default=3)
    v.add_argument("--level", type=int, default=16)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--kappa", type=float, default=0.5)
    v.add_argument("--samples", type=int, default=10**6)

    s = sub.add_parser("sharpness", help="bump-family sweep and log-log slopes")
    s.add_argument("--n", type=int, default=4)
    s.add_argument("--eps-min", type=float, default=1e-2)
    s.add_argument("--eps-max", type=float, default=1e-1)
    s.add_argument("--points", type=int, default=8)
    s.add_argument("--eps", type=_floats, help="explicit comma-separated grid (overrides min/max/points)")
    s.add_argument("--level", type=int, default=32)
    s.add_argument("--sphere-level", type=int, default=16)
    s.add_argument("--out")
    s.add_argument("--check", action="store_true", help="exit 1 unless slopes are within 0.3 of n-1 and the ratio spread is at most 5")

    r = sub.add_parser("ratio", help="stability-ratio probe")
    r.add_argument("--family", default="normalized_linear", choices=ex.RATIO_FAMILIES)
    r.add_argument("--n", type=int, default=4)
    r.add_argument("--grid", type=_floats, default=None, help="comma-separated perturbation sizes")
    r.add_argument("--level", type=int, default=16)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out")

    for name, helptext in (("deficit", "deficit report of one map"),
                           ("fit", "nearest Moebius map to one map"),
                           ("center", "centre one map by a Moebius dilation")):
        c = sub.add_parser(name, help=helptext)
        c.add_argument("--spec", required=True)
        c.add_argument("--n", type=int, default=3)
        c.add_argument("--level", type=int, default=16)
    return p


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        with open(known.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config {known.config}: {exc}")
    if not isinstance(cfg, dict):
        parser.error("config must be a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            dests = {a.dest for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in cfg.items() if k in dests})


def _write(text, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _summary(summary, out):
    text = ex.dumps(summary) + "\n"
    (sys.stdout if out else sys.stderr).write(text)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    _apply_config(parser, argv)
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (MalformedSpec, UnknownSuite) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ResourceLimit, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CenteringFailed as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "verify":
        rep = ex.run_verify(args.suite, args.n, args.level, args.seed,
                            kappa=args.kappa, samples=args.samples)
        sys.stdout.write(ex.dumps(rep) + "\n")
        for c in rep["checks"]:
            if not c["passed"]:
                print(f"FAILED {c['suite']}.{c['name']}: {c['property']} "
                      f"(value {c['value']:.3e}, bound {c['tolerance']:.3e})", file=sys.stderr)
        return 0 if rep["passed"] else 1

    if args.command == "sharpness":
        grid = args.eps or ex.log_grid(args.eps_min, args.eps_max, args.points)
        rows, summary = ex.sharpness_sweep(args.n, grid, args.level, args.sphere_level)
        _write(ex.rows_to_csv(rows), args.out)
        _summary(summary, args.out)
        if args.check:
            tgt = args.n - 1
            ok = all(abs(summary.get(k, math.inf) - tgt) <= 0.3 for k in ("slope_deficit", "slope_distance"))
            ok = ok and summary.get("ratio_spread", math.inf) <= 5.0
            return 0 if ok else 1
        return 0

    if args.command == "ratio":
        rows, summary = ex.ratio_probe(args.family, args.n, args.grid, args.level, args.seed)
        _write(ex.rows_to_csv(rows), args.out)
        _summary(summary, args.out)
        return 0

    spec = load_spec(args.spec)
    func = {"deficit": ex.deficit_report, "fit": ex.fit_report, "center": ex.center_report}[args.command]
    sys.stdout.write(ex.dumps(func(spec, args.n, args.level)) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
