"""Command-line entry point: ``freebound run | verify | study``."""

import argparse
import csv
import json
import os
import sys
from dataclasses import fields

import numpy as np

from . import __version__
from .biharmonic import contact_point
from .errors import DomainError, FreeboundError
from .gradientflow import front_position
from .mapped import convergence_study, default_workers
from .presets import quadratic
from .scenarios import SCENARIOS, Config, build_config, coerce, parse_config_text, run

EXIT_OK, EXIT_SOLVER, EXIT_VERIFY, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _num(v):
    return format(float(v), ".17g")


def _dump_steps(steps, dumps):
    return sorted(set(np.linspace(0, steps, min(dumps, steps) + 1).round().astype(int)))


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _checks(tr):
    e = tr.energies
    out = {
        "energy_dissipation": bool(np.all(np.diff(e) <= 1e-10 * (1 + abs(e[0])))),
        "nonnegative": bool(tr.snapshots.min() >= -1e-12),
    }
    if tr.kkt:
        out["kkt"] = all(r.passed for r in tr.kkt)
    return out


def write_outputs(res, out_dir):
    """Write field/front CSVs; return a summary dict for the manifest."""
    cfg = res.config
    os.makedirs(out_dir, exist_ok=True)
    prefix = cfg.problem
    if res.track is not None:
        track, snaps = res.track, res.mapped_snapshots
        rows = []
        for i in _dump_steps(len(snaps) - 1, cfg.dumps):
            x, u = snaps[i]
            rows += [(_num(track.times[i]), _num(a), _num(b)) for a, b in zip(x, u)]
        _write_csv(os.path.join(out_dir, f"{prefix}_fields.csv"), ["t", "x", "u"], rows)
        _write_csv(os.path.join(out_dir, f"{prefix}_front.csv"),
                   ["t", "s", "census_boundary", "census_components"],
                   [(_num(t), _num(s), 1, 1) for t, s in zip(track.times, track.S)])
        return {"steps": len(track.S) - 1, "collapsed": track.collapsed,
                "final_front": float(track.S[-1]), "checks": {}}
    tr = res.trajectory
    times = tr.times
    dumps = _dump_steps(tr.steps, cfg.dumps)
    if cfg.problem == "od2d":
        x, y = res.grid
        X, Y = np.meshgrid(x, y, indexing="ij")
        for i in dumps:
            rows = [(_num(times[i]), _num(a), _num(b), _num(c))
                    for a, b, c in zip(X.ravel(), Y.ravel(), tr.snapshots[i].ravel())]
            _write_csv(os.path.join(out_dir, f"{prefix}_fields_{i:06d}.csv"),
                       ["t", "x", "y", "u"], rows)
        _write_csv(os.path.join(out_dir, f"{prefix}_front.csv"),
                   ["t", "census_boundary", "census_components", "census_holes"],
                   [(_num(t), c.boundary_nodes, c.components, c.holes)
                    for t, c in zip(times, tr.census)])
    else:
        (x,) = res.grid
        rows = []
        for i in dumps:
            rows += [(_num(times[i]), _num(a), _num(b)) for a, b in zip(x, tr.snapshots[i])]
        _write_csv(os.path.join(out_dir, f"{prefix}_fields.csv"), ["t", "x", "u"], rows)
        if cfg.problem == "bih1d":
            tol = 1e-8
            front = [(_num(t), _num(contact_point(u, x, tol)), "", "")
                     for t, u in zip(times, tr.snapshots)]
        else:
            tol = tr.meta["tol_pos"]
            front = [(_num(t), _num(front_position(u, tr.h, tol)[0]), c.boundary_nodes,
                      c.components) for t, u, c in zip(times, tr.snapshots, tr.census)]
        _write_csv(os.path.join(out_dir, f"{prefix}_front.csv"),
                   ["t", "s", "census_boundary", "census_components"], front)
    return {
        "steps": tr.steps,
        "extinction_time": tr.extinction_time,
        "final_energy": float(tr.energies[-1]),
        "max_active_set_iterations": max(tr.iterations, default=0),
        "checks": _checks(tr),
    }


def _config_from_args(args):
    overrides = {}
    if args.config:
        with open(args.config) as fh:
            overrides.update(parse_config_text(fh.read()))
    for f in fields(Config):
        v = getattr(args, f.name, None)
        if v is not None:
            overrides[f.name] = coerce(f.name, v)
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = coerce(k.strip(), v.strip())
    return build_config(args.preset, overrides)


def cmd_run(args):
    cfg = _config_from_args(args)
    name = args.preset or f"{cfg.problem}-{cfg.method}"
    out_dir = os.path.join(cfg.output_dir, name)
    res = run(cfg)
    summary = write_outputs(res, out_dir)
    manifest = {"version": __version__, "preset": args.preset, "config": cfg.as_dict(),
                "results": summary}
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    ok = all(summary["checks"].values())
    print(f"{name}: {summary['steps']} steps written to {out_dir}"
          + ("" if ok else f"; failed checks: {summary['checks']}"))
    return EXIT_OK if ok else EXIT_VERIFY


def _select(spec):
    from .suites import CHECKS

    if spec == "all":
        return sorted(CHECKS)
    try:
        nums = sorted({int(s) for s in spec.split(",")})
    except ValueError:
        raise UsageError(f"--suite takes 'all' or comma-separated numbers, got {spec!r}") from None
    unknown = [n for n in nums if n not in CHECKS]
    if unknown:
        raise UsageError(f"unknown suite numbers {unknown}; valid: 1..{len(CHECKS)}")
    return nums


def cmd_verify(args):
    from .suites import run_all

    results = run_all(_select(args.suite))
    for r in results:
        print(r.line())
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} passed")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump([{"number": r.number, "name": r.name, "passed": r.passed,
                        "detail": r.detail} for r in results], fh, indent=2)
            fh.write("\n")
    return EXIT_OK if passed == len(results) else EXIT_VERIFY


def cmd_study(args):
    if args.convergence != "mapped":
        raise UsageError("only --convergence mapped is available")
    workers = default_workers()
    rep_h = convergence_study(quadratic, N_list=tuple(args.n_list), t_probe=args.t_probe,
                              k_fixed=args.k_fixed, workers=workers)
    rep_k = convergence_study(quadratic, k_list=tuple(args.k_list), t_probe=args.t_probe,
                              N_fixed=args.n_fixed, workers=workers)
    print("study      resolution   gap to next")
    for N, e in zip(rep_h.N_list, rep_h.h_errors):
        print(f"space      N={N:<9d} {e:.6e}")
    for k, e in zip(rep_k.k_list, rep_k.k_errors):
        print(f"time       k={k:<9g} {e:.6e}")
    print(f"p_h = {rep_h.p_h:.4f}")
    print(f"p_k = {rep_k.p_k:.4f}")
    return EXIT_OK


def build_parser():
    p = _Parser(prog="freebound", description="Implicit free boundary solvers.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a preset or a configuration")
    r.add_argument("--preset", choices=sorted(SCENARIOS))
    r.add_argument("--config", help="key=value configuration file")
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one key")
    for f in fields(Config):
        r.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, default=None)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run acceptance suites")
    v.add_argument("--suite", default="all", help="'all' or numbers like 1,4,9")
    v.add_argument("--json", help="also write results to this file")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("study", help="convergence studies")
    s.add_argument("--convergence", required=True, choices=["mapped"])
    s.add_argument("--n-list", type=int, nargs="+", default=[32, 64, 128, 256])
    s.add_argument("--k-list", type=float, nargs="+", default=[4e-3, 2e-3, 1e-3, 5e-4])
    s.add_argument("--t-probe", type=float, default=0.02)
    s.add_argument("--k-fixed", type=float, default=1e-5)
    s.add_argument("--n-fixed", type=int, default=512)
    s.set_defaults(func=cmd_study)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, DomainError) as exc:
        print(f"freebound: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FreeboundError as exc:
        print(f"freebound: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"freebound: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
