"""
Command-line entry point.

Every command reads an instance JSON file (``ssp-encode`` reads subset-sum
data instead), runs its pipeline and emits a JSON report, either to stdout or
to ``--out DIR/report.json`` together with CSV/SVG artifacts.  Wall-clock
timings are kept under their own ``timings`` key; everything else in a report
is reproducible for a given configuration, seed and worker count.

Exit codes: 0 success, 2 invalid input or flags, 3 solver/estimator failure
(a partial report is still written).
"""

from __future__ import annotations

import argparse
import csv
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import certify_interval, classify
from .dc_solver import SolverOpts, minimize_dc
from .errors import (BallmaxError, DimensionUnsupported, EmptyIntersection, InvalidInstance,
                     SamplingError, SequenceOverflow, SolverError)
from .estimator import procedure_b, procedure_b_from, volume_bisect
from .figures import emit_figures
from .oracle2d import farthest_2d, farthest_sampled
from .sequence import element_at, procedure_a
from .serialization import dumps_instance, dumps_report, load_instance, loads_strict
from .ssp import SspInstance, corner_r0, decide_by_distance, encode

EXIT_OK, EXIT_INVALID, EXIT_FAILURE = 0, 2, 3
RANDOMIZED = {"estimate", "volume"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def tool_version() -> dict:
    git = None
    try:
        res = subprocess.run(["git", "describe", "--always", "--tags"], cwd=Path(__file__).parent,
                             capture_output=True, text=True, timeout=5)
        if res.returncode == 0:
            git = res.stdout.strip() or None
    except (OSError, subprocess.SubprocessError):
        pass
    return {"package": __version__, "git": git}


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _seed(text: str):
    if text == "auto":
        return "auto"
    try:
        v = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("seed must be an integer or 'auto'") from exc
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ballmax", description="Farthest-distance bounds and estimators over intersections of balls.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, instance=True):
        if instance:
            sp.add_argument("instance", help="instance JSON file")
            sp.add_argument("--lambda", dest="lam", type=float, default=None,
                            help="override the instance's lambda (0 < lambda < 1)")
        sp.add_argument("--out", dest="output_dir", default=None,
                        help="write report.json and artifacts to this directory (default: report to stdout)")
        sp.add_argument("--format", choices=["json", "csv", "svg"], default="json",
                        help="extra artifact format written next to report.json")

    def randomized(sp, samples):
        sp.add_argument("--seed", type=_seed, default=None,
                        help="64-bit seed, or 'auto' to draw one (required)")
        sp.add_argument("--samples", type=int, default=samples, help=f"samples per probe (default {samples})")
        sp.add_argument("--workers", type=int, default=1, help="parallel sampling streams (default 1)")

    sp = sub.add_parser("solve", help="minimise h - g over {h <= 1}")
    common(sp)
    sp = sub.add_parser("classify", help="solve, then classify the minimiser and bound R0")
    common(sp)
    sp.add_argument("--boundary-tol", type=float, default=1e-6, help="band on h(y*) for the boundary case")

    sp = sub.add_parser("sequence", help="elements of the two-sided sequence, or Procedure A")
    common(sp)
    sp.add_argument("--i", dest="indices", type=_int_list, default=[0], help="comma-separated indices")
    sp.add_argument("--r0-sq", type=float, default=None, help="probe R^2 for the radii (default: centres only)")
    sp.add_argument("--r0-oracle", action="store_true", help="use the planar oracle's R0^2 as the probe")
    sp.add_argument("--procedure-a", action="store_true", help="run Procedure A instead of listing indices")
    sp.add_argument("--max-iter", type=int, default=50, help="Procedure A iteration cap (default 50)")

    sp = sub.add_parser("estimate", help="Procedure B sphere-sampling estimate of R0")
    common(sp)
    randomized(sp, 4096)
    sp.add_argument("--i", dest="i", type=int, default=-20, help="negative sequence index (default -20)")
    sp.add_argument("--step", type=float, default=None, help="growth step (default max(0.01, 0.01 r_init))")
    sp.add_argument("--r-init", type=float, default=None, help="starting radius (default from the classifier)")
    sp.add_argument("--bisect-iters", type=int, default=20)

    sp = sub.add_parser("volume", help="volume-ratio bisection estimate of R0")
    common(sp)
    randomized(sp, 20000)
    sp.add_argument("--i", dest="i", type=int, default=0, help="base index (default 0)")
    sp.add_argument("--p", dest="p", type=int, default=2, help="index offset p >= 1 (default 2)")
    sp.add_argument("--threshold", type=float, default=0.995, help="Wilson lower bound meaning ratio = 1")
    sp.add_argument("--bracket", type=float, nargs=2, default=None, metavar=("LOW", "HIGH"))
    sp.add_argument("--rounds", type=int, default=12)

    sp = sub.add_parser("ssp-encode", help="encode subset-sum data {s, t, beta} as an instance")
    sp.add_argument("ssp", help="JSON file with keys s, t and optional beta")
    sp.add_argument("--offset-param", type=float, default=None, help="imprint-ball depth (default sqrt(n)/2)")
    sp.add_argument("--lambda", dest="lam", type=float, default=0.5, help="lambda stored in the instance")
    common(sp, instance=False)

    sp = sub.add_parser("oracle", help="exact farthest point (2D) or sampled estimate (3D)")
    common(sp)
    sp.add_argument("--seed", type=_seed, default=None, help="seed for the 3D sampler")
    sp.add_argument("--samples", type=int, default=200_000, help="boundary samples per ball in 3D")

    sp = sub.add_parser("figures", help="SVG figures of a planar instance")
    common(sp)
    sp.add_argument("--indices", type=_int_list, default=[-30, -10, -3, 0, 2])
    return p


def _config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("output_dir",)}
    return cfg


def _sol_dict(sol) -> dict:
    return {"y_star": sol.y_star, "value": sol.value, "r_lower": sol.r_lower, "h_at_y": sol.h_at_y,
            "iterations": sol.iterations, "residual": sol.residual}


class _Run:
    def __init__(self, args):
        self.args = args
        self.results: dict = {}
        self.timings: dict = {}
        self.artifacts: list[tuple[str, object]] = []  # (file name, writer)

    def stage(self, name, fn, *a, **kw):
        t = time.perf_counter()
        try:
            return fn(*a, **kw)
        finally:
            self.timings[name] = time.perf_counter() - t


def _cmd_solve(run: _Run, inst):
    opts = SolverOpts(record_trace=run.args.format == "csv")
    sol = run.stage("solve", minimize_dc, inst, opts)
    run.results["dc_solution"] = _sol_dict(sol)
    if run.args.format == "csv":
        rows = [("iteration", "value", "residual")] + [tuple(r) for r in sol.trace]
        run.artifacts.append(("trace.csv", rows))
    return sol


def _cmd_classify(run: _Run, inst):
    sol = _cmd_solve(run, inst)
    c = run.stage("classify", classify, inst, sol, getattr(run.args, "boundary_tol", 1e-6))
    lo, hi = certify_interval(c, inst)
    run.results["classification"] = {**c.to_dict(), "interval": [lo, hi], "note": c.note}
    return sol, c


def _cmd_sequence(run: _Run, inst):
    a = run.args
    r0_sq = a.r0_sq
    if a.r0_oracle:
        r0_sq = run.stage("oracle", farthest_2d, inst).r0 ** 2
        run.results["oracle_r0_sq"] = r0_sq
    if r0_sq is not None and r0_sq < 0:
        raise InvalidInstance("--r0-sq must be non-negative")
    if a.procedure_a:
        if a.max_iter < 1:
            raise InvalidInstance("--max-iter must be >= 1")
        res = run.stage("procedure_a", procedure_a, inst, a.max_iter, r0_sq)
        els = res.trace
        run.results["procedure_a"] = {"terminated": res.terminated, "iterations": res.iterations,
                                      "stopped_by": res.stopped_by}
    else:
        els = run.stage("elements", lambda: [element_at(inst, i, r0_sq) for i in a.indices])
    run.results["elements"] = [e.to_dict() for e in els]
    if a.format == "csv":
        rows = [("index", "k", "center", "radius_sq", "empty", "hull_status")]
        for e in els:
            for k, c in enumerate(e.centers):
                r2 = None if e.radii_sq is None else e.radii_sq[k]
                rows.append((e.index, k, " ".join(repr(float(v)) for v in c),
                             "" if r2 is None else repr(float(r2)),
                             "" if r2 is None else bool(r2 <= 0), e.hull_status))
        run.artifacts.append(("sequence.csv", rows))


def _trace_rows(rep):
    rows = [("phase", "r", "samples", "hits", "ratio", "wilson_low", "wilson_high")]
    for phase, tr in (("grow", rep.stats_trace), ("bisect", rep.bisect_trace)):
        for r, s in tr:
            rows.append((phase, repr(r), s.samples, s.hits, repr(s.ratio), repr(s.wilson_low), repr(s.wilson_high)))
    return rows


def _cmd_estimate(run: _Run, inst):
    a = run.args
    _, c = _cmd_classify(run, inst)
    kw = dict(i=a.i, n_samples=a.samples, step=a.step, seed=a.seed, bisect_iters=a.bisect_iters,
              workers=a.workers)
    if a.r_init is not None:
        rep = run.stage("estimate", procedure_b, inst, r_init=a.r_init, classification=c, **kw)
    else:
        rep = run.stage("estimate", procedure_b_from, inst, c, **kw)
    run.results["estimate"] = rep.to_dict()
    if a.format == "csv":
        run.artifacts.append(("stats_trace.csv", _trace_rows(rep)))


def _cmd_volume(run: _Run, inst):
    a = run.args
    _, c = _cmd_classify(run, inst)
    if a.bracket is not None:
        lo, hi = a.bracket
    else:
        lo = max(0.5 * c.r_lower, 1e-6)
        hi = max(1.01 * c.r_cap, 2 * lo)
    run.results["bracket_start"] = [lo, hi]
    rep = run.stage("volume", volume_bisect, inst, a.i, a.p, (lo, hi), a.samples, a.threshold, a.seed,
                    rounds=a.rounds, workers=a.workers, classification=c)
    run.results["estimate"] = rep.to_dict()
    if a.format == "csv":
        run.artifacts.append(("stats_trace.csv", _trace_rows(rep)))


def _cmd_oracle(run: _Run, inst):
    a = run.args
    if inst.dim == 2:
        res = run.stage("oracle", farthest_2d, inst)
    elif inst.dim == 3:
        if a.seed is None:
            raise UsageError("the 3D oracle samples; pass --seed (or --seed auto)")
        res = run.stage("oracle", farthest_sampled, inst, a.samples, a.seed)
    else:
        raise DimensionUnsupported(f"oracle supports dimensions 2 and 3, got {inst.dim}")
    run.results["oracle"] = res.to_dict()


def _cmd_figures(run: _Run, inst):
    a = run.args
    if a.output_dir is None:
        raise UsageError("figures needs --out DIR")
    if inst.dim != 2:
        raise DimensionUnsupported("figures are only drawn for dimension 2")
    res = run.stage("oracle", farthest_2d, inst)
    run.results["oracle"] = res.to_dict()
    files = run.stage("figures", emit_figures, inst, res.r0, a.indices, a.output_dir, res.maximizers)
    run.results["figures"] = [f.name for f in files]


def _cmd_ssp(run: _Run):
    a = run.args
    data = loads_strict(Path(a.ssp).read_text())
    if not isinstance(data, dict) or "s" not in data or "t" not in data:
        raise InvalidInstance("SSP JSON needs keys 's' and 't'")
    try:
        ssp = SspInstance(data["s"], data["t"], data.get("beta"))
    except (TypeError, ValueError) as exc:
        raise InvalidInstance(str(exc)) from exc
    enc = run.stage("encode", encode, ssp, a.offset_param)
    from .geometry import Instance  # local: only this command builds instances from scratch
    inst = Instance(enc.balls, enc.c0, a.lam)
    target = ssp.target_sq()
    run.results["encoding"] = {**enc.to_dict(), "beta": ssp.beta,
                               "thresholds": {"solvable_at_least": target,
                                              "unsolvable_at_most": target - ssp.beta / 2}}
    if ssp.n <= 20:
        r0 = run.stage("corners", corner_r0, enc)
        run.results["corner_r0"] = r0
        run.results["decision"] = decide_by_distance(ssp, r0)
    run.results["instance"] = loads_strict(dumps_instance(inst))
    run.artifacts.append(("instance.json", dumps_instance(inst)))


COMMANDS = {"solve": _cmd_solve, "classify": _cmd_classify, "sequence": _cmd_sequence,
            "estimate": _cmd_estimate, "volume": _cmd_volume, "oracle": _cmd_oracle,
            "figures": _cmd_figures}


def _report(run: _Run, error=None) -> dict:
    a = run.args
    rep = {
        "tool": "ballmax",
        "version": tool_version(),
        "command": a.command,
        "config": _config(a),
        "seed": getattr(a, "seed", None),
        "workers": getattr(a, "workers", 1),
        "results": run.results,
    }
    if error is not None:
        rep["error"] = {"type": type(error).__name__, "message": str(error)}
    rep["timings"] = run.timings
    return rep


def _write_outputs(run: _Run, report: dict, stdout):
    text = dumps_report(report)
    out = run.args.output_dir
    if out is None:
        stdout.write(text)
        return
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(text)
    for name, payload in run.artifacts:
        if isinstance(payload, str):
            (out / name).write_text(payload)
        else:
            with open(out / name, "w", newline="") as fh:
                csv.writer(fh).writerows(payload)


def run(argv=None, stdout=None, stderr=None) -> int:
    """Parse ``argv``, execute the command and return the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"ballmax: error: {exc}", file=stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    if args.command in RANDOMIZED:
        if args.seed is None:
            print("ballmax: error: this command samples; pass --seed N (or --seed auto)", file=stderr)
            return EXIT_INVALID
        if args.workers < 1 or args.samples < 1:
            print("ballmax: error: --workers and --samples must be >= 1", file=stderr)
            return EXIT_INVALID
    if getattr(args, "seed", None) == "auto":
        args.seed = int(np.random.SeedSequence().generate_state(1, np.uint64)[0])

    r = _Run(args)
    try:
        if args.command == "ssp-encode":
            _cmd_ssp(r)
        else:
            inst = load_instance(args.instance, args.lam)
            COMMANDS[args.command](r, inst)
    except (UsageError, InvalidInstance, DimensionUnsupported, SequenceOverflow, ValueError, OSError) as exc:
        print(f"ballmax: error: {exc}", file=stderr)
        return EXIT_INVALID
    except (SolverError, SamplingError, EmptyIntersection, BallmaxError) as exc:
        print(f"ballmax: failure: {type(exc).__name__}: {exc}", file=stderr)
        _write_outputs(r, _report(r, exc), stdout)
        return EXIT_FAILURE
    _write_outputs(r, _report(r), stdout)
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
