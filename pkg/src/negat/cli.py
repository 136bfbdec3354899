"""Command-line front end.

    negat run --num-qubits 8 --error-rate 0.04
    negat sweep --config sweep.json [--output DIR] [--seed S] [--threads K]
    negat collapse --input DIR/emax.csv [--output DIR] [--parity all|mod4-0|mod4-2]
    negat negativity --fixture bell|werner|product
    negat validate --input DIR

Exit status: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import __version__, experiment, scaling
from .circuit import CircuitSpec, run_circuit
from .gates import GateSet, RngStream
from .negativity import FIXTURES, negativity_measures

log = logging.getLogger("negat")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}") from None
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="negat", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"negat {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", metavar="{run,sweep,collapse,negativity,validate}", parser_class=_Parser)

    p = sub.add_parser("run", help="evolve one circuit sample and print log-negativity per depth")
    p.add_argument("-n", "--num-qubits", type=int, default=8)
    p.add_argument("-p", "--error-rate", type=float, default=0.0)
    p.add_argument("--depth", type=int, help="maximum depth (default 4N)")
    p.add_argument("--gate-set", choices=[g.value for g in GateSet], default="haar")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--record-every", type=int, default=1)
    p.add_argument("--early-stop", type=float, default=None)

    p = sub.add_parser("sweep", help="run a multi-sample sweep from a JSON config")
    p.add_argument("--config", type=Path)
    p.add_argument("--output", type=Path, help="dataset directory (overrides output_dir)")
    p.add_argument("--seed", type=int, help="master seed (overrides master_seed)")
    p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("collapse", help="crossing point and data collapse from emax.csv")
    p.add_argument("--input", type=Path)
    p.add_argument("--output", type=Path, help="directory for collapse.json (default: next to input)")
    p.add_argument("--parity", choices=scaling.PARITIES, default="all")
    p.add_argument("--joint", action="store_true", help="search p_c and nu jointly instead of two-stage")
    p.add_argument("--p-c-range", type=_range, default=(0.0, 0.15))
    p.add_argument("--nu-range", type=_range, default=(0.5, 3.0))
    p.add_argument("--log-base", type=float, default=2.0)
    p.add_argument("--bootstrap", type=int, default=200, help="resamples; needs traces.csv beside the input")
    p.add_argument("--seed", type=int, default=0, help="bootstrap seed")
    p.add_argument("--threads", type=int, default=None, help="bootstrap worker threads")

    p = sub.add_parser("negativity", help="evaluate an analytic fixture state")
    p.add_argument("--fixture", choices=sorted(FIXTURES), default="bell")

    p = sub.add_parser("validate", help="re-check a dataset directory against its manifest")
    p.add_argument("--input", type=Path)
    return parser


def cmd_run(args) -> int:
    spec = CircuitSpec(
        num_qubits=args.num_qubits,
        max_depth=args.depth or 4 * args.num_qubits,
        error_rate=args.error_rate,
        gate_set=args.gate_set,
        seed=args.seed,
        record_every=args.record_every,
        early_stop=args.early_stop,
    )
    tr = run_circuit(spec, RngStream(args.seed))
    print(f"# N={spec.num_qubits} p={spec.error_rate} gate_set={spec.gate_set.value} seed={args.seed}")
    print("depth  log_negativity")
    for d, v in zip(tr.depths, tr.log_negativity):
        print(f"{d:5d}  {v:.10f}")
    if tr.stopped_early:
        print(f"# stopped early at depth {tr.depths[-1]}")
    return 0


def cmd_sweep(args) -> int:
    if args.config is None:
        raise UsageError("sweep: --config is required")
    if not args.config.is_file():
        raise UsageError(f"sweep: config file {args.config} not found")
    try:
        raw = json.loads(args.config.read_text())
        if args.output is not None:
            raw["output_dir"] = str(args.output)
        if args.seed is not None:
            raw["master_seed"] = args.seed
        config = experiment.SweepConfig.from_dict(raw)
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise UsageError(f"sweep: invalid config {args.config}: {exc}") from None
    if not config.output_dir:
        raise UsageError("sweep: no output directory (set output_dir or --output)")

    def progress(done, total, key):
        log.info("sample %d/%d  N=%d p=%g s=%d", done, total, *key)

    ds = experiment.run_sweep(config, threads=args.threads, progress=progress)
    print(f"{'N':>3} {'p':>8} {'E_max':>10} {'depth':>6} {'sem':>9} {'samples':>7}")
    for e in ds.emax:
        print(f"{e.num_qubits:3d} {e.error_rate:8.4f} {e.emax:10.5f} {e.depth_at_max:6d} {e.sem_at_max:9.5f} {e.samples:7d}")
    print(f"wrote {Path(config.output_dir) / 'emax.csv'}")
    return 0


def cmd_collapse(args) -> int:
    if args.input is None:
        raise UsageError("collapse: --input is required")
    summaries = experiment.read_emax_csv(args.input)
    out = args.output or args.input.parent
    out.mkdir(parents=True, exist_ok=True)
    est = scaling.estimate_pc_crossing(summaries, log_base=args.log_base, parity=args.parity)
    fit = scaling.collapse_fit(
        summaries,
        p_c_range=args.p_c_range,
        nu_range=args.nu_range,
        p_c=None if args.joint else est.p_c,
        log_base=args.log_base,
        parity=args.parity,
    )
    traces_path = args.input.parent / "traces.csv"
    if args.bootstrap > 0 and traces_path.is_file():
        fit.bootstrap = scaling.bootstrap_collapse(
            experiment.read_traces_csv(traces_path),
            resamples=args.bootstrap,
            seed=args.seed,
            log_base=args.log_base,
            parity=args.parity,
            nu_range=args.nu_range,
            threads=args.threads,
        )
    doc = fit.to_json()
    doc["crossing"] = {"p_c": est.p_c, "spread": est.spread, "pairs": [list(c) for c in est.crossings]}
    (out / "collapse.json").write_text(json.dumps(doc, indent=2) + "\n")
    with open(out / "collapse_points.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["N", "p", "x_scaled", "y_scaled"])
        for row in scaling.collapse_points(summaries, fit.p_c, fit.nu, args.log_base, args.parity):
            w.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3])])
    print(f"crossing p_c = {est.p_c:.4f} (spread {est.spread:.4f})")
    print(f"collapse p_c = {fit.p_c:.4f}  nu = {fit.nu:.3f}  quality = {fit.quality:.3e}")
    if fit.on_boundary:
        print("warning: optimum on the search boundary")
    if fit.bootstrap and "nu" in fit.bootstrap:
        print(f"bootstrap 95%: p_c {fit.bootstrap['p_c'][0]:.4f}..{fit.bootstrap['p_c'][2]:.4f}, "
              f"nu {fit.bootstrap['nu'][0]:.3f}..{fit.bootstrap['nu'][2]:.3f}")
    print(f"wrote {out / 'collapse.json'} and {out / 'collapse_points.csv'}")
    return 0


def cmd_negativity(args) -> int:
    res = negativity_measures(FIXTURES[args.fixture]())
    print(f"fixture={args.fixture}")
    print(f"negativity={res.negativity:.10f}")
    print(f"log_negativity={res.log_negativity:.10f}")
    return 0


def cmd_validate(args) -> int:
    if args.input is None:
        raise UsageError("validate: --input is required")
    problems = experiment.validate_dataset(args.input)
    for msg in problems:
        print(f"FAIL {msg}")
    if problems:
        return 2
    print(f"OK {args.input}")
    return 0


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "collapse": cmd_collapse,
    "negativity": cmd_negativity,
    "validate": cmd_validate,
}


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.verb is None:
            raise UsageError(parser.format_usage().strip())
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(message)s",
    )
    try:
        return COMMANDS[args.verb](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (experiment.DatasetError, scaling.NoCrossingError, scaling.CollapseError, OSError, ValueError) as exc:
        print(f"negat {args.verb}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
