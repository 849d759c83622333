"""Command line entry point: ``dlmsearch <command> [options]``."""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..core import ConfigError, Mode, RunConfig
from ..model import model_digest
from ..oracle import TEST_CHAINS, named_chain, run_battery
from ..verifier import ScoringContext, get_profile, score
from .config import load_config
from .experiments import (
    ExperimentGrid,
    build_verifier,
    emit_shift_data,
    run_experiment,
    shift_runs,
)
from .records import Appender, dumps, make_record


def _common(p):
    p.add_argument("--config", help="key = value settings file")
    p.add_argument("--out", help="output directory for records (default: stdout)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, help="root seed (overrides the config)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")


def build_parser():
    parser = argparse.ArgumentParser(prog="dlmsearch", description="Verifier-guided search for masked diffusion samplers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one configuration, one record")
    _common(p)

    p = sub.add_parser("sweep", help="grid over particles, branching, lambda and block length")
    _common(p)

    p = sub.add_parser("ablate", help="all five modes on shared seeds, with a comparison table")
    _common(p)

    p = sub.add_parser("trace", help="per-step records of a run, plus an optional score-shift table")
    _common(p)
    p.add_argument("--shift-csv", help="write the per-step score table here")

    p = sub.add_parser("oracle", help="exact validation battery on a named test chain")
    _common(p)
    p.add_argument("--chain", default="chain-a", choices=sorted(TEST_CHAINS))
    p.add_argument("--tau", type=float, default=2.0)
    p.add_argument("--samples", type=int, default=100_000)

    p = sub.add_parser("score-text", help="composite verifier report for a text")
    p.add_argument("file", nargs="?", help="text file (default: stdin)")
    p.add_argument("--profile", default="GSM8K")
    p.add_argument("--input-text", help="file with the prompt text")
    p.add_argument("--confidences", help="file with per-token probabilities (JSON list or whitespace separated)")
    p.add_argument("--out", help="output directory")
    return parser


def _settings(args):
    s = load_config(args.config, args.set)
    if args.seed is not None:
        s = s.with_(seed=args.seed)
    return s


class _Sink:
    def __init__(self, out, name):
        self.appender = Appender(Path(out) / name) if out else None

    def write(self, record):
        if self.appender is None:
            sys.stdout.write(dumps(record) + "\n")
        else:
            self.appender.append(record)


def _emit_grid(grid, args, name, kind, trace=False):
    sink = _Sink(args.out, name)
    ok = True
    records = []
    for rec in run_experiment(grid, workers=args.workers, kind=kind, trace=trace):
        sink.write(rec)
        records.append(rec)
        ok &= bool(rec.get("ok"))
    return ok, records


def cmd_run(args):
    s = _settings(args)
    grid = replace(ExperimentGrid.from_settings(s), seeds=(s["seed"],))
    if len(grid) != 1:
        raise ConfigError("run takes a single setting; use sweep for lists")
    ok, _ = _emit_grid(grid, args, "run.jsonl", "run")
    return ok


def cmd_sweep(args):
    grid = ExperimentGrid.from_settings(_settings(args))
    ok, _ = _emit_grid(grid, args, "sweep.jsonl", "sweep")
    return ok


def cmd_ablate(args):
    grid = replace(ExperimentGrid.from_settings(_settings(args)), modes=tuple(Mode))
    ok, records = _emit_grid(grid, args, "ablate.jsonl", "ablate")
    rows = {}
    for r in records:
        if "error" in r:
            continue
        rows.setdefault(r["mode"], []).append(r)
    print(f"{'mode':<14} {'runs':>5} {'mean nfe':>9} {'mean f':>8} {'hit rate':>9}", file=sys.stderr)
    for mode in Mode:
        rs = rows.get(mode.value, [])
        if not rs:
            continue
        f = np.mean([r["output_f"] for r in rs])
        hit = np.mean([bool(r["correct"]) for r in rs])
        nfe = np.mean([r["nfe"] for r in rs])
        print(f"{mode.value:<14} {len(rs):>5} {nfe:>9.1f} {f:>8.4f} {hit:>9.3f}", file=sys.stderr)
    return ok


def cmd_trace(args):
    s = _settings(args)
    grid = ExperimentGrid.from_settings(s)
    ok, records = _emit_grid(grid, args, "trace.jsonl", "trace", trace=True)
    if args.shift_csv:
        model = s.model()
        verifier = build_verifier(model, s["verifier"])
        series = shift_runs(model, verifier, grid.cells()[0], grid.seeds)
        emit_shift_data(series, args.shift_csv)
    return ok


def cmd_oracle(args):
    model, schedule = named_chain(args.chain)
    verifier = build_verifier(model, "default")
    s = _settings(args)
    seed = s["seed"]
    cfg = RunConfig(s["particles"][0], s["branching"][0], s["lambda"][0], args.tau, schedule, seed, Mode.S3)
    checks = run_battery(model, schedule, verifier, args.tau, args.samples, seed, s3_config=cfg)
    sink = _Sink(args.out, "oracle.jsonl")
    ok = True
    for c in checks:
        rec = make_record("oracle", {"chain": args.chain, **c.to_dict()}, {"model_digest": model_digest(model)})
        sink.write(rec)
        ok &= c.passed
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.value:.3g}", file=sys.stderr)
    return ok


def _read_confidences(path):
    text = Path(path).read_text().strip()
    if text.startswith("["):
        return [float(x) for x in json.loads(text)]
    return [float(x) for x in text.split()]


def cmd_score_text(args):
    text = Path(args.file).read_text() if args.file else sys.stdin.read()
    ctx = ScoringContext(
        input_text=Path(args.input_text).read_text() if args.input_text else "",
        confidences=_read_confidences(args.confidences) if args.confidences else None,
        profile=get_profile(args.profile),
    )
    report = score(text, ctx)
    rec = make_record("score", report.to_dict())
    _Sink(args.out, "score.jsonl").write(rec)
    return True


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "ablate": cmd_ablate,
    "trace": cmd_trace,
    "oracle": cmd_oracle,
    "score-text": cmd_score_text,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        ok = COMMANDS[args.command](args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"dlmsearch: error: {exc}", file=sys.stderr)
        return 2
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
