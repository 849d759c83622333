"""Experiment grids, per-cell result records and score-shift tables."""

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..core import Mode, Policy, RunConfig, Schedule
from ..model import model_digest, model_from_dict, model_to_dict
from ..search import run
from ..verifier import PatternReward, TargetSimilarity, default_verifier
from .records import make_record, record_id

SHIFT_HEADER = ("series", "seed", "run", "step", "score")


def build_verifier(model, name="default"):
    if name == "default":
        return default_verifier(model)
    if name == "pattern":
        return PatternReward.for_model(model)
    if name == "target":
        return TargetSimilarity.for_model(model)
    if name == "target-indicator":
        return TargetSimilarity.for_model(model, indicator=True)
    raise ValueError(f"unknown verifier {name!r}")


def is_correct(model, tokens):
    """Toy accuracy: a planted pattern appears, or the chain's target is produced."""
    tokens = np.asarray(tokens)
    if model.kind == "planted":
        return bool(PatternReward.for_model(model).hits(tokens)[0] >= 0)
    if model.kind == "chain":
        return tuple(int(x) for x in tokens) == model.target
    return None


def expected_nfe(config):
    t = config.schedule.steps
    if config.mode in (Mode.S3, Mode.LOOKAHEAD_ONLY):
        return t * config.particles * config.branching
    if config.mode in (Mode.BEST_OF_K, Mode.TILTING_ONLY):
        return t * config.budget
    return t


def expected_population(config):
    if config.mode in (Mode.S3, Mode.LOOKAHEAD_ONLY):
        return config.particles
    return 1 if config.mode is Mode.BASELINE else config.budget


@dataclass
class ExperimentGrid:
    """Cartesian product of search settings. One cell per (setting, seed)."""

    model: object
    verifier: str = "default"
    particles: tuple = (4,)
    branching: tuple = (2,)
    lambdas: tuple = (4.0,)
    block_lengths: tuple = (1,)
    modes: tuple = (Mode.S3,)
    seeds: tuple = (0,)
    tau: float = 1.0
    policy: Policy = Policy.LEFT_TO_RIGHT
    settings: dict = field(default_factory=dict)

    @classmethod
    def from_settings(cls, settings):
        v = settings.values
        for k in v["block_length"]:
            settings.schedule(k)  # validates an explicit step count
        return cls(
            settings.model(),
            v["verifier"],
            tuple(v["particles"]),
            tuple(v["branching"]),
            tuple(v["lambda"]),
            tuple(v["block_length"]),
            tuple(Mode(m) for m in v["mode"]),
            tuple(settings.seeds),
            v["tau"],
            Policy(v["policy"]),
            settings.to_dict(),
        )

    def cells(self):
        out = []
        for mode in self.modes:
            for n in self.particles:
                for b in self.branching:
                    for lam in self.lambdas:
                        for k in self.block_lengths:
                            sched = Schedule(self.model.length, k, self.policy, seed=0)
                            for seed in self.seeds:
                                out.append(RunConfig(n, b, lam, self.tau, sched, seed, Mode(mode)))
        return out

    def __len__(self):
        return len(self.modes) * len(self.particles) * len(self.branching) * len(self.lambdas) * len(
            self.block_lengths
        ) * len(self.seeds)


def config_dict(config):
    return {
        "mode": config.mode.value,
        "particles": config.particles,
        "branching": config.branching,
        "lambda": config.lam,
        "tau": config.tau,
        "block_length": config.schedule.block_length,
        "length": config.schedule.length,
        "steps": config.schedule.steps,
        "policy": config.schedule.policy.value,
        "seed": config.seed,
    }


def result_record(model, verifier_name, config, result, digest, kind="run", trace=False):
    cfg = config_dict(config)
    nfe_ok = result.nfe == expected_nfe(config)
    pop_ok = result.terminals.shape[0] == expected_population(config)
    body = {
        "id": record_id(kind, cfg, verifier_name, digest),
        "mode": config.mode.value,
        "N": config.particles,
        "b": config.branching,
        "lambda": config.lam,
        "K": config.budget,
        "block_length": config.schedule.block_length,
        "T": config.schedule.steps,
        "seed": config.seed,
        "nfe": result.nfe,
        "cleanpred_nfe": result.cleanpred_nfe,
        "output": list(result.output.tokens),
        "output_f": result.output_score,
        "mean_f": float(result.terminal_scores.mean()),
        "max_f": float(result.terminal_scores.max()),
        "correct": is_correct(model, result.output.tokens),
        "answer": result.answer,
        # whitespace words of the output; stands in for tokenizer counts
        "output_words": len(result.output.tokens),
        "checks": {"nfe": nfe_ok, "population": bool(pop_ok)},
        "ok": bool(nfe_ok and pop_ok),
    }
    if trace:
        body["steps"] = [r.to_dict() for r in result.records]
    prov = {"config": cfg, "verifier": verifier_name, "model": model_to_dict(model), "model_digest": digest}
    return make_record(kind, body, prov)


_WORKER_MODEL = {}


def _model_from(payload):
    key = payload["digest"]
    if key not in _WORKER_MODEL:
        _WORKER_MODEL.clear()
        _WORKER_MODEL[key] = model_from_dict(payload["model"])
    return _WORKER_MODEL[key]


def run_cell(payload, config, kind="run", trace=False):
    """One grid cell to one record; failures become error records."""
    try:
        model = payload.get("obj") or _model_from(payload)
        verifier = build_verifier(model, payload["verifier"])
        result = run(model, verifier, config)
        return result_record(model, payload["verifier"], config, result, payload["digest"], kind, trace)
    except Exception as exc:  # reported per cell, the grid carries on
        cfg = config_dict(config)
        return make_record(
            kind,
            {"id": record_id(kind, cfg, payload["verifier"], payload["digest"]), "ok": False,
             "error": f"{type(exc).__name__}: {exc}", **{"mode": cfg["mode"], "seed": cfg["seed"]}},
            {"config": cfg, "model_digest": payload["digest"]},
        )


def _run_cell_star(args):
    return run_cell(*args)


def run_experiment(grid, workers=1, kind="run", trace=False):
    """Yield one record per cell, in cell order regardless of ``workers``."""
    digest = model_digest(grid.model)
    cells = grid.cells()
    if workers <= 1:
        payload = {"obj": grid.model, "verifier": grid.verifier, "digest": digest}
        for cfg in cells:
            yield run_cell(payload, cfg, kind, trace)
        return
    payload = {"model": model_to_dict(grid.model), "verifier": grid.verifier, "digest": digest}
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(_run_cell_star, [(payload, cfg, kind, trace) for cfg in cells], chunksize=8)


def shift_runs(model, verifier, config, seeds):
    """Guided runs and flat base-population runs on the same seeds.

    Returns ``{series: [(seed, SearchResult), ...]}``; the base series uses ``BestOfK``
    with the same budget so both populations have ``N * b`` rows per step.
    """
    out = {config.mode.value: [], "base": []}
    flat = replace(config, mode=Mode.BEST_OF_K)
    for s in seeds:
        out[config.mode.value].append((s, run(model, verifier, replace(config, seed=s))))
        out["base"].append((s, run(model, verifier, replace(flat, seed=s))))
    return out


def shift_rows(series_results):
    """Long-format ``(series, seed, run, step, score)`` rows from traced runs."""
    rows = []
    for series, results in series_results.items():
        for i, (seed, res) in enumerate(results):
            for rec in res.records:
                rows.extend((series, seed, i, rec.step, float(s)) for s in rec.scores)
    return rows


def emit_shift_data(records, path=None):
    """Write the per-step score table as CSV (text returned when ``path`` is None).

    ``records`` is either a ``{series: [(seed, SearchResult)]}`` mapping or an iterable
    of trace records carrying ``steps``.
    """
    if isinstance(records, dict):
        rows = shift_rows(records)
    else:
        rows = []
        for i, rec in enumerate(records):
            for st in rec.get("steps", []):
                rows.extend((rec.get("mode"), rec.get("seed", i), i, st["step"], float(s)) for s in st["scores"])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SHIFT_HEADER)
    w.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
