"""Verifier-guided particle search over a fixed denoising schedule, plus the
flat decoders it is compared against.

All five modes share one stepping routine. A population of trajectories is
expanded into children, each child's argmax completion is scored, and a
selection rule turns the scores into integer offspring counts. The modes
differ only in that rule (and in whether scores are looked at at all), which
is what makes the degenerate ``N = b = 1`` case bit-identical across them.

Randomness
    Particle ``i`` starts from ``derive(root, 0, i)``. At step ``t`` its child
    ``j`` draws from ``derive(stream_i, TAG_CHILD, t, j)`` and copy ``c`` of a
    surviving child continues from ``derive(child, TAG_COPY, c)``. Rounding
    uniforms come from ``derive(root, TAG_SSP, t)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError, Mode, PartialState, RunConfig
from .kernels import keyed_uniforms
from .resampling import ess, materialize, ssp_round, tilt_weights
from .rng import TAG_CHILD, TAG_SSP, derive, seed_key


@dataclass(frozen=True)
class RunRecord:
    step: int
    scores: np.ndarray
    weights: np.ndarray
    expected_offspring: np.ndarray
    counts: np.ndarray
    ess: float
    confidence: float
    # flat modes record scores for reporting only; they never steer sampling
    diagnostic: bool = False

    def to_dict(self):
        return {
            "step": self.step,
            "scores": self.scores.tolist(),
            "weights": self.weights.tolist(),
            "expected_offspring": self.expected_offspring.tolist(),
            "counts": self.counts.tolist(),
            "ess": self.ess,
            "confidence": self.confidence,
            "diagnostic": self.diagnostic,
        }


@dataclass
class SearchResult:
    mode: Mode
    output: PartialState
    output_index: int
    terminals: np.ndarray
    terminal_scores: np.ndarray
    answers: list
    records: list = field(default_factory=list)
    nfe: int = 0
    cleanpred_nfe: int = 0

    @property
    def output_score(self):
        return float(self.terminal_scores[self.output_index])

    @property
    def answer(self):
        return self.answers[self.output_index]

    @property
    def transition_nfe(self):
        return self.nfe

    def terminal_population(self):
        return [PartialState(row, 0) for row in self.terminals]


def _root(config, rng):
    if rng is None:
        return seed_key(config.seed)[0]
    if hasattr(rng, "key"):
        return np.uint64(rng.key)
    return seed_key(int(rng))[0]


def _expand(model, schedule, tokens, streams, t, b):
    """All ``len(tokens) * b`` children of the population, parent-major."""
    pos = schedule.updatable_positions(t)
    n = tokens.shape[0]
    parents = np.repeat(np.arange(n), b)
    child_streams = derive(streams[parents], TAG_CHILD, t, np.tile(np.arange(b), n))
    u = keyed_uniforms(child_streams, len(pos))
    children = model.sample_block(tokens[parents], pos, u)
    return children, child_streams


def _population(model, verifier, config, root, n, b, select, guided):
    """Shared stepping loop. ``select(scores, t)`` returns ``(weights, xi, counts)``."""
    schedule = config.schedule
    tokens = np.full((n, schedule.length), model.mask_id, dtype=np.int64)
    streams = derive(root, 0, np.arange(n))
    records = []
    cleanpred = 0
    for t in range(schedule.steps, 0, -1):
        conf = float(np.nanmean(model.top1_confidence(tokens)))
        children, child_streams = _expand(model, schedule, tokens, streams, t, b)
        scores = np.asarray(verifier.score_batch(model.clean_predict(children)), dtype=np.float64)
        if guided:
            cleanpred += children.shape[0]
            w, xi, counts = select(scores, t)
        else:
            w = np.full(children.shape[0], 1.0 / children.shape[0])
            xi = np.ones(children.shape[0])
            counts = np.ones(children.shape[0], dtype=np.int64)
        records.append(RunRecord(t, scores, w, xi, counts, ess(w), conf, not guided))
        index, streams = materialize(counts, child_streams)
        tokens = children[index]
    return tokens, records, cleanpred


def _finish(mode, model, verifier, config, tokens, records, nfe, cleanpred, chooser):
    scores = np.asarray(verifier.score_batch(tokens), dtype=np.float64)
    answers = verifier.answers(tokens)
    idx = chooser(tokens, scores, answers)
    return SearchResult(mode, PartialState(tokens[idx], 0), idx, tokens, scores, answers, records, nfe, cleanpred)


def _require(config, mode):
    if config.mode is not mode:
        raise ConfigError(f"config mode is {config.mode.value}, expected {mode.value}")


# -- selection ------------------------------------------------------------------


def majority_vote_select(terminals, model, schedule, answers):
    """Index of the chosen terminal.

    Terminals are grouped by answer (a missing answer is its own group). The
    largest group wins; ties between groups, and the representative inside the
    winning group, go to the lowest sequence NLL, then the lowest index.
    """
    terminals = np.atleast_2d(terminals)
    if terminals.shape[0] == 0:
        raise ValueError("no terminals to vote over")
    if terminals.shape[0] == 1:
        return 0
    nll = np.asarray(model.sequence_nll(terminals, schedule), dtype=np.float64)
    groups = {}
    for i, a in enumerate(answers):
        groups.setdefault(("solo", i) if a is None else ("ans", a), []).append(i)
    best = None
    for members in groups.values():
        rep = min(members, key=lambda i: (nll[i], i))
        key = (-len(members), nll[rep], rep)
        if best is None or key < best[0]:
            best = (key, rep)
    return best[1]


def argmax_score_select(terminals, model, schedule, scores):
    """Highest score; ties by lowest sequence NLL, then lowest index."""
    scores = np.asarray(scores)
    top = np.flatnonzero(scores == scores.max())
    if top.size == 1:
        return int(top[0])
    nll = np.asarray(model.sequence_nll(np.atleast_2d(terminals)[top], schedule))
    return int(top[np.lexsort((top, nll))[0]])


# -- modes ------------------------------------------------------------------------


def _s3_selector(config, root):
    n = config.particles

    def select(scores, t):
        w = tilt_weights(scores, config.lam)
        xi = n * w
        xi = xi * (n / xi.sum())
        u = keyed_uniforms(derive(root, TAG_SSP, t), xi.size)[0]
        return w, xi, ssp_round(xi, u)

    return select


def _top_n_selector(config):
    n = config.particles

    def select(scores, t):
        order = np.lexsort((np.arange(scores.size), -scores))
        counts = np.zeros(scores.size, dtype=np.int64)
        counts[order[:n]] = 1
        w = counts / n
        return w, counts.astype(np.float64), counts

    return select


def _voter(model, config):
    return lambda tokens, scores, answers: majority_vote_select(tokens, model, config.schedule, answers)


def run_s3(model, verifier, config: RunConfig, rng=None):
    _require(config, Mode.S3)
    root = _root(config, rng)
    n, b = config.particles, config.branching
    tokens, records, cp = _population(model, verifier, config, root, n, b, _s3_selector(config, root), True)
    nfe = config.schedule.steps * n * b
    return _finish(Mode.S3, model, verifier, config, tokens, records, nfe, cp, _voter(model, config))


def run_lookahead_only(model, verifier, config: RunConfig, rng=None):
    _require(config, Mode.LOOKAHEAD_ONLY)
    root = _root(config, rng)
    n, b = config.particles, config.branching
    tokens, records, cp = _population(model, verifier, config, root, n, b, _top_n_selector(config), True)
    nfe = config.schedule.steps * n * b
    return _finish(Mode.LOOKAHEAD_ONLY, model, verifier, config, tokens, records, nfe, cp, _voter(model, config))


def _flat(model, verifier, config, rng, k):
    root = _root(config, rng)
    tokens, records, _ = _population(model, verifier, config, root, k, 1, None, False)
    return tokens, records, config.schedule.steps * k


def run_baseline(model, verifier, config: RunConfig, rng=None):
    _require(config, Mode.BASELINE)
    tokens, records, nfe = _flat(model, verifier, config, rng, 1)
    return _finish(Mode.BASELINE, model, verifier, config, tokens, records, nfe, 0, lambda *a: 0)


def run_best_of_k(model, verifier, config: RunConfig, rng=None):
    _require(config, Mode.BEST_OF_K)
    tokens, records, nfe = _flat(model, verifier, config, rng, config.budget)
    return _finish(Mode.BEST_OF_K, model, verifier, config, tokens, records, nfe, 0, _voter(model, config))


def run_tilting_only(model, verifier, config: RunConfig, rng=None):
    _require(config, Mode.TILTING_ONLY)
    tokens, records, nfe = _flat(model, verifier, config, rng, config.budget)

    def choose(tokens, scores, answers):
        # exp(lam * f) is monotone in f, so the weighted argmax is the argmax of f
        return argmax_score_select(tokens, model, config.schedule, scores)

    return _finish(Mode.TILTING_ONLY, model, verifier, config, tokens, records, nfe, 0, choose)


RUNNERS = {
    Mode.S3: run_s3,
    Mode.BASELINE: run_baseline,
    Mode.BEST_OF_K: run_best_of_k,
    Mode.TILTING_ONLY: run_tilting_only,
    Mode.LOOKAHEAD_ONLY: run_lookahead_only,
}


def run(model, verifier, config: RunConfig, rng=None):
    """Dispatch on ``config.mode``."""
    return RUNNERS[config.mode](model, verifier, config, rng)


def confidence_trace(result):
    """Mean top-1 clean-conditional probability of the population, one entry per step."""
    return np.array([r.confidence for r in result.records])
