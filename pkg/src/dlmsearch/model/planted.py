"""Planted-reward synthetic model with a built-in density-quality mismatch."""

import numpy as np

from ..core import Schedule
from ..rng import TAG_MODEL, Stream, derive
from ..kernels import keyed_uniforms, prefix_match
from .base import DenoisingModel, ModelError

MISMATCH_LIMIT = 0.05
CHECK_SAMPLES = 10_000


class PlantedSynthetic(DenoisingModel):
    """Positional-bigram model with rare, high-reward planted patterns.

    Token ``i`` is drawn from ``table[i, prev]`` where ``prev`` is the token at
    ``i - 1`` when visible and a dedicated "no context" row otherwise. Each
    pattern starts with a trigger token whose probability is forced down to
    ``trigger_prob`` in every row; once a pattern token is visible, the next
    pattern token becomes the most likely continuation at ``follow_prob``.
    The base distribution therefore rarely produces a pattern, yet a partial
    pattern is easy to extend: reward lives in low-density regions.

    Construction draws 10^4 left-to-right samples and raises if any pattern
    appears in 5% or more of them.
    """

    kind = "planted"
    enumerable = False

    def __init__(
        self,
        vocab_size=32,
        length=16,
        seed=0,
        n_patterns=2,
        pattern_length=4,
        trigger_prob=0.004,
        follow_prob=0.3,
        base_scale=0.5,
        check=True,
    ):
        super().__init__(vocab_size, length)
        if not 8 <= self.vocab_size <= 32 or not 16 <= self.length <= 64:
            raise ModelError("planted model needs 8<=V<=32 and 16<=L<=64")
        if n_patterns * pattern_length > self.vocab_size:
            raise ModelError("patterns need n_patterns * pattern_length distinct symbols")
        self.seed = int(seed)
        self.n_patterns = int(n_patterns)
        self.pattern_length = int(pattern_length)
        self.trigger_prob = float(trigger_prob)
        self.follow_prob = float(follow_prob)
        self.base_scale = float(base_scale)

        rng = np.random.default_rng(self.seed)
        v, length = self.vocab_size, self.length
        logits = rng.normal(scale=self.base_scale, size=(length, v + 1, v))
        table = np.exp(logits - logits.max(axis=2, keepdims=True))
        table /= table.sum(axis=2, keepdims=True)

        symbols = rng.permutation(v)[: self.n_patterns * self.pattern_length]
        self.patterns = symbols.reshape(self.n_patterns, self.pattern_length).astype(np.int64)
        triggers = self.patterns[:, 0]

        _pin(table, triggers, np.full(triggers.size, self.trigger_prob))
        for pat in self.patterns:
            for a, b in zip(pat[:-1], pat[1:]):
                syms = np.append(triggers, b)
                probs = np.append(np.full(triggers.size, self.trigger_prob), self.follow_prob)
                _pin(table[:, a, :], syms, probs)
        self.table = table
        self.table.setflags(write=False)

        self.base_hit_rate = None
        if check:
            self.base_hit_rate = self.empirical_hit_rate(CHECK_SAMPLES)
            if self.base_hit_rate >= MISMATCH_LIMIT:
                raise ModelError(
                    f"planted patterns appear in {self.base_hit_rate:.3f} of base samples (limit {MISMATCH_LIMIT})"
                )

    def conditionals(self, tokens, positions):
        tokens = np.atleast_2d(np.asarray(tokens, dtype=np.int64))
        pos = np.asarray(positions, dtype=np.int64)
        prev = np.where(pos[None, :] > 0, tokens[:, np.maximum(pos - 1, 0)], self.mask_id)
        prev = np.where(prev == self.mask_id, self.vocab_size, prev)
        return self.table[pos[None, :], prev]

    def empirical_hit_rate(self, samples, seed=None):
        """Fraction of left-to-right, one-token-per-step base samples containing a pattern."""
        sched = Schedule(self.length, 1)
        key = Stream.from_seed(self.seed if seed is None else seed).child(TAG_MODEL, 2).key
        keys = derive(np.uint64(key), np.arange(samples))
        u = keyed_uniforms(keys, self.length)
        x = np.full((samples, self.length), self.mask_id, dtype=np.int64)
        for t in range(sched.steps, 0, -1):
            pos = sched.updatable_positions(t)
            x = self.sample_block(x, pos, u[:, list(pos)])
        _, hit = prefix_match(x, self.patterns)
        return float((hit >= 0).mean())

    def to_dict(self):
        return {
            "kind": self.kind,
            "seed": self.seed,
            "vocab_size": self.vocab_size,
            "length": self.length,
            "n_patterns": self.n_patterns,
            "pattern_length": self.pattern_length,
            "trigger_prob": self.trigger_prob,
            "follow_prob": self.follow_prob,
            "base_scale": self.base_scale,
            "patterns": self.patterns.tolist(),
        }


def _pin(rows, symbols, probs):
    """Set ``rows[..., symbols] = probs`` and rescale the other entries to keep sums at 1."""
    rest = 1.0 - rows[..., symbols].sum(axis=-1)
    scale = (1.0 - probs.sum()) / rest
    rows *= scale[..., None]
    rows[..., symbols] = probs
