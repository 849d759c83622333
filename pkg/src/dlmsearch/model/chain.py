"""Small models whose terminal distribution can be enumerated exactly."""

import numpy as np

from ..rng import TAG_MODEL, Stream, derive
from ..kernels import keyed_uniforms
from ..tables import encode
from .base import DenoisingModel, ModelError

MAX_CHAIN_VOCAB = 5
MAX_CHAIN_LENGTH = 6


class EnumerableChain(DenoisingModel):
    """Context-dependent toy denoiser over ``V <= 5`` symbols and ``L <= 6`` positions.

    The categorical at position ``i`` is a deterministic function of
    ``(seed, i, full visible context)``: every distinct partial state (and so
    every step / mask pattern) gets its own table, hashed from the seed rather
    than stored. Each table mixes a ``floor`` of uniform mass into a peaked
    random draw, so ``p_0`` has full support.
    """

    kind = "chain"
    enumerable = True

    def __init__(self, vocab_size=2, length=3, seed=0, sharpness=2.0, floor=0.05):
        super().__init__(vocab_size, length)
        if not 2 <= self.vocab_size <= MAX_CHAIN_VOCAB or not 1 <= self.length <= MAX_CHAIN_LENGTH:
            raise ModelError(f"chain needs 2<=V<={MAX_CHAIN_VOCAB}, 1<=L<={MAX_CHAIN_LENGTH}")
        if not 0 < floor <= 1:
            raise ModelError("floor must lie in (0, 1]")
        self.seed = int(seed)
        self.sharpness = float(sharpness)
        self.floor = float(floor)
        self._key = np.uint64(Stream.from_seed(self.seed).child(TAG_MODEL).key)

    @property
    def target(self):
        """Seed-determined designated terminal used by target-based rewards."""
        u = Stream.from_seed(self.seed).child(TAG_MODEL, 1).uniforms(self.length)
        return tuple(int(x) for x in np.minimum((u * self.vocab_size).astype(np.int64), self.vocab_size - 1))

    def conditionals(self, tokens, positions):
        tokens = np.atleast_2d(np.asarray(tokens, dtype=np.int64))
        code = encode(tokens, self.vocab_size + 1)
        v = self.vocab_size
        out = np.empty((tokens.shape[0], len(positions), v))
        for j, p in enumerate(positions):
            keys = derive(self._key, np.int64(p), code)
            w = (-np.log(keyed_uniforms(keys, v))) ** self.sharpness
            out[:, j, :] = self.floor / v + (1.0 - self.floor) * w / w.sum(axis=1, keepdims=True)
        return out

    def to_dict(self):
        return {
            "kind": self.kind,
            "seed": self.seed,
            "vocab_size": self.vocab_size,
            "length": self.length,
            "sharpness": self.sharpness,
            "floor": self.floor,
        }


class PositionwiseModel(DenoisingModel):
    """Context-free model: position ``i`` always draws from ``probs[i]``.

    Handy for closed-form checks (uniform, degenerate, hand-written tables).
    """

    kind = "positionwise"
    enumerable = True

    def __init__(self, probs):
        probs = np.asarray(probs, dtype=np.float64)
        if probs.ndim != 2:
            raise ModelError("probs must have shape (L, V)")
        if np.any(probs < 0) or np.any(np.abs(probs.sum(axis=1) - 1.0) > 1e-9):
            raise ModelError("every row of probs must be a distribution")
        super().__init__(probs.shape[1], probs.shape[0])
        self.probs = probs

    @classmethod
    def uniform(cls, vocab_size, length):
        return cls(np.full((length, vocab_size), 1.0 / vocab_size))

    @classmethod
    def deterministic(cls, tokens, vocab_size):
        probs = np.zeros((len(tokens), vocab_size))
        probs[np.arange(len(tokens)), tokens] = 1.0
        return cls(probs)

    def conditionals(self, tokens, positions):
        n = np.atleast_2d(tokens).shape[0]
        return np.broadcast_to(self.probs[np.asarray(positions)], (n, len(positions), self.vocab_size)).copy()

    def to_dict(self):
        return {"kind": self.kind, "probs": self.probs.tolist()}
