"""Explicit probability tables over terminal sequences."""

from dataclasses import dataclass

import numpy as np


def encode(tokens, base):
    """Mixed-radix code of each row of ``tokens`` (``base`` = V + 1)."""
    tokens = np.atleast_2d(np.asarray(tokens, dtype=np.int64))
    code = np.zeros(tokens.shape[0], dtype=np.int64)
    for j in range(tokens.shape[1]):
        code = code * base + tokens[:, j]
    return code


def all_sequences(vocab_size, length):
    """Every sequence in ``V^L`` in lexicographic order, shape ``(V**L, L)``."""
    grids = np.indices((vocab_size,) * length).reshape(length, -1).T
    return np.ascontiguousarray(grids, dtype=np.int64)


@dataclass(frozen=True)
class TerminalTable:
    """A (normalised) function on ``V^L``; rows are in lexicographic order."""

    states: np.ndarray
    probs: np.ndarray
    vocab_size: int

    def __post_init__(self):
        if self.states.shape[0] != self.probs.shape[0]:
            raise ValueError("states and probs disagree in length")
        if np.any(self.probs < 0):
            raise ValueError("negative probability in terminal table")

    @classmethod
    def from_dict(cls, mapping, vocab_size, length):
        states = all_sequences(vocab_size, length)
        probs = np.zeros(states.shape[0])
        codes = encode(states, vocab_size + 1)
        index = {int(c): i for i, c in enumerate(codes)}
        for key, p in mapping.items():
            probs[index[int(encode(np.array(key), vocab_size + 1)[0])]] += p
        return cls(states, probs, vocab_size)

    @property
    def codes(self):
        return encode(self.states, self.vocab_size + 1)

    @property
    def total(self):
        return float(self.probs.sum())

    @property
    def normalized(self):
        return abs(self.total - 1.0) <= 1e-9

    def normalize(self):
        return TerminalTable(self.states, self.probs / self.probs.sum(), self.vocab_size)

    def index_of(self, tokens):
        """Row indices of the given terminal sequences."""
        return np.searchsorted(self.codes, encode(tokens, self.vocab_size + 1))

    def expectation(self, values):
        return float(np.dot(self.probs, values))

    def __len__(self):
        return self.states.shape[0]
