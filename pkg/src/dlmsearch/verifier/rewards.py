"""Token-level verifiers used by the search engine and the exact oracles.

Every verifier maps a batch of mask-free token rows ``(n, L)`` to scores in
[0, 1] (``score_batch``) and to hashable answers for voting (``answers``).
"""

import numpy as np

from ..kernels import prefix_match
from .composite import ScoringContext, score
from .extract import extract_answer


class TokenVerifier:
    name = "verifier"

    def score_batch(self, tokens, confidences=None):
        raise NotImplementedError

    def answers(self, tokens):
        raise NotImplementedError

    def __call__(self, tokens):
        return self.score_batch(np.atleast_2d(tokens))

    def to_dict(self):
        return {"name": self.name}


class PatternReward(TokenVerifier):
    """Longest planted-pattern prefix found anywhere in the row, over the pattern length."""

    name = "pattern"

    def __init__(self, patterns):
        self.patterns = np.atleast_2d(np.asarray(patterns, dtype=np.int64))

    @classmethod
    def for_model(cls, model):
        return cls(model.patterns)

    def score_batch(self, tokens, confidences=None):
        return prefix_match(np.atleast_2d(tokens), self.patterns)[0]

    def hits(self, tokens):
        return prefix_match(np.atleast_2d(tokens), self.patterns)[1]

    def answers(self, tokens):
        return [None if h < 0 else int(h) for h in self.hits(tokens)]

    def to_dict(self):
        return {"name": self.name, "patterns": self.patterns.tolist()}


class TargetSimilarity(TokenVerifier):
    """Fraction of positions agreeing with a designated target terminal."""

    name = "target"

    def __init__(self, target, indicator=False):
        self.target = np.asarray(target, dtype=np.int64)
        self.indicator = bool(indicator)

    @classmethod
    def for_model(cls, model, indicator=False):
        return cls(model.target, indicator)

    def score_batch(self, tokens, confidences=None):
        eq = np.atleast_2d(tokens) == self.target[None, :]
        if self.indicator:
            return eq.all(axis=1).astype(np.float64)
        return eq.mean(axis=1)

    def answers(self, tokens):
        return ["".join(map(str, row)) for row in np.atleast_2d(tokens)]

    def to_dict(self):
        return {"name": self.name, "target": self.target.tolist(), "indicator": self.indicator}


class TableReward(TokenVerifier):
    """Arbitrary reward given as one value per terminal in lexicographic order."""

    name = "table"

    def __init__(self, values, vocab_size, length):
        self.values = np.asarray(values, dtype=np.float64)
        self.vocab_size, self.length = int(vocab_size), int(length)
        if self.values.shape != (self.vocab_size**self.length,):
            raise ValueError("one value per terminal expected")
        if np.any(self.values < 0) or np.any(self.values > 1):
            raise ValueError("rewards must lie in [0, 1]")
        self._radix = self.vocab_size ** np.arange(self.length - 1, -1, -1, dtype=np.int64)

    def score_batch(self, tokens, confidences=None):
        return self.values[np.atleast_2d(tokens) @ self._radix]

    def answers(self, tokens):
        return ["".join(map(str, row)) for row in np.atleast_2d(tokens)]

    def to_dict(self):
        return {"name": self.name, "values": self.values.tolist()}


class TextVerifier(TokenVerifier):
    """Composite text verifier over rendered token rows.

    ``symbols`` maps token ids to strings; rows are joined with ``sep``.
    """

    name = "text"

    def __init__(self, symbols, ctx=None, sep=" "):
        self.symbols = list(symbols)
        self.ctx = ctx if ctx is not None else ScoringContext()
        self.sep = sep

    def render(self, row):
        return self.sep.join(self.symbols[int(t)] for t in row)

    def score_batch(self, tokens, confidences=None):
        out = np.empty(np.atleast_2d(tokens).shape[0])
        for i, row in enumerate(np.atleast_2d(tokens)):
            ctx = self.ctx
            if confidences is not None:
                ctx = ScoringContext(ctx.input_text, confidences[i], ctx.profile, ctx.special_tokens, ctx.mask_token)
            out[i] = score(self.render(row), ctx).composite
        return out

    def answers(self, tokens):
        out = []
        for row in np.atleast_2d(tokens):
            a = extract_answer(self.render(row))
            out.append(None if a is None else a[0])
        return out

    def to_dict(self):
        return {"name": self.name, "symbols": self.symbols, "profile": self.ctx.profile.name}


def default_verifier(model):
    """The natural reward for a built-in model."""
    if model.kind == "planted":
        return PatternReward.for_model(model)
    if model.kind == "chain":
        return TargetSimilarity.for_model(model)
    raise ValueError(f"no default verifier for {model.kind!r} models")


def terminal_values(verifier, table):
    """Verifier scores for every row of a :class:`~dlmsearch.tables.TerminalTable`."""
    return np.asarray(verifier.score_batch(table.states), dtype=np.float64)


__all__ = [
    "PatternReward",
    "TableReward",
    "TargetSimilarity",
    "TextVerifier",
    "TokenVerifier",
    "default_verifier",
    "terminal_values",
]
