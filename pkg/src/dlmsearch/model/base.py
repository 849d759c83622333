"""The denoising-model contract.

A concrete model only has to supply :meth:`DenoisingModel.conditionals`, the
per-position categorical distributions given a (partially masked) state.
Positions inside one update block are conditionally independent given the
parent, so the reverse kernel, clean prediction, path NLL and exact terminal
enumeration all follow from that single method.

Batch methods take token arrays of shape ``(n, L)``; the single-state methods
wrap them for :class:`~dlmsearch.core.PartialState`.
"""

from abc import ABC, abstractmethod
import itertools

import numpy as np

from ..core import PartialState, Vocabulary
from ..kernels import inverse_cdf
from ..tables import TerminalTable, encode

MAX_ENUMERATION = 100_000


class ModelError(ValueError):
    pass


class NotEnumerableError(ModelError):
    pass


class DenoisingModel(ABC):
    kind = "abstract"
    enumerable = False

    def __init__(self, vocab_size, length):
        self.vocab = Vocabulary(int(vocab_size))
        self.length = int(length)

    @property
    def vocab_size(self):
        return self.vocab.size

    @property
    def mask_id(self):
        return self.vocab.mask_id

    @abstractmethod
    def conditionals(self, tokens, positions):
        """Categorical distributions at ``positions`` given each row of ``tokens``.

        Returns an array of shape ``(n, len(positions), V)``. Must be defined
        for masked and unmasked positions alike.
        """

    @abstractmethod
    def to_dict(self):
        """Versioned, JSON-serialisable description (see :mod:`dlmsearch.model.io`)."""

    # -- reverse kernel ---------------------------------------------------

    def _check_block(self, tokens, positions):
        pos = np.asarray(positions, dtype=np.int64)
        if np.any(tokens[:, pos] != self.mask_id):
            raise ModelError(f"positions {tuple(pos)} are not all masked")
        return pos

    def sample_block(self, tokens, positions, u):
        """Fill ``positions`` of every row using uniforms ``u`` of shape ``(n, k)``."""
        tokens = np.asarray(tokens, dtype=np.int64)
        pos = self._check_block(tokens, positions)
        n, k = tokens.shape[0], pos.size
        cond = self.conditionals(tokens, pos)
        draws = inverse_cdf(cond.reshape(n * k, -1), np.asarray(u).reshape(n * k))
        out = tokens.copy()
        out[:, pos] = draws.reshape(n, k)
        return out

    def sample_transition(self, state, schedule, t, rng):
        """Draw ``x_{t-1} ~ p(. | x_t)``; ``rng`` is a :class:`~dlmsearch.rng.Stream`."""
        if state.step != t:
            raise ModelError(f"state is stamped {state.step}, transition requested at {t}")
        pos = schedule.updatable_positions(t)
        out = self.sample_block(state.array()[None, :], pos, rng.uniforms(len(pos))[None, :])
        return PartialState(out[0], t - 1)

    def transition_distribution(self, state, schedule, t):
        """Full child table as ``(children, probs)``; enumerable models only."""
        if not self.enumerable:
            raise NotEnumerableError(f"{self.kind} model does not expose full child tables")
        if state.step != t:
            raise ModelError(f"state is stamped {state.step}, transition requested at {t}")
        tokens = state.array()[None, :]
        pos = self._check_block(tokens, schedule.updatable_positions(t))
        children, probs = self._children(tokens, pos)
        return [PartialState(c, t - 1) for c in children[0]], probs[0]

    def _children(self, tokens, pos):
        """All ``V^k`` children of each row with their probabilities.

        Returns ``(children (n, V^k, L), probs (n, V^k))``.
        """
        n, k, v = tokens.shape[0], pos.size, self.vocab_size
        cond = self.conditionals(tokens, pos)  # (n, k, V)
        combos = np.array(list(itertools.product(range(v), repeat=k)), dtype=np.int64)  # (C, k)
        probs = np.ones((n, combos.shape[0]))
        for j in range(k):
            probs *= cond[:, j, combos[:, j]]
        children = np.repeat(tokens[:, None, :], combos.shape[0], axis=1)
        children[:, :, pos] = combos[None, :, :]
        return children, probs

    # -- look-ahead -------------------------------------------------------

    def clean_conditionals(self, tokens):
        t = np.asarray(tokens, dtype=np.int64)
        return self.conditionals(t, np.arange(self.length))

    def clean_predict(self, tokens):
        """Argmax completion of every masked position; ties go to the lowest id."""
        tokens = np.atleast_2d(np.asarray(tokens, dtype=np.int64))
        masked = tokens == self.mask_id
        if not masked.any():
            return tokens.copy()
        fill = np.argmax(self.clean_conditionals(tokens), axis=2)
        return np.where(masked, fill, tokens)

    def clean_prediction(self, state):
        return PartialState(self.clean_predict(state.array())[0], 0)

    def top1_confidence(self, tokens):
        """Mean top-1 clean-conditional probability over masked positions, per row.

        Rows without masks get ``nan``.
        """
        tokens = np.atleast_2d(np.asarray(tokens, dtype=np.int64))
        masked = tokens == self.mask_id
        top = self.clean_conditionals(tokens).max(axis=2)
        cnt = masked.sum(axis=1)
        with np.errstate(invalid="ignore"):
            return np.where(cnt > 0, (top * masked).sum(axis=1) / np.maximum(cnt, 1), np.nan)

    # -- likelihood -------------------------------------------------------

    def sequence_nll(self, terminals, schedule):
        """Path NLL ``-log p(x_0)`` along ``schedule``; accepts a state or ``(n, L)`` array."""
        single = isinstance(terminals, PartialState)
        x0 = terminals.array()[None, :] if single else np.atleast_2d(np.asarray(terminals, dtype=np.int64))
        if np.any(x0 == self.mask_id):
            raise ModelError("sequence_nll needs mask-free terminals")
        state = np.full_like(x0, self.mask_id)
        nll = np.zeros(x0.shape[0])
        rows = np.arange(x0.shape[0])[:, None]
        for t in range(schedule.steps, 0, -1):
            pos = np.asarray(schedule.updatable_positions(t))
            cond = self.conditionals(state, pos)
            chosen = cond[rows, np.arange(pos.size)[None, :], x0[:, pos]]
            nll -= np.log(chosen).sum(axis=1)
            state[:, pos] = x0[:, pos]
        return float(nll[0]) if single else nll

    def enumerate_terminal_distribution(self, schedule):
        """Exact ``p_0`` by summing path probabilities over every trajectory."""
        if not self.enumerable:
            raise NotEnumerableError(f"{self.kind} model cannot be enumerated")
        if self.vocab_size ** self.length > MAX_ENUMERATION:
            raise ModelError(f"V^L = {self.vocab_size ** self.length} exceeds {MAX_ENUMERATION}")
        states = np.full((1, self.length), self.mask_id, dtype=np.int64)
        probs = np.ones(1)
        for t in range(schedule.steps, 0, -1):
            pos = np.asarray(schedule.updatable_positions(t))
            children, cp = self._children(states, pos)
            states = children.reshape(-1, self.length)
            probs = (probs[:, None] * cp).reshape(-1)
        order = np.argsort(encode(states, self.vocab_size + 1))
        return TerminalTable(states[order], probs[order], self.vocab_size)
