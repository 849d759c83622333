"""Domain types shared across the package.

Positions are 0-based throughout. Steps run ``T, T-1, ..., 1``; the transition
at step ``t`` turns a state stamped ``t`` into one stamped ``t - 1``.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
import math

import numpy as np

from .rng import TAG_SCHEDULE, Stream


class ConfigError(ValueError):
    """Raised for invalid run configurations."""


class Policy(str, Enum):
    LEFT_TO_RIGHT = "LeftToRightBlocks"
    RANDOM = "RandomBlocks"


class Mode(str, Enum):
    BASELINE = "Baseline"
    BEST_OF_K = "BestOfK"
    TILTING_ONLY = "TiltingOnly"
    LOOKAHEAD_ONLY = "LookaheadOnly"
    S3 = "S3"


@dataclass(frozen=True)
class Vocabulary:
    """Decodable symbols ``0..size-1``; the mask symbol is ``size``."""

    size: int

    def __post_init__(self):
        if self.size < 2:
            raise ConfigError(f"vocabulary needs at least 2 symbols, got {self.size}")

    @property
    def mask_id(self):
        return self.size

    @property
    def symbols(self):
        return range(self.size)


@dataclass(frozen=True)
class Schedule:
    """Fixed decoding schedule: which block of positions each step reveals.

    ``steps`` is always ``ceil(length / block_length)``; when the block length
    does not divide the length, the last block in left-to-right order is
    short. ``RandomBlocks`` permutes whole blocks using ``seed``.
    """

    length: int
    block_length: int
    policy: Policy = Policy.LEFT_TO_RIGHT
    seed: int = 0

    def __post_init__(self):
        if self.length < 1 or self.block_length < 1:
            raise ConfigError("length and block_length must be positive")
        object.__setattr__(self, "policy", Policy(self.policy))

    @property
    def steps(self):
        return math.ceil(self.length / self.block_length)

    @cached_property
    def _block_order(self):
        nblocks = self.steps
        if self.policy is Policy.LEFT_TO_RIGHT:
            return tuple(range(nblocks))
        u = Stream.from_seed(self.seed).child(TAG_SCHEDULE).uniforms(nblocks)
        return tuple(int(i) for i in np.argsort(u, kind="stable"))

    def updatable_positions(self, t):
        """Positions revealed by the transition at step ``t`` (``1 <= t <= T``)."""
        if not 1 <= t <= self.steps:
            raise ValueError(f"step {t} outside 1..{self.steps}")
        block = self._block_order[self.steps - t]
        lo = block * self.block_length
        return tuple(range(lo, min(lo + self.block_length, self.length)))

    def masked_after(self, t):
        """Positions still masked in a state stamped ``t``."""
        out = []
        for s in range(t, 0, -1):
            out.extend(self.updatable_positions(s))
        return tuple(sorted(out))


@dataclass(frozen=True)
class PartialState:
    tokens: tuple
    step: int

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(int(x) for x in self.tokens))

    def array(self):
        return np.array(self.tokens, dtype=np.int64)

    def masked(self, mask_id):
        return tuple(i for i, x in enumerate(self.tokens) if x == mask_id)

    def is_terminal(self, mask_id):
        return mask_id not in self.tokens


def full_mask(schedule, vocab):
    """The all-mask starting state, stamped with step ``T``."""
    return PartialState((vocab.mask_id,) * schedule.length, schedule.steps)


@dataclass(frozen=True)
class Particle:
    state: PartialState
    lineage: int = -1
    rng_stream: int = 0


@dataclass(frozen=True)
class RunConfig:
    particles: int = 4
    branching: int = 2
    lam: float = 1.0
    tau: float = 1.0
    schedule: Schedule = field(default_factory=lambda: Schedule(length=8, block_length=1))
    seed: int = 0
    mode: Mode = Mode.S3

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.particles < 1 or self.branching < 1:
            raise ConfigError("particles and branching must be >= 1")
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ConfigError(f"lambda must be a finite non-negative real, got {self.lam}")
        if not (self.tau >= 0 and math.isfinite(self.tau)):
            raise ConfigError(f"tau must be a finite non-negative real, got {self.tau}")
        if self.mode is Mode.BASELINE and (self.particles, self.branching) != (1, 1):
            object.__setattr__(self, "particles", 1)
            object.__setattr__(self, "branching", 1)

    @property
    def budget(self):
        """K = N * b, the matched number of trajectories for the flat modes."""
        return self.particles * self.branching

    def with_(self, **changes):
        return replace(self, **changes)
