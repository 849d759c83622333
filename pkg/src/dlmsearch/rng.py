"""Counter-based random streams.

Randomness is never drawn from shared mutable state. A draw is a pure function
of ``(seed, counter path, draw index)``, hashed with the splitmix64 finaliser,
so any particle's draws can be regenerated without replaying anything else and
results do not depend on evaluation order or worker count.
"""

from dataclasses import dataclass

import numpy as np

from .kernels import GOLDEN, _mix64_np, keyed_uniforms

MASK64 = (1 << 64) - 1


def derive(key, *counters):
    """Fold counters into a key; broadcasts over numpy arrays."""
    h = np.atleast_1d(np.asarray(key, dtype=np.uint64)).copy()
    with np.errstate(over="ignore"):
        for c in counters:
            c = np.asarray(c)
            if c.dtype != np.uint64:
                c = (c.astype(np.int64) & np.int64(0x7FFFFFFFFFFFFFFF)).astype(np.uint64)
            h = _mix64_np(h ^ _mix64_np(c + GOLDEN))
    return h


def seed_key(seed):
    """Root key for a 64-bit integer seed."""
    s = np.uint64(int(seed) & MASK64)
    with np.errstate(over="ignore"):
        return _mix64_np(np.atleast_1d(s) + GOLDEN)


@dataclass(frozen=True)
class Stream:
    """An addressable random substream.

    >>> s = Stream.from_seed(7)
    >>> a = s.child(3, 1).uniforms(4)
    >>> bool((a == Stream.from_seed(7).child(3, 1).uniforms(4)).all())
    True
    """

    key: int

    @classmethod
    def from_seed(cls, seed):
        return cls(int(seed_key(seed)[0]))

    def child(self, *counters):
        return Stream(int(derive(np.uint64(self.key), *counters)[0]))

    def uniforms(self, n):
        return keyed_uniforms(np.array([self.key], dtype=np.uint64), n)[0]

    def uniform(self):
        return float(self.uniforms(1)[0])


# stream tags keep the different consumers of one seed apart
TAG_CHILD = 1
TAG_SSP = 2
TAG_COPY = 3
TAG_SCHEDULE = 4
TAG_MODEL = 5
TAG_ORACLE = 6
