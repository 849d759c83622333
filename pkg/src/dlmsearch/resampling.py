"""Tilt weights, ESS, expected offspring and SSP integer rounding."""

from dataclasses import dataclass

import numpy as np

from .kernels import ssp_batch_kernel, ssp_kernel
from .rng import TAG_COPY, derive

# lambda * score-range above this is treated as the lambda -> infinity limit
ARGMAX_THRESHOLD = 700.0


class ResamplingError(ValueError):
    pass


def tilt_weights(scores, lam):
    """Normalised ``exp(lam * score)`` over the whole frontier.

    Computed with max subtraction. When ``lam * (max - min)`` exceeds 700 the
    limit is taken directly: uniform mass over the arg-max children.
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.size == 0:
        raise ResamplingError("empty frontier")
    if not np.all(np.isfinite(s)):
        raise ResamplingError("scores must be finite")
    if lam < 0:
        raise ResamplingError(f"lambda must be >= 0, got {lam}")
    top = s.max()
    if lam * (top - s.min()) > ARGMAX_THRESHOLD:
        w = (s == top).astype(np.float64)
    else:
        w = np.exp(lam * (s - top))
    return w / w.sum()


def ess(weights):
    """Effective sample size ``1 / sum(w^2)`` of normalised weights."""
    w = np.asarray(weights, dtype=np.float64)
    return float(1.0 / np.dot(w, w))


def expected_offspring(weights, n):
    return n * np.asarray(weights, dtype=np.float64)


def _check_xi(xi):
    xi = np.asarray(xi, dtype=np.float64)
    if xi.ndim != 1 or xi.size == 0:
        raise ResamplingError("expected a non-empty 1-d vector of expected counts")
    if np.any(xi < 0) or not np.all(np.isfinite(xi)):
        raise ResamplingError("expected counts must be finite and non-negative")
    total = xi.sum()
    n = int(round(total))
    if abs(total - n) > 1e-9:
        raise ResamplingError(f"expected counts sum to {total}, not an integer")
    return xi, n


def ssp_round(xi, rng):
    """Dependent rounding of ``xi`` to integers with the same (integer) sum.

    Every count is ``floor`` or ``ceil`` of its ``xi``, ``E[n_i] = xi_i`` and
    ``sum(n) == sum(xi)`` exactly. ``rng`` is a :class:`~dlmsearch.rng.Stream`
    (or an array of ``len(xi)`` uniforms); residuals are paired in index order.
    """
    xi, n = _check_xi(xi)
    u = rng if isinstance(rng, np.ndarray) else rng.uniforms(xi.size)
    counts = ssp_kernel(xi, u)
    if counts.sum() != n:  # pragma: no cover - kernel invariant
        raise ResamplingError("dependent rounding lost mass")
    return counts


def ssp_round_many(xi, u):
    """Round the same ``xi`` independently once per row of uniforms ``u``."""
    xi, _ = _check_xi(xi)
    return ssp_batch_kernel(xi, np.asarray(u, dtype=np.float64))


@dataclass(frozen=True)
class WeightedFrontier:
    scores: np.ndarray
    weights: np.ndarray
    expected_offspring: np.ndarray
    counts: np.ndarray

    @classmethod
    def build(cls, scores, lam, n, rng):
        w = tilt_weights(scores, lam)
        xi = expected_offspring(w, n)
        # renormalise so the rounding sees an exact integer total
        xi = xi * (n / xi.sum())
        return cls(np.asarray(scores, dtype=np.float64), w, xi, ssp_round(xi, rng))

    @property
    def ess(self):
        return ess(self.weights)


def materialize(counts, child_streams):
    """Indices of surviving children (child ``i`` repeated ``counts[i]`` times).

    Returns ``(index, streams)``. Copy ``c`` of child ``i`` gets the stream
    ``derive(child_stream_i, TAG_COPY, c)`` so duplicates diverge afterwards
    while a child's own draws never depend on who else survived.
    """
    counts = np.asarray(counts, dtype=np.int64)
    index = np.repeat(np.arange(counts.size), counts)
    starts = np.repeat(np.cumsum(counts) - counts, counts)
    copy = np.arange(index.size) - starts
    streams = derive(np.asarray(child_streams, dtype=np.uint64)[index], TAG_COPY, copy)
    return index, streams
