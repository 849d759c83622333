"""Hot numeric kernels.

Every kernel exists twice: a loop written for ``numba.njit`` and a vectorised
numpy version used when ``DLMSEARCH_DISABLE_JIT=1`` (or numba is missing).
Both paths produce bit-identical results; ``tests/test_kernels.py`` checks this
and ``benchmarks/bench_kernels.py`` times them against each other.

The public names at the bottom of the module are bound to one path at import.
"""

import numpy as np

from ._jit import JIT_ENABLED, njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

# fractional residuals closer than this to an integer are snapped
SNAP_EPS = 1e-12


# ---------------------------------------------------------------------------
# splitmix64 finaliser and keyed uniforms
# ---------------------------------------------------------------------------


def _mix64_np(z):
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit
def _mix64_nb(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _uniforms_np(keys, k):
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    ctr = (np.arange(1, k + 1, dtype=np.uint64) * GOLDEN)[None, :]
    with np.errstate(over="ignore"):
        z = _mix64_np(keys[:, None] + ctr)
    return ((z >> _S11).astype(np.float64) + 0.5) * _INV53


@njit
def _uniforms_nb(keys, k):
    n = keys.shape[0]
    out = np.empty((n, k), dtype=np.float64)
    g = np.uint64(0x9E3779B97F4A7C15)
    for r in range(n):
        for c in range(k):
            z = _mix64_nb(keys[r] + np.uint64(c + 1) * g)
            out[r, c] = (np.float64(z >> np.uint64(11)) + 0.5) * (1.0 / 9007199254740992.0)
    return out


# ---------------------------------------------------------------------------
# Srinivasan sampling process (pairwise dependent rounding)
# ---------------------------------------------------------------------------
# Fractional residuals are paired along an index-ascending queue: a single
# "carrier" holds the one unresolved residual, and column i is paired with it
# using the uniform u[i]. With d_up = min(f_i, 1 - f_c) and
# d_dn = min(f_c, 1 - f_i), the carrier moves up by d_up with probability
# d_dn / (d_up + d_dn) and down by d_dn otherwise, which keeps every marginal
# a martingale.


@njit
def _ssp_row_nb(xi, u, out):
    m = xi.shape[0]
    carrier = -1
    fc = 0.0
    for i in range(m):
        b = np.floor(xi[i])
        fi = xi[i] - b
        out[i] = np.int64(b)
        if fi < SNAP_EPS:
            continue
        if fi > 1.0 - SNAP_EPS:
            out[i] += 1
            continue
        if carrier < 0:
            carrier = i
            fc = fi
            continue
        d_up = min(fi, 1.0 - fc)
        d_dn = min(fc, 1.0 - fi)
        if u[i] * (d_up + d_dn) < d_dn:
            if fi <= 1.0 - fc:
                fc = fc + fi
            else:
                out[carrier] += 1
                carrier = i
                fc = fi - (1.0 - fc)
        else:
            if fc <= 1.0 - fi:
                carrier = i
                fc = fi + fc
            else:
                out[i] += 1
                fc = fc - (1.0 - fi)
        if fc < SNAP_EPS:
            carrier = -1
            fc = 0.0
        elif fc > 1.0 - SNAP_EPS:
            out[carrier] += 1
            carrier = -1
            fc = 0.0
    if carrier >= 0 and fc >= 0.5:
        out[carrier] += 1


@njit
def _ssp_nb(xi, u):
    out = np.empty(xi.shape[0], dtype=np.int64)
    _ssp_row_nb(xi, u, out)
    return out


@njit
def _ssp_batch_nb(xi, u):
    r = u.shape[0]
    out = np.empty((r, xi.shape[0]), dtype=np.int64)
    for k in range(r):
        _ssp_row_nb(xi, u[k], out[k])
    return out


def _ssp_batch_rows_np(xi, u):
    """Rounds each row ``xi[r]`` with uniforms ``u[r]``; vectorised over rows."""
    r, m = xi.shape
    base = np.floor(xi)
    frac = xi - base
    out = base.astype(np.int64)
    rows = np.arange(r)
    carrier = np.full(r, -1, dtype=np.int64)
    fc = np.zeros(r)
    for i in range(m):
        fi = frac[:, i]
        up_now = fi > 1.0 - SNAP_EPS
        out[up_now, i] += 1
        live = (fi >= SNAP_EPS) & ~up_now
        start = live & (carrier < 0)
        carrier[start] = i
        fc[start] = fi[start]
        pair = live & ~start
        if not pair.any():
            continue
        p = rows[pair]
        f_i = fi[pair]
        f_c = fc[pair]
        c_idx = carrier[pair]
        d_up = np.minimum(f_i, 1.0 - f_c)
        d_dn = np.minimum(f_c, 1.0 - f_i)
        go_up = u[pair, i] * (d_up + d_dn) < d_dn

        new_fc = np.empty_like(f_c)
        new_c = c_idx.copy()
        # carrier up, column i rounds down
        a = go_up & (f_i <= 1.0 - f_c)
        new_fc[a] = f_c[a] + f_i[a]
        # carrier up and rounds to ceil, column i becomes carrier
        b = go_up & ~(f_i <= 1.0 - f_c)
        out[p[b], c_idx[b]] += 1
        new_c[b] = i
        new_fc[b] = f_i[b] - (1.0 - f_c[b])
        # carrier down to floor, column i becomes carrier
        c = ~go_up & (f_c <= 1.0 - f_i)
        new_c[c] = i
        new_fc[c] = f_i[c] + f_c[c]
        # carrier down, column i rounds up
        d = ~go_up & ~(f_c <= 1.0 - f_i)
        out[p[d], i] += 1
        new_fc[d] = f_c[d] - (1.0 - f_i[d])

        low = new_fc < SNAP_EPS
        high = new_fc > 1.0 - SNAP_EPS
        out[p[high], new_c[high]] += 1
        done = low | high
        new_c[done] = -1
        new_fc[done] = 0.0
        carrier[pair] = new_c
        fc[pair] = new_fc
    tail = (carrier >= 0) & (fc >= 0.5)
    out[rows[tail], carrier[tail]] += 1
    return out


def _ssp_np(xi, u):
    return _ssp_batch_rows_np(xi[None, :], u[None, :])[0]


def _ssp_batch_np(xi, u):
    return _ssp_batch_rows_np(np.broadcast_to(xi, u.shape), u)


# ---------------------------------------------------------------------------
# categorical inverse-CDF draws
# ---------------------------------------------------------------------------


@njit
def _inverse_cdf_nb(probs, u):
    n, v = probs.shape
    out = np.empty(n, dtype=np.int64)
    for r in range(n):
        acc = 0.0
        k = 0
        for c in range(v):
            acc += probs[r, c]
            if acc < u[r]:
                k += 1
        out[r] = min(k, v - 1)
    return out


def _inverse_cdf_np(probs, u):
    cdf = np.cumsum(probs, axis=1)
    k = (cdf < u[:, None]).sum(axis=1)
    return np.minimum(k, probs.shape[1] - 1).astype(np.int64)


# ---------------------------------------------------------------------------
# planted-pattern prefix matching
# ---------------------------------------------------------------------------
# Score = longest matched pattern prefix over all patterns and start offsets,
# divided by the pattern length. hit = lowest pattern id matched in full.


@njit
def _prefix_match_nb(tokens, patterns):
    n, length = tokens.shape
    npat, m = patterns.shape
    score = np.zeros(n, dtype=np.float64)
    hit = np.full(n, -1, dtype=np.int64)
    for r in range(n):
        best = 0
        for p in range(npat):
            for s in range(length):
                j = 0
                while j < m and s + j < length and tokens[r, s + j] == patterns[p, j]:
                    j += 1
                if j > best:
                    best = j
                if j == m and hit[r] < 0:
                    hit[r] = p
        score[r] = best / m
    return score, hit


def _prefix_match_np(tokens, patterns):
    n, length = tokens.shape
    npat, m = patterns.shape
    padded = np.full((n, length + m), -1, dtype=np.int64)
    padded[:, :length] = tokens
    best = np.zeros(n, dtype=np.int64)
    hit = np.full(n, -1, dtype=np.int64)
    for p in range(npat):
        eq = np.stack([padded[:, j : j + length] == patterns[p, j] for j in range(m)], axis=2)
        run = np.cumprod(eq, axis=2).sum(axis=2)  # (n, length)
        best = np.maximum(best, run.max(axis=1))
        full = (run == m).any(axis=1) & (hit < 0)
        hit[full] = p
    return best / m, hit


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

NUMPY_KERNELS = {
    "uniforms": _uniforms_np,
    "ssp": _ssp_np,
    "ssp_batch": _ssp_batch_np,
    "inverse_cdf": _inverse_cdf_np,
    "prefix_match": _prefix_match_np,
}

NUMBA_KERNELS = {
    "uniforms": _uniforms_nb,
    "ssp": _ssp_nb,
    "ssp_batch": _ssp_batch_nb,
    "inverse_cdf": _inverse_cdf_nb,
    "prefix_match": _prefix_match_nb,
}

ACTIVE = NUMBA_KERNELS if JIT_ENABLED else NUMPY_KERNELS


def keyed_uniforms(keys, k):
    """Open-interval uniforms, ``k`` per key: returns shape ``(len(keys), k)``."""
    return ACTIVE["uniforms"](np.ascontiguousarray(keys, dtype=np.uint64), int(k))


def ssp_kernel(xi, u):
    return ACTIVE["ssp"](np.ascontiguousarray(xi, dtype=np.float64), np.ascontiguousarray(u, dtype=np.float64))


def ssp_batch_kernel(xi, u):
    """Round the same ``xi`` once per row of ``u``."""
    return ACTIVE["ssp_batch"](np.ascontiguousarray(xi, dtype=np.float64), np.ascontiguousarray(u, dtype=np.float64))


def inverse_cdf(probs, u):
    return ACTIVE["inverse_cdf"](np.ascontiguousarray(probs, dtype=np.float64), np.ascontiguousarray(u, dtype=np.float64))


def prefix_match(tokens, patterns):
    return ACTIVE["prefix_match"](np.ascontiguousarray(tokens, dtype=np.int64), np.ascontiguousarray(patterns, dtype=np.int64))
