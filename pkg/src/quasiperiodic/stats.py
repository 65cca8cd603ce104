"""Measurements over emitted bit sequences."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .engine import BitSequence

__all__ = [
    "CorrelationSeries",
    "ZeroVarianceError",
    "empirical_activation",
    "autocorrelation",
    "align_sequences",
    "crosscorrelation",
    "null_band",
    "total_variation",
]


class ZeroVarianceError(ValueError):
    """Correlation requested for a constant sequence."""


@dataclass(frozen=True)
class CorrelationSeries:
    """Correlation ``r`` per lag, with the i.i.d. significance band ``3/sqrt(n)``."""

    lags: np.ndarray
    r: np.ndarray
    n: int

    @property
    def band(self) -> float:
        return null_band(self.n)

    def at(self, lag: int) -> float:
        return float(self.r[np.searchsorted(self.lags, lag)])

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(f"# n={self.n} null_band={self.band:.17g}\n")
        out.write("lag,r\n")
        for k, r in zip(self.lags.tolist(), self.r.tolist()):
            out.write(f"{k},{r:.17g}\n")
        return out.getvalue()


def null_band(n: int) -> float:
    return 3.0 / np.sqrt(n)


def _bits(seq) -> np.ndarray:
    if isinstance(seq, BitSequence):
        seq = seq.bits
    return np.asarray(seq, dtype=float)


def empirical_activation(seq) -> float:
    """Fraction of 1 events."""
    b = _bits(seq)
    if b.size == 0:
        raise ValueError("empty sequence")
    return float(b.mean())


def _centered(b: np.ndarray) -> tuple[np.ndarray, float]:
    c = b - b.mean()
    var = float(c @ c) / c.size
    if var == 0.0:
        raise ZeroVarianceError("sequence is constant; correlation undefined")
    return c, var


def autocorrelation(seq, max_lag: int) -> CorrelationSeries:
    """Biased-normalisation autocorrelation for lags ``0 .. max_lag``.

    ``r(k) = sum_t c[t] c[t+k] / (n * var)`` with ``c`` the mean-centred bits.
    """
    b = _bits(seq)
    n = b.size
    if not 0 <= max_lag < n:
        raise ValueError(f"max_lag must be in [0, {n - 1}]")
    c, var = _centered(b)
    r = np.array([c[: n - k] @ c[k:] for k in range(max_lag + 1)]) / (n * var)
    return CorrelationSeries(np.arange(max_lag + 1), r, n)


def align_sequences(seq_a: BitSequence, seq_b: BitSequence) -> tuple[np.ndarray, np.ndarray]:
    """Pair each event of the shorter sequence with the closest event of the other.

    Returns bit arrays ``(bits_a, bits_b)`` of equal length, in the argument
    orientation.  Distance ties go to the earlier event.  When both
    sequences have the same length, the one with the lexicographically
    smaller time array drives the pairing, so argument order never matters.
    """
    ta, tb = np.asarray(seq_a.times), np.asarray(seq_b.times)
    if ta.size == 0 or tb.size == 0:
        raise ValueError("cannot align empty sequences")
    swap = tb.size < ta.size
    if tb.size == ta.size:
        diff = np.flatnonzero(ta != tb)
        swap = diff.size > 0 and tb[diff[0]] < ta[diff[0]]
    if swap:
        short, long_ = seq_b, seq_a
    else:
        short, long_ = seq_a, seq_b
    ts, tl = np.asarray(short.times), np.asarray(long_.times)
    j = np.searchsorted(tl, ts)
    right = np.minimum(j, tl.size - 1)
    left = np.maximum(j - 1, 0)
    pick_left = np.abs(ts - tl[left]) <= np.abs(tl[right] - ts)
    match = np.where(pick_left, left, right)
    bs = np.asarray(short.bits)
    bl = np.asarray(long_.bits)[match]
    return (bl, bs) if swap else (bs, bl)


def crosscorrelation(seq_a, seq_b, max_lag: int, *, align: bool = True) -> CorrelationSeries:
    """Pearson cross-correlation over lags ``-max_lag .. max_lag``.

    ``r(k)`` correlates ``a[t]`` with ``b[t + k]``.  Timed sequences are first
    paired with :func:`align_sequences`; pass plain arrays with
    ``align=False`` to correlate them index to index.
    """
    if align and isinstance(seq_a, BitSequence):
        a, b = align_sequences(seq_a, seq_b)
    else:
        a, b = _bits(seq_a), _bits(seq_b)
        if a.size != b.size:
            raise ValueError("unaligned sequences must have equal length")
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    n = a.size
    if not 0 <= max_lag < n:
        raise ValueError(f"max_lag must be in [0, {n - 1}]")
    ca, va = _centered(a)
    cb, vb = _centered(b)
    norm = n * np.sqrt(va * vb)
    lags = np.arange(-max_lag, max_lag + 1)
    r = np.empty(lags.size)
    for i, k in enumerate(lags):
        if k >= 0:
            r[i] = ca[: n - k] @ cb[k:]
        else:
            r[i] = ca[-k:] @ cb[: n + k]
    return CorrelationSeries(lags, r / norm, n)


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float)).sum())
