"""Entropy kernels: q-logarithm, BGS and Tsallis entropies over histograms.

The deformed logarithm used throughout is

    ln_q(x) = (x**(1 - q) - 1) / (1 - q),        ln_1(x) = ln(x),

the convention under which the product rule

    ln_q(x1 * x2) = ln_q(x1) + ln_q(x2) + (1 - q) * ln_q(x1) * ln_q(x2)

holds, and the entropy S_q(p) = sum_x p(x) * ln_q(1/p(x)) of a product
distribution composes as S_q(AB) = S_q(A) + S_q(B) + (1-q) * S_q(A) * S_q(B).

All functions here are pure and hold no state; they are safe to call from
any number of concurrent workers.
"""

from __future__ import annotations

import math

import numpy as np

#: Number of intensity bins in an 8-bit channel histogram.
BINS = 256

#: Below this distance from q = 1 the q-logarithm falls back to the natural
#: logarithm. Outside the window the generalized formula is evaluated through
#: expm1, which keeps precision right up to the switch.
Q_NEAR_ONE = 1e-8

#: Probability vectors must sum to 1 within this tolerance.
PROB_SUM_TOL = 1e-9


def _check_q(q) -> float:
    q = float(q)
    if not math.isfinite(q):
        raise ValueError(f"entropic index q must be finite, got {q!r}")
    return q


def _check_probs(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError(f"probability vector must be 1-D, got shape {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < 0.0):
        raise ValueError("probability vector has negative or non-finite entries")
    total = p.sum()
    if abs(total - 1.0) > PROB_SUM_TOL:
        raise ValueError(f"probability vector sums to {total!r}, expected 1")
    return p


def q_log(x, q):
    """Deformed logarithm ln_q(x) = (x**(1-q) - 1) / (1 - q).

    Parameters
    ----------
    x : positive float or array of positive floats
    q : float
        Entropic index; any finite real. Values with |q - 1| < 1e-8 use
        the natural-logarithm limit.

    Returns
    -------
    float or np.ndarray
        ln_q of the input, matching its shape.
    """
    q = _check_q(q)
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError(f"q_log argument x must be positive and finite, got {x!r}")
    if abs(q - 1.0) < Q_NEAR_ONE:
        out = np.log(arr)
    else:
        out = np.expm1((1.0 - q) * np.log(arr)) / (1.0 - q)
    return float(out) if arr.ndim == 0 else out


def normalize(counts) -> np.ndarray:
    """Turn a histogram of non-negative counts into a probability vector.

    Raises ValueError for negative entries or an empty histogram
    (total count zero).
    """
    arr = np.asarray(counts, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"histogram must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
        raise ValueError("histogram has negative or non-finite counts")
    total = arr.sum()
    if total <= 0.0:
        raise ValueError("cannot normalize an empty histogram (total count is zero)")
    return arr / total


def bgs_entropy(probs) -> float:
    """Standard entropy -sum p ln p of a probability vector (natural log).

    Zero-probability bins contribute exactly 0.
    """
    p = _check_probs(probs)
    p = p[p > 0.0]
    return float(-(p * np.log(p)).sum())


def tsallis_entropy(probs, q) -> float:
    """Tsallis entropy S_q = sum_x p(x) ln_q(1/p(x)) of a probability vector.

    Zero-probability bins are skipped (their term is defined as 0; the skip
    matters only at q <= 0, where the naive p**q term would not vanish).
    Reduces to :func:`bgs_entropy` for |q - 1| < 1e-8 and is non-negative
    for q >= 0.
    """
    q = _check_q(q)
    p = _check_probs(probs)
    p = p[p > 0.0]
    if abs(q - 1.0) < Q_NEAR_ONE:
        return float(-(p * np.log(p)).sum())
    return float((p * np.expm1((q - 1.0) * np.log(p))).sum() / (1.0 - q))


def tsallis_profile(probs, qs) -> np.ndarray:
    """Tsallis entropies of one distribution at several entropic indices.

    Equivalent to ``[tsallis_entropy(probs, q) for q in qs]`` evaluated in
    a single vectorized pass; used by the feature extractor.
    """
    p = _check_probs(probs)
    p = p[p > 0.0]
    qs_arr = np.asarray([_check_q(q) for q in np.atleast_1d(qs)], dtype=np.float64)
    logs = np.log(p)
    out = np.empty(qs_arr.shape, dtype=np.float64)
    near = np.abs(qs_arr - 1.0) < Q_NEAR_ONE
    if near.any():
        out[near] = -(p * logs).sum()
    if (~near).any():
        qm = qs_arr[~near]
        terms = p[None, :] * np.expm1((qm[:, None] - 1.0) * logs[None, :])
        out[~near] = terms.sum(axis=1) / (1.0 - qm)
    return out


def compose_entropies(s_a, s_b, q) -> float:
    """Entropy of two independent parts: s_a + s_b + (1-q) * s_a * s_b.

    Symmetric in its first two arguments; reduces to plain addition at q = 1,
    and zero entropy is the neutral element for every q.
    """
    q = _check_q(q)
    s_a = float(s_a)
    s_b = float(s_b)
    # product grouped first so the result is exactly symmetric in (s_a, s_b)
    return s_a + s_b + (1.0 - q) * (s_a * s_b)
