"""Dependence metrics over symbol streams: mutual information at a
distance, its decay curve with a power-law fit, pointwise MI, repeat
(match) structure, and per-user attribute correlations.

All estimates are plug-in (empirical counts, no bias correction).  The
per-cell MI terms are accumulated with math.fsum over Python floats so
results are exactly reproducible regardless of iteration order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import DataError


def _pair_counts(
    stream: np.ndarray, d: int, separator_id: Optional[int]
) -> tuple[dict[tuple[int, int], int], dict[int, int], dict[int, int], int]:
    """Joint and marginal counts over (s_i, s_{i+d}) pairs.

    Marginals are taken from the paired positions only, so the three
    entropy forms of the MI identity share one empirical table.  A pair
    is dropped when the separator appears anywhere in its window
    [i, i+d], not just at the endpoints, so no pair straddles a stream
    boundary.
    """
    left = stream[:-d]
    right = stream[d:]
    if separator_id is not None:
        hits = np.concatenate(
            ([0], np.cumsum(stream == separator_id, dtype=np.int64))
        )
        keep = (hits[d + 1 :] - hits[: -d - 1]) == 0
        left = left[keep]
        right = right[keep]
    n_pairs = int(left.shape[0])
    if n_pairs < 2:
        raise DataError(f"fewer than 2 pairs at distance {d}")
    span = int(max(left.max(), right.max())) + 1
    codes = left.astype(np.int64) * span + right.astype(np.int64)
    uniq, counts = np.unique(codes, return_counts=True)
    joint = {
        (int(c) // span, int(c) % span): int(k)
        for c, k in zip(uniq.tolist(), counts.tolist())
    }
    lu, lc = np.unique(left, return_counts=True)
    ru, rc = np.unique(right, return_counts=True)
    left_marg = {int(x): int(k) for x, k in zip(lu.tolist(), lc.tolist())}
    right_marg = {int(x): int(k) for x, k in zip(ru.tolist(), rc.tolist())}
    return joint, left_marg, right_marg, n_pairs


def mutual_information_at_distance(
    seq: Sequence[int], d: int, separator_id: Optional[int] = None
) -> float:
    """Plug-in I(s_i; s_{i+d}) in bits over all position pairs at lag d."""
    if d < 1:
        raise ValueError(f"distance must be >= 1, got {d}")
    stream = np.asarray(seq, dtype=np.int64)
    if stream.shape[0] <= d:
        raise DataError(
            f"sequence of length {stream.shape[0]} has no pairs at distance {d}"
        )
    joint, left_marg, right_marg, n = _pair_counts(stream, d, separator_id)
    terms = []
    for (x, y), c_xy in joint.items():
        p_xy = c_xy / n
        p_x = left_marg[x] / n
        p_y = right_marg[y] / n
        terms.append(p_xy * math.log2(p_xy / (p_x * p_y)))
    return math.fsum(terms)


def pmi_from_counts(n_pairs: int, c_a: int, c_b: int, c_ab: int) -> float:
    """log2(N * C(a,b) / (C(a) * C(b))); -inf when the pair never occurs."""
    if c_a <= 0 or c_b <= 0:
        raise DataError("PMI undefined: a or b never occurs at paired positions")
    if c_ab == 0:
        return float("-inf")
    return math.log2((n_pairs * c_ab) / (c_a * c_b))


def pmi(
    seq: Sequence[int],
    a: int,
    b: int,
    d: int,
    separator_id: Optional[int] = None,
) -> float:
    """Pointwise MI of seeing poi b exactly d steps after poi a.

    Returns -inf ("never co-occurs") when the pair count is zero; raises
    when a or b itself never occurs at the paired positions.
    """
    if d < 1:
        raise ValueError(f"distance must be >= 1, got {d}")
    stream = np.asarray(seq, dtype=np.int64)
    if stream.shape[0] <= d:
        raise DataError(
            f"sequence of length {stream.shape[0]} has no pairs at distance {d}"
        )
    joint, left_marg, right_marg, n = _pair_counts(stream, d, separator_id)
    c_a = left_marg.get(int(a), 0)
    c_b = right_marg.get(int(b), 0)
    if c_a == 0 or c_b == 0:
        raise DataError(
            f"poi {a if c_a == 0 else b} never occurs at the paired positions"
        )
    return pmi_from_counts(n, c_a, c_b, joint.get((int(a), int(b)), 0))


def fit_power_law(
    distances: Sequence[int], values: Sequence[float]
) -> tuple[float, float]:
    """Least-squares slope of log(I) on log(d); returns (alpha, rmse).

    alpha is the decay exponent (negated slope).  Caller filters the
    points; at least two are required.
    """
    ds = np.asarray(distances, dtype=np.float64)
    vs = np.asarray(values, dtype=np.float64)
    if ds.shape[0] < 2:
        raise ValueError("power-law fit needs at least 2 points")
    if np.any(vs <= 0.0) or np.any(ds <= 0.0):
        raise ValueError("power-law fit needs positive distances and values")
    x = np.log(ds)
    y = np.log(vs)
    coeffs = np.polyfit(x, y, 1)
    fitted = np.polyval(coeffs, x)
    rmse = float(np.sqrt(np.mean((y - fitted) ** 2)))
    return float(-coeffs[0]), rmse


@dataclass(frozen=True)
class MiDecay:
    """I(d) for d = 1..d_max plus the fitted exponent and LDD depth.

    alpha is None when no point clears eps_fit ("no measurable
    dependence"); ldd_depth is None when no point clears eps_depth.
    """

    curve: tuple[tuple[int, float], ...]
    alpha: Optional[float]
    fit_rmse: Optional[float]
    ldd_depth: Optional[int]
    eps_fit: float
    eps_depth: float


def mi_decay_curve(
    seq: Sequence[int],
    d_max: int,
    eps_fit: float = 1e-3,
    eps_depth: float = 0.1,
    separator_id: Optional[int] = None,
) -> MiDecay:
    stream = np.asarray(seq, dtype=np.int64)
    n = stream.shape[0]
    if d_max < 1:
        raise ValueError(f"d_max must be >= 1, got {d_max}")
    if d_max * 10 >= n:
        raise ValueError(
            f"d_max {d_max} too large for length {n}: need d_max < n/10 "
            "for enough pairs per distance"
        )
    curve = [
        (d, mutual_information_at_distance(stream, d, separator_id))
        for d in range(1, d_max + 1)
    ]
    fit_pts = [(d, i) for d, i in curve if i > eps_fit]
    alpha = rmse = None
    if len(fit_pts) >= 2:
        alpha, rmse = fit_power_law([d for d, _ in fit_pts],
                                    [i for _, i in fit_pts])
    elif fit_pts:
        warnings.warn(
            "only one MI point above eps_fit; exponent left undefined",
            stacklevel=2,
        )
    depths = [d for d, i in curve if i >= eps_depth]
    return MiDecay(
        curve=tuple(curve),
        alpha=alpha,
        fit_rmse=rmse,
        ldd_depth=max(depths) if depths else None,
        eps_fit=eps_fit,
        eps_depth=eps_depth,
    )


def match_structure(
    seq: Sequence[int],
    match_lengths: Sequence[int] = (1, 2, 4, 8),
    separator_id: Optional[int] = None,
) -> list[tuple[int, int, int]]:
    """(position, L, delta) for every position whose length-L gram repeats.

    delta is the smallest positive back-shift with seq[i:i+L] ==
    seq[i-delta:i-delta+L]; overlapping matches count.  Positions with no
    earlier occurrence are omitted.  Grams containing the separator are
    skipped on both sides.
    """
    stream = [int(x) for x in seq]
    n = len(stream)
    out: list[tuple[int, int, int]] = []
    for L in match_lengths:
        if L < 1:
            raise ValueError(f"match length must be >= 1, got {L}")
        last: dict[tuple[int, ...], int] = {}
        sep_count = 0
        if separator_id is not None:
            sep_count = sum(1 for x in stream[: L - 1] if x == separator_id)
        for i in range(n - L + 1):
            if separator_id is not None:
                if i > 0:
                    sep_count -= stream[i - 1] == separator_id
                sep_count += stream[i + L - 1] == separator_id
                if sep_count:
                    continue
            gram = tuple(stream[i : i + L])
            if gram in last:
                out.append((i, L, i - last[gram]))
            last[gram] = i
    out.sort()
    return out


def attribute_correlations(
    names: Sequence[str], vectors: np.ndarray
) -> tuple[list[str], np.ndarray]:
    """Pearson correlation matrix across per-user attribute vectors.

    vectors has one row per attribute, one column per user.  Attributes
    with zero variance are dropped with a warning; fewer than 3 users is
    an error.  The result is symmetric with unit diagonal, clipped to
    [-1, 1] against float overshoot.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] != len(names):
        raise ValueError("vectors must be (n_attributes, n_users)")
    if vectors.shape[1] < 3:
        raise DataError(
            f"correlations need >= 3 users, got {vectors.shape[1]}"
        )
    keep = []
    for i, name in enumerate(names):
        if np.ptp(vectors[i]) == 0.0:
            warnings.warn(f"attribute {name!r} has no variance; dropped",
                          stacklevel=2)
        else:
            keep.append(i)
    if not keep:
        raise DataError("no attribute has variance")
    kept_names = [names[i] for i in keep]
    corr = np.atleast_2d(np.corrcoef(vectors[keep]))
    corr = np.clip(corr, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return kept_names, corr
