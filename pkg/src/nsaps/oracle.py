"""Brute-force reference computations.

Everything here uses full dense storage and LAPACK SVD / eigenvalue
drivers directly, so agreement with the banded kernels is independent
evidence rather than a restatement of the same code path.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.spatial.distance import directed_hausdorff

from .errors import BudgetExceededError, InvalidArgumentError

__all__ = [
    "dense_min_sv",
    "dense_column_map",
    "dense_sigma_pair",
    "periodic_spectrum",
    "exhaustive_min_s",
    "hausdorff",
    "q2_bands_from_ring",
]

EXHAUSTIVE_BUDGET = 10 ** 6
_BATCH = 4096


def _hops(params):
    # duck-typed so the oracle does not depend on the operators module
    if hasattr(params, "hop_left"):
        return float(params.hop_left), float(params.hop_right)
    g = float(params)
    return math.exp(-g), math.exp(g)


def dense_min_sv(m) -> float:
    """Smallest singular value of a dense matrix; zero when rows < cols."""
    m = np.atleast_2d(np.asarray(m))
    rows, cols = m.shape
    if rows < 1 or cols < 1:
        raise InvalidArgumentError("matrix needs at least one row and column")
    if rows < cols:
        return 0.0
    return float(np.linalg.svd(m, compute_uv=False)[-1])


def dense_column_map(params, potential, z, left_open=True, right_open=True) -> np.ndarray:
    """``(A - z)`` on window-supported functions as a dense ``rows x n`` array.

    ``(A f)_k = e^{-g} f_{k-1} + V_k f_k + e^g f_{k+1}``; with open ends the
    rows for the two neighbouring sites are included.
    """
    em, ep = _hops(params)
    v = np.asarray(potential)
    n = v.size
    top = 1 if left_open else 0
    rows = n + top + (1 if right_open else 0)
    a = np.zeros((rows, n), dtype=complex)
    for j in range(n):
        r = j + top
        a[r, j] = v[j] - z
        if r - 1 >= 0:
            a[r - 1, j] = ep  # f_j feeds row j-1 through e^g f_{k+1}
        if r + 1 < rows:
            a[r + 1, j] = em
    return a


def dense_sigma_pair(params, potential, z) -> tuple:
    """``(sigma(A), sigma(A*))`` for one potential via dense SVD."""
    em, ep = _hops(params)
    v = np.asarray(potential)
    a = dense_column_map(params, v, z)
    # A* swaps the hopping directions and conjugates the potential
    astar = dense_column_map(_Swapped(em, ep), np.conj(v), np.conj(z))
    return dense_min_sv(a), dense_min_sv(astar)


class _Swapped:
    def __init__(self, em, ep):
        self.hop_left, self.hop_right = ep, em


def periodic_spectrum(word, g, periods: int) -> np.ndarray:
    """Eigenvalues of the period ``n * periods`` ring with the word repeated.

    Corner entries close the chain so that ``f_{N} = f_0``.
    """
    word = np.asarray(list(word), dtype=complex)
    if word.size < 1:
        raise InvalidArgumentError("word must be nonempty")
    if int(periods) < 1:
        raise InvalidArgumentError("periods must be >= 1")
    em, ep = _hops(g)
    nn = word.size * int(periods)
    h = np.diag(np.tile(word, int(periods)))
    idx = np.arange(nn)
    h[idx, (idx + 1) % nn] += ep
    h[idx, (idx - 1) % nn] += em
    return np.linalg.eigvals(h)


def exhaustive_min_s(params, alphabet, window, z, budget: int = EXHAUSTIVE_BUDGET) -> float:
    """Minimum of ``min(sigma(A), sigma(A*))`` over every assignment on the window.

    Note the minimum of the pair is taken per assignment; the minimum of
    each over all assignments coincides with this value.
    """
    alphabet = np.unique(np.asarray(list(alphabet), dtype=complex))
    if alphabet.size < 1:
        raise InvalidArgumentError("alphabet must be nonempty")
    n = window.size if hasattr(window, "size") else int(window)
    total = alphabet.size ** n
    if total > budget:
        raise BudgetExceededError(
            f"{alphabet.size}^{n} = {total} assignments exceed budget {budget}"
        )
    em, ep = _hops(params)
    z = complex(z)
    base_a = dense_column_map(params, np.zeros(n), z)
    base_s = dense_column_map(_Swapped(em, ep), np.zeros(n), np.conj(z))
    diag = np.arange(n)
    best = math.inf
    assignments = itertools.product(range(alphabet.size), repeat=n)
    while True:
        chunk = list(itertools.islice(assignments, _BATCH))
        if not chunk:
            break
        pots = alphabet[np.asarray(chunk)]
        ma = np.broadcast_to(base_a, (len(chunk),) + base_a.shape).copy()
        ms = np.broadcast_to(base_s, (len(chunk),) + base_s.shape).copy()
        ma[:, diag + 1, diag] += pots
        ms[:, diag + 1, diag] += np.conj(pots)
        sa = np.linalg.svd(ma, compute_uv=False)[:, -1]
        ss = np.linalg.svd(ms, compute_uv=False)[:, -1]
        best = min(best, float(np.minimum(sa, ss).min()))
    return best


def hausdorff(a, b) -> float:
    """Symmetric Hausdorff distance between two finite point sets in the plane."""
    def pts(x):
        x = np.asarray(x, dtype=complex).ravel()
        return np.column_stack([x.real, x.imag])

    pa, pb = pts(a), pts(b)
    return float(max(directed_hausdorff(pa, pb)[0], directed_hausdorff(pb, pa)[0]))


def q2_bands_from_ring(a: float, b: float, periods: int = 400) -> list:
    """``S + [b/2 - a, a - b/2]`` with ``S`` read off the alternating ring at g = 0.

    ``S`` is the spectrum of the word ``(-b/2, b/2)``: two bands symmetric
    about zero. Returns merged, sorted ``(lo, hi)`` intervals.
    """
    ev = np.sort(periodic_spectrum((-b / 2, b / 2), 0.0, periods).real)
    pos = ev[ev > 0]
    neg = ev[ev < 0]
    shift = a - b / 2
    bands = sorted([(neg.min() - shift, neg.max() + shift), (pos.min() - shift, pos.max() + shift)])
    merged = [list(bands[0])]
    for lo, hi in bands[1:]:
        if lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [tuple(m) for m in merged]
