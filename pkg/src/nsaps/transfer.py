"""Transfer matrices for periodic words and the regions they induce.

A solution of ``e^-g f_{m-1} + W_m f_m + e^g f_{m+1} = lam f_m`` is carried
by the row vector ``w_m = (f_{m-1}, f_m)`` through ``w_{m+1} = w_m A_m``.
Over one period of a word the product ``B = A_0 ... A_{n-1}`` has
determinant ``e^{-2ng}``, and the location of ``trace(B)`` relative to the
ellipse ``{e^{it} + e^{-2ng-it}}`` decides whether both multipliers decay
(interior), one has modulus one (boundary) or one grows (exterior).
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np

from .analysis import variance_report
from .errors import InvalidArgumentError, NumericalFailure, RegionMismatchError, WindowTooSmallError
from .linalg import Polynomial, interpolate_polynomial, polynomial_roots
from .operators import Splice, Window, as_params, build_truncation, sample_potential

__all__ = [
    "TransferMatrix",
    "EllipseEn",
    "RegionLabel",
    "DecayingSolution",
    "transfer_step",
    "transfer_product",
    "trace_polynomial",
    "multiplier_radius",
    "classify_point",
    "e_alpha_curve",
    "write_curve_csv",
    "construct_decaying_solution",
]

DEFAULT_EPS = 1e-9
CURVE_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class TransferMatrix:
    entries: np.ndarray
    word_length: int
    g: float

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.entries))

    @property
    def trace(self) -> complex:
        return complex(self.entries[0, 0] + self.entries[1, 1])

    def multipliers(self) -> np.ndarray:
        return np.linalg.eigvals(self.entries)

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        return TransferMatrix(self.entries @ other.entries,
                              self.word_length + other.word_length, self.g)


@dataclass(frozen=True)
class EllipseEn:
    """The ellipse ``{e^{it} + r e^{-it}}`` with ``r = e^{-2ng}``."""

    r: float

    @classmethod
    def for_word(cls, g, n: int) -> "EllipseEn":
        p = as_params(g)
        return cls(p.hop_left ** (2 * n))

    @property
    def semi_major(self):
        return 1.0 + self.r

    @property
    def semi_minor(self):
        return 1.0 - self.r

    def point(self, theta):
        theta = np.asarray(theta)
        return np.exp(1j * theta) + self.r * np.exp(-1j * theta)

    def contains_interior(self, w: complex) -> bool:
        if self.r >= 1.0:
            return False
        return (w.real / self.semi_major) ** 2 + (w.imag / self.semi_minor) ** 2 < 1.0


class RegionLabel(enum.Enum):
    INTERIOR = "Interior"
    BOUNDARY = "Boundary"
    EXTERIOR = "Exterior"

    def __str__(self):
        return self.value


def _hops(g):
    p = as_params(g)
    return p.hop_left, p.hop_left ** 2


def transfer_step(lam: complex, alpha_m: complex, g) -> TransferMatrix:
    em, em2 = _hops(g)
    a = np.array([[0.0, -em2], [1.0, em * (lam - alpha_m)]], dtype=complex)
    return TransferMatrix(a, 1, as_params(g).g)


def transfer_product(lam: complex, word, g) -> TransferMatrix:
    word = list(word)
    if not word:
        raise InvalidArgumentError("word must be nonempty")
    em, em2 = _hops(g)
    b = np.eye(2, dtype=complex)
    for alpha in word:
        b = b @ np.array([[0.0, -em2], [1.0, em * (lam - alpha)]], dtype=complex)
    return TransferMatrix(b, len(word), as_params(g).g)


def _trace_at(lam: complex, word, em, em2) -> complex:
    # rows of the running product, unrolled for the hot paths
    b11, b12, b21, b22 = 1.0 + 0j, 0j, 0j, 1.0 + 0j
    for alpha in word:
        d = em * (lam - alpha)
        b11, b12 = b12, -em2 * b11 + d * b12
        b21, b22 = b22, -em2 * b21 + d * b22
    return b11 + b22


def trace_polynomial(word, g) -> Polynomial:
    """``b11 + b22`` of the transfer matrix as a degree-n polynomial in ``lam``."""
    word = list(word)
    n = len(word)
    if n < 1:
        raise InvalidArgumentError("word must be nonempty")
    p = as_params(g)
    radius = 1.0 + max(abs(complex(a)) for a in word) + p.cosh_sum
    nodes = radius * np.exp(2j * np.pi * np.arange(n + 1) / (n + 1))
    em, em2 = _hops(p)
    values = [_trace_at(z, word, em, em2) for z in nodes]
    poly = interpolate_polynomial(nodes, values)
    coef = np.asarray(poly.coef).copy()
    # the leading coefficient is exactly e^{-ng}
    coef[-1] = em ** n
    return Polynomial(coef)


def multiplier_radius(trace: complex, r: float) -> float:
    """Larger modulus among the roots of ``mu^2 - trace*mu + r``.

    Level sets of this quantity are the ellipses confocal with ``E^n``; the
    value 1 is ``E^n`` itself.
    """
    t = complex(trace)
    s = np.sqrt(t * t - 4.0 * r + 0j)
    big = t + s if abs(t + s) >= abs(t - s) else t - s
    return abs(big) / 2.0


def classify_point(lam: complex, word, g, eps: float = DEFAULT_EPS) -> RegionLabel:
    """Interior / Boundary / Exterior label of ``lam`` for a periodic word.

    The margin is measured by the larger transfer multiplier modulus
    ``rho``: Interior when ``rho < 1 - eps``, Exterior when ``rho > 1 + eps``.
    At ``g = 0`` no point is Interior (the ellipse has no interior).
    """
    word = list(word)
    p = as_params(g)
    em, em2 = _hops(p)
    r = em2 ** len(word)
    rho = multiplier_radius(_trace_at(complex(lam), word, em, em2), r)
    if rho < 1.0 - eps:
        return RegionLabel.INTERIOR
    if rho > 1.0 + eps:
        return RegionLabel.EXTERIOR
    return RegionLabel.BOUNDARY


def e_alpha_curve(word, g, theta_grid) -> np.ndarray:
    """Roots of ``trace(lam) = e^{i theta} + e^{-2ng - i theta}`` per theta.

    Returns an array of shape ``(len(theta_grid), n)``.
    """
    word = list(word)
    n = len(word)
    p = as_params(g)
    poly = trace_polynomial(word, p)
    ell = EllipseEn.for_word(p, n)
    coef = np.asarray(poly.coef, dtype=complex)
    scale = np.abs(coef).max()
    thetas = np.asarray(theta_grid, dtype=float)
    out = np.empty((thetas.size, n), dtype=complex)
    for k, theta in enumerate(thetas):
        target = complex(ell.point(theta))
        shifted = coef.copy()
        shifted[0] -= target
        q = Polynomial(shifted)
        roots = polynomial_roots(q)
        resid = np.abs(q(roots)).max()
        if resid > CURVE_RESIDUAL_TOL * max(scale, abs(target)):
            raise NumericalFailure(
                f"root residual {resid:.3e} too large", theta=float(theta), word=word, g=p.g
            )
        out[k] = np.sort_complex(roots)
    return out


def write_curve_csv(path_or_file, thetas, curve) -> None:
    """Rows ``theta, root_index, re_lambda, im_lambda``."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta", "root_index", "re_lambda", "im_lambda"])
        for theta, roots in zip(thetas, curve):
            for idx, lam in enumerate(roots):
                w.writerow([repr(float(theta)), idx, repr(float(lam.real)), repr(float(lam.imag))])
    finally:
        if own:
            fh.close()


@dataclass(frozen=True)
class DecayingSolution:
    lam: complex
    window: Window
    values: np.ndarray
    left_rate: float
    right_rate: float
    residual: float
    variance: float
    argmin_sites: tuple
    tail_mass: float


def _envelope_rate(sites, mags, block):
    """Per-site growth factor of the block-maximum envelope of ``mags``."""
    nb = sites.size // block
    if nb < 2:
        return float("nan")
    s = sites[:nb * block].reshape(nb, block)
    m = mags[:nb * block].reshape(nb, block)
    peak = m.max(axis=1)
    ok = peak > 0
    if ok.sum() < 2:
        return float("nan")
    x = s.mean(axis=1)[ok]
    y = np.log(peak[ok])
    slope = np.polyfit(x, y, 1)[0]
    return float(np.exp(slope))


def construct_decaying_solution(lam: complex, alpha, beta, g, window: Window,
                                tail_tol: float = 1e-8) -> DecayingSolution:
    """Eigenvector of the operator with ``beta`` below site 0 and ``alpha`` from 0 on.

    Needs ``lam`` in the interior region of ``alpha`` and the exterior of
    ``beta``. The solution is started on the growing multiplier of the
    ``beta`` transfer matrix, which makes it decay towards minus infinity,
    and is continued forward; on the ``alpha`` side every solution decays.
    """
    alpha, beta = list(alpha), list(beta)
    p = as_params(g)
    lam = complex(lam)
    la = classify_point(lam, alpha, p)
    lb = classify_point(lam, beta, p)
    if la is not RegionLabel.INTERIOR or lb is not RegionLabel.EXTERIOR:
        raise RegionMismatchError(
            f"need lam interior for alpha and exterior for beta, got {la} and {lb}"
        )
    if not (window.lo < 0 <= window.hi):
        raise InvalidArgumentError("window must straddle the splice at site 0")

    bb = transfer_product(lam, beta, p).entries
    mults, vecs = np.linalg.eig(bb.T)
    k = int(np.argmax(np.abs(mults)))
    w = vecs[:, k]  # row vector with w B = mu w, |mu| > 1

    nb = len(beta)
    periods = -(-(1 - window.lo) // nb)
    start = -nb * periods  # w holds (f_{start-1}, f_start)
    em, em2 = _hops(p)
    a_arr = np.asarray(alpha, dtype=complex)
    b_arr = np.asarray(beta, dtype=complex)
    total = window.hi - start + 1
    f = np.empty(total + 1, dtype=complex)
    f[0], f[1] = w[0], w[1]
    for idx in range(1, total):
        m = start + idx - 1
        pot = a_arr[m % a_arr.size] if m >= 0 else b_arr[m % b_arr.size]
        f[idx + 1] = em * (lam - pot) * f[idx] - em2 * f[idx - 1]
        if abs(f[idx + 1]) > 1e100:
            f[:idx + 2] *= 1e-100
    # f[1] is site `start`
    values = f[1 + (window.lo - start): 1 + (window.hi - start) + 1].copy()
    values /= np.linalg.norm(values)

    edge = max(len(alpha), len(beta))
    tail = float(np.sum(np.abs(values[:edge]) ** 2) + np.sum(np.abs(values[-edge:]) ** 2))
    if tail > tail_tol:
        raise WindowTooSmallError(
            f"tail mass {tail:.3e} exceeds {tail_tol:.1e}; enlarge window {window}"
        )

    pot = sample_potential(Splice(tuple(alpha), tuple(beta), 0), window, None)
    op = build_truncation(p, pot, window)
    cm = op.column_map(lam)
    residual = float(np.linalg.norm(cm.matvec(values)))

    sites = window.sites
    mags = np.abs(values)
    third = max(window.size // 3, 2)
    block = 2 * edge
    right_rate = _envelope_rate(sites[-third:], mags[-third:], block)
    left_growth = _envelope_rate(sites[:third], mags[:third], block)
    left_rate = 1.0 / left_growth if left_growth > 0 else float("nan")
    report = variance_report(values, window)
    return DecayingSolution(lam, window, values, left_rate, right_rate, residual,
                            report.variance, report.argmin_sites, tail)
