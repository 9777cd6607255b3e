"""Closed-form spectral regions, zero-in-spectrum predicates and localization reports.

Throughout, ``E`` is the free spectrum: the ellipse with semi-axes
``e^g + e^-g`` (real) and ``e^g - e^-g`` (imaginary).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, InvalidArgumentError
from .operators import as_params

__all__ = [
    "SpectralRegion",
    "EllipsePlusInterval",
    "ConvexHullSum",
    "BallUnion",
    "EllipseTube",
    "IntervalUnion",
    "CurveFamily",
    "NOT_DETERMINED",
    "region_from_json",
    "ellipse_distance",
    "inclusion_bounds",
    "ball_bounds",
    "conjectured_spectrum",
    "zero_in_spectrum_interval",
    "zero_in_spectrum_twopoint",
    "spectrum_zn",
    "resolvent_at_zero",
    "q2_selfadjoint_spectrum",
    "q2_inner_curve",
    "LocalizationReport",
    "variance_report",
]

TOL = 1e-12


def _axes(g):
    p = as_params(g)
    return p.cosh_sum, p.sinh_diff


def _half_width(a, b, y):
    """Half-width of the filled ellipse x^2/a^2 + y^2/b^2 <= 1 at height y (nan above it)."""
    y = abs(y)
    if b == 0.0:
        return a if y == 0.0 else float("nan")
    if y > b:
        return float("nan")
    return a * math.sqrt(max(0.0, 1.0 - (y / b) ** 2))


def ellipse_distance(a: float, b: float, x: float, y: float) -> float:
    """Distance from ``(x, y)`` to the boundary curve ``x^2/a^2 + y^2/b^2 = 1``.

    Robust bisection on the foot-point equation (Eberly); ``b`` may be zero,
    in which case the curve is the segment ``[-a, a]``.
    """
    x, y = abs(x), abs(y)
    if b == 0.0:
        return math.hypot(max(x - a, 0.0), y)
    if a < b:
        a, b, x, y = b, a, y, x
    if y > 0:
        if x > 0:
            z0, z1 = x / a, y / b
            g = z0 * z0 + z1 * z1 - 1.0
            if g == 0.0:
                return 0.0
            r0 = (a / b) ** 2
            n0 = r0 * z0
            s0 = z1 - 1.0
            s1 = 0.0 if g < 0 else math.hypot(n0, z1) - 1.0
            s = 0.0
            for _ in range(200):
                s = 0.5 * (s0 + s1)
                if s == s0 or s == s1:
                    break
                ratio0 = n0 / (s + r0)
                ratio1 = z1 / (s + 1.0)
                gs = ratio0 * ratio0 + ratio1 * ratio1 - 1.0
                if gs > 0:
                    s0 = s
                elif gs < 0:
                    s1 = s
                else:
                    break
            px = r0 * x / (s + r0)
            py = y / (s + 1.0)
            return math.hypot(x - px, y - py)
        return abs(y - b)
    numer = a * x
    denom = a * a - b * b
    if numer < denom:
        xde = numer / denom
        px = a * xde
        py = b * math.sqrt(max(0.0, 1.0 - xde * xde))
        return math.hypot(x - px, py)
    return abs(x - a)


class SpectralRegion:
    """Common surface: ``contains``, ``distance`` and a JSON descriptor."""

    kind = "region"
    label = None

    def contains(self, z: complex, tol: float = TOL) -> bool:
        return self.distance(z) <= tol

    def distance(self, z: complex) -> float:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ConvexHullSum(SpectralRegion):
    """Filled ellipse ``Conv(E)`` plus the real interval ``[lo, hi]``."""

    g: float
    lo: float
    hi: float
    eg: float = None
    label: str = None
    kind = "convex_hull_sum"

    def __post_init__(self):
        if self.eg is None:
            object.__setattr__(self, "eg", math.exp(self.g))

    @property
    def axes(self):
        return self.eg + 1 / self.eg, self.eg - 1 / self.eg

    def contains(self, z, tol=TOL):
        a, b = self.axes
        z = complex(z)
        w = _half_width(a, b, z.imag)
        if not math.isnan(w) and self.lo - w - tol <= z.real <= self.hi + w + tol:
            return True
        return self.distance(z) <= tol

    def distance(self, z):
        a, b = self.axes
        z = complex(z)
        w = _half_width(a, b, z.imag)
        if not math.isnan(w) and self.lo - w <= z.real <= self.hi + w:
            return 0.0
        if self.lo <= z.real <= self.hi:
            return abs(z.imag) - b
        shift = self.hi if z.real > self.hi else self.lo
        return ellipse_distance(a, b, z.real - shift, z.imag)

    def to_json(self):
        return {"variant": "ConvexHullSum", "g": self.g, "eg": self.eg,
                "interval": [self.lo, self.hi], "label": self.label}


@dataclass(frozen=True)
class EllipsePlusInterval(SpectralRegion):
    """The curve ``E`` swept along the real interval ``[lo, hi]``."""

    g: float
    lo: float
    hi: float
    eg: float = None
    kind = "ellipse_plus_interval"

    def __post_init__(self):
        if self.eg is None:
            object.__setattr__(self, "eg", math.exp(self.g))

    @property
    def axes(self):
        return self.eg + 1 / self.eg, self.eg - 1 / self.eg

    def contains(self, z, tol=TOL):
        a, b = self.axes
        z = complex(z)
        w = _half_width(a, b, z.imag)
        if not math.isnan(w):
            for centre in (w, -w):
                if self.lo - tol <= z.real - centre <= self.hi + tol:
                    return True
        return self.distance(z) <= tol

    def _segment_distance(self, theta, z):
        a, b = self.axes
        x = z.real - a * math.cos(theta)
        y = z.imag - b * math.sin(theta)
        dx = self.lo - x if x < self.lo else (x - self.hi if x > self.hi else 0.0)
        return math.hypot(dx, y)

    def distance(self, z):
        z = complex(z)
        a, b = self.axes
        w = _half_width(a, b, z.imag)
        if not math.isnan(w) and any(self.lo <= z.real - c <= self.hi for c in (w, -w)):
            return 0.0
        # dense scan brackets the global minimum, bounded Brent polishes it
        thetas = np.linspace(-math.pi, math.pi, 2049)
        vals = np.array([self._segment_distance(t, z) for t in thetas])
        best = float(vals.min())
        step = thetas[1] - thetas[0]
        for k in np.argsort(vals)[:4]:
            lo_t, hi_t = thetas[k] - step, thetas[k] + step
            res = minimize_scalar(self._segment_distance, bounds=(lo_t, hi_t), args=(z,),
                                  method="bounded", options={"xatol": 1e-13})
            best = min(best, float(res.fun))
        return best

    def to_json(self):
        return {"variant": "EllipsePlusInterval", "g": self.g, "eg": self.eg,
                "interval": [self.lo, self.hi]}


@dataclass(frozen=True)
class BallUnion(SpectralRegion):
    """Closed ``radius``-neighbourhood of a finite set of points and real segments."""

    centers: tuple
    radius: float
    segments: tuple = ()
    kind = "ball_union"

    def distance(self, z):
        z = complex(z)
        d = math.inf
        for c in self.centers:
            d = min(d, abs(z - complex(c)))
        for lo, hi in self.segments:
            x = min(max(z.real, lo), hi)
            d = min(d, abs(z - x))
        return max(d - self.radius, 0.0)

    def to_json(self):
        return {"variant": "BallUnion", "centers": [[complex(c).real, complex(c).imag]
                                                    for c in self.centers],
                "segments": [list(s) for s in self.segments], "radius": self.radius}


@dataclass(frozen=True)
class EllipseTube(SpectralRegion):
    """Closed ``radius``-neighbourhood of the curve ``E``."""

    g: float
    radius: float
    eg: float = None
    kind = "ellipse_tube"

    def __post_init__(self):
        if self.eg is None:
            object.__setattr__(self, "eg", math.exp(self.g))

    def distance(self, z):
        z = complex(z)
        a, b = self.eg + 1 / self.eg, self.eg - 1 / self.eg
        return max(ellipse_distance(a, b, z.real, z.imag) - self.radius, 0.0)

    def to_json(self):
        return {"variant": "EllipseTube", "g": self.g, "eg": self.eg, "radius": self.radius}


@dataclass(frozen=True)
class IntervalUnion(SpectralRegion):
    """Finite union of closed real intervals, stored sorted and merged."""

    intervals: tuple
    kind = "interval_union"

    def __post_init__(self):
        merged = []
        for lo, hi in sorted((float(l), float(h)) for l, h in self.intervals):
            if merged and lo <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        object.__setattr__(self, "intervals", tuple(merged))

    @property
    def has_gap(self):
        return len(self.intervals) > 1

    def distance(self, z):
        z = complex(z)
        d = math.inf
        for lo, hi in self.intervals:
            x = min(max(z.real, lo), hi)
            d = min(d, abs(z - x))
        return d

    def to_json(self):
        return {"variant": "IntervalUnion", "intervals": [list(i) for i in self.intervals]}


@dataclass(frozen=True)
class CurveFamily(SpectralRegion):
    """Sampled curves; ``branches`` has shape (number of branches, samples)."""

    thetas: np.ndarray
    branches: np.ndarray
    kind = "curve_family"

    @property
    def points(self):
        return np.asarray(self.branches).ravel()

    def distance(self, z):
        return float(np.abs(self.points - complex(z)).min())

    def to_json(self):
        return {"variant": "CurveFamily", "thetas": list(map(float, self.thetas)),
                "branches": [[[p.real, p.imag] for p in br] for br in self.branches]}


class _NotDetermined:
    """Marker for parameter ranges where no closed form is available."""

    def __repr__(self):
        return "NOT_DETERMINED"

    def __bool__(self):
        return False

    def to_json(self):
        return {"variant": "NotDetermined"}


NOT_DETERMINED = _NotDetermined()


def region_from_json(d: dict):
    v = d["variant"]
    if v == "ConvexHullSum":
        return ConvexHullSum(d["g"], *d["interval"], eg=d.get("eg"), label=d.get("label"))
    if v == "EllipsePlusInterval":
        return EllipsePlusInterval(d["g"], *d["interval"], eg=d.get("eg"))
    if v == "BallUnion":
        return BallUnion(tuple(complex(*c) for c in d["centers"]), d["radius"],
                         tuple(tuple(s) for s in d.get("segments", ())))
    if v == "EllipseTube":
        return EllipseTube(d["g"], d["radius"], eg=d.get("eg"))
    if v == "IntervalUnion":
        return IntervalUnion(tuple(tuple(i) for i in d["intervals"]))
    if v == "CurveFamily":
        br = np.array([[complex(*p) for p in b] for b in d["branches"]])
        return CurveFamily(np.asarray(d["thetas"]), br)
    if v == "NotDetermined":
        return NOT_DETERMINED
    raise InvalidArgumentError(f"unknown region variant {v!r}")


def _check_mu(mu):
    if not mu >= 0:
        raise InvalidArgumentError(f"mu must be >= 0, got {mu}")


def inclusion_bounds(g, mu: float):
    """Inner region ``E + [-mu, mu]`` and outer region ``Conv(E) + [-mu, mu]``."""
    p = as_params(g)
    _check_mu(mu)
    return (EllipsePlusInterval(p.g, -mu, mu, eg=p.eg),
            ConvexHullSum(p.g, -mu, mu, eg=p.eg))


def ball_bounds(g, m):
    """Both ball-type outer regions for a potential alphabet ``m``.

    ``m`` is either a sequence of points or a ``(lo, hi)`` real interval given
    as a 2-tuple of floats wrapped in a dict ``{"interval": (lo, hi)}``.
    Returns ``(Spec(M) + B(0, e^g + e^-g), E + B(0, max|m|))``.
    """
    p = as_params(g)
    if isinstance(m, dict):
        lo, hi = m["interval"]
        first = BallUnion((), p.cosh_sum, ((float(lo), float(hi)),))
        reach = max(abs(lo), abs(hi))
    else:
        pts = tuple(complex(x) for x in m)
        first = BallUnion(pts, p.cosh_sum)
        reach = max(abs(x) for x in pts)
    return first, EllipseTube(p.g, reach, eg=p.eg)


def conjectured_spectrum(g, mu: float) -> ConvexHullSum:
    """``Conv(E + [-mu, mu])``: conjectured, not proved, for ``mu >= e^g - e^-g``.

    Carries ``label="conjecture"`` and is not used by any predicate.
    """
    p = as_params(g)
    _check_mu(mu)
    return ConvexHullSum(p.g, -mu, mu, eg=p.eg, label="conjecture")


def zero_in_spectrum_interval(g, mu: float) -> bool:
    p = as_params(g)
    _check_mu(mu)
    return mu >= p.sinh_diff


def zero_in_spectrum_twopoint(g, mu: float) -> bool:
    p = as_params(g)
    _check_mu(mu)
    return p.sinh_diff <= mu <= p.cosh_sum


def spectrum_zn(g, mu: float, dim: int):
    """Spectrum on the ``dim``-dimensional lattice when the closed form applies."""
    p = as_params(g)
    _check_mu(mu)
    if dim < 1:
        raise InvalidArgumentError("dimension must be >= 1")
    spread = 2.0 * (dim - 1)
    if mu >= p.cosh_sum - spread:
        return ConvexHullSum(p.g, -mu - spread, mu + spread, eg=p.eg)
    return NOT_DETERMINED


def resolvent_at_zero(g, mu: float) -> float:
    """``1 / |H^{-1}|`` for the interval model, valid for ``0 <= mu < e^g - e^-g``."""
    p = as_params(g)
    if not (0 <= mu < p.sinh_diff):
        raise DomainError(f"mu={mu} outside [0, {p.sinh_diff}): zero is in the spectrum")
    return p.sinh_diff - mu


def q2_band(a: float, b: float) -> tuple:
    """The band ``T = [b - a, a - b/2 + sqrt(b^2/4 + 4)]`` of the g = 0 spectrum."""
    if not (b > 0 and b <= 2 * a):
        raise InvalidArgumentError(f"need 0 < b <= 2a, got a={a}, b={b}")
    return (b - a, a - b / 2 + math.sqrt(b * b / 4 + 4))


def q2_selfadjoint_spectrum(a: float, b: float) -> IntervalUnion:
    """``T U (-T)`` with ``T`` from :func:`q2_band` (g = 0)."""
    lo, hi = q2_band(a, b)
    return IntervalUnion(((lo, hi), (-hi, -lo)))


def q2_inner_curve(g, b: float, theta_grid) -> CurveFamily:
    """Both square-root branches of ``b^2/4 + 2 + e^{2g+it} + e^{-2g-it}``.

    The first branch is continued along the grid (no jumps at the branch cut
    of the principal root); the second branch is its negative.
    """
    p = as_params(g)
    if not b > 0:
        raise InvalidArgumentError("b must be positive")
    thetas = np.asarray(theta_grid, dtype=float)
    e2 = p.eg ** 2
    rad = b * b / 4 + 2 + e2 * np.exp(1j * thetas) + np.exp(-1j * thetas) / e2
    root = np.sqrt(rad.astype(complex))
    for k in range(1, root.size):
        if abs(root[k] - root[k - 1]) > abs(root[k] + root[k - 1]):
            root[k] = -root[k]
    return CurveFamily(thetas, np.vstack([root, -root]))


@dataclass(frozen=True)
class LocalizationReport:
    variance: float
    argmin_sites: tuple
    spread_bound: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "spread_bound", 2.0 * math.sqrt(self.variance))


def variance_report(f, window=None, rtol: float = 1e-12) -> LocalizationReport:
    """Minimum over centres of the second moment of ``|f|^2`` (after normalising).

    ``window`` supplies site labels; without it sites are ``0..len(f)-1``.
    """
    f = np.asarray(f)
    w = np.abs(f) ** 2
    total = w.sum()
    if not total > 0:
        raise InvalidArgumentError("variance of the zero vector is undefined")
    w = w / total
    sites = np.arange(f.size) if window is None else window.sites
    # v(y) = sum (x - y)^2 w(x) = m2 - 2 y m1 + y^2
    m1 = float(np.dot(sites, w))
    centred = sites - m1
    base = float(np.dot(centred ** 2, w))
    v = base + (sites - m1) ** 2
    best = float(v.min())
    argmin = tuple(int(s) for s in sites[v <= best + rtol * max(best, 1.0)])
    return LocalizationReport(best, argmin)
