"""Potentials and finite truncations of the asymmetric-hopping Anderson operator.

The operator acts on sequences over the integers as

    (H f)_n = exp(-g) f_{n-1} + exp(g) f_{n+1} + V_n f_n.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from .errors import InvalidArgumentError, SamplerStuckError
from .linalg import ComplexBandedMatrix

__all__ = [
    "AndersonParams",
    "as_params",
    "Window",
    "RandomStream",
    "PotentialSpec",
    "Periodic",
    "IIDUniform",
    "TwoPoint",
    "Splice",
    "Ramp",
    "ConstrainedQ1",
    "ConstrainedQ2",
    "spec_from_dict",
    "parse_spec",
    "sample_potential",
    "TruncatedOperator",
    "build_truncation",
    "h0_ellipse_point",
]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class AndersonParams:
    """Asymmetry of the hopping.

    Prefer :meth:`from_eg` when ``exp(g)`` is the natural input; it keeps
    ``hop_right`` exactly as given (e.g. ``2.0``) instead of
    ``exp(log(2))``.
    """

    g: float
    hop_right: float = field(default=None)
    hop_left: float = field(default=None)

    def __post_init__(self):
        if not self.g >= 0:
            raise InvalidArgumentError(f"asymmetry g must be >= 0, got {self.g}")
        if self.hop_right is None:
            object.__setattr__(self, "hop_right", math.exp(self.g))
        if self.hop_left is None:
            object.__setattr__(self, "hop_left", 1.0 / self.hop_right)
        if abs(self.hop_right * self.hop_left - 1.0) > 1e-15:
            raise InvalidArgumentError("hop_right * hop_left must equal 1")

    @classmethod
    def from_eg(cls, eg: float) -> "AndersonParams":
        if not eg >= 1.0:
            raise InvalidArgumentError(f"exp(g) must be >= 1, got {eg}")
        return cls(math.log(eg), float(eg), 1.0 / eg)

    @property
    def eg(self):
        return self.hop_right

    @property
    def cosh_sum(self):
        """``e^g + e^-g``: the norm of the hopping part."""
        return self.hop_right + self.hop_left

    @property
    def sinh_diff(self):
        """``e^g - e^-g``: the semi-minor axis of the free ellipse."""
        return self.hop_right - self.hop_left


def as_params(g) -> AndersonParams:
    """Accept either an :class:`AndersonParams` or a bare asymmetry ``g``."""
    if isinstance(g, AndersonParams):
        return g
    return AndersonParams(float(g))


@dataclass(frozen=True)
class Window:
    lo: int
    hi: int

    def __post_init__(self):
        if self.hi < self.lo:
            raise InvalidArgumentError(f"empty window [{self.lo}, {self.hi}]")

    @property
    def size(self):
        return self.hi - self.lo + 1

    @property
    def sites(self):
        return np.arange(self.lo, self.hi + 1)

    @classmethod
    def parse(cls, text: str) -> "Window":
        sep = ":" if ":" in text else ","
        lo, hi = (int(t) for t in text.split(sep))
        return cls(lo, hi)

    def __str__(self):
        return f"{self.lo}:{self.hi}"


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def _float_bits(x: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", float(x) + 0.0))[0]


@dataclass(frozen=True)
class RandomStream:
    """Addressable deterministic random stream.

    Draws come from a Philox counter generator keyed by ``(seed, stream_id)``
    through :class:`numpy.random.SeedSequence`, so they are identical across
    runs and platforms.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & _MASK64)

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence([self.seed, self.stream_id])
        return np.random.Generator(np.random.Philox(ss))

    def child(self, k: int) -> "RandomStream":
        return RandomStream(self.seed, _splitmix64(self.stream_id ^ _splitmix64(int(k) + 1)))

    def for_point(self, z: complex) -> "RandomStream":
        """Stream attached to a point of the plane, independent of any grid indexing."""
        z = complex(z)
        key = _splitmix64(_float_bits(z.real)) ^ _splitmix64(_float_bits(z.imag) ^ 0x5851F42D4C957F2D)
        return RandomStream(self.seed, _splitmix64(self.stream_id ^ key))


# -- potential ensembles -----------------------------------------------------

def _word(values) -> tuple:
    if isinstance(values, str):
        values = [complex(t.replace(" ", "")) for t in values.split(",") if t.strip()]
    out = []
    for v in values:
        v = complex(v)
        out.append(v.real if v.imag == 0 else v)
    return tuple(out)


def _word_array(word) -> np.ndarray:
    arr = np.asarray(word)
    return arr.astype(complex) if np.iscomplexobj(arr) else arr.astype(float)


class PotentialSpec:
    """Base for ensemble descriptions. Subclasses are frozen dataclasses."""

    variant: ClassVar[str]

    def draw(self, window: Window, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        out = {"variant": self.variant}
        for k, v in self.__dict__.items():
            if isinstance(v, tuple):
                v = [_jsonable(x) for x in v]
            out[k] = _jsonable(v)
        return out

    def to_text(self) -> str:
        parts = []
        for k, v in self.to_dict().items():
            if isinstance(v, list):
                v = ",".join(_fmt_scalar(x) for x in v)
            parts.append(f"{k}={v}")
        return ";".join(parts)

    @property
    def is_random(self) -> bool:
        return True


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def _fmt_scalar(x):
    if isinstance(x, list):
        return repr(complex(*x)).strip("()")
    return repr(x)


@dataclass(frozen=True)
class Periodic(PotentialSpec):
    word: tuple
    variant: ClassVar[str] = "periodic"

    def __post_init__(self):
        object.__setattr__(self, "word", _word(self.word))
        if not self.word:
            raise InvalidArgumentError("periodic word must be nonempty")

    def draw(self, window, rng):
        w = _word_array(self.word)
        return w[np.mod(window.sites, w.size)]

    @property
    def is_random(self):
        return False


@dataclass(frozen=True)
class IIDUniform(PotentialSpec):
    mu: float
    variant: ClassVar[str] = "iid_uniform"

    def __post_init__(self):
        if not self.mu > 0:
            raise InvalidArgumentError("IIDUniform needs mu > 0")

    def draw(self, window, rng):
        return rng.uniform(-self.mu, self.mu, window.size)


@dataclass(frozen=True)
class TwoPoint(PotentialSpec):
    mu: float
    variant: ClassVar[str] = "two_point"

    def __post_init__(self):
        if not self.mu > 0:
            raise InvalidArgumentError("TwoPoint needs mu > 0")

    def draw(self, window, rng):
        signs = 2 * rng.integers(0, 2, window.size) - 1
        return self.mu * signs.astype(float)


@dataclass(frozen=True)
class Splice(PotentialSpec):
    """``alpha`` repeated at and above ``split``, ``beta`` repeated below it."""

    alpha: tuple
    beta: tuple
    split: int = 0
    variant: ClassVar[str] = "splice"

    def __post_init__(self):
        object.__setattr__(self, "alpha", _word(self.alpha))
        object.__setattr__(self, "beta", _word(self.beta))
        if not self.alpha or not self.beta:
            raise InvalidArgumentError("splice words must be nonempty")

    def draw(self, window, rng):
        a, b = _word_array(self.alpha), _word_array(self.beta)
        m = window.sites - self.split
        out = np.where(m >= 0, a[np.mod(m, a.size)], b[np.mod(m, b.size)])
        return out

    @property
    def is_random(self):
        return False


@dataclass(frozen=True)
class Ramp(PotentialSpec):
    """``beta`` for n < 0, ``alpha`` for n > N, linear in between."""

    alpha: float
    beta: float
    ramp_length: int
    variant: ClassVar[str] = "ramp"

    def __post_init__(self):
        if self.ramp_length < 1:
            raise InvalidArgumentError("ramp_length must be >= 1")

    def draw(self, window, rng):
        n = window.sites
        ramp = self.beta + n * (self.alpha - self.beta) / self.ramp_length
        return np.where(n < 0, self.beta, np.where(n > self.ramp_length, self.alpha, ramp))

    @property
    def is_random(self):
        return False


def _check_ab(a, b):
    if not (b > 0 and b <= 2 * a):
        raise InvalidArgumentError(f"constraints need 0 < b <= 2a, got a={a}, b={b}")


@dataclass(frozen=True)
class ConstrainedQ1(PotentialSpec):
    """Attractive constraint: ``|V_n| <= a`` and ``|V_n - V_{n+1}| <= b``."""

    a: float
    b: float
    variant: ClassVar[str] = "q1"

    def __post_init__(self):
        _check_ab(self.a, self.b)

    def _ok(self, x, v):
        return abs(x) <= self.a and abs(x - v) <= self.b

    def draw(self, window, rng):
        a, b = self.a, self.b
        u = rng.random(window.size)
        out = np.empty(window.size)
        v = -a + 2 * a * u[0]
        out[0] = min(max(v, -a), a)
        for k in range(1, window.size):
            prev = out[k - 1]
            lo, hi = max(-a, prev - b), min(a, prev + b)
            x = lo + (hi - lo) * u[k]
            out[k] = _nudge(x, prev, self._ok)
        return out


@dataclass(frozen=True)
class ConstrainedQ2(PotentialSpec):
    """Repulsive constraint: ``|V_n| <= a`` and ``|V_n - V_{n+1}| >= b``.

    When ``b > a`` the chain lives on ``|v| >= b - a`` so that the
    admissible next-value set is never empty.
    """

    a: float
    b: float
    variant: ClassVar[str] = "q2"

    def __post_init__(self):
        _check_ab(self.a, self.b)

    @property
    def floor(self):
        return max(self.b - self.a, 0.0)

    def _ok(self, x, v):
        return abs(x) <= self.a and abs(x) >= self.floor and abs(x - v) >= self.b

    def _states(self):
        f = self.floor
        if f > 0:
            return [(-self.a, -f), (f, self.a)]
        return [(-self.a, self.a)]

    def _admissible(self, v):
        pieces = []
        for lo, hi in self._states():
            for clo, chi in ((-self.a, v - self.b), (v + self.b, self.a)):
                l, h = max(lo, clo), min(hi, chi)
                if l <= h:
                    pieces.append((l, h))
        return pieces

    def draw(self, window, rng):
        u = rng.random(window.size)
        out = np.empty(window.size)
        out[0] = _pick(self._states(), u[0])
        for k in range(1, window.size):
            prev = out[k - 1]
            pieces = self._admissible(prev)
            if not pieces:
                raise SamplerStuckError(
                    f"no admissible value after {prev!r} with a={self.a}, b={self.b}"
                )
            x = _pick(pieces, u[k])
            out[k] = _nudge(x, prev, self._ok, away=True)
        return out


def _pick(pieces, u):
    lengths = np.array([h - l for l, h in pieces])
    total = lengths.sum()
    if total == 0.0:
        return pieces[0][0]
    t = u * total
    for (l, h), length in zip(pieces, lengths):
        if t <= length:
            return min(l + t, h)
        t -= length
    return pieces[-1][1]


def _nudge(x, prev, ok, away=False, limit=64):
    """Move ``x`` by a few ulps until the constraint holds exactly in floating point."""
    y = x
    for _ in range(limit):
        if ok(y, prev):
            return y
        toward = prev if not away else (np.inf if y >= prev else -np.inf)
        y = float(np.nextafter(y, toward))
    # rounding near the bound may push the other way; try both directions
    for direction in (np.inf, -np.inf):
        y = x
        for _ in range(limit):
            y = float(np.nextafter(y, direction))
            if ok(y, prev):
                return y
    raise SamplerStuckError(f"cannot place a value near {x!r} after {prev!r}")


_SPEC_TYPES = {cls.variant: cls for cls in
               (Periodic, IIDUniform, TwoPoint, Splice, Ramp, ConstrainedQ1, ConstrainedQ2)}
_ALIASES = {"iid": "iid_uniform", "uniform": "iid_uniform", "twopoint": "two_point",
            "constrained_q1": "q1", "constrained_q2": "q2"}


def spec_from_dict(d: dict) -> PotentialSpec:
    d = dict(d)
    variant = str(d.pop("variant")).lower()
    variant = _ALIASES.get(variant, variant)
    d.pop("seed", None)
    try:
        cls = _SPEC_TYPES[variant]
    except KeyError:
        raise InvalidArgumentError(f"unknown potential variant {variant!r}") from None
    for key in ("word", "alpha", "beta"):
        if key in d and isinstance(d[key], list):
            d[key] = tuple(complex(*x) if isinstance(x, list) else x for x in d[key])
    if "split" in d:
        d["split"] = int(d["split"])
    if "ramp_length" in d:
        d["ramp_length"] = int(d["ramp_length"])
    try:
        return cls(**d)
    except TypeError as exc:
        raise InvalidArgumentError(f"bad fields for {variant}: {exc}") from None


def parse_spec(text: str) -> PotentialSpec:
    """Parse ``variant=iid_uniform;mu=3`` style text (``;`` separates fields)."""
    fields = {}
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            if "variant" in fields:
                raise InvalidArgumentError(f"malformed spec field {part!r}")
            fields["variant"] = part
            continue
        k, v = (s.strip() for s in part.split("=", 1))
        fields[k] = v
    if "variant" not in fields:
        raise InvalidArgumentError("potential spec needs a variant")
    out = {"variant": fields.pop("variant")}
    for k, v in fields.items():
        if k in ("word", "alpha", "beta") and out["variant"] != "ramp":
            out[k] = _word(v)
        elif k in ("split", "ramp_length", "seed"):
            out[k] = int(v)
        else:
            out[k] = float(v)
    return spec_from_dict(out)


def sample_potential(spec: PotentialSpec, window: Window, rng: RandomStream) -> np.ndarray:
    """One potential value per window site, deterministic in ``rng``."""
    gen = rng.generator() if isinstance(rng, RandomStream) else rng
    return spec.draw(window, gen)


# -- truncations --------------------------------------------------------------

@dataclass(frozen=True)
class TruncatedOperator:
    """A nearest-neighbour operator restricted to functions supported in a window.

    ``sub`` multiplies ``f_{n-1}`` and ``sup`` multiplies ``f_{n+1}`` in
    ``(A f)_n``. ``left_open``/``right_open`` say whether the sites just
    outside the window exist in the ambient lattice; when they do, the
    column map carries the rows that leak there.
    """

    window: Window
    potential: np.ndarray
    sub: complex
    sup: complex
    left_open: bool = True
    right_open: bool = True

    def __post_init__(self):
        pot = np.asarray(self.potential)
        if pot.ndim != 1 or pot.size != self.window.size:
            raise InvalidArgumentError(
                f"potential has {pot.size} values for a window of {self.window.size}"
            )
        pot = pot.copy()
        pot.setflags(write=False)
        object.__setattr__(self, "potential", pot)

    @property
    def size(self):
        return self.window.size

    @property
    def extended_rows(self):
        """Couplings into the sites just outside the window (left, right)."""
        return (self.sup if self.left_open else None, self.sub if self.right_open else None)

    def interior(self, z: complex = 0.0) -> np.ndarray:
        n = self.size
        dtype = np.result_type(self.potential, self.sub, self.sup, z)
        a = np.zeros((n, n), dtype=dtype)
        a[np.arange(n), np.arange(n)] = self.potential - z
        a[np.arange(1, n), np.arange(n - 1)] = self.sub
        a[np.arange(n - 1), np.arange(1, n)] = self.sup
        return a

    def column_map(self, z: complex = 0.0) -> ComplexBandedMatrix:
        """Banded matrix of ``(A - z)`` from the window into the full space."""
        n = self.size
        off = 1 if self.left_open else 0
        rows = n + off + (1 if self.right_open else 0)
        dtype = np.result_type(self.potential, self.sub, self.sup, z)
        sub = np.full(min(n, rows - off - 1), self.sub, dtype=dtype)
        sup = np.full(n if self.left_open else n - 1, self.sup, dtype=dtype)
        diags = {off: (self.potential - z).astype(dtype)}
        if sub.size:
            diags[off + 1] = sub
        if sup.size:
            diags[off - 1] = sup
        return ComplexBandedMatrix.from_diagonals(rows, n, diags)

    def apply(self, f: np.ndarray) -> np.ndarray:
        """Image of ``f`` (supported in the window) including leaked rows."""
        return self.column_map().matvec(f)

    def adjoint(self) -> "TruncatedOperator":
        pot = np.conj(self.potential) if np.iscomplexobj(self.potential) else self.potential
        return TruncatedOperator(self.window, pot, np.conj(self.sup), np.conj(self.sub),
                                 self.left_open, self.right_open)


def build_truncation(params, potential, window: Window) -> TruncatedOperator:
    params = as_params(params)
    potential = np.asarray(potential)
    if potential.ndim != 1 or potential.size != window.size:
        raise InvalidArgumentError(
            f"potential has {potential.size} values for a window of {window.size}"
        )
    return TruncatedOperator(window, potential, params.hop_left, params.hop_right)


def h0_ellipse_point(params, theta: float) -> complex:
    """Point of the free spectrum, ``e^{g+i theta} + e^{-g-i theta}``."""
    p = as_params(params)
    return complex(p.cosh_sum * math.cos(theta), p.sinh_diff * math.sin(theta))
