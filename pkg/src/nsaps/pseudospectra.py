"""Certified upper bounds on the inverse resolvent norm.

For a window ``L``, ``sigma(A, L, z)`` is the smallest singular value of
``A - z`` acting on functions supported in ``L`` and measured in the whole
space. ``min(sigma(A, L, z), sigma(A*, L, conj z))`` bounds
``1 / |(A - z)^{-1}|`` from above, and minimising it over potentials drawn
from the alphabet still bounds the pseudo-ergodic operator.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .linalg import smallest_singular_value
from .operators import (AndersonParams, IIDUniform, PotentialSpec, RandomStream,
                        TruncatedOperator, Window, as_params, build_truncation,
                        sample_potential)

__all__ = [
    "GridSpec",
    "SigmaSample",
    "PseudoField",
    "sigma_bound",
    "ensemble_min",
    "sweep",
    "refine",
    "table_experiment",
    "TABLE_XS",
    "field_to_csv",
    "write_field",
]

TABLE_XS = tuple(0.5 * k for k in range(13))


@dataclass(frozen=True)
class GridSpec:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    h: float

    def __post_init__(self):
        if not (self.re_min <= self.re_max and self.im_min <= self.im_max):
            raise InvalidArgumentError("grid bounds are inverted")
        if not self.h > 0:
            raise InvalidArgumentError("grid spacing must be positive")

    @property
    def shape(self):
        nre = int(math.floor((self.re_max - self.re_min) / self.h + 1e-9)) + 1
        nim = int(math.floor((self.im_max - self.im_min) / self.h + 1e-9)) + 1
        return nim, nre

    def nodes(self) -> np.ndarray:
        """Node coordinates, shape ``(n_im, n_re)``; row-major over imaginary parts."""
        nim, nre = self.shape
        re = self.re_min + np.arange(nre) * self.h
        im = self.im_min + np.arange(nim) * self.h
        return re[None, :] + 1j * im[:, None]

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        vals = [float(t) for t in text.split(",")]
        if len(vals) != 5:
            raise InvalidArgumentError("grid needs re_min,re_max,im_min,im_max,h")
        return cls(*vals)

    def to_text(self):
        return ",".join(repr(float(v)) for v in
                        (self.re_min, self.re_max, self.im_min, self.im_max, self.h))


@dataclass(frozen=True)
class SigmaSample:
    z: complex
    sigma_a: float
    sigma_astar: float

    @property
    def s_bar(self) -> float:
        return min(self.sigma_a, self.sigma_astar)


def sigma_bound(op: TruncatedOperator, z: complex) -> SigmaSample:
    z = complex(z)
    zz = z.real if z.imag == 0 else z
    sa = smallest_singular_value(op.column_map(zz))
    adj = op.adjoint()
    sb = smallest_singular_value(adj.column_map(np.conj(zz)))
    return SigmaSample(z, sa, sb)


def ensemble_min(params, spec: PotentialSpec, window: Window, z: complex,
                 samples: int, seed: RandomStream) -> SigmaSample:
    """Componentwise minimum of :func:`sigma_bound` over ``samples`` draws.

    Draw ``k`` uses ``seed.child(k)``, so a larger sample count extends the
    same sequence of potentials.
    """
    if samples < 1:
        raise InvalidArgumentError("samples must be >= 1")
    params = as_params(params)
    if not isinstance(seed, RandomStream):
        seed = RandomStream(int(seed))
    best_a = best_b = math.inf
    count = samples if spec.is_random else 1
    for k in range(count):
        pot = sample_potential(spec, window, seed.child(k))
        s = sigma_bound(build_truncation(params, pot, window), z)
        best_a = min(best_a, s.sigma_a)
        best_b = min(best_b, s.sigma_astar)
    return SigmaSample(complex(z), best_a, best_b)


@dataclass
class PseudoField:
    """Sampled bounds over a set of nodes.

    ``cells`` lists the leaf squares as ``(re0, im0, h, depth)`` lower-left
    corners; nodes are keyed by their exact coordinates.
    """

    grid: GridSpec
    params: AndersonParams
    spec: PotentialSpec
    window: Window
    samples: int
    seed: int
    samples_by_node: dict = field(default_factory=dict)
    depth_by_node: dict = field(default_factory=dict)
    cells: list = field(default_factory=list)

    @property
    def nodes(self):
        return sorted(self.samples_by_node, key=lambda z: (z.imag, z.real))

    def values(self):
        return np.array([self.samples_by_node[z].s_bar for z in self.nodes])

    def metadata(self) -> dict:
        return {
            "eg": self.params.eg,
            "g": self.params.g,
            "spec": self.spec.to_dict(),
            "window": [self.window.lo, self.window.hi],
            "grid": [self.grid.re_min, self.grid.re_max, self.grid.im_min,
                     self.grid.im_max, self.grid.h],
            "samples": self.samples,
            "seed": self.seed,
        }


def _node_sample(args):
    params, spec, window, z, samples, seed = args
    stream = RandomStream(seed).for_point(z)
    return ensemble_min(params, spec, window, z, samples, stream)


def _evaluate(params, spec, window, zs, samples, seed, workers):
    jobs = [(params, spec, window, z, samples, seed) for z in zs]
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_node_sample, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [_node_sample(j) for j in jobs]


def sweep(params, spec: PotentialSpec, window: Window, grid: GridSpec, samples: int,
          seed: int, workers: int = 1) -> PseudoField:
    """Ensemble minimum at every grid node.

    Each node draws from a stream derived from its own coordinates, so the
    result does not depend on execution order or on which other nodes are in
    the grid.
    """
    params = as_params(params)
    nodes = grid.nodes()
    zs = [complex(z) for z in nodes.ravel()]
    results = _evaluate(params, spec, window, zs, samples, seed, workers)
    out = PseudoField(grid, params, spec, window, samples, int(seed))
    for z, s in zip(zs, results):
        out.samples_by_node[z] = s
        out.depth_by_node[z] = 0
    nim, nre = nodes.shape
    for i in range(nim - 1):
        for j in range(nre - 1):
            z0 = nodes[i, j]
            out.cells.append((z0.real, z0.imag, grid.h, 0))
    return out


def _corners(re0, im0, h):
    return [complex(re0, im0), complex(re0 + h, im0), complex(re0, im0 + h),
            complex(re0 + h, im0 + h)]


def refine(field_: PseudoField, target_eps: float, max_depth: int = 4,
           workers: int = 1) -> PseudoField:
    """Subdivide cells whose corner values cannot settle the ``target_eps`` level.

    A cell of side ``h`` is within ``h / sqrt(2)`` of a corner everywhere, so
    it is left alone when ``min(corners) - h/sqrt(2) > target_eps`` (bound
    above the level throughout) or ``max(corners) + h/sqrt(2) < target_eps``
    (true resolvent bound below the level throughout). Every other cell is
    split into four until ``max_depth``.
    """
    if not target_eps > 0:
        raise InvalidArgumentError("target_eps must be positive")
    if not field_.samples_by_node:
        raise InvalidArgumentError("cannot refine an empty field")
    out = PseudoField(field_.grid, field_.params, field_.spec, field_.window,
                      field_.samples, field_.seed, dict(field_.samples_by_node),
                      dict(field_.depth_by_node), [])
    pending = list(field_.cells)
    while pending:
        todo, nxt, new_nodes = [], [], {}
        for cell in pending:
            re0, im0, h, depth = cell
            vals = [out.samples_by_node[c].s_bar for c in _corners(re0, im0, h)]
            slack = h / math.sqrt(2.0)
            settled = min(vals) - slack > target_eps or max(vals) + slack < target_eps
            if settled or depth >= max_depth:
                out.cells.append(cell)
                continue
            half = h / 2.0
            for dr in (0.0, half):
                for di in (0.0, half):
                    sub = (re0 + dr, im0 + di, half, depth + 1)
                    nxt.append(sub)
                    for c in _corners(*sub[:3]):
                        if c not in out.samples_by_node and c not in new_nodes:
                            new_nodes[c] = depth + 1
            todo.append(cell)
        if new_nodes:
            zs = sorted(new_nodes, key=lambda z: (z.imag, z.real))
            res = _evaluate(out.params, out.spec, out.window, zs, out.samples, out.seed, workers)
            for z, s in zip(zs, res):
                out.samples_by_node[z] = s
                out.depth_by_node[z] = new_nodes[z]
        pending = nxt
    return out


def _fmt(x: float) -> str:
    return repr(float(x))


def field_to_csv(field_: PseudoField, with_depth: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["re", "im", "sigma_a", "sigma_astar", "s_bar"]
    if with_depth:
        header.append("depth")
    w.writerow(header)
    for z in field_.nodes:
        s = field_.samples_by_node[z]
        row = [_fmt(z.real), _fmt(z.imag), _fmt(s.sigma_a), _fmt(s.sigma_astar), _fmt(s.s_bar)]
        if with_depth:
            row.append(str(field_.depth_by_node[z]))
        w.writerow(row)
    return buf.getvalue()


def write_field(field_: PseudoField, path, with_depth: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(field_to_csv(field_, with_depth))


def table_experiment(seed: int, samples: int = 1000, window: Window = Window(1, 100),
                     xs=TABLE_XS, eg: float = 2.0, mu: float = 3.0, workers: int = 1):
    """Minimum bound at real ``x`` over uniform potentials on ``[-mu, mu]``.

    Returns rows ``(x, sigma_a, sigma_astar, s_bar)``.
    """
    params = AndersonParams.from_eg(eg)
    spec = IIDUniform(mu)
    zs = [complex(x) for x in xs]
    res = _evaluate(params, spec, window, zs, samples, seed, workers)
    return [(float(z.real), s.sigma_a, s.sigma_astar, s.s_bar) for z, s in zip(zs, res)]
