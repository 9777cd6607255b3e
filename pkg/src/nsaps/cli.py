"""Command-line entry point.

Every command is driven by a :class:`RunConfig`. The command may be given
either as ``--command NAME`` or as the first token (``nsaps table --seed
42``). Unset flags fall back to ``NSA_PS_<FLAG>`` environment variables,
e.g. ``NSA_PS_SEED=7``. Output files written with ``--out`` get a
``<out>.json`` sidecar holding the config, so ``--config <out>.json``
reproduces the run byte for byte.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, fields
from importlib import metadata

import numpy as np

from . import analysis, oracle, pseudospectra, transfer
from .errors import DomainError, NumericalFailure, SamplerStuckError
from .operators import (AndersonParams, ConstrainedQ1, ConstrainedQ2, IIDUniform, Periodic,
                        TwoPoint, Window, _word, parse_spec)

COMMANDS = ("sweep", "refine", "curve", "classify", "table", "predicates", "verify")
ENV_PREFIX = "NSA_PS_"

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass
class RunConfig:
    command: str
    eg: float | None = None
    g: float | None = None
    spec: str | None = None
    model: str | None = None
    word: str | None = None
    mu: float | None = None
    a: float | None = None
    b: float | None = None
    window: str | None = None
    grid: str | None = None
    samples: int | None = None
    seed: int | None = None
    out: str | None = None
    format: str = "csv"
    lam: str | None = None
    eps: float | None = None
    target_eps: float | None = None
    depth: int | None = None
    dim: int | None = None
    thetas: int | None = None
    workers: int | None = None

    def to_dict(self):
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise UsageError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)

    # -- derived values --------------------------------------------------------

    def params(self) -> AndersonParams:
        if self.eg is not None and self.g is not None:
            if not math.isclose(math.log(self.eg), self.g, rel_tol=1e-12, abs_tol=1e-12):
                raise UsageError("--eg and --g disagree")
        if self.eg is not None:
            if not self.eg >= 1:
                raise UsageError("--eg must be >= 1")
            return AndersonParams.from_eg(self.eg)
        if self.g is not None:
            return AndersonParams(self.g)
        raise UsageError("one of --eg or --g is required")

    def potential(self):
        if self.spec:
            return parse_spec(self.spec)
        model = (self.model or ("periodic" if self.word else "iid")).lower()
        if model in ("iid", "iid_uniform", "uniform", "interval"):
            return IIDUniform(self._need("mu"))
        if model in ("twopoint", "two_point"):
            return TwoPoint(self._need("mu"))
        if model == "periodic":
            return Periodic(_word(self._need("word")))
        if model == "q1":
            return ConstrainedQ1(self._need("a"), self._need("b"))
        if model == "q2":
            return ConstrainedQ2(self._need("a"), self._need("b"))
        raise UsageError(f"unknown model {model!r}")

    def window_obj(self, default="1:100") -> Window:
        return Window.parse(self.window or default)

    def _need(self, name):
        v = getattr(self, name)
        if v is None:
            raise UsageError(f"--{name.replace('_', '-')} is required for {self.command}")
        return v


# -- argument parsing -----------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


_FLAGS = [
    ("--command", "command", str), ("--eg", "eg", float), ("--g", "g", float),
    ("--spec", "spec", str), ("--model", "model", str), ("--word", "word", str),
    ("--mu", "mu", float), ("--a", "a", float), ("--b", "b", float),
    ("--window", "window", str), ("--grid", "grid", str), ("--samples", "samples", int),
    ("--seed", "seed", int), ("--out", "out", str), ("--format", "format", str),
    ("--lambda", "lam", str), ("--eps", "eps", float), ("--target-eps", "target_eps", float),
    ("--depth", "depth", int), ("--dim", "dim", int), ("--thetas", "thetas", int),
    ("--workers", "workers", int), ("--config", "config", str),
]


def build_parser():
    p = _Parser(prog="nsaps", description="Pseudospectral bounds and spectral regions "
                "for non-self-adjoint Anderson-type operators.")
    for flag, dest, typ in _FLAGS:
        p.add_argument(flag, dest=dest, type=typ, default=None)
    return p


def _glue_negative_values(argv):
    # argparse reads "-1,1" as a flag; every flag here is long, so join such values
    out = []
    for tok in argv:
        if (out and out[-1].startswith("--") and "=" not in out[-1]
                and len(tok) > 1 and tok[0] == "-" and (tok[1].isdigit() or tok[1] == ".")):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def parse_config(argv, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    argv = list(argv)
    if argv and not argv[0].startswith("-"):
        argv = ["--command", argv[0]] + argv[1:]
    ns = vars(build_parser().parse_args(_glue_negative_values(argv)))
    for flag, dest, typ in _FLAGS:
        key = ENV_PREFIX + flag[2:].upper().replace("-", "_")
        if ns[dest] is None and key in environ:
            try:
                ns[dest] = typ(environ[key])
            except ValueError:
                raise UsageError(f"bad value for {key}: {environ[key]!r}") from None
    cfg_path = ns.pop("config")
    if cfg_path:
        with open(cfg_path) as fh:
            doc = json.load(fh)
        base = RunConfig.from_dict(doc.get("config", doc)).to_dict()
        base.pop("out", None)
        base.update({k: v for k, v in ns.items() if v is not None})
        ns = base
    ns = {k: v for k, v in ns.items() if v is not None}
    if "command" not in ns:
        raise UsageError("a command is required: " + ", ".join(COMMANDS))
    if ns["command"] not in COMMANDS:
        raise UsageError(f"unknown command {ns['command']!r}")
    cfg = RunConfig(**ns)
    if cfg.format not in ("csv", "json"):
        raise UsageError("--format must be csv or json")
    return cfg


# -- output helpers ---------------------------------------------------------------

def _f(x):
    return repr(float(x))


def _rows_to_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(cfg: RunConfig, text: str, rows_json=None, stdout=None):
    stdout = stdout or sys.stdout
    if cfg.format == "json":
        text = json.dumps({"config": _portable(cfg), "rows": rows_json}, indent=1) + "\n"
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def _portable(cfg: RunConfig) -> dict:
    # the output path is not part of what a run computes
    d = cfg.to_dict()
    d.pop("out", None)
    return d


def _write_sidecar(cfg: RunConfig, started: float):
    if not cfg.out:
        return
    side = {"config": cfg.to_dict(), "version": _version(),
            "wall_time": time.perf_counter() - started}
    with open(cfg.out + ".json", "w") as fh:
        json.dump(side, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _complex(text: str) -> complex:
    return complex(text.replace(" ", "").replace("i", "j"))


def _csv_rows_as_json(header, rows):
    return [dict(zip(header, r)) for r in rows]


# -- commands ----------------------------------------------------------------------

def cmd_sweep(cfg, out):
    grid = pseudospectra.GridSpec.parse(cfg._need("grid"))
    field_ = pseudospectra.sweep(cfg.params(), cfg.potential(), cfg.window_obj(), grid,
                                 cfg.samples or 100, cfg.seed or 0, cfg.workers or 1)
    refine = cfg.command == "refine"
    if refine:
        field_ = pseudospectra.refine(field_, cfg._need("target_eps"), cfg.depth or 4,
                                      cfg.workers or 1)
    text = pseudospectra.field_to_csv(field_, with_depth=refine)
    _emit(cfg, text, list(csv.DictReader(io.StringIO(text))), out)
    return EXIT_OK


def cmd_curve(cfg, out):
    word = _word(cfg._need("word"))
    n = cfg.thetas or 361
    thetas = np.linspace(0.0, 2 * math.pi, n)
    curve = transfer.e_alpha_curve(word, cfg.params(), thetas)
    header = ["theta", "root_index", "re_lambda", "im_lambda"]
    rows = [[_f(t), str(i), _f(lam.real), _f(lam.imag)]
            for t, roots in zip(thetas, curve) for i, lam in enumerate(roots)]
    _emit(cfg, _rows_to_csv(header, rows), _csv_rows_as_json(header, rows), out)
    return EXIT_OK


def cmd_classify(cfg, out):
    lam = _complex(cfg._need("lam"))
    word = _word(cfg._need("word"))
    eps = cfg.eps if cfg.eps is not None else transfer.DEFAULT_EPS
    label = transfer.classify_point(lam, word, cfg.params(), eps)
    out.write(f"{label}\n")
    return EXIT_OK


def cmd_table(cfg, out):
    eg = cfg.eg if cfg.eg is not None else (math.exp(cfg.g) if cfg.g is not None else 2.0)
    mu = cfg.mu if cfg.mu is not None else 3.0
    rows = pseudospectra.table_experiment(cfg.seed or 0, cfg.samples or 1000,
                                          cfg.window_obj(), eg=eg, mu=mu,
                                          workers=cfg.workers or 1)
    header = ["x", "sigma_a", "sigma_astar", "s_bar"]
    text_rows = [[_f(v) for v in r] for r in rows]
    _emit(cfg, _rows_to_csv(header, text_rows), _csv_rows_as_json(header, text_rows), out)
    return EXIT_OK


def _bool(v):
    return "true" if v else "false"


def cmd_predicates(cfg, out):
    p = cfg.params()
    lines = {}
    if cfg.mu is not None:
        mu = cfg.mu
        model = (cfg.model or "interval").lower()
        if model in ("interval", "iid", "iid_uniform", "uniform"):
            lines["zero_in_spectrum"] = _bool(analysis.zero_in_spectrum_interval(p, mu))
            inner, outer = analysis.inclusion_bounds(p, mu)
            lines["inner_region"] = json.dumps(inner.to_json(), sort_keys=True)
            lines["outer_region"] = json.dumps(outer.to_json(), sort_keys=True)
            try:
                lines["resolvent_at_zero"] = _f(analysis.resolvent_at_zero(p, mu))
            except DomainError:
                lines["resolvent_at_zero"] = "undefined"
            zn = analysis.spectrum_zn(p, mu, cfg.dim or 1)
            lines["spectrum_zn"] = json.dumps(zn.to_json(), sort_keys=True)
        elif model in ("twopoint", "two_point"):
            lines["zero_in_spectrum"] = _bool(analysis.zero_in_spectrum_twopoint(p, mu))
        else:
            raise UsageError(f"predicates has no model {model!r}")
    if cfg.a is not None and cfg.b is not None:
        reg = analysis.q2_selfadjoint_spectrum(cfg.a, cfg.b)
        lines["q2_selfadjoint_spectrum"] = json.dumps(reg.to_json(), sort_keys=True)
        lines["q2_gap"] = _bool(reg.has_gap)
    if not lines:
        raise UsageError("predicates needs --mu or both --a and --b")
    if cfg.format == "json":
        out.write(json.dumps({"config": _portable(cfg), "predicates": lines}, indent=1) + "\n")
    else:
        for k, v in lines.items():
            out.write(f"{k}={v}\n")
    return EXIT_OK


def _verify_checks(seed):
    from .linalg import smallest_singular_value
    from .operators import RandomStream, build_truncation

    rng = RandomStream(seed).generator()
    checks = []

    worst = 0.0
    for _ in range(25):
        n = int(rng.integers(2, 40))
        eg = float(rng.uniform(1.0, 3.0))
        v = rng.uniform(-3, 3, n)
        z = complex(rng.uniform(-4, 4), rng.uniform(-2, 2))
        p = AndersonParams.from_eg(eg)
        op = build_truncation(p, v, Window(0, n - 1))
        mine = smallest_singular_value(op.column_map(z))
        ref = oracle.dense_min_sv(oracle.dense_column_map(p, v, z))
        worst = max(worst, abs(mine - ref))
    checks.append(("banded sigma vs dense SVD", worst <= 1e-9, worst))

    thetas = np.linspace(0, 2 * math.pi, 2001)
    k = 200
    dmax = 0.0
    for word in ((-1.0, 1.0), (0.0,), (0.5, -1.0, 2.0)):
        p = AndersonParams.from_eg(2.0)
        c = transfer.e_alpha_curve(word, p, thetas)
        dmax = max(dmax, oracle.hausdorff(c, oracle.periodic_spectrum(word, p, k)))
    checks.append(("Bloch curve vs periodic ring (K=200)", dmax < 10 / k, dmax))

    err = 0.0
    for a, b in ((3, 2), (2, 2), (1, 2), (2, 4)):
        got = np.array(analysis.q2_selfadjoint_spectrum(a, b).intervals, dtype=float)
        ref = np.array(oracle.q2_bands_from_ring(a, b), dtype=float)
        err = max(err, np.abs(got - ref).max() if got.shape == ref.shape else math.inf)
    checks.append(("q2 spectrum endpoints vs periodic ring", err <= 1e-10, err))

    p = AndersonParams.from_eg(2.0)
    w = Window(1, 8)
    ex = oracle.exhaustive_min_s(p, (-2.0, 2.0), w, 0.0)
    en = pseudospectra.ensemble_min(p, TwoPoint(2.0), w, 0.0, 200, RandomStream(seed)).s_bar
    checks.append(("exhaustive <= sampled minimum", ex <= en + 1e-12, en - ex))
    return checks


def cmd_verify(cfg, out):
    checks = _verify_checks(cfg.seed or 0)
    ok = True
    for name, passed, value in checks:
        ok &= bool(passed)
        out.write(f"{'PASS' if passed else 'FAIL'} {name} ({value:.3e})\n")
    out.write(f"verify: {'all passed' if ok else 'failures present'}\n")
    return EXIT_OK if ok else EXIT_FAIL


_DISPATCH = {"sweep": cmd_sweep, "refine": cmd_sweep, "curve": cmd_curve,
             "classify": cmd_classify, "table": cmd_table, "predicates": cmd_predicates,
             "verify": cmd_verify}


def run(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    started = time.perf_counter()
    status = _DISPATCH[cfg.command](cfg, stdout)
    if cfg.command in ("sweep", "refine", "table", "curve"):
        _write_sidecar(cfg, started)
    return status


def _error_line(status, exc, **extra):
    doc = {"status": status, "error": type(exc).__name__, "message": str(exc)}
    doc.update(extra)
    return json.dumps(doc, default=str, sort_keys=True)


def main(argv=None, stdout=None, stderr=None) -> int:
    stderr = stderr or sys.stderr
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        return run(cfg, stdout)
    except (NumericalFailure, SamplerStuckError) as exc:
        print(_error_line(EXIT_NUMERIC, exc, context=getattr(exc, "context", {}),
                          argv=list(argv)), file=stderr)
        return EXIT_NUMERIC
    except (UsageError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(_error_line(EXIT_USAGE, exc), file=stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
