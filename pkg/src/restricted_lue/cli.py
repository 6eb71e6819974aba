"""Config-driven experiment runner.

``restricted-lue <command> [--config FILE] [--key value ...]``

A config file is flat ``key=value`` text (``#`` starts a comment); command
line options override it.  Results go to CSV (default) or JSON, on stdout
unless ``--out`` is given.  Exit codes: 0 success, 2 invalid configuration,
3 numerical failure (including any non-finite result or a failed check).
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
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .constrained import (
    MAX_FOURIER_N,
    btlue_density_radial,
    ftlue_density_fourier,
    ftlue_density_series,
    lue_poly_expansion,
)
from .ensembles import EnsembleSpec, entropy_values, sample_batch
from .errors import ConfigError, ContractError, DomainError, NumericError, RangeError
from .laguerre import KernelContext, kernel_cd, mp_density
from .stats import Regime, histogram, kernel_convergence, page_average, page_exact

COMMANDS = ("sample", "density", "kernel", "converge", "verify", "entropy")
SEEDED = ("sample", "entropy")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


# --- configuration ----------------------------------------------------------


def _int(name, text, lo=None, hi=None):
    try:
        v = int(str(text), 0)
    except ValueError:
        raise ConfigError(name, f"expected an integer, got {text!r}") from None
    if (lo is not None and v < lo) or (hi is not None and v > hi):
        raise ConfigError(name, f"{v} outside [{lo}, {hi}]")
    return v


def _float(name, text, positive=False):
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(name, f"expected a number, got {text!r}") from None
    if not math.isfinite(v):
        raise ConfigError(name, "must be finite")
    if positive and not v > 0:
        raise ConfigError(name, "must be positive")
    return v


def _int_list(name, text):
    parts = [p for p in str(text).replace(" ", "").split(",") if p]
    if not parts:
        raise ConfigError(name, "empty list")
    return tuple(_int(name, p, 1) for p in parts)


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    n: int = 4
    m: float = 4.0
    constraint: str = "fixed"
    param: float = 1.0
    seed: int | None = None
    draws: int = 1000
    grid: tuple = (0.0, 1.0, 101)
    output: str | None = None
    format: str = "csv"
    threads: int = 1
    y: float | None = None
    regime: str = "bulk"
    u: float = 0.5
    ns: tuple = (50, 100, 200)
    criteria: tuple | None = None
    wall_time: bool = False
    echo: dict = field(default_factory=dict, compare=False)

    @property
    def spec(self) -> EnsembleSpec:
        return EnsembleSpec(self.n, self.m, self.constraint, self.param)

    @property
    def alpha(self) -> float:
        return self.m - self.n


KEYS = (
    "n", "m", "alpha", "constraint", "param", "seed", "draws", "grid", "out", "format", "threads",
    "y", "regime", "u", "ns", "criteria",
)


def read_config_file(path) -> dict:
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"line {num}: expected key=value")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in KEYS:
            raise ConfigError(key, f"unknown key (line {num})")
        out[key] = value
    return out


def build_config(command: str, raw: dict, wall_time: bool = False) -> ExperimentConfig:
    """Validate every field before any computation starts."""
    if command not in COMMANDS:
        raise ConfigError("command", f"unknown command {command!r}")
    kw = {"command": command, "wall_time": wall_time}
    n = _int("n", raw["n"], 1, 100000) if "n" in raw else 4
    kw["n"] = n
    if "m" in raw and "alpha" in raw:
        raise ConfigError("alpha", "give either m or alpha, not both")
    if "alpha" in raw:
        kw["m"] = n + _float("alpha", raw["alpha"])
    elif "m" in raw:
        kw["m"] = _float("m", raw["m"])
    else:
        kw["m"] = float(n)
    if not kw["m"] - n > -1:
        raise ConfigError("m", f"alpha = m - n = {kw['m'] - n:g} must exceed -1")
    if "constraint" in raw:
        if raw["constraint"] not in ("free", "fixed", "bounded"):
            raise ConfigError("constraint", "must be free, fixed or bounded")
        kw["constraint"] = raw["constraint"]
    if "param" in raw:
        kw["param"] = _float("param", raw["param"], positive=True)
    if "seed" in raw:
        kw["seed"] = _int("seed", raw["seed"], 0, 2**64 - 1)
    if "draws" in raw:
        kw["draws"] = _int("draws", raw["draws"], 1, 10**9)
    if "grid" in raw:
        parts = str(raw["grid"]).split(",")
        if len(parts) != 3:
            raise ConfigError("grid", "expected lo,hi,points")
        lo, hi = _float("grid", parts[0]), _float("grid", parts[1])
        pts = _int("grid", parts[2], 1, 10**6)
        if not lo < hi and pts > 1:
            raise ConfigError("grid", "need lo < hi")
        kw["grid"] = (lo, hi, pts)
    if "out" in raw:
        kw["output"] = raw["out"]
    if "format" in raw:
        if raw["format"] not in ("csv", "json"):
            raise ConfigError("format", "must be csv or json")
        kw["format"] = raw["format"]
    kw["threads"] = _int("threads", raw["threads"], 1, 1024) if "threads" in raw else (os.cpu_count() or 1)
    if "y" in raw:
        kw["y"] = _float("y", raw["y"])
    if "regime" in raw:
        if raw["regime"] not in ("bulk", "soft", "hard"):
            raise ConfigError("regime", "must be bulk, soft or hard")
        kw["regime"] = raw["regime"]
    if "u" in raw:
        kw["u"] = _float("u", raw["u"])
        if not 0 < kw["u"] < 1:
            raise ConfigError("u", "bulk point must lie in (0, 1)")
    if "ns" in raw:
        kw["ns"] = _int_list("ns", raw["ns"])
    if "criteria" in raw:
        from .verification import REGISTRY

        kw["criteria"] = _int_list("criteria", raw["criteria"])
        bad = [c for c in kw["criteria"] if c not in REGISTRY]
        if bad:
            raise ConfigError("criteria", f"unknown criteria {bad}")
    if command in SEEDED and kw.get("seed") is None:
        raise ConfigError("seed", f"--seed is mandatory for {command}")
    if command == "density" and "draws" in raw and kw.get("seed") is None:
        raise ConfigError("seed", "--seed is mandatory when density draws a Monte Carlo column")
    if command == "entropy" and kw.get("constraint", "fixed") != "fixed":
        raise ConfigError("constraint", "entropy needs fixed-trace spectra")
    echo = {k: raw[k] for k in KEYS if k in raw}
    cfg = ExperimentConfig(**kw, echo=echo)
    try:
        cfg.spec
    except DomainError as exc:
        raise ConfigError("n", str(exc)) from None
    return cfg


# --- results ----------------------------------------------------------------


@dataclass
class ResultTable:
    columns: list
    rows: list
    metadata: dict

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError("row width differs from column count")

    def check_finite(self):
        for i, row in enumerate(self.rows):
            for name, v in zip(self.columns, row):
                if not math.isfinite(v):
                    raise NumericError(f"non-finite value {v!r} in column {name!r}, row {i}")


def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def to_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    for k, v in table.metadata.items():
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def to_json(table: ResultTable) -> str:
    meta = dict(table.metadata)
    meta["columns"] = list(table.columns)
    rows = [[int(v) if isinstance(v, (int, np.integer)) else float(v) for v in row] for row in table.rows]
    return json.dumps({"metadata": meta, "rows": rows}, indent=1) + "\n"


def read_csv_table(text: str) -> ResultTable:
    """Parse what :func:`to_csv` wrote (metadata lines, header, float rows)."""
    meta = {}
    body = []
    for line in text.splitlines():
        if line.startswith("# "):
            k, v = line[2:].split("=", 1)
            meta[k] = v
        else:
            body.append(line)
    rows = list(csv.reader(body))
    return ResultTable(rows[0], [[float(v) for v in r] for r in rows[1:]], meta)


# --- commands ---------------------------------------------------------------


def _grid(cfg):
    lo, hi, pts = cfg.grid
    return np.linspace(lo, hi, pts)


def _run_sample(cfg):
    batch = sample_batch(cfg.spec, cfg.seed, cfg.draws, cfg.threads)
    vals = batch.values
    traces = batch.traces
    # entropy of the Schmidt-normalized spectrum
    ent = entropy_values(vals / traces[:, None], trace_tol=1e-8)
    cols = [f"x_{i + 1}" for i in range(cfg.n)] + ["trace", "entropy"]
    rows = [list(map(float, v)) + [float(t), float(e)] for v, t, e in zip(vals, traces, ent)]
    return cols, rows


def _trace_unit(cfg):
    spec = cfg.spec
    total = spec.param if spec.constraint != "free" else spec.n_alpha * spec.param
    return (spec.n + spec.alpha) / (4.0 * total)


def _run_density(cfg):
    spec = cfg.spec
    x = _grid(cfg)
    n, alpha, r = spec.n, spec.alpha, spec.param
    cols = ["x", "exact_series"]
    if spec.constraint == "fixed":
        exact = ftlue_density_series(lue_poly_expansion(n, alpha), r, x)
    elif spec.constraint == "bounded":
        exact = btlue_density_radial(n, alpha, r, x)
    else:
        exact = kernel_cd(KernelContext(n, alpha, r), x, x)
    columns = [np.atleast_1d(exact)]
    notes = {}
    if spec.constraint == "fixed" and n <= MAX_FOURIER_N and n * (n + alpha) > 1:
        if np.any(x == r) or np.any(x < 0) or (alpha < 0 and np.any(x == 0)):
            notes["exact_fourier"] = "omitted: grid touches x=r (or x<=0) where the inversion integral is undefined"
        else:
            r0 = (n + alpha) / 4.0
            cols.append("exact_fourier")
            columns.append(np.array([r0 / r * ftlue_density_fourier(n, alpha, v * r0 / r) for v in x]))
    if cfg.seed is not None and "draws" in cfg.echo:
        if x.size < 2:
            raise ConfigError("grid", "Monte Carlo column needs at least 2 grid points")
        h = (x[-1] - x[0]) / (x.size - 1)
        hist = histogram(sample_batch(spec, cfg.seed, cfg.draws, cfg.threads), (x[0] - h / 2, x[-1] + h / 2), x.size)
        cols.append("monte_carlo")
        columns.append(hist.density())
    c = _trace_unit(cfg)
    cols.append("mp_density")
    columns.append(n * c * np.atleast_1d(mp_density(c * x)))
    return cols, [[float(x[i])] + [float(col[i]) for col in columns] for i in range(x.size)], notes


def _run_kernel(cfg):
    ctx = KernelContext(cfg.n, cfg.alpha, cfg.param)
    x = _grid(cfg)
    y = x if cfg.y is None else np.full_like(x, cfg.y)
    k = np.atleast_1d(kernel_cd(ctx, x, y))
    return ["x", "y", "kernel"], [[float(a), float(b), float(v)] for a, b, v in zip(x, y, k)]


def _run_converge(cfg):
    regime = Regime(cfg.regime, cfg.u if cfg.regime == "bulk" else None)
    window = _grid(cfg) if "grid" in cfg.echo else None
    rows = []
    for n in cfg.ns:
        row = kernel_convergence(regime, n, cfg.alpha, window)
        rows.append([n, row.sup_error, row.points_checked])
    return ["n", "sup_error", "points_checked"], rows


def _run_entropy(cfg):
    spec = EnsembleSpec.fixed(cfg.n, cfg.m, 1.0)
    avg = page_average(sample_batch(spec, cfg.seed, cfg.draws, cfg.threads))
    exact = page_exact(cfg.n, int(cfg.m)) if float(cfg.m).is_integer() else math.nan
    row = [cfg.n, cfg.m, cfg.draws, avg.mean, avg.std_error, avg.paper_approx]
    cols = ["n", "m", "draws", "mean", "std_error", "approx"]
    if math.isfinite(exact):
        cols.append("page_exact")
        row.append(exact)
    return cols, [row]


def _run_verify(cfg):
    from .verification import run_criteria

    rows = []
    failed = []
    for res in run_criteria(cfg.criteria):
        print(res.line(), file=sys.stderr, flush=True)
        # timings go to stderr only so the table stays byte-stable
        rows.append([res.number, int(res.passed)])
        if not res.passed:
            failed.append(res)
    return ["criterion", "passed"], rows, failed


def run(cfg: ExperimentConfig) -> tuple[ResultTable, list]:
    t0 = time.perf_counter()
    failed = []
    notes = {}
    if cfg.command == "verify":
        cols, rows, failed = _run_verify(cfg)
    else:
        out = {
            "sample": _run_sample,
            "density": _run_density,
            "kernel": _run_kernel,
            "converge": _run_converge,
            "entropy": _run_entropy,
        }[cfg.command](cfg)
        cols, rows = out[:2]
        notes = out[2] if len(out) > 2 else {}
    meta = {"command": cfg.command}
    meta.update({k: cfg.echo[k] for k in sorted(cfg.echo) if k not in ("out", "threads")})
    meta["seed"] = "" if cfg.seed is None else str(cfg.seed)
    meta["version"] = __version__
    meta.update({f"note_{k}": v for k, v in notes.items()})
    if cfg.wall_time:
        meta["wall_time"] = f"{time.perf_counter() - t0:.3f}"
    table = ResultTable(cols, rows, meta)
    table.check_finite()
    return table, failed


def _parser():
    p = argparse.ArgumentParser(prog="restricted-lue", description="LUE / fixed-trace / bounded-trace experiments")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "sample": "eigenvalue draws, one row per draw",
        "density": "exact one-point densities on a grid",
        "kernel": "finite-N kernel values on a grid",
        "converge": "kernel-limit sup errors across an N ladder",
        "verify": "run the acceptance checks",
        "entropy": "Monte Carlo mean entanglement entropy",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, help=helps[name], description=helps[name])
        sp.add_argument("--config", help="flat key=value file")
        sp.add_argument("--n", help="matrix size N")
        sp.add_argument("--m", help="second dimension M (alpha = M - N)")
        sp.add_argument("--alpha", help="alpha, alternative to --m")
        sp.add_argument("--constraint", help="free, fixed or bounded")
        sp.add_argument("--param", help="scale (free) or trace r (fixed/bounded)")
        sp.add_argument("--seed", help="64-bit seed (mandatory for sampling)")
        sp.add_argument("--draws", help="number of draws")
        sp.add_argument("--grid", help="lo,hi,points")
        sp.add_argument("--out", help="output file (default stdout)")
        sp.add_argument("--format", help="csv or json")
        sp.add_argument("--threads", help="worker threads (default: all cores)")
        sp.add_argument("--y", help="kernel: fixed second argument")
        sp.add_argument("--regime", help="converge: bulk, soft or hard")
        sp.add_argument("--u", help="converge: bulk point in (0, 1)")
        sp.add_argument("--ns", help="converge: comma-separated N ladder")
        sp.add_argument("--criteria", help="verify: comma-separated criterion numbers")
        sp.add_argument("--wall-time", action="store_true", help="record wall time (breaks byte stability)")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        raw = read_config_file(args.config) if args.config else {}
        raw.update({k: v for k, v in vars(args).items() if k in KEYS and v is not None})
        cfg = build_config(args.command, raw, args.wall_time)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        table, failed = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, RangeError, ContractError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = to_json(table) if cfg.format == "json" else to_csv(table)
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if failed:
        for res in failed:
            print(f"check failed: {res.line()}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
