"""Random GAD generators, perturbation sweeps and error statistics."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .apolarity import ContractError, apolar_norm
from .decomposer import DecomposeOptions, GADError, gad_decompose
from .invsystems import GAD, GADTerm, gad_rank, reconstruct
from .polycore import LinearForm, Poly, random_homogeneous

log = logging.getLogger(__name__)

CSV_HEADER = ("eps", "median", "min", "max", "failures")


def default_eps_grid(min_exp: float = -14.0, max_exp: float = 0.0, step: float = 0.5) -> tuple[float, ...]:
    count = int(round((max_exp - min_exp) / step)) + 1
    return tuple(10.0 ** (min_exp + i * step) for i in range(count))


@dataclass(frozen=True)
class BenchConfig:
    n: int
    d: int
    ks: tuple[int, ...]
    eps_grid: tuple[float, ...] = field(default_factory=default_eps_grid)
    trials: int = 10
    seed: int = 0
    bases: int = 1
    auto: bool = False  # let the decomposer find rank and clusters itself
    min_separation: float = 0.1
    options: DecomposeOptions = field(default_factory=DecomposeOptions)
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "ks", tuple(int(k) for k in self.ks))
        object.__setattr__(self, "eps_grid", tuple(float(e) for e in self.eps_grid))
        if self.trials < 1 or self.bases < 1:
            raise ContractError("trials and bases must be positive")
        if not self.ks or any(k < 0 or k > self.d for k in self.ks):
            raise ContractError(f"weight degrees {self.ks} must lie in [0, {self.d}]")
        grid = np.array(self.eps_grid)
        if grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
            raise ContractError("eps grid must be positive and strictly increasing")

    def to_json(self) -> str:
        body = asdict(self)
        body["ks"] = list(self.ks)
        body["eps_grid"] = list(self.eps_grid)
        return json.dumps(body, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> BenchConfig:
        obj = json.loads(text)
        if "eps_grid" not in obj and {"eps_min_exp", "eps_max_exp"} <= obj.keys():
            obj["eps_grid"] = default_eps_grid(obj.pop("eps_min_exp"), obj.pop("eps_max_exp"), obj.pop("eps_step", 0.5))
        opts = obj.pop("options", None)
        cfg = cls(**obj)
        if opts:
            cfg = replace(cfg, options=DecomposeOptions(**opts))
        return cfg


@dataclass(frozen=True)
class BenchRow:
    eps: float
    median: float
    min: float
    max: float
    failures: int


def random_gad(
    n: int, d: int, ks: Sequence[int], rng: np.random.Generator, min_separation: float = 0.1
) -> GAD:
    """Weights with standard normal coefficients, supports ``x0 + sum xi_j x_j`` with normal ``xi``.

    Supports are redrawn until every pair of normalized supports is at least
    ``min_separation`` apart.
    """
    if any(k > d for k in ks):
        raise ContractError("a weight degree exceeds d")
    while True:
        xis = np.column_stack([np.ones(len(ks)), rng.standard_normal((len(ks), n))])
        units = xis / np.linalg.norm(xis, axis=1, keepdims=True)
        gaps = [np.linalg.norm(units[i] - units[j]) for i in range(len(ks)) for j in range(i)]
        if min(gaps, default=np.inf) >= min_separation:
            break
    terms = [
        GADTerm(random_homogeneous(n + 1, k, rng), LinearForm(tuple(xi))) for k, xi in zip(ks, xis)
    ]
    return GAD(n, d, terms)


def perturb(f0: Poly, eps: float, rng: np.random.Generator) -> Poly:
    """``f0 + eps * R`` with ``R`` a random form of unit apolar norm."""
    if eps < 0:
        raise ContractError("eps must be nonnegative")
    if eps == 0:
        return f0
    R = random_homogeneous(f0.nvars, f0.degree, rng)
    return f0 + R * (eps / apolar_norm(R))


def trial_rng(seed: int, base: int, level: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, base, level, trial]))


def base_gads(cfg: BenchConfig) -> list[GAD]:
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 2**31 - 1]))
    return [random_gad(cfg.n, cfg.d, cfg.ks, rng, cfg.min_separation) for _ in range(cfg.bases)]


def decompose_options(cfg: BenchConfig, g: GAD) -> DecomposeOptions:
    """Feed the generator's rank and cluster count; noisy blocks then get nu = block size."""
    if cfg.auto:
        return cfg.options
    return replace(cfg.options, forced_rank=gad_rank(g), forced_clusters=len(g.terms), nil_fallback=True)


def run_trial(f0: Poly, eps: float, opts: DecomposeOptions, rng: np.random.Generator) -> float:
    """Relative apolar reconstruction error of one perturbed decomposition; NaN on failure."""
    f = perturb(f0, eps, rng)
    try:
        rep = gad_decompose(f, opts, rng)
    except (GADError, ContractError, np.linalg.LinAlgError) as exc:
        log.debug("trial failed at eps=%g: %s", eps, exc)
        return math.nan
    return rep.relative_error if math.isfinite(rep.relative_error) else math.nan


def _level(args) -> list[float]:
    cfg, bases, level = args
    out = []
    for b, g in enumerate(bases):
        f0 = reconstruct(g)
        opts = decompose_options(cfg, g)
        for t in range(cfg.trials):
            out.append(run_trial(f0, cfg.eps_grid[level], opts, trial_rng(cfg.seed, b, level, t)))
    return out


def summarize(eps: float, deltas: Sequence[float]) -> BenchRow:
    vals = np.array([x for x in deltas if math.isfinite(x)])
    failures = len(deltas) - vals.size
    if vals.size == 0:
        return BenchRow(eps, math.nan, math.nan, math.nan, failures)
    return BenchRow(eps, float(np.median(vals)), float(vals.min()), float(vals.max()), failures)


def sweep(cfg: BenchConfig) -> list[BenchRow]:
    bases = base_gads(cfg)
    jobs = [(cfg, bases, i) for i in range(len(cfg.eps_grid))]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_level, jobs))
    else:
        results = [_level(j) for j in jobs]
    return [summarize(eps, deltas) for eps, deltas in zip(cfg.eps_grid, results)]


def loglog_slope(rows: Sequence[BenchRow], lo: float, hi: float) -> float:
    """Least-squares slope of ``log10 median`` against ``log10 eps`` over ``[lo, hi]``."""
    pts = [(r.eps, r.median) for r in rows if lo <= r.eps <= hi and math.isfinite(r.median) and r.median > 0]
    if len(pts) < 2:
        raise ContractError("fewer than two usable rows in the fit window")
    x, y = np.log10(np.array(pts)).T
    return float(np.polyfit(x, y, 1)[0])


def _fmt(x: float) -> str:
    return "nan" if not math.isfinite(x) else f"{x:.16e}"


def rows_to_csv(rows: Sequence[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_fmt(r.eps), _fmt(r.median), _fmt(r.min), _fmt(r.max), r.failures])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[BenchRow]:
    reader = csv.DictReader(io.StringIO(text))
    return [
        BenchRow(float(r["eps"]), float(r["median"]), float(r["min"]), float(r["max"]), int(r["failures"]))
        for r in reader
    ]


def rows_to_svg(rows: Sequence[BenchRow], title: str = "") -> str:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    eps = np.array([r.eps for r in rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, style in (("median", "-o"), ("min", "--"), ("max", ":")):
        ys = np.array([getattr(r, name) for r in rows])
        ok = np.isfinite(ys) & (ys > 0)
        ax.loglog(eps[ok], ys[ok], style, label=name, markersize=3)
    ax.set_xlabel("eps")
    ax.set_ylabel("relative apolar error")
    if title:
        ax.set_title(title)
    ax.legend()
    ax.grid(True, which="major", alpha=0.3)
    buf = io.StringIO()
    with matplotlib.rc_context({"svg.hashsalt": "gadkit", "svg.fonttype": "none"}):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def emit(rows: Sequence[BenchRow], csv_path: str | Path | None = None, svg_path: str | Path | None = None, title: str = "") -> None:
    if not rows:
        raise ContractError("no rows to emit")
    if csv_path is not None:
        Path(csv_path).write_text(rows_to_csv(rows))
    if svg_path is not None:
        Path(svg_path).write_text(rows_to_svg(rows, title))
