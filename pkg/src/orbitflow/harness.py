"""Monte Carlo orchestration, power-law fits and golden-table regression."""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

from .ensemble import EnsembleSpec, sample_field
from .incidence import gamma_matrix, incidence_sum, triad_counts, weighted_incidence
from .lattice import LatticeIndex, burnside_total, enumerate_lattice
from .transfer import stretch_diagnostics, triad_table

logger = logging.getLogger(__name__)

THREADS_ENV = "ORBITFLOW_THREADS"
DIAGNOSTIC_COLUMNS = ("rho_v", "rho_abs_v", "inf_norm_v", "nu_c_star")


def thread_count(n_jobs: int | None = None) -> int:
    """Worker count: explicit argument, else ``ORBITFLOW_THREADS``, else the CPU count."""
    if n_jobs is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                n_jobs = int(env)
            except ValueError:
                raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        else:
            n_jobs = os.cpu_count() or 1
    if n_jobs < 1:
        raise ValueError("thread count must be >= 1")
    return n_jobs


@dataclass(frozen=True)
class McRow:
    N: int
    samples: int
    mean_rho_v: float
    stderr_rho_v: float
    mean_nu_c_star: float
    stderr_nu_c_star: float
    mean_rho_abs_v: float
    mean_inf_norm_v: float
    cancellation_ratio: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    n_range: tuple[int, int]


@dataclass
class McSummary:
    rows: list[McRow]
    fits: dict[str, PowerLawFit] = field(default_factory=dict)

    def row(self, N: int) -> McRow:
        for r in self.rows:
            if r.N == N:
                return r
        raise KeyError(N)


def sample_diagnostics(
    index: LatticeIndex,
    spec: EnsembleSpec,
    sample_ids: Sequence[int],
    n_jobs: int | None = None,
    nonlinearity: str = "gradient",
) -> np.ndarray:
    """Per-sample diagnostics, shape ``(len(sample_ids), 4)``, rows in ``sample_ids`` order."""
    ids = [int(s) for s in sample_ids]
    triad_table(index)  # build once before threads share it

    def one(sid: int) -> tuple[float, ...]:
        d = stretch_diagnostics(sample_field(spec, index, sid), nonlinearity=nonlinearity)
        return d.rho_v, d.rho_abs_v, d.inf_norm_v, d.nu_c_star

    workers = thread_count(n_jobs)
    if workers == 1 or len(ids) < 2:
        out = [one(s) for s in ids]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(one, ids))
    return np.asarray(out, dtype=np.float64).reshape(len(ids), len(DIAGNOSTIC_COLUMNS))


def summarize(N: int, diag: np.ndarray) -> McRow:
    n = diag.shape[0]
    if n < 2:
        raise ValueError("at least 2 samples are needed for a standard error")
    mean = diag.mean(axis=0)
    se = diag.std(axis=0, ddof=1) / math.sqrt(n)
    return McRow(
        N=N,
        samples=n,
        mean_rho_v=float(mean[0]),
        stderr_rho_v=float(se[0]),
        mean_nu_c_star=float(mean[3]),
        stderr_nu_c_star=float(se[3]),
        mean_rho_abs_v=float(mean[1]),
        mean_inf_norm_v=float(mean[2]),
        cancellation_ratio=float(mean[0] / mean[1]) if mean[1] > 0 else float("nan"),
    )


def monte_carlo(
    index: LatticeIndex,
    spec: EnsembleSpec,
    samples: int,
    n_jobs: int | None = None,
    nonlinearity: str = "gradient",
    first_sample: int = 0,
) -> McRow:
    """Aggregate diagnostics over sample ids ``first_sample .. first_sample + samples - 1``.

    Samples are keyed by id and reduced in id order, so the result does not depend on
    the thread count.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    ids = range(first_sample, first_sample + samples)
    diag = sample_diagnostics(index, spec, ids, n_jobs, nonlinearity)
    return summarize(index.N, diag)


def monte_carlo_table(
    spec: EnsembleSpec,
    samples_by_n: dict[int, int],
    truncation: str = "cube",
    n_jobs: int | None = None,
    nonlinearity: str = "gradient",
    fit_range: tuple[int, int] | None = None,
) -> McSummary:
    rows = []
    for N in sorted(samples_by_n):
        ix = enumerate_lattice(N, truncation)
        rows.append(monte_carlo(ix, spec, samples_by_n[N], n_jobs, nonlinearity))
        logger.info("N=%d mean rho=%.4g", N, rows[-1].mean_rho_v)
    summary = McSummary(rows)
    if fit_range is not None:
        lo, hi = fit_range
        pts = [(r.N, r.mean_rho_v) for r in rows if lo <= r.N <= hi]
        if len(pts) >= 2:
            summary.fits["rho_v"] = power_law_fit(pts)
    return summary


def power_law_fit(points: Iterable[tuple[float, float]]) -> PowerLawFit:
    """OLS of ``log value`` on ``log N``; returns ``value ~ prefactor * N**exponent``."""
    pts = [(float(n), float(v)) for n, v in points]
    if len(pts) < 2:
        raise ValueError("power-law fit needs at least 2 points")
    if any(n <= 0 or v <= 0 for n, v in pts):
        raise ValueError("power-law fit needs positive N and values")
    x = np.log([n for n, _ in pts])
    y = np.log([v for _, v in pts])
    if np.ptp(x) == 0:
        raise ValueError("power-law fit needs at least two distinct N")
    xm, ym = x.mean(), y.mean()
    slope = float(np.sum((x - xm) * (y - ym)) / np.sum((x - xm) ** 2))
    intercept = float(ym - slope * xm)
    ns = [int(n) for n, _ in pts]
    return PowerLawFit(slope, math.exp(intercept), (min(ns), max(ns)))


@dataclass(frozen=True)
class PlateauReport:
    s: float
    M: float
    rows: list[tuple[int, float, float]]  # (N, mean inf norm, stderr)
    fit: PowerLawFit

    @property
    def max_min_ratio(self) -> float:
        vals = [m for _, m, _ in self.rows]
        return max(vals) / min(vals)

    @property
    def growth_bound(self) -> float | None:
        """Admissible growth exponent ``6 - 3s`` for ``3/2 < s <= 2``; ``None`` above 2."""
        return 6.0 - 3.0 * self.s if self.s <= 2 else None


def sobolev_plateau_check(
    s: float,
    M: float = 1.0,
    N_range: Iterable[int] = range(2, 7),
    samples: int = 200,
    seed: int = 0,
    n_jobs: int | None = None,
    nonlinearity: str = "gradient",
) -> PlateauReport:
    """Mean ``||V_N||_inf`` over Sobolev-envelope fields for each N, with a log-log fit."""
    spec = EnsembleSpec(kind="sobolev", seed=seed, s=s, M=M)
    rows = []
    for N in N_range:
        ix = enumerate_lattice(N)
        diag = sample_diagnostics(ix, spec, range(samples), n_jobs, nonlinearity)[:, 2]
        rows.append((N, float(diag.mean()), float(diag.std(ddof=1) / math.sqrt(samples))))
    fit = power_law_fit([(n, m) for n, m, _ in rows])
    return PlateauReport(s=s, M=M, rows=rows, fit=fit)


# Golden tables


def load_golden() -> dict:
    text = resources.files("orbitflow").joinpath("data/golden.json").read_text(encoding="utf-8")
    return json.loads(text)


@dataclass(frozen=True)
class Mismatch:
    table: str
    row: int
    column: str
    expected: float
    actual: float

    def __str__(self) -> str:
        return f"{self.table} N={self.row} {self.column}: expected {self.expected}, got {self.actual!r}"


@dataclass
class GoldenReport:
    checked: int = 0
    mismatches: list[Mismatch] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def compare(self, table: str, row: int, column: str, expected, actual, tol: float = 0.0) -> None:
        self.checked += 1
        if isinstance(expected, (int, np.integer)) and tol == 0:
            good = int(actual) == int(expected)
        else:
            good = abs(float(actual) - float(expected)) <= tol + 1e-12
        if not good:
            self.mismatches.append(Mismatch(table, row, column, expected, actual))


# S in the cubic-vs-spherical table is printed to one decimal, so it is compared at
# rounding agreement; the two-decimal columns use the table tolerance.
_ONE_DECIMAL_TOL = 0.05


def finite_n_row(N: int) -> dict:
    ix = enumerate_lattice(N)
    T = triad_counts(ix)
    return {
        "n_modes": ix.n_modes,
        "n_orb": ix.n_orb,
        "n_sh": ix.n_sh,
        "max_T": int(T.max()),
        "sum_T": int(T.sum()),
    }


def golden_tables(golden: dict | None = None, include_fits: bool = True) -> GoldenReport:
    """Recompute every deterministic cell of the exact tables and diff them."""
    g = golden or load_golden()
    rep = GoldenReport()

    t1 = g["finite_n"]
    for row in t1["rows"]:
        got = finite_n_row(row[0])
        for col, exp in zip(t1["columns"][1:], row[1:]):
            rep.compare("finite_n", row[0], col, exp, got[col])

    for n, exp in g["burnside_orbit_totals"]["values"].items():
        rep.compare("burnside_orbit_totals", int(n), "n_orb", exp, burnside_total(enumerate_lattice(int(n))))

    inc = g["incidence"]
    s_vals = {}
    for N, S, ratio in inc["rows"]:
        ix = enumerate_lattice(N)
        res = incidence_sum(gamma_matrix(ix), ix)
        s_vals[N] = res.value
        rep.compare("incidence", N, "S", S, res.value, inc["tolerance"])
        rep.compare("incidence", N, "S_over_N3", ratio, res.value / N ** 3, inc["tolerance"])
        if N >= inc["argmax_rep_from_N"]:
            rep.compare("incidence", N, "argmax_size", inc["argmax_size"], res.size)
            rep.compare("incidence", N, "argmax_rep", 1, int(tuple(res.rep) == tuple(inc["argmax_rep"])))
    ratios = [s_vals[N] / N ** 3 for N in sorted(s_vals)]
    rep.compare("incidence", 0, "S_over_N3_monotone", 1, int(all(a > b for a, b in zip(ratios, ratios[1:]))))

    cvs = g["cubic_vs_spherical"]
    computed: dict[str, dict[int, dict]] = {}
    for trunc, key in (("cube", "cube"), ("sphere", "sphere")):
        computed[key] = {}
        for N, S, S3, Iw, Iw2 in cvs[key]:
            ix = enumerate_lattice(N, trunc)
            gam = gamma_matrix(ix)
            s_val = incidence_sum(gam, ix).value
            iw = weighted_incidence(gam, ix).value
            computed[key][N] = {"S": s_val, "I_w": iw}
            table = f"cubic_vs_spherical/{key}"
            rep.compare(table, N, "S", S, s_val, _ONE_DECIMAL_TOL)
            rep.compare(table, N, "S_over_N3", S3, s_val / N ** 3, cvs["tolerance"])
            rep.compare(table, N, "I_w", Iw, iw, cvs["tolerance"])
            rep.compare(table, N, "I_w_over_N2", Iw2, iw / N ** 2, cvs["tolerance"])

    if include_fits:
        lo, hi = inc["fit_range"]
        fit = power_law_fit([(N, s_vals[N]) for N in range(lo, hi + 1)])
        rep.compare("incidence", 0, "fit_exponent", inc["fit_exponent"], fit.exponent, 0.05)
        lo, hi = cvs["fit_range"]
        for key, cols in cvs["fit_exponents"].items():
            for col, exp in cols.items():
                fit = power_law_fit([(N, computed[key][N][col]) for N in range(lo, hi + 1)])
                rep.compare(f"cubic_vs_spherical/{key}", 0, f"fit_{col}", exp, fit.exponent, cvs["fit_tolerance"])
    return rep
