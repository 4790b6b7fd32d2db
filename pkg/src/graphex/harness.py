"""Monte Carlo validation harness.

Every experiment draws replicate graphs with per-replicate seeds derived from
one base seed through the splittable RNG, so results do not depend on
scheduling and the optional thread pool changes only wall time. Reports are
plain dataclasses with ``to_dict`` (JSON) and ``csv_rows`` (flat CSV) views;
serialising the same report twice gives byte-identical output.

Statistical conventions: z = (sample mean - theory) / (sd / sqrt(R)) with the
sample sd using ddof=1. Zero sample variance needs care, because the sd
yardstick collapses. Three cases:

* mean equals theory exactly (e.g. a null kernel, theory 0, every draw 0):
  z = 0.
* every draw is 0 but the theory value is positive: the statistics here are
  counts of rare events, so the total over R replicates is approximately
  Poisson with mean R * theory, and the score statistic for observing zero
  is z = -sqrt(R * theory). A tiny expectation (say 1e-6 at R = 500) then
  passes, as it should: zero observations is the overwhelmingly likely
  outcome of a correct sampler, while a wrongly large theory value still
  fails at the same 4-sigma scale.
* every draw equals the same nonzero value that differs from theory:
  z = +-inf (deterministic disagreement).

With the default z threshold of 4 and a few dozen rows, the family-wise
false-alarm probability under correct theory stays below half a percent.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import ks_2samp

from . import rng as rngmod
from . import theory
from .graphstats import degrees as _degrees
from .graphstats import largest_component
from .model import Graphex
from .sampler import SamplerConfig, restrict, sample_keg

__all__ = [
    "ConnectivityReport",
    "DegreeLawReport",
    "HarnessError",
    "ProjectivityReport",
    "StatRow",
    "ValidationReport",
    "connectivity_experiment",
    "degdist_experiment",
    "projectivity_test",
    "validate_expectations",
    "write_csv",
    "write_json",
]

DEFAULT_Z_CRIT = 4.0
DEFAULT_P_FLOOR = 1e-3
MIN_REPLICATES = 30


class HarnessError(ValueError):
    pass


def _child_seed(seed: int, *path: int) -> int:
    return int(rngmod.derive_key(seed, *path)[0])


def _map_replicates(fn, reps: int, threads: int | None):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, range(reps)))
    return [fn(r) for r in range(reps)]


def _check_reps(reps: int) -> None:
    if not (isinstance(reps, int) and reps >= MIN_REPLICATES):
        raise HarnessError(f"need at least {MIN_REPLICATES} replicates, got {reps!r}")


def _check_grid(nus) -> tuple[float, ...]:
    grid = tuple(float(v) for v in nus)
    if not grid or any(not (math.isfinite(v) and v > 0) for v in grid):
        raise HarnessError(f"the nu grid must be nonempty with positive entries, got {nus!r}")
    return grid


# ---------------------------------------------------------------------------
# Serialization helpers
# ---------------------------------------------------------------------------

def write_json(data: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(data, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, fieldnames, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(fieldnames) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[name]) for name in fieldnames) + "\n")


# ---------------------------------------------------------------------------
# Expectation validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StatRow:
    statistic: str
    nu: float
    replicates: int
    mean: float
    sd: float
    se: float
    theory: float
    z: float
    ok: bool

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic, "nu": self.nu,
            "replicates": self.replicates, "mean": self.mean, "sd": self.sd,
            "se": self.se, "theory": self.theory, "z": self.z,
            "verdict": "pass" if self.ok else "fail",
        }


@dataclass(frozen=True)
class ValidationReport:
    rows: tuple
    z_crit: float
    seed: int
    graphex: dict

    @property
    def all_ok(self) -> bool:
        return all(r.ok for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "graphex": self.graphex, "seed": self.seed, "z_crit": self.z_crit,
            "rows": [r.to_dict() for r in self.rows], "all_ok": self.all_ok,
        }

    CSV_FIELDS = ("statistic", "nu", "replicates", "mean", "sd", "se",
                  "theory", "z", "verdict")

    def csv_rows(self):
        return self.CSV_FIELDS, [r.to_dict() for r in self.rows]


def _parse_stat(name: str):
    """Returns (label, per-graph extractor, theory evaluator)."""
    if name == "edges":
        return name, lambda gr, deg: gr.n_edges, \
            lambda g, nu: theory.expected_edges(g, nu).value
    if name == "vertices":
        return name, lambda gr, deg: int(deg.size), \
            lambda g, nu: theory.expected_vertices(g, nu).value
    if name.startswith("degree_"):
        try:
            k = int(name.split("_", 1)[1])
        except ValueError:
            k = 0
        if k >= 1:
            return name, lambda gr, deg, k=k: int(np.count_nonzero(deg == k)), \
                lambda g, nu, k=k: theory.expected_degree_count(g, nu, k).value
    raise HarnessError(f"unknown statistic {name!r}; expected edges, vertices "
                       "or degree_<k> with k >= 1")


def validate_expectations(g: Graphex, nus, reps: int, seed: int,
                          stats=("edges", "vertices", "degree_1", "degree_2"),
                          eps: float = 1e-3, z_crit: float = DEFAULT_Z_CRIT,
                          threads: int | None = None) -> ValidationReport:
    """Compare replicate means of count statistics against the theory engine.

    All statistics at one nu are read off the same R graphs.
    """
    _check_reps(reps)
    grid = _check_grid(nus)
    parsed = [_parse_stat(s) for s in stats]

    rows = []
    for i_nu, nu in enumerate(grid):
        def one(rep: int, nu=nu, i_nu=i_nu):
            cfg = SamplerConfig(nu=nu, seed=_child_seed(seed, i_nu, rep), eps=eps)
            graph = sample_keg(g, cfg)
            _, deg = _degrees(graph.edges)
            return [float(extract(graph, deg)) for _, extract, _ in parsed]

        samples = np.asarray(_map_replicates(one, reps, threads))
        for j, (label, _, theory_fn) in enumerate(parsed):
            values = samples[:, j]
            mean = float(values.mean())
            sd = float(values.std(ddof=1))
            se = sd / math.sqrt(reps)
            expected = float(theory_fn(g, nu))
            if sd == 0.0:
                if abs(mean - expected) <= 1e-12 * max(1.0, abs(expected)):
                    z = 0.0
                elif mean == 0.0 and expected > 0.0:
                    z = -math.sqrt(reps * expected)
                else:
                    z = math.copysign(math.inf, mean - expected)
            else:
                z = (mean - expected) / se
            rows.append(StatRow(label, nu, reps, mean, sd, se, expected, z,
                                abs(z) <= z_crit))
    return ValidationReport(tuple(rows), z_crit, seed, dict(g.spec))


# ---------------------------------------------------------------------------
# Degree-law experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DegreeLawRow:
    nu: float
    k: int
    replicates: int
    rejected: int
    empirical_ccdf: float
    theory_ccdf: float
    empirical_pmf: float
    theory_pmf: float

    @property
    def gap(self) -> float:
        return abs(self.empirical_ccdf - self.theory_ccdf)

    def to_dict(self) -> dict:
        return {
            "nu": self.nu, "k": self.k, "replicates": self.replicates,
            "rejected": self.rejected,
            "empirical_ccdf": self.empirical_ccdf, "theory_ccdf": self.theory_ccdf,
            "empirical_pmf": self.empirical_pmf, "theory_pmf": self.theory_pmf,
            "gap": self.gap,
        }


@dataclass(frozen=True)
class DegreeLawReport:
    rows: tuple
    seed: int
    graphex: dict

    @property
    def gaps_shrink(self) -> bool:
        if len(self.rows) < 2:
            return True
        return self.rows[-1].gap < self.rows[0].gap

    @property
    def ok(self) -> bool:
        return self.gaps_shrink

    def to_dict(self) -> dict:
        return {
            "graphex": self.graphex, "seed": self.seed,
            "rows": [r.to_dict() for r in self.rows],
            "gaps_shrink": self.gaps_shrink,
            "ok": self.ok,
        }

    CSV_FIELDS = ("nu", "k", "replicates", "rejected", "empirical_ccdf",
                  "theory_ccdf", "empirical_pmf", "theory_pmf", "gap")

    def csv_rows(self):
        return self.CSV_FIELDS, [r.to_dict() for r in self.rows]


def degdist_experiment(g: Graphex, nus, reps: int, seed: int, k: int | None = None,
                       beta: float | None = None, eps: float = 1e-3,
                       threads: int | None = None) -> DegreeLawReport:
    """Empirical degree law of a random visible vertex vs. the theory ratio.

    Per graph, the fraction of vertices with degree > k (and exactly k) is
    recorded; fractions are averaged over replicates, so each graph counts
    once regardless of its size. k is fixed, or per-nu as floor(nu^beta).
    Graphs with no visible vertices are excluded and counted as rejected.
    """
    _check_reps(reps)
    grid = _check_grid(nus)
    if (k is None) == (beta is None):
        raise HarnessError("exactly one of k and beta must be given")
    if k is not None and not (isinstance(k, int) and k >= 1):
        raise HarnessError(f"k must be an integer >= 1, got {k!r}")
    if beta is not None and not (0.0 < beta < 1.0):
        raise HarnessError(f"beta must lie in (0, 1), got {beta!r}")

    rows = []
    for i_nu, nu in enumerate(grid):
        k_nu = k if k is not None else max(1, int(math.floor(nu ** beta)))

        def one(rep: int, nu=nu, i_nu=i_nu, k_nu=k_nu):
            cfg = SamplerConfig(nu=nu, seed=_child_seed(seed, i_nu, rep), eps=eps)
            graph = sample_keg(g, cfg)
            _, deg = _degrees(graph.edges)
            if deg.size == 0:
                return None
            n = deg.size
            return (float(np.count_nonzero(deg > k_nu)) / n,
                    float(np.count_nonzero(deg == k_nu)) / n)

        results = [r for r in _map_replicates(one, reps, threads)]
        kept = [r for r in results if r is not None]
        rejected = reps - len(kept)
        if not kept:
            raise HarnessError(f"every replicate at nu = {nu} produced an empty graph; "
                               "the degree experiment is undefined")
        arr = np.asarray(kept)
        rows.append(DegreeLawRow(
            nu=nu, k=k_nu, replicates=reps, rejected=rejected,
            empirical_ccdf=float(arr[:, 0].mean()),
            theory_ccdf=theory.degree_ccdf(g, nu, k_nu),
            empirical_pmf=float(arr[:, 1].mean()),
            theory_pmf=theory.degree_pmf(g, nu, k_nu),
        ))
    return DegreeLawReport(tuple(rows), seed, dict(g.spec))


# ---------------------------------------------------------------------------
# Giant-component experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConnectivityRow:
    nu: float
    replicates: int
    rejected: int
    mean_fraction: float

    def to_dict(self) -> dict:
        return {"nu": self.nu, "replicates": self.replicates,
                "rejected": self.rejected, "mean_fraction": self.mean_fraction}


@dataclass(frozen=True)
class ConnectivityReport:
    rows: tuple
    threshold: float
    seed: int
    graphex: dict

    @property
    def nondecreasing(self) -> bool:
        fractions = [r.mean_fraction for r in self.rows]
        return all(b >= a for a, b in zip(fractions, fractions[1:]))

    @property
    def final_ok(self) -> bool:
        return self.rows[-1].mean_fraction >= self.threshold

    @property
    def ok(self) -> bool:
        return self.nondecreasing and self.final_ok

    def to_dict(self) -> dict:
        return {
            "graphex": self.graphex, "seed": self.seed, "threshold": self.threshold,
            "rows": [r.to_dict() for r in self.rows],
            "nondecreasing": self.nondecreasing, "final_ok": self.final_ok,
            "ok": self.ok,
        }

    CSV_FIELDS = ("nu", "replicates", "rejected", "mean_fraction")

    def csv_rows(self):
        return self.CSV_FIELDS, [r.to_dict() for r in self.rows]


def connectivity_experiment(g: Graphex, nus, reps: int, seed: int,
                            eps: float = 1e-3, threshold: float = 0.95,
                            threads: int | None = None) -> ConnectivityReport:
    """Mean largest-component fraction across a nu grid, for separable kernels."""
    _check_reps(reps)
    grid = _check_grid(nus)
    if g.separable_f is None:
        raise HarnessError("the connectivity experiment expects a separable kernel "
                           "W(x, y) = f(x) f(y)")

    rows = []
    for i_nu, nu in enumerate(grid):
        def one(rep: int, nu=nu, i_nu=i_nu):
            cfg = SamplerConfig(nu=nu, seed=_child_seed(seed, i_nu, rep), eps=eps)
            graph = sample_keg(g, cfg)
            if graph.n_vertices == 0:
                return None
            return largest_component(graph.edges)[1]

        results = _map_replicates(one, reps, threads)
        kept = [r for r in results if r is not None]
        rejected = reps - len(kept)
        if not kept:
            raise HarnessError(f"every replicate at nu = {nu} produced an empty graph; "
                               "is the kernel identically zero?")
        rows.append(ConnectivityRow(nu, reps, rejected, float(np.mean(kept))))
    return ConnectivityReport(tuple(rows), threshold, seed, dict(g.spec))


# ---------------------------------------------------------------------------
# Projectivity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProjectivityReport:
    nu: float
    replicates: int
    ks_statistic: float
    p_value: float
    p_floor: float
    seed: int
    graphex: dict

    @property
    def ok(self) -> bool:
        return self.p_value >= self.p_floor

    def to_dict(self) -> dict:
        return {
            "graphex": self.graphex, "seed": self.seed, "nu": self.nu,
            "replicates": self.replicates, "ks_statistic": self.ks_statistic,
            "p_value": self.p_value, "p_floor": self.p_floor, "ok": self.ok,
        }

    CSV_FIELDS = ("nu", "replicates", "ks_statistic", "p_value", "p_floor", "ok")

    def csv_rows(self):
        return self.CSV_FIELDS, [self.to_dict()]


def projectivity_test(g: Graphex, nu: float, reps: int, seed: int,
                      eps: float = 1e-3, p_floor: float = DEFAULT_P_FLOOR,
                      threads: int | None = None) -> ProjectivityReport:
    """KS test: edge counts of restrict(sample(2 nu), nu) vs. sample(nu).

    Under projectivity the two arms are identically distributed, so a tiny
    p-value flags a restriction or sampling defect. The asymptotic KS
    p-value is used; with integer-valued samples it is conservative.
    """
    _check_reps(reps)
    if not (math.isfinite(nu) and nu > 0):
        raise HarnessError(f"nu must be positive and finite, got {nu!r}")

    def one_restricted(rep: int):
        cfg = SamplerConfig(nu=2.0 * nu, seed=_child_seed(seed, 0, rep), eps=eps)
        return restrict(sample_keg(g, cfg), nu).n_edges

    def one_direct(rep: int):
        cfg = SamplerConfig(nu=nu, seed=_child_seed(seed, 1, rep), eps=eps)
        return sample_keg(g, cfg).n_edges

    arm_a = np.asarray(_map_replicates(one_restricted, reps, threads), dtype=float)
    arm_b = np.asarray(_map_replicates(one_direct, reps, threads), dtype=float)
    result = ks_2samp(arm_a, arm_b, method="asymp")
    return ProjectivityReport(
        nu=float(nu), replicates=reps, ks_statistic=float(result.statistic),
        p_value=float(result.pvalue), p_floor=p_floor, seed=seed,
        graphex=dict(g.spec),
    )
