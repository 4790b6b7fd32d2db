"""Sampling finite graphs from a graphex.

The generative process at truncation level nu:

1. Latent points (theta_i, x_i) form a unit-rate Poisson process on
   [0, nu] x [0, inf). Points with x beyond a computed cutoff theta_max
   almost never produce edges, so the process is simulated on
   [0, nu] x [0, theta_max], with theta_max chosen so that the expected
   number of missed edges is at most ``eps``.
2. Each unordered pair gets an edge with probability W(x_i, x_j),
   independently. Each point gets a self loop with probability W(x_i, x_i)
   when self edges are enabled.
3. Each point spawns Poisson(nu * S(x_i)) star leaves, each a fresh
   degree-one vertex.
4. Poisson(I * nu^2) isolated edges appear, each joining two fresh vertices.
5. A latent point is kept only if it is visible (degree >= 1). Labels
   theta are assigned lazily: visibility is independent of the labels, so
   drawing i.i.d. U(0, nu) labels for the kept vertices afterwards leaves
   the joint law unchanged and avoids storing labels for the (often vastly
   larger) invisible majority.

Pair sampling has two interchangeable implementations. The naive path flips
one coin per pair in vectorised blocks, which is exact but quadratic. When
the kernel factorises as W(x, y) = f(x) f(y), the fast path is used instead:

* points with f > 1/2 are few (f is integrable), and their pairs get direct
  coins;
* for every other pair, proposals are drawn as a Poisson number
  M ~ Poi(c0 * (sum f)^2 / 2) of ordered pairs with endpoints i.i.d.
  proportional to f, so each unordered pair {i, j} is proposed a
  Poi(c0 f_i f_j) number of times independently of all others. Discarding
  self pairs and already-covered heavy pairs, deduplicating, and accepting
  each proposed pair once with probability f_i f_j / (1 - exp(-c0 f_i f_j))
  yields the edge with probability exactly f_i f_j. The constant
  c0 = -ln(1/2) / (1/2) makes the acceptance probability peak at exactly 1
  when f_i f_j = 1/2, which is the largest product a non-heavy pair can
  reach, so the acceptance probability never exceeds 1.

Both paths produce the same distribution; a statistical equivalence test
lives in the test suite.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .model import Graphex, GraphexError

__all__ = [
    "PROV_ISOLATED",
    "PROV_KERNEL",
    "PROV_STAR",
    "SampledGraph",
    "SamplerConfig",
    "SamplerError",
    "choose_theta_max",
    "restrict",
    "sample_keg",
    "sample_planted_degrees",
]

PROV_KERNEL = 0
PROV_STAR = 1
PROV_ISOLATED = 2
PROV_NAMES = ("kernel", "star", "isolated")

_TAU = 0.5
_C0 = -math.log(1.0 - _TAU) / _TAU  # 1.3862943611...

# streams per graph draw: one per independent stage
_STREAM_LATENT = 0
_STREAM_PAIRS = 1
_STREAM_SELF = 2
_STREAM_STARS = 3
_STREAM_ISOLATED = 4
_STREAM_LABELS = 5
_STREAM_PLANTED = 6


class SamplerError(GraphexError):
    pass


class _out_stream:
    """Context manager over a path (opened/closed) or an existing stream
    (left open)."""

    def __init__(self, dest):
        self.dest = dest
        self.fh = None

    def __enter__(self):
        if hasattr(self.dest, "write"):
            return self.dest
        self.fh = open(self.dest, "w", encoding="utf-8", newline="")
        return self.fh

    def __exit__(self, *exc):
        if self.fh is not None:
            self.fh.close()
        return False


@dataclass(frozen=True)
class SamplerConfig:
    """Knobs for one graph draw.

    ``eps`` is the truncation budget: the expected number of edges lost to
    the latent-space cutoff is at most eps (kernel and star edges; missed
    self loops are additionally possible but are of strictly lower order
    for any kernel whose diagonal decays at least as fast as its marginal).
    """

    nu: float
    seed: int
    eps: float = 1e-3
    theta_max: float | None = None
    retain_latent: bool = False
    use_fast_path: bool = True
    max_latent_points: float = 5e7
    max_pair_coins: float = 2e8
    max_proposals: float = 3e8

    def __post_init__(self):
        if not (isinstance(self.nu, (int, float)) and math.isfinite(self.nu) and self.nu >= 0):
            raise SamplerError(f"nu must be a finite number >= 0, got {self.nu!r}")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise SamplerError(f"seed must be a non-negative integer, got {self.seed!r}")
        if not (isinstance(self.eps, (int, float)) and self.eps > 0):
            raise SamplerError(f"eps must be > 0, got {self.eps!r}")
        if self.theta_max is not None and not (math.isfinite(self.theta_max)
                                               and self.theta_max >= 0):
            raise SamplerError(f"theta_max override must be finite and >= 0, "
                               f"got {self.theta_max!r}")


@dataclass
class SampledGraph:
    """One draw of a truncated graphex process.

    ``edges`` is an (E, 2) int64 array with u <= v per row, indices into
    ``labels``. ``provenance`` tags each edge 0 (kernel, including self
    loops), 1 (star leaf) or 2 (isolated pair). Only visible vertices are
    stored. ``latent`` (when retained) carries the latent coordinate of each
    vertex, NaN for star leaves and isolated endpoints, which have none.
    """

    nu: float
    seed: int
    theta_max: float
    epsilon: float
    labels: np.ndarray
    edges: np.ndarray
    provenance: np.ndarray
    latent: np.ndarray | None = None
    planted_indices: tuple[int, ...] = ()

    @property
    def n_vertices(self) -> int:
        return int(self.labels.size)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def degree_of(self, vertex: int) -> int:
        """Degree of one vertex; a self loop contributes 2."""
        return int(np.count_nonzero(self.edges == vertex))

    def edge_counts_by_provenance(self) -> dict:
        prov = self.provenance
        return {
            "kernel": int(np.count_nonzero(prov == PROV_KERNEL)),
            "star": int(np.count_nonzero(prov == PROV_STAR)),
            "isolated": int(np.count_nonzero(prov == PROV_ISOLATED)),
        }

    def metadata(self) -> dict:
        return {
            "nu": self.nu,
            "seed": self.seed,
            "theta_max": self.theta_max,
            "epsilon": self.epsilon,
            "vertices": self.n_vertices,
            "edges": self.n_edges,
            "edges_by_provenance": self.edge_counts_by_provenance(),
        }

    def write_csv(self, dest) -> None:
        """One row per edge: u_index,v_index,u_label,v_label,provenance.

        ``dest`` is a path or an open text stream.
        """
        lab = self.labels
        with _out_stream(dest) as fh:
            fh.write("u_index,v_index,u_label,v_label,provenance\n")
            for (u, v), p in zip(self.edges.tolist(), self.provenance.tolist()):
                fh.write(f"{u},{v},{float(lab[u])!r},{float(lab[v])!r},{PROV_NAMES[p]}\n")

    def write_latent_csv(self, dest) -> None:
        if self.latent is None:
            raise SamplerError("latent coordinates were not retained for this graph")
        with _out_stream(dest) as fh:
            fh.write("vertex_index,latent\n")
            for i, x in enumerate(self.latent.tolist()):
                fh.write(f"{i},{float(x)!r}\n")

    def write_metadata(self, dest) -> None:
        with _out_stream(dest) as fh:
            json.dump(self.metadata(), fh, sort_keys=True, indent=2)
            fh.write("\n")


# ---------------------------------------------------------------------------
# Truncation level
# ---------------------------------------------------------------------------

def choose_theta_max(g: Graphex, nu: float, eps: float) -> float:
    """Smallest latent cutoff whose expected missed-edge count is <= eps.

    The certified budget at cutoff a is nu^2 * (tail_mu(a) + tail_S(a)):
    every kernel edge with an endpoint past a is counted through that
    endpoint's expected degree nu * mu, and star edges through nu * S.
    """
    if nu < 0 or not math.isfinite(nu):
        raise SamplerError(f"nu must be finite and >= 0, got {nu!r}")
    if eps <= 0:
        raise SamplerError(f"eps must be > 0, got {eps!r}")
    if nu == 0.0 or (g.w is None and g.s is None):
        return 0.0
    if math.isfinite(g.support) and g.s is None:
        return g.support
    # the cutoff is pure in (g, nu, eps) and black-box tails make it dear;
    # replicate loops hit the same triple thousands of times
    cache_key = ("theta_max", float(nu), float(eps))
    cached = g._cache.get(cache_key)
    if cached is not None:
        return cached

    # closed-form tails cost nanoseconds per probe, so resolve the crossing
    # to full precision; black-box tails cost a quadrature (nested, when the
    # marginal is numeric too) per probe, and the budget test only needs the
    # tail to a few digits, so probe loosely and stop the bisection early.
    # The certificate is then exact up to quadrature error, which it always
    # was for numeric tails.
    analytic = ((g.w is None or g.tail_mu_fn is not None)
                and (g.s is None or g.tail_s_fn is not None))
    probe_tol = 1e-9 if analytic else 1e-4
    width_tol = 1e-12 if analytic else 1e-4

    def budget(a: float) -> float:
        t = 0.0
        if g.w is not None:
            t += g.tail_mu(a, probe_tol)
        if g.s is not None:
            t += g.tail_s(a, probe_tol)
        return nu * nu * t

    try:
        if budget(0.0) <= eps:
            g._cache[cache_key] = 0.0
            return 0.0
        hi = 1.0
        while budget(hi) > eps:
            hi *= 2.0
            if hi > 1e300:
                raise SamplerError("no finite truncation level meets the budget; "
                                   "the kernel or star tail decays too slowly")
        lo = hi / 2.0
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if budget(mid) > eps:
                lo = mid
            else:
                hi = mid
            if hi - lo <= width_tol * max(1.0, hi):
                break
    except GraphexError as err:
        raise SamplerError(
            f"cannot certify a truncation level: {err}. A non-integrable kernel "
            "has infinitely many edges at any nu > 0 and cannot be sampled") from err
    g._cache[cache_key] = hi
    return hi


# ---------------------------------------------------------------------------
# Kernel edges
# ---------------------------------------------------------------------------

def _pairs_fast(g: Graphex, pts: np.ndarray, gen, cfg: SamplerConfig) -> np.ndarray:
    """Separable fast path; see the module docstring for the scheme."""
    n = pts.size
    f = np.clip(np.asarray(g.separable_f(pts), dtype=float), 0.0, 1.0)
    chunks = []

    heavy = np.nonzero(f > _TAU)[0]
    h = heavy.size
    if h >= 2:
        if h * (h - 1) / 2 > cfg.max_pair_coins:
            raise SamplerError(
                f"{h} latent points have f > {_TAU}; too many heavy pairs to coin "
                "(raise max_pair_coins or lower nu)")
        iu, ju = np.triu_indices(h, k=1)
        a = heavy[iu]
        b = heavy[ju]
        p = f[a] * f[b]
        keep = gen.random(p.size) < p
        chunks.append(np.column_stack((a[keep], b[keep])))

    s_all = float(f.sum())
    if s_all > 0.0:
        lam = _C0 * s_all * s_all / 2.0
        if lam > cfg.max_proposals:
            raise SamplerError(
                f"the proposal rate {lam:.3g} exceeds max_proposals; "
                "lower nu or raise the cap")
        m = int(gen.poisson(lam))
        if m:
            cum = np.cumsum(f)
            total = cum[-1]
            u = np.searchsorted(cum, gen.random(m) * total, side="right")
            v = np.searchsorted(cum, gen.random(m) * total, side="right")
            np.clip(u, 0, n - 1, out=u)
            np.clip(v, 0, n - 1, out=v)
            lo = np.minimum(u, v)
            hi = np.maximum(u, v)
            ok = (lo != hi) & ~((f[lo] > _TAU) & (f[hi] > _TAU))
            lo = lo[ok]
            hi = hi[ok]
            key = np.unique(lo.astype(np.int64) * n + hi)
            lo = (key // n).astype(np.int64)
            hi = (key % n).astype(np.int64)
            p = f[lo] * f[hi]
            accept = gen.random(p.size) < p / (-np.expm1(-_C0 * p))
            chunks.append(np.column_stack((lo[accept], hi[accept])))

    if not chunks:
        return np.empty((0, 2), dtype=np.int64)
    return np.vstack(chunks).astype(np.int64)


_NAIVE_BLOCK = 2048


def _pairs_naive(g: Graphex, pts: np.ndarray, gen, cfg: SamplerConfig) -> np.ndarray:
    n = pts.size
    if n * (n - 1) / 2 > cfg.max_pair_coins:
        raise SamplerError(
            f"{n} latent points means {n * (n - 1) // 2} pair coins, over the cap; "
            "use a separable family (fast path) or raise max_pair_coins")
    us = []
    vs = []
    for i0 in range(0, n, _NAIVE_BLOCK):
        xi = pts[i0:i0 + _NAIVE_BLOCK]
        for j0 in range(i0, n, _NAIVE_BLOCK):
            xj = pts[j0:j0 + _NAIVE_BLOCK]
            prob = np.asarray(g.w_at(xi[:, None], xj[None, :]), dtype=float)
            hits = gen.random(prob.shape) < prob
            if j0 == i0:
                hits &= np.triu(np.ones(hits.shape, dtype=bool), k=1)
            ii, jj = np.nonzero(hits)
            us.append(ii + i0)
            vs.append(jj + j0)
    if not us:
        return np.empty((0, 2), dtype=np.int64)
    u = np.concatenate(us)
    v = np.concatenate(vs)
    return np.column_stack((u, v)).astype(np.int64)


# ---------------------------------------------------------------------------
# Full draw
# ---------------------------------------------------------------------------

def sample_keg(g: Graphex, cfg: SamplerConfig, planted=()) -> SampledGraph:
    """Draw one graph. ``planted`` lists latent coordinates of extra points
    that join the latent cloud deterministically and are always kept in the
    vertex set, visible or not (their final indices are reported in
    ``planted_indices``)."""
    nu = float(cfg.nu)
    if not math.isfinite(g.isolated_rate):
        raise SamplerError("the isolated-edge rate is infinite; the graph would have "
                           "infinitely many edges")
    theta = cfg.theta_max if cfg.theta_max is not None else choose_theta_max(g, nu, cfg.eps)

    expected_points = nu * theta
    if expected_points > cfg.max_latent_points:
        raise SamplerError(
            f"the truncation level {theta:.6g} implies ~{expected_points:.3g} latent "
            "points, over max_latent_points; raise eps or the cap")

    gen_lat = rngmod.stream(cfg.seed, _STREAM_LATENT)
    n_cloud = int(gen_lat.poisson(expected_points)) if expected_points > 0 else 0
    pts = gen_lat.uniform(0.0, theta, n_cloud) if n_cloud else np.empty(0)

    planted = tuple(float(x) for x in planted)
    for x in planted:
        if not (math.isfinite(x) and x >= 0):
            raise SamplerError(f"planted latent coordinates must be finite and >= 0, "
                               f"got {x!r}")
    if planted:
        pts = np.concatenate((pts, np.asarray(planted)))
    n = pts.size
    planted_slots = np.arange(n_cloud, n, dtype=np.int64)

    # kernel pairs
    if g.w is not None and n >= 2:
        gen_pairs = rngmod.stream(cfg.seed, _STREAM_PAIRS)
        if cfg.use_fast_path and g.separable_f is not None:
            kernel_uv = _pairs_fast(g, pts, gen_pairs, cfg)
        else:
            kernel_uv = _pairs_naive(g, pts, gen_pairs, cfg)
    else:
        kernel_uv = np.empty((0, 2), dtype=np.int64)

    # self loops
    if g.self_edges and g.diag is not None and n:
        d = np.clip(np.asarray(g.diag_at(pts), dtype=float), 0.0, 1.0)
        hit = np.nonzero(rngmod.stream(cfg.seed, _STREAM_SELF).random(n) < d)[0]
        if hit.size:
            loops = np.column_stack((hit, hit)).astype(np.int64)
            kernel_uv = np.vstack((kernel_uv, loops)) if kernel_uv.size else loops

    # star leaves
    if g.s is not None and n:
        rates = nu * np.clip(np.asarray(g.s_at(pts), dtype=float), 0.0, None)
        leaves = rngmod.stream(cfg.seed, _STREAM_STARS).poisson(rates)
        hubs = np.repeat(np.arange(n, dtype=np.int64), leaves)
    else:
        hubs = np.empty(0, dtype=np.int64)

    # isolated edges
    n_iso = 0
    if g.isolated_rate > 0.0 and nu > 0.0:
        n_iso = int(rngmod.stream(cfg.seed, _STREAM_ISOLATED).poisson(g.isolated_rate * nu * nu))

    # visibility and final indexing
    participants = [kernel_uv.ravel(), hubs, planted_slots]
    visible = np.unique(np.concatenate(participants)) if n else np.empty(0, dtype=np.int64)
    v0 = visible.size
    n_leaves = hubs.size
    n_vertices = v0 + n_leaves + 2 * n_iso

    rows = []
    provs = []
    if kernel_uv.shape[0]:
        mapped = np.searchsorted(visible, kernel_uv)
        rows.append(mapped)
        provs.append(np.zeros(mapped.shape[0], dtype=np.uint8))
    if n_leaves:
        hub_mapped = np.searchsorted(visible, hubs)
        leaf_ids = v0 + np.arange(n_leaves, dtype=np.int64)
        rows.append(np.column_stack((hub_mapped, leaf_ids)))
        provs.append(np.full(n_leaves, PROV_STAR, dtype=np.uint8))
    if n_iso:
        base = v0 + n_leaves
        left = base + 2 * np.arange(n_iso, dtype=np.int64)
        rows.append(np.column_stack((left, left + 1)))
        provs.append(np.full(n_iso, PROV_ISOLATED, dtype=np.uint8))

    if rows:
        edges = np.vstack(rows).astype(np.int64)
        provenance = np.concatenate(provs)
        order = np.lexsort((provenance, edges[:, 1], edges[:, 0]))
        edges = edges[order]
        provenance = provenance[order]
    else:
        edges = np.empty((0, 2), dtype=np.int64)
        provenance = np.empty(0, dtype=np.uint8)

    labels = rngmod.stream(cfg.seed, _STREAM_LABELS).uniform(0.0, nu, n_vertices) \
        if n_vertices else np.empty(0)

    latent = None
    if cfg.retain_latent:
        latent = np.full(n_vertices, np.nan)
        latent[:v0] = pts[visible]

    planted_final = tuple(int(i) for i in np.searchsorted(visible, planted_slots))

    return SampledGraph(
        nu=nu, seed=cfg.seed, theta_max=float(theta), epsilon=float(cfg.eps),
        labels=labels, edges=edges, provenance=provenance,
        latent=latent, planted_indices=planted_final,
    )


def restrict(graph: SampledGraph, nu_new: float) -> SampledGraph:
    """Restrict a sampled graph to labels in [0, nu_new].

    Keeps exactly the edges whose both endpoint labels are <= nu_new and the
    vertices that stay visible. By projectivity this has the same law as
    sampling at nu_new directly (up to the truncation budget, which is
    slightly more generous here since theta_max was chosen for the larger nu).
    """
    if not (isinstance(nu_new, (int, float)) and math.isfinite(nu_new) and nu_new >= 0):
        raise SamplerError(f"nu_new must be finite and >= 0, got {nu_new!r}")
    if nu_new > graph.nu:
        raise SamplerError(f"cannot restrict to nu = {nu_new}, the graph was sampled "
                           f"at nu = {graph.nu}")
    lab = graph.labels
    edges = graph.edges
    keep = np.empty(0, dtype=bool)
    if edges.shape[0]:
        keep = (lab[edges[:, 0]] <= nu_new) & (lab[edges[:, 1]] <= nu_new)
    kept = edges[keep] if edges.shape[0] else edges
    prov = graph.provenance[keep] if edges.shape[0] else graph.provenance
    if kept.shape[0]:
        old_ids = np.unique(kept)
        remapped = np.searchsorted(old_ids, kept)
        new_labels = lab[old_ids]
        new_latent = graph.latent[old_ids] if graph.latent is not None else None
    else:
        remapped = np.empty((0, 2), dtype=np.int64)
        new_labels = np.empty(0)
        new_latent = np.empty(0) if graph.latent is not None else None
    return SampledGraph(
        nu=float(nu_new), seed=graph.seed, theta_max=graph.theta_max,
        epsilon=graph.epsilon, labels=new_labels,
        edges=remapped.astype(np.int64), provenance=prov,
        latent=new_latent, planted_indices=(),
    )


# ---------------------------------------------------------------------------
# Planted-degree draws (vectorised across replicates)
# ---------------------------------------------------------------------------

def sample_planted_degrees(g: Graphex, nu: float, lam: float, reps: int, seed: int,
                           eps: float = 1e-3, theta_max: float | None = None) -> np.ndarray:
    """Kernel degree of a point planted at latent coordinate lam, one draw
    per replicate.

    Only edges between the planted point and the ambient cloud are drawn,
    one Bernoulli coin per cloud point with probability W(lam, x); cloud-to-
    cloud edges cannot change the planted point's degree, so skipping them
    lets all replicates run as a handful of array operations. Self loops are
    excluded: this is the degree toward other points.
    """
    if g.w is None:
        raise SamplerError("the graphex has no kernel, the planted degree is always 0")
    if not (isinstance(reps, int) and reps >= 1):
        raise SamplerError(f"reps must be a positive integer, got {reps!r}")
    if not (math.isfinite(lam) and lam >= 0):
        raise SamplerError(f"lam must be finite and >= 0, got {lam!r}")
    theta = theta_max if theta_max is not None else choose_theta_max(g, nu, eps)
    gen = rngmod.stream(seed, _STREAM_PLANTED)
    counts = gen.poisson(nu * theta, size=reps).astype(np.int64)
    degrees = np.empty(reps, dtype=np.int64)
    chunk_budget = 20_000_000
    r0 = 0
    while r0 < reps:
        r1 = r0 + 1
        total = int(counts[r0])
        while r1 < reps and total + counts[r1] <= chunk_budget:
            total += int(counts[r1])
            r1 += 1
        pos = gen.uniform(0.0, theta, total)
        w = np.clip(np.asarray(g.w_at(lam, pos), dtype=float), 0.0, 1.0)
        hit = gen.random(total) < w
        cum = np.concatenate(([0], np.cumsum(hit)))
        bounds = np.concatenate(([0], np.cumsum(counts[r0:r1])))
        degrees[r0:r1] = cum[bounds[1:]] - cum[bounds[:-1]]
        r0 = r1
    return degrees
