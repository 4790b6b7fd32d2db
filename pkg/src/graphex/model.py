"""Graphex objects: a kernel W, a star rate S and an isolated-edge rate I.

A graphex is the triple (I, S, W) driving an exchangeable random graph: W is a
symmetric function on [0,inf)^2 with values in [0,1] giving pairwise edge
probabilities between latent points of a unit-rate Poisson process, S is an
integrable star rate, and I >= 0 is the rate of isolated edges. The marginal
mu_W(x) = integral of W(x, y) dy controls almost everything downstream
(expected counts, degree laws, truncation policy), so families declare it
analytically whenever they can; otherwise it is computed by quadrature.

Built-in families:

* ``constant``: W = p on [0, c]^2, zero outside.
* ``graphon-dilation``: a symmetric step-function graphon stretched onto
  [0, c]^2 (finite support, hence dense graphs).
* ``separable``: W(x, y) = f(x) f(y) off the diagonal, for a user expression f.
* ``slow-decay``: separable with f(x) = 3^(-1/2) (x+1)^-2, i.e.
  W(x, y) = (1/3)(x+1)^-2 (y+1)^-2 and mu(x) = (1/3)(x+1)^-2. Power-law
  degrees with pmf tending to Gamma(k - 1/2) / (2 sqrt(pi) k!).
* ``fast-decay``: separable with f(x) = e^-x, mu(x) = e^-x. Degrees grow like
  log nu and P(D <= nu^beta) tends to beta.
* ``caron-fox``: W(x, y) = 1 - exp(-2 g(x) g(y)) off the diagonal and
  1 - exp(-g(x)^2) on it, for a user expression g.
* ``custom``: W given directly as an expression in x and y.

Any family may additionally carry a star-rate expression S and a rate I.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import expr as exprmod
from .quadrature import IntegralResult, integrate_interval, integrate_semiinf

__all__ = [
    "Graphex",
    "GraphexError",
    "SpecError",
    "build",
    "build_from_json",
    "dilate",
    "marginal",
    "FAMILIES",
    "PROBE_GRID_SIZE",
]

FAMILIES = (
    "constant",
    "graphon-dilation",
    "separable",
    "slow-decay",
    "fast-decay",
    "caron-fox",
    "custom",
)

# kernel expressions are vetted on this many log-spaced probe points per axis
PROBE_GRID_SIZE = 64
_PROBE_X_MAX = 1e6
_SYMMETRY_TOL = 1e-12


class GraphexError(ValueError):
    """Base class for graphex construction/usage errors."""


class SpecError(GraphexError):
    """A graphex declaration failed validation."""


def _probe_grid() -> np.ndarray:
    # log-spaced plus 0 so that origin behaviour is always probed
    grid = np.geomspace(1e-9, _PROBE_X_MAX, PROBE_GRID_SIZE - 1)
    return np.concatenate(([0.0], grid))


@dataclass
class Graphex:
    """A validated graphex.

    ``w``, ``s`` and ``diag`` are vectorised callables (``s`` and ``diag`` may
    be None, meaning identically zero). Analytic metadata is optional; every
    consumer falls back to quadrature through the accessor methods, which is
    exact but slower. ``separable_f`` is set when W(x, y) = f(x) f(y) off the
    diagonal, which unlocks the sampler's fast path.
    """

    family: str
    isolated_rate: float
    w: Callable | None
    s: Callable | None
    diag: Callable | None
    self_edges: bool
    spec: dict = field(repr=False)

    # analytic metadata (None means "not known in closed form")
    mu: Callable | None = None
    tail_mu_fn: Callable | None = None
    w_l1_value: float | None = None
    diag_l1_value: float | None = None
    s_l1_value: float | None = None
    tail_s_fn: Callable | None = None
    support: float = math.inf
    separable_f: Callable | None = None
    f_l1_value: float | None = None
    tail_f_fn: Callable | None = None

    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    # -- kernel access ------------------------------------------------------

    def w_at(self, x, y):
        """W(x, y), vectorised, zero when no kernel is declared."""
        if self.w is None:
            return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape) \
                if (np.ndim(x) or np.ndim(y)) else 0.0
        return self.w(x, y)

    def s_at(self, x):
        if self.s is None:
            return np.zeros(np.shape(x)) if np.ndim(x) else 0.0
        return self.s(x)

    def diag_at(self, x):
        if self.diag is None or not self.self_edges:
            return np.zeros(np.shape(x)) if np.ndim(x) else 0.0
        return self.diag(x)

    # -- marginal and integrals ---------------------------------------------

    def marginal(self, x: float, rel_tol: float = 1e-8) -> float:
        """mu(x) = integral of W(x, y) dy. Analytic when declared."""
        if self.mu is not None:
            return float(self.mu(x))
        if self.w is None:
            return 0.0
        if math.isfinite(self.support):
            res = integrate_interval(lambda y: float(self.w_at(x, y)), 0.0, self.support, rel_tol)
        else:
            res = integrate_semiinf(lambda y: float(self.w_at(x, y)), rel_tol)
        if not res.converged:
            raise GraphexError(
                f"marginal at x={x!r} did not converge "
                f"(value ~ {res.value:.6g}, error ~ {res.error_estimate:.3g}); "
                "the kernel may be non-integrable in y"
            )
        return res.value

    def tail_mu(self, x: float, rel_tol: float = 1e-9) -> float:
        """integral of mu over [x, inf). Used for truncation budgets."""
        if self.tail_mu_fn is not None:
            return float(self.tail_mu_fn(x))
        if self.w is None:
            return 0.0
        # when the marginal is itself numeric, every outer node costs a full
        # inner integral, so let a loose caller buy loose inner evaluations
        inner_tol = max(1e-8, 0.1 * rel_tol)
        if math.isfinite(self.support):
            if x >= self.support:
                return 0.0
            res = integrate_interval(lambda t: self.marginal(t, inner_tol), x, self.support, rel_tol)
        else:
            res = integrate_semiinf(lambda u: self.marginal(x + u, inner_tol), rel_tol)
        if not res.converged:
            raise GraphexError(f"tail of the marginal past x={x!r} did not converge")
        return res.value

    def tail_s(self, x: float, rel_tol: float = 1e-9) -> float:
        if self.s is None:
            return 0.0
        if self.tail_s_fn is not None:
            return float(self.tail_s_fn(x))
        res = integrate_semiinf(lambda u: float(self.s_at(x + u)), rel_tol)
        if not res.converged:
            raise GraphexError(f"tail of the star rate past x={x!r} did not converge; "
                               "the star rate may be non-integrable")
        return res.value

    def w_l1(self, rel_tol: float = 1e-9) -> float:
        """||W||_1, the double integral of W."""
        if self.w_l1_value is not None:
            return self.w_l1_value
        if self.w is None:
            return 0.0
        if self._cache.get("w_l1_diverged"):
            raise GraphexError("||W||_1 did not converge; the kernel may be non-integrable")
        key = ("w_l1", rel_tol)
        if key not in self._cache:
            # without an analytic marginal every outer evaluation is itself a
            # semi-infinite integral, so cap the outer refinement budget: a
            # non-integrable kernel must fail fast, not grind
            limit = 200 if self.mu is not None else 8
            if math.isfinite(self.support):
                res = integrate_interval(lambda x: self.marginal(x, 1e-8), 0.0, self.support,
                                         rel_tol, limit=limit)
            else:
                res = integrate_semiinf(lambda x: self.marginal(x, 1e-8), rel_tol,
                                        tail_hint=None, panel_limit=limit)
            if not res.converged:
                if res.error_estimate > 0.01 * max(abs(res.value), 1e-300):
                    # catastrophic, not a budget shortfall: remember it so the
                    # next caller is not billed for the same divergence
                    self._cache["w_l1_diverged"] = True
                raise GraphexError("||W||_1 did not converge; the kernel may be non-integrable")
            self._cache[key] = res.value
        return self._cache[key]

    def s_l1(self, rel_tol: float = 1e-9) -> float:
        if self.s is None:
            return 0.0
        if self.s_l1_value is not None:
            return self.s_l1_value
        key = ("s_l1", rel_tol)
        if key not in self._cache:
            res = integrate_semiinf(lambda x: float(self.s_at(x)), rel_tol)
            if not res.converged:
                raise GraphexError("the star rate is not integrable within probe budget")
            self._cache[key] = res.value
        return self._cache[key]

    def diag_l1(self, rel_tol: float = 1e-9) -> float:
        """integral of W(x, x) dx (zero when self edges are disabled)."""
        if not self.self_edges or self.diag is None:
            return 0.0
        if self.diag_l1_value is not None:
            return self.diag_l1_value
        key = ("diag_l1", rel_tol)
        if key not in self._cache:
            if math.isfinite(self.support):
                res = integrate_interval(lambda x: float(self.diag_at(x)), 0.0, self.support, rel_tol)
            else:
                res = integrate_semiinf(lambda x: float(self.diag_at(x)), rel_tol)
            if not res.converged:
                raise GraphexError("the diagonal W(x, x) is not integrable within probe budget")
            self._cache[key] = res.value
        return self._cache[key]

    def to_json(self) -> str:
        return json.dumps(self.spec, sort_keys=True)


def marginal(g: Graphex, x: float) -> float:
    """Module-level alias for :meth:`Graphex.marginal`."""
    return g.marginal(x)


# ---------------------------------------------------------------------------
# Validation helpers
# ---------------------------------------------------------------------------

def _require(cond: bool, message: str) -> None:
    if not cond:
        raise SpecError(message)


def _compile_expr(source: str, allowed_vars: set[str], what: str) -> exprmod.Expr:
    try:
        e = exprmod.parse(source)
    except exprmod.ParseError as err:
        raise SpecError(f"{what}: {err}") from err
    extra = e.variables - allowed_vars
    _require(not extra, f"{what}: unexpected variable(s) {sorted(extra)}")
    return e


def _vet_kernel_range(w: Callable, what: str, grid: np.ndarray | None = None) -> None:
    xs = _probe_grid() if grid is None else grid
    try:
        vals = w(xs[:, None], xs[None, :])
    except exprmod.EvalError as err:
        raise SpecError(f"{what}: kernel fails to evaluate on [0, inf)^2: {err}") from err
    if np.any(vals < -1e-15) or np.any(vals > 1.0 + 1e-12):
        bad = np.unravel_index(int(np.argmax(np.abs(vals - 0.5))), vals.shape)
        raise SpecError(
            f"{what}: kernel leaves [0, 1] on the probe grid, e.g. "
            f"W({xs[bad[0]]:.6g}, {xs[bad[1]]:.6g}) = {vals[bad]:.6g}"
        )
    asym = np.max(np.abs(vals - vals.T))
    if asym > _SYMMETRY_TOL:
        raise SpecError(f"{what}: kernel is asymmetric on the probe grid "
                        f"(max |W(x,y)-W(y,x)| = {asym:.3g})")


def _vet_unit_range(f: Callable, what: str) -> None:
    xs = _probe_grid()
    try:
        vals = np.asarray(f(xs))
    except exprmod.EvalError as err:
        raise SpecError(f"{what}: fails to evaluate on [0, inf): {err}") from err
    if np.any(vals < -1e-15):
        raise SpecError(f"{what}: negative values on the probe grid")
    if np.any(vals > 1.0 + 1e-12):
        raise SpecError(f"{what}: values above 1 on the probe grid; the induced kernel "
                        "f(x) f(y) would leave [0, 1]")


def _vet_nonnegative(f: Callable, what: str) -> None:
    xs = _probe_grid()
    try:
        vals = np.asarray(f(xs))
    except exprmod.EvalError as err:
        raise SpecError(f"{what}: fails to evaluate on [0, inf): {err}") from err
    if np.any(vals < -1e-15):
        raise SpecError(f"{what}: negative values on the probe grid")


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------

def _family_constant(params: dict, self_edges: bool):
    p = params.get("p")
    c = params.get("c")
    _require(isinstance(p, (int, float)) and 0.0 <= p <= 1.0, "constant: p must be in [0, 1]")
    _require(isinstance(c, (int, float)) and c > 0 and math.isfinite(c),
             "constant: c must be a finite positive number")
    p = float(p)
    c = float(c)

    def w(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return p * ((x <= c) & (y <= c))

    def mu(x):
        return p * c * (np.asarray(x, dtype=float) <= c)

    def tail_mu(x):
        return p * c * np.clip(c - np.asarray(x, dtype=float), 0.0, None)

    def diag(x):
        return p * (np.asarray(x, dtype=float) <= c)

    sqrt_p = math.sqrt(p)

    def f(x):
        return sqrt_p * (np.asarray(x, dtype=float) <= c)

    def tail_f(x):
        return sqrt_p * np.clip(c - np.asarray(x, dtype=float), 0.0, None)

    return dict(
        w=w, diag=diag, mu=mu, tail_mu_fn=tail_mu,
        w_l1_value=p * c * c,
        diag_l1_value=p * c if self_edges else 0.0,
        support=c,
        separable_f=f, f_l1_value=sqrt_p * c, tail_f_fn=tail_f,
    )


def _family_graphon_dilation(params: dict, self_edges: bool):
    c = params.get("c")
    grid = params.get("grid")
    _require(isinstance(c, (int, float)) and c > 0 and math.isfinite(c),
             "graphon-dilation: c must be a finite positive number")
    c = float(c)
    arr = np.asarray(grid, dtype=float)
    _require(arr.ndim == 2 and arr.shape[0] == arr.shape[1] and arr.shape[0] >= 1,
             "graphon-dilation: grid must be a square matrix")
    _require(bool(np.all((arr >= 0.0) & (arr <= 1.0))),
             "graphon-dilation: grid entries must lie in [0, 1]")
    _require(bool(np.allclose(arr, arr.T, atol=_SYMMETRY_TOL)),
             "graphon-dilation: grid must be symmetric")
    n = arr.shape[0]
    cell_width = c / n
    row_mean = arr.sum(axis=1) * cell_width  # mu value on each cell

    def cell(x):
        x = np.asarray(x, dtype=float)
        return np.minimum((x / c * n).astype(int), n - 1)

    def w(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        inside = (x <= c) & (y <= c)
        vals = arr[cell(np.clip(x, 0, c)), cell(np.clip(y, 0, c))]
        return np.where(inside, vals, 0.0)

    def mu(x):
        x = np.asarray(x, dtype=float)
        vals = row_mean[cell(np.clip(x, 0, c))]
        return np.where(x <= c, vals, 0.0)

    # cumulative mass of mu from each cell boundary to c, for tail_mu
    rev_cum = np.concatenate((np.cumsum((row_mean * cell_width)[::-1])[::-1], [0.0]))

    def tail_mu(x):
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, 0.0, c)
        i = cell(xc)
        boundary_next = (i + 1) * cell_width
        partial = row_mean[i] * np.clip(boundary_next - xc, 0.0, None)
        return np.where(x >= c, 0.0, partial + rev_cum[i + 1])

    def diag(x):
        x = np.asarray(x, dtype=float)
        i = cell(np.clip(x, 0, c))
        return np.where(x <= c, arr[i, i], 0.0)

    return dict(
        w=w, diag=diag, mu=mu, tail_mu_fn=tail_mu,
        w_l1_value=float(arr.sum()) * cell_width * cell_width,
        diag_l1_value=float(np.trace(arr)) * cell_width if self_edges else 0.0,
        support=c,
    )


def _separable_meta(f: Callable, f_l1: float | None, tail_f: Callable | None,
                    self_edges: bool):
    """Assemble kernel metadata from a separable factor f."""

    def w(x, y):
        return f(x) * f(y)

    def diag(x):
        fv = f(x)
        return fv * fv

    out = dict(w=w, diag=diag, separable_f=f)
    if f_l1 is not None:
        out["f_l1_value"] = f_l1
        out["w_l1_value"] = f_l1 * f_l1

        def mu(x):
            return f_l1 * f(x)

        out["mu"] = mu
        if tail_f is not None:
            out["tail_f_fn"] = tail_f

            def tail_mu(x):
                return f_l1 * tail_f(x)

            out["tail_mu_fn"] = tail_mu
    return out


def _family_separable(params: dict, exprs: dict, self_edges: bool):
    source = exprs.get("f")
    _require(isinstance(source, str), "separable: exprs.f (a function of x) is required")
    e = _compile_expr(source, {"x"}, "separable f")

    def f(x):
        return e(x=np.asarray(x, dtype=float))

    _vet_unit_range(f, "separable f")
    # numeric f_l1 up front; it doubles as an integrability check
    res = integrate_semiinf(lambda x: float(e(x=x)), 1e-10)
    if not res.converged:
        raise SpecError("separable: f is not integrable within probe budget")
    out = _separable_meta(f, res.value, None, self_edges)
    out["diag_l1_value"] = None  # numeric on demand
    return out


def _family_slow_decay(params: dict, self_edges: bool):
    inv_sqrt3 = 1.0 / math.sqrt(3.0)

    def f(x):
        x = np.asarray(x, dtype=float)
        return inv_sqrt3 / ((x + 1.0) * (x + 1.0))

    def tail_f(x):
        return inv_sqrt3 / (np.asarray(x, dtype=float) + 1.0)

    out = _separable_meta(f, inv_sqrt3, tail_f, self_edges)
    # W(x, x) = (1/3)(x+1)^-4 and int (x+1)^-4 dx = 1/3
    out["diag_l1_value"] = (1.0 / 9.0) if self_edges else 0.0
    return out


def _family_fast_decay(params: dict, self_edges: bool):
    def f(x):
        return np.exp(-np.asarray(x, dtype=float))

    def tail_f(x):
        return np.exp(-np.asarray(x, dtype=float))

    out = _separable_meta(f, 1.0, tail_f, self_edges)
    out["diag_l1_value"] = 0.5 if self_edges else 0.0  # int e^-2x = 1/2
    return out


def _family_caron_fox(params: dict, exprs: dict, self_edges: bool):
    source = exprs.get("g", "exp(-x)")
    _require(isinstance(source, str), "caron-fox: exprs.g must be an expression in x")
    e = _compile_expr(source, {"x"}, "caron-fox g")

    def g(x):
        return e(x=np.asarray(x, dtype=float))

    _vet_nonnegative(g, "caron-fox g")

    def w(x, y):
        return -np.expm1(-2.0 * g(x) * g(y))

    def diag(x):
        gv = g(x)
        return -np.expm1(-gv * gv)

    return dict(w=w, diag=diag)


def _family_custom(params: dict, exprs: dict, self_edges: bool):
    source = exprs.get("W")
    _require(isinstance(source, str), "custom: exprs.W (a function of x and y) is required")
    e = _compile_expr(source, {"x", "y"}, "custom W")

    def w(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = e(x=x, y=y)
        if np.ndim(out) == 0 and (x.ndim or y.ndim):
            out = np.broadcast_to(np.asarray(out, dtype=float),
                                  np.broadcast(x, y).shape).copy()
        return out

    _vet_kernel_range(w, "custom W")

    def diag(x):
        return w(x, x)

    return dict(w=w, diag=diag)


# ---------------------------------------------------------------------------
# build
# ---------------------------------------------------------------------------

def build(spec: dict) -> Graphex:
    """Validate a graphex declaration and assemble a :class:`Graphex`.

    ``spec`` is a mapping with keys ``family`` (required), ``params``,
    ``exprs``, ``I`` and ``self_edges``. Star rates are declared with
    ``exprs.S``; the isolated-edge rate with ``I``.
    """
    if not isinstance(spec, dict):
        raise SpecError("graphex declaration must be a JSON object")
    family = spec.get("family")
    if family not in FAMILIES:
        raise SpecError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
    params = spec.get("params", {})
    exprs = spec.get("exprs", {})
    _require(isinstance(params, dict), "params must be an object")
    _require(isinstance(exprs, dict), "exprs must be an object")
    self_edges = bool(spec.get("self_edges", False))

    isolated = spec.get("I", 0.0)
    _require(isinstance(isolated, (int, float)) and not math.isnan(isolated) and isolated >= 0,
             "I must be a number >= 0 (math.inf is representable but unsampleable)")
    isolated = float(isolated)

    if family == "constant":
        parts = _family_constant(params, self_edges)
    elif family == "graphon-dilation":
        parts = _family_graphon_dilation(params, self_edges)
    elif family == "separable":
        parts = _family_separable(params, exprs, self_edges)
    elif family == "slow-decay":
        parts = _family_slow_decay(params, self_edges)
    elif family == "fast-decay":
        parts = _family_fast_decay(params, self_edges)
    elif family == "caron-fox":
        parts = _family_caron_fox(params, exprs, self_edges)
    else:
        parts = _family_custom(params, exprs, self_edges)

    s_fn = None
    tail_s_fn = None
    s_source = exprs.get("S")
    if s_source is not None:
        _require(isinstance(s_source, str), "exprs.S must be an expression in x")
        s_expr = _compile_expr(s_source, {"x"}, "star rate S")

        def s_fn(x):  # noqa: F811 - deliberate rebind
            return s_expr(x=np.asarray(x, dtype=float))

        _vet_nonnegative(s_fn, "star rate S")
        if s_source.strip() == "exp(-x)":
            tail_s_fn = lambda x: np.exp(-np.asarray(x, dtype=float))  # noqa: E731

    # canonical spec echo (what a report or a sampled graph will record)
    echo = {
        "family": family,
        "params": _jsonable(params),
        "exprs": {k: str(v) for k, v in exprs.items()},
        "I": isolated,
        "self_edges": self_edges,
    }

    kwargs = dict(
        family=family,
        isolated_rate=isolated,
        w=parts.get("w"),
        s=s_fn,
        diag=parts.get("diag"),
        self_edges=self_edges,
        spec=echo,
        mu=parts.get("mu"),
        tail_mu_fn=parts.get("tail_mu_fn"),
        w_l1_value=parts.get("w_l1_value"),
        diag_l1_value=parts.get("diag_l1_value") if self_edges else 0.0,
        s_l1_value=None,
        tail_s_fn=tail_s_fn,
        support=parts.get("support", math.inf),
        separable_f=parts.get("separable_f"),
        f_l1_value=parts.get("f_l1_value"),
        tail_f_fn=parts.get("tail_f_fn"),
    )
    return Graphex(**kwargs)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def build_from_json(text: str) -> Graphex:
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as err:
        raise SpecError(f"graphex declaration is not valid JSON: {err}") from err
    return build(spec)


def dilate(grid, c: float, self_edges: bool = False, isolated: float = 0.0) -> Graphex:
    """Stretch a step-function graphon onto [0, c]^2.

    The resulting graphs are dense: the number of latent points in [0, c] is
    Poisson(nu * c) and the edge density does not vanish.
    """
    return build({
        "family": "graphon-dilation",
        "params": {"c": c, "grid": np.asarray(grid).tolist()},
        "I": isolated,
        "self_edges": self_edges,
    })
