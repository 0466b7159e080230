"""Spatial Riemannian geometry in a single coordinate chart.

A :class:`SpatialManifold` bundles the metric, its inverse, Christoffel
symbols and the few differential operators the wave dynamics needs
(gradient, Laplace-Beltrami, background geodesic flow).  Built-ins are the
flat spaces and the hyperbolic half-plane; both are geodesically complete,
which is the standing hypothesis of the completeness results this library
checks numerically.

Christoffel symbols come either from closed forms supplied by the
manifold ("analytic" mode) or from central differences of the metric
("fd" mode); the two are compared against each other in the test suite.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from ._stepper import HermiteDense, LeftChart, integrate
from .errors import InvalidParams, PointOutsideChart

__all__ = [
    "SpatialManifold",
    "SpatialTrajectory",
    "flat_space",
    "half_plane",
    "manifold_by_name",
]


def _partials_of(fld, x, step=1e-6):
    """First partials of a scalar field at x.

    Accepts anything with a ``partials`` attribute (e.g. ScalarField) or a
    plain callable, which is differenced centrally.
    """
    p = getattr(fld, "partials", None)
    if p is not None:
        return np.asarray(p(x), dtype=float)
    x = np.asarray(x, dtype=float)
    out = np.empty(x.size)
    for l in range(x.size):
        e = np.zeros(x.size)
        e[l] = step
        out[l] = (fld(x + e) - fld(x - e)) / (2 * step)
    return out


def _second_partials_of(fld, x, step=1e-4):
    sp = getattr(fld, "second_partials", None)
    if sp is not None:
        return np.asarray(sp(x), dtype=float)
    x = np.asarray(x, dtype=float)
    m = x.size
    out = np.empty((m, m))
    for k in range(m):
        e = np.zeros(m)
        e[k] = step
        pk_plus = _partials_of(fld, x + e)
        pk_minus = _partials_of(fld, x - e)
        out[k] = (pk_plus - pk_minus) / (2 * step)
    return 0.5 * (out + out.T)


@dataclass
class SpatialTrajectory:
    """Sampled solution of a purely spatial second-order flow."""

    t: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    termination: object
    diagnostics: dict = field(default_factory=dict)
    _dense: HermiteDense | None = None

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def state_at(self, t):
        """Interpolated (x, xdot) at parameter value t."""
        if self._dense is None:
            raise ValueError("trajectory has no dense interpolant")
        z = self._dense(t)
        m = self.dim
        return z[..., :m], z[..., m:]

    @property
    def final_state(self):
        return self.x[-1], self.xdot[-1]


@dataclass(frozen=True)
class SpatialManifold:
    """Riemannian manifold (chart, metric and derived quantities).

    ``metric`` maps a chart point to the symmetric matrix h_ij.  Optional
    closed forms: ``inverse_metric``, ``christoffel`` (used in analytic
    mode) and ``metric_partials`` returning D[m, i, j] = d_m h_ij.  When a
    closed form is missing the quantity is derived numerically from the
    metric.  ``derivative_mode`` is "analytic" or "fd"; in fd mode the
    Christoffel symbols always come from central differences of the
    metric with step ``fd_step``.
    """

    name: str
    dim: int
    chart_contains: Callable[[np.ndarray], bool]
    metric: Callable[[np.ndarray], np.ndarray]
    inverse_metric: Callable[[np.ndarray], np.ndarray] | None = None
    christoffel: Callable[[np.ndarray], np.ndarray] | None = None
    metric_partials: Callable[[np.ndarray], np.ndarray] | None = None
    derivative_mode: str = "analytic"
    fd_step: float = 1e-5
    complete: bool = True

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidParams(f"dim must be >= 1, got {self.dim}")
        if self.derivative_mode not in ("analytic", "fd"):
            raise InvalidParams(f"unknown derivative_mode {self.derivative_mode!r}")

    def with_finite_differences(self, step: float = 1e-5) -> "SpatialManifold":
        """Copy of this manifold that differentiates the metric numerically."""
        return replace(self, derivative_mode="fd", fd_step=step)

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise PointOutsideChart(
                f"point shape {x.shape} does not match chart dimension {self.dim}"
            )
        if not self.chart_contains(x):
            raise PointOutsideChart(f"point {x} outside chart of {self.name}")
        return x

    def metric_at(self, x) -> np.ndarray:
        x = self._check(x)
        return np.asarray(self.metric(x), dtype=float)

    def inverse_metric_at(self, x) -> np.ndarray:
        x = self._check(x)
        if self.inverse_metric is not None:
            return np.asarray(self.inverse_metric(x), dtype=float)
        return np.linalg.inv(self.metric(x))

    def _metric_partials_at(self, x, step=None) -> np.ndarray:
        """D[m, i, j] = d_m h_ij by closed form or central differences."""
        if self.derivative_mode == "analytic" and self.metric_partials is not None:
            return np.asarray(self.metric_partials(x), dtype=float)
        h = step if step is not None else self.fd_step
        m = self.dim
        D = np.empty((m, m, m))
        for l in range(m):
            e = np.zeros(m)
            e[l] = h
            D[l] = (self.metric_at(x + e) - self.metric_at(x - e)) / (2 * h)
        return D

    def christoffel_at(self, x) -> np.ndarray:
        x = self._check(x)
        if self.derivative_mode == "analytic" and self.christoffel is not None:
            return np.asarray(self.christoffel(x), dtype=float)
        D = self._metric_partials_at(x)
        hinv = self.inverse_metric_at(x)
        # S[i, j, l] = d_i h_jl + d_j h_il - d_l h_ij
        S = D + D.transpose(1, 0, 2) - D.transpose(1, 2, 0)
        return 0.5 * np.einsum("kl,ijl->kij", hinv, S)

    def gradient(self, fld, x) -> np.ndarray:
        """Metric gradient h^kl d_l f at x."""
        x = self._check(x)
        return self.inverse_metric_at(x) @ _partials_of(fld, x)

    def laplace_beltrami(self, fld, x) -> float:
        """(1/sqrt det h) d_k(sqrt det h h^kl d_l f) at x."""
        x = self._check(x)
        hinv = self.inverse_metric_at(x)
        p = _partials_of(fld, x)
        S = _second_partials_of(fld, x)
        D = self._metric_partials_at(x)
        # first-order coefficient B^l = (1/sqrt g) d_k (sqrt g h^kl)
        tr = np.einsum("ab,kab->k", hinv, D)  # h^ab d_k h_ab
        B = 0.5 * tr @ hinv - np.einsum("ka,kab,bl->l", hinv, D, hinv)
        return float(np.einsum("kl,kl->", hinv, S) + B @ p)

    def geodesic_rhs(self, z) -> np.ndarray:
        """RHS of the first-order background system z = (x, xdot)."""
        m = self.dim
        x, xdot = z[:m], z[m:]
        gamma = self.christoffel_at(x)
        acc = -np.einsum("kij,i,j->k", gamma, xdot, xdot)
        return np.concatenate([xdot, acc])


def background_geodesic(
    M: SpatialManifold,
    x0,
    xdot0,
    interval,
    tol: float,
    max_steps: int = 200_000,
) -> SpatialTrajectory:
    """Geodesic of (N, h) with local error control.

    Terminates with ``LeftChart`` (carrying the exit parameter) if the
    solution leaves the chart, or ``MaxSteps`` if the step budget runs out.
    """
    if tol <= 0:
        raise InvalidParams("tol must be positive")
    x0 = M._check(x0)
    xdot0 = np.asarray(xdot0, dtype=float)
    t0, t1 = float(interval[0]), float(interval[1])
    z0 = np.concatenate([x0, xdot0])

    def rhs(t, z):
        return M.geodesic_rhs(z)

    def stopped(t, z):
        if not M.chart_contains(z[: M.dim]):
            return LeftChart(t)
        return None

    res = integrate(rhs, t0, z0, t1, tol, reject_state=stopped, max_steps=max_steps)
    m = M.dim
    return SpatialTrajectory(
        t=res.t,
        x=res.y[:, :m],
        xdot=res.y[:, m:],
        termination=res.status,
        diagnostics={
            "n_steps": res.n_steps,
            "n_rejected": res.n_rejected,
            "min_step": res.min_step,
        },
        _dense=res.dense(),
    )


def flat_space(dim: int = 2) -> SpatialManifold:
    """Euclidean R^dim; the chart is everything finite."""
    if dim < 1:
        raise InvalidParams(f"dim must be >= 1, got {dim}")
    eye = np.eye(dim)
    zeros3 = np.zeros((dim, dim, dim))
    return SpatialManifold(
        name="flat2" if dim == 2 else f"flatN({dim})",
        dim=dim,
        chart_contains=lambda x: bool(np.all(np.isfinite(x))),
        metric=lambda x: eye,
        inverse_metric=lambda x: eye,
        christoffel=lambda x: zeros3,
        metric_partials=lambda x: zeros3,
        complete=True,
    )


def half_plane() -> SpatialManifold:
    """Hyperbolic half-plane, h = (dx^2 + dy^2)/y^2 on {y > 0}."""

    def metric(x):
        return np.eye(2) / x[1] ** 2

    def inverse(x):
        return np.eye(2) * x[1] ** 2

    def christoffel(x):
        y = x[1]
        g = np.zeros((2, 2, 2))
        g[0, 0, 1] = g[0, 1, 0] = -1.0 / y
        g[1, 0, 0] = 1.0 / y
        g[1, 1, 1] = -1.0 / y
        return g

    def partials(x):
        y = x[1]
        D = np.zeros((2, 2, 2))
        D[1] = np.eye(2) * (-2.0 / y**3)
        return D

    return SpatialManifold(
        name="half_plane",
        dim=2,
        chart_contains=lambda x: bool(np.all(np.isfinite(x)) and x[1] > 0),
        metric=metric,
        inverse_metric=inverse,
        christoffel=christoffel,
        metric_partials=partials,
        complete=True,
    )


_FLATN = re.compile(r"^flatN\((\d+)\)$")


def manifold_by_name(name: str) -> SpatialManifold:
    """Resolve the built-in manifolds used in run configurations."""
    if name == "flat2":
        return flat_space(2)
    if name == "half_plane":
        return half_plane()
    m = _FLATN.match(name)
    if m:
        return flat_space(int(m.group(1)))
    raise InvalidParams(f"unknown manifold {name!r}")
