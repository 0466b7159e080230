"""Compactly supported mollifier families ("delta nets").

A net is a family u -> delta_eps(u) of smooth functions with support
shrinking to {0}, mass tending to 1 and a uniform L1 bound K.  The model
family rescales a fixed kernel, delta_eps(u) = rho(u/eps)/eps; shifted and
signed kernels exercise the generality of the definition (off-centre
support, K > 1).  ``verify_axioms`` checks the three defining properties
numerically for a list of eps values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import InvalidEpsilon, InvalidParams

__all__ = [
    "Kernel",
    "DeltaNet",
    "AxiomReport",
    "bump_kernel",
    "shifted_kernel",
    "signed_kernel",
    "scaled_kernel",
    "verify_axioms",
    "net_by_name",
]


def _raw_bump(t):
    # exp(-1/(1-t^2)) on (-1,1); the guard avoids inf*0 at |t| -> 1
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    w = np.where(inside, 1.0 - t * t, 1.0)
    with np.errstate(over="ignore", divide="ignore"):
        val = np.where(inside & (w > 1e-12), np.exp(-1.0 / w), 0.0)
    return val


def _raw_bump_derivative(t):
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    w = np.where(inside, 1.0 - t * t, 1.0)
    ok = inside & (w > 1e-6)
    with np.errstate(over="ignore", divide="ignore"):
        val = np.where(ok, np.exp(-1.0 / w) * (-2.0 * t) / (w * w), 0.0)
    return val


@lru_cache(maxsize=1)
def _bump_norm() -> float:
    """1 / integral of the raw bump, fixed once by adaptive quadrature."""
    total, _ = quad(lambda t: float(_raw_bump(t)), -1, 1, epsabs=1e-14, epsrel=1e-13, limit=200)
    return 1.0 / total


@dataclass(frozen=True)
class Kernel:
    """Smooth compactly supported kernel on [-halfwidth, halfwidth]."""

    value: callable
    derivative: callable
    halfwidth: float
    label: str = "kernel"

    def mass(self) -> float:
        lo, hi = -self.halfwidth, self.halfwidth
        out = 0.0
        for a, b in ((lo, 0.0), (0.0, hi)):
            v, _ = quad(lambda t: float(self.value(t)), a, b, epsabs=1e-13, epsrel=1e-12, limit=200)
            out += v
        return out

    def l1_norm(self) -> float:
        lo, hi = -self.halfwidth, self.halfwidth
        out = 0.0
        for a, b in ((lo, -0.5 * self.halfwidth), (-0.5 * self.halfwidth, 0.0),
                     (0.0, 0.5 * self.halfwidth), (0.5 * self.halfwidth, hi)):
            v, _ = quad(lambda t: abs(float(self.value(t))), a, b,
                        epsabs=1e-13, epsrel=1e-12, limit=200)
            out += v
        return out


def bump_kernel() -> Kernel:
    """The normalised smooth bump c exp(-1/(1-t^2)) on (-1, 1)."""
    c = _bump_norm()
    return Kernel(
        value=lambda t: c * _raw_bump(t),
        derivative=lambda t: c * _raw_bump_derivative(t),
        halfwidth=1.0,
        label="bump",
    )


def shifted_kernel(offset: float = 0.25) -> Kernel:
    """Bump recentred at ``offset``; support [offset - 1, offset + 1]."""
    if not abs(offset) < 1.0:
        raise InvalidParams(f"offset fraction must satisfy |offset| < 1, got {offset}")
    c = _bump_norm()
    return Kernel(
        value=lambda t: c * _raw_bump(t - offset),
        derivative=lambda t: c * _raw_bump_derivative(t - offset),
        halfwidth=1.0 + abs(offset),
        label=f"shifted({offset:g})",
    )


def signed_kernel(weight: float = 1.0) -> Kernel:
    """Two opposite-sign bumps with unit total mass and L1 norm 1 + 2*weight.

    The positive part sits on (-1, 0) with mass 1 + weight, the negative
    part on (0, 1) with mass -weight.
    """
    if weight <= 0:
        raise InvalidParams(f"weight must be positive, got {weight}")
    c = _bump_norm()
    wp, wn = 1.0 + weight, weight

    def value(t):
        return 2 * c * (wp * _raw_bump(2 * t + 1) - wn * _raw_bump(2 * t - 1))

    def derivative(t):
        return 4 * c * (wp * _raw_bump_derivative(2 * t + 1) - wn * _raw_bump_derivative(2 * t - 1))

    return Kernel(value=value, derivative=derivative, halfwidth=1.0, label=f"signed({weight:g})")


def scaled_kernel(factor: float) -> Kernel:
    """Bump with mass ``factor``; a negative control for the mass axiom."""
    base = bump_kernel()
    return Kernel(
        value=lambda t: factor * base.value(t),
        derivative=lambda t: factor * base.derivative(t),
        halfwidth=1.0,
        label=f"scaled({factor:g})",
    )


@dataclass(frozen=True)
class DeltaNet:
    """Strict delta net delta_eps(u) = kernel(u/eps)/eps.

    ``mass`` and ``L1_bound`` are fixed once at construction by adaptive
    quadrature of the kernel (rescaling leaves both invariant).
    """

    kernel: Kernel
    kind: str = "model"
    mass: float = field(default=None)
    L1_bound: float = field(default=None)

    def __post_init__(self):
        if self.mass is None:
            object.__setattr__(self, "mass", self.kernel.mass())
        if self.L1_bound is None:
            object.__setattr__(self, "L1_bound", self.kernel.l1_norm())

    @staticmethod
    def bump() -> "DeltaNet":
        return DeltaNet(bump_kernel(), kind="model")

    @staticmethod
    def shifted(offset: float = 0.25) -> "DeltaNet":
        return DeltaNet(shifted_kernel(offset), kind="shifted")

    @staticmethod
    def signed(weight: float = 1.0) -> "DeltaNet":
        return DeltaNet(signed_kernel(weight), kind="signed")

    def _check_eps(self, eps: float) -> float:
        eps = float(eps)
        if not 0.0 < eps <= 1.0:
            raise InvalidEpsilon(f"eps must lie in (0, 1], got {eps}")
        return eps

    def support_radius(self, eps: float) -> float:
        return self._check_eps(eps) * self.kernel.halfwidth

    def eval(self, eps: float, u):
        """delta_eps(u); exactly zero outside the support."""
        eps = self._check_eps(eps)
        u = np.asarray(u, dtype=float)
        out = np.where(
            np.abs(u) < self.kernel.halfwidth * eps,
            self.kernel.value(u / eps) / eps,
            0.0,
        )
        return float(out) if out.ndim == 0 else out

    def eval_derivative(self, eps: float, u):
        """d/du delta_eps(u); exactly zero outside the support."""
        eps = self._check_eps(eps)
        u = np.asarray(u, dtype=float)
        out = np.where(
            np.abs(u) < self.kernel.halfwidth * eps,
            self.kernel.derivative(u / eps) / eps**2,
            0.0,
        )
        return float(out) if out.ndim == 0 else out


@dataclass
class AxiomReport:
    """Per-eps quadrature results and pass/fail flags for the three axioms."""

    kind: str
    eps: list
    support_radii: list
    masses: list
    l1_norms: list
    support_shrinks: bool
    mass_to_one: bool
    l1_bounded: bool
    observed_K: float
    declared_K: float

    @property
    def passed(self) -> bool:
        return self.support_shrinks and self.mass_to_one and self.l1_bounded

    def rows(self):
        return [
            {"eps": e, "support_radius": r, "mass": m, "l1_norm": l}
            for e, r, m, l in zip(self.eps, self.support_radii, self.masses, self.l1_norms)
        ]


def verify_axioms(net: DeltaNet, eps_list, mass_tol: float = 1e-8) -> AxiomReport:
    """Check the three delta-net axioms over a decreasing list of eps.

    Support radii must shrink to zero, the quadrature mass of the smallest
    eps must be within ``mass_tol`` of 1, and every L1 norm must stay at or
    below the declared bound.  A report is always produced.
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise InvalidParams("eps_list must be nonempty")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise InvalidParams("eps_list must be strictly decreasing")

    radii, masses, l1s = [], [], []
    for eps in eps_list:
        R = net.support_radius(eps)
        radii.append(R)
        m = 0.0
        l1 = 0.0
        # split at the support midpoint: the integrand is flat zero outside
        # and may have an interior sign change
        for a, b in ((-R, -0.5 * R), (-0.5 * R, 0.0), (0.0, 0.5 * R), (0.5 * R, R)):
            v, _ = quad(lambda u: net.eval(eps, u), a, b, epsabs=1e-13, epsrel=1e-12, limit=200)
            w, _ = quad(lambda u: abs(net.eval(eps, u)), a, b, epsabs=1e-13, epsrel=1e-12, limit=200)
            m += v
            l1 += w
        masses.append(m)
        l1s.append(l1)

    shrinks = all(r2 < r1 for r1, r2 in zip(radii, radii[1:])) and radii[-1] < radii[0]
    if len(radii) == 1:
        shrinks = True
    mass_ok = abs(masses[-1] - 1.0) < mass_tol
    observed_K = max(l1s)
    l1_ok = observed_K <= net.L1_bound + 1e-8

    return AxiomReport(
        kind=net.kind,
        eps=eps_list,
        support_radii=radii,
        masses=masses,
        l1_norms=l1s,
        support_shrinks=shrinks,
        mass_to_one=mass_ok,
        l1_bounded=l1_ok,
        observed_K=observed_K,
        declared_K=net.L1_bound,
    )


def net_by_name(kernel: str, params: dict | None = None) -> DeltaNet:
    """Resolve the net spec used in run configurations."""
    params = dict(params or {})
    if kernel == "bump":
        if params:
            raise InvalidParams(f"bump kernel takes no params, got {params}")
        return DeltaNet.bump()
    if kernel == "shifted":
        return DeltaNet.shifted(**params)
    if kernel == "signed":
        return DeltaNet.signed(**params)
    raise InvalidParams(f"unknown kernel {kernel!r}")
