"""Embedded Dormand-Prince 5(4) stepper.

Shared integration core for the spacetime system, the background geodesic
flow and the reference propagators.  Supports mandatory step nodes
(breakpoints), a position-dependent step cap used to resolve the impulse
zone, and state-based termination tests with bisection refinement of the
stopping time.  Integration may run in either direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PointOutsideChart

__all__ = [
    "Completed",
    "BlowUp",
    "LeftChart",
    "MaxSteps",
    "HermiteDense",
    "StepperResult",
    "integrate",
]


@dataclass(frozen=True)
class Completed:
    horizon: float


@dataclass(frozen=True)
class BlowUp:
    u: float
    norm: float


@dataclass(frozen=True)
class LeftChart:
    u: float


@dataclass(frozen=True)
class MaxSteps:
    u: float


# Dormand-Prince 5(4), FSAL.  The propagating weights are adjusted by one
# ulp so they sum to exactly 1.0: constant-derivative problems then
# integrate bit-exactly (straight lines stay straight as printed).
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = (
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B[5] += 1.0 - _B.sum()
# b - b_hat: weights of the embedded 4th-order error estimate
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

_N_STAGES = 7
_ORDER_EXP = 0.2  # 1 / (order of error estimate + 1)


class HermiteDense:
    """Piecewise cubic Hermite interpolant through (t_i, y_i, f_i) nodes."""

    def __init__(self, t, y, f):
        t = np.asarray(t, dtype=float)
        if t.size < 1:
            raise ValueError("need at least one node")
        self._ascending = bool(t.size < 2 or t[1] >= t[0])
        self._t = t if self._ascending else t[::-1]
        self._y = np.atleast_2d(np.asarray(y, dtype=float))
        self._f = np.atleast_2d(np.asarray(f, dtype=float))
        if not self._ascending:
            self._y = self._y[::-1]
            self._f = self._f[::-1]

    @property
    def t_min(self):
        return self._t[0]

    @property
    def t_max(self):
        return self._t[-1]

    def __call__(self, s):
        scalar = np.isscalar(s) or np.ndim(s) == 0
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t, y, f = self._t, self._y, self._f
        if t.size == 1:
            out = np.repeat(y, s.size, axis=0)
            return out[0] if scalar else out
        idx = np.clip(np.searchsorted(t, s, side="right") - 1, 0, t.size - 2)
        t0, t1 = t[idx], t[idx + 1]
        h = (t1 - t0)[:, None]
        w = ((s - t0) / (t1 - t0))[:, None]
        y0, y1 = y[idx], y[idx + 1]
        f0, f1 = f[idx], f[idx + 1]
        h00 = (1 + 2 * w) * (1 - w) ** 2
        h10 = w * (1 - w) ** 2
        h01 = w * w * (3 - 2 * w)
        h11 = w * w * (w - 1)
        out = h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1
        return out[0] if scalar else out

    def derivative(self, s):
        scalar = np.isscalar(s) or np.ndim(s) == 0
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t, y, f = self._t, self._y, self._f
        if t.size == 1:
            out = np.repeat(f, s.size, axis=0)
            return out[0] if scalar else out
        idx = np.clip(np.searchsorted(t, s, side="right") - 1, 0, t.size - 2)
        t0, t1 = t[idx], t[idx + 1]
        h = (t1 - t0)[:, None]
        w = ((s - t0) / (t1 - t0))[:, None]
        y0, y1 = y[idx], y[idx + 1]
        f0, f1 = f[idx], f[idx + 1]
        d00 = 6 * w * (w - 1) / h
        d10 = (1 - w) * (1 - 3 * w)
        d01 = -6 * w * (w - 1) / h
        d11 = w * (3 * w - 2)
        out = d00 * y0 + d10 * f0 + d01 * y1 + d11 * f1
        return out[0] if scalar else out


@dataclass
class StepperResult:
    t: np.ndarray
    y: np.ndarray
    f: np.ndarray
    status: object
    n_steps: int
    n_rejected: int
    min_step: float

    def dense(self) -> HermiteDense:
        return HermiteDense(self.t, self.y, self.f)


def _error_norm(err, y0, y1, tol):
    scale = tol + tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def integrate(
    rhs,
    t0,
    y0,
    t1,
    tol,
    *,
    max_step=np.inf,
    step_cap=None,
    breakpoints=(),
    reject_state=None,
    max_steps=1_000_000,
    first_step=None,
):
    """Integrate ``dy/dt = rhs(t, y)`` from ``t0`` to ``t1``.

    ``step_cap(t)`` may return a tighter bound on ``|h|`` for steps
    starting at ``t``.  ``breakpoints`` are landed on exactly.
    ``reject_state(t, y)`` is evaluated at every accepted node; a non-None
    termination stops the run and its time is refined by bisection on the
    dense interpolant.  Stage evaluations that raise
    :class:`PointOutsideChart` or return non-finite values reject the step.
    """
    y0 = np.asarray(y0, dtype=float)
    t0, t1 = float(t0), float(t1)
    if t1 == t0:
        f0 = rhs(t0, y0)
        return StepperResult(
            np.array([t0]), y0[None, :], np.asarray(f0)[None, :],
            Completed(t1), 0, 0, 0.0,
        )
    direction = 1.0 if t1 > t0 else -1.0
    span = abs(t1 - t0)

    bps = sorted(
        {float(b) for b in breakpoints if (b - t0) * direction > 0 and (t1 - b) * direction > 0},
        key=lambda b: (b - t0) * direction,
    )
    bps.append(t1)

    ts = [t0]
    ys = [y0.copy()]
    f = np.asarray(rhs(t0, y0), dtype=float)
    fs = [f.copy()]

    status = reject_state(t0, y0) if reject_state is not None else None
    if status is not None:
        return StepperResult(np.array(ts), np.array(ys), np.array(fs), status, 0, 0, 0.0)

    def cap_at(t):
        cap = max_step
        if step_cap is not None:
            cap = min(cap, float(step_cap(t)))
        return cap

    if first_step is None:
        fnorm = float(np.max(np.abs(f)))
        h = min(1e-2 * span, 1e-2 * max(span, 1.0) / max(fnorm, 1.0))
    else:
        h = float(first_step)
    h = max(min(h, cap_at(t0)), 1e-12 * max(span, 1.0))

    t = t0
    y = y0.copy()
    n = y0.size
    k = np.empty((_N_STAGES, n))
    n_steps = 0
    n_rejected = 0
    min_step = np.inf
    status = None
    tiny = 1e-14 * max(span, 1.0)
    next_bp = 0

    while True:
        if (t1 - t) * direction <= tiny:
            status = Completed(t1)
            break
        if n_steps + n_rejected >= max_steps:
            status = MaxSteps(t)
            break

        while (bps[next_bp] - t) * direction <= tiny:
            next_bp += 1
        h = min(h, cap_at(t))
        h = max(h, 1e-15 * max(abs(t), 1.0))
        landed = None
        if (bps[next_bp] - t) * direction <= h * (1 + 1e-9):
            landed = bps[next_bp]
            h = abs(landed - t)

        # stages
        k[0] = f
        failed = False
        try:
            for i in range(1, _N_STAGES):
                yi = y + direction * h * (k[:i].T @ _A[i])
                k[i] = rhs(t + direction * h * _C[i], yi)
            y_new = y + direction * h * (k.T @ _B)
            if not np.all(np.isfinite(y_new)):
                failed = True
        except (PointOutsideChart, FloatingPointError):
            failed = True

        if failed:
            n_rejected += 1
            h *= 0.25
            if h <= 1e-14 * max(abs(t), 1.0):
                # cannot step without leaving the chart / finite range
                status = LeftChart(t)
                break
            continue

        err_vec = direction * h * (k.T @ _E)
        err = _error_norm(err_vec, y, y_new, tol)
        if err <= 1.0 or h <= 1e-14 * max(abs(t), 1.0):
            t_new = landed if landed is not None else t + direction * h
            f_new = k[_N_STAGES - 1]  # FSAL
            n_steps += 1
            min_step = min(min_step, h)

            stop = reject_state(t_new, y_new) if reject_state is not None else None
            if stop is not None:
                t_stop, y_stop, stop = _refine_stop(
                    reject_state, t, y, f, t_new, y_new, f_new, stop
                )
                ts.append(t_stop)
                ys.append(y_stop)
                fs.append(f_new)
                status = stop
                break

            ts.append(t_new)
            ys.append(y_new.copy())
            fs.append(f_new.copy())
            t, y, f = t_new, y_new.copy(), f_new.copy()
            grow = 0.9 * err ** -_ORDER_EXP if err > 0 else 5.0
            h = h * min(5.0, max(0.2, grow))
        else:
            n_rejected += 1
            h = h * max(0.2, 0.9 * err ** -_ORDER_EXP)

    return StepperResult(
        np.asarray(ts), np.asarray(ys), np.asarray(fs),
        status, n_steps, n_rejected,
        0.0 if not np.isfinite(min_step) else float(min_step),
    )


def _refine_stop(reject_state, t0, y0, f0, t1, y1, f1, stop):
    """Bisect the stopping time on the local Hermite interpolant."""
    dense = HermiteDense([t0, t1], [y0, y1], [f0, f1])
    lo, hi = t0, t1  # lo: no stop, hi: stop
    stop_hi = stop
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        y_mid = dense(mid)
        s = reject_state(mid, y_mid)
        if s is None:
            lo = mid
        else:
            hi = mid
            stop_hi = s
    return hi, dense(hi), stop_hi
