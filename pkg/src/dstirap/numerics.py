"""Numerical kernels shared by the design and propagation layers.

Three independent pieces: an initial-value integrator for complex-valued
ODEs sampled on a fixed output grid, a small nonlinear least-squares fitter
for the two compact detuning families, and a level-crossing search on
sampled time series.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import least_squares


class IntegrationError(RuntimeError):
    """Raised when the ODE integrator cannot continue.

    Carries the time at which the right-hand side stopped being usable.
    """

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class FitConvergenceError(RuntimeError):
    """Raised when the fitter hits its iteration cap.

    ``parameters`` and ``residual_rms`` hold the best point reached.
    """

    def __init__(self, message, parameters, residual_rms):
        super().__init__(message)
        self.parameters = parameters
        self.residual_rms = residual_rms


@dataclass(frozen=True)
class TimeGrid:
    """Uniform output grid: ``n_steps`` samples covering [t_start, t_end]."""

    t_start: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")
        if self.n_steps < 2:
            raise ValueError("n_steps must be at least 2")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_steps)

    @property
    def span(self) -> float:
        return self.t_end - self.t_start


class FitFamily(enum.Enum):
    """Model families for :func:`fit_least_squares`."""

    FOURIER = "fourier"          # p0 + p1*cos(p2*t), 3 parameters
    GAUSSIAN_SUM = "gaussian_sum"  # two Gaussians (amp, center, width) each, 6 parameters


_N_PARAMS = {FitFamily.FOURIER: 3, FitFamily.GAUSSIAN_SUM: 6}


@dataclass
class FitResult:
    family: FitFamily
    parameters: np.ndarray
    residual_rms: float

    def __call__(self, t):
        return evaluate_fit(self.family, self.parameters, t)

    def derivative(self, t):
        return evaluate_fit_derivative(self.family, self.parameters, t)


def evaluate_fit(family: FitFamily, p, t):
    """Evaluate a fit family at time(s) ``t``."""
    t = np.asarray(t, dtype=float)
    if family is FitFamily.FOURIER:
        return p[0] + p[1] * np.cos(p[2] * t)
    return p[0] * np.exp(-(((t - p[1]) / p[2]) ** 2)) + p[3] * np.exp(
        -(((t - p[4]) / p[5]) ** 2)
    )


def evaluate_fit_derivative(family: FitFamily, p, t):
    """Time derivative of a fit family at ``t`` (analytic)."""
    t = np.asarray(t, dtype=float)
    if family is FitFamily.FOURIER:
        return -p[1] * p[2] * np.sin(p[2] * t)
    g0 = p[0] * np.exp(-(((t - p[1]) / p[2]) ** 2)) * (-2 * (t - p[1]) / p[2] ** 2)
    g1 = p[3] * np.exp(-(((t - p[4]) / p[5]) ** 2)) * (-2 * (t - p[4]) / p[5] ** 2)
    return g0 + g1


def _fit_jacobian(family: FitFamily, p, t):
    if family is FitFamily.FOURIER:
        J = np.empty((t.size, 3))
        J[:, 0] = 1.0
        J[:, 1] = np.cos(p[2] * t)
        J[:, 2] = -p[1] * t * np.sin(p[2] * t)
        return J
    J = np.empty((t.size, 6))
    for k, off in ((0, 0), (1, 3)):
        amp, mu, nu = p[off], p[off + 1], p[off + 2]
        u = (t - mu) / nu
        e = np.exp(-(u**2))
        J[:, off] = e
        J[:, off + 1] = amp * e * 2 * u / nu
        J[:, off + 2] = amp * e * 2 * u**2 / nu
    return J


def _default_init(family: FitFamily, t, v):
    """Peak-based starting point used when ``init`` is all zeros."""
    if family is FitFamily.FOURIER:
        lo, hi = v.min(), v.max()
        spread = abs(t[np.argmax(v)] - t[np.argmin(v)])
        omega = np.pi / spread if spread > 0 else 2 * np.pi / (t[-1] - t[0])
        return np.array([0.5 * (hi + lo), 0.5 * (hi - lo), omega])
    mid = 0.5 * (t[0] + t[-1])
    fallback_width = 0.125 * (t[-1] - t[0])
    init = []
    for mask in (t <= mid, t >= mid):
        th, vh = t[mask], np.abs(v[mask])
        weight = vh.sum()
        if weight <= 0:
            init += [0.0, 0.5 * (th[0] + th[-1]), fallback_width]
            continue
        mu = float((th * vh).sum() / weight)
        var = float(((th - mu) ** 2 * vh).sum() / weight)
        nu = math.sqrt(2.0 * var) if var > 0 else fallback_width
        amp = float(np.interp(mu, t, v))
        init += [amp, mu, nu]
    return np.asarray(init)


def fit_least_squares(samples, family: FitFamily, init) -> FitResult:
    """Least-squares fit of ``samples`` (an (N, 2) array of (t, value) rows).

    Levenberg-Marquardt with analytic Jacobians; iteration cap 200; parameter
    update tolerance 1e-10. An all-zero ``init`` requests the built-in
    peak-location heuristics. Deterministic for identical inputs.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != 2:
        raise ValueError("samples must be an (N, 2) array of (t, value) pairs")
    t, v = samples[:, 0], samples[:, 1]
    n_params = _N_PARAMS[family]
    if t.size < 2 * n_params:
        raise ValueError(
            f"need at least {2 * n_params} samples to fit {family.value}, got {t.size}"
        )
    init = np.asarray(init, dtype=float)
    if init.shape != (n_params,):
        raise ValueError(f"init must have {n_params} entries for {family.value}")
    if not init.any():
        init = _default_init(family, t, v)

    result = least_squares(
        lambda p: evaluate_fit(family, p, t) - v,
        init,
        jac=lambda p: _fit_jacobian(family, p, t),
        method="lm",
        xtol=1e-10,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=200 * (n_params + 1),
    )
    rms = float(np.sqrt(np.mean(result.fun**2)))
    if not result.success:
        raise FitConvergenceError(
            f"fit did not converge within the iteration cap ({result.message})",
            parameters=result.x,
            residual_rms=rms,
        )
    return FitResult(family=family, parameters=result.x, residual_rms=rms)


def integrate_ivp(rhs, y0, grid: TimeGrid, tol: float = 1e-9,
                  method: str = "adaptive") -> np.ndarray:
    """Integrate ``y' = rhs(t, y)`` over ``grid`` for complex state vectors.

    Returns an (n_steps, dim) complex array sampled on the grid times.
    ``method="adaptive"`` uses an embedded Runge-Kutta 4(5) pair with relative
    tolerance ``tol``; ``method="fixed"`` uses classical RK4 at 4000 steps per
    unit time for bitwise-reproducible runs. A non-finite right-hand side
    raises :class:`IntegrationError` identifying the offending time.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    y0 = np.asarray(y0, dtype=complex)
    times = grid.times

    def checked_rhs(t, y):
        dy = np.asarray(rhs(t, y), dtype=complex)
        if not np.all(np.isfinite(dy)):
            raise IntegrationError(f"right-hand side is not finite at t={t!r}", t=t)
        return dy

    if method == "fixed":
        return _rk4_fixed(checked_rhs, y0, times)
    if method != "adaptive":
        raise ValueError(f"unknown method {method!r}")

    sol = solve_ivp(
        checked_rhs,
        (times[0], times[-1]),
        y0,
        method="RK45",
        t_eval=times,
        rtol=tol,
        atol=tol * 1e-3,
        max_step=0.25 * grid.span,
    )
    if not sol.success:
        raise IntegrationError(f"integration failed: {sol.message}", t=sol.t[-1] if sol.t.size else times[0])
    return sol.y.T.astype(complex)


def _rk4_fixed(rhs, y0, times, steps_per_unit: int = 4000):
    out = np.empty((times.size, y0.size), dtype=complex)
    out[0] = y0
    y = y0.astype(complex)
    for i in range(times.size - 1):
        t0, t1 = times[i], times[i + 1]
        n_sub = max(1, int(np.ceil((t1 - t0) * steps_per_unit)))
        h = (t1 - t0) / n_sub
        t = t0
        for _ in range(n_sub):
            k1 = rhs(t, y)
            k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
            k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
            k4 = rhs(t + h, y + h * k3)
            y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        out[i + 1] = y
    return out


def find_level_crossing(series, level: float, direction: str = "any"):
    """Earliest time at which a sampled series crosses ``level``.

    ``series`` is an (N, 2) array of (t, value) rows with strictly increasing
    times. Linear interpolation between the bracketing samples; ``direction``
    selects "rising", "falling", or "any". Returns None when there is no
    crossing.
    """
    series = np.asarray(series, dtype=float)
    t, v = series[:, 0], series[:, 1]
    if np.any(np.diff(t) <= 0):
        raise ValueError("series times must be strictly increasing")
    if direction not in ("rising", "falling", "any"):
        raise ValueError(f"unknown direction {direction!r}")

    d = v - level
    if d[0] == 0.0 and direction in ("any",):
        return float(t[0])
    for i in range(t.size - 1):
        lo, hi = d[i], d[i + 1]
        rising = lo < 0.0 <= hi
        falling = lo > 0.0 >= hi
        if direction == "rising" and not rising:
            continue
        if direction == "falling" and not falling:
            continue
        if not (rising or falling):
            if hi == 0.0 and direction == "any":
                return float(t[i + 1])
            continue
        frac = lo / (lo - hi)
        return float(t[i] + frac * (t[i + 1] - t[i]))
    return None
