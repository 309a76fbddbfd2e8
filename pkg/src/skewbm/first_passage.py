"""First-passage time density and distribution of skew Brownian motion.

Cases for a target y > 0 (targets below zero go through the mirror map
(alpha, x, y) -> (1 - alpha, -x, -y)):

* x <= 0 < y: a geometric mixture of Brownian hitting laws (``g_series``).
* 0 < x < y: either hit y before 0 (theta kernel), or hit 0 first and then
  travel from the origin; the second part is a single convolution.
* 0 < y < x: the path never meets 0 before y, so the law is Brownian.
* y = 0: the hitting time of 0 does not see the skewness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from skewbm.errors import ConvergenceError, DomainError
from skewbm.excursion_law import RankedHeightQuery, ranked_height_tail_result
from skewbm.kernels import (
    DEFAULT_CONTROL,
    SeriesControl,
    _bm_density_raw,
    _check_alpha,
    bm_fpt_cdf,
    bm_fpt_density,
    g_series,
    mixture_cdf,
    mixture_density,
    theta_cdf,
    theta_density,
    theta_hitting_density,
)
from skewbm.quadrature import integrate_adaptive

DEFAULT_QUAD_TOL = 1e-9
QUAD_MAX_EVALS = 400_000


def mirror_alpha(alpha: float) -> float:
    """1 - alpha, rounded to 15 significant digits.

    Plain ``1.0 - 0.7`` is 0.30000000000000004, so a query and its mirror
    image would differ in the last bit.  The rounding moves alpha by at most
    one part in 1e15 and makes decimal inputs map exactly.
    """
    return float(f"{1.0 - alpha:.15g}")


@dataclass(frozen=True)
class FirstPassageQuery:
    alpha: float
    x: float
    y: float
    t: float

    def __post_init__(self):
        _check_alpha(self.alpha)
        for name in ("x", "y", "t"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.x == self.y:
            raise DomainError("x == y: the hitting time is identically zero")
        if self.t < 0:
            raise DomainError("t must be nonnegative")

    def mirrored(self) -> "FirstPassageQuery":
        return FirstPassageQuery(mirror_alpha(self.alpha), -self.x, -self.y, self.t)


@dataclass
class DensityCurve:
    t_grid: np.ndarray
    values: np.ndarray
    kind: str
    alpha: float
    x: float
    y: float
    abs_tol: float
    quad_tol: float
    error_bounds: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.kind not in ("density", "cdf"):
            raise DomainError(f"kind must be 'density' or 'cdf', got {self.kind!r}")
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.t_grid.shape != self.values.shape:
            raise DomainError("t_grid and values must have equal length")
        if np.any(np.diff(self.t_grid) <= 0):
            raise DomainError("t_grid must be strictly ascending")
        if self.error_bounds is None:
            self.error_bounds = np.zeros_like(self.values)


# ---------------------------------------------------------------------------
# start at the origin

def fpt_density_from_origin(alpha: float, y: float, t: float,
                            ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Density of T_y for alpha-skew BM started at 0 (y != 0, t > 0)."""
    _check_alpha(alpha)
    if y == 0:
        raise DomainError("y must be nonzero")
    if y < 0:
        return g_series(mirror_alpha(alpha), 0.0, -y, t, ctrl).value
    return g_series(alpha, 0.0, y, t, ctrl).value


def fpt_cdf_from_origin(alpha: float, y: float, t: float,
                        ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """P_0(T_y <= t), equal to P_0(M_1(t) > y) for y > 0."""
    _check_alpha(alpha)
    if y == 0:
        raise DomainError("y must be nonzero")
    if t < 0:
        raise DomainError("t must be nonnegative")
    if t == 0:
        return 0.0
    if y < 0:
        alpha, y = mirror_alpha(alpha), -y
    res = ranked_height_tail_result(alpha, RankedHeightQuery(1, y, t), ctrl)
    return min(max(res.value, 0.0), 1.0)


# ---------------------------------------------------------------------------
# the convolution through the origin (0 < x < y)

def _convolve(inner, outer, t, quad_tol, max_evals=QUAD_MAX_EVALS):
    # integral_0^t inner(t - s) outer(s) ds
    def integrand(s):
        return inner(t - s) * outer(s)

    return integrate_adaptive(integrand, 0.0, t, quad_tol, max_evals)


def correction_term(alpha: float, x: float, y: float, t: float,
                    ctrl: SeriesControl = DEFAULT_CONTROL,
                    quad_tol: float = DEFAULT_QUAD_TOL, full_output: bool = False):
    """sum_n (2 / pi n) sin(pi (y - x) n / y) (g_{0,y} * kappa_n)(t), 0 < x < y.

    The weighted exponential kernels sum to the theta kernel h_{x,y}, so the
    double series collapses to one convolution
    integral_0^t h_{x,y}(t - s) g_{0,y}(s) ds, evaluated adaptively.
    """
    _check_alpha(alpha)
    if not (0 < x < y):
        raise DomainError(f"correction_term needs 0 < x < y, got x={x}, y={y}")
    if not t > 0:
        raise DomainError("t must be positive")
    tol = ctrl.abs_tol
    res = _convolve(lambda u: theta_density(x, y, u, tol),
                    lambda s: mixture_density(alpha, 0.0, y, s, tol, ctrl.max_terms),
                    t, quad_tol)
    value = max(res.value, 0.0)
    if full_output:
        return value, res.error_estimate + tol * t
    return value


def _middle_density(alpha, x, y, t, ctrl, quad_tol):
    # hit y before 0, plus: hit 0 first (theta kernel from the reflected
    # start y - x), then go from 0 to y
    direct = theta_hitting_density(x, y, t, ctrl, method="auto")
    via_zero, err = correction_term(alpha, y - x, y, t, ctrl, quad_tol, full_output=True)
    return direct.value + via_zero, direct.tail_bound + err


def _density(q: FirstPassageQuery, ctrl, quad_tol):
    if q.t <= 0:
        raise DomainError("density needs t > 0")
    if q.y < 0:
        return _density(q.mirrored(), ctrl, quad_tol)
    alpha, x, y, t = q.alpha, q.x, q.y, q.t
    if y == 0 or x > y:
        return bm_fpt_density(x, y, t), 0.0
    if x <= 0:
        res = g_series(alpha, x, y, t, ctrl)
        return res.value, res.tail_bound
    return _middle_density(alpha, x, y, t, ctrl, quad_tol)


def fpt_density(q: FirstPassageQuery, ctrl: SeriesControl = DEFAULT_CONTROL,
                quad_tol: float = DEFAULT_QUAD_TOL, full_output: bool = False):
    """Density of T_y at time t for alpha-skew BM started at x.

    With ``full_output=True`` returns ``(value, error_bound)`` where the bound
    adds series tail bounds and the quadrature error estimate.
    """
    value, err = _density(q, ctrl, quad_tol)
    return (value, err) if full_output else value


def _middle_cdf(alpha, x, y, t, ctrl, quad_tol):
    tol = ctrl.abs_tol
    direct = float(theta_cdf(x, y, t, tol))
    res = _convolve(lambda u: mixture_cdf(alpha, 0.0, y, u, tol, ctrl.max_terms),
                    lambda s: theta_density(y - x, y, s, tol),
                    t, quad_tol)
    return direct + res.value, res.error_estimate + 2 * tol


def _cdf(q: FirstPassageQuery, ctrl, quad_tol):
    if q.y < 0:
        return _cdf(q.mirrored(), ctrl, quad_tol)
    alpha, x, y, t = q.alpha, q.x, q.y, q.t
    if t == 0:
        return 0.0, 0.0
    if y == 0 or x > y:
        return bm_fpt_cdf(x, y, t), 0.0
    if x == 0:
        return fpt_cdf_from_origin(alpha, y, t, ctrl), ctrl.abs_tol
    if x < 0:
        return float(mixture_cdf(alpha, x, y, t, ctrl.abs_tol, ctrl.max_terms)), ctrl.abs_tol
    return _middle_cdf(alpha, x, y, t, ctrl, quad_tol)


def fpt_cdf(q: FirstPassageQuery, ctrl: SeriesControl = DEFAULT_CONTROL,
            quad_tol: float = DEFAULT_QUAD_TOL, full_output: bool = False):
    """P_x(T_y <= t) for alpha-skew BM.

    Closed forms where the start and target sit on opposite sides of the
    origin (or the start is beyond the target); for 0 < x < y the theta
    distribution is added to one convolution of the origin-start CDF with
    the density of reaching 0 before y.
    """
    value, err = _cdf(q, ctrl, quad_tol)
    value = min(max(value, 0.0), 1.0)
    return (value, err) if full_output else value


# ---------------------------------------------------------------------------
# curves

def log_grid(t_min: float, t_max: float, points: int) -> np.ndarray:
    if not (0 < t_min < t_max) or points < 2:
        raise DomainError("need 0 < t_min < t_max and points >= 2")
    return np.geomspace(t_min, t_max, points)


def evaluate_curve(alpha: float, x: float, y: float, t_grid, kind: str = "density",
                   ctrl: SeriesControl = DEFAULT_CONTROL,
                   quad_tol: float = DEFAULT_QUAD_TOL) -> DensityCurve:
    """Density or CDF of T_y on a time grid."""
    t_grid = np.asarray(t_grid, dtype=float)
    fn = _density if kind == "density" else _cdf
    values = np.empty_like(t_grid)
    errors = np.empty_like(t_grid)
    for i, t in enumerate(t_grid):
        values[i], errors[i] = fn(FirstPassageQuery(alpha, x, y, float(t)), ctrl, quad_tol)
    if kind == "cdf":
        values = np.clip(values, 0.0, 1.0)
    return DensityCurve(t_grid, values, kind, alpha, x, y, ctrl.abs_tol, quad_tol, errors)


def cdf_function(alpha: float, x: float, y: float, t_max: float,
                 ctrl: SeriesControl = DEFAULT_CONTROL, points: int = 600):
    """Vectorised CDF of T_y on [0, t_max].

    Closed-form cases are evaluated directly; the 0 < x < y case is
    tabulated on a log grid and interpolated with a monotone cubic.
    """
    _check_alpha(alpha)
    if x == y:
        raise DomainError("x == y")
    if y < 0:
        alpha, x, y = mirror_alpha(alpha), -x, -y
    tol = ctrl.abs_tol

    if y == 0 or x > y:
        dist = abs(y - x)
        return lambda t: np.where(np.asarray(t) > 0,
                                  bm_fpt_cdf(0.0, dist, np.maximum(np.asarray(t, float), 0.0)), 0.0)
    if x <= 0:
        return lambda t: mixture_cdf(alpha, x, y, np.asarray(t, float), tol, ctrl.max_terms)

    from scipy.interpolate import PchipInterpolator

    grid = np.concatenate([[0.0], np.geomspace(1e-4 * y * y, t_max, points)])
    vals = np.array([0.0] + [_middle_cdf(alpha, x, y, float(t), ctrl, DEFAULT_QUAD_TOL)[0]
                             for t in grid[1:]])
    vals = np.maximum.accumulate(np.clip(vals, 0.0, 1.0))
    interp = PchipInterpolator(grid, vals, extrapolate=False)

    def cdf(t):
        t = np.asarray(t, dtype=float)
        out = interp(np.clip(t, 0.0, t_max))
        return np.where(t > t_max, interp(t_max), out)

    return cdf


def density_function(alpha: float, x: float, y: float,
                     ctrl: SeriesControl = DEFAULT_CONTROL):
    """Vectorised density of T_y for the closed-form cases (no convolution)."""
    _check_alpha(alpha)
    if y < 0:
        alpha, x, y = mirror_alpha(alpha), -x, -y
    if y == 0 or x > y:
        return lambda t: _bm_density_raw(y - x, np.asarray(t, float))
    if x <= 0:
        return lambda t: mixture_density(alpha, x, y, np.asarray(t, float), ctrl.abs_tol, ctrl.max_terms)
    raise DomainError("0 < x < y needs the convolution; use fpt_density")


__all__ = [
    "ConvergenceError",
    "DensityCurve",
    "FirstPassageQuery",
    "correction_term",
    "cdf_function",
    "density_function",
    "evaluate_curve",
    "fpt_cdf",
    "fpt_cdf_from_origin",
    "fpt_density",
    "fpt_density_from_origin",
    "log_grid",
]
