"""Scalar special functions and series kernels.

Everything above this module is assembled from four pieces: the normal
distribution function, the Brownian first-passage law, the geometric
mixture of Brownian hitting densities (``g_series``) and the theta series
for Brownian motion killed at 0 (``theta_hitting_density``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from skewbm.errors import ConvergenceError, DomainError

SQRT_2PI = math.sqrt(2.0 * math.pi)
# image-sum below this value of t / y**2, spectral sum above
THETA_SWITCH = 1.0
# running condition number past which an alternating sum is refused
MAX_CONDITION = 1e8


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy shared by every infinite series."""

    abs_tol: float = 1e-12
    max_terms: int = 100_000

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise DomainError(f"abs_tol must be positive, got {self.abs_tol}")
        if int(self.max_terms) < 1:
            raise DomainError(f"max_terms must be >= 1, got {self.max_terms}")

    def scaled(self, factor: float) -> "SeriesControl":
        return SeriesControl(self.abs_tol * factor, self.max_terms)


DEFAULT_CONTROL = SeriesControl()


@dataclass(frozen=True)
class SeriesResult:
    value: float
    terms_used: int
    tail_bound: float

    def __float__(self):
        return float(self.value)


def _finite(name, value):
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value}")


def sum_log_concave(term: Callable[[int], float], ctrl: SeriesControl, label: str,
                    start: int = 1) -> SeriesResult:
    """Sum ``term(k)`` for k = start, start+1, ... .

    The magnitudes |term(k)| must form a log-concave sequence, so the ratio
    of consecutive magnitudes never increases.  Once that ratio ``r`` is
    below one, the remaining tail is at most ``b_k r / (1 - r)``.
    Summation stops when the current magnitude is below ``ctrl.abs_tol``,
    has decreased for three consecutive terms and the ratio bound applies.
    Terms are accumulated with ``math.fsum``; for sign-changing series the
    tail bound is inflated by the condition number sum|a_k| / |sum a_k|.
    """
    terms = []
    prev = math.inf
    run = 0
    tail = math.inf
    k = start
    while True:
        v = term(k)
        b = abs(v)
        terms.append(v)
        decreasing = math.isfinite(prev) and (b < prev or b == prev == 0.0)
        run = run + 1 if decreasing else 0
        if prev > 0 and math.isfinite(prev):
            r = b / prev
        else:
            r = 0.0 if b == 0.0 else math.inf
        if b < ctrl.abs_tol and run >= 3 and r < 1.0:
            tail = b * r / (1.0 - r)
            break
        if len(terms) >= ctrl.max_terms:
            partial = math.fsum(terms)
            raise ConvergenceError(
                f"{label}: no convergence within {ctrl.max_terms} terms "
                f"(last term {b:.3g})", value=partial, error_bound=b)
        prev = b
        k += 1
    value = math.fsum(terms)
    if any(v < 0 for v in terms) and any(v > 0 for v in terms):
        total_abs = math.fsum(abs(v) for v in terms)
        cond = total_abs / abs(value) if value != 0 else math.inf
        if cond > MAX_CONDITION and total_abs > ctrl.abs_tol:
            raise ConvergenceError(
                f"{label}: cancellation too severe (condition number {cond:.3g})",
                value=value, error_bound=tail * cond)
        if math.isfinite(cond):
            tail *= max(cond, 1.0)
    return SeriesResult(value, len(terms), tail)


# ---------------------------------------------------------------------------
# closed forms

def normal_cdf(z):
    """Standard normal distribution function, accurate in both tails."""
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("normal_cdf needs finite input")
    out = special.ndtr(arr)
    return float(out) if np.ndim(out) == 0 else out


def normal_sf(z):
    """1 - normal_cdf(z) without cancellation."""
    out = special.ndtr(-np.asarray(z, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def _bm_density_raw(d, t):
    # |d| / (sqrt(2 pi) t^1.5) exp(-d^2 / 2t), zero for t <= 0
    d = np.abs(d)
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = d / (SQRT_2PI * t ** 1.5) * np.exp(-d * d / (2.0 * t))
    return np.where(t > 0, out, 0.0)


def bm_fpt_density(x, y, t):
    """First-passage density of Brownian motion from x to level y at time t."""
    _finite("x", x)
    _finite("y", y)
    if x == y:
        raise DomainError("x == y: the hitting time is identically zero")
    ta = np.asarray(t, dtype=float)
    if np.any(ta <= 0) or not np.all(np.isfinite(ta)):
        raise DomainError("t must be positive and finite")
    out = _bm_density_raw(y - x, ta)
    return float(out) if np.ndim(out) == 0 else out


def bm_fpt_cdf(x, y, t):
    """P_x(T_y <= t) = 2 (1 - Phi(|y - x| / sqrt(t))) for Brownian motion."""
    _finite("x", x)
    _finite("y", y)
    if x == y:
        raise DomainError("x == y: the hitting time is identically zero")
    ta = np.asarray(t, dtype=float)
    if np.any(ta < 0) or np.any(np.isnan(ta)):
        raise DomainError("t must be nonnegative")
    with np.errstate(divide="ignore"):
        z = abs(y - x) / np.sqrt(ta)
    out = np.where(ta > 0, 2.0 * special.ndtr(-z), 0.0)
    return float(out) if np.ndim(out) == 0 else out


def exp_kernel_density(n: int, y: float, t):
    """Exponential density with rate pi^2 n^2 / (2 y^2), evaluated at t."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if y == 0 or not math.isfinite(y):
        raise DomainError("y must be finite and nonzero")
    ta = np.asarray(t, dtype=float)
    if np.any(ta < 0):
        raise DomainError("t must be nonnegative")
    lam = math.pi ** 2 * n * n / (2.0 * y * y)
    out = lam * np.exp(-lam * ta)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# geometric mixtures of Brownian hitting laws

def _check_alpha(alpha):
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie strictly inside (0, 1), got {alpha}")


def g_series(alpha: float, x: float, y: float, t: float,
             ctrl: SeriesControl = DEFAULT_CONTROL) -> SeriesResult:
    """2 alpha sum_j (1 - 2 alpha)^(j-1) f(x, (2j - 1) y, t) for x < y, y > 0.

    This is the density of the first passage to y > 0 for skew Brownian
    motion started at x <= 0.  At alpha = 1/2 only the first term survives
    and the result is exactly the Brownian density.
    """
    _check_alpha(alpha)
    for name, v in (("x", x), ("y", y), ("t", t)):
        _finite(name, v)
    if not (x < y and y > 0):
        raise DomainError(f"g_series needs x < y and y > 0, got x={x}, y={y}")
    if t <= 0:
        raise DomainError("t must be positive")
    q = 1.0 - 2.0 * alpha
    if q == 0.0:
        return SeriesResult(float(_bm_density_raw(y - x, t)), 1, 0.0)

    def term(j):
        return 2.0 * alpha * q ** (j - 1) * float(_bm_density_raw((2 * j - 1) * y - x, t))

    return sum_log_concave(term, ctrl, f"g_series(alpha={alpha}, x={x}, y={y}, t={t})")


def _tail_ok(b, prev, tol):
    # log-concave terms: the ratio bound b r / (1 - r) caps the tail
    if not np.all(b < tol) or not np.all(b <= prev):
        return False
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(prev > 0, b / prev, 0.0)
    if np.any(r >= 1.0):
        return False
    return bool(np.all(b * r / (1.0 - r) < tol))


def mixture_density(alpha, x, y, t, tol=1e-12, max_terms=100_000):
    """Vectorised ``g_series`` over an array of times (x < y, y > 0)."""
    t = np.asarray(t, dtype=float)
    q = 1.0 - 2.0 * alpha
    total = np.zeros_like(t)
    prev = np.full_like(t, np.inf)
    sqrt_t = np.sqrt(np.maximum(t, 0.0))
    for j in range(1, max_terms + 1):
        d = (2 * j - 1) * y - x
        term = 2.0 * alpha * q ** (j - 1) * _bm_density_raw(d, t)
        total += term
        b = np.abs(term)
        if q == 0.0:
            return total
        if j >= 3 and d >= sqrt_t.max() and _tail_ok(b, prev, tol):
            return total
        prev = b
    raise ConvergenceError(f"mixture_density: no convergence in {max_terms} terms")


def mixture_cdf(alpha, x, y, t, tol=1e-12, max_terms=100_000):
    """Vectorised 2 alpha sum_j q^(j-1) P_x(T_{(2j-1)y} <= t), x < y, y > 0."""
    t = np.asarray(t, dtype=float)
    q = 1.0 - 2.0 * alpha
    total = np.zeros_like(t)
    prev = np.full_like(t, np.inf)
    pos = t > 0
    rt = np.sqrt(np.where(pos, t, 1.0))
    for j in range(1, max_terms + 1):
        d = (2 * j - 1) * y - x
        term = np.where(pos, 2.0 * alpha * q ** (j - 1) * 2.0 * special.ndtr(-d / rt), 0.0)
        total += term
        b = np.abs(term)
        if q == 0.0:
            return total
        if j >= 3 and _tail_ok(b, prev, tol):
            return total
        prev = b
    raise ConvergenceError(f"mixture_cdf: no convergence in {max_terms} terms")


# ---------------------------------------------------------------------------
# Brownian motion on (0, y): hitting y before 0

def _theta_spectral_terms(x, y, t, ctrl):
    c = math.pi ** 2 * t / (2.0 * y * y)
    pref = math.pi / (y * y)
    # sum_{n>N} n e^{-c n^2} <= e^{-c N^2} / (2c) once N >= 1/sqrt(2c)
    n_mode = 1.0 / math.sqrt(2.0 * c)
    arg = pref / (2.0 * c * ctrl.abs_tol)
    n_tol = math.sqrt(math.log(arg) / c) if arg > 1.0 else 1.0
    n_terms = max(1, math.ceil(max(n_mode, n_tol)))
    if n_terms > ctrl.max_terms:
        raise ConvergenceError(
            f"theta series at x={x}, y={y}, t={t} needs {n_terms} terms "
            f"(max_terms={ctrl.max_terms})", error_bound=math.inf)
    tail = pref * math.exp(-c * n_terms * n_terms) / (2.0 * c)
    n = np.arange(1, n_terms + 1, dtype=float)
    terms = pref * n * np.exp(-c * n * n) * np.sin(math.pi * (y - x) * n / y)
    return terms, tail


def _theta_image_terms(x, y, t, ctrl):
    # signed images a_k = (y - x) + 2 k y, k in Z; after batch k every
    # remaining image sits at distance >= (2k + 1) y
    terms = []
    k = 0
    while True:
        for kk in ((0,) if k == 0 else (k, -k)):
            a = (y - x) + 2 * kk * y
            terms.append(float(math.copysign(1.0, a) * _bm_density_raw(a, t)))
        nxt = (2 * k + 1) * y
        if k >= 1 and nxt * nxt > 3.0 * t:
            bound = 2.0 * float(_bm_density_raw(nxt, t))
            if bound < 1e-3 * ctrl.abs_tol:
                break
        k += 1
        if 2 * k + 1 > ctrl.max_terms:
            raise ConvergenceError(f"theta image sum at x={x}, y={y}, t={t} did not converge")
    return np.array(terms), 2.0 * bound


def theta_hitting_density(x: float, y: float, t: float,
                          ctrl: SeriesControl = DEFAULT_CONTROL,
                          method: str = "spectral") -> SeriesResult:
    """Density of hitting y before 0 for Brownian motion started at 0 < x < y.

    ``method='spectral'`` sums (pi / y^2) sum_n n exp(-pi^2 n^2 t / 2y^2)
    sin(pi (y - x) n / y), choosing the number of terms from the Gaussian
    tail bound.  ``method='images'`` uses the method-of-images form, which
    converges fast when t / y^2 is small; ``'auto'`` picks between them.
    Small negative round-off is clamped to zero.
    """
    for name, v in (("x", x), ("y", y), ("t", t)):
        _finite(name, v)
    if not (0 < x < y):
        raise DomainError(f"theta_hitting_density needs 0 < x < y, got x={x}, y={y}")
    if t <= 0:
        raise DomainError("t must be positive")
    if method == "auto":
        method = "images" if t / (y * y) < THETA_SWITCH else "spectral"
    if method == "spectral":
        terms, tail = _theta_spectral_terms(x, y, t, ctrl)
    elif method == "images":
        terms, tail = _theta_image_terms(x, y, t, ctrl)
    else:
        raise DomainError(f"unknown method {method!r}")
    value = math.fsum(terms)
    slack = tail + 4 * np.finfo(float).eps * float(np.abs(terms).sum())
    if -slack <= value < 0:
        value = 0.0
    return SeriesResult(value, len(terms), slack)


def theta_density(x, y, t, tol=1e-12):
    """Vectorised ``theta_hitting_density`` (auto method) over times t >= 0."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    tau = t / (y * y)
    small = (t > 0) & (tau < THETA_SWITCH)
    large = tau >= THETA_SWITCH
    if np.any(small):
        ts = t[small]
        tmax = ts.max()
        acc = np.zeros_like(ts)
        k = 0
        while True:
            for kk in ((0,) if k == 0 else (k, -k)):
                a = (y - x) + 2 * kk * y
                acc += math.copysign(1.0, a) * _bm_density_raw(a, ts)
            nxt = (2 * k + 1) * y
            if k >= 1 and nxt * nxt > 3.0 * tmax:
                if 2.0 * _bm_density_raw(nxt, tmax) < 1e-3 * tol:
                    break
            k += 1
        out[small] = acc
    if np.any(large):
        tl = t[large]
        c_min = math.pi ** 2 * tl.min() / (2.0 * y * y)
        pref = math.pi / (y * y)
        n_terms = max(1, math.ceil(max(1.0 / math.sqrt(2 * c_min),
                                       math.sqrt(max(math.log(pref / (2 * c_min * tol)), 0.0) / c_min))))
        n = np.arange(1, n_terms + 1, dtype=float)[:, None]
        c = math.pi ** 2 * tl[None, :] / (2.0 * y * y)
        s = np.sin(math.pi * (y - x) * n / y)
        out[large] = (pref * n * np.exp(-c * n * n) * s).sum(axis=0)
    return np.maximum(out, 0.0)


def theta_cdf(x, y, t, tol=1e-12):
    """P_x(T_y <= t, T_y < T_0) for Brownian motion, 0 < x < y, vectorised.

    Small times integrate the images term by term; large times use
    x/y - sum_n (2 / pi n) sin(pi (y - x) n / y) exp(-pi^2 n^2 t / 2y^2).
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    tau = t / (y * y)
    small = (t > 0) & (tau < THETA_SWITCH)
    large = tau >= THETA_SWITCH
    if np.any(small):
        ts = t[small]
        rt = np.sqrt(ts)
        acc = np.zeros_like(ts)
        k = 0
        while True:
            for kk in ((0,) if k == 0 else (k, -k)):
                a = (y - x) + 2 * kk * y
                acc += math.copysign(1.0, a) * 2.0 * special.ndtr(-abs(a) / rt)
            nxt = (2 * k + 1) * y
            if k >= 1 and 4.0 * special.ndtr(-nxt / rt.max()) < 1e-3 * tol:
                break
            k += 1
        out[small] = acc
    if np.any(large):
        tl = t[large]
        c_min = math.pi ** 2 * tl.min() / (2.0 * y * y)
        # sum_{n>N} (2/(pi n)) e^{-c n^2} <= e^{-c N^2} / (c N^2)  (crude, N >= 1)
        n_terms = max(1, math.ceil(math.sqrt(max(math.log(1.0 / (c_min * tol)), 1.0) / c_min)))
        n = np.arange(1, n_terms + 1, dtype=float)[:, None]
        c = math.pi ** 2 * tl[None, :] / (2.0 * y * y)
        w = 2.0 / (math.pi * n) * np.sin(math.pi * (y - x) * n / y)
        out[large] = x / y - (w * np.exp(-c * n * n)).sum(axis=0)
    return np.clip(out, 0.0, x / y)
