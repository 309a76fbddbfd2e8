"""Path-level Monte Carlo oracles for skew Brownian motion.

Two samplers that share nothing but the target law:

* ``excursion-flip``: a Gaussian-increment Brownian path whose excursions
  away from 0 get independent signs, +1 with probability alpha.  On a grid
  an excursion is a maximal run of constant sign.
* ``skew-walk``: a nearest-neighbour walk on the lattice delta*Z that steps
  up with probability alpha from site 0 and 1/2 elsewhere; one step takes
  time delta**2.

Every path draws from its own Philox stream keyed by the master seed with
the path index in the counter, so results do not depend on chunking or on
the number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np
from scipy import stats

from skewbm.errors import DomainError
from skewbm.kernels import _check_alpha

DEFAULT_SEED = 20110901
SAMPLERS = ("excursion-flip", "skew-walk")
_MASK64 = (1 << 64) - 1
# Philox counter words: [draw, 0, stream, path index]
_STREAM_INCREMENTS = 0
_STREAM_SIGNS = 1
_STREAM_BRIDGE = 2


def path_rng(seed: int, index: int, stream: int = _STREAM_INCREMENTS) -> np.random.Generator:
    """Independent generator for one path: Philox keyed by ``seed``."""
    return np.random.Generator(
        np.random.Philox(key=int(seed) & _MASK64, counter=[0, 0, int(stream), int(index)]))


def default_workers() -> int:
    return max(1, int(os.environ.get("SKEWBM_THREADS", "1")))


@dataclass(frozen=True)
class McConfig:
    sampler: str
    step: float
    horizon: float
    n_paths: int
    seed: int = DEFAULT_SEED
    workers: int = 1

    def __post_init__(self):
        if self.sampler not in SAMPLERS:
            raise DomainError(f"sampler must be one of {SAMPLERS}, got {self.sampler!r}")
        if not self.step > 0:
            raise DomainError("step must be positive")
        if not self.horizon > 0:
            raise DomainError("horizon must be positive")
        if int(self.n_paths) < 1:
            raise DomainError("n_paths must be >= 1")


@dataclass
class PathSample:
    times: np.ndarray
    positions: np.ndarray
    start: float = 0.0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float)
        if self.times.shape != self.positions.shape:
            raise DomainError("times and positions must have equal length")
        if self.times[0] != 0.0 or self.positions[0] != self.start:
            raise DomainError("a path starts at time 0 from its start position")


@dataclass
class ExcursionDecomposition:
    intervals: list
    signs: np.ndarray
    heights: np.ndarray
    final_incomplete: bool = True


@dataclass
class EmpiricalDistribution:
    samples: np.ndarray
    n_censored: int = 0
    horizon: float | None = None

    def __post_init__(self):
        self.samples = np.sort(np.asarray(self.samples, dtype=float))
        if self.n_censored < 0:
            raise DomainError("n_censored must be >= 0")

    @property
    def n_total(self) -> int:
        return len(self.samples) + self.n_censored


# ---------------------------------------------------------------------------
# single paths

def sample_bm_path(dt: float, horizon: float, rng: np.random.Generator,
                   start: float = 0.0) -> PathSample:
    """Brownian path on the grid k*dt, k = 0..ceil(horizon/dt)."""
    if not dt > 0:
        raise DomainError("dt must be positive")
    n = math.ceil(horizon / dt - 1e-9)
    steps = rng.standard_normal(n) * math.sqrt(dt)
    pos = np.empty(n + 1)
    pos[0] = start
    np.cumsum(steps, out=pos[1:])
    pos[1:] += start
    return PathSample(np.arange(n + 1) * dt, pos, start)


def _run_starts(positions):
    # grid excursions: maximal runs of constant sign, the starting 0 (if any)
    # joining the first run
    s = np.sign(positions)
    for i in range(len(s)):
        if s[i] != 0:
            s[:i] = s[i]
            break
    # a grid point exactly at 0 continues the current run
    for i in np.flatnonzero(s == 0):
        s[i] = s[i - 1]
    change = np.flatnonzero(s[1:] != s[:-1]) + 1
    return np.concatenate([[0], change]), s


def decompose_excursions(path: PathSample) -> ExcursionDecomposition:
    """Split a grid path into sign runs with their heights (0 if negative)."""
    starts, s = _run_starts(path.positions)
    ends = np.append(starts[1:], len(s))
    signs = s[starts].astype(int)
    heights = np.maximum.reduceat(np.abs(path.positions), starts)
    heights = np.where(signs > 0, heights, 0.0)
    return ExcursionDecomposition(list(zip(starts.tolist(), ends.tolist())), signs, heights, True)


def _apply_signs(path, starts, new_signs):
    lengths = np.diff(np.append(starts, len(path.positions)))
    per_point = np.repeat(new_signs, lengths)
    return PathSample(path.times, per_point * np.abs(path.positions), path.start)


def flip_excursions(path: PathSample, alpha: float, rng) -> PathSample:
    """Give each grid excursion of ``path`` an independent sign, +1 w.p. alpha.

    One ``rng.random`` draw per excursion in order of occurrence; the
    magnitude |path| is untouched.
    """
    _check_alpha(alpha)
    if path.positions[0] != 0:
        raise DomainError("flip_excursions needs a path started at 0")
    starts, _ = _run_starts(path.positions)
    signs = np.where(np.asarray(rng.random(len(starts))) < alpha, 1.0, -1.0)
    return _apply_signs(path, starts, signs)


def _coupled_signs(path, alpha, beta, rng):
    _check_alpha(alpha)
    _check_alpha(beta)
    if not alpha < beta:
        raise DomainError(f"coupled_flip needs alpha < beta, got {alpha} >= {beta}")
    if path.positions[0] != 0:
        raise DomainError("coupled_flip needs a path started at 0")
    starts, _ = _run_starts(path.positions)
    u = np.asarray(rng.random((2, len(starts))))
    beta_pos = u[0] < beta
    alpha_pos = beta_pos & (u[1] < alpha / beta)
    return starts, alpha_pos, beta_pos


def coupled_flip(path: PathSample, alpha: float, beta: float, rng):
    """Return (alpha-path, beta-path) built on the same excursions.

    beta signs first, then each positive excursion is kept with probability
    alpha / beta and flipped negative otherwise.
    """
    starts, alpha_pos, beta_pos = _coupled_signs(path, alpha, beta, rng)
    return (_apply_signs(path, starts, np.where(alpha_pos, 1.0, -1.0)),
            _apply_signs(path, starts, np.where(beta_pos, 1.0, -1.0)))


def ranked_heights(path: PathSample, t: float, j_max: int) -> np.ndarray:
    """The ``j_max`` largest excursion heights on [0, t], descending."""
    if t > path.times[-1] + 1e-12:
        raise DomainError("t exceeds the path horizon")
    keep = path.times <= t + 1e-12
    sub = PathSample(path.times[keep], path.positions[keep], path.start)
    heights = np.sort(decompose_excursions(sub).heights)[::-1]
    out = np.zeros(j_max)
    out[:min(j_max, len(heights))] = heights[:j_max]
    return out


@numba.njit(cache=True, nogil=True)
def _walk_block(u, k, target, alpha, max_steps):
    # advance the lattice walk through uniforms u; stop at the target
    n = min(len(u), max_steps)
    for i in range(n):
        p = alpha if k == 0 else 0.5
        if u[i] < p:
            k += 1
        else:
            k -= 1
        if k == target:
            return k, i + 1, True
    return k, n, False


@numba.njit(cache=True, nogil=True)
def _walk_path(u, k0, alpha):
    out = np.empty(len(u) + 1, dtype=np.int64)
    out[0] = k0
    k = k0
    for i in range(len(u)):
        p = alpha if k == 0 else 0.5
        k = k + 1 if u[i] < p else k - 1
        out[i + 1] = k
    return out


def _lattice_index(value, delta, name):
    k = round(value / delta)
    if abs(k * delta - value) > 1e-9 * max(1.0, abs(value)):
        raise DomainError(f"{name}={value} is not on the lattice delta*Z (delta={delta})")
    return int(k)


def sample_skew_walk(alpha: float, start: float, delta: float, horizon: float,
                     rng: np.random.Generator) -> PathSample:
    """Skew random walk on delta*Z over [0, horizon], time step delta**2."""
    _check_alpha(alpha)
    if not delta > 0:
        raise DomainError("delta must be positive")
    k0 = _lattice_index(start, delta, "start")
    n = math.ceil(horizon / delta ** 2 - 1e-9)
    sites = _walk_path(rng.random(n), k0, alpha)
    return PathSample(np.arange(n + 1) * delta ** 2, sites * delta, k0 * delta)


# ---------------------------------------------------------------------------
# first passage samplers

_BLOCK0 = 4096
_BLOCK_MAX = 1 << 16


def _walk_hit_time(index, seed, alpha, k0, target, delta, n_max):
    rng = path_rng(seed, index)
    k = k0
    used = 0
    block = _BLOCK0
    while used < n_max:
        size = min(block, n_max - used)
        k, steps, hit = _walk_block(rng.random(size), k, target, alpha, size)
        used += steps
        if hit:
            return used * delta * delta
        block = min(2 * block, _BLOCK_MAX)
    return math.inf


_HIT, _EXHAUSTED, _NEED_SIGNS = 0, 1, 2


@numba.njit(cache=True, nogil=True)
def _flip_block(z, i0, sd, v, vi, w, s, a, alpha, y, upward):
    # w: underlying Brownian value, s: its sign (0 before it leaves 0),
    # a: sign given to the current excursion; the process is a*|w|
    x_prev = a * abs(w)
    for i in range(i0, len(z)):
        w_new = w + sd * z[i]
        s_new = s
        if w_new > 0:
            s_new = 1
        elif w_new < 0:
            s_new = -1
        if s_new != s:
            if vi >= len(v):
                return _NEED_SIGNS, i, w, s, a, vi, 0.0
            a = 1.0 if v[vi] < alpha else -1.0
            vi += 1
            s = s_new
        w = w_new
        x_new = a * abs(w)
        if (upward and x_new >= y) or ((not upward) and x_new <= y):
            frac = (y - x_prev) / (x_new - x_prev)
            return _HIT, i, w, s, a, vi, frac
        x_prev = x_new
    return _EXHAUSTED, len(z), w, s, a, vi, 0.0


def _flip_hit_time(index, seed, alpha, x, y, dt, n_max):
    rng_z = path_rng(seed, index, _STREAM_INCREMENTS)
    rng_v = path_rng(seed, index, _STREAM_SIGNS)
    sd = math.sqrt(dt)
    w = float(x)
    s = int(np.sign(x))
    a = float(s) if s != 0 else 1.0
    upward = y > x
    v = rng_v.random(64)
    vi = 0
    done = 0
    block = _BLOCK0
    while done < n_max:
        size = min(block, n_max - done)
        z = rng_z.standard_normal(size)
        i0 = 0
        while True:
            status, i, w, s, a, vi, frac = _flip_block(z, i0, sd, v, vi, w, s, a, alpha, y, upward)
            if status == _NEED_SIGNS:
                v = rng_v.random(64)
                vi = 0
                i0 = i
                continue
            break
        if status == _HIT:
            return (done + i + frac) * dt
        done += size
        block = min(2 * block, _BLOCK_MAX)
    return math.inf


def first_passage_sample(cfg: McConfig, alpha: float, x: float, y: float) -> EmpiricalDistribution:
    """First-passage times to y from x for ``cfg.n_paths`` independent paths.

    ``cfg.step`` is the lattice spacing delta for the skew walk and the time
    step dt for excursion flipping.  Excursion-flip paths started off 0 keep
    their initial sign until the first crossing of 0; crossing times are
    interpolated linearly between grid points.  Paths that miss y before
    ``cfg.horizon`` are counted as censored.
    """
    _check_alpha(alpha)
    if x == y:
        raise DomainError("x == y")
    if cfg.sampler == "skew-walk":
        k0 = _lattice_index(x, cfg.step, "x")
        target = _lattice_index(y, cfg.step, "y")
        n_max = math.ceil(cfg.horizon / cfg.step ** 2 - 1e-9)

        def one(i):
            return _walk_hit_time(i, cfg.seed, alpha, k0, target, cfg.step, n_max)
    else:
        n_max = math.ceil(cfg.horizon / cfg.step - 1e-9)

        def one(i):
            return _flip_hit_time(i, cfg.seed, alpha, x, y, cfg.step, n_max)

    times = _map_paths(one, cfg.n_paths, cfg.workers)
    ok = times <= cfg.horizon
    return EmpiricalDistribution(times[ok], int(np.count_nonzero(~ok)), cfg.horizon)


def _map_paths(fn, n_paths, workers):
    out = np.empty(n_paths)
    if workers <= 1:
        for i in range(n_paths):
            out[i] = fn(i)
        return out
    chunks = np.array_split(np.arange(n_paths), workers * 4)

    def run(idx):
        return idx, np.array([fn(int(i)) for i in idx])

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for idx, vals in pool.map(run, chunks):
            out[idx] = vals
    return out


# ---------------------------------------------------------------------------
# ranked heights and coupling, many paths

def ranked_heights_sample(alpha: float, t: float, dt: float, n_paths: int, j_max: int = 3,
                          seed: int = DEFAULT_SEED, chunk: int = 256, bridge: bool = True) -> np.ndarray:
    """Array (n_paths, j_max) of ranked excursion heights of flipped paths on [0, t].

    Path i uses increments from its own stream; excursion signs come from a
    second stream of the same path, one uniform per excursion.

    With ``bridge=True`` each grid interval whose endpoints share a sign is
    refined with the Brownian bridge between them, using a third stream: the
    bridge returns to 0 with probability exp(-2ab/dt), which splits the
    excursion there, and otherwise its maximum is drawn exactly.  Without
    this the grid merges excursions and clips their peaks, biasing the
    tails low by O(sqrt(dt)).
    """
    _check_alpha(alpha)
    n = math.ceil(t / dt - 1e-9)
    sd = math.sqrt(dt)
    out = np.zeros((n_paths, j_max))
    for c0 in range(0, n_paths, chunk):
        idx = range(c0, min(c0 + chunk, n_paths))
        z = np.stack([path_rng(seed, i).standard_normal(n) for i in idx])
        b = np.cumsum(z, axis=1) * sd
        s = b > 0
        # run boundaries along each row; the starting 0 joins the first run
        new_run = np.zeros_like(s)
        new_run[:, 0] = True
        new_run[:, 1:] = s[:, 1:] != s[:, :-1]
        top = np.abs(b)
        if bridge:
            u = np.stack([path_rng(seed, i, _STREAM_BRIDGE).random((2, n)) for i in idx])
            a = np.zeros_like(top)
            a[:, 1:] = top[:, :-1]
            same = ~new_run
            back_to_zero = same & (u[:, 0] < np.exp(-2.0 * a * top / dt))
            new_run |= back_to_zero
            peak = 0.5 * (a + top + np.sqrt((a - top) ** 2 - 2.0 * dt * np.log(u[:, 1])))
            top = np.where(same & ~back_to_zero, peak, top)
        flat_starts = np.flatnonzero(new_run.ravel())
        run_max = np.maximum.reduceat(top.ravel(), flat_starts)
        rows = flat_starts // n
        counts = np.bincount(rows, minlength=len(idx))
        signs = np.concatenate([path_rng(seed, i, _STREAM_SIGNS).random(cnt) < alpha
                                for i, cnt in zip(idx, counts)])
        h = np.where(signs, run_max, 0.0)
        order = np.lexsort((-h, rows))
        h_sorted = h[order]
        offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
        for j in range(j_max):
            has = counts > j
            out[c0:c0 + len(idx)][has, j] = h_sorted[offsets[has] + j]
    return out


def coupled_sample(alpha: float, beta: float, n_paths: int, dt: float, horizon: float,
                   seed: int = DEFAULT_SEED):
    """Coupled alpha/beta paths: per-path nesting flags and kept-rank index.

    Returns ``(nested, first_index, n_beta_positive)``.  ``first_index[i]`` is
    the rank (1-based, by height) among the beta-positive excursions of the
    highest excursion that stays positive in the alpha path, 0 if none does.
    """
    nested = np.zeros(n_paths, dtype=bool)
    first = np.zeros(n_paths, dtype=int)
    n_pos = np.zeros(n_paths, dtype=int)
    for i in range(n_paths):
        path = sample_bm_path(dt, horizon, path_rng(seed, i))
        starts, alpha_pos, beta_pos = _coupled_signs(path, alpha, beta,
                                                     path_rng(seed, i, _STREAM_SIGNS))
        pa = _apply_signs(path, starts, np.where(alpha_pos, 1.0, -1.0)).positions
        pb = _apply_signs(path, starts, np.where(beta_pos, 1.0, -1.0)).positions
        # {alpha path > 0} inside {beta path > 0}, same magnitude everywhere
        nested[i] = bool(np.array_equal(np.abs(pa), np.abs(pb)) and not np.any((pa > 0) & (pb <= 0)))
        heights = np.maximum.reduceat(np.abs(path.positions), starts)
        order = np.argsort(-heights, kind="stable")
        order = order[beta_pos[order]]
        n_pos[i] = len(order)
        kept = np.flatnonzero(alpha_pos[order])
        first[i] = kept[0] + 1 if len(kept) else 0
    return nested, first, n_pos


# ---------------------------------------------------------------------------
# goodness of fit

def ks_distance(samples: EmpiricalDistribution, cdf) -> float:
    """Sup distance between the empirical CDF and ``cdf``.

    With censored paths both distributions are conditioned on T <= horizon.
    """
    x = samples.samples
    n = len(x)
    if n == 0:
        raise DomainError("ks_distance needs at least one uncensored sample")
    f = np.asarray(cdf(x), dtype=float)
    if samples.n_censored > 0:
        if samples.horizon is None:
            raise DomainError("censored samples need a horizon")
        f = f / float(np.asarray(cdf(np.array([samples.horizon])))[0])
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_two_sample(a: EmpiricalDistribution, b: EmpiricalDistribution) -> float:
    """Two-sample KS statistic on the uncensored parts (common horizon)."""
    if len(a.samples) == 0 or len(b.samples) == 0:
        raise DomainError("ks_two_sample needs samples on both sides")
    return float(stats.ks_2samp(a.samples, b.samples).statistic)


def ks_critical(n: int, m: int | None = None, level: float = 0.01) -> float:
    """Asymptotic KS critical value: c(level) / sqrt(n) (or two-sample)."""
    c = math.sqrt(-0.5 * math.log(level / 2.0))
    eff = n if m is None else n * m / (n + m)
    return c / math.sqrt(eff)
