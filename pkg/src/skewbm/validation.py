"""Validation suites: each analytic formula against an independent route.

Every suite returns a list of :class:`Check`; ``run_suite`` wraps them in a
:class:`RunReport`.  The oracles here deliberately avoid the series and
quadrature code paths they check (brute-force sums, scipy integrators,
closed forms, path simulation).
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, special, stats

from skewbm import montecarlo as mc
from skewbm.excursion_law import (
    RankedHeightQuery,
    _ranked_tail_series,
    csaki_tail,
    ranked_height_tail,
    transfer_tail,
)
from skewbm.first_passage import (
    FirstPassageQuery,
    cdf_function,
    correction_term,
    fpt_cdf,
    fpt_cdf_from_origin,
    fpt_density,
    fpt_density_from_origin,
)
from skewbm.kernels import DEFAULT_CONTROL, bm_fpt_density
from skewbm.quadrature import integrate_semi_infinite

FIGURE_ALPHAS = (0.1, 0.25, 0.5, 0.75, 0.9)


@dataclass
class Check:
    name: str
    passed: bool
    statistic: float
    threshold: float
    runtime: float = 0.0
    detail: str = ""


@dataclass
class RunReport:
    suite: str
    checks: list = field(default_factory=list)
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self):
        return {"suite": self.suite, "passed": self.passed, "runtime": self.runtime,
                "checks": [asdict(c) for c in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=True)

    def lines(self):
        for c in self.checks:
            tag = "PASS" if c.passed else "FAIL"
            extra = f"  {c.detail}" if c.detail else ""
            yield (f"{tag}  {c.name}: statistic={c.statistic:.6g} threshold={c.threshold:.6g} "
                   f"runtime={c.runtime:.2f}s{extra}")
        yield f"{'PASS' if self.passed else 'FAIL'}  suite {self.suite} ({self.runtime:.1f}s)"


class _Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


# ---------------------------------------------------------------------------
# reduction to Brownian motion at alpha = 1/2

def reduction_lattice(n_points: int = 500):
    """(x, y, t) lattice spread over all six start/target configurations."""
    ys = (0.5, 1.0, 2.0)
    ts = np.geomspace(0.01, 20.0, 11)
    fracs = (-1.5, -0.5, 0.0, 0.1, 0.5, 0.9, 1.5, 3.0)  # x / y
    pts = []
    for y, f, t in itertools.product(ys, fracs, ts):
        for sign in (1.0, -1.0):
            pts.append((sign * f * y, sign * y, float(t)))
    # -0.0 and 0.0 both map to the x <= 0 (resp. x >= 0) branch
    rng = np.random.default_rng(500)
    idx = rng.choice(len(pts), size=min(n_points, len(pts)), replace=False)
    return [pts[i] for i in sorted(idx)]


def branch_of(x, y):
    if y > 0:
        return "x<=0<y" if x <= 0 else ("0<x<y" if x < y else "0<y<x")
    return "y<0<=x" if x >= 0 else ("y<x<0" if x > y else "x<y<0")


def suite_reduction(n_points: int = 500):
    pts = reduction_lattice(n_points)
    with _Timer() as tm:
        worst = 0.0
        per_branch = {}
        for x, y, t in pts:
            err = abs(fpt_density(FirstPassageQuery(0.5, x, y, t)) - bm_fpt_density(x, y, t))
            worst = max(worst, err)
            b = branch_of(x, y)
            per_branch[b] = max(per_branch.get(b, 0.0), err)
    detail = f"{len(pts)} points; " + ", ".join(f"{k}:{v:.1e}" for k, v in sorted(per_branch.items()))
    return [
        Check("alpha=1/2 density reduction (max abs error)", worst <= 1e-7 and len(per_branch) == 6,
              worst, 1e-7, tm.elapsed, detail),
        Check("alpha=1/2 reduction runtime (s)", tm.elapsed <= 30.0, tm.elapsed, 30.0, tm.elapsed),
    ]


# ---------------------------------------------------------------------------
# ranked heights at alpha = 1/2

def suite_csaki():
    grid = list(itertools.product((1, 2, 3, 5), (0.0, 0.1, 0.5, 1.0, 2.0), (0.25, 1.0, 4.0)))
    with _Timer() as tm:
        structural = all(ranked_height_tail(0.5, RankedHeightQuery(j, y, t)) == csaki_tail(j, y, t)
                         for j, y, t in grid)
        numeric = 0.0
        for j, y, t in grid:
            ref = 2.0 * (1.0 - special.ndtr((2 * j - 1) * y / math.sqrt(t)))
            if y > 0:
                series = _ranked_tail_series(0.5, j, y, t, DEFAULT_CONTROL).value
            else:
                series = 1.0
            numeric = max(numeric, abs(series - ref), abs(csaki_tail(j, y, t) - ref))
    return [
        Check("ranked tail at alpha=1/2 is the Brownian tail (structural)", structural,
              0.0 if structural else 1.0, 0.0, tm.elapsed),
        Check("ranked tail at alpha=1/2 vs 2(1-Phi) (max abs)", numeric <= 1e-14, numeric, 1e-14,
              tm.elapsed),
    ]


# ---------------------------------------------------------------------------
# transfer between skewness parameters

def suite_thm3():
    vals = (0.2, 0.4, 0.6, 0.8)
    worst = 0.0
    where = None
    with _Timer() as tm:
        for a, b, j, y, t in itertools.product(vals, vals, (1, 2, 3), (0.25, 1.0), (0.5, 2.0)):
            lhs = transfer_tail(a, b, j, y, t)
            rhs = ranked_height_tail(a, RankedHeightQuery(j, y, t))
            if abs(lhs - rhs) > worst:
                worst, where = abs(lhs - rhs), (a, b, j, y, t)
    return [
        Check("transfer identity residual (max abs)", worst <= 1e-8, worst, 1e-8, tm.elapsed,
              f"worst at (alpha, beta, j, y, t)={where}"),
        Check("transfer identity runtime (s)", tm.elapsed <= 10.0, tm.elapsed, 10.0, tm.elapsed),
    ]


# ---------------------------------------------------------------------------
# total mass

def suite_mass():
    checks = []
    for a in (0.2, 0.5, 0.8):
        with _Timer() as tm:
            cdf = fpt_cdf_from_origin(a, 1.0, 1e4)
            quad = integrate_semi_infinite(
                lambda t: np.array([fpt_density_from_origin(a, 1.0, float(s)) for s in np.atleast_1d(t)]),
                0.0, abs_tol=1e-8, upper=1e4)
        # survival decays like sqrt(2 / (pi t)) (1 - alpha) / alpha, far above 1e-3 at t = 1e4
        tail = math.sqrt(2 / (math.pi * 1e4)) * (1 - a) / a
        checks.append(Check(f"P0(T_1 <= 1e4) >= 0.999, alpha={a}", cdf >= 0.999, cdf, 0.999, tm.elapsed,
                            f"1 - cdf = {1 - cdf:.6g}; large-t asymptote {tail:.6g}"))
        gap = abs(quad.value - cdf)
        checks.append(Check(f"quadrature of density on (0, 1e4) vs CDF, alpha={a}", gap <= 1e-5,
                            gap, 1e-5, tm.elapsed, f"quad={quad.value:.12f} cdf={cdf:.12f}"))
    return checks


# ---------------------------------------------------------------------------
# convolution: resummed fast path vs the explicit double sum

def _brute_g(alpha, y, s, n_terms=400):
    # origin-start density, fixed number of terms, no stopping rule
    s = np.asarray(s, dtype=float)[..., None]
    j = np.arange(1, n_terms + 1)
    d = (2 * j - 1) * y
    q = 1.0 - 2.0 * alpha
    with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
        f = d / (math.sqrt(2 * math.pi) * s ** 1.5) * np.exp(-d * d / (2 * s))
    f = np.where(s > 0, f, 0.0)
    return 2 * alpha * (q ** (j - 1) * f).sum(axis=-1)


def brute_correction(alpha, x, y, t, n_max: int = 2000):
    """sum_{n<=n_max} (2/pi n) sin(pi (y-x) n / y) (g * kappa_n)(t), per-n quadrature.

    Each convolution is computed as c_n = int_0^{lambda t} e^{-u} g(t - u/lambda) du
    by scipy's vector quadrature.  The weights decay like 1/n, so the partial
    sum is corrected by the exact tail of its leading term: c_n -> g(t) and
    sum_n (2/pi n) sin(n theta) = 1 - theta/pi = x/y.  Returns
    ``(corrected, plain_partial_sum)``.
    """
    n = np.arange(1, n_max + 1, dtype=float)
    lam = math.pi ** 2 * n * n / (2 * y * y)
    upper = np.minimum(lam * t, 50.0)
    g_t = float(_brute_g(alpha, y, t))

    def integrand(v):
        u = upper * v
        return upper * np.exp(-u) * (_brute_g(alpha, y, t - u / lam) - g_t)

    diff, _ = integrate.quad_vec(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-10, norm="max")
    c_minus_g = diff - g_t * np.exp(-lam * t)
    w = 2.0 / (math.pi * n) * np.sin(math.pi * (y - x) * n / y)
    corrected = math.fsum(w * c_minus_g) + g_t * x / y
    plain = math.fsum(w * (c_minus_g + g_t))
    return corrected, plain


CONVOLUTION_POINTS = (
    (0.3, 0.5, 1.0, 1.0), (0.3, 0.25, 1.0, 0.5), (0.3, 0.75, 1.0, 2.0), (0.2, 0.5, 1.0, 0.2),
    (0.2, 0.1, 1.0, 3.0), (0.7, 0.5, 1.0, 1.0), (0.7, 0.9, 1.0, 0.3), (0.8, 0.4, 1.0, 5.0),
    (0.1, 0.5, 2.0, 1.0), (0.1, 1.5, 2.0, 4.0), (0.9, 0.2, 0.5, 0.1), (0.9, 0.3, 0.5, 0.6),
    (0.4, 0.6, 1.0, 0.8), (0.6, 0.3, 1.0, 1.5), (0.25, 1.0, 2.0, 2.0), (0.75, 1.2, 2.0, 6.0),
    (0.35, 0.05, 1.0, 1.0), (0.65, 0.95, 1.0, 1.0), (0.45, 0.5, 1.5, 3.0), (0.55, 0.25, 0.5, 0.25),
)


def suite_convolution(points=CONVOLUTION_POINTS):
    worst = 0.0
    worst_plain = 0.0
    brute_time = 0.0
    with _Timer() as tm:
        for a, x, y, t in points:
            fast = correction_term(a, x, y, t)
            t0 = time.perf_counter()
            corrected, plain = brute_correction(a, x, y, t)
            brute_time += time.perf_counter() - t0
            worst = max(worst, abs(fast - corrected))
            worst_plain = max(worst_plain, abs(fast - plain))
    return [
        Check("correction term: resummed vs double sum (max abs)", worst <= 1e-6, worst, 1e-6,
              tm.elapsed, f"{len(points)} points; uncorrected partial sum off by up to {worst_plain:.2e}"),
        Check("double-sum oracle runtime (s)", brute_time <= 300.0, brute_time, 300.0, brute_time),
    ]


# ---------------------------------------------------------------------------
# Monte Carlo

MC_FPT_QUERIES = ((0.3, 0.0, 1.0), (0.3, -1.0, 1.0), (0.3, 0.5, 1.0), (0.7, 1.0, -1.0))


def suite_mc_fpt(seed=mc.DEFAULT_SEED, n_paths=50_000, delta=0.02, horizon=50.0, workers=1):
    checks = []
    total = 0.0
    for a, x, y in MC_FPT_QUERIES:
        with _Timer() as tm:
            cfg = mc.McConfig("skew-walk", delta, horizon, n_paths, seed, workers)
            emp = mc.first_passage_sample(cfg, a, x, y)
            d = mc.ks_distance(emp, cdf_function(a, x, y, horizon))
        total += tm.elapsed
        checks.append(Check(f"skew walk vs analytic CDF, (alpha, x, y)=({a}, {x}, {y})", d <= 0.015, d,
                            0.015, tm.elapsed, f"censored {emp.n_censored}/{n_paths}"))
    checks.append(Check("Monte Carlo first-passage runtime (s)", total <= 300.0, total, 300.0, total))
    return checks


def suite_mc_samplers(seed=mc.DEFAULT_SEED, n_paths=50_000, delta=0.02, horizon=50.0, workers=1):
    with _Timer() as tm:
        walk = mc.first_passage_sample(mc.McConfig("skew-walk", delta, horizon, n_paths, seed, workers),
                                       0.3, 0.0, 1.0)
        flip = mc.first_passage_sample(
            mc.McConfig("excursion-flip", delta ** 2, horizon, n_paths, seed + 1, workers), 0.3, 0.0, 1.0)
        d = mc.ks_two_sample(walk, flip)
    return [Check("excursion flip vs skew walk, two-sample KS (0.3, 0, 1)", d <= 0.02, d, 0.02, tm.elapsed,
                  f"censored walk {walk.n_censored}, flip {flip.n_censored}")]


def suite_mc_heights(seed=mc.DEFAULT_SEED, n_paths=100_000, dt=1e-4, alpha=0.3, t=1.0):
    with _Timer() as tm:
        heights = mc.ranked_heights_sample(alpha, t, dt, n_paths, 3, seed)
    checks = []
    for j, y in itertools.product((1, 2, 3), (0.25, 0.5, 1.0)):
        p_hat = float(np.mean(heights[:, j - 1] > y))
        p = ranked_height_tail(alpha, RankedHeightQuery(j, y, t))
        se = math.sqrt(max(p * (1 - p), 1e-300) / n_paths)
        tol = 3 * se + 0.01
        checks.append(Check(f"P(M_{j} > {y}) empirical vs series", abs(p_hat - p) <= tol,
                            abs(p_hat - p), tol, tm.elapsed, f"empirical {p_hat:.5f}, series {p:.5f}"))
    return checks


def suite_coupling(seed=mc.DEFAULT_SEED, n_paths=10_000, alpha=0.3, beta=0.6, dt=1e-3, horizon=1.0,
                   max_bin=6):
    with _Timer() as tm:
        nested, first, n_pos = mc.coupled_sample(alpha, beta, n_paths, dt, horizon, seed)
        p = alpha / beta
        h = np.arange(1, max_bin + 1)
        # per path: P(first = h) = p (1-p)^(h-1) if h <= n_pos, else 0
        probs = np.where(h[None, :] <= n_pos[:, None], p * (1 - p) ** (h[None, :] - 1), 0.0)
        expected = np.append(probs.sum(axis=0), n_paths - probs.sum())
        observed = np.append([(first == k).sum() for k in h], ((first == 0) | (first > max_bin)).sum())
        pval = stats.chisquare(observed, expected).pvalue
    return [
        Check("coupling nesting (paths violating)", bool(nested.all()), float((~nested).sum()), 0.0,
              tm.elapsed, f"{n_paths} coupled paths"),
        Check("kept-rank index is geometric (chi-square p-value)", pval > 0.01, float(pval), 0.01,
              tm.elapsed, f"observed {observed.tolist()}"),
    ]


# ---------------------------------------------------------------------------
# ordering between opposite crossings

def figure5_data(alphas=FIGURE_ALPHAS, t_grid=None):
    """Per alpha: t, density of -1 -> 1, density of 1 -> -1."""
    if t_grid is None:
        t_grid = np.geomspace(0.01, 10.0, 200)
    out = {}
    for a in alphas:
        up = np.array([fpt_density(FirstPassageQuery(a, -1.0, 1.0, float(t))) for t in t_grid])
        down = np.array([fpt_density(FirstPassageQuery(a, 1.0, -1.0, float(t))) for t in t_grid])
        out[a] = (np.asarray(t_grid, dtype=float), up, down)
    return out


def suite_ordering(alphas=(0.1, 0.25, 0.5, 0.75, 0.9)):
    t_grid = np.geomspace(0.05, 50.0, 100)
    checks = []
    for a in alphas:
        with _Timer() as tm:
            up = np.array([fpt_cdf(FirstPassageQuery(a, -1.0, 1.0, float(t))) for t in t_grid])
            down = np.array([fpt_cdf(FirstPassageQuery(a, 1.0, -1.0, float(t))) for t in t_grid])
        if a == 0.5:
            gap = float(np.max(np.abs(up - down)))
            checks.append(Check(f"alpha=0.5: crossing CDFs equal", gap <= 1e-9, gap, 1e-9, tm.elapsed))
            continue
        # alpha < 1/2: crossing upward is slower, so its CDF sits below
        excess = float(np.max(up - down)) if a < 0.5 else float(np.max(down - up))
        label = "P(-1->1) <= P(1->-1)" if a < 0.5 else "P(-1->1) >= P(1->-1)"
        checks.append(Check(f"alpha={a}: {label} on 100-point grid (max violation)", excess <= 0.0,
                            excess, 0.0, tm.elapsed))
    with _Timer() as tm:
        data = figure5_data()
    checks.append(Check("figure data emitted for five panels", len(data) == 5, float(len(data)), 5.0,
                        tm.elapsed))
    return checks


SUITES = {
    "reduction": suite_reduction,
    "csaki": suite_csaki,
    "thm3": suite_thm3,
    "mass": suite_mass,
    "convolution": suite_convolution,
    "mc-fpt": suite_mc_fpt,
    "mc-samplers": suite_mc_samplers,
    "mc-heights": suite_mc_heights,
    "coupling": suite_coupling,
    "ordering": suite_ordering,
}
_SEEDED = {"mc-fpt", "mc-samplers", "mc-heights", "coupling"}


def run_suite(name: str, seed: int = mc.DEFAULT_SEED, workers: int = 1, alphas=None) -> RunReport:
    names = list(SUITES) if name == "all" else [name]
    report = RunReport(name)
    t0 = time.perf_counter()
    for n in names:
        fn = SUITES[n]
        if n in _SEEDED:
            kwargs = {"seed": seed}
            if n in ("mc-fpt", "mc-samplers"):
                kwargs["workers"] = workers
            report.checks.extend(fn(**kwargs))
        elif n == "ordering" and alphas:
            report.checks.extend(fn(alphas))
        else:
            report.checks.extend(fn())
    report.runtime = time.perf_counter() - t0
    return report
