"""Laws of the ranked excursion heights M_1(t) >= M_2(t) >= ... of skew BM.

Tail probabilities P_0(M_j(t) > y), the negative-binomial transfer between
two skewness parameters, and the binomial-moment inversion used to run the
transfer in the direction where the thinning probability exceeds one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from scipy import special

from skewbm.errors import DomainError
from skewbm.kernels import (
    DEFAULT_CONTROL,
    SeriesControl,
    SeriesResult,
    _check_alpha,
    sum_log_concave,
)


@dataclass(frozen=True)
class RankedHeightQuery:
    j: int
    y: float
    t: float

    def __post_init__(self):
        if int(self.j) != self.j or self.j < 1:
            raise DomainError(f"rank j must be a positive integer, got {self.j}")
        if not (self.y >= 0 and math.isfinite(self.y)):
            raise DomainError(f"level y must be finite and >= 0, got {self.y}")
        if not (self.t > 0 and math.isfinite(self.t)):
            raise DomainError(f"time t must be finite and > 0, got {self.t}")


def _log_comb(n, k):
    return special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)


def csaki_tail(j: int, y: float, t: float) -> float:
    """P_0(M_j(t) > y) for standard Brownian motion: 2 (1 - Phi((2j-1) y / sqrt t))."""
    q = RankedHeightQuery(j, y, t)
    if q.y == 0:
        return 1.0
    return float(2.0 * special.ndtr(-(2 * q.j - 1) * q.y / math.sqrt(q.t)))


def _ranked_tail_series(alpha, j, y, t, ctrl) -> SeriesResult:
    # sum_{h>=j} 2 C(h-1, j-1) q^(h-j) (2 alpha)^j (1 - Phi((2h-1) y / sqrt t))
    q = 1.0 - 2.0 * alpha
    log_abs_q = math.log(abs(q)) if q != 0 else -math.inf
    log_head = math.log(2.0) + j * math.log(2.0 * alpha)
    rt = math.sqrt(t)

    def term(h):
        m = h - j
        if m > 0 and q == 0:
            return 0.0
        log_mag = (log_head + _log_comb(h - 1, j - 1) + (m * log_abs_q if m else 0.0)
                   + special.log_ndtr(-(2 * h - 1) * y / rt))
        sign = -1.0 if (q < 0 and m % 2) else 1.0
        return sign * math.exp(log_mag)

    return sum_log_concave(term, ctrl, f"ranked_height_tail(alpha={alpha}, j={j}, y={y}, t={t})",
                           start=j)


def ranked_height_tail(alpha: float, q: RankedHeightQuery,
                       ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """P_0(M_j(t) > y) for alpha-skew Brownian motion started at 0.

    A negative-binomial mixture of the Brownian tails: the j-th highest
    excursion of the skew process is the H-th highest of a Brownian motion,
    H negative binomial.  y = 0 gives exactly 1 and alpha = 1/2 gives the
    Brownian formula with no summation.
    """
    _check_alpha(alpha)
    if q.y == 0:
        return 1.0
    if alpha == 0.5:
        return csaki_tail(q.j, q.y, q.t)
    res = _ranked_tail_series(alpha, q.j, q.y, q.t, ctrl)
    return min(max(res.value, 0.0), 1.0)


def ranked_height_tail_result(alpha, q, ctrl=DEFAULT_CONTROL) -> SeriesResult:
    """Like ``ranked_height_tail`` but keeps term count and tail bound."""
    _check_alpha(alpha)
    if q.y == 0:
        return SeriesResult(1.0, 0, 0.0)
    return _ranked_tail_series(alpha, q.j, q.y, q.t, ctrl)


def transfer_tail(alpha: float, beta: float, j: int, y: float, t: float,
                  ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Evaluate P_0(M_j^alpha(t) > y) through beta-skew tails.

    sum_{h>=j} C(h-1, j-1) (1 - r)^(h-j) r^j P_0(M_h^beta(t) > y), r = alpha/beta.
    For alpha < beta the weights are the negative-binomial law of the rank of
    the kept excursion.  For alpha > beta the same expression is the inverted
    relation; |1 - r| may exceed one and convergence then rests on the
    Gaussian decay of the beta tails, which is why y must be positive.
    """
    _check_alpha(alpha)
    _check_alpha(beta)
    query = RankedHeightQuery(j, y, t)
    if y <= 0:
        raise DomainError("transfer_tail needs y > 0")
    r = alpha / beta
    if r == 1.0:
        return ranked_height_tail(beta, query, ctrl)
    s = 1.0 - r
    log_abs_s = math.log(abs(s))

    def term(h):
        m = h - j
        log_w = _log_comb(h - 1, j - 1) + m * log_abs_s + j * math.log(r)
        w = math.exp(log_w)
        # the beta-side tail must be accurate relative to the weight it carries
        inner = ctrl.scaled(min(1.0, 1.0 / w)) if w > 0 else ctrl
        tail = ranked_height_tail_result(beta, RankedHeightQuery(h, y, t), inner).value
        sign = -1.0 if (s < 0 and m % 2) else 1.0
        return sign * w * tail

    res = sum_log_concave(term, ctrl, f"transfer_tail(alpha={alpha}, beta={beta}, j={j}, y={y}, t={t})",
                          start=j)
    return res.value


def binomial_moments(a: Sequence, k_max: int | None = None, exact: bool = False):
    """Forward map b_k = sum_m C(m, k) a_m, k = 0..k_max.

    Arithmetic is exact over the rationals (floats convert exactly), so the
    only rounding is the final conversion; ``exact=True`` skips it and
    returns ``Fraction`` values.
    """
    fa = [Fraction(v) for v in a]
    n = len(fa)
    k_max = n - 1 if k_max is None else k_max
    out = [sum((math.comb(m, k) * fa[m] for m in range(k, n)), Fraction(0))
           for k in range(k_max + 1)]
    return out if exact else [float(v) for v in out]


def binomial_moment_invert(b: Sequence, m_max: int, exact: bool = False):
    """Recover a_0..a_{m_max} from binomial moments b_0..b_{K-1}.

    a_m = sum_{k>=m} (-1)^(k-m) C(k, m) b_k, truncated at the supplied length.
    The alternating sums are accumulated exactly; for float input the result
    is the correctly rounded value of the truncated sum.  Truncation error
    belongs to the caller: the series converges when sum_k b_k theta^k is
    finite for some theta > 1.
    """
    fb = [Fraction(v) for v in b]
    n = len(fb)
    if not 0 <= m_max < n:
        raise DomainError(f"m_max must satisfy 0 <= m_max < len(b) = {n}")
    out = []
    for m in range(m_max + 1):
        acc = Fraction(0)
        for k in range(m, n):
            c = math.comb(k, m) * fb[k]
            acc += -c if (k - m) % 2 else c
        out.append(acc)
    return out if exact else [float(v) for v in out]
