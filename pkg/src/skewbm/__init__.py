"""Ranked excursion heights and first passage times of skew Brownian motion."""

from skewbm.errors import ConvergenceError, DomainError
from skewbm.kernels import (
    SeriesControl,
    SeriesResult,
    bm_fpt_cdf,
    bm_fpt_density,
    exp_kernel_density,
    g_series,
    normal_cdf,
    theta_hitting_density,
)
from skewbm.excursion_law import (
    RankedHeightQuery,
    binomial_moment_invert,
    binomial_moments,
    csaki_tail,
    ranked_height_tail,
    transfer_tail,
)
from skewbm.quadrature import QuadResult, integrate_adaptive, integrate_semi_infinite
from skewbm.first_passage import (
    DensityCurve,
    FirstPassageQuery,
    correction_term,
    evaluate_curve,
    fpt_cdf,
    fpt_cdf_from_origin,
    fpt_density,
    fpt_density_from_origin,
)

__version__ = "0.1.0"
