"""Influence functions, local power, and breakdown bounds under the null.

Under independence the first-order influence function of the mutual
information vanishes, so stability is read off the second-order influence
function (IF2). The point mass in the continuous coordinate has no exact
grid representation; :class:`DeltaPolicy` selects how it is realized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .config import DeltaKind
from .divergence import Divergence, GsbParams, HybridDensity, mi_from_arrays
from .errors import DegenerateVariance, PolicyDomain
from .kde import DENSITY_FLOOR, DensityGrid, trapezoid
from .testing import null_moments

__all__ = [
    "LEVEL_INFLUENCE",
    "ContaminationPoint",
    "DeltaPolicy",
    "RobustnessReport",
    "breakdown_bound",
    "contaminated_mi",
    "ges_curve",
    "if1_null_check",
    "if2_null",
    "local_power",
    "local_power_slope",
    "normal_null_model",
    "pif",
    "pif_value",
    "region_classify",
]

#: The level influence function is identically zero for every generator.
LEVEL_INFLUENCE = 0.0

S2_TOL = 1e-9
_TAG_TOL = 1e-12


@dataclass(frozen=True)
class ContaminationPoint:
    x0: int
    y0: float

    def __post_init__(self):
        if self.x0 not in (0, 1):
            raise ValueError("x0 must be 0 or 1")


@dataclass(frozen=True)
class DeltaPolicy:
    """How the continuous point mass is realized.

    ``BUMP`` replaces it with a uniform density of width ``eta`` centred at
    the contamination point; ``EVALUATION`` integrates every power of the
    point mass against a smooth function by point evaluation.
    """

    kind: DeltaKind = DeltaKind.BUMP
    eta: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "kind", DeltaKind(self.kind))
        if self.kind is DeltaKind.BUMP and not self.eta > 0:
            raise ValueError("bump width must be positive")


def normal_null_model(
    p0: float = 0.5,
    loc: float = 0.0,
    scale: float = 1.0,
    y_range: tuple[float, float] = (-21.0, 21.0),
    n_points: int = 16001,
) -> HybridDensity:
    """Independent Bernoulli label and normal continuous variable on a grid."""
    grid = np.linspace(y_range[0], y_range[1], n_points)
    fy = DensityGrid(grid, norm.pdf(grid, loc=loc, scale=scale))
    return HybridDensity.product((p0, 1.0 - p0), fy)


def _bump(points: np.ndarray, spacing: float, y0: float, eta: float) -> np.ndarray:
    half = 0.5 * eta
    if y0 - half < points[0] or y0 + half > points[-1]:
        raise PolicyDomain(f"bump of width {eta} at {y0} leaves the grid")
    inside = np.abs(points - y0) <= half
    if np.count_nonzero(inside) < 3:
        raise PolicyDomain("bump narrower than three grid spacings")
    b = np.where(inside, 1.0, 0.0)
    return b / trapezoid(b, spacing)


def _weight(params: Divergence, p):
    """``k^2 p^(2k) phi''(p^k)``, the curvature weight of the second-order term."""
    if isinstance(params, GsbParams):
        A, beta = params.A, params.beta
        w = (1.0 + params.alpha) * p ** (1.0 + params.alpha)
        if beta != 0.0:
            w = w + (A * beta) ** 2 * p ** (2 * A) * np.exp(beta * p**A)
        return w
    k = params.index
    return k * k * p ** (2 * k) * params.d2(p**k)


def if2_null(
    params: Divergence,
    hd: HybridDensity,
    t0: ContaminationPoint,
    policy: DeltaPolicy | None = None,
    floor: float = DENSITY_FLOOR,
) -> float:
    """Second-order influence function of the mutual information at ``t0``.

    For label ``x`` the bracket reduces to ``a_x (1 - delta / f_y)`` with
    ``a_x = (1{x = x0} - f_x) / f_x``.
    """
    policy = policy or DeltaPolicy()
    fy = hd.fy.values
    pts = hd.points
    dy = hd.spacing
    mask = fy > floor
    fys = np.where(mask, fy, 1.0)

    if policy.kind is DeltaKind.BUMP:
        b = _bump(pts, dy, t0.y0, policy.eta)
        if np.any((b > 0) & ~mask):
            raise PolicyDomain("bump reaches outside the effective support of f_y")
        total = 0.0
        for x, fx in enumerate(hd.fx):
            a = ((1.0 if x == t0.x0 else 0.0) - fx) / fx
            w = _weight(params, fx * fys)
            total += trapezoid(np.where(mask, w * (a * (1.0 - b / fys)) ** 2, 0.0), dy)
        return float(total)

    f0 = float(np.interp(t0.y0, pts, fy, left=0.0, right=0.0))
    if not f0 > floor:
        raise PolicyDomain(f"f_y({t0.y0}) is outside the effective support")
    total = 0.0
    for x, fx in enumerate(hd.fx):
        a = ((1.0 if x == t0.x0 else 0.0) - fx) / fx
        w = _weight(params, fx * fys)
        w0 = float(_weight(params, fx * f0))
        total += a * a * (trapezoid(np.where(mask, w, 0.0), dy) - 2.0 * w0 / f0 + w0 / f0**2)
    return float(total)


def _contaminated_arrays(hd: HybridDensity, t0: ContaminationPoint, eps: float, b: np.ndarray):
    fy = hd.fy.values
    d = np.array([1.0 if x == t0.x0 else 0.0 for x in (0, 1)])
    slices = [(1.0 - eps) * s.values + eps * d[x] * b for x, s in enumerate(hd.joint)]
    fx = [(1.0 - eps) * hd.fx[x] + eps * d[x] for x in (0, 1)]
    fy_eps = (1.0 - eps) * fy + eps * b
    if min(np.min(slices[0]), np.min(slices[1]), np.min(fy_eps)) < 0 or min(fx) <= 0:
        raise ValueError(f"contamination step {eps} makes a density negative")
    return fx, slices, fy_eps


def contaminated_mi(
    params: Divergence,
    hd: HybridDensity,
    t0: ContaminationPoint,
    eps: float,
    eta: float = 0.05,
) -> float:
    """Mutual information of the joint density mixed with a bump at ``t0``.

    ``eps`` may be slightly negative as long as every density stays
    nonnegative; this allows central differences at zero.
    """
    b = _bump(hd.points, hd.spacing, t0.y0, eta)
    fx, slices, fy_eps = _contaminated_arrays(hd, t0, eps, b)
    # Integration domain stays that of the uncontaminated f_y.
    fy_dom = np.where(hd.fy.values > DENSITY_FLOOR, fy_eps, 0.0)
    return mi_from_arrays(fx[0], fx[1], slices[0], slices[1], fy_dom, hd.spacing, params)


def if1_null_check(
    params: Divergence,
    hd: HybridDensity,
    t0: ContaminationPoint,
    eps_step: float | None = None,
    eta: float = 0.05,
    rel_step: float = 5e-3,
) -> float:
    """Central difference of the contaminated mutual information at zero.

    The narrow bump gives the contamination path a large third derivative,
    so one Richardson step (steps ``eps_step`` and ``eps_step / 2``) removes
    the leading ``O(eps_step^2)`` truncation term. By default the step is
    ``rel_step * eta * m``, where ``m`` is the smallest joint density
    under the bump; the relative change of every density along the path is
    then about ``rel_step`` wherever the bump sits.
    """
    if eps_step is None:
        b = _bump(hd.points, hd.spacing, t0.y0, eta)
        under = b > 0
        m = min(float(np.min(s.values[under])) for s in hd.joint)
        eps_step = rel_step * eta * m
    if not eps_step > 0:
        raise ValueError("eps_step must be positive")

    def central(e):
        up = contaminated_mi(params, hd, t0, e, eta)
        down = contaminated_mi(params, hd, t0, -e, eta)
        return (up - down) / (2.0 * e)

    return (4.0 * central(0.5 * eps_step) - central(eps_step)) / 3.0


@dataclass(frozen=True)
class RobustnessReport:
    y0: np.ndarray
    if2: np.ndarray
    ges2: float
    region: str
    policy: DeltaPolicy
    x0: int = 0
    skipped: int = 0
    params: GsbParams | None = None
    breakdown: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.if2.size and self.ges2 < np.max(self.if2):
            raise ValueError("GES must dominate the stored curve")


def ges_curve(
    params: GsbParams,
    hd: HybridDensity,
    x0: int = 0,
    y_range: tuple[float, float] = (-20.0, 20.0),
    n_eval: int = 401,
    policy: DeltaPolicy | None = None,
) -> RobustnessReport:
    """IF2 over a grid of contamination locations and its supremum.

    Locations whose neighbourhood falls outside the effective support of
    ``f_y`` are skipped and counted in ``skipped``.
    """
    lo, hi = y_range
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError("y_range must be a finite increasing pair")
    policy = policy or DeltaPolicy()
    ys, vals = [], []
    skipped = 0
    for y0 in np.linspace(lo, hi, n_eval):
        try:
            v = if2_null(params, hd, ContaminationPoint(x0, float(y0)), policy)
        except PolicyDomain:
            skipped += 1
            continue
        ys.append(y0)
        vals.append(v)
    ys = np.asarray(ys)
    vals = np.asarray(vals)
    ges = float(vals.max()) if vals.size else float("nan")
    return RobustnessReport(
        y0=ys,
        if2=vals,
        ges2=ges,
        region=region_classify(params),
        policy=policy,
        x0=x0,
        skipped=skipped,
        params=params,
        breakdown=breakdown_bound(params),
    )


def region_classify(params: GsbParams) -> str:
    """Stability region of the tuning triple: ``S1``..``S4`` or ``Unstable``."""
    a, lam, beta = params.alpha, params.lam, params.beta
    beta_zero = abs(beta) <= _TAG_TOL
    if a > 0 and beta_zero:
        return "S1"
    if a > 0 and not beta_zero and abs(a - 1.0) > _TAG_TOL and abs(lam - 1.0 / (a - 1.0)) <= S2_TOL:
        return "S2"
    if abs(a + 1.0) <= _TAG_TOL and lam > -0.25 and not beta_zero:
        return "S3"
    if a > 0 and lam * (1.0 - a) > -0.5 and not beta_zero:
        return "S4"
    return "Unstable"


def _population_sigma(params: Divergence, hd: HybridDensity) -> float:
    return null_moments(params, hd.fx, hd.fy).sigma


def local_power_slope(
    params: Divergence,
    hd: HybridDensity,
    t0: ContaminationPoint,
    policy: DeltaPolicy | None = None,
) -> float:
    """``IF2 / (2 sigma)`` with sigma from the model density itself."""
    sigma = _population_sigma(params, hd)
    if not sigma > 0:
        raise DegenerateVariance("sigma must be positive")
    return if2_null(params, hd, t0, policy) / (2.0 * sigma)


def local_power(slope: float, d: float, level: float = 0.05) -> float:
    """Limiting power at contiguous distance ``d`` for a given slope."""
    tau = norm.isf(level)
    return float(norm.sf(tau - d * d * slope))


def pif_value(if2: float, sigma: float, d: float, level: float = 0.05) -> float:
    """Power influence function with coinciding contamination points."""
    if d < 0:
        raise ValueError("d must be nonnegative")
    tau = norm.isf(level)
    return float(d / sigma * if2 * norm.pdf(tau - d * d * if2 / (2.0 * sigma)))


def pif(
    params: Divergence,
    hd: HybridDensity,
    t1: ContaminationPoint,
    d: float,
    level: float = 0.05,
    policy: DeltaPolicy | None = None,
) -> float:
    sigma = _population_sigma(params, hd)
    return pif_value(if2_null(params, hd, t1, policy), sigma, d, level)


def breakdown_bound(params: GsbParams) -> float | None:
    """Closed-form lower bound on the asymptotic breakdown point.

    Available for ``beta = 0`` with ``A > 0`` and ``B >= 0``, where the bound
    is ``min(r, 1 - r, 1/2)`` with ``r = (B / (1 + alpha))**(1 / A)``; the
    power-divergence endpoint ``lambda = -1`` is taken as its limit ``1/e``.
    Returns ``None`` when the bound depends on the densities.
    """
    if abs(params.beta) > _TAG_TOL:
        return None
    A, B, a = params.A, params.B, params.alpha
    if a <= -1.0:
        return None
    if abs(A) <= _TAG_TOL and abs(a) <= _TAG_TOL:
        r = math.exp(-1.0)
    elif A > 0 and B >= 0:
        r = (B / (1.0 + a)) ** (1.0 / A)
    else:
        return None
    return min(r, 1.0 - r, 0.5)
