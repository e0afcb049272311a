"""Data-driven choice of the tuning triple by a resampling risk estimate.

A robust pilot decides the test first. Bootstrap resamples are then drawn
either from the two groups separately (pilot rejected) or from the pooled
sample (pilot accepted), and each candidate triple is scored by how often
it would disagree with the pilot decision. Every candidate is scored on the
same resamples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .config import Method, RunConfig
from .divergence import GsbParams, mi_from_arrays
from .errors import DegenerateVariance
from .kde import DensityGrid, kernel_constants
from .testing import TwoSampleData, fit_kde, null_moments, run_test, test_statistic

__all__ = [
    "DEFAULT_RESAMPLES",
    "PD_GRID_LAMBDAS",
    "GridSearch",
    "LocalSearch",
    "PilotDecision",
    "ResampleSet",
    "RiskSurface",
    "draw_resamples",
    "estimate_risk",
    "pilot_decide",
    "select_tuning",
]

DEFAULT_RESAMPLES = 200
MIN_RESAMPLES = 50
PD_GRID_LAMBDAS = (-0.5, -0.3, -0.2, -0.1, 0.0, 0.25, 0.5, 1.0)
_RESAMPLE_STREAM = 2


def _check_level(level: float) -> None:
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")


@dataclass(frozen=True)
class PilotDecision:
    pilot: GsbParams
    p1: float
    rejected: bool
    level: float = 0.05

    def __post_init__(self):
        if self.rejected != (self.p1 <= self.level):
            raise ValueError("rejected must equal p1 <= level")


def pilot_decide(
    data: TwoSampleData,
    pilot: GsbParams,
    level: float = 0.05,
    config: RunConfig | None = None,
) -> PilotDecision:
    """Run the pilot test and record its decision.

    Under ``Method.AUTO`` a power-divergence pilot is calibrated by
    permutation; forcing the asymptotic method with such a pilot is refused.
    """
    _check_level(level)
    config = (config or RunConfig()).with_(level=level)
    if pilot.is_pd and config.method is Method.ASYMPTOTIC:
        raise ValueError("a power-divergence pilot needs permutation calibration")
    res = run_test(data, pilot, config)
    return PilotDecision(pilot, res.p_value, res.reject, level)


@dataclass(frozen=True)
class ResampleSet:
    """Kernel estimates of ``B`` bootstrap resamples, shared across candidates.

    ``s0``, ``s1`` and ``fy`` have shape ``(B, grid_points)``; each row lives
    on its own grid with spacing ``spacing[b]`` and bandwidth ``h[b]``.
    """

    s0: np.ndarray
    s1: np.ndarray
    fy: np.ndarray
    spacing: np.ndarray
    h: np.ndarray
    fx: tuple[float, float]
    n: int
    pooled: bool
    seed: int

    @property
    def size(self) -> int:
        return self.h.size


def draw_resamples(
    data: TwoSampleData,
    rejected: bool,
    n_resample: int = DEFAULT_RESAMPLES,
    seed: int = 0,
    config: RunConfig | None = None,
) -> ResampleSet:
    """Bootstrap resamples at the original group sizes.

    Indices come from one sequential stream keyed by ``seed``.
    """
    if n_resample < MIN_RESAMPLES:
        raise ValueError(f"need at least {MIN_RESAMPLES} resamples")
    config = config or RunConfig()
    rng = np.random.default_rng([seed, _RESAMPLE_STREAM])
    pooled = data.combined
    rows = {"s0": [], "s1": [], "fy": []}
    spacing, hs = [], []
    fx = None
    for _ in range(n_resample):
        if rejected:
            y0 = data.y0[rng.integers(0, data.n0, data.n0)]
            y1 = data.y1[rng.integers(0, data.n1, data.n1)]
        else:
            y0 = pooled[rng.integers(0, data.n, data.n0)]
            y1 = pooled[rng.integers(0, data.n, data.n1)]
        fit = fit_kde(TwoSampleData(y0, y1), config.bandwidth, config.grid_points)
        rows["s0"].append(fit.hd.joint[0].values)
        rows["s1"].append(fit.hd.joint[1].values)
        rows["fy"].append(fit.hd.fy.values)
        spacing.append(fit.hd.spacing)
        hs.append(fit.h)
        fx = fit.hd.fx
    return ResampleSet(
        s0=np.array(rows["s0"]),
        s1=np.array(rows["s1"]),
        fy=np.array(rows["fy"]),
        spacing=np.array(spacing),
        h=np.array(hs),
        fx=fx,
        n=data.n,
        pooled=not rejected,
        seed=seed,
    )


def _resample_statistics(params: GsbParams, rs: ResampleSet) -> np.ndarray:
    p0, p1 = rs.fx
    kc = kernel_constants()
    i_hat = mi_from_arrays(p0, p1, rs.s0, rs.s1, rs.fy, 1.0, params)
    t = np.empty(rs.size)
    for b in range(rs.size):
        # mi_from_arrays used unit spacing so the batch can share one call.
        i_b = float(i_hat[b]) * rs.spacing[b]
        # Moments depend on the grid only through its spacing.
        grid = np.arange(rs.fy.shape[1]) * rs.spacing[b]
        try:
            m = null_moments(params, rs.fx, DensityGrid(grid, rs.fy[b]), kc)
        except DegenerateVariance:
            t[b] = -math.inf
            continue
        t[b] = test_statistic(i_b, m, rs.n, float(rs.h[b]))
    return t


def estimate_risk(
    data: TwoSampleData,
    params: GsbParams,
    decision: PilotDecision,
    n_resample: int = DEFAULT_RESAMPLES,
    level: float | None = None,
    seed: int = 0,
    config: RunConfig | None = None,
    resamples: ResampleSet | None = None,
) -> tuple[float, float]:
    """Return ``(p_hat, risk)`` for one candidate.

    ``p_hat`` is the share of resamples whose asymptotic statistic exceeds
    the upper ``level`` normal quantile; the risk is ``1 - p_hat`` after a
    pilot rejection and ``p_hat`` otherwise.
    """
    level = decision.level if level is None else level
    _check_level(level)
    rs = resamples or draw_resamples(data, decision.rejected, n_resample, seed, config)
    tau = norm.isf(level)
    t = _resample_statistics(params, rs)
    p_hat = float(np.mean(t > tau))
    risk = 1.0 - p_hat if decision.rejected else p_hat
    return p_hat, risk


@dataclass(frozen=True)
class GridSearch:
    candidates: tuple[GsbParams, ...]

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if not self.candidates:
            raise ValueError("search grid is empty")


@dataclass(frozen=True)
class LocalSearch:
    """Coordinate descent over ``(alpha, lambda, beta)`` with step halving."""

    start: GsbParams
    steps: tuple[float, float, float] = (0.2, 0.25, 0.05)
    rounds: int = 3

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be positive")
        if any(s <= 0 for s in self.steps):
            raise ValueError("steps must be positive")


@dataclass(frozen=True)
class RiskSurface:
    params: tuple[GsbParams, ...]
    p_hat: np.ndarray
    risk: np.ndarray
    decision: PilotDecision
    n_resample: int
    seed: int
    config: RunConfig = field(default_factory=RunConfig)

    def __post_init__(self):
        if not (len(self.params) == self.p_hat.size == self.risk.size) or not self.params:
            raise ValueError("surface arrays must be nonempty and aligned")
        if np.any((self.risk < 0) | (self.risk > 1)):
            raise ValueError("risk outside [0, 1]")

    @property
    def best(self) -> int:
        # np.argmin returns the first minimum, i.e. ties go to listed order.
        return int(np.argmin(self.risk))

    @property
    def best_params(self) -> GsbParams:
        return self.params[self.best]

    def rows(self) -> list[dict]:
        return [
            {"alpha": p.alpha, "lambda": p.lam, "beta": p.beta, "p_hat": float(ph), "risk": float(r)}
            for p, ph, r in zip(self.params, self.p_hat, self.risk)
        ]


def _key(p: GsbParams) -> tuple[float, float, float]:
    return (round(p.alpha, 12), round(p.lam, 12), round(p.beta, 12))


def select_tuning(
    data: TwoSampleData,
    pilot: GsbParams,
    search: GridSearch | LocalSearch,
    n_resample: int = DEFAULT_RESAMPLES,
    level: float = 0.05,
    seed: int = 0,
    config: RunConfig | None = None,
    include_pd: bool = False,
    decision: PilotDecision | None = None,
) -> RiskSurface:
    """Score candidate triples on common resamples and return the risk surface.

    Power-divergence candidates are dropped unless ``include_pd`` is set, in
    which case they are scored with the same asymptotic rule as the rest.
    """
    config = config or RunConfig()
    decision = decision or pilot_decide(data, pilot, level, config)
    rs = draw_resamples(data, decision.rejected, n_resample, seed, config)
    tau = norm.isf(level)
    cache: dict[tuple, tuple[float, float]] = {}
    order: list[GsbParams] = []

    def score(p: GsbParams) -> float:
        k = _key(p)
        if k not in cache:
            t = _resample_statistics(p, rs)
            p_hat = float(np.mean(t > tau))
            cache[k] = (p_hat, 1.0 - p_hat if decision.rejected else p_hat)
            order.append(p)
        return cache[k][1]

    def allowed(p: GsbParams) -> bool:
        return include_pd or not p.is_pd

    if isinstance(search, GridSearch):
        for p in search.candidates:
            if allowed(p):
                score(p)
    else:
        current = search.start
        if not allowed(current):
            raise ValueError("local search cannot start at a power-divergence triple")
        best = score(current)
        steps = list(search.steps)
        for _ in range(search.rounds):
            for i in range(3):
                for sign in (1.0, -1.0):
                    coords = [current.alpha, current.lam, current.beta]
                    coords[i] += sign * steps[i]
                    if coords[0] < -1.0:
                        continue
                    cand = GsbParams(*coords)
                    if not allowed(cand):
                        continue
                    r = score(cand)
                    if r < best:
                        best, current = r, cand
                        break
            steps = [s / 2.0 for s in steps]
    if not order:
        raise ValueError("no admissible candidate in the search space")
    p_hat = np.array([cache[_key(p)][0] for p in order])
    risk = np.array([cache[_key(p)][1] for p in order])
    return RiskSurface(tuple(order), p_hat, risk, decision, n_resample, seed, config)
