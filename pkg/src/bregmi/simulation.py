"""Monte Carlo scenarios and rejection-proportion tables.

Each replication draws one data set, and every (lambda, alpha) cell of the
table is evaluated on that same data set with one shared kernel fit.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .config import Method, RunConfig
from .divergence import GsbParams, mi_hybrid
from .errors import DegenerateVariance
from .kde import kernel_constants
from .testing import (
    TwoSampleData,
    _add_one_p,
    fit_kde,
    null_moments,
    permutation_statistics,
    resolve_method,
    test_statistic,
)

__all__ = [
    "CONTAMINANT",
    "MODEL0",
    "MODEL1",
    "MODEL2",
    "Contamination",
    "NormalMixture",
    "RejectionTable",
    "ScenarioSpec",
    "data_hash",
    "run_table",
    "sample_scenario",
]

_SAMPLE_STREAM = 3
_PERM_SEED_STREAM = 4


@dataclass(frozen=True)
class NormalMixture:
    """Finite mixture of normals; a single component is a plain normal."""

    weights: tuple[float, ...]
    means: tuple[float, ...]
    sds: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        m = tuple(float(v) for v in self.means)
        s = tuple(float(v) for v in self.sds)
        if not (len(w) == len(m) == len(s) >= 1):
            raise ValueError("mixture components must align")
        if any(v < 0 for v in w) or abs(sum(w) - 1.0) > 1e-9:
            raise ValueError("mixture weights must be nonnegative and sum to 1")
        if any(not v > 0 for v in s):
            raise ValueError("standard deviations must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "sds", s)

    @classmethod
    def normal(cls, mean: float = 0.0, sd: float = 1.0) -> "NormalMixture":
        return cls((1.0,), (mean,), (sd,))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if len(self.weights) == 1:
            return rng.normal(self.means[0], self.sds[0], size)
        comp = rng.choice(len(self.weights), size=size, p=self.weights)
        return rng.normal(np.take(self.means, comp), np.take(self.sds, comp))

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        return sum(w * norm.pdf(y, m, s) for w, m, s in zip(self.weights, self.means, self.sds))

    def to_dict(self) -> dict:
        return {"weights": list(self.weights), "means": list(self.means), "sds": list(self.sds)}


MODEL0 = NormalMixture.normal(0.0, 1.0)
MODEL1 = NormalMixture.normal(0.0, 1.75)
MODEL2 = NormalMixture((0.4, 0.6), (-1.0, 1.0), (1.0, 1.0))
#: Outlier component: mean 5, variance 2.
CONTAMINANT = NormalMixture.normal(5.0, math.sqrt(2.0))


@dataclass(frozen=True)
class Contamination:
    epsilon: float
    contaminant: NormalMixture = CONTAMINANT

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 0.5:
            raise ValueError("epsilon must lie in [0, 0.5]")


@dataclass(frozen=True)
class ScenarioSpec:
    model0: NormalMixture = MODEL0
    model1: NormalMixture = MODEL0
    n0: int = 100
    n1: int = 100
    replications: int = 200
    level: float = 0.05
    seed: int = 0
    contamination: Contamination | None = None

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.n0 < 2 or self.n1 < 2:
            raise ValueError("each sample needs at least two observations")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie in (0, 1)")

    def to_dict(self) -> dict:
        c = self.contamination
        return {
            "model0": self.model0.to_dict(),
            "model1": self.model1.to_dict(),
            "n0": self.n0,
            "n1": self.n1,
            "replications": self.replications,
            "level": self.level,
            "seed": self.seed,
            "contamination": None
            if c is None
            else {"epsilon": c.epsilon, "contaminant": c.contaminant.to_dict()},
        }


def sample_scenario(spec: ScenarioSpec, replication_index: int) -> TwoSampleData:
    """Draw replication ``replication_index``; the stream depends only on (seed, index)."""
    rng = np.random.default_rng([spec.seed, _SAMPLE_STREAM, replication_index])
    y0 = spec.model0.sample(rng, spec.n0)
    y1 = spec.model1.sample(rng, spec.n1)
    c = spec.contamination
    if c is not None and c.epsilon > 0:
        hit = rng.random(spec.n0) < c.epsilon
        y0 = np.where(hit, c.contaminant.sample(rng, spec.n0), y0)
    return TwoSampleData(y0, y1)


def data_hash(data: TwoSampleData) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(data.y0).tobytes())
    h.update(b"|")
    h.update(np.ascontiguousarray(data.y1).tobytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class RejectionTable:
    """Rejection proportions with lambda on rows and alpha on columns."""

    lambdas: tuple[float, ...]
    alphas: tuple[float, ...]
    beta: float
    cells: np.ndarray
    replications: int
    methods: tuple[tuple[str, ...], ...] = ()
    data_hashes: tuple[str, ...] = ()
    spec: ScenarioSpec | None = None
    config: RunConfig = field(default_factory=RunConfig)

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=float)
        if cells.shape != (len(self.lambdas), len(self.alphas)):
            raise ValueError("cells must have shape (len(lambdas), len(alphas))")
        if np.any((cells < 0) | (cells > 1)):
            raise ValueError("rejection proportions must lie in [0, 1]")
        object.__setattr__(self, "cells", cells)

    @property
    def se(self) -> np.ndarray:
        """Binomial standard error of every cell."""
        p = self.cells
        return np.sqrt(p * (1.0 - p) / self.replications)

    def cell(self, lam: float, alpha: float) -> float:
        return float(self.cells[self._row(lam), self._col(alpha)])

    def cell_se(self, lam: float, alpha: float) -> float:
        return float(self.se[self._row(lam), self._col(alpha)])

    def _row(self, lam: float) -> int:
        return _index(self.lambdas, lam)

    def _col(self, alpha: float) -> int:
        return _index(self.alphas, alpha)


def _index(values, v) -> int:
    for i, u in enumerate(values):
        if abs(u - v) <= 1e-12:
            return i
    raise KeyError(v)


def _perm_seed(seed: int, r: int) -> int:
    return int(np.random.SeedSequence([seed, _PERM_SEED_STREAM, r]).generate_state(1)[0])


def run_table(
    spec: ScenarioSpec,
    alpha_grid,
    lambda_grid,
    beta: float = 0.0,
    config: RunConfig | None = None,
    progress=None,
) -> RejectionTable:
    """Rejection proportions over a (lambda, alpha) grid.

    Cells on the power-divergence line (``alpha = 0``, ``beta = 0``) are
    calibrated by permutation with ``config.n_perm`` relabelings under the
    default ``Method.AUTO``; the others use the normal limit.
    """
    alphas = tuple(float(a) for a in alpha_grid)
    lambdas = tuple(float(v) for v in lambda_grid)
    if not alphas or not lambdas:
        raise ValueError("grids must be nonempty")
    config = (config or RunConfig()).with_(level=spec.level, seed=spec.seed)
    cells = [[GsbParams(a, lam, beta) for a in alphas] for lam in lambdas]
    methods = tuple(tuple(resolve_method(p, config.method).value for p in row) for row in cells)
    counts = np.zeros((len(lambdas), len(alphas)))
    kc = kernel_constants()
    hashes = []
    for r in range(spec.replications):
        data = sample_scenario(spec, r)
        before = data_hash(data)
        fit = fit_kde(data, config.bandwidth, config.grid_points)
        perm_seed = _perm_seed(spec.seed, r)
        for i, row in enumerate(cells):
            for j, params in enumerate(row):
                i_hat = mi_hybrid(fit.hd, params)
                if methods[i][j] == Method.PERMUTATION.value:
                    stats = permutation_statistics(fit, params, config.n_perm, perm_seed)
                    p = _add_one_p(i_hat, stats)
                else:
                    try:
                        m = null_moments(params, fit.hd.fx, fit.hd.fy, kc)
                    except DegenerateVariance:
                        continue
                    t = test_statistic(i_hat, m, fit.n, fit.h)
                    p = float(norm.sf(t))
                counts[i, j] += p <= config.level
        if data_hash(data) != before:
            raise RuntimeError("replication data changed while evaluating cells")
        hashes.append(before)
        if progress is not None:
            progress(r + 1, spec.replications)
    return RejectionTable(
        lambdas=lambdas,
        alphas=alphas,
        beta=float(beta),
        cells=counts / spec.replications,
        replications=spec.replications,
        methods=methods,
        data_hashes=tuple(hashes),
        spec=spec,
        config=config,
    )
