"""Extended Bregman divergences between discretized densities.

The generalized S-Bregman (GSB) family is indexed by ``(alpha, lam, beta)``
with derived exponents ``A = 1 + lam (1 - alpha)`` and
``B = alpha - lam (1 - alpha)``. Its generator is
``phi(t) = exp(beta t) + t**(1 + B/A) / B`` applied to ``k = A`` powers of the
densities. On the manifolds ``A = 0`` and ``B = 0`` the divergence is the
continuous limit, evaluated in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import GridMismatch, LimitCase
from .kde import DENSITY_FLOOR, DensityGrid, trapezoid

__all__ = [
    "LIMIT_TOL",
    "GsbParams",
    "HybridDensity",
    "PhiGenerator",
    "extended_bregman",
    "gsb_divergence",
    "gsb_integrand",
    "mi_hybrid",
    "mi_from_arrays",
    "phi_gsb",
    "phi_itakura_saito",
]

LIMIT_TOL = 1e-7
_TAG_TOL = 1e-12


def _close(a: float, b: float, tol: float = _TAG_TOL) -> bool:
    return abs(a - b) <= tol


@dataclass(frozen=True)
class GsbParams:
    """Tuning triple of the GSB family."""

    alpha: float
    lam: float
    beta: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "lam", "beta"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, float(v))
        if self.alpha < -1.0:
            raise ValueError("alpha must be >= -1")

    @property
    def A(self) -> float:
        return 1.0 + self.lam * (1.0 - self.alpha)

    @property
    def B(self) -> float:
        return self.alpha - self.lam * (1.0 - self.alpha)

    @property
    def k(self) -> float:
        return self.A

    @property
    def is_pd(self) -> bool:
        return _close(self.alpha, 0.0) and _close(self.beta, 0.0)

    @property
    def is_s_divergence(self) -> bool:
        return _close(self.beta, 0.0)

    @property
    def is_dpd(self) -> bool:
        return _close(self.lam, 0.0) and _close(self.beta, 0.0)

    @property
    def is_l2(self) -> bool:
        return _close(self.beta, 0.0) and _close(self.alpha, 1.0) and _close(self.lam, 0.0)

    @property
    def is_scaled_bed(self) -> bool:
        return _close(self.alpha, -1.0) and _close(self.lam, 0.0) and not _close(self.beta, 0.0)

    def family(self) -> str:
        if self.is_l2:
            return "L2"
        if self.is_pd:
            return "PD"
        if self.is_s_divergence:
            return "SDivergence"
        if self.is_scaled_bed:
            return "BED"
        return "GenericGSB"

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "lambda": self.lam, "beta": self.beta, "A": self.A, "B": self.B}


@dataclass(frozen=True)
class PhiGenerator:
    """A convex generator with analytic derivatives and its density-power index."""

    evaluate: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]
    description: str
    index: float = 1.0


def phi_gsb(params: GsbParams, limit_tol: float = LIMIT_TOL) -> PhiGenerator:
    A, B, beta = params.A, params.B, params.beta
    if abs(A) <= limit_tol or abs(B) <= limit_tol:
        raise LimitCase(f"GSB generator undefined for A={A}, B={B}; use gsb_divergence")
    expo = 1.0 + B / A
    coef1 = (A + B) / (A * B)
    coef2 = (A + B) / (A * A)

    def evaluate(t):
        t = np.asarray(t, dtype=float)
        return np.exp(beta * t) + _pow(t, expo) / B

    def d1(t):
        t = np.asarray(t, dtype=float)
        return beta * np.exp(beta * t) + coef1 * _pow(t, B / A)

    def d2(t):
        t = np.asarray(t, dtype=float)
        return beta * beta * np.exp(beta * t) + coef2 * _pow(t, B / A - 1.0)

    desc = f"GSB(alpha={params.alpha:g}, lambda={params.lam:g}, beta={params.beta:g})"
    return PhiGenerator(evaluate, d1, d2, desc, index=A)


def phi_itakura_saito() -> PhiGenerator:
    """Generator ``-log(t) / (2 pi)`` with index 1."""
    two_pi = 2.0 * math.pi

    def evaluate(t):
        return -np.log(_clamp(t)) / two_pi

    def d1(t):
        return -1.0 / (two_pi * _clamp(t))

    def d2(t):
        return 1.0 / (two_pi * _clamp(t) ** 2)

    return PhiGenerator(evaluate, d1, d2, "Itakura-Saito", index=1.0)


def _clamp(x):
    return np.maximum(np.asarray(x, dtype=float), DENSITY_FLOOR)


def _pow(x, p: float):
    # Nonpositive exponents of numerically-zero densities would overflow.
    x = np.asarray(x, dtype=float)
    if p > 0:
        return np.power(x, p)
    return np.exp(p * np.log(_clamp(x)))


def _log_ratio(a, b):
    return np.log(_clamp(a)) - np.log(_clamp(b))


def gsb_integrand(g, f, params: GsbParams, limit_tol: float = LIMIT_TOL, use_limits: bool = True):
    """Pointwise GSB integrand for densities ``g`` (first argument) and ``f``.

    With ``use_limits=False`` the generic closed form is evaluated even near
    the ``A = 0`` / ``B = 0`` manifolds (used to check limit continuity).
    """
    g = np.asarray(g, dtype=float)
    f = np.asarray(f, dtype=float)
    alpha, beta = params.alpha, params.beta
    A, B = params.A, params.B
    ap1 = 1.0 + alpha

    if use_limits and abs(A) <= limit_tol and abs(B) <= limit_tol:
        return np.zeros(np.broadcast(g, f).shape)

    if use_limits and abs(A) <= limit_tol:
        fa = _pow(f, ap1)
        return fa * _log_ratio(f, g) - (fa - _pow(g, ap1)) / ap1

    if use_limits and abs(B) <= limit_tol:
        fa = _pow(f, ap1)
        ga = _pow(g, ap1)
        out = ga * np.where(g > 0, _log_ratio(g, f), 0.0) - (ga - fa) / ap1
        if beta != 0.0:
            out = out + _exp_bregman(ga, fa, beta)
        return out

    gA = _pow(g, A)
    fA = _pow(f, A)
    out = (_pow(g, A + B) - _pow(f, A + B)) / B - (gA - fA) * ((A + B) / (A * B)) * _pow(f, B)
    if beta != 0.0:
        out = out + _exp_bregman(gA, fA, beta)
    return out


def _exp_bregman(s, t, beta):
    # Bregman divergence of exp(beta .) between s and t.
    et = np.exp(beta * t)
    return et * (beta * t - beta * s - 1.0) + np.exp(beta * s)


def _check_same(g: DensityGrid, f: DensityGrid) -> None:
    if not g.same_grid(f):
        raise GridMismatch("g and f must share one grid")


def extended_bregman(g: DensityGrid, f: DensityGrid, phi: PhiGenerator, k: float | None = None) -> float:
    """Trapezoid integral of ``phi(g^k) - phi(f^k) - (g^k - f^k) phi'(f^k)`` over ``{f > floor}``."""
    _check_same(g, f)
    k = phi.index if k is None else k
    if not k > 0:
        raise ValueError("index k must be positive")
    gk = _pow(g.values, k)
    fk = _pow(f.values, k)
    mask = f.values > DENSITY_FLOOR
    integrand = np.where(mask, phi.evaluate(gk) - phi.evaluate(fk) - (gk - fk) * phi.d1(fk), 0.0)
    return trapezoid(integrand, g.spacing)


def gsb_divergence(g: DensityGrid, f: DensityGrid, params: GsbParams, limit_tol: float = LIMIT_TOL) -> float:
    _check_same(g, f)
    mask = f.values > DENSITY_FLOOR
    integrand = gsb_integrand(g.values, f.values, params, limit_tol)
    return trapezoid(np.where(mask, integrand, 0.0), g.spacing)


@dataclass(frozen=True)
class HybridDensity:
    """Binary marginal ``fx`` and per-label continuous slices on one grid."""

    fx: tuple[float, float]
    joint: tuple[DensityGrid, DensityGrid]
    fy: DensityGrid

    def __post_init__(self):
        p0, p1 = (float(p) for p in self.fx)
        if not (p0 > 0 and p1 > 0 and abs(p0 + p1 - 1.0) <= 1e-9):
            raise ValueError("fx must be two positive probabilities summing to 1")
        s0, s1 = self.joint
        if not (s0.same_grid(s1) and s0.same_grid(self.fy)):
            raise GridMismatch("joint slices and fy must share one grid")
        object.__setattr__(self, "fx", (p0, p1))

    @classmethod
    def from_slices(cls, fx, slice0: DensityGrid, slice1: DensityGrid) -> "HybridDensity":
        return cls(tuple(fx), (slice0, slice1), slice0.with_values(slice0.values + slice1.values))

    @classmethod
    def product(cls, fx, fy: DensityGrid) -> "HybridDensity":
        """Independence model: slice x is ``fx[x] * fy``."""
        p0, p1 = fx
        return cls((p0, p1), (fy.with_values(p0 * fy.values), fy.with_values(p1 * fy.values)), fy)

    @property
    def points(self) -> np.ndarray:
        return self.fy.points

    @property
    def spacing(self) -> float:
        return self.fy.spacing

    def swapped(self) -> "HybridDensity":
        return HybridDensity((self.fx[1], self.fx[0]), (self.joint[1], self.joint[0]), self.fy)


Divergence = Union[GsbParams, PhiGenerator]


def mi_from_arrays(p0, p1, s0, s1, fy, spacing: float, params: Divergence, limit_tol: float = LIMIT_TOL):
    """Hybrid mutual information from raw arrays.

    ``s0``/``s1`` may carry leading batch dimensions (for example one row per
    permutation); ``fy`` and the label probabilities broadcast against them.
    Returns a float, or an array over the batch dimensions.
    """
    s0 = np.asarray(s0, dtype=float)
    s1 = np.asarray(s1, dtype=float)
    fy = np.asarray(fy, dtype=float)
    mask = fy > DENSITY_FLOOR
    total = 0.0
    for px, sx in ((p0, s0), (p1, s1)):
        f = px * fy
        if isinstance(params, GsbParams):
            integrand = gsb_integrand(sx, f, params, limit_tol)
        else:
            k = params.index
            gk = _pow(sx, k)
            fk = _pow(f, k)
            integrand = params.evaluate(gk) - params.evaluate(fk) - (gk - fk) * params.d1(fk)
        total = total + np.where(mask, integrand, 0.0)
    out = spacing * (total.sum(axis=-1) - 0.5 * (total[..., 0] + total[..., -1]))
    return float(out) if np.ndim(out) == 0 else out


def mi_hybrid(hd: HybridDensity, params: Divergence, limit_tol: float = LIMIT_TOL) -> float:
    """Mutual information between the label and the continuous variable.

    Divergence between the joint slices and ``fx[x] * fy``, summed over the
    two labels and integrated over ``{fy > floor}``.
    """
    p0, p1 = hd.fx
    return mi_from_arrays(p0, p1, hd.joint[0].values, hd.joint[1].values, hd.fy.values, hd.spacing, params, limit_tol)
