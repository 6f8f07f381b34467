"""Exceptional-point geometry of the effective model.

Second-order EPs sit on the zero set of the cubic discriminant ``q**2 + p**3``;
third-order EPs need ``p = q = 0`` simultaneously.  Closed forms exist for the
critical gain/loss along both families and for the flux of the third-order
line.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import NoRealCriticalPoint, OutOfReach
from .model import ModelParams, frequency_detuning
from .spectral import cardano_pq

__all__ = [
    "EpKind",
    "EpClassification",
    "CriticalSet",
    "CLASSIFY_TOL",
    "gamma_2c",
    "critical_3el",
    "critical_3el_argument",
    "flux_family",
    "critical_gammas",
    "scaled_residuals",
    "classify",
    "sweep_surface",
    "at_3ep",
]

CLASSIFY_TOL = 1e-9


class EpKind(str, enum.Enum):
    PT_SYMMETRIC = "PTSymmetric"
    PT_BROKEN = "PTBroken"
    EP2 = "EP2"
    EP3 = "EP3"


def gamma_2c(params: ModelParams) -> float:
    """Gain/loss at which two eigenvalues coalesce, for ``g1 == g2``.

    Returns the non-negative root; the negative one is its mirror.
    """
    if params.g1 != params.g2:
        raise ValueError("closed-form 2EP gain requires g1 == g2; use critical_gammas otherwise")
    j1, j3 = params.j1, params.j3
    loop = j1**2 * j3 * np.cos(3 * params.theta)
    radicand = 3 * np.cbrt(-(loop**2)) + j3**2 + 2 * j1**2
    scale = 2 * j1**2 + j3**2
    if radicand < 0:
        if radicand < -1e-12 * scale:
            raise NoRealCriticalPoint(f"2EP radicand is negative ({radicand:.3e})")
        radicand = 0.0
    return float(np.sqrt(radicand))


def critical_3el_argument(params: ModelParams) -> float:
    """Argument of the arccos fixing the flux of the third-order line."""
    j1, j3 = params.j1, params.j3
    if j1 <= 0 or j3 <= 0:
        raise ValueError("third-order line needs j1 > 0 and j3 > 0")
    d = frequency_detuning(params)  # (g1^2 - g2^2) / delta
    return d * (4 * d**2 + 27 * j1**2) / (27 * j1**2 * j3)


def critical_3el(params: ModelParams) -> tuple[float, float]:
    """``(theta_3c, gamma_3c)`` where ``p = q = 0``.

    ``theta_3c`` is the principal value in ``[0, pi/3]``; ``flux_family``
    enumerates the equivalent fluxes.
    """
    arg = critical_3el_argument(params)
    if abs(arg) > 1:
        raise OutOfReach(f"|arccos argument| = {abs(arg):.4g} > 1: no third-order line at these couplings")
    theta = np.arccos(arg) / 3
    gamma = np.sqrt(2 * params.j1**2 + params.j3**2 + (params.g1**2 - params.g2**2) ** 2 / (3 * params.delta**2))
    return float(theta), float(gamma)


def flux_family(theta_3c: float, n_max: int = 2) -> list[float]:
    """Fluxes ``+-3*theta_3c + 2*pi*k`` for ``|k| <= n_max``, sorted.

    At ``g1 == g2`` these reduce to ``pi/2 + n*pi``.
    """
    phi = 3 * theta_3c
    values = {round(s * phi + 2 * np.pi * k, 14) for k in range(-n_max, n_max + 1) for s in (1, -1)}
    return sorted(values)


def at_3ep(params: ModelParams) -> ModelParams:
    """Copy of ``params`` moved onto the third-order line."""
    theta, gamma = critical_3el(params)
    return replace(params, theta=theta, gamma=gamma)


def critical_gammas(params: ModelParams) -> np.ndarray:
    """All ``gamma >= 0`` where the discriminant vanishes, ascending.

    ``p`` and ``q`` are affine in ``gamma**2``, so the discriminant is a cubic
    in ``gamma**2``; its real non-negative roots are returned.  Works for
    ``g1 != g2``.
    """
    p0 = cardano_pq(replace(params, gamma=0.0))
    d = frequency_detuning(params)
    # p = p0 + x/3, q = q0 - d*x/3 with x = gamma^2
    a, b = p0.p, 1 / 3
    c, e = p0.q, -d / 3
    # (c + e x)^2 + (a + b x)^3
    coeffs = [
        b**3,
        3 * a * b**2 + e**2,
        3 * a**2 * b + 2 * c * e,
        a**3 + c**2,
    ]
    roots = np.roots(coeffs)
    scale = max(params.j1**2, params.j3**2, d**2, np.finfo(float).tiny)
    real = roots[np.abs(roots.imag) <= 1e-7 * scale].real
    real = real[real >= -1e-12 * scale]
    gammas = np.sort(np.sqrt(np.clip(real, 0, None)))
    # np.roots splits a double root by ~sqrt(eps); merge such clusters
    merged = []
    for g in gammas:
        if merged and g - merged[-1][-1] <= 1e-6 * np.sqrt(scale):
            merged[-1].append(g)
        else:
            merged.append([g])
    return np.array([np.mean(c) for c in merged])


def _scale(params: ModelParams) -> float:
    s = max(params.j1**2, params.j3**2, params.gamma**2, frequency_detuning(params) ** 2)
    return s if s > 0 else 1.0


def scaled_residuals(params: ModelParams) -> tuple[float, float, float]:
    """``(|q^2+p^3|, |p|, |q|)`` made dimensionless by the hopping/gain scale."""
    c = cardano_pq(params)
    s = _scale(params)
    return abs(c.discriminant) / s**3, abs(c.p) / s, abs(c.q) / s**1.5


@dataclass(frozen=True)
class EpClassification:
    kind: EpKind
    residuals: tuple[float, float, float]
    discriminant: float
    location: ModelParams


def classify(params: ModelParams, tol: float = CLASSIFY_TOL) -> EpClassification:
    c = cardano_pq(params)
    disc_r, p_r, q_r = res = scaled_residuals(params)
    if p_r < tol and q_r < tol:
        kind = EpKind.EP3
    elif disc_r < tol:
        kind = EpKind.EP2
    elif c.discriminant > 0:
        kind = EpKind.PT_BROKEN
    else:
        kind = EpKind.PT_SYMMETRIC
    return EpClassification(kind=kind, residuals=res, discriminant=c.discriminant, location=params)


@dataclass(frozen=True)
class CriticalSet:
    """theta_3c (and gamma_3c) on a grid of ``g1/g2`` by ``j1/j3`` ratios.

    Rows follow ``g_ratio``, columns ``j_ratio``.  Masked nodes hold NaN.
    """

    g_ratio: np.ndarray
    j_ratio: np.ndarray
    theta: np.ndarray
    gamma: np.ndarray
    mask: np.ndarray  # True where a third-order line exists


def _surface_node(fixed: ModelParams, g_ratio: float, j_ratio: float):
    g1 = g_ratio * fixed.g2
    j1 = j_ratio * fixed.j3
    node = replace(fixed, g1=g1, g3=g1, j1=j1, j2=j1)
    try:
        return critical_3el(node)
    except OutOfReach:
        return None


def sweep_surface(g_ratio, j_ratio, fixed: ModelParams, threads: int = 1) -> CriticalSet:
    """Third-order exceptional surface over ``g1/g2`` and ``j1/j3``.

    ``g2`` and ``j3`` are taken from ``fixed``; ``g1 = g3`` and ``j1 = j2``
    follow the ratios.
    """
    g_ratio = np.asarray(g_ratio, dtype=float)
    j_ratio = np.asarray(j_ratio, dtype=float)
    if g_ratio.size == 0 or j_ratio.size == 0:
        raise ValueError("surface grid must be non-empty")
    if np.any(g_ratio <= 0) or np.any(j_ratio <= 0):
        raise ValueError("coupling and hopping ratios must be positive")

    nodes = [(a, b) for a in g_ratio for b in j_ratio]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda ab: _surface_node(fixed, *ab), nodes))
    else:
        results = [_surface_node(fixed, a, b) for a, b in nodes]

    shape = (g_ratio.size, j_ratio.size)
    theta = np.full(shape, np.nan)
    gamma = np.full(shape, np.nan)
    mask = np.zeros(shape, dtype=bool)
    for k, r in enumerate(results):
        if r is not None:
            i, j = divmod(k, j_ratio.size)
            theta[i, j], gamma[i, j] = r
            mask[i, j] = True
    return CriticalSet(g_ratio=g_ratio, j_ratio=j_ratio, theta=theta, gamma=gamma, mask=mask)
