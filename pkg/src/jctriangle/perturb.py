"""Response of the spectrum to a small on-site frequency shift.

At a third-order EP the splitting grows like ``eps**(1/3)``, at a second-order
EP like ``eps**(1/2)``.  This module provides the exact perturbed spectrum,
the perturbed characteristic cubic, the leading Newton-Puiseux terms and a
log-log exponent fit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateExpansion
from .model import ModelParams, build_effective_matrix
from .spectral import cardano_eigenvalues, cardano_pq, cardano_roots, match_branches, numeric_eigensystem

__all__ = [
    "Perturbation",
    "PuiseuxCoefficients",
    "Puiseux3EP",
    "Puiseux2EP",
    "ScalingFit",
    "perturbed_matrix",
    "perturbed_cubic_coeffs",
    "perturbed_cubic_roots",
    "exact_perturbed_spectrum",
    "puiseux_coefficients",
    "puiseux_3ep",
    "puiseux_2ep",
    "ladder_3ep",
    "ladder_2ep",
    "fit_scaling",
]

# branch phases exp(i(2n+1)pi/3), n = 1, 2, 3: the cube roots of -1
BRANCH_PHASES = np.exp(1j * (2 * np.arange(1, 4) + 1) * np.pi / 3)


@dataclass(frozen=True)
class Perturbation:
    site: int = 1
    epsilon: float = 0.0

    def __post_init__(self):
        if self.site not in (1, 2, 3):
            raise ValueError(f"site must be 1, 2 or 3, got {self.site}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon}")

    def indicator(self) -> np.ndarray:
        d = np.zeros((3, 3))
        d[self.site - 1, self.site - 1] = 1.0
        return d


def perturbed_matrix(params: ModelParams, pert: Perturbation, centered: bool = True) -> tuple[np.ndarray, float]:
    """``M + eps * D_site`` and the shift it is measured from."""
    m = build_effective_matrix(params)
    base = m.centered if centered else m.entries
    return base + pert.epsilon * pert.indicator(), (m.shift if centered else 0.0)


def _complement(site):
    return [k for k in range(3) if k != site - 1]


def perturbed_cubic_coeffs(params: ModelParams, site: int = 1, origin: float = 0.0):
    """``(a, b, c, d, u)`` of ``E^3 - (a+eps) E^2 + (b + c eps) E + d eps + u = 0``.

    Expanding ``det(M + eps D - E)`` along the perturbed row gives
    ``a = tr M``, ``b`` the sum of principal 2x2 minors, ``u = -det M``,
    ``c`` the trace and ``-d`` the determinant of the 2x2 block complementary
    to ``site``.  With ``origin`` the coefficients describe ``E - origin``.
    """
    Perturbation(site=site)
    m = np.array(build_effective_matrix(params).entries) - origin * np.eye(3)
    i, j = _complement(site)
    block = m[np.ix_([i, j], [i, j])]
    a = np.trace(m)
    b = sum(m[k, k] * m[l, l] - m[k, l] * m[l, k] for k, l in ((0, 1), (0, 2), (1, 2)))
    c = np.trace(block)
    d = -(block[0, 0] * block[1, 1] - block[0, 1] * block[1, 0])
    u = -np.linalg.det(m)
    return complex(a), complex(b), complex(c), complex(d), complex(u)


def _cubic_roots(a2, a1, a0):
    # roots of x^3 + a2 x^2 + a1 x + a0
    p = (a1 - a2 * a2 / 3) / 3
    q = (2 * a2**3 / 27 - a2 * a1 / 3 + a0) / 2
    return cardano_roots(p, q) - a2 / 3


def perturbed_cubic_roots(params: ModelParams, pert: Perturbation, origin: float | None = None) -> np.ndarray:
    """Roots of the reconstructed perturbed cubic.

    By default the cubic is written about the spectral centre
    ``(2 w1 + w2) / 3`` for accuracy; pass ``origin=0.0`` for the literal
    coefficients.
    """
    if origin is None:
        origin = cardano_pq(params).shift
    a, b, c, d, u = perturbed_cubic_coeffs(params, pert.site, origin)
    eps = pert.epsilon
    return _cubic_roots(-(a + eps), b + c * eps, d * eps + u) + origin


def exact_perturbed_spectrum(params: ModelParams, pert: Perturbation) -> np.ndarray:
    """Eigenvalues of ``M + eps D_site`` paired with the unperturbed Cardano triplet."""
    mat, shift = perturbed_matrix(params, pert)
    values = numeric_eigensystem(mat).eigenvalues + shift
    return values[match_branches(cardano_eigenvalues(params), values)]


@dataclass(frozen=True)
class PuiseuxCoefficients:
    """Expansion data at a coalesced eigenvalue ``E0``.

    ``eta`` and ``v`` come from the complementary minor
    ``m(E0 + x) = -eta - v x + x**2``.  ``alpha`` is only set at a
    second-order EP.
    """

    E0: complex
    eta: complex
    v: complex
    alpha: complex | None = None
    alpha_flagged: bool = False


def _centered_diag(params):
    m = build_effective_matrix(params)
    return m.centered, m.shift


def puiseux_coefficients(params: ModelParams, site: int = 1, E0: complex | None = None) -> PuiseuxCoefficients:
    """``eta`` and ``v`` about ``E0`` (defaults to the spectral centre).

    For ``site=1`` this reads ``eta = -E0^2 + (w_- + w_0) E0 + J^2 - w_0 w_-``
    and ``v = w_- + w_0 - 2 E0`` with ``w_0`` the neutral cavity.
    """
    cm, shift = _centered_diag(params)
    e0 = 0.0 if E0 is None else E0 - shift
    i, j = _complement(site)
    wi, wj = cm[i, i], cm[j, j]
    hop2 = cm[i, j] * cm[j, i]
    eta = -(e0**2) + (wi + wj) * e0 + hop2 - wi * wj
    v = wi + wj - 2 * e0
    return PuiseuxCoefficients(E0=complex(e0 + shift), eta=complex(eta), v=complex(v))


def _principal_cbrt(z):
    return np.abs(z) ** (1 / 3) * np.exp(1j * np.angle(z) / 3)


@dataclass(frozen=True)
class Puiseux3EP:
    coefficients: PuiseuxCoefficients
    epsilon: float
    shifts: np.ndarray  # Delta E_n for n = 1, 2, 3 (two leading terms)
    re_split_plus: float
    re_split_minus: float


def puiseux_3ep(params: ModelParams, epsilon, site: int = 1, eta_tol: float = 1e-12) -> Puiseux3EP:
    """Leading two Newton-Puiseux terms at a third-order EP.

    ``Delta E_n = c1 w_n eps^(1/3) - v / (3 c1 w_n) eps^(2/3)`` with
    ``c1 = eta^(1/3)`` and ``w_n = exp(i(2n+1)pi/3)``.  The real splittings
    ``3/2 eta^(1/3) eps^(1/3) +- sqrt(3) gamma / 6 * eta^(-1/3) eps^(2/3)``
    assume real ``eta`` (``g1 == g2``).  Asymptotic only.
    """
    coef = puiseux_coefficients(params, site)
    scale = max(params.j1**2, params.j3**2, params.gamma**2)
    if abs(coef.eta) < eta_tol * scale:
        raise DegenerateExpansion(f"|eta| = {abs(coef.eta):.3e} vanishes; cube-root term is absent")
    eps = float(epsilon)
    c1 = _principal_cbrt(coef.eta)
    shifts = c1 * BRANCH_PHASES * eps ** (1 / 3) - coef.v / (3 * c1 * BRANCH_PHASES) * eps ** (2 / 3)
    lead = 1.5 * c1 * eps ** (1 / 3)
    second = np.sqrt(3) * params.gamma / 6 / c1 * eps ** (2 / 3)
    return Puiseux3EP(
        coefficients=coef,
        epsilon=eps,
        shifts=shifts,
        re_split_plus=float(np.real(lead + second)),
        re_split_minus=float(np.real(lead - second)),
    )


def _2ep_roots(params):
    c = cardano_pq(params)
    if c.p == 0:
        raise DegenerateExpansion("p = 0: the point is a third-order EP")
    # double root -q/p and simple root 2q/p of e^3 + 3pe + 2q at zero discriminant
    return c.shift - c.q / c.p, c.shift + 2 * c.q / c.p


@dataclass(frozen=True)
class Puiseux2EP:
    coefficients: PuiseuxCoefficients
    epsilon: float
    re_split: float  # Re(-2 sqrt(alpha)) eps^(1/2)
    method: str


def puiseux_2ep(params: ModelParams, epsilon, site: int = 1, method: str = "closed_form") -> Puiseux2EP:
    """Leading square-root splitting of the coalesced pair at a second-order EP.

    ``method="closed_form"`` uses the closed form
    ``alpha = -sqrt(9(E0-w+)^2 - 5(w0+w- -2E0)^2)/5 - 3(E0-w+)/5`` (gain site
    only); ``method="determinant"`` uses ``alpha = m(E0) / (E0 - E1)`` from the
    perturbed characteristic polynomial, with ``m`` the complementary minor and
    ``E1`` the non-degenerate eigenvalue.
    """
    e0, e1 = _2ep_roots(params)
    coef = puiseux_coefficients(params, site, E0=e0)
    cm, shift = _centered_diag(params)
    flagged = False
    if method == "closed_form":
        if site != 1:
            raise ValueError("the closed-form alpha applies to a perturbation of the gain cavity")
        x0 = e0 - shift
        w_plus, w0, w_minus = cm[0, 0], cm[1, 1], cm[2, 2]
        radicand = 9 * (x0 - w_plus) ** 2 - 5 * (w0 + w_minus - 2 * x0) ** 2
        flagged = not (abs(np.imag(radicand)) == 0 and np.real(radicand) >= 0)
        alpha = -np.sqrt(complex(radicand)) / 5 - 3 * (x0 - w_plus) / 5
    elif method == "determinant":
        alpha = -coef.eta / (e0 - e1)
    else:
        raise ValueError(f"unknown method {method!r}")
    coef = replace(coef, alpha=complex(alpha), alpha_flagged=flagged)
    split = np.real(-2 * np.sqrt(complex(alpha))) * np.sqrt(float(epsilon))
    return Puiseux2EP(coefficients=coef, epsilon=float(epsilon), re_split=float(split), method=method)


def ladder_3ep(params: ModelParams, eps_values, site: int = 1):
    """Exact ``Delta E`` along an epsilon ladder, labelled like the Puiseux branches.

    Branches are matched to the prediction at the smallest epsilon and then
    followed by continuity.  Returns ``(eps, exact_shifts, predicted_shifts)``
    with shift arrays of shape ``(N, 3)``.
    """
    eps_values = np.sort(np.asarray(eps_values, dtype=float))
    e0 = cardano_pq(params).shift
    exact = np.empty((eps_values.size, 3), dtype=complex)
    predicted = np.empty_like(exact)
    for k, eps in enumerate(eps_values):
        mat, shift = perturbed_matrix(params, Perturbation(site, eps))
        values = numeric_eigensystem(mat).eigenvalues + shift - e0
        predicted[k] = puiseux_3ep(params, eps, site).shifts
        ref = predicted[k] if k == 0 else exact[k - 1]
        exact[k] = values[match_branches(ref, values)]
    return eps_values, exact, predicted


def ladder_2ep(params: ModelParams, eps_values, site: int = 1):
    """Exact splitting ``|Re(E_a - E_b)|`` of the pair coalesced at a second-order EP.

    Returns ``(eps, splitting, simple_shift)`` where ``simple_shift`` is the
    displacement of the non-degenerate eigenvalue.
    """
    eps_values = np.sort(np.asarray(eps_values, dtype=float))
    e0, e1 = _2ep_roots(params)
    split = np.empty(eps_values.size)
    simple = np.empty(eps_values.size)
    for k, eps in enumerate(eps_values):
        mat, shift = perturbed_matrix(params, Perturbation(site, eps))
        values = numeric_eigensystem(mat).eigenvalues + shift
        order = np.argsort(np.abs(values - e0))
        pair = values[order[:2]]
        split[k] = abs(np.real(pair[0] - pair[1]))
        simple[k] = abs(values[order[2]] - e1)
    return eps_values, split, simple


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    log_prefactor: float
    r_squared: float
    window: tuple[float, float]

    @property
    def prefactor(self) -> float:
        return float(np.exp(self.log_prefactor))


def fit_scaling(eps, values, min_samples: int = 8) -> ScalingFit:
    """Least-squares line through ``(log eps, log |values|)``."""
    eps = np.asarray(eps, dtype=float)
    values = np.abs(np.asarray(values))
    if eps.shape != values.shape or eps.ndim != 1:
        raise ValueError("eps and values must be 1-d arrays of equal length")
    if eps.size < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {eps.size}")
    if np.any(eps <= 0) or np.any(values <= 0):
        raise ValueError("scaling fit needs strictly positive eps and splittings")
    x, y = np.log(eps), np.log(values)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(
        exponent=float(slope),
        log_prefactor=float(intercept),
        r_squared=float(r2),
        window=(float(eps.min()), float(eps.max())),
    )
