"""Spectra of the effective matrix.

Two independent routes: the closed-form Cardano roots of the characteristic
cubic, and a dense left/right eigensolver (LAPACK via scipy).  The numeric
route also provides the biorthogonal eigenbasis used by the dynamics module.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .errors import BranchPairingAmbiguous, ConvergenceError, DefectiveAtEP
from .model import (
    EffectiveMatrix,
    FullMatrix,
    ModelParams,
    _require_effective_form,
    build_effective_matrix,
    frequency_detuning,
    renormalized_frequencies,
)

__all__ = [
    "CHI",
    "DEFECT_TOL",
    "CardanoInputs",
    "Spectrum",
    "cardano_pq",
    "cardano_roots",
    "cardano_eigenvalues",
    "numeric_eigensystem",
    "biorthogonalize",
    "labelled_eigensystem",
    "match_branches",
    "track_branches",
    "is_real",
]

CHI = complex(-0.5, np.sqrt(3.0) / 2.0)
DEFECT_TOL = 1e-8


@dataclass(frozen=True)
class CardanoInputs:
    p: float
    q: float
    shift: float

    @property
    def discriminant(self) -> float:
        return self.q**2 + self.p**3


def cardano_pq(params: ModelParams) -> CardanoInputs:
    """Depressed-cubic coefficients: the centered eigenvalues solve
    ``e**3 + 3*p*e + 2*q = 0``."""
    _require_effective_form(params)
    w1, w2, _ = renormalized_frequencies(params)
    d = frequency_detuning(params)  # omega_2 - omega_1
    j1, j3, gamma = params.j1, params.j3, params.gamma
    p = (-2 * j1**2 - j3**2 + gamma**2) / 3 - d**2 / 9
    q = j1**2 * j3 * np.cos(3 * params.theta) - d * (d**2 + 9 * j1**2 - 9 * j3**2 + 9 * gamma**2) / 27
    return CardanoInputs(p=float(p), q=float(q), shift=(2 * w1 + w2) / 3)


def _cbrt(z: complex) -> complex:
    # principal complex cube root
    if z == 0:
        return 0j
    return abs(z) ** (1 / 3) * np.exp(1j * np.angle(z) / 3)


def cardano_roots(p, q) -> np.ndarray:
    """Roots ``(e1, e2, e3)`` of ``e**3 + 3 p e + 2 q = 0`` in Cardano order.

    ``beta_plus`` is the principal cube root of ``-q + sqrt(q**2 + p**3)`` and
    ``beta_minus = -p / beta_plus`` so that the product constraint holds on
    every branch.  The radicand of ``beta_plus`` is evaluated without
    cancellation via ``(-q + s)(-q - s) = -p**3``.  A discriminant that is
    zero to rounding is treated as exactly zero.
    """
    p = complex(p)
    q = complex(q)
    disc = q * q + p**3
    # a discriminant at the rounding level of its two terms is a double root;
    # its square root would otherwise inject ~sqrt(eps) noise into the roots
    if abs(disc) <= 16 * np.finfo(float).eps * max(abs(q * q), abs(p**3)):
        disc = 0j
    s = np.sqrt(disc)
    plus = -q + s
    minus = -q - s
    if abs(plus) < abs(minus):
        plus = -(p**3) / minus
    beta_p = _cbrt(plus)
    if beta_p != 0:
        beta_m = -p / beta_p
    else:
        beta_m = _cbrt(minus)
    return np.array(
        [
            beta_p + beta_m,
            CHI * beta_p + np.conj(CHI) * beta_m,
            np.conj(CHI) * beta_p + CHI * beta_m,
        ]
    )


def cardano_eigenvalues(params: ModelParams) -> np.ndarray:
    """Closed-form eigenvalues ``(E1, E2, E3)`` of the effective matrix."""
    c = cardano_pq(params)
    return cardano_roots(c.p, c.q) + c.shift


def is_real(value, rtol: float = 1e-10) -> bool:
    return abs(np.imag(value)) < rtol * max(1.0, abs(np.real(value)))


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues with right and left eigenvectors stored as columns.

    ``norm_products[n]`` is ``<left_n|right_n>``; before biorthogonalization
    both vectors have unit norm, so its smallest magnitude measures how close
    the basis is to self-orthogonal (``defectiveness``).
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    norm_products: np.ndarray
    defectiveness: float
    residual: float
    normalized: bool = False

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    def gram(self) -> np.ndarray:
        return self.left.conj().T @ self.right

    def completeness(self) -> np.ndarray:
        return self.right @ self.left.conj().T

    def reordered(self, order) -> "Spectrum":
        order = np.asarray(order)
        return replace(
            self,
            eigenvalues=self.eigenvalues[order],
            right=self.right[:, order],
            left=self.left[:, order],
            norm_products=self.norm_products[order],
        )


def _as_centered(matrix):
    if isinstance(matrix, EffectiveMatrix):
        return np.asarray(matrix.centered, dtype=complex), matrix.shift
    a = np.asarray(matrix.entries if isinstance(matrix, FullMatrix) else matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    shift = np.trace(a) / a.shape[0]
    return a - shift * np.eye(a.shape[0]), shift


def _fix_phase(vectors):
    # largest-magnitude component real-positive
    idx = np.argmax(np.abs(vectors), axis=0)
    phases = vectors[idx, np.arange(vectors.shape[1])]
    phases = phases / np.abs(phases)
    return vectors / phases


def numeric_eigensystem(matrix) -> Spectrum:
    """Dense left/right eigendecomposition.

    Accepts an ``EffectiveMatrix``, ``FullMatrix`` or square array.  The
    matrix is diagonalized after removing its mean diagonal so that rounding
    is relative to the hopping scale.  Vectors come back with unit norm and
    are not yet biorthonormal.
    """
    a, shift = _as_centered(matrix)
    try:
        w, vl, vr = scipy.linalg.eig(a, left=True, right=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceError(f"eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(w)):
        raise ConvergenceError("eigensolver returned non-finite eigenvalues")

    vr = _fix_phase(vr / np.linalg.norm(vr, axis=0))
    vl = vl / np.linalg.norm(vl, axis=0)
    # align each left vector's phase so that <l|r> is real-positive when nonzero
    products = np.einsum("in,in->n", vl.conj(), vr)
    phase = np.where(np.abs(products) > 0, products / np.where(products == 0, 1, np.abs(products)), 1)
    vl = vl * phase
    products = np.einsum("in,in->n", vl.conj(), vr)

    scale = max(np.max(np.abs(a)), np.finfo(float).tiny)
    res_r = np.max(np.abs(a @ vr - vr * w))
    res_l = np.max(np.abs(vl.conj().T @ a - w[:, None] * vl.conj().T))
    return Spectrum(
        eigenvalues=w + shift,
        right=vr,
        left=vl,
        norm_products=products,
        defectiveness=float(np.min(np.abs(products))),
        residual=float(max(res_r, res_l) / scale),
    )


def biorthogonalize(spectrum: Spectrum, tol: float = DEFECT_TOL) -> Spectrum:
    """Rescale the left vectors so that ``<left_m|right_n> = delta_mn``.

    Right vectors keep unit norm.  The dual basis is taken from the inverse of
    the right-vector matrix, which also resolves degenerate (but
    non-defective) eigenspaces where LAPACK's left vectors need not pair up.
    """
    if spectrum.defectiveness <= tol:
        raise DefectiveAtEP(spectrum.defectiveness, tol)
    right = spectrum.right
    try:
        left = np.linalg.inv(right).conj().T
    except np.linalg.LinAlgError as exc:
        raise DefectiveAtEP(0.0, tol) from exc
    out = replace(spectrum, left=left, norm_products=np.einsum("in,in->n", left.conj(), right), normalized=True)
    identity = np.eye(spectrum.size)
    err = max(np.max(np.abs(out.gram() - identity)), np.max(np.abs(out.completeness() - identity)))
    cond_tol = max(tol, 1e3 * np.finfo(float).eps / spectrum.defectiveness)
    if err > cond_tol:
        raise DefectiveAtEP(spectrum.defectiveness, tol)
    return out


def match_branches(reference, values, *, strict: bool = False, rtol: float = 1e-9):
    """Permutation ``perm`` minimizing ``sum |values[perm] - reference|``.

    With ``strict`` a tie between the best and the runner-up matching raises
    ``BranchPairingAmbiguous``.
    """
    reference = np.asarray(reference)
    values = np.asarray(values)
    n = len(reference)
    costs = []
    for perm in itertools.permutations(range(n)):
        costs.append((float(np.sum(np.abs(values[list(perm)] - reference))), perm))
    costs.sort(key=lambda c: c[0])
    best_cost, best = costs[0]
    if strict and n > 1:
        runner_up = costs[1][0]
        if runner_up - best_cost <= rtol * max(runner_up, np.finfo(float).tiny):
            raise BranchPairingAmbiguous(
                f"matchings with cost {best_cost:.3e} and {runner_up:.3e} are indistinguishable"
            )
    return np.array(best)


def track_branches(eigenvalue_rows) -> np.ndarray:
    """Reorder each row so that branches vary continuously along the sweep."""
    rows = np.array(eigenvalue_rows, dtype=complex)
    for k in range(1, len(rows)):
        rows[k] = rows[k][match_branches(rows[k - 1], rows[k])]
    return rows


def labelled_eigensystem(params: ModelParams) -> Spectrum:
    """Numeric eigensystem of the effective matrix ordered like the Cardano roots."""
    spec = numeric_eigensystem(build_effective_matrix(params))
    return spec.reordered(match_branches(cardano_eigenvalues(params), spec.eigenvalues))
