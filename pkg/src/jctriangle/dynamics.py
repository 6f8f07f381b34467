"""Biorthogonal fidelity and Loschmidt echo with associated states.

A state expanded on right eigenvectors, ``|psi> = sum a_n |R_n>``, is paired
with the associated state ``sum a_n |L_n>`` built from the same coefficients
on the left eigenvectors.  Overlaps formed this way reduce to ratios of
``|a_n|**2`` and stay within ``[0, 1]`` even where the spectrum is complex.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DefectiveAtEP
from .model import EffectiveMatrix, ModelParams, build_effective_matrix
from .spectral import (
    DEFECT_TOL,
    Spectrum,
    biorthogonalize,
    labelled_eigensystem,
    match_branches,
    numeric_eigensystem,
)

__all__ = [
    "BiorthCoordinates",
    "TimeSeries",
    "associated_state",
    "biorthogonal_overlap",
    "fidelity",
    "fidelity_scan",
    "fidelity_coordinates",
    "expm_taylor",
    "evolve",
    "loschmidt_echo",
    "loschmidt_echo_direct",
    "default_times",
    "steady_state_limit",
    "gap_period",
    "autocorrelation_peak",
]


def biorthogonal_overlap(left_a, right_b, left_b, right_a) -> complex:
    """``<L_a|R_b><L_b|R_a> / (<L_b|R_b><L_a|R_a>)``."""
    num = np.vdot(left_a, right_b) * np.vdot(left_b, right_a)
    den = np.vdot(left_b, right_b) * np.vdot(left_a, right_a)
    return num / den


@dataclass(frozen=True)
class BiorthCoordinates:
    """Coefficients of a state on the right eigenvectors of ``basis``."""

    basis: Spectrum
    coords: np.ndarray

    @classmethod
    def from_state(cls, basis: Spectrum, vector) -> "BiorthCoordinates":
        if not basis.normalized:
            raise ValueError("coordinates need a biorthogonalized basis")
        return cls(basis=basis, coords=basis.left.conj().T @ np.asarray(vector, dtype=complex))

    def state(self) -> np.ndarray:
        return self.basis.right @ self.coords


def associated_state(coords: BiorthCoordinates) -> np.ndarray:
    """``sum_n a_n |L_n>`` for the coefficients ``a_n`` of the state."""
    if not coords.basis.normalized:
        raise DefectiveAtEP(coords.basis.defectiveness, DEFECT_TOL)
    return coords.basis.left @ coords.coords


def _basis(params: ModelParams, tol: float = DEFECT_TOL) -> Spectrum:
    return biorthogonalize(labelled_eigensystem(params), tol)


def fidelity(params: ModelParams, gamma: float, eps: float, *, strict: bool = True, tol: float = DEFECT_TOL):
    """Biorthogonal fidelity ``(F1, F2, F3)`` between eigenstates at ``gamma`` and ``gamma + eps``.

    Branch ``n`` follows the Cardano labelling at ``gamma``; states at
    ``gamma + eps`` are matched to it by minimal eigenvalue displacement.
    Only the basis at ``gamma`` has to be non-defective.
    """
    base = _basis(replace(params, gamma=gamma), tol)
    moved = numeric_eigensystem(build_effective_matrix(replace(params, gamma=gamma + eps)))
    moved = moved.reordered(match_branches(base.eigenvalues, moved.eigenvalues, strict=strict and eps > 0))

    out = np.empty(3)
    for n in range(3):
        coords = BiorthCoordinates.from_state(base, moved.right[:, n])
        partner = associated_state(coords)
        f = biorthogonal_overlap(base.left[:, n], moved.right[:, n], partner, base.right[:, n])
        out[n] = f.real
    return out


def fidelity_coordinates(params: ModelParams, gamma: float, eps: float, tol: float = DEFECT_TOL):
    """Same quantity as ``fidelity`` written as ``|a_n|^2 / sum |a_m|^2``."""
    base = _basis(replace(params, gamma=gamma), tol)
    moved = numeric_eigensystem(build_effective_matrix(replace(params, gamma=gamma + eps)))
    moved = moved.reordered(match_branches(base.eigenvalues, moved.eigenvalues))
    a = base.left.conj().T @ moved.right
    weights = np.abs(a) ** 2
    return np.diag(weights) / weights.sum(axis=0)


def fidelity_scan(params: ModelParams, gammas, eps: float, tol: float = DEFECT_TOL) -> np.ndarray:
    """``F_n`` along a gain/loss grid, shape ``(len(gammas), 3)``.

    Grid points whose own basis is defective are returned as NaN.
    """
    rows = []
    for g in np.asarray(gammas, dtype=float):
        try:
            rows.append(fidelity(params, g, eps, strict=False, tol=tol))
        except DefectiveAtEP:
            rows.append(np.full(3, np.nan))
    return np.array(rows)


def expm_taylor(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring of a truncated Taylor series."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    norm = np.max(np.sum(np.abs(a), axis=0))
    squarings = max(0, int(np.ceil(np.log2(norm / 0.25)))) if norm > 0 else 0
    b = a / 2.0**squarings
    result = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for k in range(1, 30):
        term = term @ b / k
        result = result + term
        if np.max(np.abs(term)) <= 1e-18 * np.max(np.abs(result)):
            break
    for _ in range(squarings):
        result = result @ result
    return result


def evolve(matrix, state0, times, method: str = "auto", tol: float = DEFECT_TOL) -> np.ndarray:
    """``exp(-i M t) |state0>`` for each time, shape ``(len(times), dim)``.

    ``method="spectral"`` uses ``sum_n exp(-i E_n t) |R_n><L_n|``;
    ``method="taylor"`` exponentiates directly.  ``"auto"`` takes the spectral
    route unless the eigenbasis is close to defective.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or not np.all(np.isfinite(times)):
        raise ValueError("times must be a finite 1-d grid")
    if np.any(np.diff(times) < 0):
        raise ValueError("times must be sorted")
    if isinstance(matrix, EffectiveMatrix):
        centered, shift = np.asarray(matrix.centered), matrix.shift
    else:
        a = np.asarray(matrix, dtype=complex)
        shift = np.trace(a) / a.shape[0]
        centered = a - shift * np.eye(a.shape[0])
    psi0 = np.asarray(state0, dtype=complex)

    if method == "auto":
        method = "spectral" if numeric_eigensystem(centered).defectiveness > tol else "taylor"
    if method == "spectral":
        basis = biorthogonalize(numeric_eigensystem(centered), tol)
        amplitudes = basis.left.conj().T @ psi0
        phases = np.exp(-1j * np.outer(times, basis.eigenvalues))
        states = (phases * amplitudes) @ basis.right.T
    elif method == "taylor":
        states = np.array([expm_taylor(-1j * centered * t) @ psi0 for t in times])
    else:
        raise ValueError(f"unknown method {method!r}")
    return states * np.exp(-1j * shift * times)[:, None]


@dataclass(frozen=True)
class TimeSeries:
    times: np.ndarray
    values: np.ndarray
    branch: int
    metadata: dict = field(default_factory=dict)


def default_times(params: ModelParams, count: int = 2048) -> np.ndarray:
    return np.linspace(0.0, 20.0 / params.j1, count)


def _quench_amplitudes(params_i, params_f, branch, times, method, tol):
    basis = _basis(params_i, tol)
    psi0 = basis.right[:, branch - 1]
    states = evolve(build_effective_matrix(params_f), psi0, times, method=method, tol=tol)
    return basis, psi0, states


def loschmidt_echo(
    params_i: ModelParams,
    params_f: ModelParams,
    branch: int,
    times=None,
    method: str = "auto",
    tol: float = DEFECT_TOL,
) -> TimeSeries:
    """Associated-state Loschmidt echo ``L_n(t) = |d_n|^2 / sum_m |d_m|^2``.

    ``d_m(t) = <L_m^i|psi(t)>`` with ``psi(0)`` the ``branch``-th pre-quench
    eigenstate (Cardano labelling) evolved under the post-quench matrix.
    """
    if branch not in (1, 2, 3):
        raise ValueError(f"branch must be 1, 2 or 3, got {branch}")
    if times is None:
        times = default_times(params_i)
    times = np.asarray(times, dtype=float)
    basis, _, states = _quench_amplitudes(params_i, params_f, branch, times, method, tol)
    d = states @ basis.left.conj()
    weights = np.abs(d) ** 2
    norm = weights.sum(axis=1)
    values = weights[:, branch - 1] / norm
    meta = {"gamma_i": params_i.gamma, "gamma_f": params_f.gamma, "theta": params_f.theta}
    return TimeSeries(times=times, values=values, branch=branch, metadata=meta)


def loschmidt_echo_direct(params_i, params_f, branch, times, tol: float = DEFECT_TOL) -> np.ndarray:
    """The echo evaluated from the four overlaps with explicit associated states."""
    times = np.asarray(times, dtype=float)
    basis, psi0, states = _quench_amplitudes(params_i, params_f, branch, times, "auto", tol)
    tilde0 = basis.left[:, branch - 1]
    out = np.empty(times.size, dtype=complex)
    for k, psi_t in enumerate(states):
        tilde_t = associated_state(BiorthCoordinates.from_state(basis, psi_t))
        out[k] = biorthogonal_overlap(tilde0, psi_t, tilde_t, psi0)
    return out


def steady_state_limit(params_i: ModelParams, params_f: ModelParams, branch: int, tol: float = DEFECT_TOL) -> float:
    """Long-time echo when the post-quench spectrum has a unique fastest-growing mode."""
    basis = _basis(params_i, tol)
    post = numeric_eigensystem(build_effective_matrix(params_f))
    dominant = post.right[:, np.argmax(post.eigenvalues.imag)]
    w = np.abs(basis.left.conj().T @ dominant) ** 2
    return float(w[branch - 1] / w.sum())


def gap_period(params: ModelParams) -> float:
    """``2 pi`` over the smallest nonzero gap of a real spectrum."""
    e = np.sort(numeric_eigensystem(build_effective_matrix(params)).eigenvalues.real)
    gaps = np.diff(e)
    gaps = gaps[gaps > 1e-12 * max(1.0, np.max(np.abs(e)))]
    if gaps.size == 0:
        raise ValueError("spectrum is fully degenerate; no oscillation period")
    return float(2 * np.pi / gaps.min())


def autocorrelation_peak(times, values, period: float, window: float = 0.05) -> tuple[float, float]:
    """Largest lag-correlation of ``values`` for lags within ``window`` of ``period``.

    Returns ``(lag, correlation)``; correlation is Pearson's r between the
    series and its lagged copy.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    dt = times[1] - times[0]
    lo = max(1, int(np.floor(period * (1 - window) / dt)))
    hi = min(values.size - 2, int(np.ceil(period * (1 + window) / dt)))
    best = (np.nan, -np.inf)
    for lag in range(lo, hi + 1):
        a, b = values[:-lag], values[lag:]
        if np.std(a) == 0 or np.std(b) == 0:
            continue
        r = float(np.corrcoef(a, b)[0, 1])
        if r > best[1]:
            best = (lag * dt, r)
    return best
