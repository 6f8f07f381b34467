"""Physical model of the Jaynes-Cummings triangle.

Three cavities on a ring, each dispersively coupled to a two-level atom, with
gain on cavity 1, loss on cavity 3 and a hopping phase ``theta`` (flux
``3*theta``).  After eliminating the atoms to leading order in ``g/delta`` the
single-photon physics is a 3x3 non-Hermitian matrix; the 6x6 single-excitation
Hamiltonian with the atoms kept explicitly serves as a check on that reduction.

All energies are in units of the bare cavity frequency ``omega``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError

__all__ = [
    "ModelParams",
    "EffectiveMatrix",
    "FullMatrix",
    "SymmetryReport",
    "renormalized_frequencies",
    "frequency_detuning",
    "build_effective_matrix",
    "build_full_single_excitation",
    "check_symmetries",
    "PARITY",
]


class DispersiveRegimeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ModelParams:
    """All physical knobs of the triangle.

    ``theta`` is stored as given; nothing downstream reduces it modulo the
    flux period.
    """

    omega: float = 1.0
    delta: float = 50.0
    g1: float = 0.3
    g2: float = 0.3
    g3: float = 0.3
    gamma: float = 0.0
    j1: float = 0.01
    j2: float = 0.01
    j3: float = 0.01
    theta: float = 0.0

    def __post_init__(self):
        for name in ("omega", "delta", "g1", "g2", "g3", "gamma", "j1", "j2", "j3", "theta"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if min(self.j1, self.j2, self.j3) < 0:
            raise ValueError("hopping strengths j1, j2, j3 must be non-negative")
        if self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        g_max = max(abs(self.g1), abs(self.g2), abs(self.g3))
        if g_max**2 / self.delta >= self.omega:
            warnings.warn(
                f"g^2/delta = {g_max**2 / self.delta:.3g} >= omega: outside the dispersive "
                "regime, the effective model is not trustworthy",
                DispersiveRegimeWarning,
                stacklevel=3,
            )

    @property
    def flux(self) -> float:
        return 3.0 * self.theta

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in self.__dataclass_fields__}


def renormalized_frequencies(params: ModelParams) -> tuple[float, float, float]:
    """Dispersively shifted cavity frequencies ``omega - g_n**2 / delta``."""
    if params.delta == 0:
        raise ValueError("delta = 0: dispersive shift g^2/delta is undefined")
    return tuple(params.omega - g**2 / params.delta for g in (params.g1, params.g2, params.g3))


def frequency_detuning(params: ModelParams) -> float:
    """``omega_2 - omega_1`` evaluated as ``(g1**2 - g2**2) / delta``.

    Computed directly from the couplings so that it is exactly zero when
    ``g1 == g2`` instead of carrying the rounding of two large frequencies.
    """
    return (params.g1**2 - params.g2**2) / params.delta


def _require_effective_form(params: ModelParams):
    if params.g1 != params.g3:
        raise PreconditionError(
            f"effective 3x3 model assumes g1 == g3 (gain and loss cavities equally coupled); "
            f"got g1={params.g1}, g3={params.g3}"
        )
    if params.j1 != params.j2:
        raise PreconditionError(
            f"effective 3x3 model assumes j1 == j2 (only the 3-1 bond differs); "
            f"got j1={params.j1}, j2={params.j2}"
        )


def _hopping_block(j1, j2, j3, theta):
    # phases placed as in the effective matrix: upper triangle carries e^{-i theta}
    # on the 1-2 and 2-3 bonds and e^{+i theta} on the 1-3 bond
    up = np.exp(-1j * theta)
    h = np.zeros((3, 3), dtype=complex)
    h[0, 1] = -j1 * up
    h[1, 2] = -j2 * up
    h[0, 2] = -j3 * np.conj(up)
    h[1, 0] = np.conj(h[0, 1])
    h[2, 1] = np.conj(h[1, 2])
    h[2, 0] = np.conj(h[0, 2])
    return h


@dataclass(frozen=True)
class EffectiveMatrix:
    """Dense 3x3 single-photon matrix after dispersive elimination of the atoms.

    ``centered`` is the same matrix minus ``shift * I`` with its diagonal
    built from the coupling detuning, which keeps eigenvalue computations at
    the hopping scale rather than at ``omega``.
    """

    entries: np.ndarray
    params: ModelParams
    shift: float
    centered: np.ndarray = field(repr=False)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.entries))


def build_effective_matrix(params: ModelParams) -> EffectiveMatrix:
    """Build the 3x3 effective matrix.

    Requires ``g1 == g3`` and ``j1 == j2``; the closed-form spectrum is only
    valid under those constraints.
    """
    _require_effective_form(params)
    w1, w2, _ = renormalized_frequencies(params)
    gamma = params.gamma
    hop = _hopping_block(params.j1, params.j2, params.j3, params.theta)

    entries = hop.copy()
    entries[0, 0] = w1 + 1j * gamma
    entries[1, 1] = w2
    entries[2, 2] = w1 - 1j * gamma

    shift = (2.0 * w1 + w2) / 3.0
    detuning = frequency_detuning(params)
    centered = hop.copy()
    centered[0, 0] = -detuning / 3.0 + 1j * gamma
    centered[1, 1] = 2.0 * detuning / 3.0
    centered[2, 2] = -detuning / 3.0 - 1j * gamma

    entries.setflags(write=False)
    centered.setflags(write=False)
    return EffectiveMatrix(entries=entries, params=params, shift=shift, centered=centered)


@dataclass(frozen=True)
class FullMatrix:
    """6x6 single-excitation Hamiltonian.

    Basis order: photon in cavity 1, 2, 3 (all atoms down), then atom 1, 2, 3
    excited with no photon.  The common vacuum energy ``-3*delta/2`` is
    dropped.
    """

    entries: np.ndarray
    params: ModelParams

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    @property
    def photon_block(self) -> np.ndarray:
        return self.entries[:3, :3]


def build_full_single_excitation(params: ModelParams) -> FullMatrix:
    p = params
    h = np.zeros((6, 6), dtype=complex)
    h[:3, :3] = _hopping_block(p.j1, p.j2, p.j3, p.theta)
    h[0, 0] = p.omega + 1j * p.gamma
    h[1, 1] = p.omega
    h[2, 2] = p.omega - 1j * p.gamma
    for n, g in enumerate((p.g1, p.g2, p.g3)):
        h[3 + n, 3 + n] = p.delta
        h[n, 3 + n] = g
        h[3 + n, n] = g
    h.setflags(write=False)
    return FullMatrix(entries=h, params=params)


PARITY = np.fliplr(np.eye(3))


@dataclass(frozen=True)
class SymmetryReport:
    pt_residual: float
    chiral_residual: float
    tol: float

    @property
    def pt_symmetric(self) -> bool:
        return self.pt_residual <= self.tol

    @property
    def chiral_symmetric(self) -> bool:
        return self.chiral_residual <= self.tol


def check_symmetries(matrix, tol: float = 1e-12) -> SymmetryReport:
    """Residuals of the PT and chiral (CT) symmetries of a 3x3 matrix.

    PT: ``max |P M* P - M|`` with ``P`` the mirror 1<->3.  CT: ``max |(C M C^-1)* - M|``
    with ``C`` the orientation-reversing exchange 1<->3.  On a three-site ring
    both exchanges are the same permutation, so the two residuals agree for
    any 3x3 input; they are kept separate because they encode different
    statements about the full Hamiltonian.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
    pt = PARITY @ m.conj() @ PARITY
    chiral_exchange = PARITY
    ct = (chiral_exchange @ m @ chiral_exchange.T).conj()
    return SymmetryReport(
        pt_residual=float(np.max(np.abs(pt - m))),
        chiral_residual=float(np.max(np.abs(ct - m))),
        tol=tol,
    )
