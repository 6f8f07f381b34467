import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jctriangle.errors import DefectiveAtEP
from jctriangle.model import ModelParams, build_effective_matrix, build_full_single_excitation
from jctriangle.spectral import (
    DEFECT_TOL,
    biorthogonalize,
    cardano_eigenvalues,
    cardano_pq,
    cardano_roots,
    is_real,
    labelled_eigensystem,
    match_branches,
    numeric_eigensystem,
    track_branches,
)

from conftest import random_params


def multiset_gap(a, b):
    b = np.asarray(b)
    return float(np.max(np.abs(b[match_branches(a, b)] - a)))


def test_pq_at_3ep(fig2_3ep):
    c = cardano_pq(fig2_3ep)
    assert abs(c.p) < 1e-12 and abs(c.q) < 1e-12


def test_pq_hermitian_circulant():
    c = cardano_pq(ModelParams(gamma=0, theta=0, j1=0.02, j2=0.02, j3=0.02))
    assert c.q == pytest.approx(0.02**3, rel=1e-12)
    assert c.p == pytest.approx(-(0.02**2), rel=1e-12)
    assert abs(c.discriminant) < 1e-12 * 0.02**6


def test_pq_decoupled():
    c = cardano_pq(ModelParams(gamma=0.03, j1=0, j2=0, j3=0))
    assert c.p == pytest.approx(0.03**2 / 3)
    assert c.q == 0


def test_circulant_eigenvalues():
    p = ModelParams(gamma=0, theta=0)
    w1 = 1 - 0.09 / 50
    expect = np.array([w1 - 0.02, w1 + 0.01, w1 + 0.01])
    assert multiset_gap(expect, cardano_eigenvalues(p)) < 1e-12


def test_triple_root_at_3ep(fig2_3ep):
    e = cardano_eigenvalues(fig2_3ep)
    assert np.max(np.abs(e[:, None] - e[None, :])) < 1e-6
    assert np.max(np.abs(e - cardano_pq(fig2_3ep).shift)) < 1e-6


def test_broken_phase_above_3ep(fig2_3ep):
    from dataclasses import replace

    e = cardano_eigenvalues(replace(fig2_3ep, gamma=fig2_3ep.gamma + 0.005))
    assert is_real(e[0])
    assert abs(e[1].imag + e[2].imag) < 1e-10
    assert abs(e[1].imag) > 1e-4


def test_cardano_roots_satisfy_depressed_cubic():
    rng = np.random.default_rng(3)
    for _ in range(500):
        p, q = rng.normal(size=2) * rng.choice([1e-6, 1e-3, 1.0])
        eps = cardano_roots(p, q)
        scale = max(abs(p) ** 1.5, abs(q), 1e-300)
        assert np.max(np.abs(eps**3 + 3 * p * eps + 2 * q)) < 1e-12 * scale
        np.testing.assert_allclose(np.prod(eps), -2 * q, atol=1e-12 * scale)


def test_root_property_and_vieta():
    rng = np.random.default_rng(11)
    for _ in range(300):
        params = random_params(rng)
        m = np.asarray(build_effective_matrix(params))
        e = cardano_eigenvalues(params)
        c = cardano_pq(params)
        eps = e - c.shift
        scale = max(abs(c.p) ** 1.5, abs(c.q), 1e-30)
        assert np.max(np.abs(eps**3 + 3 * c.p * eps + 2 * c.q)) < 1e-12 * max(scale, np.max(np.abs(eps)) ** 3)
        assert abs(np.sum(e) - np.trace(m)) < 1e-12 * abs(np.trace(m))
        assert abs(np.prod(e) - np.linalg.det(m)) < 1e-12 * abs(np.linalg.det(m))
        assert multiset_gap(e, np.conj(e)) < 1e-12


def test_reality_transition():
    rng = np.random.default_rng(5)
    seen = {True: 0, False: 0}
    for _ in range(500):
        params = random_params(rng)
        c = cardano_pq(params)
        scale = max(params.j1**2, params.j3**2, params.gamma**2, 1e-30)
        if abs(c.discriminant) < 1e-6 * scale**3:
            continue
        e = cardano_eigenvalues(params)
        if c.discriminant < 0:
            assert np.all(np.abs(e.imag) < 1e-10)
        else:
            real = np.abs(e.imag) < 1e-10
            assert real.sum() == 1
            pair = e[~real]
            assert abs(pair[0] - np.conj(pair[1])) < 1e-12
        seen[c.discriminant < 0] += 1
    assert seen[True] > 20 and seen[False] > 20


@settings(max_examples=300, deadline=None)
@given(
    gamma=st.floats(0, 0.05),
    theta=st.floats(0, 2 * np.pi / 3),
    j1=st.floats(0, 0.05),
    j3=st.floats(0, 0.05),
    g1=st.floats(0, 0.5),
    g2=st.floats(0, 0.5),
    delta=st.floats(10, 100),
)
def test_oracle_equivalence_property(gamma, theta, j1, j3, g1, g2, delta):
    params = ModelParams(delta=delta, g1=g1, g2=g2, g3=g1, gamma=gamma, j1=j1, j2=j1, j3=j3, theta=theta)
    numeric = numeric_eigensystem(build_effective_matrix(params)).eigenvalues
    # near-EP sensitivity amplifies rounding as eps**(1/3) of the hopping scale
    assert multiset_gap(cardano_eigenvalues(params), numeric) < 1e-9


def test_identity_and_jordan():
    s = numeric_eigensystem(np.eye(3))
    np.testing.assert_allclose(s.eigenvalues, 1)
    assert s.defectiveness == pytest.approx(1.0)
    jordan = np.diag([1.0, 1.0], k=1)
    s = numeric_eigensystem(jordan)
    assert np.max(np.abs(s.eigenvalues)) < 1e-12
    assert s.defectiveness < 1e-8
    with pytest.raises(DefectiveAtEP):
        biorthogonalize(s)


def test_eigenpair_residuals():
    rng = np.random.default_rng(2)
    for _ in range(50):
        s = numeric_eigensystem(build_effective_matrix(random_params(rng)))
        assert s.residual < 1e-13


def test_biorthogonal_hermitian():
    s = biorthogonalize(numeric_eigensystem(build_effective_matrix(ModelParams(theta=0.4))))
    np.testing.assert_allclose(s.left, s.right, atol=1e-12)
    np.testing.assert_allclose(s.gram(), np.eye(3), atol=1e-12)


def test_biorthogonal_generic():
    s = biorthogonalize(labelled_eigensystem(ModelParams(gamma=0.008, theta=0.7)))
    np.testing.assert_allclose(s.gram(), np.eye(3), atol=1e-10)
    np.testing.assert_allclose(s.completeness(), np.eye(3), atol=1e-10)
    np.testing.assert_allclose(np.linalg.norm(s.right, axis=0), 1.0)


def test_defective_at_3ep(fig2_3ep):
    s = numeric_eigensystem(build_effective_matrix(fig2_3ep))
    assert s.defectiveness < DEFECT_TOL
    with pytest.raises(DefectiveAtEP):
        biorthogonalize(s)


def test_defectiveness_shrinks_towards_2ep():
    from jctriangle.ep import gamma_2c

    base = ModelParams(theta=np.pi / 4)
    gc = gamma_2c(base)
    values = []
    for offset in (1e-3, 1e-4, 1e-5, 1e-6):
        s = numeric_eigensystem(build_effective_matrix(ModelParams(theta=np.pi / 4, gamma=gc - offset)))
        biorthogonalize(s)
        values.append(s.defectiveness)
    assert all(a > b for a, b in zip(values, values[1:]))


def test_six_by_six_accepted():
    s = numeric_eigensystem(build_full_single_excitation(ModelParams(gamma=0.002)))
    assert s.size == 6


def test_labelled_matches_cardano():
    p = ModelParams(gamma=0.01, theta=0.3)
    np.testing.assert_allclose(labelled_eigensystem(p).eigenvalues, cardano_eigenvalues(p), atol=1e-12)


def test_track_branches_continuity():
    rows = [np.array([0.0, 1.0, 2.0]), np.array([2.1, 0.1, 1.1])]
    np.testing.assert_allclose(track_branches(rows)[1], [0.1, 1.1, 2.1])


def test_match_branches_strict_tie():
    from jctriangle.errors import BranchPairingAmbiguous

    with pytest.raises(BranchPairingAmbiguous):
        match_branches(np.array([0.0, 0.0, 1.0]), np.array([0.1, -0.1, 1.0]), strict=True)
