"""End-to-end acceptance checks, one test per criterion.

Each test records a single PASS/FAIL line (collected in the terminal summary)
and asserts at the stated tolerance.
"""

import contextlib
import io
import time
from dataclasses import replace

import numpy as np

from jctriangle.cli import main
from jctriangle.cli.config import load_config
from jctriangle.dynamics import (
    autocorrelation_peak,
    fidelity_scan,
    gap_period,
    loschmidt_echo,
)
from jctriangle.ep import critical_3el, critical_gammas, gamma_2c, scaled_residuals
from jctriangle.model import ModelParams, build_effective_matrix, build_full_single_excitation
from jctriangle.perturb import (
    Perturbation,
    exact_perturbed_spectrum,
    fit_scaling,
    ladder_2ep,
    ladder_3ep,
    perturbed_cubic_roots,
    puiseux_3ep,
)
from jctriangle.spectral import cardano_eigenvalues, match_branches, numeric_eigensystem

from conftest import random_params, record


def preset(name, subcommand="classify"):
    return load_config(subcommand, preset=name)


def multiset_gap(a, b):
    return float(np.max(np.abs(b[match_branches(a, b)] - a)))


def test_criterion_01_oracle_equivalence():
    rng = np.random.default_rng(20240101)
    draws = [random_params(rng) for _ in range(10_000)]
    start = time.perf_counter()
    worst = 0.0
    for p in draws:
        numeric = numeric_eigensystem(build_effective_matrix(p)).eigenvalues
        worst = max(worst, multiset_gap(cardano_eigenvalues(p), numeric))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-9 and elapsed < 10
    record(1, ok, f"max multiset gap {worst:.2e} (< 1e-9), {elapsed:.2f} s for 1e4 draws (< 10 s)")
    assert ok


def test_criterion_02_third_order_line():
    rng = np.random.default_rng(2)
    worst_p = worst_q = 0.0
    n = 0
    while n < 1000:
        j1, j3 = rng.uniform(1e-3, 0.05, 2)
        g1, g2 = rng.uniform(0, 0.5, 2)
        p = ModelParams(delta=rng.uniform(10, 100), g1=g1, g3=g1, g2=g2, j1=j1, j2=j1, j3=j3)
        try:
            theta, gamma = critical_3el(p)
        except ValueError:
            continue
        _, pr, qr = scaled_residuals(replace(p, theta=theta, gamma=gamma))
        worst_p, worst_q = max(worst_p, pr), max(worst_q, qr)
        n += 1
    ridge = max(
        abs(critical_3el(ModelParams(g1=g, g2=g, g3=g, j1=j, j2=j, j3=k))[0] - np.pi / 6)
        for g, j, k in rng.uniform([0, 1e-3, 1e-3], [0.5, 0.05, 0.05], size=(200, 3))
    )
    ok = worst_p < 1e-9 and worst_q < 1e-9 and ridge < 1e-12
    record(2, ok, f"scaled |p| {worst_p:.1e}, |q| {worst_q:.1e} (< 1e-9); g1=g2 theta_3c - pi/6 = {ridge:.1e} (< 1e-12)")
    assert ok


def test_criterion_03_second_order_line():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(1000):
        g = rng.uniform(0, 0.5)
        j1, j3 = rng.uniform(1e-3, 0.05, 2)
        p = ModelParams(delta=rng.uniform(10, 100), g1=g, g2=g, g3=g, j1=j1, j2=j1, j3=j3, theta=rng.uniform(0, 2 * np.pi))
        worst = max(worst, scaled_residuals(replace(p, gamma=gamma_2c(p)))[0])
    term = 0.0
    for _ in range(200):
        j1, j3 = rng.uniform(1e-3, 0.05, 2)
        p = ModelParams(j1=j1, j2=j1, j3=j3)
        theta, gamma = critical_3el(p)
        term = max(term, abs(gamma_2c(replace(p, theta=theta)) - gamma))
    ok = worst < 1e-9 and term < 1e-12
    record(3, ok, f"scaled |q^2+p^3| {worst:.1e} (< 1e-9); |gamma_2c - gamma_3c| at theta_3c {term:.1e} (< 1e-12)")
    assert ok


def test_criterion_04_triple_coalescence():
    p = preset("fig2").params
    e = cardano_eigenvalues(p)
    spread = float(np.max(np.abs(e[:, None] - e[None, :])))
    above = cardano_eigenvalues(replace(p, gamma=critical_3el(p)[1] + 0.005))
    conj = abs(above[1].imag + above[2].imag)
    real = abs(above[0].imag)
    ok = spread < 1e-6 and conj < 1e-10 and real < 1e-10 and abs(above[1].imag) > 1e-10
    record(4, ok, f"max pairwise gap {spread:.1e} (< 1e-6); |Im E2 + Im E3| {conj:.1e}, |Im E1| {real:.1e} (< 1e-10)")
    assert ok


def test_criterion_05_perturbed_cubic():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(1000):
        p = random_params(rng)
        pert = Perturbation(site=int(rng.integers(1, 4)), epsilon=float(10 ** rng.uniform(-10, -2)))
        worst = max(worst, multiset_gap(exact_perturbed_spectrum(p, pert), perturbed_cubic_roots(p, pert)))
    ok = worst < 1e-10
    record(5, ok, f"max root/eigenvalue gap {worst:.1e} over 1e3 draws (< 1e-10)")
    assert ok


def test_criterion_06_cube_root_sensitivity():
    p = preset("fig2").params
    eps, exact, _ = ladder_3ep(p, np.logspace(-9, -5, 17))
    split = np.sort(np.abs(np.real(exact[:, 1:] - exact[:, :1])), axis=1)
    fit = fit_scaling(eps, split[:, 1])
    pred = puiseux_3ep(p, eps[0])
    ratios = split[0] / np.array([pred.re_split_minus, pred.re_split_plus])
    second = fit_scaling(eps, np.abs(np.real(exact[:, 1] - exact[:, 2])))
    ok = (
        abs(fit.exponent - 1 / 3) <= 0.02
        and fit.r_squared > 0.999
        and np.all((ratios >= 0.95) & (ratios <= 1.05))
        and 0.60 <= second.exponent <= 0.73
    )
    record(
        6,
        ok,
        f"exponent {fit.exponent:.4f} (1/3 +- 0.02), r^2 {fit.r_squared:.6f} (> 0.999), "
        f"exact/predicted at 1e-9 {ratios[0]:.4f}, {ratios[1]:.4f} ([0.95, 1.05]), "
        f"Re(E2-E3) exponent {second.exponent:.4f} ([0.60, 0.73])",
    )
    assert ok


def test_criterion_07_square_root_sensitivity():
    p3 = preset("fig2").params
    p2 = replace(p3, theta=np.pi / 4)
    p2 = replace(p2, gamma=gamma_2c(p2))
    eps, split2, _ = ladder_2ep(p2, np.logspace(-8, -4, 17))
    fit = fit_scaling(eps, split2)
    _, exact3, _ = ladder_3ep(p3, [1e-8])
    split3 = float(np.max(np.abs(np.real(exact3[0, 1:] - exact3[0, 0]))))
    ok = abs(fit.exponent - 0.5) <= 0.02 and split3 > split2[0]
    record(7, ok, f"2EP exponent {fit.exponent:.4f} (1/2 +- 0.02); at eps=1e-8 3EP split {split3:.2e} > 2EP split {split2[0]:.2e}")
    assert ok


def _dip_minima(params, gammas, eps):
    f = fidelity_scan(params, gammas, eps)
    return f, gammas[np.nanargmin(f, axis=0)]


def test_criterion_08_fidelity_dips():
    cfg = preset("fig3", "fidelity")
    p = cfg.params
    gammas = cfg.axis("gamma").values()
    step = gammas[1] - gammas[0]
    eps = cfg.number("fidelity", "eps")
    f, minima = _dip_minima(p, gammas, eps)
    g3c = critical_3el(p)[1]
    g2c = min(critical_gammas(p), key=lambda g: abs(g - g3c) if abs(g - g3c) > 1e-9 else np.inf)
    at_3ep = np.abs(minima - g3c) <= step
    # a dip at gamma_2c: within one grid step the fidelity falls below 0.9
    window = np.abs(gammas - g2c) <= step
    dips_2ep = np.nanmin(f[window], axis=0) < 0.9
    finite = f[np.isfinite(f)]
    in_range = bool(np.all((finite >= -1e-12) & (finite <= 1 + 1e-12)))
    sensitivity = []
    for delta in (50.0, 100.0):
        q = replace(p, delta=delta)
        q = replace(q, theta=critical_3el(q)[0])
        _, m = _dip_minima(q, gammas, eps)
        sensitivity.append(f"delta={delta:g}: minima {np.round(m, 5).tolist()} vs gamma_3c {critical_3el(q)[1]:.5f}")
    ok = bool(at_3ep.all()) and int(dips_2ep.sum()) == 2 and in_range
    record(
        8,
        ok,
        f"argmin F_n at {np.round(minima, 5).tolist()} vs gamma_3c {g3c:.5f} (step {step:.0e}): "
        f"within one step {at_3ep.tolist()}; dips at gamma_2c {g2c:.5f}: {int(dips_2ep.sum())} (== 2); "
        f"all F in [0,1]: {in_range}; " + "; ".join(sensitivity),
    )
    assert ok


def test_criterion_09_loschmidt_echo():
    a = preset("fig5a", "quench")
    pi, pf = replace(a.params, gamma=a.number("quench", "gamma_i")), replace(a.params, gamma=a.number("quench", "gamma_f"))
    t = np.linspace(0, 50 / pf.gamma, 2048)
    la = [loschmidt_echo(pi, pf, n, t).values for n in (1, 2, 3)]
    same = float(np.max(np.abs(la[0] - la[1])))
    tail = max(float(np.var(v[-len(v) // 4 :])) for v in la)

    c = preset("fig5c", "quench")
    ci, cf = replace(c.params, gamma=c.number("quench", "gamma_i")), replace(c.params, gamma=c.number("quench", "gamma_f"))
    tc = np.linspace(0, 20 / cf.j1, 2048)
    period = gap_period(cf)
    peaks = [autocorrelation_peak(tc, loschmidt_echo(ci, cf, n, tc).values, period, window=0.01) for n in (1, 2, 3)]
    r_min = min(r for _, r in peaks)

    b = preset("fig5b", "quench")
    bi, bf = replace(b.params, gamma=b.number("quench", "gamma_i")), replace(b.params, gamma=b.number("quench", "gamma_f"))
    lb = [loschmidt_echo(bi, bf, n, default_grid(bi)).values for n in (1, 2, 3)]
    dev = min(float(np.max(np.abs(lb[i] - lb[j]))) for i, j in ((0, 1), (0, 2), (1, 2)))

    ok = same < 1e-10 and tail < 1e-4 and r_min > 0.99 and dev > 1e-3
    record(
        9,
        ok,
        f"fig5a max|L1-L2| {same:.1e} (< 1e-10), tail variance {tail:.1e} (< 1e-4); "
        f"fig5c autocorrelation {r_min:.5f} (> 0.99) at lag {peaks[0][0]:.1f} vs gap period {period:.1f}; "
        f"fig5b min pairwise deviation {dev:.3f} (> 1e-3)",
    )
    assert ok


def default_grid(params):
    return np.linspace(0, 20 / params.j1, 2048)


def test_criterion_10_effective_model_validity():
    devs = []
    for delta in (50.0, 100.0, 200.0):
        p = ModelParams(delta=delta, g1=0.3, g2=0.3, g3=0.3, gamma=0.005, theta=np.pi / 6)
        w = numeric_eigensystem(build_full_single_excitation(p)).eigenvalues
        low = w[np.argsort(w.real)[:3]]
        devs.append(multiset_gap(cardano_eigenvalues(p), low))
    ok = devs[0] > devs[1] > devs[2]
    record(10, ok, "max deviation " + ", ".join(f"{d:.2e}" for d in devs) + " for delta = 50, 100, 200 (strictly decreasing)")
    assert ok


PRESET_RUNS = [
    ("fig1b", "surface"),
    ("fig2", "spectrum"),
    ("fig2", "slice"),
    ("fig2", "classify"),
    ("fig3", "slice"),
    ("fig3", "fidelity"),
    ("fig3", "classify"),
    ("fig4", "perturb"),
    ("fig4", "classify"),
    ("fig5a", "quench"),
    ("fig5b", "quench"),
    ("fig5c", "quench"),
    ("fig5d", "quench"),
]


def test_criterion_11_determinism(tmp_path):
    mismatched = []
    for name, sub in PRESET_RUNS:
        outputs = []
        for run, threads in enumerate((1, 1, 8)):
            out = tmp_path / f"{name}_{sub}_{run}"
            with contextlib.redirect_stdout(io.StringIO()):
                assert main([sub, "--preset", name, "--out", str(out), "--threads", str(threads), "--json"]) == 0
            outputs.append({f.name: f.read_bytes() for f in sorted(out.iterdir())})
        if not (outputs[0] == outputs[1] == outputs[2]):
            mismatched.append(f"{name}/{sub}")
    ok = not mismatched
    record(11, ok, f"{len(PRESET_RUNS)} preset runs byte-identical across two runs and threads 1, 8; mismatches: {mismatched or 'none'}")
    assert ok
