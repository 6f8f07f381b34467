"""Subcommand implementations.  Each returns a list of ``ResultTable``."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .. import dynamics, ep, perturb, spectral
from ..errors import DefectiveAtEP
from ..model import build_effective_matrix
from .config import PARAM_FIELDS, ConfigError, RunConfig
from .table import ResultTable


def _map(fn, items, threads):
    # ordered map: output never depends on the thread count
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _with_j_ratio(params, ratio):
    j1 = ratio * params.j3
    return replace(params, j1=j1, j2=j1)


def _with_g_ratio(params, ratio):
    g1 = ratio * params.g2
    return replace(params, g1=g1, g3=g1)


def _set_axis(params, name, value):
    if name == "j_ratio":
        return _with_j_ratio(params, value)
    if name == "g_ratio":
        return _with_g_ratio(params, value)
    try:
        return replace(params, **{name: value})
    except ValueError as exc:
        raise ConfigError(f"invalid value {value!r} for {name}: {exc}") from exc


def _spectrum_row(cfg: RunConfig, params):
    kind = ep.classify(params, cfg.tolerance("classify", ep.CLASSIFY_TOL)).kind.value
    return spectral.cardano_eigenvalues(params), kind


def run_spectrum(cfg: RunConfig):
    """Eigenvalues over gain/loss and (optionally) the hopping ratio."""
    gammas = cfg.axis("gamma").values()
    ratios = cfg.axis("j_ratio").values() if cfg.get("sweep", "j_ratio") else [cfg.params.j1 / cfg.params.j3]
    nodes = [(r, g) for r in ratios for g in gammas]
    results = _map(lambda n: _spectrum_row(cfg, replace(_with_j_ratio(cfg.params, n[0]), gamma=n[1])), nodes, cfg.threads)
    table = ResultTable("spectrum", ["j_ratio", "gamma", "E1", "E2", "E3", "kind"], complex_columns=frozenset({"E1", "E2", "E3"}))
    for (r, g), (values, kind) in zip(nodes, results):
        table.add(float(r), float(g), *values, kind)
    return [table]


def _slice_row(cfg: RunConfig, params):
    closed = spectral.cardano_eigenvalues(params)
    numeric = spectral.numeric_eigensystem(build_effective_matrix(params)).eigenvalues
    numeric = numeric[spectral.match_branches(closed, numeric)]
    kind = ep.classify(params, cfg.tolerance("classify", ep.CLASSIFY_TOL)).kind.value
    return closed, float(np.max(np.abs(numeric - closed))), kind


def run_slice(cfg: RunConfig):
    """Eigenvalues along one parameter, closed form and numeric deviation."""
    name = cfg.get("sweep", "axis", "gamma").strip()
    if name not in PARAM_FIELDS and name not in ("g_ratio", "j_ratio"):
        raise ConfigError(f"slice axis {name!r} is not a model parameter")
    values = cfg.axis(name).values()
    results = _map(lambda v: _slice_row(cfg, _set_axis(cfg.params, name, v)), values, cfg.threads)
    table = ResultTable(
        "slice", [name, "E1", "E2", "E3", "numeric_deviation", "kind"], complex_columns=frozenset({"E1", "E2", "E3"})
    )
    for v, (closed, dev, kind) in zip(values, results):
        table.add(float(v), *closed, dev, kind)
    return [table]


def run_surface(cfg: RunConfig):
    """Third-order exceptional surface over ``g1/g2`` and ``j1/j3``."""
    surf = ep.sweep_surface(cfg.axis("g_ratio").values(), cfg.axis("j_ratio").values(), cfg.params, threads=cfg.threads)
    table = ResultTable("surface", ["g_ratio", "j_ratio", "theta_3c", "gamma_3c"])
    for i, g in enumerate(surf.g_ratio):
        for j, r in enumerate(surf.j_ratio):
            table.add(float(g), float(r), surf.theta[i, j], surf.gamma[i, j])
    return [table]


def run_classify(cfg: RunConfig):
    p = cfg.params
    result = ep.classify(p, cfg.tolerance("classify", ep.CLASSIFY_TOL))
    table = ResultTable(
        "classify",
        ["theta", "gamma", "kind", "discriminant", "disc_scaled", "p_scaled", "q_scaled", "E1", "E2", "E3"],
        complex_columns=frozenset({"E1", "E2", "E3"}),
    )
    table.add(p.theta, p.gamma, result.kind.value, result.discriminant, *result.residuals, *spectral.cardano_eigenvalues(p))
    return [table]


def _fit_row(fits, kind, site, quantity, eps, values):
    try:
        f = perturb.fit_scaling(eps, values, min_samples=min(8, len(eps)))
        fits.add(kind, site, quantity, f.exponent, f.prefactor, f.r_squared, f.window[0], f.window[1])
    except ValueError:
        fits.add(kind, site, quantity, np.nan, np.nan, np.nan, float(eps.min()), float(eps.max()))


def _perturb_3ep(params, sites, eps, threads, fits):
    table = ResultTable(
        "perturb_3ep",
        ["site", "eps", "dE1", "dE2", "dE3", "pred1", "pred2", "pred3", "re_split_a", "re_split_b"],
        complex_columns=frozenset({"dE1", "dE2", "dE3", "pred1", "pred2", "pred3"}),
    )
    ladders = _map(lambda s: perturb.ladder_3ep(params, eps, s), sites, threads)
    for site, (e, exact, pred) in zip(sites, ladders):
        split = np.sort(np.abs(np.real(exact[:, 1:] - exact[:, :1])), axis=1)
        for k in range(e.size):
            table.add(site, e[k], *exact[k], *pred[k], split[k, 0], split[k, 1])
        _fit_row(fits, "EP3", site, "abs_dE1", e, np.abs(exact[:, 0]))
        _fit_row(fits, "EP3", site, "re_dE2_minus_dE3", e, np.abs(np.real(exact[:, 1] - exact[:, 2])))
    return table


def _perturb_2ep(params, sites, eps, threads, fits):
    table = ResultTable("perturb_2ep", ["theta", "gamma", "site", "eps", "split", "pred_split", "simple_shift"])
    ladders = _map(lambda s: perturb.ladder_2ep(params, eps, s), sites, threads)
    for site, (e, split, simple) in zip(sites, ladders):
        for k in range(e.size):
            pred = perturb.puiseux_2ep(params, e[k], site, method="determinant").re_split
            table.add(params.theta, params.gamma, site, e[k], split[k], abs(pred), simple[k])
        _fit_row(fits, "EP2", site, "re_split", e, split)
    return table


def run_perturb(cfg: RunConfig):
    """Eigenvalue response to a small shift of one cavity frequency at an EP."""
    sites = [int(s) for s in cfg.numbers("perturb", "sites", [1])]
    for s in sites:
        if s not in (1, 2, 3):
            raise ConfigError(f"perturbed site must be 1, 2 or 3, got {s}")
    eps = cfg.axis("eps", section="perturb").values()
    fits = ResultTable(
        "perturb_fit", ["ep", "site", "quantity", "exponent", "prefactor", "r_squared", "eps_min", "eps_max"]
    )
    tables = []
    kind = ep.classify(cfg.params, cfg.tolerance("classify", ep.CLASSIFY_TOL)).kind
    if kind is ep.EpKind.EP3:
        tables.append(_perturb_3ep(cfg.params, sites, eps, cfg.threads, fits))
    elif kind is ep.EpKind.EP2:
        tables.append(_perturb_2ep(cfg.params, sites, eps, cfg.threads, fits))
    else:
        raise ConfigError(f"perturb needs an exceptional point; the configured parameters are {kind.value}")

    ref = cfg.get("perturb", "reference_2ep_theta")
    if ref is not None:
        theta = cfg.number("perturb", "reference_2ep_theta")
        at = replace(cfg.params, theta=theta)
        at = replace(at, gamma=ep.gamma_2c(at) if at.g1 == at.g2 else ep.critical_gammas(at)[0])
        tables.append(_perturb_2ep(at, [1], eps, cfg.threads, fits))
    return tables + [fits]


def _fidelity_row(cfg, gamma, eps):
    tol = cfg.tolerance("defect", spectral.DEFECT_TOL)
    try:
        return dynamics.fidelity(cfg.params, gamma, eps, strict=False, tol=tol)
    except DefectiveAtEP:
        return np.full(3, np.nan)


def run_fidelity(cfg: RunConfig):
    """Biorthogonal fidelity of each branch along gain/loss."""
    gammas = cfg.axis("gamma").values()
    eps = cfg.number("fidelity", "eps")
    if eps <= 0:
        raise ConfigError("fidelity eps must be positive")
    rows = _map(lambda g: _fidelity_row(cfg, g, eps), gammas, cfg.threads)
    table = ResultTable("fidelity", ["gamma", "F1", "F2", "F3"])
    for g, f in zip(gammas, rows):
        table.add(float(g), *f)
    return [table]


def run_quench(cfg: RunConfig):
    """Loschmidt echo of each pre-quench eigenstate after a sudden change of gain/loss."""
    gi = cfg.number("quench", "gamma_i")
    gf = cfg.number("quench", "gamma_f")
    pi, pf = replace(cfg.params, gamma=gi), replace(cfg.params, gamma=gf)
    t_max = cfg.number("quench", "t_max", 20.0 / cfg.params.j1)
    count = int(cfg.number("quench", "count", 2048))
    if t_max <= 0 or count < 2:
        raise ConfigError("quench needs t_max > 0 and count >= 2")
    branches = [int(b) for b in cfg.numbers("quench", "branches", [1, 2, 3])]
    for b in branches:
        if b not in (1, 2, 3):
            raise ConfigError(f"branch must be 1, 2 or 3, got {b}")
    times = np.linspace(0.0, t_max, count)
    tol = cfg.tolerance("defect", spectral.DEFECT_TOL)
    series = _map(lambda b: dynamics.loschmidt_echo(pi, pf, b, times, tol=tol), branches, cfg.threads)
    table = ResultTable("quench", ["t"] + [f"L{b}" for b in branches])
    for k, t in enumerate(times):
        table.add(float(t), *(s.values[k] for s in series))
    return [table]


COMMANDS = {
    "spectrum": run_spectrum,
    "slice": run_slice,
    "surface": run_surface,
    "classify": run_classify,
    "perturb": run_perturb,
    "fidelity": run_fidelity,
    "quench": run_quench,
}
