"""Run configuration: INI-style text, presets and parameter resolution."""

from __future__ import annotations

import ast
import configparser
import hashlib
import math
import operator
from dataclasses import dataclass, fields, replace

import numpy as np

from .. import ep
from ..model import ModelParams

SUBCOMMANDS = ("spectrum", "slice", "surface", "classify", "perturb", "fidelity", "quench")
PARAM_FIELDS = tuple(f.name for f in fields(ModelParams))
RATIO_AXES = ("g_ratio", "j_ratio")

# section -> allowed keys (None: any ModelParams field / axis name)
SECTIONS = {
    "params": set(PARAM_FIELDS) | {"g", "j"},
    "sweep": None,
    "perturb": {"sites", "eps", "reference_2ep_theta"},
    "fidelity": {"eps"},
    "quench": {"gamma_i", "gamma_f", "t_max", "count", "branches"},
    "tolerances": {"classify", "defect"},
}


class ConfigError(ValueError):
    pass


PRESETS = {
    "fig1b": """
[params]
omega = 1
delta = 20
g = 0.3
j = 0.01
[sweep]
g_ratio = 0.2, 2, 50, linear
j_ratio = 0.2, 2, 50, linear
""",
    "fig2": """
[params]
omega = 1
delta = 50
g = 0.3
j = 0.01
theta = pi/6
gamma = sqrt(3)*0.01
[sweep]
gamma = 0, 0.03, 301, linear
j_ratio = 0.2, 2, 10, linear
""",
    "fig3": """
[params]
omega = 1
delta = 20
g1 = 0.1
g2 = 0.3
g3 = 0.1
j = 0.01
theta = theta_3c
gamma = gamma_3c
[sweep]
gamma = 0, 0.03, 601, linear
[fidelity]
eps = 5e-5
""",
    "fig4": """
[params]
omega = 1
delta = 50
g = 0.3
j = 0.01
theta = theta_3c
gamma = gamma_3c
[perturb]
sites = 1, 2
eps = 1e-9, 1e-5, 17, log
reference_2ep_theta = pi/4
""",
    "fig5a": """
[params]
delta = 50
g = 0.3
j = 0.01
theta = pi/6
[quench]
gamma_i = 0.006
gamma_f = 0.018
""",
    "fig5b": """
[params]
delta = 50
g = 0.3
j = 0.01
theta = pi/4
[quench]
gamma_i = 0.001
gamma_f = 0.01
""",
    "fig5c": """
[params]
delta = 50
g = 0.3
j = 0.01
theta = pi/6
[quench]
gamma_i = 0.018
gamma_f = 0.006
""",
    "fig5d": """
[params]
delta = 50
g = 0.3
j = 0.01
theta = pi/4
[quench]
gamma_i = 0.01
gamma_f = 0.001
""",
}

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_FUNCS = {"sqrt": math.sqrt, "cos": math.cos, "sin": math.sin, "exp": math.exp, "log": math.log}
_CONSTS = {"pi": math.pi}


def evaluate(text: str, symbols: dict[str, float] | None = None) -> float:
    """Evaluate an arithmetic expression such as ``pi/6`` or ``sqrt(3)*0.01``."""
    names = dict(_CONSTS)
    names.update(symbols or {})

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](walk(node.left), walk(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = walk(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Name):
            if node.id not in names:
                raise ConfigError(f"unknown name {node.id!r} in {text!r}")
            value = names[node.id]
            return value() if callable(value) else value
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
            if len(node.args) != 1 or node.keywords:
                raise ConfigError(f"{node.func.id} takes one argument")
            return _FUNCS[node.func.id](walk(node.args[0]))
        raise ConfigError(f"unsupported expression {text!r}")

    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse {text!r}") from exc
    try:
        return float(walk(tree))
    except (ArithmeticError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"cannot evaluate {text!r}: {exc}") from exc


@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    count: int
    scale: str = "linear"

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.logspace(np.log10(self.start), np.log10(self.stop), self.count)
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    params: ModelParams
    sections: dict  # raw merged text values, section -> key -> str
    threads: int = 1

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def number(self, section, key, default=None) -> float:
        raw = self.get(section, key)
        if raw is None:
            if default is None:
                raise ConfigError(f"missing [{section}] {key}")
            return default
        return evaluate(raw, _symbols(self.params))

    def numbers(self, section, key, default=None) -> list[float]:
        raw = self.get(section, key)
        if raw is None:
            return list(default) if default is not None else []
        return [evaluate(part, _symbols(self.params)) for part in raw.split(",") if part.strip()]

    def axis(self, name: str, section: str = "sweep") -> Axis:
        raw = self.get(section, name)
        if raw is None:
            raise ConfigError(f"missing axis [{section}] {name}")
        return parse_axis(name, raw, _symbols(self.params))

    def tolerance(self, key, default):
        return self.number("tolerances", key, default)

    def digest(self) -> str:
        """Hash of the merged configuration; independent of thread count and output path."""
        lines = [f"subcommand={self.subcommand}"]
        for section in sorted(self.sections):
            for key in sorted(self.sections[section]):
                lines.append(f"[{section}]{key}={self.sections[section][key].strip()}")
        return hashlib.sha256("\n".join(lines).encode()).hexdigest()[:16]


def parse_axis(name: str, raw: str, symbols=None) -> Axis:
    parts = [s.strip() for s in raw.split(",")]
    if len(parts) not in (3, 4):
        raise ConfigError(f"axis {name!r} needs 'min, max, count[, linear|log]', got {raw!r}")
    start, stop = evaluate(parts[0], symbols), evaluate(parts[1], symbols)
    try:
        count = int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"axis {name!r}: count must be an integer") from exc
    scale = parts[3] if len(parts) == 4 else "linear"
    if count < 2:
        raise ConfigError(f"axis {name!r}: count must be >= 2")
    if scale not in ("linear", "log"):
        raise ConfigError(f"axis {name!r}: scale must be linear or log")
    if scale == "log" and (start <= 0 or stop <= 0):
        raise ConfigError(f"axis {name!r}: log axis needs positive bounds")
    if name not in PARAM_FIELDS and name not in RATIO_AXES and name != "eps":
        raise ConfigError(f"axis {name!r} is not a model parameter")
    return Axis(name, start, stop, count, scale)


def _symbols(params: ModelParams) -> dict:
    def theta_3c():
        return ep.critical_3el(params)[0]

    def gamma_3c():
        return ep.critical_3el(params)[1]

    def gamma_2c():
        if params.g1 == params.g2:
            return ep.gamma_2c(params)
        roots = ep.critical_gammas(params)
        g3 = gamma_3c()
        others = [g for g in roots if abs(g - g3) > 1e-9 and g > 0]
        if not others:
            raise ConfigError("no second-order EP along gamma for these parameters")
        return others[0]

    return {"theta_3c": theta_3c, "gamma_3c": gamma_3c, "gamma_2c": gamma_2c}


def _read_sections(text: str, origin: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(f"{origin}: {exc}") from exc
    out = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"{origin}: unknown section [{section}]")
        allowed = SECTIONS[section]
        for key, value in parser.items(section):
            if allowed is not None and key not in allowed:
                raise ConfigError(f"{origin}: unknown key {key!r} in [{section}]")
            out.setdefault(section, {})[key] = value
    return out


def _merge(base: dict, extra: dict) -> dict:
    merged = {s: dict(v) for s, v in base.items()}
    for section, values in extra.items():
        merged.setdefault(section, {}).update(values)
    return merged


def resolve_params(raw: dict) -> ModelParams:
    """Build ``ModelParams`` from ``[params]``; ``theta`` and ``gamma`` may name critical values."""
    raw = dict(raw)
    values = {}
    for short, targets in (("g", ("g1", "g2", "g3")), ("j", ("j1", "j2", "j3"))):
        if short in raw:
            v = evaluate(raw.pop(short))
            for t in targets:
                values[t] = v
    deferred = {}
    for key, text in raw.items():
        try:
            values[key] = evaluate(text)
        except ConfigError:
            deferred[key] = text
    try:
        params = ModelParams(**values)
        # theta first: gamma_2c depends on it
        for key in ("theta", "gamma"):
            if key in deferred:
                params = replace(params, **{key: evaluate(deferred.pop(key), _symbols(params))})
        for key, text in deferred.items():
            params = replace(params, **{key: evaluate(text, _symbols(params))})
    except ConfigError:
        raise
    except (ValueError, ArithmeticError) as exc:
        raise ConfigError(f"invalid parameters: {exc}") from exc
    return params


def load_config(
    subcommand: str,
    config_text: str | None = None,
    preset: str | None = None,
    overrides: list[str] | None = None,
    threads: int = 1,
    origin: str = "<config>",
) -> RunConfig:
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    sections: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(sorted(PRESETS))}")
        sections = _read_sections(PRESETS[preset], f"preset:{preset}")
    if config_text is not None:
        sections = _merge(sections, _read_sections(config_text, origin))
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like [section.]key=value")
        key, value = item.split("=", 1)
        section, _, key = key.strip().rpartition(".")
        section = section or "params"
        sections = _merge(sections, _read_sections(f"[{section}]\n{key} = {value}\n", "--set"))
    params = resolve_params(sections.get("params", {}))
    return RunConfig(subcommand=subcommand, params=params, sections=sections, threads=threads)
