"""Run configuration: INI-style sections parsed with configparser.

Every key is validated against a fixed schema; unknown sections or keys
are errors that name the key and its line.
"""
from __future__ import annotations

import configparser
import copy
import math
import os
import re
from dataclasses import dataclass, field

from . import fiber as fb
from . import warp as wp
from .errors import ConfigurationError
from .solver import SolveConfig

SEED_ENV = "GRWLAB_SEED"
SUITES = ("connection", "laplacian", "integral", "el", "lk", "maxprinciple")


def _int(s):
    return int(s)


def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("not finite")
    return v


def _floats(s):
    return tuple(_float(x) for x in s.split(",") if x.strip())


def _ints(s):
    return tuple(int(x) for x in s.split(",") if x.strip())


def _str(s):
    return s.strip()


def _formats(s):
    out = tuple(x.strip().lower() for x in s.split(",") if x.strip())
    bad = [x for x in out if x not in ("json", "csv", "png")]
    if bad:
        raise ValueError(f"unknown format(s) {bad}")
    return out


# (parser, numeric) per key
SCHEMA = {
    "fiber": {"type": (_str, False), "resolution": (_ints, False), "lengths": (_floats, False),
              "length": (_float, True), "subdivisions": (_int, True)},
    "warp": {"type": (_str, False), "params": (_floats, False), "domain": (_floats, False)},
    "solver": {"method": (_str, False), "tol": (_float, True), "max_iter": (_int, True),
               "margin": (_float, True), "backtrack": (_float, True),
               "max_backtracks": (_int, True), "levenberg": (_float, True),
               "levenberg_up": (_float, True), "levenberg_down": (_float, True),
               "krylov_rtol": (_float, True), "krylov_restart": (_int, True),
               "krylov_maxiter": (_int, True), "descent_dt": (_float, True),
               "descent_dt_max": (_float, True), "form": (_str, False),
               "constancy_rtol": (_float, True)},
    "init": {"kind": (_str, False), "amplitude": (_float, True), "seed": (_int, True),
             "base": (_float, True), "values_file": (_str, False)},
    "verify": {"suite": (_str, False), "levels": (_int, True), "threshold": (_float, True),
               "j": (_int, True), "directions": (_int, True), "step": (_float, True),
               "amplitude": (_float, True), "base": (_float, True)},
    "output": {"directory": (_str, False), "formats": (_formats, False)},
}

DEFAULTS = {
    "fiber": {"type": "torus"},
    "warp": {"type": "exponential"},
    "solver": {},
    "init": {"kind": "random-bump", "amplitude": 0.3, "seed": 0, "base": 0.0},
    "verify": {"levels": 3, "j": 1, "directions": 8, "step": 1e-5},
    "output": {"directory": "grwlab_out", "formats": ("json", "csv", "png")},
}


def _line_index(text: str) -> dict:
    """Map (section, key) and section headers to 1-based line numbers."""
    idx, section = {}, None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"^\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            idx.setdefault((section, None), no)
        elif s and not s.startswith(("#", ";")) and section is not None:
            key = re.split(r"[=:]", s, maxsplit=1)[0].strip().lower()
            idx.setdefault((section, key), no)
    return idx


@dataclass
class RunConfig:
    """Parsed configuration; ``raw`` keeps the text values for echo and sweeps."""

    fiber: dict
    warp: dict
    solver: SolveConfig
    init: dict
    verify: dict
    output: dict
    raw: dict = field(default_factory=dict)
    source: str | None = None
    lines: dict = field(default_factory=dict, repr=False)

    # -- builders ----------------------------------------------------------

    def build_mesh(self) -> fb.FiberMesh:
        kind = self.fiber["type"]
        try:
            if kind == "torus":
                res = self.fiber.get("resolution", (32, 32))
                if len(res) == 1:
                    res = (res[0], res[0])
                return fb.build_torus(tuple(res), self.fiber.get("lengths", (2 * math.pi,) * 2))
            if kind == "sphere":
                return fb.build_sphere(self.fiber.get("subdivisions", 3))
            if kind == "circle":
                res = self.fiber.get("resolution", (64,))
                return fb.build_circle(res[0], self.fiber.get("length", 2 * math.pi))
        except ConfigurationError as exc:
            raise ConfigurationError(f"[fiber] {exc}") from exc
        raise self.error("fiber", "type", f"unknown fiber {kind!r}; expected torus, sphere or circle")

    def build_warp(self) -> wp.WarpSpec:
        try:
            return wp.build_warp(self.warp["type"], self.warp.get("params", ()),
                                 self.warp.get("domain"))
        except ConfigurationError as exc:
            raise self.error("warp", "type", str(exc)) from exc

    def error(self, section, key, message) -> ConfigurationError:
        line = self.lines.get((section, key))
        where = f" (line {line})" if line else ""
        return ConfigurationError(f"{section}.{key}: {message}{where}")

    # -- overrides -----------------------------------------------------------

    def with_value(self, dotted: str, value: str) -> "RunConfig":
        """New config with one key replaced; the key must be numeric."""
        section, key = split_key(dotted)
        if not SCHEMA[section][key][1]:
            raise ConfigurationError(f"{dotted} is not a numeric key")
        raw = copy.deepcopy(self.raw)
        raw.setdefault(section, {})[key] = str(value)
        return from_mapping(raw, self.source, self.lines, apply_env=False)

    def to_dict(self) -> dict:
        return {
            "fiber": dict(self.fiber),
            "warp": dict(self.warp),
            "solver": self.solver.to_dict(),
            "init": dict(self.init),
            "verify": dict(self.verify),
            "output": {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.output.items()},
            "source": self.source,
        }


def split_key(dotted: str):
    if "." not in dotted:
        raise ConfigurationError(f"axis must look like section.key, got {dotted!r}")
    section, key = dotted.split(".", 1)
    if section not in SCHEMA or key not in SCHEMA[section]:
        raise ConfigurationError(f"unknown config key {dotted!r}")
    return section, key


def from_mapping(raw: dict, source=None, lines=None, apply_env: bool = True) -> RunConfig:
    lines = lines or {}
    parsed = {s: dict(DEFAULTS[s]) for s in SCHEMA}
    for section, items in raw.items():
        if section not in SCHEMA:
            ln = lines.get((section, None))
            raise ConfigurationError(f"unknown section [{section}]" + (f" (line {ln})" if ln else ""))
        for key, text in items.items():
            ln = lines.get((section, key))
            where = f" (line {ln})" if ln else ""
            if key not in SCHEMA[section]:
                raise ConfigurationError(f"unknown key {section}.{key}{where}")
            try:
                parsed[section][key] = SCHEMA[section][key][0](text)
            except ValueError as exc:
                raise ConfigurationError(f"{section}.{key}: cannot parse {text!r}: {exc}{where}") from exc
    env = os.environ.get(SEED_ENV) if apply_env else None
    if env is not None:
        try:
            parsed["init"]["seed"] = int(env)
        except ValueError as exc:
            raise ConfigurationError(f"{SEED_ENV} must be an integer, got {env!r}") from exc
    init = parsed["init"]
    solver_kw = dict(parsed["solver"])
    solver_kw["seed"] = init["seed"]
    solver_kw["init"] = init["kind"]
    try:
        scfg = SolveConfig(**solver_kw)
    except ConfigurationError as exc:
        raise ConfigurationError(f"[solver]/[init] {exc}") from exc
    suite = parsed["verify"].get("suite")
    if suite is not None and suite not in SUITES:
        ln = lines.get(("verify", "suite"))
        raise ConfigurationError(f"verify.suite: unknown suite {suite!r}"
                                 + (f" (line {ln})" if ln else ""))
    cfg = RunConfig(parsed["fiber"], parsed["warp"], scfg, init, parsed["verify"],
                    parsed["output"], raw=copy.deepcopy(raw), source=source, lines=lines)
    if cfg.fiber["type"] not in fb.BACKENDS:
        raise cfg.error("fiber", "type",
                        f"unknown fiber {cfg.fiber['type']!r}; expected one of {fb.BACKENDS}")
    if cfg.warp["type"] not in wp.KINDS:
        raise cfg.error("warp", "type",
                        f"unknown warp {cfg.warp['type']!r}; expected one of {wp.KINDS}")
    return cfg


def parse_text(text: str, source=None, apply_env: bool = True) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#", ";"),
                                   interpolation=None, default_section="__none__")
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ConfigurationError(f"config syntax error: {exc}") from exc
    raw = {s: dict(cp.items(s)) for s in cp.sections()}
    return from_mapping(raw, source, _line_index(text), apply_env)


def load(path, apply_env: bool = True) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_text(text, str(path), apply_env)
