"""Scenario files: schema, overrides and validation.

A scenario is a TOML document with a top-level ``kind`` and one table per
block.  Every block and key is declared below; anything else is rejected.
Validation builds the domain objects a run would use, so ``validate`` accepts
exactly what ``run`` accepts.
"""

from __future__ import annotations

import copy
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SEED_ENV = "QUASILIGHT_SEED"
KINDS = ("basis", "free", "linear1d", "paraxial", "parametric", "spectrum")


class ScenarioError(ValueError):
    """Schema or range violations; ``problems`` lists every one found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class Key:
    kind: str  # "float", "int", "complex", "str", "bool"
    default: Any = None
    required: bool = False
    check: Callable[[Any], bool] | None = None
    rule: str = ""


def _req(kind, check=None, rule=""):
    return Key(kind, None, True, check, rule)


def _opt(kind, default=None, check=None, rule=""):
    return Key(kind, default, False, check, rule)


POS = (lambda v: v > 0, "must be > 0")
NONNEG = (lambda v: v >= 0, "must be >= 0")
ATLEAST1 = (lambda v: v >= 1, "must be >= 1")
UNIT = (lambda v: 0 <= v <= 1, "must lie in [0, 1]")

GRID_1D = {
    "L": _req("float", *POS),
    "a": _req("float", *POS),
    "m": _opt("float", 0.0),
    "c": _opt("float", 1.0, *POS),
}
GRID_T = {
    "Nx": _req("int", *ATLEAST1),
    "Ny": _req("int", *ATLEAST1),
    "dx": _req("float", *POS),
    "dy": _req("float", *POS),
    "R": _opt("float", None, *POS),
    "m": _req("float", *POS),
    "a": _opt("float", 1.0, *POS),
    "c": _opt("float", 1.0, *POS),
}
MEDIUM = {
    "d2": _req("float", *NONNEG),
    "omega0": _req("float"),
    "gamma": _req("float", *POS),
    "N1": _req("float", *NONNEG),
    "N2": _req("float", *NONNEG),
    "eps0": _opt("float", 1.0, *POS),
    "volume": _opt("float", 1.0, *POS),
}
ENSEMBLE = {
    "M": _opt("int", 1000, *ATLEAST1),
    "seed": _opt("int", 0, *NONNEG),
    "checkpoints": _opt("int", 10, *ATLEAST1),
}

SCHEMA: dict[str, dict[str, tuple[bool, dict[str, Key]]]] = {
    "basis": {
        "grid": (True, GRID_1D),
        "basis": (False, {"oversample": _opt("int", 4, *ATLEAST1), "sizes": _opt("ints", [8, 64, 256])}),
    },
    "free": {
        "grid": (True, GRID_1D),
        "packet": (True, {
            "centre": _opt("float", 0.0),
            "width": _req("float", *POS),
            "k0": _opt("float", None),
            "t": _req("float", *NONNEG),
            "steps": _opt("int", 100, *ATLEAST1),
        }),
    },
    "linear1d": {
        "grid": (True, GRID_1D),
        "medium": (True, MEDIUM),
        "propagation": (True, {
            "z": _req("float", *NONNEG),
            "dz": _opt("float", None, *POS),
            "alpha": _opt("complex", 0j),
            "cell": _opt("int", 0, *NONNEG),
        }),
        "ensemble": (False, ENSEMBLE),
    },
    "paraxial": {
        "grid": (True, GRID_T),
        "propagation": (True, {
            "dz": _req("float", *POS),
            "steps": _req("int", *ATLEAST1),
            "w0": _req("float", *POS),
            "amplitude": _opt("complex", 1 + 0j),
            "snapshots": _opt("int", 8, *ATLEAST1),
        }),
        "medium": (False, MEDIUM),
        "ensemble": (False, {"seed": _opt("int", 0, *NONNEG)}),
    },
    "parametric": {
        "coupling": (True, {
            "g": _req("float", *NONNEG),
            "phi": _opt("float", 0.0),
            "Delta": _opt("float", 0.0),
            "pump": _opt("complex", 1 + 0j),
            "z": _req("float", *POS),
            "steps": _req("int", *ATLEAST1),
        }),
        "pair": (False, {
            "a1": _opt("complex", 1 + 0j),
            "a2": _opt("complex", 0j),
            "spread": _opt("float", 0.0, *NONNEG),
        }),
        "ensemble": (False, {"M": _opt("int", 1, *ATLEAST1), "seed": _opt("int", 0, *NONNEG)}),
    },
    "spectrum": {
        "grid": (True, GRID_1D),
        "medium": (True, MEDIUM),
        "detection": (True, {
            "q": _req("float", *UNIT),
            "Omega_max": _opt("float", None, *POS),
            "Omega_points": _opt("int", None, lambda v: v >= 2, "must be >= 2"),
        }),
        "series": (True, {
            "dt": _req("float", *POS),
            "T": _req("int", lambda v: v >= 16, "must be >= 16"),
            "nperseg": _opt("int", None, lambda v: v >= 8, "must be >= 8"),
            "ordering": _opt("str", "symmetric", lambda v: v in ("symmetric", "normal"), "must be 'symmetric' or 'normal'"),
            "idler_scale": _opt("float", 0.5, *NONNEG),
        }),
        "coupling": (False, {
            "g": _req("float", *NONNEG),
            "phi": _opt("float", 0.0),
            "z": _req("float", *POS),
        }),
        "ensemble": (False, {"M": _opt("int", 64, *ATLEAST1), "seed": _opt("int", 0, *NONNEG)}),
    },
}


@dataclass
class Scenario:
    kind: str
    blocks: dict[str, dict[str, Any]]
    source: str = ""
    raw: dict = field(default_factory=dict)

    def get(self, block: str, key: str):
        return self.blocks.get(block, {}).get(key)

    def has(self, block: str) -> bool:
        return block in self.blocks

    @property
    def seed(self) -> int | None:
        return self.get("ensemble", "seed")

    def echo(self) -> dict:
        """JSON-friendly copy (complex values as [re, im])."""
        def conv(v):
            if isinstance(v, complex):
                return [v.real, v.imag]
            return v
        out = {"kind": self.kind}
        for b, vals in self.blocks.items():
            out[b] = {k: conv(v) for k, v in vals.items()}
        return out


def _coerce(name: str, spec: Key, value, problems: list):
    k = spec.kind
    bad = f"{name}: expected {k}, got {value!r}"
    if k == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            problems.append(bad)
            return None
        value = float(value)
        if not math.isfinite(value):
            problems.append(f"{name}: must be finite")
            return None
    elif k == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            problems.append(bad)
            return None
    elif k == "ints":
        if not (isinstance(value, list) and value and all(isinstance(v, int) and not isinstance(v, bool) for v in value)):
            problems.append(bad)
            return None
    elif k == "complex":
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = complex(float(value), 0.0)
        elif (isinstance(value, list) and len(value) == 2
              and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
            value = complex(float(value[0]), float(value[1]))
        else:
            problems.append(f"{name}: expected a number or [re, im], got {value!r}")
            return None
        if not (math.isfinite(value.real) and math.isfinite(value.imag)):
            problems.append(f"{name}: must be finite")
            return None
    elif k == "str":
        if not isinstance(value, str):
            problems.append(bad)
            return None
    if spec.check is not None and not spec.check(value):
        problems.append(f"{name} = {value!r} {spec.rule}")
        return None
    return value


def parse_override(text: str):
    """``key=value`` or ``block.key=value``; the value uses TOML syntax."""
    if "=" not in text:
        raise ScenarioError([f"override {text!r} is not key=value"])
    key, value = text.split("=", 1)
    key = key.strip()
    try:
        parsed = tomllib.loads(f"v = {value.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        parsed = value.strip()
    return key, parsed


def apply_overrides(raw: dict, overrides) -> dict:
    raw = copy.deepcopy(raw)
    kind = raw.get("kind")
    schema = SCHEMA.get(kind, {})
    problems = []
    for text in overrides:
        try:
            key, value = parse_override(text)
        except ScenarioError as err:
            problems.extend(err.problems)
            continue
        if "." in key:
            block, name = key.split(".", 1)
        else:
            owners = [b for b, (_, keys) in schema.items() if key in keys]
            if len(owners) != 1:
                why = "matches no key" if not owners else f"is ambiguous ({', '.join(owners)})"
                problems.append(f"override {key!r} {why} for kind {kind!r}")
                continue
            block, name = owners[0], key
        raw.setdefault(block, {})
        if not isinstance(raw[block], dict):
            problems.append(f"override {key!r}: {block!r} is not a table")
            continue
        raw[block][name] = value
    if problems:
        raise ScenarioError(problems)
    return raw


def parse(raw: dict, source: str = "") -> Scenario:
    """Check structure, types and ranges; raise :class:`ScenarioError` listing all problems."""
    problems = []
    kind = raw.get("kind")
    if kind not in KINDS:
        raise ScenarioError([f"kind must be one of {', '.join(KINDS)}, got {kind!r}"])
    schema = SCHEMA[kind]
    unknown_blocks = sorted(set(raw) - set(schema) - {"kind"})
    if unknown_blocks:
        problems.append(f"unknown blocks for kind {kind!r}: {', '.join(unknown_blocks)}")
    blocks = {}
    for bname, (required, keys) in schema.items():
        if bname not in raw:
            if required:
                problems.append(f"missing [{bname}] block for kind {kind!r}")
            continue
        given = raw[bname]
        if not isinstance(given, dict):
            problems.append(f"[{bname}] must be a table")
            continue
        unknown = sorted(set(given) - set(keys))
        if unknown:
            problems.append(f"unknown keys in [{bname}]: {', '.join(unknown)}")
        vals = {}
        for kname, spec in keys.items():
            full = f"{bname}.{kname}"
            if kname in given:
                vals[kname] = _coerce(full, spec, given[kname], problems)
            elif spec.required:
                problems.append(f"missing key {full}")
            else:
                vals[kname] = spec.default
        blocks[bname] = vals
    if problems:
        raise ScenarioError(problems)
    sc = Scenario(kind, blocks, source, raw)
    _check_objects(sc)
    return sc


def _check_objects(sc: Scenario) -> None:
    """Construct the domain objects a run needs; collect their complaints."""
    from . import runner

    problems = []
    try:
        runner.build(sc)
    except ScenarioError as err:
        problems.extend(err.problems)
    except ValueError as err:
        problems.append(str(err))
    if problems:
        raise ScenarioError(problems)


def load(path, overrides=(), env=None) -> Scenario:
    """Read, apply the seed environment variable and overrides, then validate."""
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except OSError as err:
        raise ScenarioError([f"cannot read {path}: {err.strerror}"]) from err
    except tomllib.TOMLDecodeError as err:
        raise ScenarioError([f"{path}: {err}"]) from err
    env = os.environ if env is None else env
    seed = env.get(SEED_ENV)
    if seed is not None and raw.get("kind") in KINDS and "ensemble" in SCHEMA[raw["kind"]]:
        try:
            value = int(seed)
        except ValueError:
            raise ScenarioError([f"{SEED_ENV}={seed!r} is not an integer"]) from None
        raw.setdefault("ensemble", {})["seed"] = value
    raw = apply_overrides(raw, overrides)
    return parse(raw, str(path))
