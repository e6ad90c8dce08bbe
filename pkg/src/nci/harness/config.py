"""Sweep configuration files.

A config is a line-oriented ``key = value`` file with bracketed sections::

    [sweep]
    experiment = haldane_chern
    seeds = 0, 1, 2          # or a range, 0-19
    master_seed = 2024
    output = runs/haldane.jsonl
    kernel = minimal_image   # or roots_of_unity
    coordinates = positions  # or cells
    window = 2.0             # collar width on open patches
    share_disorder = false   # same realization at every grid point

    [params]
    t2 = 0.6

    [grid]
    E_F = -0.5, 0.5, 3       # min, max, count

Grid axes are expanded with ``numpy.linspace`` and combined in the order
they appear, the last axis varying fastest.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
import itertools
import re
from typing import Optional

import numpy as np

from ..exceptions import ParseError, SemanticError
from .experiments import EXPERIMENTS, resolve_params

__all__ = ["GridAxis", "SweepConfig", "parse_config", "validate_text", "validate_config"]

_SECTIONS = ("sweep", "params", "grid")
_SWEEP_KEYS = ("experiment", "seeds", "master_seed", "output", "kernel", "coordinates",
               "window", "share_disorder")
_KERNELS = ("minimal_image", "roots_of_unity")
_COORDS = ("positions", "cells")


@dataclass(frozen=True)
class GridAxis:
    name: str
    min: float
    max: float
    count: int

    def values(self):
        return np.linspace(self.min, self.max, self.count)


@dataclass(frozen=True)
class SweepConfig:
    experiment: str
    seeds: tuple
    output: str
    params: dict = field(default_factory=dict)
    grid: tuple = ()
    master_seed: int = 0
    kernel: str = "minimal_image"
    coordinates: str = "positions"
    window: Optional[float] = None
    share_disorder: bool = False

    @property
    def options(self) -> dict:
        return {"kernel": self.kernel, "coordinates": self.coordinates, "window": self.window}

    def grid_points(self):
        """Resolved parameter dicts, one per grid index."""
        schema = EXPERIMENTS[self.experiment]
        axes = [ax.values() for ax in self.grid]
        points = []
        for combo in itertools.product(*axes):
            p = dict(self.params)
            for ax, v in zip(self.grid, combo):
                p[ax.name] = schema[ax.name].kind(round(v) if schema[ax.name].kind is int else v)
            points.append(resolve_params(self.experiment, p))
        return points


def _locate(text):
    """Line and value column of every ``key`` in every section."""
    where, section = {}, None
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            continue
        m = re.match(r"\s*([^=:#;\s][^=:]*?)\s*[=:]\s*", line)
        if m and section is not None:
            where[(section, m.group(1))] = (lineno, m.end() + 1)
    return where


def parse_config(text: str) -> configparser.ConfigParser:
    """Syntax pass; raises :class:`ParseError` with line and column."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None,
                                   default_section="__defaults__")
    cp.optionxform = str
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.strip()
        if body and line[0].isspace() and body[0] not in "#;":
            # continuation lines would silently extend the previous value
            raise ParseError("unexpected indentation", lineno, len(line) - len(line.lstrip()) + 1)
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError("key outside of any [section]", exc.lineno, 1) from None
    except configparser.DuplicateSectionError as exc:
        raise ParseError(f"duplicate section [{exc.section}]", exc.lineno, 1) from None
    except configparser.DuplicateOptionError as exc:
        raise ParseError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno, 1) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0]
        lines = text.splitlines()
        line = lines[lineno - 1] if 0 < lineno <= len(lines) else ""
        col = len(line) - len(line.lstrip()) + 1
        raise ParseError(f"expected 'key = value', got {line.strip()!r}", lineno, col) from None
    return cp


def _seeds(raw):
    out = []
    for tok in re.split(r"[,\s]+", raw.strip()):
        if not tok:
            continue
        m = re.fullmatch(r"(\d+)-(\d+)", tok)
        if m:
            lo, hi = int(m.group(1)), int(m.group(2))
            if hi < lo:
                raise ValueError(f"empty seed range {tok}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(tok))
    return tuple(out)


def _coerce(kind, raw):
    if kind is int:
        v = float(raw)
        if v != int(v):
            raise ValueError(f"{raw!r} is not an integer")
        return int(v)
    return kind(raw)


def validate_text(text: str) -> SweepConfig:
    """Parse and check a config; every semantic problem is reported at once.

    Raises
    ------
    ParseError
        On a syntax error, with line and column.
    SemanticError
        Listing all semantic problems.
    """
    cp = parse_config(text)
    where = _locate(text)
    errors = []

    def err(section, key, message):
        loc = where.get((section, key))
        prefix = f"line {loc[0]}, column {loc[1]}: " if loc else ""
        errors.append(f"{prefix}[{section}] {key}: {message}")

    for name in cp.sections():
        if name not in _SECTIONS:
            errors.append(f"unknown section [{name}] (valid: {', '.join(_SECTIONS)})")
    if not cp.has_section("sweep"):
        raise SemanticError(errors + ["missing [sweep] section"])
    sweep = cp["sweep"]
    for key in sweep:
        if key not in _SWEEP_KEYS:
            err("sweep", key, f"unknown key (valid: {', '.join(_SWEEP_KEYS)})")

    experiment = sweep.get("experiment", "").strip()
    schema = EXPERIMENTS.get(experiment)
    if schema is None:
        err("sweep", "experiment",
            f"unknown experiment {experiment!r}; valid names: {', '.join(EXPERIMENTS)}")

    seeds = ()
    if "seeds" not in sweep:
        errors.append("[sweep] seeds: missing")
    else:
        try:
            seeds = _seeds(sweep["seeds"])
            if not seeds:
                err("sweep", "seeds", "seed list is empty")
            elif any(s < 0 or s >= 2**64 for s in seeds):
                err("sweep", "seeds", "seeds must be 64-bit unsigned integers")
            elif len(set(seeds)) != len(seeds):
                err("sweep", "seeds", "seeds must be distinct")
        except ValueError as exc:
            err("sweep", "seeds", str(exc))

    master_seed = 0
    try:
        master_seed = int(sweep.get("master_seed", "0"))
        if not 0 <= master_seed < 2**64:
            raise ValueError
    except ValueError:
        err("sweep", "master_seed", "must be a 64-bit unsigned integer")

    output = sweep.get("output", "").strip()
    if not output:
        errors.append("[sweep] output: missing")

    kernel = sweep.get("kernel", "minimal_image").strip()
    if kernel not in _KERNELS:
        err("sweep", "kernel", f"must be one of {', '.join(_KERNELS)}")
    coordinates = sweep.get("coordinates", "positions").strip()
    if coordinates not in _COORDS:
        err("sweep", "coordinates", f"must be one of {', '.join(_COORDS)}")

    window = None
    if "window" in sweep:
        try:
            window = float(sweep["window"])
            if window < 0:
                raise ValueError
        except ValueError:
            err("sweep", "window", "must be a nonnegative number")

    share = False
    try:
        share = sweep.getboolean("share_disorder", fallback=False)
    except ValueError:
        err("sweep", "share_disorder", "must be true or false")

    params = {}
    if cp.has_section("params"):
        for key, raw in cp["params"].items():
            if schema is None:
                continue
            if key not in schema:
                err("params", key, f"not a parameter of {experiment} (valid: {', '.join(schema)})")
                continue
            spec = schema[key]
            try:
                v = _coerce(spec.kind, raw.strip())
            except ValueError:
                err("params", key, f"expected {spec.kind.__name__}, got {raw.strip()!r}")
                continue
            if spec.choices and v not in spec.choices:
                err("params", key, f"must be one of {spec.choices}")
                continue
            params[key] = v

    grid = []
    if cp.has_section("grid"):
        for key, raw in cp["grid"].items():
            if schema is not None and key not in schema:
                err("grid", key, f"not a parameter of {experiment} (valid: {', '.join(schema)})")
                continue
            if schema is not None and schema[key].kind is str:
                err("grid", key, "string parameters cannot be swept")
                continue
            if key in params:
                err("grid", key, "also set in [params]")
                continue
            parts = [s.strip() for s in raw.split(",")]
            if len(parts) != 3:
                err("grid", key, "expected 'min, max, count'")
                continue
            try:
                lo, hi = float(parts[0]), float(parts[1])
                count = _coerce(int, parts[2])
            except ValueError:
                err("grid", key, "expected 'min, max, count' with numeric entries")
                continue
            if count < 1:
                err("grid", key, f"grid count must be >= 1, got {count}")
                continue
            if schema is not None and schema[key].kind is int:
                vals = np.linspace(lo, hi, count)
                if np.any(np.abs(vals - np.round(vals)) > 1e-9):
                    err("grid", key, "integer parameter grid does not land on integers")
                    continue
            grid.append(GridAxis(key, lo, hi, count))

    if schema is not None and "W" in schema and schema["W"].default is None:
        swept = {ax.name for ax in grid} | set(params)
        if "W" in swept and swept & {"W1", "W2"}:
            errors.append("W sets W1 = W/2 and W2 = W; do not combine it with W1 or W2")

    if errors:
        raise SemanticError(errors)
    return SweepConfig(experiment, seeds, output, params, tuple(grid), master_seed,
                       kernel, coordinates, window, share)


def validate_config(path) -> SweepConfig:
    """Read and validate a config file."""
    with open(path) as fh:
        return validate_text(fh.read())
