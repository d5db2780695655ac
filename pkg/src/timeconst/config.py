"""Experiment configuration.

Configs are INI files with one section per experiment plus an optional
``[run]`` section (seed, workers).  Every key has a default below; the
resolved values, defaults included, are written into the run manifest.

Value syntax: scalars as usual, lists comma separated, integer vectors with
spaces inside a list item (``directions = 1 0, 1 1``).  ``beta = auto``
requests calibration.
"""

from __future__ import annotations

import configparser
import logging
import re
from pathlib import Path

log = logging.getLogger(__name__)


class UsageError(ValueError):
    pass


# kind tags: int, float, bool, str, ints (list), floats (list), vec, vecs, beta
SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "classify": {
        "d": ("int", 2), "p": ("float", 0.8), "N_list": ("ints", [4, 6, 8, 12]),
        "beta": ("beta", "auto"), "samples": ("int", 2000),
        "calibration_samples": ("int", 1000),
    },
    "bypass": {
        "d": ("int", 2), "N": ("int", 4), "p": ("float", 0.8), "q": ("float", 0.95),
        "beta": ("beta", "auto"), "grid": ("int", 13), "samples": ("int", 300),
        "max_attempts": ("int", 1000), "calibration_samples": ("int", 1000),
        "endpoint_offset": ("int", 4), "coupling": ("str", "two-source"),
    },
    "estimate": {
        "p": ("float", 0.7), "x": ("vec", [1, 0]), "n_list": ("ints", [32, 64, 128]),
        "samples": ("int", 200),
    },
    "modulus": {
        "q": ("float", 0.95), "p_grid": ("floats", [0.94, 0.9, 0.85, 0.8, 0.75, 0.7]),
        "directions": ("vecs", [[1, 0], [1, 1]]), "n": ("int", 64), "samples": ("int", 400),
        "svg": ("bool", True),
    },
    "shape": {
        "p": ("float", 0.8), "q": ("float", 0.95), "directions": ("vecs", []),
        "n": ("int", 32), "samples": ("int", 100),
    },
    "tails": {
        "p": ("float", 0.7), "beta": ("float", 1.5), "l1_list": ("ints", [16, 32, 64]),
        "samples": ("int", 1000), "d": ("int", 2),
    },
    "coupling": {
        "p": ("float", 0.85), "q": ("float", 0.95), "x": ("vec", [64, 0]),
        "delta": ("float", 0.1), "samples": ("int", 2000),
    },
    "verify-combinatorics": {
        "stirling_r": ("ints", [3, 5, 10]), "stirling_N": ("ints", [3, 10, 30]),
        "stirling_points": ("int", 12), "animal_d2_max": ("int", 7), "animal_d3_max": ("int", 4),
        "corridor_K": ("ints", [2, 4, 8]), "corridor_paths": ("int", 500),
        "corridor_length": ("int", 200), "audit_fields": ("int", 1000),
        "audit_radius": ("int", 7), "audit_p_bad": ("float", 0.25),
    },
}
RUN_SCHEMA = {"seed": ("int", 0), "workers": ("int", 1)}
EXPERIMENTS = tuple(SCHEMA)


def _parse(kind: str, raw: str):
    raw = raw.strip()
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind == "str":
        return raw
    if kind == "ints":
        return [int(t) for t in raw.split(",") if t.strip()]
    if kind == "floats":
        return [float(t) for t in raw.split(",") if t.strip()]
    if kind == "vec":
        return [int(t) for t in raw.replace(",", " ").split()]
    if kind == "vecs":
        return [[int(t) for t in item.split()] for item in raw.split(",") if item.strip()]
    if kind == "beta":
        return "auto" if raw.lower() == "auto" else float(raw)
    raise AssertionError(kind)


def _line_of(text: str, section: str, key: str) -> int | None:
    cur = None
    for n, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            cur = m.group(1).strip()
        elif cur == section and re.match(rf"\s*{re.escape(key)}\s*[=:]", line, re.IGNORECASE):
            return n
    return None


def resolve(experiment: str, path: str | Path | None = None, overrides: dict | None = None) -> dict:
    """Defaults merged with the config file and command-line overrides."""
    if experiment not in SCHEMA:
        raise UsageError(f"unknown experiment {experiment!r}")
    cfg = {k: v for k, (_, v) in SCHEMA[experiment].items()}
    run = {k: v for k, (_, v) in RUN_SCHEMA.items()}
    if path is not None:
        text = Path(path).read_text()
        cp = configparser.ConfigParser()
        cp.optionxform = str
        try:
            cp.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise UsageError(f"{path}: {exc}") from exc
        for section, target, schema in (("run", run, RUN_SCHEMA), (experiment, cfg, SCHEMA[experiment])):
            if not cp.has_section(section):
                continue
            for key, raw in cp.items(section):
                where = f"{path}:{_line_of(text, section, key) or '?'} [{section}] {key}"
                if key not in schema:
                    raise UsageError(f"{where}: unknown key (expected one of {', '.join(schema)})")
                try:
                    target[key] = _parse(schema[key][0], raw)
                except ValueError as exc:
                    raise UsageError(f"{where}: {exc}") from exc
        for section in cp.sections():
            if section not in ("run", experiment) and section not in SCHEMA:
                raise UsageError(f"{path}: unknown section [{section}]")
    for k, v in (overrides or {}).items():
        if v is not None:
            run[k] = v
    validate(experiment, cfg)
    return dict(experiment=experiment, params=cfg, seed=int(run["seed"]), workers=int(run["workers"]))


def validate(experiment: str, cfg: dict) -> None:
    d = cfg.get("d")
    if d is not None and d < 2:
        raise UsageError(f"[{experiment}] d must be >= 2, got {d}")
    probs = [cfg[k] for k in ("p", "q") if k in cfg] + list(cfg.get("p_grid", []))
    for v in probs:
        if not 0 <= v <= 1:
            raise UsageError(f"[{experiment}] probability {v} outside [0, 1]")
        if v <= 0.5 and (d or 2) == 2:
            log.warning("p=%s is not supercritical in d=2 (p_c = 1/2)", v)
    if "p" in cfg and "q" in cfg and cfg["p"] > cfg["q"]:
        raise UsageError(f"[{experiment}] need p <= q")
    if "q" in cfg and any(p > cfg["q"] for p in cfg.get("p_grid", [])):
        raise UsageError(f"[{experiment}] every p in p_grid must be <= q")
    for k in ("samples", "n", "N", "grid"):
        if k in cfg and cfg[k] < 1:
            raise UsageError(f"[{experiment}] {k} must be >= 1")
    if experiment == "bypass" and cfg["grid"] % 2 == 0:
        raise UsageError("[bypass] grid must be odd")
