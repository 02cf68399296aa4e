"""Experiment configuration files (TOML) and the catalog of demo systems.

A config describes one experiment::

    seed = 0
    system = "rn2-saddle"          # optional: start from a catalog system

    [algebra]                      # catalog = "heis3" | file = "alg.toml" | inline fields
    catalog = "rn:2"

    [drift]
    D = [[1.0, 0.0], [0.0, -2.0]]
    z = [0.0, 0.0]

    [controls]
    dirs = [[1.0, 0.0]]
    range_lo = [-1.0]
    range_hi = [1.0]
    dt = 0.25

    [pair]
    K_lo = [-0.5, -0.5]
    ...

Tables given explicitly override the catalog system field by field.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import tomli_w

from . import catalog, entropy, lie, quotient
from .errors import AffineEntropyError, ParseError, ValidationError
from .fields import AffineField
from .systems import AffineSystem, ControlRange, DEFAULT_BLOWUP

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

NUMERICS_DEFAULTS = {
    "step": 1e-3,
    "verify_step": 1e-3,
    "thinning": entropy.DEFAULT_THINNING,
    "blowup_norm": DEFAULT_BLOWUP,
    "tol_zero": 1e-10,
    "fd_step": 1e-6,
    "sign_tol": 1e-4,
    "identity_tol": 1e-6,
    "structure_tol": 1e-8,
    "volume_tol": 1e-4,
    "volume_tau": [0.5, 1.0, 2.0],
    "instances": 100,
}
CONTROLS_DEFAULTS = {"dt": 0.25, "family": "feedback", "levels": entropy.DEFAULT_LEVELS,
                     "cap": entropy.DEFAULT_CAP}
PAIR_DEFAULTS = {"eps": [0.2, 0.1], "tau": [2.0, 3.0, 4.0, 5.0, 6.0], "coords": "log"}
_SECTIONS = {
    "drift": {"D", "z"},
    "controls": {"dirs", "range_lo", "range_hi"} | set(CONTROLS_DEFAULTS),
    "pair": {"K_lo", "K_hi", "Q_lo", "Q_hi", "delta"} | set(PAIR_DEFAULTS),
    "numerics": set(NUMERICS_DEFAULTS),
}
_TOP = {"seed", "system", "name", "algebra"} | set(_SECTIONS)


def _box(d, half=0.5):
    return {"K_lo": [-half] * d, "K_hi": [half] * d, "Q_lo": [-half] * d, "Q_hi": [half] * d}


#: Demo systems, referenced from configs by ``system = "<name>"``.
SYSTEMS = {
    "rn1-scalar": {
        "algebra": {"catalog": "rn:1"},
        "drift": {"D": [[1.0]], "z": [0.0]},
        "controls": {"dirs": [[1.0]], "range_lo": [-1.0], "range_hi": [1.0], "dt": 0.25},
        "pair": {**_box(1), "delta": [0.0005]},
        "numerics": {"step": 0.005},
    },
    "rn2-saddle": {
        "algebra": {"catalog": "rn:2"},
        "drift": {"D": [[1.0, 0.0], [0.0, -2.0]], "z": [0.0, 0.0]},
        "controls": {"dirs": [[1.0, 0.0]], "range_lo": [-1.0], "range_hi": [1.0], "dt": 0.25},
        "pair": {**_box(2), "delta": [0.0005, 0.5]},
        "numerics": {"step": 0.005},
    },
    "heis3-demo": {
        "algebra": {"catalog": "heis3"},
        "drift": {"D": [[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 3.0]], "z": [1.0, 0.0, 0.0]},
        "controls": {"dirs": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
                     "range_lo": [-1.0] * 3, "range_hi": [1.0] * 3, "dt": 0.25, "levels": 3},
        "pair": {**_box(3), "delta": [0.25] * 3, "tau": [0.5, 1.0, 1.5, 2.0]},
    },
    "heis3-split": {
        "algebra": {"catalog": "heis3"},
        "drift": {"D": [[1.0, 0.0, 0.0], [0.0, -2.0, 0.0], [0.0, 0.0, -1.0]], "z": [0.0, 0.0, 0.0]},
        "controls": {"dirs": [[1.0, 0.0, 0.0]], "range_lo": [-1.0], "range_hi": [1.0], "dt": 0.25},
        "pair": {**_box(3), "delta": [0.002, 0.5, 0.5], "tau": [1.0, 2.0, 3.0, 4.0]},
        "numerics": {"step": 0.005},
    },
    "aff2-affine": {
        "algebra": {"catalog": "aff2"},
        "drift": {"D": [[0.0, 0.0], [0.0, 2.0]], "z": [1.0, 0.0]},
        "controls": {"dirs": [[0.0, 1.0]], "range_lo": [-1.0], "range_hi": [1.0], "dt": 0.25},
        "pair": {**_box(2), "delta": [0.25, 0.25], "tau": [0.5, 1.0, 1.5, 2.0]},
    },
    "aff2-drift": {
        "algebra": {"catalog": "aff2"},
        "drift": {"D": [[0.0, 0.0], [0.0, 0.0]], "z": [1.0, 0.0]},
        "controls": {"dirs": [[0.0, 1.0]], "range_lo": [-1.0], "range_hi": [1.0], "dt": 0.25},
        "pair": {**_box(2), "delta": [0.25, 0.25], "tau": [0.5, 1.0, 1.5, 2.0]},
    },
}


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "algebra":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _floats(v):
    return np.asarray(v, dtype=float).tolist()


@dataclass(eq=False)
class ExperimentConfig:
    """Validated experiment: algebra, drift, controls, admissible pair and numerics."""

    name: str
    seed: int
    algebra_spec: dict
    table: lie.LieAlgebraTable
    D: np.ndarray
    z: np.ndarray
    controls: dict
    pair_spec: dict
    numerics: dict = field(default_factory=lambda: dict(NUMERICS_DEFAULTS))

    def to_dict(self):
        return {
            "name": self.name,
            "seed": int(self.seed),
            "algebra": copy.deepcopy(self.algebra_spec),
            "drift": {"D": _floats(self.D), "z": _floats(self.z)},
            "controls": copy.deepcopy(self.controls),
            "pair": copy.deepcopy(self.pair_spec),
            "numerics": copy.deepcopy(self.numerics),
        }

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.to_dict() == other.to_dict()

    @cached_property
    def system(self):
        c = self.controls
        return AffineSystem(self.table, AffineField(self.D, self.z), c["dirs"],
                            ControlRange(c["range_lo"], c["range_hi"]), name=self.name,
                            blowup_norm=self.numerics["blowup_norm"])

    @cached_property
    def split(self):
        return quotient.eigen_split(self.system.D_star, self.numerics["tol_zero"])

    @cached_property
    def chart(self):
        return quotient.QuotientChart.from_split(self.table, self.split)

    @property
    def pair(self):
        p = self.pair_spec
        return entropy.AdmissiblePair(p["K_lo"], p["K_hi"], p["Q_lo"], p["Q_hi"], p["delta"],
                                      tuple(p["eps"]), tuple(p["tau"]))

    @property
    def uses_quotient(self):
        return self.pair_spec.get("coords", "log") == "quotient"

    def rng(self):
        return np.random.default_rng(self.seed)


def dump_config(cfg):
    """Effective config as TOML text; :func:`parse_config` reads it back to an equal config."""
    return tomli_w.dumps(cfg.to_dict())


def _algebra(spec, base_dir, problems):
    if not isinstance(spec, dict):
        problems.append("algebra: expected a table")
        return None, spec
    try:
        if "catalog" in spec:
            return catalog.get_algebra(str(spec["catalog"])), {"catalog": str(spec["catalog"])}
        if "file" in spec:
            path = Path(spec["file"])
            if not path.is_absolute() and base_dir is not None:
                path = base_dir / path
            table = catalog.load_algebra(path)
            return table, catalog.algebra_to_dict(table)
        table = catalog.algebra_from_dict(spec)
        return table, catalog.algebra_to_dict(table)
    except KeyError as exc:
        problems.append(f"algebra: {exc.args[0]}")
    except (AffineEntropyError, OSError) as exc:
        problems.append(f"algebra: {exc}")
    return None, spec


def _check_keys(data, problems):
    for k in data:
        if k not in _TOP:
            problems.append(f"unknown top-level key {k!r}")
    for sec, allowed in _SECTIONS.items():
        for k in data.get(sec, {}) if isinstance(data.get(sec), dict) else ():
            if k not in allowed:
                problems.append(f"{sec}: unknown key {k!r}")


def _vector(sec, data, key, length, problems):
    try:
        arr = np.asarray(data[key], dtype=float)
    except KeyError:
        problems.append(f"{sec}.{key}: missing")
        return None
    except (TypeError, ValueError):
        problems.append(f"{sec}.{key}: not numeric")
        return None
    if length is not None and arr.shape != (length,):
        problems.append(f"{sec}.{key}: expected length {length}, got shape {arr.shape}")
        return None
    return arr


def config_from_dict(data, base_dir=None):
    """Validate a config mapping; every problem found is reported in one :class:`ValidationError`."""
    problems = []
    data = copy.deepcopy(data)
    name = data.get("name", "experiment")
    if "system" in data:
        sysname = data.pop("system")
        if sysname not in SYSTEMS:
            raise ValidationError([f"system: unknown catalog system {sysname!r}; known: {sorted(SYSTEMS)}"])
        data = _merge(SYSTEMS[sysname], data)
        name = data.get("name", sysname)
    _check_keys(data, problems)
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        problems.append("seed: expected a nonnegative integer")
        seed = 0

    table, alg_spec = _algebra(data.get("algebra", {}), base_dir, problems)
    if table is not None:
        rep = lie.validate_algebra(table)
        if not rep.passed:
            problems.extend(f"algebra: {v}" for v in rep.violations)
            table = None
    d = table.dim if table is not None else None

    drift = data.get("drift", {})
    D = z = None
    try:
        D = np.asarray(drift["D"], dtype=float)
        if d is not None and D.shape != (d, d):
            problems.append(f"drift.D: expected shape ({d}, {d}), got {D.shape}")
            D = None
    except KeyError:
        problems.append("drift.D: missing")
    except (TypeError, ValueError):
        problems.append("drift.D: not a numeric matrix")
    if "z" in drift:
        z = _vector("drift", drift, "z", d, problems)
    elif d is not None:
        z = np.zeros(d)
    if D is not None and table is not None:
        ok, res = lie.is_derivation(table, D, tol=1e-10)
        if not ok:
            problems.append(f"drift.D is not a derivation: Leibniz residual {res:.3e}")

    controls = {**CONTROLS_DEFAULTS, **data.get("controls", {})}
    dirs = None
    try:
        dirs = np.atleast_2d(np.asarray(controls["dirs"], dtype=float))
        if d is not None and dirs.shape[-1] != d:
            problems.append(f"controls.dirs: directions must have length {d}")
    except KeyError:
        problems.append("controls.dirs: missing")
    except (TypeError, ValueError):
        problems.append("controls.dirs: not numeric")
    m = dirs.shape[0] if dirs is not None else None
    lo = _vector("controls", controls, "range_lo", m, problems)
    hi = _vector("controls", controls, "range_hi", m, problems)
    if lo is not None and hi is not None and lo.shape == hi.shape:
        bad = [j for j in range(lo.size) if not lo[j] < 0 < hi[j]]
        if bad:
            problems.append("controls: 0 not interior to Ω (need range_lo[j] < 0 < range_hi[j]; "
                            f"violated for channel(s) {[j + 1 for j in bad]})")
    if not (isinstance(controls["dt"], (int, float)) and controls["dt"] > 0):
        problems.append("controls.dt: must be positive")
    if controls["family"] not in ("feedback", "lattice"):
        problems.append("controls.family: expected 'feedback' or 'lattice'")
    for key in ("levels", "cap"):
        if not (isinstance(controls[key], int) and controls[key] >= 1):
            problems.append(f"controls.{key}: expected a positive integer")

    numerics = {**NUMERICS_DEFAULTS, **data.get("numerics", {})}
    for key, val in numerics.items():
        if key == "volume_tau":
            if not all(isinstance(t, (int, float)) and 0 <= t <= 5 for t in val):
                problems.append("numerics.volume_tau: values must lie in [0, 5]")
        elif key in ("thinning", "instances"):
            if not (isinstance(val, int) and val >= 1):
                problems.append(f"numerics.{key}: expected a positive integer")
        elif not (isinstance(val, (int, float)) and val > 0):
            problems.append(f"numerics.{key}: must be positive")
    step = numerics["step"]
    if isinstance(controls["dt"], (int, float)) and controls["dt"] > 0 and step > 0:
        ratio = controls["dt"] / step
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            problems.append(f"controls.dt = {controls['dt']} is not a multiple of numerics.step = {step}")

    pair = {**PAIR_DEFAULTS, **data.get("pair", {})}
    if pair["coords"] not in ("log", "quotient"):
        problems.append("pair.coords: expected 'log' or 'quotient'")
    missing = [k for k in ("K_lo", "K_hi", "Q_lo", "Q_hi", "delta") if k not in pair]
    problems.extend(f"pair.{k}: missing" for k in missing)
    if not missing:
        try:
            entropy.AdmissiblePair(pair["K_lo"], pair["K_hi"], pair["Q_lo"], pair["Q_hi"], pair["delta"],
                                   tuple(pair["eps"]), tuple(pair["tau"]))
        except (ValueError, TypeError) as exc:
            problems.append(f"pair: {exc}")
        else:
            h = step * numerics["thinning"] if step > 0 else 1.0
            for t in pair["tau"]:
                if abs(t / h - round(t / h)) > 1e-9 * max(1.0, t / h):
                    problems.append(f"pair.tau = {t} is not a multiple of the sample spacing {h:g}")
            if d is not None and pair["coords"] == "log" and len(pair["K_lo"]) != d:
                problems.append(f"pair: boxes must have dimension {d} in log-coordinates")

    if problems:
        raise ValidationError(problems)
    controls = {
        "dirs": _floats(dirs), "range_lo": _floats(lo), "range_hi": _floats(hi),
        "dt": float(controls["dt"]), "family": controls["family"],
        "levels": int(controls["levels"]), "cap": int(controls["cap"]),
    }
    pair_spec = {k: _floats(pair[k]) for k in ("K_lo", "K_hi", "Q_lo", "Q_hi", "delta", "eps", "tau")}
    pair_spec["delta"] = _floats(np.broadcast_to(pair_spec["delta"], (len(pair_spec["K_lo"]),)))
    pair_spec["coords"] = pair["coords"]
    numerics = {k: (_floats(v) if k == "volume_tau" else v) for k, v in numerics.items()}
    cfg = ExperimentConfig(name, seed, alg_spec, table, D, z, controls, pair_spec, numerics)
    if cfg.uses_quotient:
        try:
            k = cfg.split.dims[0]
        except AffineEntropyError as exc:
            raise ValidationError([f"pair.coords = 'quotient': {exc}"]) from exc
        if len(pair_spec["K_lo"]) != k:
            raise ValidationError([f"pair: boxes must have the quotient dimension {k}"])
    return cfg


def parse_config_text(text, base_dir=None):
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"config syntax error: {exc}") from exc
    return config_from_dict(data, base_dir)


def parse_config(path):
    """Read and validate a config file.

    ``system:<name>`` in place of a path loads a catalog system with its defaults.
    """
    path = str(path)
    if path.startswith("system:"):
        return config_from_dict({"system": path.split(":", 1)[1]})
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{p}: {exc.strerror or exc}") from exc
    try:
        return parse_config_text(text, p.parent)
    except ParseError as exc:
        raise ParseError(f"{p}: {exc}") from exc


def system_config(name, **overrides):
    """Catalog system as a validated config, with optional table overrides."""
    return config_from_dict({"system": name, **overrides})
