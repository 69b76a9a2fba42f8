"""Scenario configuration: flat JSON documents, presets and unit conversion.

Keys ending in ``_db`` are converted to linear units here and nowhere else.
A document holds base values plus a ``series`` list of overrides and a
``sweep`` block naming the swept variable.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .channels import kappa_from_sigma_db
from .errors import SpecError
from .params import (
    CsiAssisted,
    FixedGain,
    GenKParams,
    MalagaParams,
    ModulationScheme,
    PathLossParams,
    RelaySystem,
)

__all__ = ["ConfigError", "Scenario", "load_preset", "preset_names", "resolve", "sweep_values", "apply_sweep"]

METRICS = ("outage", "ber", "capacity", "power-alloc")
SWEEP_VARIABLES = ("mu_r", "gamma_bar", "P_tot", "gamma_th")

_PARAM_KEYS = {
    "scheme", "gain_C", "detection", "alpha", "beta", "xi", "b0", "rho", "Omega", "mu_r",
    "N", "m", "kappa", "kappa_sigma_db", "L", "m_I", "kappa_I", "gamma_bar", "gamma_th", "gamma_I",
    "modulation", "d0", "wavelength", "eta", "distance", "delta", "fso_distance", "S_cap", "target_outage",
}  # fmt: skip
_DOC_KEYS = {"name", "description", "metric", "sweep", "series", "assumed"}
_DEFAULTS = {
    "scheme": "fixed", "gain_C": 1.7, "detection": 1, "b0": 0.25, "rho": 0.75, "Omega": 0.5, "xi": 1.1,
    "mu_r": 1.0, "N": 1, "L": 1, "gamma_bar": 1.0, "gamma_th": 1.0, "gamma_I": 1.0, "modulation": "bpsk",
    "d0": 5.0, "wavelength": 10.71e-3, "eta": 2.5, "distance": 50.0, "delta": 0.0, "fso_distance": 1.0,
    "S_cap": math.inf, "target_outage": 1e-2,
}  # fmt: skip


class ConfigError(SpecError):
    pass


@dataclass
class Scenario:
    label: str
    system: RelaySystem
    gamma_th: float
    modulation: ModulationScheme
    pathloss: PathLossParams
    params: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)


def preset_names() -> list[str]:
    root = resources.files("foxlink") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> dict:
    path = resources.files("foxlink") / "presets" / f"{name}.json"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return json.loads(path.read_text())


def _linear(block: dict, where: str) -> dict:
    out = {}
    for key, val in block.items():
        if key == "label":
            continue
        if key == "kappa_sigma_db":
            # a spread in dB, not a power: converted by the moment match below
            out[key] = float(val)
            continue
        base = key[:-3] if key.endswith("_db") else key
        if base not in _PARAM_KEYS:
            raise ConfigError(f"unknown key {key!r} in {where}")
        if key.endswith("_db"):
            if not isinstance(val, (int, float)):
                raise ConfigError(f"{key} must be a number")
            val = 10.0 ** (val / 10.0)
        out[base] = val
    return out


def _check_document(cfg: dict):
    if not isinstance(cfg, dict):
        raise ConfigError("configuration must be a JSON object")
    metric = cfg.get("metric")
    if metric not in METRICS:
        raise ConfigError(f"metric must be one of {METRICS}")
    sw = cfg.get("sweep")
    if not isinstance(sw, dict):
        raise ConfigError("a sweep block is required")
    if sw.get("variable") not in SWEEP_VARIABLES:
        raise ConfigError(f"sweep variable must be one of {SWEEP_VARIABLES}")
    if (sw["variable"] == "P_tot") != (metric == "power-alloc"):
        raise ConfigError("P_tot sweeps go with the power-alloc metric and only with it")
    if int(sw.get("points", 0)) < 2:
        raise ConfigError("sweep needs at least 2 points")
    if not sw.get("start", 0) < sw.get("stop", 0):
        raise ConfigError("sweep start must be below stop")
    if sw.get("spacing", "log-dB") not in ("log-dB", "linear"):
        raise ConfigError("sweep spacing must be 'log-dB' or 'linear'")
    if not isinstance(cfg.get("series", [{}]), list):
        raise ConfigError("series must be a list")


def sweep_values(cfg: dict) -> np.ndarray:
    """Sweep abscissas in linear units."""
    sw = cfg["sweep"]
    grid = np.linspace(float(sw["start"]), float(sw["stop"]), int(sw["points"]))
    return 10.0 ** (grid / 10.0) if sw.get("spacing", "log-dB") == "log-dB" else grid


def sweep_labels(cfg: dict) -> np.ndarray:
    """Sweep abscissas as written in the CSV (dB for log-dB spacing)."""
    sw = cfg["sweep"]
    return np.linspace(float(sw["start"]), float(sw["stop"]), int(sw["points"]))


def _build(label: str, p: dict) -> Scenario:
    notes = []
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            fso = MalagaParams.rounded(
                p["alpha"], p["beta"], b0=p["b0"], rho=p["rho"], Omega=p["Omega"], xi=p["xi"], r=int(p["detection"])
            )
        notes += [str(w.message) for w in caught]
        fso = fso.with_mu_r(p["mu_r"])
        kappa = kappa_from_sigma_db(p["kappa_sigma_db"]) if "kappa_sigma_db" in p else p["kappa"]
        interf_power = p["gamma_I"] if "gamma_I" in p else 1.0
        rf = GenKParams(p["m"], kappa, int(p["N"]), p["gamma_bar"] * interf_power)
        interf = GenKParams(p["m_I"], p["kappa_I"], int(p["L"]), interf_power)
        scheme = p["scheme"]
        if scheme == "fixed":
            sch = FixedGain(p["gain_C"])
        elif scheme == "csi":
            sch = CsiAssisted()
        else:
            raise ConfigError(f"scheme must be 'fixed' or 'csi' (got {scheme!r})")
        mod = p["modulation"]
        mod = ModulationScheme.builtin(mod) if isinstance(mod, str) else ModulationScheme(**mod)
        pl = PathLossParams(p["d0"], p["wavelength"], p["eta"], p["distance"])
    except KeyError as exc:
        raise ConfigError(f"missing parameter {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return Scenario(label, RelaySystem(fso, rf, interf, sch), float(p["gamma_th"]), mod, pl, p, notes)


def resolve(cfg: dict, overrides: dict | None = None) -> list[Scenario]:
    """One Scenario per series; ``overrides`` (e.g. from CLI flags) win over everything."""
    _check_document(cfg)
    unknown = set(cfg) - _DOC_KEYS - _PARAM_KEYS - {k for k in cfg if k.endswith("_db") and k[:-3] in _PARAM_KEYS}
    unknown.discard("kappa_sigma_db")
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")
    base = dict(_DEFAULTS)
    base.update(_linear({k: v for k, v in cfg.items() if k not in _DOC_KEYS}, "document"))
    out = []
    for i, s in enumerate(cfg.get("series") or [{}]):
        p = dict(base)
        p.update(_linear(s, f"series {i}"))
        if "kappa" in s:
            p.pop("kappa_sigma_db", None)
        if overrides:
            p.update(overrides)
        out.append(_build(str(s.get("label", f"series{i}")), p))
    return out


def apply_sweep(sc: Scenario, variable: str, value: float) -> tuple[RelaySystem, float]:
    """(system, threshold) at one sweep point."""
    sys, gth = sc.system, sc.gamma_th
    if variable == "mu_r":
        sys = sys.with_mu_r(value)
    elif variable == "gamma_bar":
        sys = sys.with_sir_mean(value)
    elif variable == "gamma_th":
        gth = value
    elif variable != "P_tot":
        raise ConfigError(f"unknown sweep variable {variable!r}")
    return sys, gth
