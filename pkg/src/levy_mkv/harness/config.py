"""Run configuration: one TOML file per run, strict schema.

Unknown keys are errors so typos in constants-critical fields cannot pass
silently.  The interaction-smallness hypothesis (eta above the derived
threshold) is a warning, not an error: experiments may probe that regime.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..dynamics import InitialLaw, SimulationParams
from ..forces import make_drift, make_interaction
from ..levy import LevyModel
from ..metrics import DynamicsModel


class ConfigError(Exception):
    def __init__(self, message: str, field_name: str | None = None):
        super().__init__(f"{field_name}: {message}" if field_name else message)


_SECTIONS = {"seed", "model", "levy", "metrics", "simulation", "initial", "output"}
_KEYS = {
    "model": {"gamma", "drift", "interaction", "eta", "dim"},
    "levy": {"family", "beta", "c0", "kappa", "trunc_delta"},
    "metrics": {"k0", "grid_n", "envelope_grid_n"},
    "simulation": {"dt_max", "t_end", "record_times", "M", "replicas",
                   "N_list", "chaos_seeds", "proxy_snapshot_dt", "workers",
                   "law_refine_particles", "law_refine_passes", "law_grid_dt"},
    "initial": {"first", "second"},
    "output": {"dir", "formats"},
}
_INITIAL_KEYS = {"kind", "center", "scale"}


def _check_keys(section: str, data: dict, allowed: set) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", section)


@dataclass(frozen=True)
class RunConfig:
    raw: dict
    seed: int
    model: DynamicsModel
    levy: LevyModel
    params: SimulationParams
    k0: float
    grid_n: int
    envelope_grid_n: int
    initial_first: InitialLaw
    initial_second: InitialLaw
    out_dir: str
    formats: tuple = ("csv", "json", "svg")
    warnings: tuple = field(default_factory=tuple)

    def config_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _initial_from(data, section) -> InitialLaw:
    if not isinstance(data, dict):
        raise ConfigError("initial law must be a table", section)
    _check_keys(section, data, _INITIAL_KEYS)
    try:
        return InitialLaw(kind=data.get("kind", "point"),
                          center=tuple(data.get("center", (0.0, 0.0))),
                          scale=float(data.get("scale", 1.0)))
    except ValueError as exc:
        raise ConfigError(str(exc), section) from exc


def load_config(path: str, seed_override: int | None = None,
                out_override: str | None = None,
                workers_override: int | None = None) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from exc
    return parse_config(raw, seed_override, out_override, workers_override)


def parse_config(raw: dict, seed_override: int | None = None,
                 out_override: str | None = None,
                 workers_override: int | None = None) -> RunConfig:
    _check_keys("<root>", raw, _SECTIONS)
    for sec, keys in _KEYS.items():
        if sec in raw:
            if not isinstance(raw[sec], dict):
                raise ConfigError("must be a table", sec)
            _check_keys(sec, raw[sec], keys)

    seed = int(raw.get("seed", 0)) if seed_override is None else int(seed_override)

    m = raw.get("model", {})
    try:
        drift = make_drift(m.get("drift", "linear"), int(m.get("dim", 1)))
        interaction = make_interaction(m.get("interaction", "zero"),
                                       float(m.get("eta", 0.0)))
        model = DynamicsModel(dim=int(m.get("dim", 1)),
                              gamma=float(m.get("gamma", 2.0)),
                              drift=drift, interaction=interaction)
    except ValueError as exc:
        raise ConfigError(str(exc), "model") from exc

    lv = raw.get("levy", {})
    try:
        levy = LevyModel(dim=int(m.get("dim", 1)),
                         family=lv.get("family", "bounded-stable-like"),
                         beta=float(lv.get("beta", 0.5)),
                         c0=float(lv.get("c0", 1.0)),
                         kappa=float(lv.get("kappa", 1.0)),
                         trunc_delta=float(lv.get("trunc_delta", 1e-3)))
    except ValueError as exc:
        raise ConfigError(str(exc), "levy") from exc

    sim = raw.get("simulation", {})
    try:
        params = SimulationParams(
            dt_max=float(sim.get("dt_max", 1e-3)),
            t_end=float(sim.get("t_end", 8.0)),
            record_times=tuple(sim.get("record_times",
                                       (0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0))),
            seed=seed,
            M=int(sim.get("M", 1024)),
            replicas=int(sim.get("replicas", 2000)),
            N_list=tuple(int(n) for n in sim.get("N_list", (16, 32, 64, 128, 256, 512))),
            proxy_snapshot_dt=float(sim.get("proxy_snapshot_dt", 0.25)),
            workers=int(sim.get("workers", 1) if workers_override is None
                        else workers_override),
            law_refine_particles=int(sim.get("law_refine_particles", 32768)),
            law_refine_passes=int(sim.get("law_refine_passes", 2)),
            law_grid_dt=float(sim.get("law_grid_dt", 0.02)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc), "simulation") from exc

    met = raw.get("metrics", {})
    k0 = float(met.get("k0", 8.0))
    if k0 <= 4.0:
        raise ConfigError("k0 must exceed 4", "metrics")

    init = raw.get("initial", {})
    first = _initial_from(init.get("first", {"kind": "point"}), "initial.first")
    second = _initial_from(init.get("second", {"kind": "point", "center": (1.0, 0.0)}),
                           "initial.second")

    out = raw.get("output", {})
    formats = tuple(out.get("formats", ("csv", "json", "svg")))
    bad = set(formats) - {"csv", "json", "svg"}
    if bad:
        raise ConfigError(f"unknown formats {sorted(bad)}", "output")

    return RunConfig(
        raw=raw, seed=seed, model=model, levy=levy, params=params,
        k0=k0, grid_n=int(met.get("grid_n", 2001)),
        envelope_grid_n=int(met.get("envelope_grid_n", 64)),
        initial_first=first, initial_second=second,
        out_dir=str(out.get("dir", "out")) if out_override is None else out_override,
        formats=formats,
    )


def chaos_seeds(raw: dict) -> int:
    return int(raw.get("simulation", {}).get("chaos_seeds", 20))
