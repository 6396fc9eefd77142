"""JSON run configuration.

Tagged unions carry a ``"type"`` discriminator.  Example::

    {
      "potential": {
        "gamma": {"type": "sine", "a": 0.5, "omega": 1.0},
        "V": {"type": "alternating", "amplitude": 1.0},
        "q": {"type": "trig", "c0": 0.0, "terms": [[1.0, 1.0, 0.0]]}
      },
      "energies": {"min": 0.0, "max": 12.0, "step": 0.02},
      "integrator": {"h_max": null, "substep_angle_cap": 0.7853981633974483},
      "horizon": 10000,
      "initial_angle": 0.0,
      "output": {"path": null, "format": "csv"}
    }
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

from . import apmodels as ap
from .prufer import IntegratorConfig

__all__ = ["ConfigError", "RunConfig", "load_config", "build_point_set", "build_sequence", "build_sampler"]

MAX_GRID = 10_000


class ConfigError(ValueError):
    pass


def _num(d: dict, key: str, default=None, *, required=False) -> Optional[float]:
    if key not in d or d[key] is None:
        if required:
            raise ConfigError(f"missing field {key!r}")
        return default
    val = d[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise ConfigError(f"field {key!r} must be a finite number, got {val!r}")
    return float(val)


def _terms(d: dict) -> list:
    terms = d.get("terms", [])
    if not isinstance(terms, list):
        raise ConfigError("'terms' must be a list of [amplitude, omega, phase]")
    out = []
    for t in terms:
        if isinstance(t, dict):
            t = [t.get("amplitude"), t.get("omega"), t.get("phase", 0.0)]
        if not isinstance(t, (list, tuple)) or len(t) not in (2, 3):
            raise ConfigError(f"bad term {t!r}")
        vals = [_num({"v": x}, "v", required=True) for x in t]
        out.append(tuple(vals) if len(vals) == 3 else (vals[0], vals[1], 0.0))
    return out


def _tag(spec: Any, what: str) -> str:
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError(f"{what} must be an object with a 'type' field")
    return spec["type"]


def build_point_set(spec: dict) -> ap.PointSetModel:
    kind = _tag(spec, "gamma")
    try:
        if kind == "periodic":
            return ap.periodic_lattice(_num(spec, "spacing", 1.0))
        if kind == "sine":
            return ap.sine_lattice(
                _num(spec, "a", required=True),
                _num(spec, "omega", 1.0),
                _num(spec, "phi", 0.0),
                _num(spec, "spacing", 1.0),
            )
    except ValueError as exc:
        raise ConfigError(f"gamma: {exc}") from exc
    raise ConfigError(f"unknown gamma type {kind!r}")


def build_sequence(spec: dict) -> ap.BiSequenceModel:
    kind = _tag(spec, "V")
    if kind == "constant":
        return ap.constant_sequence(_num(spec, "value", required=True))
    if kind == "alternating":
        return ap.alternating_sequence(_num(spec, "amplitude", 1.0))
    if kind == "sine":
        return ap.sine_sequence(_num(spec, "amplitude", required=True), _num(spec, "omega", 1.0), _num(spec, "phase", 0.0))
    if kind == "quasiperiodic":
        return ap.quasiperiodic_sequence(_terms(spec), _num(spec, "c0", 0.0))
    if kind == "periodic":
        vals = spec.get("values")
        if not isinstance(vals, list) or not vals:
            raise ConfigError("periodic sequence needs a non-empty 'values' list")
        return ap.periodic_sequence([_num({"v": v}, "v", required=True) for v in vals])
    raise ConfigError(f"unknown sequence type {kind!r}")


def build_sampler(spec: dict) -> ap.PotentialSampler:
    kind = _tag(spec, "q")
    if kind == "constant":
        return ap.constant_potential(_num(spec, "value", required=True))
    if kind == "trig":
        return ap.trig_potential(_terms(spec), _num(spec, "c0", 0.0))
    if kind == "piecewise":
        if "values" not in spec:
            raise ConfigError("piecewise q needs a 'values' sequence spec")
        return ap.piecewise_constant_potential(build_sequence(spec["values"]))
    raise ConfigError(f"unknown q type {kind!r}")


@dataclass
class RunConfig:
    potential: dict
    energies: Any = None
    integrator: dict = field(default_factory=lambda: {"h_max": None, "substep_angle_cap": math.pi / 4})
    horizon: int = 10_000
    initial_angle: float = 0.0
    output: dict = field(default_factory=lambda: {"path": None, "format": "csv"})

    def __post_init__(self):
        self.validate()

    # -- construction ------------------------------------------------------

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - {"potential", "energies", "integrator", "horizon", "initial_angle", "output"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "potential" not in d:
            raise ConfigError("missing 'potential'")
        kw = {k: d[k] for k in d}
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    # -- validation and materialization -----------------------------------

    def validate(self) -> None:
        pot = self.potential
        if not isinstance(pot, dict):
            raise ConfigError("'potential' must be an object")
        for key in ("gamma", "V", "q"):
            if key not in pot:
                raise ConfigError(f"potential is missing {key!r}")
        self.build_potential()
        self.energy_list()
        self.integrator_config()
        if isinstance(self.horizon, bool) or not isinstance(self.horizon, int) or self.horizon < 2 or self.horizon % 2:
            raise ConfigError("'horizon' must be an even integer >= 2")
        _num({"v": self.initial_angle}, "v", required=True)
        out = self.output or {}
        if out.get("format", "csv") not in ("csv", "json"):
            raise ConfigError("output.format must be 'csv' or 'json'")

    def build_potential(self) -> ap.GeneralizedPotential:
        pot = self.potential
        return ap.GeneralizedPotential(build_sampler(pot["q"]), build_sequence(pot["V"]), build_point_set(pot["gamma"]))

    def energy_list(self) -> list:
        e = self.energies
        if e is None:
            return []
        if isinstance(e, list):
            return [_num({"v": x}, "v", required=True) for x in e]
        if isinstance(e, dict):
            lo = _num(e, "min", required=True)
            hi = _num(e, "max", required=True)
            if hi < lo:
                raise ConfigError("energies.max must be >= energies.min")
            step = _num(e, "step")
            if step is None:
                step = (hi - lo) / (MAX_GRID - 1) if hi > lo else 1.0
            if not step > 0:
                raise ConfigError("energies.step must be positive")
            count = int(math.floor((hi - lo) / step + 1e-9)) + 1
            return [lo + step * k for k in range(count)]
        raise ConfigError("'energies' must be a list or {min, max[, step]}")

    def integrator_config(self) -> IntegratorConfig:
        d = self.integrator or {}
        if not isinstance(d, dict):
            raise ConfigError("'integrator' must be an object")
        try:
            return IntegratorConfig(
                h_max=_num(d, "h_max"), substep_angle_cap=_num(d, "substep_angle_cap", math.pi / 4)
            )
        except ValueError as exc:
            raise ConfigError(f"integrator: {exc}") from exc


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return RunConfig.from_json(text)
