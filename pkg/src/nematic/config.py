"""Flat ``section.key = value`` run configuration."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

from .coefficients import PARODI_TOL, LeslieCoefficients
from .initial import PRESETS, InitialSpec
from .solver import SCHEMES, StepperConfig


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _posint(v):
    i = int(v)
    if i <= 0:
        raise ValueError("must be a positive integer")
    return i


def _bool(v):
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _dealias(v):
    f = float(v)
    if f not in (1.5, 2.0, 3.0):
        raise ValueError("dealias factor must be 1.5, 2 or 3")
    return f


def _scheme(v):
    s = v.strip().upper()
    if s not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    return s


def _choice(*options):
    def conv(v):
        s = v.strip()
        if s not in options:
            raise ValueError(f"expected one of {options}")
        return s
    return conv


def _str(v):
    return v.strip()


def _preset(v):
    s = v.strip()
    for p in s.split("+"):
        if p.strip() not in PRESETS:
            raise ValueError(f"unknown preset {p.strip()!r}")
    return s


# key -> (converter, default)
SCHEMA = {
    "grid.dim": (int, 2),
    "grid.n": (_posint, 32),
    "coefficients.mu1": (float, 0.0),
    "coefficients.mu2": (float, -1.0),
    "coefficients.mu3": (float, 1.0),
    "coefficients.mu4": (float, 1.0),
    "coefficients.mu5": (float, 1.0),
    "coefficients.mu6": (float, 1.0),
    "coefficients.eta": (float, 0.5),
    "coefficients.parodi_tol": (float, PARODI_TOL),
    "density.m1": (float, 1.0),
    "density.m2": (float, 1.0),
    "initial.preset": (_preset, "equilibrium"),
    "initial.checkpoint": (_str, ""),
    "initial.rho_amplitude": (float, 0.0),
    "initial.shear_amplitude": (float, 1.0),
    "initial.director_amplitude": (float, 0.5),
    "initial.velocity_amplitude": (float, 0.5),
    "initial.decay": (float, 1.0),
    "initial.kmax": (_posint, 8),
    "initial.epsilon": (float, 0.01),
    "stepper.dt": (float, 1e-3),
    "stepper.scheme": (_scheme, "IMEX2"),
    "stepper.dealias": (_dealias, 2.0),
    "stepper.cfl_safety": (float, 0.5),
    "stepper.max_steps": (_posint, 10**9),
    "stepper.cadence": (_posint, 10),
    "stepper.convention": (_choice("ij", "ji"), "ij"),
    "stepper.stab_u": (float, 0.0),
    "stepper.stab_d": (float, 0.0),
    "run.T": (float, 0.1),
    "run.seed": (int, 0),
    "run.force": (_bool, False),
    "output.dir": (_str, "output"),
    "output.checkpoint_every": (int, 0),
    "oracle.m": (_posint, 4),
    "oracle.dt": (float, 1e-4),
    "oracle.T": (float, 0.1),
    "oracle.reading": (_choice("eqL2", "verbatim"), "eqL2"),
    "oracle.cap": (_posint, 8),
}


@dataclass(frozen=True)
class RunConfig:
    values: dict = field(default_factory=dict)
    base_dir: str = "."

    def __getitem__(self, key):
        return self.values[key]

    @property
    def dim(self) -> int:
        return self.values["grid.dim"]

    @property
    def n(self) -> int:
        return self.values["grid.n"]

    @property
    def M1(self) -> float:
        return self.values["density.m1"]

    @property
    def M2(self) -> float:
        return self.values["density.m2"]

    @property
    def T(self) -> float:
        return self.values["run.T"]

    @property
    def seed(self) -> int:
        return self.values["run.seed"]

    @property
    def checkpoint(self) -> Optional[str]:
        p = self.values["initial.checkpoint"]
        return p or None

    def coefficients(self) -> LeslieCoefficients:
        v = self.values
        return LeslieCoefficients(*(v[f"coefficients.mu{i}"] for i in range(1, 7)), eta=v["coefficients.eta"])

    def stepper(self, **overrides) -> StepperConfig:
        v = self.values
        kw = dict(
            dt=v["stepper.dt"], scheme=v["stepper.scheme"], dealias=v["stepper.dealias"],
            cfl_safety=v["stepper.cfl_safety"], max_steps=v["stepper.max_steps"],
            cadence=v["stepper.cadence"], convention=v["stepper.convention"],
            stab_u=v["stepper.stab_u"], stab_d=v["stepper.stab_d"], force=v["run.force"],
        )
        kw.update(overrides)
        return StepperConfig(**kw)

    def initial_spec(self) -> InitialSpec:
        v = self.values
        return InitialSpec(
            preset=v["initial.preset"], rho_amplitude=v["initial.rho_amplitude"],
            shear_amplitude=v["initial.shear_amplitude"], director_amplitude=v["initial.director_amplitude"],
            velocity_amplitude=v["initial.velocity_amplitude"], decay=v["initial.decay"],
            kmax=v["initial.kmax"], epsilon=v["initial.epsilon"],
        )

    def replace(self, **kv) -> "RunConfig":
        vals = dict(self.values)
        for k, val in kv.items():
            key = k.replace("__", ".")
            if key not in SCHEMA:
                raise ConfigError([f"unknown key {key!r}"])
            vals[key] = val
        return RunConfig(vals, self.base_dir)


def parse_config(text: str, base_dir: str = ".") -> RunConfig:
    """Parse and validate; every problem is collected before raising :class:`ConfigError`."""
    errors = []
    values = {k: d for k, (_, d) in SCHEMA.items()}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value'")
            continue
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in SCHEMA:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in seen:
            errors.append(f"line {lineno}: duplicate key {key!r}")
            continue
        seen.add(key)
        conv, _ = SCHEMA[key]
        try:
            values[key] = conv(val)
        except (TypeError, ValueError) as exc:
            errors.append(f"line {lineno}: {key}: {exc}")
    errors.extend(_validate(values, base_dir))
    if errors:
        raise ConfigError(errors)
    return RunConfig(values, base_dir)


def _validate(v: dict, base_dir: str) -> list[str]:
    errs = []
    if v["grid.dim"] not in (2, 3):
        errs.append("grid.dim must be 2 or 3")
    n = v["grid.n"]
    if n < 4 or n % 2:
        errs.append("grid.n must be even and >= 4")
    if not v["coefficients.eta"] > 0:
        errs.append("coefficients.eta must be positive")
    if not 0 < v["density.m1"] <= v["density.m2"]:
        errs.append("density bounds need 0 < m1 <= m2")
    if not v["stepper.dt"] > 0:
        errs.append("stepper.dt must be positive")
    if not 0 < v["stepper.cfl_safety"] <= 1:
        errs.append("stepper.cfl_safety must lie in (0, 1]")
    if v["stepper.stab_u"] < 0 or v["stepper.stab_d"] < 0:
        errs.append("stabilisation constants must be non-negative")
    if v["run.T"] < 0:
        errs.append("run.T must be non-negative")
    if not v["oracle.dt"] > 0 or v["oracle.T"] < 0:
        errs.append("oracle.dt must be positive and oracle.T non-negative")
    if v["oracle.m"] > v["oracle.cap"]:
        errs.append(f"oracle.m exceeds the cap {v['oracle.cap']}")
    ck = v["initial.checkpoint"]
    if ck and not os.path.isfile(os.path.join(base_dir, ck)):
        errs.append(f"initial.checkpoint {ck!r} not found")
    return errs


def load_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, os.path.dirname(os.path.abspath(path)))


def format_config(cfg: RunConfig) -> str:
    return "\n".join(f"{k} = {cfg.values[k]}" for k in SCHEMA) + "\n"
