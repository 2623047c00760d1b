"""Flat ``key = value`` experiment configuration with typed per-command schemas."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Tuple

from .errors import ValidationError


def _float(text) -> float:
    return float(text)


def _int(text) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(f"{text!r} is not an integer")
    return int(value)


def _floats(text) -> tuple:
    if isinstance(text, (tuple, list)):
        return tuple(float(v) for v in text)
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def _ints(text) -> tuple:
    if isinstance(text, (tuple, list)):
        return tuple(int(v) for v in text)
    return tuple(_int(v) for v in str(text).split(",") if v.strip())


def _str(text) -> str:
    return str(text).strip()


def format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, tuple):
        return ",".join(format_value(v) for v in value)
    return str(value)


@dataclass(frozen=True)
class Param:
    parse: Callable
    default: Any
    help: str = ""
    choices: Tuple = ()
    check: Callable = None  # returns an error message or None


def positive(v):
    return None if v > 0 else "must be positive"


def non_negative(v):
    return None if v >= 0 else "must be non-negative"


def all_positive(v):
    return None if v and all(x > 0 for x in v) else "must be a non-empty list of positive numbers"


def at_least(k):
    return lambda v: None if v >= k else f"must be at least {k}"


MODEL = Param(_str, "invariant", "invariant or covariant", ("invariant", "covariant"))
KIND = Param(_str, "phiphi", "commutator kind", ("phiphi", "pipi", "phipi"))
MASS = Param(_float, 1.0, "particle mass", check=positive)
GAMMA = Param(_float, 0.5, "uniform loss rate of the invariant model", check=non_negative)
KAPPA = Param(_float, 0.5, "rate coefficient of the covariant model", check=non_negative)
SEED = Param(_int, 0, "random seed")

SCHEMAS: Dict[str, Dict[str, Param]] = {
    "evolve": {
        "model": MODEL, "m": MASS, "gamma": GAMMA, "kappa": KAPPA,
        "g": Param(_float, 0.0, "number-operator coupling"),
        "length": Param(_float, 8.0, "box length", check=positive),
        "points": Param(_int, 5, "grid points", check=at_least(1)),
        "modes": Param(_ints, (2, 3), "grid modes kept in the truncation"),
        "dim_f": Param(_int, 6, "Fock levels per mode", check=at_least(2)),
        "alpha": Param(_float, 0.3, "coherent amplitude on every mode"),
        "t_final": Param(_float, 2.0, "final time", check=non_negative),
        "samples": Param(_int, 5, "number of output times", check=at_least(1)),
        "tol": Param(_float, 1e-9, "integrator tolerance", check=positive),
    },
    "wick": {
        "n": Param(_int, 4, "labels per product", check=at_least(1)),
        "placements": Param(_int, 20, "random label placements", check=at_least(1)),
        "dim_f": Param(_int, 4, "Fock levels per mode", check=at_least(2)),
        "gamma": Param(_float, 0.4, "loss rate", check=non_negative),
        "t": Param(_float, 1.0, "evolution time", check=non_negative),
        "length": Param(_float, 8.0, "box length", check=positive),
        "points": Param(_int, 5, "grid points", check=at_least(1)),
        "modes": Param(_ints, (2, 3), "grid modes kept in the truncation"),
        "tol": Param(_float, 1e-8, "entrywise tolerance", check=positive),
        "seed": SEED,
    },
    "commutator": {
        "model": MODEL, "kind": KIND, "m": MASS, "gamma": GAMMA, "kappa": KAPPA,
        "x0": Param(_float, 1.0, "time of the first field", check=non_negative),
        "y0": Param(_float, 0.0, "time of the second field", check=non_negative),
        "r": Param(_float, 2.0, "radial distance", check=non_negative),
        "dim": Param(_int, 3, "spatial dimension", ("1", "3")),
        "tol": Param(_float, 1e-8, "quadrature tolerance", check=positive),
    },
    "causality-scan": {
        "model": MODEL, "kind": KIND, "m": MASS, "gamma": GAMMA, "kappa": KAPPA,
        "x0": Param(_float, 1.0, "time of the first field", check=non_negative),
        "y0": Param(_float, 0.0, "time of the second field", check=non_negative),
        "dim": Param(_int, 3, "spatial dimension", ("1", "3")),
        "eps": Param(_float, 1e-5, "violation threshold", check=positive),
        "dmin": Param(_float, 0.1, "smallest distance outside the lightcone", check=positive),
        "dmax": Param(_float, 6.0, "largest distance outside the lightcone", check=positive),
        "count": Param(_int, 60, "number of scan points", check=at_least(1)),
        "workers": Param(_int, 1, "worker processes for the scan", check=at_least(1)),
        "tol": Param(_float, 1e-8, "quadrature tolerance", check=positive),
    },
    "kg": {
        "model": MODEL, "m": MASS, "gamma": GAMMA, "kappa": KAPPA,
        "scheme": Param(_str, "spectral_exact", "time stepper", ("spectral_exact", "leapfrog")),
        "dt_step": Param(_float, 0.01, "time step", check=positive),
        "t_final": Param(_float, 1.0, "final time", check=non_negative),
        "length": Param(_float, 64.0, "box length", check=positive),
        "points": Param(_int, 256, "lattice points", check=at_least(2)),
        "ks": Param(_floats, (0.0, 0.5, 1.0, 2.0), "wavenumbers for the dispersion probe"),
        "probe_dt": Param(_float, 0.1, "sampling step of the dispersion probe", check=positive),
        "probe_t": Param(_float, 10.0, "duration of the dispersion probe", check=positive),
    },
    "classify": {
        "m": MASS,
        "dim": Param(_int, 1, "spatial dimension", ("1", "3")),
        "length": Param(_float, 64.0, "box length", check=positive),
        "points": Param(_int, 65, "grid points per axis", check=at_least(1)),
        "samples": Param(_int, 8, "translation samples", check=at_least(1)),
        "threshold": Param(_float, 1e-10, "nullspace threshold", check=positive),
        "parameter": Param(_float, 1.0, "M, κ or N of the non-zero cases", check=positive),
        "etas": Param(_floats, (0.3, -0.3, 0.6, -0.6), "boost rapidities for the Hermitian-part check"),
        "seed": SEED,
    },
    "invariance": {
        "m": MASS,
        "cutoff": Param(_float, 16.0, "momentum cutoff in units of m", check=positive),
        "ns": Param(_ints, (64, 128, 256, 512), "grid sizes of the refinement study"),
        "eta": Param(_float, 0.4, "rapidity of the dissipator check"),
        "measure_eta": Param(_float, 0.5, "rapidity of the measure check"),
        "gamma": Param(_float, 1.0, "invariant loss rate", check=positive),
        "kappa": Param(_float, 0.5, "covariant rate coefficient", check=positive),
    },
    "selftest": {
        "seed": SEED,
    },
}

COMMON = {
    "out": Param(_str, "", "CSV output path"),
    "json": Param(_str, "", "JSON summary path (stdout always receives one summary line)"),
    "compare": Param(_str, "", "golden CSV fixture to compare against"),
}


def schema(command: str) -> Dict[str, Param]:
    if command not in SCHEMAS:
        raise ValidationError(f"unknown command {command!r}")
    return {**SCHEMAS[command], **COMMON}


@dataclass
class ExperimentConfig:
    command: str
    params: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def build(cls, command: str, values: Dict[str, Any]) -> "ExperimentConfig":
        known = schema(command)
        unknown = sorted(set(values) - set(known))
        if unknown:
            raise ValidationError(f"unknown keys for {command}: {', '.join(unknown)}")
        params = {}
        for key, p in known.items():
            raw = values.get(key, p.default)
            try:
                value = p.parse(raw)
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"{key}: cannot parse {raw!r} ({exc})") from None
            if p.choices and str(value).lower() not in p.choices:
                raise ValidationError(f"{key} must be one of {', '.join(p.choices)}, got {value!r}")
            if isinstance(value, str) and p.choices:
                value = value.lower()
            if p.check is not None:
                problem = p.check(value)
                if problem:
                    raise ValidationError(f"{key} {problem}, got {format_value(value)}")
            params[key] = value
        return cls(command, params)

    def __getitem__(self, key):
        return self.params[key]

    def dump(self) -> str:
        lines = [f"command = {self.command}"]
        lines += [f"{k} = {format_value(v)}" for k, v in self.params.items()]
        return "\n".join(lines) + "\n"


def parse_config_text(text: str) -> Dict[str, str]:
    values = {}
    for number, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"config line {number} is not key = value: {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in values:
            raise ValidationError(f"config key {key!r} given twice")
        values[key] = value
    return values


def load_config(command: str, text: str, overrides: Dict[str, Any] = None) -> ExperimentConfig:
    values = parse_config_text(text)
    file_command = values.pop("command", command)
    if file_command != command:
        raise ValidationError(f"config file is for {file_command!r}, not {command!r}")
    values.update(overrides or {})
    return ExperimentConfig.build(command, values)
