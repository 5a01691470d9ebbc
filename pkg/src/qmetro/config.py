"""Experiment configuration and its INI-style file format.

Example::

    [experiment]
    master_seed = 42
    n_states = 20000
    ree_subsample = 500      ; or "all"
    n_bins = auto            ; or an integer
    bootstrap_n = 1000

    [mqfi]
    n_restarts = 8

    [sweep.amplitude]
    kind = amplitude_damping
    measure = concurrence
    gammas = 0, 0.1, 0.2, 0.3, 0.4, 0.5
    n_sample = 2000
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .channels import SweepDirective
from .entanglement import ReeConfig
from .metrology import MqfiConfig


def default_sweeps() -> tuple[SweepDirective, ...]:
    return (
        SweepDirective("amplitude_damping"),
        SweepDirective("phase_damping"),
        SweepDirective("depolarizing"),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    master_seed: int = 42
    n_states: int = 20000
    ree_subsample: int | str = 500
    mqfi: MqfiConfig = field(default_factory=MqfiConfig)
    ree: ReeConfig = field(default_factory=ReeConfig)
    n_bins: int | str = "auto"
    min_occupancy: int = 100
    bootstrap_n: int = 1000
    bootstrap_models: tuple[str, ...] = ("cubic", "exponential_saturation")
    cv_folds: int = 5
    test_fraction: float = 0.2
    sweeps: tuple[SweepDirective, ...] = field(default_factory=default_sweeps)
    baseline_n: int = 1000
    output_dir: str = "qmetro_out"
    workers: int | str | None = None  # None: $QMETRO_WORKERS, else 1

    def __post_init__(self):
        if self.n_states < 100:
            raise ValueError("n_states must be >= 100")
        if not 0 < self.test_fraction < 1:
            raise ValueError("test_fraction must be in (0, 1)")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be >= 2")
        if self.ree_subsample != "all" and int(self.ree_subsample) < 0:
            raise ValueError("ree_subsample must be 'all' or a non-negative integer")
        if self.n_bins != "auto" and int(self.n_bins) < 2:
            raise ValueError("n_bins must be 'auto' or >= 2")

    @property
    def explicit_bins(self) -> int | None:
        return None if self.n_bins == "auto" else int(self.n_bins)

    def n_ree(self) -> int:
        return self.n_states if self.ree_subsample == "all" else min(int(self.ree_subsample), self.n_states)

    def to_dict(self) -> dict:
        return json.loads(json.dumps(dataclasses.asdict(self)))

    def ensemble_key(self) -> str:
        """Hash of everything that determines ensemble.csv."""
        d = {k: v for k, v in self.to_dict().items() if k in ("master_seed", "n_states", "ree_subsample", "mqfi", "ree")}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


_INT = ("master_seed", "n_states", "min_occupancy", "bootstrap_n", "cv_folds", "baseline_n")


def _coerce(cls, raw: dict) -> dict:
    types = {f.name: f.type for f in dataclasses.fields(cls)}
    out = {}
    for key, value in raw.items():
        if key not in types:
            raise KeyError(f"unknown key {key!r} for {cls.__name__}")
        t = str(types[key])
        if t.startswith("int") and "str" not in t:
            out[key] = int(value)
        elif t.startswith("float"):
            out[key] = float(value)
        elif "tuple[float" in t:
            out[key] = tuple(float(v) for v in value.split(","))
        elif "tuple[str" in t:
            out[key] = tuple(v.strip() for v in value.split(",") if v.strip())
        elif t == "int | None":
            out[key] = None if value.strip().lower() in ("", "auto", "none") else int(value)
        elif t.startswith("int | str"):
            v = value.strip()
            out[key] = int(v) if v.lstrip("-").isdigit() else v
        else:
            out[key] = value.strip()
    return out


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Defaults < config file < keyword overrides (``None`` overrides are ignored)."""
    values: dict = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        cp.read(path)
        for section in cp.sections():
            body = dict(cp[section])
            if section == "experiment":
                values.update(_coerce(ExperimentConfig, body))
            elif section == "mqfi":
                values["mqfi"] = MqfiConfig(**_coerce(MqfiConfig, body))
            elif section == "ree":
                values["ree"] = ReeConfig(**_coerce(ReeConfig, body))
            elif section.startswith("sweep."):
                values.setdefault("sweeps", [])
                values["sweeps"].append(SweepDirective(**_coerce(SweepDirective, body)))
            else:
                raise KeyError(f"unknown config section [{section}]")
        if "sweeps" in values:
            values["sweeps"] = tuple(values["sweeps"])
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)
