"""Flat config file (TOML or JSON) mapped onto the pipeline and service
settings. Any key can be omitted; defaults match the module dataclasses.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .descriptors import DescriptorConfig
from .errors import ConfigurationError
from .ingest import IngestConfig
from .service import LockoutPolicy
from .timeline import ClusterConfig


@dataclass
class AppConfig:
    ingest: IngestConfig = field(default_factory=IngestConfig)
    descriptor: DescriptorConfig = field(default_factory=DescriptorConfig)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    lockout: LockoutPolicy = field(default_factory=LockoutPolicy)
    n_images: int = 4
    selection_tau: float = 1.0
    rng_seed: Optional[int] = None
    pairing_code: str = "wearable-setup"

    def __post_init__(self):
        if self.selection_tau not in (0.5, 0.75, 1.0):
            raise ConfigurationError("selection_tau must be one of 0.5, 0.75, 1.0")
        if self.n_images < 2:
            raise ConfigurationError("n_images must be >= 2")


_INGEST_KEYS = {"working_width", "working_height", "selection_mode", "day_tag", "fps"}
_DESCRIPTOR_KEYS = {
    "centrist_levels",
    "phog_levels",
    "phog_bins",
    "phog_angle_range",
    "n_components",
}
_CLUSTER_KEYS = {"min_points", "eps_override"}
_LOCKOUT_KEYS = {"max_attempts", "max_entry_time_ms", "on_exceed"}
_TOP_KEYS = {"n_images", "selection_tau", "rng_seed", "pairing_code"}


def config_from_dict(raw: dict) -> AppConfig:
    known = _INGEST_KEYS | _DESCRIPTOR_KEYS | _CLUSTER_KEYS | _LOCKOUT_KEYS | _TOP_KEYS
    unknown = set(raw) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")

    def sub(keys):
        return {k: raw[k] for k in keys if k in raw}

    return AppConfig(
        ingest=IngestConfig(**sub(_INGEST_KEYS)),
        descriptor=DescriptorConfig(**sub(_DESCRIPTOR_KEYS)),
        cluster=ClusterConfig(**sub(_CLUSTER_KEYS)),
        lockout=LockoutPolicy(**sub(_LOCKOUT_KEYS)),
        **sub(_TOP_KEYS),
    )


def load_config(path: Optional[str | Path]) -> AppConfig:
    if path is None:
        return AppConfig()
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        raw = json.loads(text)
    elif path.suffix == ".toml":
        try:
            import tomllib  # py311+
        except ModuleNotFoundError:
            import tomli as tomllib
        raw = tomllib.loads(text)
    else:
        raise ConfigurationError(f"config must be .toml or .json, got {path.suffix!r}")
    return config_from_dict(raw)
