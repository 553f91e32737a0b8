"""Run manifests: everything needed to reproduce an output bit for bit.

The data files themselves stay free of volatile fields; the manifest
(written alongside, or to stderr when streaming) carries the resolved
parameter set, master seed, tool version, generator name, and timestamp.
Feeding a manifest back through --config reproduces the data output
exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone

from . import __version__
from .rng import GENERATOR_NAME


@dataclass(frozen=True)
class RunManifest:
    subcommand: str
    params: dict
    master_seed: int
    tool_version: str = __version__
    rng: str = GENERATOR_NAME
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    wall_time_s: float | None = None

    def to_json(self) -> str:
        doc = {
            "subcommand": self.subcommand,
            "params": self.params,
            "master_seed": self.master_seed,
            "tool_version": self.tool_version,
            "rng": self.rng,
            "timestamp": self.timestamp,
        }
        if self.wall_time_s is not None:
            doc["wall_time_s"] = self.wall_time_s
        return json.dumps(doc, indent=2) + "\n"


def params_from_config_file(path) -> dict:
    """Load a config file; accepts both flat configs and full manifests."""
    with open(path) as fh:
        doc = json.load(fh)
    if "params" in doc and isinstance(doc["params"], dict):
        return doc["params"]
    return doc
