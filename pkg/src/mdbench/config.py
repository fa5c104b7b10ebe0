"""Run configuration: file < environment < flags, plus reproducibility hash."""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from typing import Optional

ENGINE_ENV_VAR = "MDBENCH_ENGINE"
JOBS_ENV_VAR = "MDBENCH_JOBS"


def read_config_file(path) -> dict:
    """Parse a simple key = value config file ('#' starts a comment)."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, _, value = text.partition("=")
            values[key.strip()] = value.strip().strip('"')
    return values


@dataclass
class RunConfig:
    engine: Optional[str] = None
    jobs: int = 1
    seed: int = 0
    move_cap: Optional[int] = 70

    @staticmethod
    def resolve(args, file_values: Optional[dict] = None) -> "RunConfig":
        """Flags beat environment variables beat the config file."""
        file_values = file_values or {}
        engine = (
            getattr(args, "engine", None)
            or os.environ.get(ENGINE_ENV_VAR)
            or file_values.get("engine")
        )
        jobs_raw = (
            getattr(args, "jobs", None)
            or os.environ.get(JOBS_ENV_VAR)
            or file_values.get("jobs")
        )
        cfg = RunConfig(engine=engine)
        if jobs_raw:
            cfg.jobs = int(jobs_raw)
        if getattr(args, "seed", None) is not None:
            cfg.seed = args.seed
        elif "seed" in file_values:
            cfg.seed = int(file_values["seed"])
        if getattr(args, "move_cap", None) is not None:
            cfg.move_cap = args.move_cap if args.move_cap > 0 else None
        elif "move_cap" in file_values:
            cfg.move_cap = int(file_values["move_cap"])
        return cfg


def config_hash(values: dict) -> str:
    """Stable short hash of the resolved configuration for provenance."""
    blob = json.dumps(values, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
