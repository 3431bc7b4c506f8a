"""Run configuration files and per-output run sidecars."""

import logging
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field

from ..util.errors import PersistError
from ..util.hashing import content_hash
from ..util.schema import RunConfig
from .framing import FORMAT_VERSION, PathLike, check_version, read_json, write_json

logger = logging.getLogger(__name__)

SIDECAR_SUFFIX = ".run.json"

# Format version of every file kind the toolkit writes.
FORMAT_VERSIONS = {"rec": 1, "gt.json": 1, "ckpt": 1, "wds": 1, "spikes.json": 1, "run.json": 1}


class RunSidecar(BaseModel):
    """Everything needed to re-run the command that produced an output."""
    model_config = ConfigDict(extra="forbid")

    format_version: int = FORMAT_VERSION
    command: str
    config: RunConfig
    seed: int
    config_hash: str = ""
    inputs: Dict[str, str] = Field(default_factory=dict)
    outputs: List[str] = Field(default_factory=list)
    format_versions: Dict[str, int] = Field(default_factory=lambda: dict(FORMAT_VERSIONS))
    options: Dict[str, Any] = Field(default_factory=dict)
    created_at: str = ""
    wall_clock_s: float = 0.0


def load_run_config(path: Optional[PathLike]) -> RunConfig:
    """Load a YAML or JSON run config; a run sidecar yields the config it recorded.

    Missing sections and keys take their defaults; unknown keys are rejected.
    """
    if path is None:
        return RunConfig()
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = yaml.safe_load(f)
    except FileNotFoundError:
        raise
    except yaml.YAMLError as e:
        raise PersistError(f"Config is not valid YAML or JSON: {e}", path=str(path)) from e
    except OSError as e:
        raise PersistError(f"Cannot read config: {e.strerror or e}", path=str(path)) from e
    if doc is None:
        return RunConfig()
    if not isinstance(doc, dict):
        raise PersistError("Config must be a mapping", path=str(path), json_path="$")
    if "command" in doc and "config" in doc:
        check_version(doc.get("format_version"), path)
        doc = doc["config"]
    else:
        doc = dict(doc)
        if "format_version" in doc:
            check_version(doc.pop("format_version"), path)
    return RunConfig.model_validate(doc)


def save_run_config(path: PathLike, cfg: RunConfig) -> None:
    write_json(path, cfg.model_dump(mode="json"), indent=2)


def with_overrides(cfg: RunConfig, overrides: Mapping[str, Mapping[str, Any]]) -> RunConfig:
    """Apply ``{section: {key: value}}`` overrides, ignoring None values, and re-validate."""
    doc = cfg.model_dump()
    for section, values in overrides.items():
        for key, value in values.items():
            if value is not None:
                doc[section][key] = value
    return RunConfig.model_validate(doc)


def sidecar_path(output: PathLike) -> Path:
    return Path(f"{output}{SIDECAR_SUFFIX}")


def write_sidecar(output: PathLike, command: str, cfg: RunConfig, seed: int,
                  inputs: Optional[Dict[str, str]] = None, outputs: Optional[List[str]] = None,
                  options: Optional[Dict[str, Any]] = None, started: Optional[float] = None) -> Path:
    sidecar = RunSidecar(
        command=command,
        config=cfg,
        seed=seed,
        config_hash=content_hash(cfg.model_dump(mode="json")),
        inputs={k: str(v) for k, v in (inputs or {}).items()},
        outputs=[str(o) for o in (outputs or [output])],
        options=options or {},
        created_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        wall_clock_s=round(time.perf_counter() - started, 6) if started is not None else 0.0,
    )
    path = sidecar_path(output)
    doc = sidecar.model_dump(mode="json")
    doc.pop("format_version")
    write_json(path, doc, indent=2)
    logger.debug(f"Wrote sidecar {path}")
    return path


def read_sidecar(path: PathLike) -> RunSidecar:
    return RunSidecar.model_validate(read_json(path))
