"""CSV tables with a '#'-prefixed provenance header."""
from __future__ import annotations

import hashlib
import io
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import pandas as pd

from ..errors import ValidationError
from ..physics.constants import CONSTANTS_VERSION

logger = logging.getLogger("spinline.io")

FLOAT_FORMAT = "%.12g"


def config_digest(config: Mapping[str, Any]) -> str:
    """sha256 of the canonical JSON form of a configuration mapping."""
    blob = json.dumps(config, sort_keys=True, default=str, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def provenance(config: Optional[Mapping[str, Any]] = None, **extra: Any) -> Dict[str, Any]:
    meta: Dict[str, Any] = {
        "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "constants": CONSTANTS_VERSION,
    }
    if config is not None:
        meta["config_sha256"] = config_digest(config)
    meta.update(extra)
    return meta


def write_table(path: Union[str, Path], frame: pd.DataFrame, metadata: Optional[Mapping[str, Any]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        for key, value in (metadata or {}).items():
            if "\n" in str(key) or "\n" in str(value):
                raise ValidationError(f"metadata entry {key!r} spans several lines")
            f.write(f"# {key}: {value}\n")
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("wrote %s (%d rows)", path, len(frame))
    return path


def read_table(path: Union[str, Path]) -> Tuple[pd.DataFrame, Dict[str, str]]:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"table {path} does not exist")
    meta: Dict[str, str] = {}
    body = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if line.startswith("#") and not body:
                key, _, value = line[1:].strip().partition(":")
                meta[key.strip()] = value.strip()
            else:
                body.append(line)
    if not body:
        raise ValidationError(f"table {path} has no header row")
    return pd.read_csv(io.StringIO("".join(body))), meta
