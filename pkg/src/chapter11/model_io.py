"""JSON model files."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .errors import ModelValidationError
from .value_engine import Chapter11Model


def load_model(path) -> Chapter11Model:
    """Read and validate a model file; errors name the line or field at fault."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ModelValidationError(f"cannot read {path}: {err.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ModelValidationError(f"invalid JSON at line {err.lineno}, column {err.colno}: {err.msg}") from None
    return Chapter11Model.from_dict(data)


def save_model(model: Chapter11Model, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n")


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]
