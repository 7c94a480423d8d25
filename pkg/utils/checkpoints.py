"""Versioned checkpoint containers written with torch.save, and atomic JSON documents."""

import json
import logging
import os
import pickle
from pathlib import Path

import torch

from utils.errors import ValidationError


def save_checkpoint(path, kind: str, version: int, hparams: dict, state: dict, **extra) -> Path:
    """Writes {kind, version, hparams, state, ...extra}; the file is replaced atomically."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"kind": kind, "version": version, "hparams": hparams, "state": state, **extra}

    tmp = path.with_name(path.name + ".tmp")
    torch.save(payload, tmp)
    os.replace(tmp, path)

    logging.info(f"{kind} Saved checkpoint {path}")
    return path


def load_checkpoint(path, kind: str, version: int) -> dict:
    """Reads a checkpoint and checks its kind and schema version."""
    path = Path(path)
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except FileNotFoundError as e:
        raise ValidationError(f"Checkpoint {path} does not exist") from e
    except (RuntimeError, EOFError, pickle.UnpicklingError) as e:
        raise ValidationError(f"Checkpoint {path} cannot be read: {e}") from e

    if payload.get("kind") != kind:
        raise ValidationError(f"Checkpoint {path} holds a {payload.get('kind')} model, expected {kind}")
    if payload.get("version") != version:
        raise ValidationError(f"Checkpoint {path} has version {payload.get('version')}, expected {version}")
    return payload


def write_json(path, document) -> Path:
    """Writes a JSON document through a temporary file and os.replace."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(document, indent=2, sort_keys=True, default=str))
    os.replace(tmp, path)
    return path


def read_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except FileNotFoundError as e:
        raise ValidationError(f"{path} does not exist") from e
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path}:{e.lineno}: {e.msg}") from e
