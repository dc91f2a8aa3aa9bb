"""
Instance and certificate files.

Both are `.npz` containers whose `header` entry is a JSON document (family tag, dims, seed,
constants or solve metadata) next to the dense payload arrays. Instances also get a
`<name>.manifest.json` provenance file.
"""

from __future__ import annotations

import hashlib
import json
import logging
from datetime import UTC, datetime
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, Field

from . import __version__
from .core.schemas import SolveReport, StationaryCertificate
from .problems import Instance, instance_from_arrays

logger = logging.getLogger(__name__)

HEADER_KEY = "header"


def _write_npz(path: Path, header: dict[str, Any], arrays: dict[str, np.ndarray]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {HEADER_KEY: np.array(json.dumps(header, sort_keys=True))}
    payload.update({k: np.asarray(v) for k, v in arrays.items()})
    with path.open("wb") as fh:
        np.savez_compressed(fh, **payload)  # type: ignore[arg-type]
    return path


def _read_npz(path: Path) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    with np.load(path, allow_pickle=False) as data:
        if HEADER_KEY not in data.files:
            raise ValueError(f"{path}: missing '{HEADER_KEY}' entry")
        header = json.loads(str(data[HEADER_KEY]))
        arrays = {k: data[k] for k in data.files if k != HEADER_KEY}
    return header, arrays


def manifest_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".manifest.json")


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------


def save_instance(path: str | Path, instance: Instance) -> Path:
    path = Path(path)
    problem = instance.problem
    header = instance.header() | {
        "kind": "instance",
        "constants": {"m": problem.m, "L_x": problem.L_x, "L_y": problem.L_y, "D_y": problem.D_y},
    }
    _write_npz(path, header, instance.arrays())
    manifest = {
        **header,
        "file": path.name,
        "sha256": hashlib.sha256(path.read_bytes()).hexdigest(),
        "created": datetime.now(UTC).isoformat(),
        "aipp_minmax_version": __version__,
    }
    manifest_path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    logger.info("saved %s instance to %s", instance.family, path)
    return path


def load_instance(path: str | Path) -> Instance:
    header, arrays = _read_npz(Path(path))
    if header.get("kind") != "instance":
        raise ValueError(f"{path} is not an instance file (kind={header.get('kind')!r})")
    return instance_from_arrays(header, arrays)


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------


class CertificateMeta(BaseModel):
    """Solve metadata stored alongside a certificate; enough to re-verify it independently."""

    family: str
    method: str
    dims: list[int]
    xi: float = Field(gt=0.0, description="Smoothing parameter used by the solve")
    rho_x: float = Field(gt=0.0, description="Requested x-tolerance")
    rho_x_abs: float = Field(gt=0.0, description="Absolute ||u_bar|| bound after relative scaling")
    rho_y: float = Field(gt=0.0)
    eta: float | None = None
    penalty_c: float | None = None
    relative: bool = True
    report: SolveReport | None = None


def save_certificate(
    path: str | Path,
    cert: StationaryCertificate,
    meta: CertificateMeta,
    *,
    y0: np.ndarray,
    constraint: tuple[np.ndarray, np.ndarray] | None = None,
) -> Path:
    arrays: dict[str, np.ndarray] = {
        "u_bar": cert.u_bar,
        "v_bar": cert.v_bar,
        "x_bar": cert.x_bar,
        "y_bar": cert.y_bar,
        "y0": np.asarray(y0, dtype=float),
    }
    if cert.r_bar is not None:
        arrays["r_bar"] = cert.r_bar
    if constraint is not None:
        arrays["A"] = np.asarray(constraint[0], dtype=float)
        arrays["b"] = np.asarray(constraint[1], dtype=float)
    header = {"kind": "certificate", **meta.model_dump(mode="json")}
    return _write_npz(Path(path), header, arrays)


def load_certificate(
    path: str | Path,
) -> tuple[StationaryCertificate, CertificateMeta, dict[str, np.ndarray]]:
    """(certificate, metadata, extra arrays such as y0, A and b)."""
    header, arrays = _read_npz(Path(path))
    if header.pop("kind", None) != "certificate":
        raise ValueError(f"{path} is not a certificate file")
    meta = CertificateMeta.model_validate(header)
    extras = {k: arrays[k] for k in ("y0", "A", "b") if k in arrays}
    cert = StationaryCertificate.from_vectors(
        arrays["u_bar"],
        arrays["v_bar"],
        arrays["x_bar"],
        arrays["y_bar"],
        r_bar=arrays.get("r_bar"),
        feas_violation=None,
    )
    return cert, meta, extras
