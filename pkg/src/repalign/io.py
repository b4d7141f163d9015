"""File formats: embeddings, SAE artifacts, manifests, frequency tables, reports.

Binary layouts are little-endian throughout:

* embeddings: ``b"EMB1"``, ``u32 n``, ``u32 d``, then ``n*d`` float32, row-major.
* SAE artifacts: ``b"SAE1"``, ``u32 d_model``, ``u32 d_sparse``, ``u32 k``, then
  encoder weight, encoder bias, decoder weight and decoder bias as float32.

Embeddings with a ``.csv`` suffix are read as headerless numeric rows instead.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import ModelSpec
from .exceptions import (
    BadMagicError,
    ManifestError,
    MissingSaeError,
    NonFiniteError,
    TruncatedPayloadError,
    ZeroRowError,
)
from .numerics import ZERO_ROW_TOL
from .sae import SaeParams

logger = logging.getLogger(__name__)

EMB_MAGIC = b"EMB1"
SAE_MAGIC = b"SAE1"
NORM_WARN_TOL = 1e-3
_F32 = np.dtype("<f4")


# -- embeddings ---------------------------------------------------------------

def write_embeddings(path, matrix) -> None:
    m = np.ascontiguousarray(np.asarray(matrix), dtype=_F32)
    if m.ndim != 2:
        raise ValueError("embedding matrix must be 2-D")
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            for row in m:
                w.writerow([repr(float(v)) for v in row])
        return
    with open(path, "wb") as fh:
        fh.write(EMB_MAGIC + struct.pack("<II", *m.shape) + m.tobytes())


def _read_csv_matrix(path: Path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if len(rows[-1]) != len(rows[0]):
                raise ValueError(f"{path}:{lineno}: expected {len(rows[0])} columns, got {len(rows[-1])}")
    return np.asarray(rows, dtype=_F32).reshape(len(rows), len(rows[0]) if rows else 0)


def read_embeddings_raw(path) -> np.ndarray:
    """Stored values as float32, without normalization."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        m = _read_csv_matrix(path)
    else:
        blob = path.read_bytes()
        if blob[:4] != EMB_MAGIC:
            raise BadMagicError(f"{path}: expected magic {EMB_MAGIC!r}, got {blob[:4]!r}")
        if len(blob) < 12:
            raise TruncatedPayloadError(f"{path}: header is truncated")
        n, d = struct.unpack("<II", blob[4:12])
        expected = n * d * 4
        if len(blob) - 12 != expected:
            raise TruncatedPayloadError(f"{path}: payload has {len(blob) - 12} bytes, expected {expected}")
        m = np.frombuffer(blob, dtype=_F32, offset=12).reshape(n, d).copy()
    if not np.isfinite(m).all():
        raise NonFiniteError(f"{path}: payload contains NaN or Inf")
    return m


def load_embeddings(path, return_stats: bool = False):
    """Read an embedding file and scale each row to unit norm.

    Rows whose stored norm differs from 1 by more than ``1e-3`` are counted
    and logged. With ``return_stats`` the count is returned alongside.
    """
    m = read_embeddings_raw(path).astype(np.float64)
    norms = np.linalg.norm(m, axis=1)
    bad = np.flatnonzero(norms < ZERO_ROW_TOL)
    if bad.size:
        raise ZeroRowError(bad[0], f"{path}: row {bad[0]} has zero norm")
    deviating = int(np.sum(np.abs(norms - 1.0) > NORM_WARN_TOL))
    if deviating:
        logger.warning("%s: %d rows were not unit norm before loading", path, deviating)
    m = m / norms[:, None]
    return (m, deviating) if return_stats else m


# -- SAE artifacts --------------------------------------------------------------

def write_sae(path, params: SaeParams, k: int) -> None:
    header = SAE_MAGIC + struct.pack("<III", params.d_model, params.d_sparse, int(k))
    body = b"".join(np.ascontiguousarray(a, dtype=_F32).tobytes() for a in params.arrays())
    Path(path).write_bytes(header + body)


def read_sae(path) -> tuple[SaeParams, int]:
    path = Path(path)
    blob = path.read_bytes()
    if blob[:4] != SAE_MAGIC:
        raise BadMagicError(f"{path}: expected magic {SAE_MAGIC!r}, got {blob[:4]!r}")
    if len(blob) < 16:
        raise TruncatedPayloadError(f"{path}: header is truncated")
    d_model, d_sparse, k = struct.unpack("<III", blob[4:16])
    shapes = [(d_sparse, d_model), (d_sparse,), (d_model, d_sparse), (d_model,)]
    sizes = [int(np.prod(s)) for s in shapes]
    if len(blob) - 16 != 4 * sum(sizes):
        raise TruncatedPayloadError(f"{path}: payload has {len(blob) - 16} bytes, expected {4 * sum(sizes)}")
    flat = np.frombuffer(blob, dtype=_F32, offset=16)
    if not np.isfinite(flat).all():
        raise NonFiniteError(f"{path}: payload contains NaN or Inf")
    arrays, pos = [], 0
    for shape, size in zip(shapes, sizes):
        arrays.append(flat[pos:pos + size].reshape(shape).astype(np.float32))
        pos += size
    return SaeParams(*arrays), int(k)


# -- manifests and side tables -------------------------------------------------

@dataclass
class ModelEntry:
    name: str
    embedding_path: Path
    sae_k: int | None = None
    sae_path: Path | None = None
    spec: ModelSpec | None = None


@dataclass
class Manifest:
    models: list[ModelEntry]
    dataset_name: str = ""
    frequency_table_path: Path | None = None
    row_subset_path: Path | None = None
    path: Path | None = None
    extra: dict = field(default_factory=dict)

    def model(self, name: str) -> ModelEntry:
        for m in self.models:
            if m.name == name:
                return m
        raise ManifestError(f"no model named {name!r} in manifest")

    def sae_path(self, entry: ModelEntry) -> Path:
        if entry.sae_path is None:
            raise MissingSaeError(f"model {entry.name!r} has no sae_path in the manifest")
        if not entry.sae_path.exists():
            raise MissingSaeError(f"SAE artifact for {entry.name!r} not found: {entry.sae_path}")
        return entry.sae_path


def _resolve(base: Path, value) -> Path | None:
    if value in (None, ""):
        return None
    p = Path(value)
    return p if p.is_absolute() else base / p


def load_manifest(path, require_files: bool = True) -> Manifest:
    """Parse a manifest JSON file; relative paths resolve against its directory."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("models"), list):
        raise ManifestError(f"{path}: expected an object with a 'models' list")
    base = path.parent
    models, seen = [], set()
    for i, raw in enumerate(doc["models"]):
        where = f"{path}: models[{i}]"
        if "name" not in raw or "embedding_path" not in raw:
            raise ManifestError(f"{where}: 'name' and 'embedding_path' are required")
        name = str(raw["name"])
        if name in seen:
            raise ManifestError(f"{where}: duplicate model name {name!r}")
        seen.add(name)
        try:
            spec = ModelSpec.from_dict({"name": name, **raw["spec"]}) if raw.get("spec") else None
        except (KeyError, ValueError, TypeError) as exc:
            raise ManifestError(f"{where}: bad spec: {exc}") from None
        models.append(ModelEntry(
            name=name,
            embedding_path=_resolve(base, raw["embedding_path"]),
            sae_k=int(raw["sae_k"]) if raw.get("sae_k") is not None else None,
            sae_path=_resolve(base, raw.get("sae_path")),
            spec=spec,
        ))
    manifest = Manifest(
        models=models,
        dataset_name=str(doc.get("dataset_name", "")),
        frequency_table_path=_resolve(base, doc.get("frequency_table_path")),
        row_subset_path=_resolve(base, doc.get("row_subset_path")),
        path=path,
    )
    if require_files:
        needed = [(m.name, m.embedding_path) for m in models]
        needed += [("frequency_table_path", manifest.frequency_table_path),
                   ("row_subset_path", manifest.row_subset_path)]
        for label, p in needed:
            if p is not None and not p.exists():
                raise ManifestError(f"{path}: file for {label!r} not found: {p}")
    return manifest


def write_manifest(path, manifest_doc: dict) -> None:
    Path(path).write_text(json.dumps(manifest_doc, indent=2, sort_keys=True) + "\n")


def read_frequency_table(path) -> tuple[list[str], np.ndarray]:
    """Tab-separated ``token<TAB>relative_frequency`` rows, descending by frequency."""
    path = Path(path)
    tokens, freqs = [], []
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n\r")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 tab-separated fields")
            try:
                value = float(parts[1])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad frequency {parts[1]!r}") from None
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{path}:{lineno}: frequency must be positive, got {value}")
            if freqs and value > freqs[-1]:
                raise ValueError(f"{path}:{lineno}: frequencies must be sorted in descending order")
            tokens.append(parts[0])
            freqs.append(value)
    return tokens, np.asarray(freqs)


def write_frequency_table(path, tokens, freqs) -> None:
    with open(path, "w", newline="") as fh:
        for t, f in zip(tokens, freqs):
            fh.write(f"{t}\t{float(f)!r}\n")


def read_row_subset(path) -> np.ndarray:
    """One non-negative row index per line."""
    path = Path(path)
    out = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            idx = int(line)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: not an integer: {line!r}") from None
        if idx < 0:
            raise ValueError(f"{path}:{lineno}: negative row index {idx}")
        out.append(idx)
    return np.asarray(out, dtype=np.int64)


# -- reports ------------------------------------------------------------------------

def config_hash(config: dict) -> str:
    text = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()


def reproducibility_block(seed, config: dict) -> dict:
    return {"seed": seed, "config_sha256": config_hash(config), "version": __version__}


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_csv(path, rows: list[dict], columns: list[str] | None = None) -> None:
    columns = columns or (list(rows[0]) if rows else [])
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({c: _cell(row.get(c, "")) for c in columns})


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_report(out_dir, stem: str, rows: list[dict], results: dict, seed, config: dict,
                 columns: list[str] | None = None) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` (long format) and ``<stem>.json`` with a reproducibility block."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{stem}.csv"
    json_path = out_dir / f"{stem}.json"
    write_csv(csv_path, rows, columns)
    write_json(json_path, {"reproducibility": reproducibility_block(seed, config),
                           "config": config, "results": results})
    return csv_path, json_path
