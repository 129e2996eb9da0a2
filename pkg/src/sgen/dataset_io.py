"""Dataset persistence: a JSON manifest plus one binary geometry blob per shape.

Blob layout (little-endian): magic ``SGPC``, u32 version, u32 n, u32 m,
n*3 float32 points, n uint8 label indices, m uint8 existence, m*m uint8
adjacency. Writes are atomic (temp file + rename). Alongside the full
manifest, per-split manifests are written under ``train/`` and ``test/`` so a
split can be loaded by pointing at its subdirectory.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .core import (
    DatasetManifest,
    ManifestEntry,
    PointCloud,
    ShapeRecord,
    StructureGraph,
    validate_structure_graph,
)
from .errors import SgenError

BLOB_MAGIC = b"SGPC"
BLOB_VERSION = 1
MANIFEST_SCHEMA_VERSION = 1


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise SgenError("IO_ERROR", str(exc)) from exc


def encode_blob(record: ShapeRecord) -> bytes:
    cloud, graph = record.cloud, record.graph
    n, m = cloud.n, graph.m
    head = BLOB_MAGIC + struct.pack("<III", BLOB_VERSION, n, m)
    body = (
        cloud.points.astype("<f4").tobytes()
        + graph.label_indices.astype(np.uint8).tobytes()
        + graph.existence.astype(np.uint8).tobytes()
        + graph.adjacency.astype(np.uint8).tobytes()
    )
    return head + body


def decode_blob(data: bytes, shape_id: str, structure_code: str) -> ShapeRecord:
    if len(data) < 16 or data[:4] != BLOB_MAGIC:
        raise SgenError("SCHEMA_VERSION_MISMATCH", f"bad magic in blob for {shape_id}")
    version, n, m = struct.unpack("<III", data[4:16])
    if version != BLOB_VERSION:
        raise SgenError("SCHEMA_VERSION_MISMATCH", f"blob version {version} != {BLOB_VERSION}")
    expected = 16 + n * 3 * 4 + n + m + m * m
    if len(data) != expected:
        raise SgenError(
            "CORRUPT_RECORD", f"blob for {shape_id}: {len(data)} bytes, expected {expected}"
        )
    off = 16
    points = np.frombuffer(data, dtype="<f4", count=n * 3, offset=off).reshape(n, 3).copy()
    off += n * 12
    idx = np.frombuffer(data, dtype=np.uint8, count=n, offset=off).copy()
    off += n
    existence = np.frombuffer(data, dtype=np.uint8, count=m, offset=off).copy()
    off += m
    adjacency = (
        np.frombuffer(data, dtype=np.uint8, count=m * m, offset=off).reshape(m, m).copy()
    )
    if np.any(idx >= m):
        raise SgenError("CORRUPT_RECORD", f"blob for {shape_id}: label index out of range")
    labels = np.zeros((n, m), dtype=np.uint8)
    labels[np.arange(n), idx] = 1
    graph = StructureGraph(labels, existence, adjacency)
    return ShapeRecord(PointCloud(points), graph, structure_code, shape_id)


def _manifest_dict(manifest: DatasetManifest, entries: list[ManifestEntry]) -> dict:
    return {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "category": manifest.category,
        "m": manifest.m,
        "records": [
            {
                "shape_id": e.shape_id,
                "structure_code": e.structure_code,
                "split": e.split,
                "blob": e.blob,
            }
            for e in entries
        ],
    }


def save_dataset(manifest: DatasetManifest, records: list[ShapeRecord], path: str | Path) -> None:
    """Write manifest.json, per-split manifests and one blob per record."""
    path = Path(path)
    by_id = {r.shape_id: r for r in records}
    if set(by_id) != {e.shape_id for e in manifest.entries}:
        raise SgenError("DATASET_INVALID", "manifest entries and records disagree")
    for record in records:
        result = validate_structure_graph(record.graph, record.cloud.n)
        if not result:
            raise SgenError("DATASET_INVALID", f"{record.shape_id}: {result.error}")
    for entry in manifest.entries:
        _atomic_write(path / entry.blob, encode_blob(by_id[entry.shape_id]))
    payload = json.dumps(_manifest_dict(manifest, manifest.entries), indent=1).encode()
    _atomic_write(path / "manifest.json", payload)
    for split in ("train", "test"):
        sub = [
            ManifestEntry(e.shape_id, e.structure_code, e.split, "../" + e.blob)
            for e in manifest.entries
            if e.split == split
        ]
        data = json.dumps(_manifest_dict(manifest, sub), indent=1).encode()
        _atomic_write(path / split / "manifest.json", data)


def load_dataset(path: str | Path) -> tuple[DatasetManifest, list[ShapeRecord]]:
    """Load a dataset directory (or a split subdirectory) written by save_dataset."""
    path = Path(path)
    manifest_path = path / "manifest.json"
    if not manifest_path.is_file():
        raise SgenError("DATASET_INVALID", f"no manifest.json under {path}")
    try:
        raw = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SgenError("IO_ERROR", f"cannot read {manifest_path}: {exc}") from exc
    if raw.get("schema_version") != MANIFEST_SCHEMA_VERSION:
        raise SgenError(
            "SCHEMA_VERSION_MISMATCH", f"manifest schema {raw.get('schema_version')}"
        )
    manifest = DatasetManifest(category=raw["category"], m=int(raw["m"]))
    records: list[ShapeRecord] = []
    for item in raw["records"]:
        entry = ManifestEntry(
            item["shape_id"], item["structure_code"], item["split"], item["blob"]
        )
        manifest.entries.append(entry)
        blob_path = path / entry.blob
        try:
            data = blob_path.read_bytes()
        except OSError as exc:
            raise SgenError("IO_ERROR", f"cannot read {blob_path}: {exc}") from exc
        record = decode_blob(data, entry.shape_id, entry.structure_code)
        if record.graph.m != manifest.m:
            raise SgenError("CORRUPT_RECORD", f"{entry.shape_id}: m mismatch with manifest")
        result = validate_structure_graph(record.graph, record.cloud.n)
        if not result:
            raise SgenError("CORRUPT_RECORD", f"{entry.shape_id}: {result.error}")
        records.append(record)
    return manifest, records
