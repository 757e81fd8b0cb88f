"""Bit-exact file containers for embeddings and patch grids, plus pooling.

Two little-endian binary formats are defined here and nowhere else:

VEMB (one embedding matrix per file)::

    magic   4 bytes  b"VEMB"
    version u32      1
    n       u32      row count
    L       u32      embedding dimension
    count   u32      id count, must equal n
    ids     n ×      (u16 byte length + UTF-8 bytes)
    data    n×L ×    float32, row-major

VPGR (a stream of per-image patch grids)::

    magic   4 bytes  b"VPGR"
    version u32      1
    count   u32      image count
    images  count ×  (u16 id length + UTF-8 id,
                      u16 rows, u16 cols, u32 L,
                      rows·cols·L × float32)

Every multi-byte integer is little-endian.  Readers account for every byte:
redundant counts, per-section size checks, and a trailing-bytes check make any
single corrupted header field detectable.

Sample metadata and scores travel as RFC 4180 CSV (comma separated, first row
header, UTF-8).  The only missing-value marker is the empty string.  Sample
identity is the exact id string across all files; no trimming or case folding.
"""

from __future__ import annotations

import csv
import io
import math
import struct
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, TextIO, Union

import numpy as np

from .errors import (
    DuplicateIdError,
    FormatError,
    MissingIdColumnError,
    NonFiniteError,
    ScoreOutOfRangeError,
    UnknownScoreIdError,
)

VEMB_MAGIC = b"VEMB"
VPGR_MAGIC = b"VPGR"
FORMAT_VERSION = 1

ID_COLUMN = "sample_id"

#: header cells may carry an optional trailing tag, e.g. "grades:intrinsic";
#: the tag is stripped from the feature name and reported separately, it has
#: no effect on any computation.
FEATURE_TAGS = ("intrinsic", "extrinsic")

FeatureValue = Union[str, float]


@dataclass(frozen=True)
class PatchGrid:
    """One image's rows×cols grid of patch embeddings of dimension L."""

    sample_id: str
    values: np.ndarray  # (rows, cols, dim) float32

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.dtype != np.float32:
            v = v.astype(np.float64)
        object.__setattr__(self, "values", v)
        if v.ndim != 3:
            raise ValueError("patch grid values must be rows×cols×dim")
        if min(v.shape) < 1:
            raise ValueError("patch grid axes must all be ≥ 1")
        if not np.all(np.isfinite(v)):
            raise NonFiniteError(f"patch grid {self.sample_id!r} contains NaN/Inf")

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def dim(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class EmbeddingMatrix:
    """n sample embeddings of dimension L with stable, unique sample ids."""

    ids: tuple[str, ...]
    data: np.ndarray  # (n, L) float32

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(self.ids))
        # the file container stores float32; in memory, float64 callers keep
        # their precision (the write path quantizes)
        data = np.asarray(self.data)
        if data.dtype != np.float32:
            data = data.astype(np.float64)
        object.__setattr__(self, "data", data)
        if self.data.ndim != 2:
            raise ValueError("embedding data must be a 2-D matrix")
        if len(self.ids) != self.data.shape[0]:
            raise ValueError("id count does not match row count")
        if len(set(self.ids)) != len(self.ids):
            dupes = sorted({i for i in self.ids if self.ids.count(i) > 1})
            raise DuplicateIdError(f"duplicate sample ids: {', '.join(dupes)}")
        if not np.all(np.isfinite(self.data)):
            raise NonFiniteError("embedding matrix contains NaN/Inf")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def row(self, sample_id: str) -> np.ndarray:
        return self.data[self.ids.index(sample_id)]


@dataclass(frozen=True)
class SampleRecord:
    """Per-sample metadata feature map plus an optional score in [0, 1]."""

    sample_id: str
    features: dict[str, FeatureValue] = field(default_factory=dict)
    score: float | None = None

    def __post_init__(self):
        if self.score is not None and not (0.0 <= self.score <= 1.0):
            raise ScoreOutOfRangeError(
                f"score {self.score} for {self.sample_id!r} outside [0, 1]"
            )
        for name, value in self.features.items():
            if isinstance(value, float) and not math.isfinite(value):
                raise NonFiniteError(
                    f"feature {name!r} of {self.sample_id!r} is not finite"
                )


def pool_patch_grid(grid: PatchGrid) -> np.ndarray:
    """Average all patches of a grid into a single length-L vector.

    Accumulates in float64 regardless of storage precision; a mean over
    thousands of float32 patches would otherwise lose digits.
    """
    flat = grid.values.reshape(-1, grid.dim).astype(np.float64)
    pooled = flat.mean(axis=0)
    if not np.all(np.isfinite(pooled)):
        raise NonFiniteError(f"pooled vector for {grid.sample_id!r} is not finite")
    return pooled


# ---------------------------------------------------------------------------
# binary readers / writers
# ---------------------------------------------------------------------------


Source = Union[str, Path, BinaryIO]
TextSource = Union[str, Path, TextIO]


def _label(source) -> str:
    if hasattr(source, "read"):
        return str(getattr(source, "name", "<stream>"))
    return Path(source).name


@contextmanager
def _as_binary(source: Source):
    if hasattr(source, "read"):
        yield source
    else:
        with open(source, "rb") as fh:
            yield fh


@contextmanager
def _as_text(source: TextSource):
    if hasattr(source, "read"):
        yield source
    else:
        with open(source, newline="", encoding="utf-8") as fh:
            yield fh


class _Cursor:
    """Reader over a binary stream that raises FormatError instead of over-reading."""

    def __init__(self, fh: BinaryIO, label: str):
        self.fh = fh
        self.pos = 0
        self.label = label

    _CHUNK = 16 << 20  # bound single reads so corrupt length fields cannot
    # trigger giant allocations

    def take(self, count: int, what: str) -> bytes:
        parts = []
        got = 0
        while got < count:
            chunk = self.fh.read(min(count - got, self._CHUNK))
            if not chunk:
                raise FormatError(
                    f"{self.label}: truncated while reading {what} "
                    f"(need {count} bytes at offset {self.pos}, got {got})"
                )
            parts.append(chunk)
            got += len(chunk)
        self.pos += count
        return b"".join(parts) if len(parts) != 1 else parts[0]

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def utf8(self, length: int, what: str) -> str:
        raw = self.take(length, what)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{self.label}: {what} is not valid UTF-8") from exc

    def expect_eof(self):
        if self.fh.read(1) != b"":
            raise FormatError(f"{self.label}: trailing bytes after payload")


def write_embeddings(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Serialize an EmbeddingMatrix to a VEMB file."""
    data = np.ascontiguousarray(matrix.data, dtype="<f4")
    out = io.BytesIO()
    out.write(VEMB_MAGIC)
    out.write(struct.pack("<III", FORMAT_VERSION, matrix.n, matrix.dim))
    out.write(struct.pack("<I", len(matrix.ids)))
    for sample_id in matrix.ids:
        raw = sample_id.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ValueError(f"sample id too long: {sample_id[:32]!r}…")
        out.write(struct.pack("<H", len(raw)))
        out.write(raw)
    out.write(data.tobytes())
    Path(path).write_bytes(out.getvalue())


def read_embeddings(source: Source) -> EmbeddingMatrix:
    """Parse a VEMB file, validating every length field against the payload."""
    with _as_binary(source) as fh:
        cur = _Cursor(fh, f"VEMB {_label(source)}")

        magic = cur.take(4, "magic")
        if magic != VEMB_MAGIC:
            raise FormatError(f"{cur.label}: bad magic {magic!r}")
        version = cur.u32("version")
        if version != FORMAT_VERSION:
            raise FormatError(f"{cur.label}: unsupported version {version}")
        n = cur.u32("row count")
        dim = cur.u32("dimension")
        if n < 1 or dim < 1:
            raise FormatError(f"{cur.label}: empty matrix (n={n}, L={dim})")
        id_count = cur.u32("id count")
        if id_count != n:
            raise FormatError(f"{cur.label}: id count {id_count} does not match n={n}")
        ids = []
        for i in range(n):
            length = cur.u16(f"id length #{i}")
            ids.append(cur.utf8(length, f"id #{i}"))
        payload = cur.take(n * dim * 4, "float payload")
        cur.expect_eof()

    data = np.frombuffer(payload, dtype="<f4").reshape(n, dim).astype(np.float32)
    return EmbeddingMatrix(ids=tuple(ids), data=data)


def write_patch_grids(grids: Iterable[PatchGrid], path: str | Path) -> None:
    """Serialize patch grids to a VPGR file (one pass, count written first)."""
    grids = list(grids)
    out = io.BytesIO()
    out.write(VPGR_MAGIC)
    out.write(struct.pack("<II", FORMAT_VERSION, len(grids)))
    for grid in grids:
        raw = grid.sample_id.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ValueError(f"sample id too long: {grid.sample_id[:32]!r}…")
        if grid.rows > 0xFFFF or grid.cols > 0xFFFF:
            raise ValueError(f"grid {grid.sample_id!r} exceeds u16 rows/cols")
        out.write(struct.pack("<H", len(raw)))
        out.write(raw)
        out.write(struct.pack("<HHI", grid.rows, grid.cols, grid.dim))
        out.write(np.ascontiguousarray(grid.values, dtype="<f4").tobytes())
    Path(path).write_bytes(out.getvalue())


def read_patch_grids(source: Source) -> Iterator[PatchGrid]:
    """Stream PatchGrids out of a VPGR file.

    Single-consumer iterator; one image at a time is resident, so large
    corpora never fully load.  Any malformed header or short payload raises
    FormatError naming the image index.
    """
    with _as_binary(source) as fh:
        cur = _Cursor(fh, f"VPGR {_label(source)}")

        magic = cur.take(4, "magic")
        if magic != VPGR_MAGIC:
            raise FormatError(f"{cur.label}: bad magic {magic!r}")
        version = cur.u32("version")
        if version != FORMAT_VERSION:
            raise FormatError(f"{cur.label}: unsupported version {version}")
        count = cur.u32("image count")

        for i in range(count):
            id_len = cur.u16(f"image {i}: id length")
            sample_id = cur.utf8(id_len, f"image {i}: id")
            rows = cur.u16(f"image {i}: rows")
            cols = cur.u16(f"image {i}: cols")
            dim = cur.u32(f"image {i}: dimension")
            if rows < 1 or cols < 1 or dim < 1:
                raise FormatError(
                    f"{cur.label}: image {i} has empty shape {rows}×{cols}×{dim}"
                )
            payload = cur.take(rows * cols * dim * 4, f"image {i}: tensor payload")
            values = (
                np.frombuffer(payload, dtype="<f4")
                .reshape(rows, cols, dim)
                .astype(np.float32)
            )
            if not np.all(np.isfinite(values)):
                raise NonFiniteError(
                    f"{cur.label}: image {i} ({sample_id!r}) contains NaN/Inf"
                )
            yield PatchGrid(sample_id=sample_id, values=values)
        cur.expect_eof()


# ---------------------------------------------------------------------------
# CSV records
# ---------------------------------------------------------------------------


def _split_feature_tag(header_cell: str) -> tuple[str, str | None]:
    if ":" in header_cell:
        name, _, tag = header_cell.rpartition(":")
        if tag in FEATURE_TAGS:
            return name, tag
    return header_cell, None


def _parse_number(cell: str) -> float | None:
    try:
        return float(cell)
    except ValueError:
        return None


def read_scores(source: TextSource) -> dict[str, float]:
    """Read a two-column sample_id,score CSV into a dict.

    The id column must be named ``sample_id``; the single remaining column is
    the score, whatever its header says (``f1`` by convention).
    """
    path = _label(source)
    with _as_text(source) as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingIdColumnError(f"{path}: empty scores file") from None
        if ID_COLUMN not in header:
            raise MissingIdColumnError(f"{path}: no {ID_COLUMN} column")
        if len(header) != 2:
            raise MissingIdColumnError(
                f"{path}: scores file needs exactly two columns, got {len(header)}"
            )
        id_idx = header.index(ID_COLUMN)
        score_idx = 1 - id_idx
        scores: dict[str, float] = {}
        for row in reader:
            if not row or all(cell == "" for cell in row):
                continue
            sample_id = row[id_idx]
            value = _parse_number(row[score_idx])
            if value is None or not math.isfinite(value):
                raise ScoreOutOfRangeError(
                    f"{path}: score {row[score_idx]!r} for {sample_id!r} is not a finite number"
                )
            if not (0.0 <= value <= 1.0):
                raise ScoreOutOfRangeError(
                    f"{path}: score {value} for {sample_id!r} outside [0, 1]"
                )
            if sample_id in scores:
                raise DuplicateIdError(f"{path}: duplicate score row for {sample_id!r}")
            scores[sample_id] = value
    return scores


def read_records(
    metadata_source: TextSource, scores_source: TextSource | None = None
) -> list[SampleRecord]:
    """Read sample metadata (and optionally scores) into SampleRecords.

    A column is numeric iff every non-empty cell parses as a real number,
    otherwise categorical.  Empty cells are missing values.  Score rows whose
    id is absent from the metadata raise UnknownScoreIdError.
    """
    metadata_path = _label(metadata_source)
    with _as_text(metadata_source) as fh:
        reader = csv.reader(fh)
        try:
            raw_header = next(reader)
        except StopIteration:
            raise MissingIdColumnError(f"{metadata_path}: empty metadata file") from None
        names = [_split_feature_tag(cell)[0] for cell in raw_header]
        if ID_COLUMN not in names:
            raise MissingIdColumnError(f"{metadata_path}: no {ID_COLUMN} column")
        id_idx = names.index(ID_COLUMN)
        rows = [row for row in reader if row and not all(c == "" for c in row)]

    feature_cols = [i for i in range(len(names)) if i != id_idx]
    numeric: dict[int, bool] = {}
    for col in feature_cols:
        cells = [row[col] for row in rows if col < len(row) and row[col] != ""]
        numeric[col] = bool(cells) and all(_parse_number(c) is not None for c in cells)

    ids_seen: set[str] = set()
    records: list[SampleRecord] = []
    for row in rows:
        if id_idx >= len(row) or row[id_idx] == "":
            raise MissingIdColumnError(f"{metadata_path}: row with empty {ID_COLUMN}")
        sample_id = row[id_idx]
        if sample_id in ids_seen:
            raise DuplicateIdError(f"{metadata_path}: duplicate row for {sample_id!r}")
        ids_seen.add(sample_id)
        features: dict[str, FeatureValue] = {}
        for col in feature_cols:
            cell = row[col] if col < len(row) else ""
            if cell == "":
                continue
            if numeric[col]:
                value = _parse_number(cell)
                if value is None or not math.isfinite(value):
                    raise NonFiniteError(
                        f"{metadata_path}: non-finite value {cell!r} in column {names[col]!r}"
                    )
                features[names[col]] = value
            else:
                features[names[col]] = cell
        records.append(SampleRecord(sample_id=sample_id, features=features))

    if scores_source is not None:
        scores = read_scores(scores_source)
        unknown = sorted(set(scores) - ids_seen)
        if unknown:
            raise UnknownScoreIdError(
                f"score ids absent from metadata: {', '.join(unknown)}"
            )
        records = [
            SampleRecord(r.sample_id, r.features, scores.get(r.sample_id))
            for r in records
        ]
    return records


def read_feature_tags(metadata_source: TextSource) -> dict[str, str]:
    """Return the optional intrinsic/extrinsic tag per feature header cell."""
    with _as_text(metadata_source) as fh:
        header = next(csv.reader(fh), [])
    tags = {}
    for cell in header:
        name, tag = _split_feature_tag(cell)
        if tag is not None and name != ID_COLUMN:
            tags[name] = tag
    return tags


def read_catalog(path: str | Path) -> list[SampleRecord]:
    """Read a training-catalog manifest: metadata CSV or line-delimited JSON."""
    path = Path(path)
    if path.suffix.lower() in (".jsonl", ".ndjson"):
        return parse_catalog_jsonl(path.read_text(encoding="utf-8"), label=str(path))
    return read_records(path)


def parse_catalog_jsonl(text: str, label: str = "catalog") -> list[SampleRecord]:
    """Parse line-delimited JSON records with a sample_id field."""
    import json

    records = []
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{label}:{lineno}: invalid JSON record") from exc
        if not isinstance(obj, dict) or ID_COLUMN not in obj:
            raise MissingIdColumnError(f"{label}:{lineno}: record without {ID_COLUMN}")
        sample_id = str(obj[ID_COLUMN])
        if sample_id in seen:
            raise DuplicateIdError(f"{label}:{lineno}: duplicate record {sample_id!r}")
        seen.add(sample_id)
        features: dict[str, FeatureValue] = {}
        for key, value in obj.items():
            if key in (ID_COLUMN, "score"):
                continue
            if isinstance(value, bool) or value is None:
                value = "" if value is None else str(value).lower()
            if isinstance(value, (int, float)):
                features[key] = float(value)
            elif value != "":
                features[key] = str(value)
        score = obj.get("score")
        records.append(
            SampleRecord(sample_id, features, None if score is None else float(score))
        )
    return records
