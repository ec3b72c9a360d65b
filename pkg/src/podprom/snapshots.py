"""Snapshot containers, quadrature weights and the PSNAP on-disk format."""

from __future__ import annotations

import csv
import hashlib
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import (
    BadMagicError,
    DataError,
    DimensionError,
    HeaderError,
    MissingFileError,
    NonPositiveWeightError,
    StorageError,
    TruncatedPayloadError,
)

MAGIC = b"PSNAP\0v1"
_HEADER_LEN = struct.Struct("<I")
_TIME_RTOL = 1e-9


class FieldBlock(NamedTuple):
    """One field of the stacked state vector (e.g. ``u`` with 2 components)."""

    name: str
    components: int
    points: int

    @property
    def size(self) -> int:
        return self.components * self.points


def format_layout(layout: Sequence[FieldBlock]) -> str:
    return ";".join(f"{b.name}:{b.components}:{b.points}" for b in layout)


def parse_layout(text: str) -> tuple[FieldBlock, ...]:
    blocks = []
    for item in filter(None, text.split(";")):
        try:
            name, comps, pts = item.split(":")
            blocks.append(FieldBlock(name, int(comps), int(pts)))
        except ValueError as exc:
            raise HeaderError(f"bad field_layout entry {item!r}") from exc
    return tuple(blocks)


def field_slice(layout: Sequence[FieldBlock], name: str) -> slice:
    """Row range of field ``name`` inside a stacked state vector."""
    start = 0
    for block in layout:
        if block.name == name:
            return slice(start, start + block.size)
        start += block.size
    raise DimensionError(f"field {name!r} not in layout {format_layout(layout)!r}")


@dataclass(frozen=True, eq=False)
class SnapshotSet:
    """Snapshot matrix ``Q`` (one state per column) plus its metadata.

    Time stamps are held as ``t0`` and the uniform spacing ``dt_snap`` so that
    they survive a file roundtrip bit for bit; :attr:`times` rebuilds them.
    """

    data: np.ndarray
    parameter: float
    dt_snap: float
    t0: float = 0.0
    field_layout: tuple[FieldBlock, ...] = ()

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2:
            raise DimensionError(f"snapshot data must be 2-D, got shape {data.shape}")
        data = np.asfortranarray(data)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "parameter", float(self.parameter))
        object.__setattr__(self, "dt_snap", float(self.dt_snap))
        object.__setattr__(self, "t0", float(self.t0))
        layout = tuple(FieldBlock(*b) for b in self.field_layout) or (FieldBlock("u", 1, data.shape[0]),)
        object.__setattr__(self, "field_layout", layout)
        if sum(b.size for b in layout) != data.shape[0]:
            raise DimensionError(
                f"field_layout {format_layout(layout)!r} covers {sum(b.size for b in layout)} dofs, "
                f"data has {data.shape[0]}"
            )
        if not self.dt_snap > 0:
            raise DimensionError(f"dt_snap must be positive, got {self.dt_snap}")

    @classmethod
    def from_times(cls, data, parameter, times, field_layout=()) -> "SnapshotSet":
        """Build from explicit time stamps, which must be uniformly spaced."""
        times = np.asarray(times, dtype=np.float64)
        if times.size == 1:
            return cls(data, parameter, 1.0, float(times[0]), field_layout)
        steps = np.diff(times)
        dt = float((times[-1] - times[0]) / (times.size - 1))
        if np.any(steps <= 0) or np.max(np.abs(steps - dt)) > _TIME_RTOL * abs(dt):
            raise DimensionError("time stamps must be strictly increasing and uniformly spaced")
        return cls(data, parameter, dt, float(times[0]), field_layout)

    @property
    def n_dof(self) -> int:
        return self.data.shape[0]

    @property
    def n_snap(self) -> int:
        return self.data.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt_snap * np.arange(self.n_snap)

    def field(self, name: str) -> np.ndarray:
        return self.data[field_slice(self.field_layout, name)]


@dataclass(frozen=True, eq=False)
class Quadrature:
    """Diagonal quadrature weights defining the weighted inner product."""

    weights: np.ndarray
    sqrt_weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64).ravel()
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise DataError("quadrature weights must be finite and strictly positive")
        w.setflags(write=False)
        s = np.sqrt(w)
        s.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "sqrt_weights", s)

    @classmethod
    def uniform(cls, n: int, value: float = 1.0) -> "Quadrature":
        return cls(np.full(n, float(value)))

    @property
    def size(self) -> int:
        return self.weights.size

    @cached_property
    def id(self) -> str:
        return content_hash(self.weights)


def content_hash(array: np.ndarray) -> str:
    a = np.ascontiguousarray(array)
    h = hashlib.sha256()
    h.update(str(a.shape).encode())
    h.update(a.tobytes())
    return h.hexdigest()[:16]


def weighted_inner(a, b, w: Quadrature) -> float:
    """Weighted inner product ``a^T W b`` with diagonal ``W``.

    Elementwise products are formed as ``(a*b)*w`` so swapping ``a`` and ``b``
    gives bit-identical results; the reduction is numpy's pairwise sum.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size != w.size:
        raise DimensionError(f"weighted_inner: lengths {a.shape}, {b.shape} vs weights ({w.size},)")
    return float(np.sum((a * b) * w.weights))


# --- PSNAP ------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def _encode_header(items: dict) -> bytes:
    return "".join(f"{k}={v}\n" for k, v in items.items()).encode("utf-8")


def write_psnap(path, data: np.ndarray, header: dict, weights: np.ndarray | None = None) -> None:
    """Low-level writer: ``header`` gets n_dof/n_snap/has_weights filled in."""
    path = Path(path)
    data = np.asarray(data, dtype=np.float64)
    items = {"n_dof": data.shape[0], "n_snap": data.shape[1]}
    items.update(header)
    items["has_weights"] = int(weights is not None)
    head = _encode_header(items)
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(_HEADER_LEN.pack(len(head)))
            fh.write(head)
            fh.write(np.asarray(data, dtype="<f8").tobytes(order="F"))
            if weights is not None:
                fh.write(np.asarray(weights, dtype="<f8").tobytes())
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}", path) from exc


def _read_prefix(fh, path) -> dict:
    magic = fh.read(len(MAGIC))
    if magic != MAGIC:
        offset = next(
            (i for i, (x, y) in enumerate(zip(magic, MAGIC)) if x != y),
            len(magic),
        )
        raise BadMagicError(f"{path}: bad PSNAP magic at byte offset {offset}", path, offset)
    raw = fh.read(_HEADER_LEN.size)
    if len(raw) != _HEADER_LEN.size:
        raise TruncatedPayloadError(f"{path}: file ends inside the header length", path, len(MAGIC))
    (hlen,) = _HEADER_LEN.unpack(raw)
    text = fh.read(hlen)
    if len(text) != hlen:
        raise TruncatedPayloadError(f"{path}: header truncated", path, len(MAGIC) + 4 + len(text))
    header = {}
    for line in text.decode("utf-8").splitlines():
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise HeaderError(f"{path}: header line {line!r} is not key=value", path)
        header[key] = value
    for key in ("n_dof", "n_snap", "has_weights"):
        if key not in header:
            raise HeaderError(f"{path}: header is missing {key!r}", path)
    header["n_dof"] = int(header["n_dof"])
    header["n_snap"] = int(header["n_snap"])
    header["has_weights"] = int(header["has_weights"])
    return header


def read_header(path) -> dict:
    """Parse only the header of a PSNAP file (the payload is not read)."""
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"{path}: no such PSNAP file", path)
    with open(path, "rb") as fh:
        header = _read_prefix(fh, path)
    if "parameter" in header:
        header["parameter"] = float(header["parameter"])
    return header


def read_psnap(path) -> tuple[dict, np.ndarray, np.ndarray | None]:
    """Low-level reader returning ``(raw header, data, weights or None)``."""
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"{path}: no such PSNAP file", path)
    with open(path, "rb") as fh:
        header = _read_prefix(fh, path)
        offset = fh.tell()
        n, m = header["n_dof"], header["n_snap"]
        nbytes = 8 * n * m
        raw = fh.read(nbytes)
        if len(raw) != nbytes:
            raise TruncatedPayloadError(
                f"{path}: payload truncated ({len(raw)} of {nbytes} bytes)", path, offset + len(raw)
            )
        data = np.frombuffer(raw, dtype="<f8").reshape((n, m), order="F").astype(np.float64)
        weights = None
        if header["has_weights"]:
            raw = fh.read(8 * n)
            if len(raw) != 8 * n:
                raise TruncatedPayloadError(
                    f"{path}: weights truncated ({len(raw)} of {8 * n} bytes)", path, offset + nbytes + len(raw)
                )
            weights = np.frombuffer(raw, dtype="<f8").astype(np.float64)
            if np.any(~(weights > 0)):
                bad = int(np.flatnonzero(~(weights > 0))[0])
                raise NonPositiveWeightError(f"{path}: quadrature weight {bad} is not positive", path)
    return header, data, weights


def write_snapshots(s: SnapshotSet, w: Quadrature | None, path) -> None:
    if w is not None and w.size != s.n_dof:
        raise DimensionError(f"weights have {w.size} entries, snapshots {s.n_dof} dofs")
    header = {
        "parameter": _fmt(s.parameter),
        "dt_snap": _fmt(s.dt_snap),
        "t0": _fmt(s.t0),
        "field_layout": format_layout(s.field_layout),
    }
    write_psnap(path, s.data, header, None if w is None else w.weights)


def read_snapshots(path) -> tuple[SnapshotSet, Quadrature | None]:
    header, data, weights = read_psnap(path)
    try:
        s = SnapshotSet(
            data,
            float(header.get("parameter", "nan")),
            float(header.get("dt_snap", "1.0")),
            float(header.get("t0", "0.0")),
            parse_layout(header.get("field_layout", "")),
        )
    except (KeyError, ValueError) as exc:
        raise HeaderError(f"{path}: {exc}", path) from exc
    return s, (None if weights is None else Quadrature(weights))


# --- CSV --------------------------------------------------------------------


def write_csv(path, rows: Iterable[Sequence], header: Sequence[str] | None = None) -> None:
    """RFC-4180 CSV; floats use shortest round-trip ``repr``."""
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            if header is not None:
                writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}", path) from exc


def write_matrix_csv(path, matrix: np.ndarray) -> None:
    write_csv(path, np.atleast_2d(np.asarray(matrix, dtype=np.float64)).tolist())


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        return np.array([[float(v) for v in row] for row in csv.reader(fh)], dtype=np.float64)
