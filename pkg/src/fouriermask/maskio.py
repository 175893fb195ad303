"""Mask file formats and deterministic dataset listing.

Three formats, chosen by file extension:

* ``.pgm``      -- netpbm grayscale (P2 or P5), normalized by maxval
* ``.txt``      -- rows of whitespace-separated 0/1 tokens
* ``.rle.json`` -- ``{"h", "w", "counts"}``; alternating 0-runs and 1-runs
  over the column-major pixel order, starting with a (possibly empty) 0-run
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .fourier import MaskRaster

PGM, TEXTGRID, RLE = "pgm", "textgrid", "rle-json"


class MaskFormatError(ValueError):
    pass


@dataclass(frozen=True)
class MaskFile:
    path: Path
    format: str
    name: str

    def load(self) -> MaskRaster:
        return load_mask(self.path)


def detect_format(path) -> str:
    name = Path(path).name.lower()
    if name.endswith(".rle.json"):
        return RLE
    if name.endswith(".pgm"):
        return PGM
    if name.endswith(".txt"):
        return TEXTGRID
    raise MaskFormatError(f"{path}: unrecognized mask extension")


def _pgm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """First ``count`` header tokens (comments skipped) and the offset after them."""
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise MaskFormatError("truncated PGM header")
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos


def _load_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    tokens, pos = _pgm_tokens(data, 4)
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise MaskFormatError(f"{path}: not a grayscale PGM (magic {magic!r})")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise MaskFormatError(f"{path}: malformed PGM header") from None
    if w < 1 or h < 1 or not 0 < maxval < 65536:
        raise MaskFormatError(f"{path}: bad PGM dimensions or maxval")
    if magic == b"P5":
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        body = data[pos + 1 :]
        if len(body) < h * w * dtype.itemsize:
            raise MaskFormatError(f"{path}: PGM raster is truncated")
        pixels = np.frombuffer(body, dtype=dtype, count=h * w)
    else:
        try:
            pixels = np.array([int(t) for t in data[pos:].split()], dtype=np.int64)
        except ValueError:
            raise MaskFormatError(f"{path}: non-integer PGM sample") from None
        if pixels.size != h * w:
            raise MaskFormatError(f"{path}: expected {h * w} samples, found {pixels.size}")
    if pixels.max(initial=0) > maxval:
        raise MaskFormatError(f"{path}: sample exceeds maxval")
    return pixels.reshape(h, w).astype(np.float64) / maxval


def _load_textgrid(path: Path) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        bad = [t for t in tokens if t not in ("0", "1")]
        if bad:
            raise MaskFormatError(f"{path}:{lineno}: non-binary token {bad[0]!r}")
        rows.append([float(t) for t in tokens])
    if not rows:
        raise MaskFormatError(f"{path}: empty text grid")
    if len({len(r) for r in rows}) != 1:
        raise MaskFormatError(f"{path}: ragged text grid")
    return np.array(rows)


def decode_rle(h: int, w: int, counts) -> np.ndarray:
    counts = [int(c) for c in counts]
    if any(c < 0 for c in counts):
        raise MaskFormatError("negative run length")
    if sum(counts) != h * w:
        raise MaskFormatError(f"run lengths sum to {sum(counts)}, expected {h * w}")
    flat = np.repeat(np.arange(len(counts)) % 2, counts).astype(np.float64)
    return flat.reshape(w, h).T.copy()


def encode_rle(binary: np.ndarray) -> list[int]:
    flat = np.asarray(binary).T.reshape(-1).astype(np.int8)
    change = np.flatnonzero(np.diff(flat)) + 1
    bounds = np.concatenate([[0], change, [flat.size]])
    counts = np.diff(bounds).tolist()
    if flat.size and flat[0] == 1:
        counts.insert(0, 0)
    return counts


def _load_rle(path: Path) -> np.ndarray:
    try:
        data = json.loads(path.read_text())
        h, w, counts = int(data["h"]), int(data["w"]), data["counts"]
    except (ValueError, KeyError, TypeError) as exc:
        raise MaskFormatError(f"{path}: malformed RLE JSON ({exc})") from None
    if h < 1 or w < 1:
        raise MaskFormatError(f"{path}: bad RLE dimensions")
    try:
        return decode_rle(h, w, counts)
    except MaskFormatError as exc:
        raise MaskFormatError(f"{path}: {exc}") from None


def load_mask(path) -> MaskRaster:
    path = Path(path)
    fmt = detect_format(path)
    loader = {PGM: _load_pgm, TEXTGRID: _load_textgrid, RLE: _load_rle}[fmt]
    return MaskRaster(loader(path))


def save_mask(raster: Union[MaskRaster, np.ndarray], path, binarize: bool = False) -> None:
    """Write ``raster`` in the format implied by ``path``.

    Text grids and RLE hold binary data only: soft rasters must be binarized.
    Soft PGM output uses round-half-up to 0..255.
    """
    if not isinstance(raster, MaskRaster):
        values = np.asarray(raster, dtype=np.float64)
        if values.size == 0:
            raise ValueError("refusing to write an empty raster")
        raster = MaskRaster(values)
    path = Path(path)
    fmt = detect_format(path)
    if binarize:
        raster = raster.binarize()
    if fmt != PGM and not raster.is_binary():
        raise ValueError(f"{fmt} output needs a binary raster; binarize first")
    h, w = raster.shape
    if fmt == PGM:
        pixels = np.floor(raster.values * 255.0 + 0.5).astype(np.uint8)
        path.write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes())
    elif fmt == TEXTGRID:
        lines = (" ".join("1" if v else "0" for v in row) for row in raster.values)
        path.write_text("\n".join(lines) + "\n")
    else:
        path.write_text(json.dumps({"h": h, "w": w, "counts": encode_rle(raster.values)}))


def iter_dataset(directory) -> list[MaskFile]:
    """Recognized mask files under ``directory``, sorted by relative path bytes."""
    root = Path(directory)
    if not root.is_dir():
        raise NotADirectoryError(f"{root}: not a directory")
    found = []

    def onerror(exc):
        raise exc

    for dirpath, _, filenames in os.walk(root, onerror=onerror):
        for name in filenames:
            try:
                fmt = detect_format(name)
            except MaskFormatError:
                continue
            full = Path(dirpath) / name
            found.append(MaskFile(full, fmt, full.relative_to(root).as_posix()))
    found.sort(key=lambda m: m.name.encode("utf-8", "surrogateescape"))
    return found
