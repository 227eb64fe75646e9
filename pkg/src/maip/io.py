"""Readers and writers for masks, matrices, measurement sets and renderings.

Matrix CSV: first line ``rows,cols``, then one comma-separated row per
line. Binary matrices: two little-endian uint64 dims, then float64
values in row-major order. Measurement sets pair a matrix CSV with a JSON
sidecar (same stem, ``.json``) holding frequencies, mode and reference.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .geometry import MeasurementFrameSet, PixelGrid

FLOAT_FMT = "%.17g"


class FormatError(ValueError):
    """A file does not follow the expected layout."""


def read_mask(path):
    """0/1 grid as plain text (one line per row) or CSV."""
    text = Path(path).read_text().strip()
    if not text:
        raise FormatError(f"{path}: empty mask file")
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        cells = line.split(",") if "," in line else list(line)
        cells = [c.strip() for c in cells]
        if any(c not in ("0", "1") for c in cells):
            raise FormatError(f"{path}: mask entries must be 0 or 1")
        rows.append([c == "1" for c in cells])
    if len({len(r) for r in rows}) != 1:
        raise FormatError(f"{path}: mask rows have different lengths")
    return PixelGrid(np.array(rows, dtype=bool))


def write_mask(path, grid):
    lines = ["".join("1" if v else "0" for v in row) for row in grid.mask]
    Path(path).write_text("\n".join(lines) + "\n")


def write_matrix(path, A):
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    path = Path(path)
    if path.suffix == ".bin":
        with open(path, "wb") as fh:
            fh.write(np.array(A.shape, dtype="<u8").tobytes())
            fh.write(np.ascontiguousarray(A, dtype="<f8").tobytes())
        return
    with open(path, "w") as fh:
        fh.write(f"{A.shape[0]},{A.shape[1]}\n")
        np.savetxt(fh, A, delimiter=",", fmt=FLOAT_FMT)


def read_matrix(path):
    path = Path(path)
    if path.suffix == ".bin":
        raw = path.read_bytes()
        if len(raw) < 16:
            raise FormatError(f"{path}: truncated binary header")
        rows, cols = np.frombuffer(raw[:16], dtype="<u8")
        expected = 16 + 8 * int(rows) * int(cols)
        if len(raw) != expected:
            raise FormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
        return np.frombuffer(raw[16:], dtype="<f8").reshape(int(rows), int(cols)).copy()
    with open(path) as fh:
        header = fh.readline().strip()
        try:
            rows, cols = (int(v) for v in header.split(","))
        except ValueError:
            raise FormatError(f"{path}: first line must be 'rows,cols', got {header!r}") from None
        body = np.loadtxt(fh, delimiter=",", ndmin=2)
    if rows * cols == 0:
        body = body.reshape(rows, cols)
    if body.shape != (rows, cols):
        raise FormatError(f"{path}: header says {rows}x{cols}, body is {body.shape[0]}x{body.shape[1]}")
    return body


read_sensitivity = read_matrix
write_sensitivity = write_matrix


def sidecar_path(path):
    return Path(path).with_suffix(".json")


def write_measurements(path, frames: MeasurementFrameSet):
    write_matrix(path, frames.V)
    with open(sidecar_path(path), "w") as fh:
        json.dump(frames.metadata(), fh, indent=2)


def read_measurements(path):
    V = read_matrix(path)
    side = sidecar_path(path)
    meta = {}
    if side.exists():
        with open(side) as fh:
            meta = json.load(fh)
    return MeasurementFrameSet(V, meta.get("frequencies") or [], meta.get("mode", "TD"),
                               meta.get("reference_frequency"))


def write_attention(path, attention, scaling):
    """Rows of the normalized attention matrix, then a final ``w`` row."""
    with open(path, "w") as fh:
        L = attention.shape[0]
        fh.write("row," + ",".join(f"col{j}" for j in range(L)) + "\n")
        for i, row in enumerate(attention):
            fh.write(f"A{i}," + ",".join(FLOAT_FMT % v for v in row) + "\n")
        fh.write("w," + ",".join(FLOAT_FMT % v for v in scaling) + "\n")


def render_frames(frames, out_dir, prefix="frame", scale=8):
    """Write one PNG per frame with a diverging colormap centred at zero.

    Colour limits are +/- the largest absolute value over the stack; they
    are recorded with each frame's min/max in ``<prefix>s.json``.
    """
    from matplotlib import colormaps
    from PIL import Image

    frames = np.asarray(frames, dtype=np.float64)
    out_dir = Path(out_dir)
    limit = float(np.max(np.abs(frames))) or 1.0
    cmap = colormaps["RdBu_r"]
    info = {"colormap": "RdBu_r", "limits": [-limit, limit], "frames": []}
    for i, frame in enumerate(frames):
        rgba = cmap((frame / limit + 1.0) / 2.0, bytes=True)
        img = Image.fromarray(rgba[..., :3]).resize(
            (frame.shape[1] * scale, frame.shape[0] * scale), Image.NEAREST)
        name = f"{prefix}{i}.png"
        img.save(out_dir / name)
        info["frames"].append({"file": name, "min": float(frame.min()), "max": float(frame.max())})
    with open(out_dir / f"{prefix}s.json", "w") as fh:
        json.dump(info, fh, indent=2)
    return info
