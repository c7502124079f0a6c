"""PFM depth and indexed-PNG mask encoding."""

from __future__ import annotations

import io
import os

import numpy as np
from PIL import Image

from .raycast import LabelMask

PALETTE = [
    (0, 0, 0),  # background
    (0, 255, 0),  # steppable
    (255, 255, 0),  # passable
    (255, 0, 0),  # non-passable
]
N_CLASSES = len(PALETTE)


class MaskFormatError(ValueError):
    pass


def encode_pfm(depth: np.ndarray) -> bytes:
    """Single-channel little-endian PFM; rows are stored bottom to top."""
    depth = np.asarray(depth, dtype="<f4")
    if depth.ndim != 2:
        raise ValueError("depth must be 2D")
    h, w = depth.shape
    header = f"Pf\n{w} {h}\n-1.0\n".encode("ascii")
    return header + np.ascontiguousarray(depth[::-1]).tobytes()


def decode_pfm(data: bytes) -> np.ndarray:
    buf = io.BytesIO(data)
    magic = buf.readline().strip()
    if magic != b"Pf":
        raise ValueError(f"not a greyscale PFM (magic {magic!r})")
    dims = buf.readline().split()
    if len(dims) != 2:
        raise ValueError("malformed PFM dimensions")
    w, h = int(dims[0]), int(dims[1])
    scale = float(buf.readline().strip())
    dtype = "<f4" if scale < 0 else ">f4"
    raw = buf.read()
    if len(raw) != 4 * w * h:
        raise ValueError(f"PFM payload has {len(raw)} bytes, expected {4 * w * h}")
    return np.frombuffer(raw, dtype=dtype).reshape(h, w)[::-1].astype(np.float32)


def write_pfm(path, depth: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pfm(depth))


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_pfm(fh.read())


def _flat_palette() -> list[int]:
    flat = [c for rgb in PALETTE for c in rgb]
    return flat + [0] * (768 - len(flat))


def encode_mask_png(values: np.ndarray) -> bytes:
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError("mask must be 2D")
    if values.size and (values.min() < 0 or values.max() >= N_CLASSES):
        raise MaskFormatError("mask values must be palette indices 0..3")
    h, w = values.shape
    img = Image.frombytes("P", (w, h), np.ascontiguousarray(values, dtype=np.uint8).tobytes())
    img.putpalette(_flat_palette())
    out = io.BytesIO()
    # no timestamps or text chunks, so output is a pure function of the pixels
    img.save(out, format="PNG", optimize=False, compress_level=9)
    return out.getvalue()


def write_mask_png(path, mask: LabelMask) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_mask_png(mask.values))


def load_mask(path, expected_shape: tuple[int, int] | None = None) -> LabelMask:
    """Read an indexed PNG mask; ``expected_shape`` is (height, width)."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode != "P":
                raise MaskFormatError(f"{path}: expected an indexed (mode P) PNG, got mode {img.mode}")
            values = np.array(img, dtype=np.uint8)
    except MaskFormatError:
        raise
    except Exception as exc:  # Pillow raises a variety of types on corrupt files
        raise MaskFormatError(f"{path}: malformed PNG ({exc})") from exc
    if values.size and values.max() >= N_CLASSES:
        raise MaskFormatError(f"{path}: unknown palette index {int(values.max())}")
    if expected_shape is not None and values.shape != tuple(expected_shape):
        raise MaskFormatError(f"{path}: mask is {values.shape[1]}x{values.shape[0]}, expected {expected_shape[1]}x{expected_shape[0]}")
    return LabelMask(values)
