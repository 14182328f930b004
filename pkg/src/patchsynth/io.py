"""File formats: PNG frame directories and the raw tensor container.

Videos travel as directories of 8-bit RGB frames named frame_000000.png,
frame_000001.png, ... with pixel values mapped linearly between [0, 255]
and [-1, 1].  Flow fields, dynamic-structure fields and masks share one
raw container: magic "VGT1", four little-endian uint32 dims (t, h, w, c),
then float32 little-endian data in t-h-w-c row-major order.
"""

from __future__ import annotations

import os
import re
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .validation import check_video

RAW_MAGIC = b"VGT1"
_FRAME_RE = re.compile(r"^frame_(\d{6})\.png$")


class DataFormatError(ValueError):
    """A file or directory violates one of the on-disk formats."""


def frame_name(i: int) -> str:
    return f"frame_{i:06d}.png"


def read_video(directory) -> np.ndarray:
    """Load a frame directory as a (t, h, w, 3) float32 video in [-1, 1]."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataFormatError(f"input: not a directory: {directory}")
    found = {}
    for entry in directory.iterdir():
        m = _FRAME_RE.match(entry.name)
        if m:
            found[int(m.group(1))] = entry
    if not found:
        raise DataFormatError(f"input: no frame_NNNNNN.png files in {directory}")
    count = len(found)
    missing = sorted(set(range(count)) - set(found))
    if missing:
        raise DataFormatError(f"input: missing frame index {missing[0]} in {directory}")
    frames = []
    shape = None
    for i in range(count):
        with Image.open(found[i]) as img:
            if img.mode != "RGB":
                raise DataFormatError(
                    f"input: frame {found[i].name} is {img.mode}, expected RGB"
                )
            arr = np.asarray(img, dtype=np.float32)
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise DataFormatError(
                f"input: frame {found[i].name} has size {arr.shape[:2]}, expected {shape[:2]}"
            )
        frames.append(arr / 255.0 * 2.0 - 1.0)
    return np.stack(frames)


def write_video(v: np.ndarray, directory) -> None:
    """Write a video as 8-bit RGB PNG frames (clamped to [-1, 1]).

    Quantization rounds half away from zero; frames are written atomically
    (temp file then rename).
    """
    v = check_video(v, "output video")
    if v.shape[3] != 3:
        raise DataFormatError(f"output: video must have 3 channels, got {v.shape[3]}")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    scaled = (np.clip(v, -1.0, 1.0) + 1.0) / 2.0 * 255.0
    quant = np.floor(scaled + 0.5).astype(np.uint8)
    for i in range(v.shape[0]):
        target = directory / frame_name(i)
        tmp = directory / (frame_name(i) + ".tmp")
        Image.fromarray(quant[i], mode="RGB").save(tmp, format="PNG")
        os.replace(tmp, target)


def read_tensor(path) -> np.ndarray:
    """Load a raw tensor file as a (t, h, w, c) float32 array."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise DataFormatError(f"tensor: cannot read {path}: {e}") from None
    if len(blob) < 20 or blob[:4] != RAW_MAGIC:
        raise DataFormatError(f"tensor: {path} is not a {RAW_MAGIC.decode()} file")
    t, h, w, c = struct.unpack("<4I", blob[4:20])
    expected = 20 + 4 * t * h * w * c
    if len(blob) != expected:
        raise DataFormatError(
            f"tensor: {path} has {len(blob)} bytes, expected {expected} for dims {(t, h, w, c)}"
        )
    data = np.frombuffer(blob, dtype="<f4", offset=20)
    return data.reshape(t, h, w, c).astype(np.float32)


def write_tensor(v: np.ndarray, path) -> None:
    """Write a (t, h, w, c) float array to the raw tensor format."""
    v = np.asarray(v, dtype=np.float32)
    if v.ndim == 3:
        v = v[..., None]
    if v.ndim != 4:
        raise DataFormatError(f"tensor: expected a (t, h, w, c) array, got ndim={v.ndim}")
    path = Path(path)
    header = RAW_MAGIC + struct.pack("<4I", *v.shape)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(v, dtype="<f4").tobytes())
    os.replace(tmp, path)


def read_mask(path) -> np.ndarray:
    """Load a c=1 raw tensor as a boolean (t, h, w) mask (values > 0.5)."""
    arr = read_tensor(path)
    if arr.shape[3] != 1:
        raise DataFormatError(f"mask: expected c=1, got c={arr.shape[3]} in {path}")
    return arr[..., 0] > 0.5
