"""Reading and writing image sequences, raw tensors, masks and layers.

Raw tensor files (``.t3f``) hold the magic bytes ``T3F1``, the dimensions
``M, N, T`` as little-endian uint32, then ``M*N*T`` little-endian float64
values, frame-major and row-major within a frame.
"""
from pathlib import Path
import re
import struct

import numpy as np
from PIL import Image

__all__ = [
    "MAGIC",
    "IMAGE_SUFFIXES",
    "write_raw",
    "read_raw",
    "load_sequence",
    "save_sequence",
    "to_display",
    "save_masks",
    "load_masks",
    "save_layers",
    "read_config",
    "write_metadata",
    "frame_index",
]

MAGIC = b"T3F1"
IMAGE_SUFFIXES = (".pgm", ".png")
_HEADER = struct.Struct("<4sIII")


def write_raw(path, x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 3:
        raise ValueError("raw tensor files hold 3-D arrays")
    m, n, t = x.shape
    payload = np.ascontiguousarray(x.transpose(2, 0, 1), dtype="<f8").tobytes()
    Path(path).write_bytes(_HEADER.pack(MAGIC, m, n, t) + payload)


def read_raw(path):
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, m, n, t = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a T3F1 tensor file")
    expected = _HEADER.size + 8 * m * n * t
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(data)}")
    flat = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    return flat.reshape(t, m, n).transpose(1, 2, 0).astype(float)


def _image_files(directory):
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"{directory} is not a directory")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def _read_gray(path):
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("L"), dtype=np.uint8)
    except OSError as exc:
        raise ValueError(f"cannot read frame {path}: {exc}") from exc


def load_sequence(path):
    """Stack the 8-bit frames of a directory (name order) scaled to [0, 1]."""
    files = _image_files(path)
    if len(files) < 2:
        raise ValueError(f"{path}: a sequence needs at least 2 frames, found {len(files)}")
    frames = [_read_gray(f) for f in files]
    shape = frames[0].shape
    for f, fr in zip(files, frames):
        if fr.shape != shape:
            raise ValueError(f"{f.name} has shape {fr.shape}, expected {shape}")
    return np.stack(frames, axis=2).astype(float) / 255.0


def _to_uint8(frame):
    return np.rint(np.clip(frame, 0.0, 1.0) * 255).astype(np.uint8)


def save_sequence(x, directory, prefix="frame", suffix=".pgm"):
    """Write a [0, 1] tensor as 8-bit frames ``{prefix}_{k:03d}{suffix}``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for k in range(x.shape[2]):
        p = directory / f"{prefix}_{k:03d}{suffix}"
        Image.fromarray(_to_uint8(x[:, :, k])).save(p)
        paths.append(p)
    return paths


def to_display(layer):
    """Min-max scale a whole layer to uint8; a constant layer maps to 128."""
    lo, hi = float(layer.min()), float(layer.max())
    if hi <= lo:
        return np.full(layer.shape, 128, dtype=np.uint8)
    return np.rint((layer - lo) / (hi - lo) * 255).astype(np.uint8)


def save_masks(masks, directory, indices=None, prefix="mask"):
    """Write boolean masks (M, N, K) as 0/255 PGM files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    masks = np.asarray(masks, dtype=bool)
    if masks.ndim == 2:
        masks = masks[:, :, None]
    if indices is None:
        indices = range(masks.shape[2])
    for j, k in enumerate(indices):
        Image.fromarray(masks[:, :, j].astype(np.uint8) * 255).save(
            directory / f"{prefix}_{k:03d}.pgm")


def load_masks(directory):
    """Mapping file stem -> boolean mask for every image in ``directory``."""
    files = _image_files(directory)
    if not files:
        raise ValueError(f"{directory}: no mask images found")
    return {f.stem: _read_gray(f) > 127 for f in files}


def frame_index(name, fallback):
    """Trailing integer of a file stem such as ``mask_007``."""
    match = re.search(r"(\d+)$", name)
    return int(match.group(1)) if match else fallback


def _format_value(v):
    if isinstance(v, (list, tuple)):
        return ", ".join(_format_value(a) for a in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_metadata(path, entries):
    lines = [f"{k} = {_format_value(v)}" for k, v in entries.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def save_layers(dec, directory, config=None):
    """Write every layer as ``<name>.t3f`` plus display frames, and metadata.

    Returns the list of written paths.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, layer in dec.layers().items():
        raw = directory / f"{name}.t3f"
        write_raw(raw, layer)
        written.append(raw)
        display = to_display(layer)
        frame_dir = directory / name
        frame_dir.mkdir(exist_ok=True)
        for k in range(layer.shape[2]):
            p = frame_dir / f"frame_{k:03d}.pgm"
            Image.fromarray(display[:, :, k]).save(p)
            written.append(p)
    meta = dict(config.as_dict()) if config is not None else {}
    meta.update(iterations=dec.iterations, converged=dec.converged,
                residual_history=list(dec.residual_history))
    write_metadata(directory / "metadata.txt", meta)
    written.append(directory / "metadata.txt")
    return written


def read_config(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    entries = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        entries[key] = value
    return entries
