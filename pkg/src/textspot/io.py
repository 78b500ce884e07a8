"""On-disk formats: tensor files, SAM weight bundles, JSON annotations.

Tensor file layout (all little-endian)::

    b"TSPT" | version u16 = 1 | dtype u8 (0 f32, 1 f64) | ndim u8 (1..4)
    | ndim x u32 extents | row-major payload
"""

from __future__ import annotations

import io as _io
import json
import struct
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .geometry import CharBox, Polygon, Rect
from .evaluation import GtInstance, SpotResult
from .sam import PARAM_NAMES, SamConfig, SamWeights

MAGIC = b"TSPT"
VERSION = 1
DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
DTYPE_CODES = {"f32": 0, "f64": 1}
_HEADER = struct.Struct("<4sHBB")


class FormatError(ValueError):
    """Raised for any malformed input file."""


@dataclass
class TensorFile:
    data: np.ndarray  # always float64 in memory
    dtype: str = "f64"  # storage precision


def encode_tensor(arr, dtype: str = "f64") -> bytes:
    arr = np.asarray(arr, dtype=np.float64)
    if dtype not in DTYPE_CODES:
        raise ValueError(f"dtype must be 'f32' or 'f64', got {dtype!r}")
    if not 1 <= arr.ndim <= 4:
        raise ValueError(f"tensor must have 1 to 4 dimensions, got {arr.ndim}")
    if arr.size == 0:
        raise ValueError("tensor extents must be positive")
    code = DTYPE_CODES[dtype]
    header = _HEADER.pack(MAGIC, VERSION, code, arr.ndim)
    shape = struct.pack(f"<{arr.ndim}I", *arr.shape)
    return header + shape + np.ascontiguousarray(arr, dtype=DTYPES[code]).tobytes()


def decode_tensor(buf: bytes) -> TensorFile:
    if len(buf) < _HEADER.size:
        raise FormatError("tensor file truncated in header")
    magic, version, code, ndim = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported tensor file version {version}")
    if code not in DTYPES:
        raise FormatError(f"unknown dtype code {code}")
    if not 1 <= ndim <= 4:
        raise FormatError(f"ndim must be 1..4, got {ndim}")
    off = _HEADER.size
    if len(buf) < off + 4 * ndim:
        raise FormatError("tensor file truncated in shape")
    shape = struct.unpack_from(f"<{ndim}I", buf, off)
    if 0 in shape:
        raise FormatError(f"zero extent in shape {shape}")
    off += 4 * ndim
    dt = DTYPES[code]
    expected = dt.itemsize * int(np.prod(shape, dtype=np.int64))
    if len(buf) - off != expected:
        raise FormatError(f"payload has {len(buf) - off} bytes, shape {shape} needs {expected}")
    data = np.frombuffer(buf, dtype=dt, offset=off).reshape(shape).astype(np.float64)
    if not np.all(np.isfinite(data)):
        raise FormatError("tensor file contains NaN or Inf")
    return TensorFile(data, "f32" if code == 0 else "f64")


def write_tensor(path, arr, dtype: str = "f64") -> None:
    Path(path).write_bytes(encode_tensor(arr, dtype))


def read_tensor_file(path) -> TensorFile:
    try:
        buf = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    return decode_tensor(buf)


def read_tensor(path) -> np.ndarray:
    return read_tensor_file(path).data


# --- weight bundles --------------------------------------------------------

MANIFEST = "manifest.json"


def save_weights(path, weights: SamWeights, dtype: str = "f64") -> None:
    """Write a bundle directory: one tensor file per parameter plus ``manifest.json``."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    files = {}
    for name in PARAM_NAMES:
        fname = f"{name}.tspt"
        write_tensor(root / fname, weights[name], dtype)
        files[name] = fname
    manifest = {"config": weights.cfg.to_json(), "params": files}
    (root / MANIFEST).write_text(json.dumps(manifest, indent=2) + "\n")


def load_weights(path) -> SamWeights:
    """Read a bundle from a directory or a zip archive."""
    root = Path(path)
    if root.is_dir():
        def read(name):
            return (root / name).read_bytes()
    elif zipfile.is_zipfile(root):
        zf = zipfile.ZipFile(root)

        def read(name):
            return zf.read(name)
    else:
        raise FormatError(f"{path} is neither a directory nor a zip archive")
    try:
        manifest = json.loads(read(MANIFEST))
        cfg = SamConfig(**manifest.get("config", {}))
        files = manifest["params"]
        missing = [n for n in PARAM_NAMES if n not in files]
        if missing:
            raise FormatError(f"manifest lacks parameters: {missing}")
        params = {n: decode_tensor(read(files[n])).data for n in PARAM_NAMES}
        return SamWeights(cfg, params)
    except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise FormatError(f"bad weight bundle {path}: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"bad weight bundle {path}: {exc}") from exc


# --- JSON records ------------------------------------------------------------

def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid JSON: {exc}") from exc


def _polygon(obj, where: str) -> Polygon:
    try:
        pts = [(float(x), float(y)) for x, y in obj]
        return Polygon(pts)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{where}: bad polygon: {exc}") from exc


def _rect(obj, where: str) -> Rect:
    try:
        x0, y0, x1, y1 = (float(v) for v in obj)
        return Rect(x0, y0, x1, y1)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{where}: bad box {obj!r}: {exc}") from exc


def _image_map(data, path) -> dict:
    if not isinstance(data, dict) or not all(isinstance(v, list) for v in data.values()):
        raise FormatError(f"{path}: expected an object mapping image ids to lists")
    return data


@dataclass
class AnnotatedWord:
    gt: GtInstance
    chars: Optional[list[CharBox]]


def parse_annotations(data, path="<annotations>") -> dict[str, list[AnnotatedWord]]:
    out = {}
    for image, items in _image_map(data, path).items():
        words = []
        for k, item in enumerate(items):
            where = f"{path}:{image}[{k}]"
            if not isinstance(item, dict) or "polygon" not in item:
                raise FormatError(f"{where}: each instance needs a 'polygon'")
            poly = _polygon(item["polygon"], where)
            text = item.get("transcription", "")
            ignore = item.get("ignore", False)
            if not isinstance(text, str) or not isinstance(ignore, bool):
                raise FormatError(f"{where}: 'transcription' must be a string and 'ignore' a bool")
            chars = None
            if item.get("chars") is not None:
                chars = []
                for c in item["chars"]:
                    try:
                        chars.append(CharBox(int(c["cls"]), _rect(c["box"], where)))
                    except (KeyError, TypeError, ValueError) as exc:
                        raise FormatError(f"{where}: bad character box {c!r}: {exc}") from exc
            words.append(AnnotatedWord(GtInstance(poly, text, ignore), chars))
        out[image] = words
    return out


def load_annotations(path) -> dict[str, list[AnnotatedWord]]:
    return parse_annotations(_load_json(path), str(path))


def load_ground_truth(path) -> dict[str, list[GtInstance]]:
    return {img: [w.gt for w in words] for img, words in load_annotations(path).items()}


def parse_predictions(data, path="<predictions>") -> dict[str, list[SpotResult]]:
    out = {}
    for image, items in _image_map(data, path).items():
        preds = []
        for k, item in enumerate(items):
            where = f"{path}:{image}[{k}]"
            if not isinstance(item, dict) or "polygon" not in item:
                raise FormatError(f"{where}: each prediction needs a 'polygon'")
            try:
                probs = item.get("char_probs")
                preds.append(
                    SpotResult(
                        polygon=_polygon(item["polygon"], where),
                        text=str(item.get("text", "")),
                        score=float(item.get("score", 1.0)),
                        char_probs=None if probs is None else np.asarray(probs, dtype=np.float64),
                    )
                )
            except (TypeError, ValueError) as exc:
                if isinstance(exc, FormatError):
                    raise
                raise FormatError(f"{where}: {exc}") from exc
        out[image] = preds
    return out


def load_predictions(path) -> dict[str, list[SpotResult]]:
    return parse_predictions(_load_json(path), str(path))


@dataclass
class Proposal:
    box: Rect
    instance: Optional[int] = None  # index of the matched annotation, if given


def parse_proposals(data, path="<proposals>") -> dict[str, list[Proposal]]:
    """Proposals per image: ``[x0, y0, x1, y1]`` or ``{"box": [...], "instance": k}``."""
    out = {}
    for image, items in _image_map(data, path).items():
        props = []
        for k, item in enumerate(items):
            where = f"{path}:{image}[{k}]"
            if isinstance(item, dict):
                if "box" not in item:
                    raise FormatError(f"{where}: proposal object needs a 'box'")
                inst = item.get("instance")
                if inst is not None and not isinstance(inst, int):
                    raise FormatError(f"{where}: 'instance' must be an integer")
                props.append(Proposal(_rect(item["box"], where), inst))
            else:
                props.append(Proposal(_rect(item, where)))
        out[image] = props
    return out


def load_proposals(path) -> dict[str, list[Proposal]]:
    return parse_proposals(_load_json(path), str(path))
