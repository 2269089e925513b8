"""
File formats: FTEN tensor containers, WAV ingestion, CSV factor tables,
JSON reports and run manifests. Every writer is atomic (temp file + rename).
"""

import csv
import hashlib
import io
import json
import math
import os
import struct
import tempfile
from dataclasses import asdict, dataclass, field, is_dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError
from .frontend import AudioClip
from .tensor import MAX_NDIM

MAGIC = b"FTEN"
FTEN_VERSION = 1
_HEADER = struct.Struct("<4sHH")

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE


def _atomic_write(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- FTEN tensors -----------------------------------------------------------

def encode_tensor(x):
    x = np.ascontiguousarray(x, dtype="<f8")
    if not (1 <= x.ndim <= MAX_NDIM):
        raise FormatError(f"FTEN holds 1..{MAX_NDIM} dimensions, got {x.ndim}")
    header = _HEADER.pack(MAGIC, FTEN_VERSION, x.ndim)
    extents = struct.pack(f"<{x.ndim}Q", *x.shape)
    return header + extents + x.tobytes()


def decode_tensor(buf, source="<bytes>"):
    if len(buf) < _HEADER.size:
        raise FormatError(f"{source}: truncated FTEN header")
    magic, version, ndim = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise FormatError(f"{source}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != FTEN_VERSION:
        raise FormatError(f"{source}: unsupported FTEN version {version}")
    if not (1 <= ndim <= MAX_NDIM):
        raise FormatError(f"{source}: invalid ndim {ndim}")
    off = _HEADER.size
    if len(buf) < off + 8 * ndim:
        raise FormatError(f"{source}: truncated extents")
    shape = struct.unpack_from(f"<{ndim}Q", buf, off)
    off += 8 * ndim
    expected = 8 * math.prod(shape)
    if len(buf) - off != expected:
        raise FormatError(f"{source}: payload is {len(buf) - off} bytes, expected {expected}")
    return np.frombuffer(buf, dtype="<f8", offset=off).reshape(shape).astype(np.float64)


def write_tensor(path, x):
    _atomic_write(path, encode_tensor(x))


def read_tensor(path):
    with open(path, "rb") as fh:
        return decode_tensor(fh.read(), str(path))


# -- WAV --------------------------------------------------------------------

def _chunks(buf, source):
    if len(buf) < 12 or buf[:4] != b"RIFF" or buf[8:12] != b"WAVE":
        raise FormatError(f"{source}: not a RIFF/WAVE file")
    off = 12
    while off + 8 <= len(buf):
        cid, size = struct.unpack_from("<4sI", buf, off)
        body = buf[off + 8:off + 8 + size]
        if len(body) < size:
            raise FormatError(f"{source}: truncated {cid.decode('latin-1')!r} chunk")
        yield cid, body
        off += 8 + size + (size & 1)


def read_wav(path):
    """Read PCM 16-bit or 32-bit float WAV as a mono clip in ``[-1, 1]``.

    Stereo (or more channels) is averaged to mono.
    """
    with open(path, "rb") as fh:
        buf = fh.read()
    fmt = data = None
    for cid, body in _chunks(buf, path):
        if cid == b"fmt ":
            fmt = body
        elif cid == b"data":
            data = body
    if fmt is None or len(fmt) < 16:
        raise FormatError(f"{path}: missing or truncated fmt chunk")
    if data is None:
        raise FormatError(f"{path}: missing data chunk")
    tag, channels, rate, _, block, bits = struct.unpack_from("<HHIIHH", fmt)
    if tag == WAVE_FORMAT_EXTENSIBLE and len(fmt) >= 26:
        tag = struct.unpack_from("<H", fmt, 24)[0]
    if tag == WAVE_FORMAT_PCM and bits == 16:
        samples = np.frombuffer(data[:len(data) // 2 * 2], dtype="<i2") / 32768.0
    elif tag == WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        samples = np.frombuffer(data[:len(data) // 4 * 4], dtype="<f4").astype(np.float64)
    else:
        raise FormatError(f"{path}: unsupported codec tag 0x{tag:04x} with {bits}-bit samples")
    if channels < 1:
        raise FormatError(f"{path}: invalid channel count {channels}")
    samples = samples[:samples.size // channels * channels].reshape(-1, channels).mean(axis=1)
    return AudioClip(np.clip(samples, -1.0, 1.0), float(rate))


def write_wav(path, samples, sample_rate):
    """Write mono 16-bit PCM."""
    pcm = np.clip(np.round(np.asarray(samples) * 32767.0), -32768, 32767).astype("<i2")
    payload = pcm.tobytes()
    fmt = struct.pack("<HHIIHH", WAVE_FORMAT_PCM, 1, int(sample_rate), int(sample_rate) * 2, 2, 16)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(payload)) + payload
    _atomic_write(path, b"RIFF" + struct.pack("<I", len(body)) + body)


# -- CSV / JSON -------------------------------------------------------------

def write_factors(path, matrix, prefix="c"):
    """CSV with a header row and 17 significant digits per value."""
    m = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow([f"{prefix}{j}" for j in range(m.shape[1])])
    for row in m:
        w.writerow([format(v, ".17g") for v in row])
    _atomic_write(path, out.getvalue().encode())


def read_factors(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(f"{path}: empty CSV")
    return np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64).reshape(
        -1, len(rows[0]))


def to_jsonable(obj):
    """Recursively convert dataclasses, numpy values and non-finite floats."""
    if is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return to_jsonable(obj.to_dict())
        return to_jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def dumps_report(obj):
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(path, obj):
    """JSON with sorted keys; NaN/inf become null."""
    _atomic_write(path, dumps_report(obj).encode())


def write_text(path, text):
    _atomic_write(path, text.encode())


# -- manifests --------------------------------------------------------------

def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    argv: list
    config: dict
    master_seed: int
    input_digests: dict
    tool_version: str
    wall_time: float = 0.0
    outputs: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls(**json.load(fh))
