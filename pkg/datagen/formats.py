"""
Binary dataset and checkpoint files.

Both formats are little-endian with fixed-width integers and end with a
CRC-32 of every preceding byte.

Dataset (``SPND``)::

    header  magic[4] version:u32 n_labeled:u64 n_observed:u64
            width:u32 height:u32 param_dim:u32 flags:u32          (40 bytes)
    arrays  labeled params   f64[n_labeled, 3]
            labeled images   f32[n_labeled, height·width]
            observed params  f64[n_observed, 3]
            observed images  f32[n_observed, height·width]
    crc32   u32

Checkpoint (``SPNC``)::

    magic[4] version:u32 input_dim:u32 n_hidden:u32 hidden:u32[n_hidden]
    output_dim:u32 head_ranges:f64[3] flags:u32
    per layer: W f64[out, in] (row-major), b f64[out]
    if flags & 1: step:u64, then m and v for every array in layer order
    crc32 u32
"""
import struct
import zlib
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from agno.utils.log import logger

from infrastructure.errors import (
    ArchitectureMismatchError,
    BadMagicError,
    ChecksumError,
    DataError,
    TruncatedFileError,
    VersionMismatchError,
)
from infrastructure.retry_utils import atomic_write_bytes
from model.mlp import MlpArchitecture, MlpParams
from physics.schemas import OrbitalElements, SensorImage
from training.optimizer import AdamState
from training.schemas import LabeledSample, ObservedSample

DATASET_MAGIC = b"SPND"
CHECKPOINT_MAGIC = b"SPNC"
FORMAT_VERSION = 1
PARAM_DIM = 3
CRC_SIZE = 4

_DATASET_HEADER = struct.Struct("<4sIQQIIII")
DATASET_HEADER_SIZE = _DATASET_HEADER.size  # 40

# Dataset flags
FLAG_TEST_POOL = 1
# Checkpoint flags
FLAG_OPTIMIZER_STATE = 1


# =============================================================================
# Dataset
# =============================================================================

@dataclass
class Dataset:
    """Contents of one dataset file"""
    width: int
    height: int
    labeled: List[LabeledSample] = field(default_factory=list)
    observed: List[ObservedSample] = field(default_factory=list)
    flags: int = 0


def _images_f32(images: List[SensorImage], pixels: int) -> bytes:
    arr = np.empty((len(images), pixels), dtype="<f4")
    for k, img in enumerate(images):
        arr[k] = img.pixels.reshape(-1)
    return arr.tobytes()


def _params_f64(elements: List[OrbitalElements]) -> bytes:
    arr = np.empty((len(elements), PARAM_DIM), dtype="<f8")
    for k, x in enumerate(elements):
        arr[k] = x.as_array()
    return arr.tobytes()


def encode_dataset(d: Dataset) -> bytes:
    pixels = d.width * d.height
    header = _DATASET_HEADER.pack(
        DATASET_MAGIC, FORMAT_VERSION, len(d.labeled), len(d.observed),
        d.width, d.height, PARAM_DIM, d.flags,
    )
    body = b"".join((
        header,
        _params_f64([s.x for s in d.labeled]),
        _images_f32([s.y for s in d.labeled], pixels),
        _params_f64([s.x_hidden for s in d.observed]),
        _images_f32([s.y for s in d.observed], pixels),
    ))
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def save_dataset(path: str, d: Dataset) -> str:
    payload = encode_dataset(d)
    atomic_write_bytes(path, payload)
    logger.debug(f"[Gen] wrote {path} ({len(payload)} bytes)")
    return path


def _read(path: str) -> bytes:
    try:
        with open(path, "rb") as f:
            return f.read()
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e


def _check_crc(raw: bytes, path: str) -> None:
    stored = struct.unpack_from("<I", raw, len(raw) - CRC_SIZE)[0]
    actual = zlib.crc32(raw[:-CRC_SIZE]) & 0xFFFFFFFF
    if stored != actual:
        raise ChecksumError(f"{path}: CRC mismatch (stored {stored:08x}, computed {actual:08x})")


def _check_magic_version(raw: bytes, magic: bytes, path: str) -> None:
    if raw[:4] != magic:
        raise BadMagicError(f"{path}: bad magic {raw[:4]!r}, expected {magic!r}")
    version = struct.unpack_from("<I", raw, 4)[0]
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"{path}: format version {version}, expected {FORMAT_VERSION}")


def decode_dataset(raw: bytes, path: str = "<bytes>") -> Dataset:
    if len(raw) < DATASET_HEADER_SIZE:
        raise TruncatedFileError(f"{path}: {len(raw)} bytes, shorter than the dataset header")
    _check_magic_version(raw, DATASET_MAGIC, path)
    _, _, n_l, n_o, width, height, param_dim, flags = _DATASET_HEADER.unpack_from(raw, 0)
    if param_dim != PARAM_DIM:
        raise DataError(f"{path}: param_dim {param_dim}, expected {PARAM_DIM}")

    pixels = width * height
    sizes = [n_l * PARAM_DIM * 8, n_l * pixels * 4, n_o * PARAM_DIM * 8, n_o * pixels * 4]
    expected = DATASET_HEADER_SIZE + sum(sizes) + CRC_SIZE
    if len(raw) < expected:
        raise TruncatedFileError(f"{path}: {len(raw)} bytes, header announces {expected}")
    if len(raw) > expected:
        raise DataError(f"{path}: {len(raw) - expected} trailing bytes after the checksum")
    _check_crc(raw, path)

    offset = DATASET_HEADER_SIZE
    arrays = []
    for size, dtype in zip(sizes, ("<f8", "<f4", "<f8", "<f4")):
        arrays.append(np.frombuffer(raw, dtype=dtype, count=size // np.dtype(dtype).itemsize, offset=offset))
        offset += size
    lp = arrays[0].reshape(n_l, PARAM_DIM)
    li = arrays[1].reshape(n_l, pixels).astype(np.float64)
    op = arrays[2].reshape(n_o, PARAM_DIM)
    oi = arrays[3].reshape(n_o, pixels).astype(np.float64)

    labeled = [
        LabeledSample(x=OrbitalElements.from_vector(lp[k]), y=SensorImage(width, height, li[k]))
        for k in range(n_l)
    ]
    observed = [
        ObservedSample(y=SensorImage(width, height, oi[k]), x_hidden=OrbitalElements.from_vector(op[k]))
        for k in range(n_o)
    ]
    return Dataset(width=width, height=height, labeled=labeled, observed=observed, flags=flags)


def load_dataset(path: str) -> Dataset:
    """
    Read a dataset file.

    Raises:
        TruncatedFileError, BadMagicError, VersionMismatchError, ChecksumError
        (checked in that order), DataError for anything else malformed
    """
    return decode_dataset(_read(path), path)


# =============================================================================
# Checkpoint
# =============================================================================

class _Reader:
    def __init__(self, raw: bytes, path: str, limit: int):
        self.raw, self.path, self.limit, self.offset = raw, path, limit, 0

    def take(self, fmt: str) -> tuple:
        size = struct.calcsize(fmt)
        if self.offset + size > self.limit:
            raise TruncatedFileError(f"{self.path}: checkpoint ends inside its header")
        values = struct.unpack_from(fmt, self.raw, self.offset)
        self.offset += size
        return values

    def array(self, shape: Tuple[int, ...]) -> np.ndarray:
        count = int(np.prod(shape))
        if self.offset + 8 * count > self.limit:
            raise TruncatedFileError(f"{self.path}: checkpoint ends inside its arrays")
        arr = np.frombuffer(self.raw, dtype="<f8", count=count, offset=self.offset).reshape(shape)
        self.offset += 8 * count
        return arr.astype(np.float64)


def encode_checkpoint(params: MlpParams, state: Optional[AdamState] = None) -> bytes:
    arch = params.arch
    parts = [
        CHECKPOINT_MAGIC,
        struct.pack("<II", FORMAT_VERSION, arch.input_dim),
        struct.pack(f"<I{len(arch.hidden_dims)}I", len(arch.hidden_dims), *arch.hidden_dims),
        struct.pack("<I", arch.output_dim),
        np.asarray(params.head_ranges, dtype="<f8").tobytes(),
        struct.pack("<I", FLAG_OPTIMIZER_STATE if state is not None else 0),
    ]
    for W, b in zip(params.weights, params.biases):
        parts.append(np.ascontiguousarray(W, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b.reshape(-1), dtype="<f8").tobytes())
    if state is not None:
        parts.append(struct.pack("<Q", state.step))
        for arr in (*state.m, *state.v):
            parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def save_checkpoint(path: str, params: MlpParams, state: Optional[AdamState] = None) -> str:
    payload = encode_checkpoint(params, state)
    atomic_write_bytes(path, payload)
    logger.info(f"[Checkpoint] saved {path} ({params.arch.parameter_count} parameters)")
    return path


def decode_checkpoint(
    raw: bytes,
    path: str = "<bytes>",
    expected_arch: Optional[MlpArchitecture] = None,
) -> Tuple[MlpParams, Optional[AdamState]]:
    if len(raw) < 8 + CRC_SIZE:
        raise TruncatedFileError(f"{path}: {len(raw)} bytes, shorter than the checkpoint header")
    _check_magic_version(raw, CHECKPOINT_MAGIC, path)

    r = _Reader(raw, path, len(raw) - CRC_SIZE)
    r.offset = 8
    input_dim, n_hidden = r.take("<II")
    hidden = list(r.take(f"<{n_hidden}I")) if n_hidden else []
    (output_dim,) = r.take("<I")
    head_ranges = np.array(r.take("<3d"))
    (flags,) = r.take("<I")
    try:
        arch = MlpArchitecture(input_dim=input_dim, hidden_dims=hidden, output_dim=output_dim)
    except ValueError as e:
        raise DataError(f"{path}: invalid architecture in checkpoint: {e}") from e

    shapes = arch.layer_shapes
    expected = r.offset + sum(8 * (m * n + m) for m, n in shapes)
    if flags & FLAG_OPTIMIZER_STATE:
        expected += 8 + 2 * sum(8 * (m * n + m) for m, n in shapes)
    expected += CRC_SIZE
    if len(raw) < expected:
        raise TruncatedFileError(f"{path}: {len(raw)} bytes, header announces {expected}")
    if len(raw) > expected:
        raise DataError(f"{path}: {len(raw) - expected} trailing bytes after the checksum")
    _check_crc(raw, path)

    if expected_arch is not None and expected_arch != arch:
        raise ArchitectureMismatchError(
            f"{path}: checkpoint network {arch.input_dim}->{arch.hidden_dims}->{arch.output_dim} "
            f"does not match configured {expected_arch.input_dim}->{expected_arch.hidden_dims}->"
            f"{expected_arch.output_dim}"
        )

    weights, biases = [], []
    for m, n in shapes:
        weights.append(r.array((m, n)))
        biases.append(r.array((m,)).reshape(m, 1))
    params = MlpParams(weights=weights, biases=biases, arch=arch, head_ranges=head_ranges)

    state = None
    if flags & FLAG_OPTIMIZER_STATE:
        (step,) = r.take("<Q")
        arrays_shape = [a.shape for a in params.arrays()]
        m_arr = [r.array(s) for s in arrays_shape]
        v_arr = [r.array(s) for s in arrays_shape]
        state = AdamState(step=step, m=m_arr, v=v_arr)
    return params, state


def load_checkpoint(
    path: str,
    expected_arch: Optional[MlpArchitecture] = None,
) -> Tuple[MlpParams, Optional[AdamState]]:
    """
    Read a checkpoint; the optimizer state is None when the section is absent.

    Raises:
        ArchitectureMismatchError: ``expected_arch`` given and different
        DataError subclasses as for datasets
    """
    params, state = decode_checkpoint(_read(path), path, expected_arch)
    logger.debug(f"[Checkpoint] loaded {path} (optimizer state: {state is not None})")
    return params, state
