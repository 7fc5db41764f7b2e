"""
Named, seeded, counter-based random streams.

Every stream is a numpy ``Philox`` generator keyed by a 128-bit digest of
``(seed, stream name)``. Draws are consumed in a fixed per-item block, so
item k of a stream depends only on (seed, k): pools are prefix-consistent and
independent of generation order or worker count.
"""
import hashlib

import numpy as np

# Stream namespaces; labeled / observed / test pools never share a key
LABELED = "labeled"
OBSERVED = "observed"
TEST = "test"
MLP_INIT = "mlp"
SHUFFLE = "shuffle"
CV_SPLIT = "cv-split"


def stream_key(seed: int, stream: str) -> np.ndarray:
    """Philox key (two uint64 words) for a named stream"""
    digest = hashlib.blake2b(f"{int(seed)}/{stream}".encode("utf-8"), digest_size=16).digest()
    return np.frombuffer(digest, dtype="<u8").astype(np.uint64)


def generator(seed: int, stream: str) -> np.random.Generator:
    """Fresh generator positioned at counter 0 of the stream"""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, stream)))


def uniform_rows(seed: int, stream: str, n: int, width: int) -> np.ndarray:
    """
    (n, width) uniforms in [0, 1); row k uses draws k·width .. k·width+width−1.

    ``Generator.random`` consumes exactly one 64-bit word per double, so the
    first rows of a larger request equal a smaller request bitwise.
    """
    if n <= 0:
        return np.zeros((0, width))
    return generator(seed, stream).random(n * width).reshape(n, width)


def item_normals(seed: int, stream: str, index: int, size: int) -> np.ndarray:
    """Standard normals for item ``index`` of a stream (own sub-stream per item)"""
    return generator(seed, f"{stream}/{int(index)}").standard_normal(size)


def permutation(seed: int, stream: str, n: int) -> np.ndarray:
    return generator(seed, stream).permutation(n)
