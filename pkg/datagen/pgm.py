"""
Plain-text PGM (P2) export of sensor images.
"""
import numpy as np

from infrastructure.errors import DimensionError
from infrastructure.retry_utils import atomic_write_text
from physics.schemas import SensorImage

MAXVAL = 65535
SEPARATOR_WIDTH = 2


def to_gray(pixels: np.ndarray) -> np.ndarray:
    """Scale by 65535/max and round; an all-zero image stays zero"""
    pixels = np.asarray(pixels, dtype=np.float64)
    peak = float(pixels.max()) if pixels.size else 0.0
    if peak <= 0.0:
        return np.zeros(pixels.shape, dtype=np.int64)
    return np.clip(np.rint(pixels * (MAXVAL / peak)), 0, MAXVAL).astype(np.int64)


def format_pgm(gray: np.ndarray) -> str:
    height, width = gray.shape
    lines = ["P2", f"{width} {height}", str(MAXVAL)]
    lines.extend(" ".join(str(int(v)) for v in row) for row in gray)
    return "\n".join(lines) + "\n"


def write_pgm(image: SensorImage, path: str) -> str:
    return atomic_write_text(path, format_pgm(to_gray(image.pixels)))


def side_by_side(obs: SensorImage, recon: SensorImage, path: str) -> str:
    """
    ``obs | separator | recon`` in one PGM, both halves on a shared scale.

    The separator is a 2-pixel column at full intensity.
    """
    if (obs.width, obs.height) != (recon.width, recon.height):
        raise DimensionError(
            f"side_by_side: {obs.width}x{obs.height} vs {recon.width}x{recon.height}"
        )
    sep = np.zeros((obs.height, SEPARATOR_WIDTH))
    canvas = np.concatenate([obs.pixels, sep, recon.pixels], axis=1)
    gray = to_gray(canvas)
    gray[:, obs.width:obs.width + SEPARATOR_WIDTH] = MAXVAL
    return atomic_write_text(path, format_pgm(gray))
