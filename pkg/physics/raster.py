"""
Gaussian-splat rasterisation of ground-track points onto an equirectangular
sensor image.

Pixel (row, col) is centred at continuous coordinates (v, u) = (row, col).
Each point deposits ``w·exp(−d²/(2σ²))`` on every pixel within 4σ. Between
3.5σ and 4σ the kernel is multiplied by a smoothstep that falls to 0 at 4σ,
so the image stays C¹ in the elements as splats cross the cutoff. Columns
wrap around the longitude seam, rows outside the image are dropped. The image
is divided by ``n_samples`` (never by its maximum, which is not smooth).
"""
import math
from typing import Optional, Sequence, Tuple

import numpy as np

from infrastructure.errors import ContractError
from .dual import Dual
from .schemas import PhysicsConstants, SensorImage, TWO_PI

TRUNCATION_SIGMAS = 4.0
TAPER_START_SIGMAS = 3.5


def pixel_coordinates(lon: Dual, lat: Dual, c: PhysicsConstants) -> Tuple[Dual, Dual]:
    u = (lon + math.pi) * (c.width / TWO_PI)
    v = (lat + 0.5 * math.pi) * (c.height / math.pi)
    return u, v


def splat(
    u: Dual,
    v: Dual,
    weight: Dual,
    c: PhysicsConstants,
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Accumulate splats; tangents follow when the inputs carry them.

    Only (point, pixel) pairs strictly inside the cutoff and on a valid row are
    kept, so every later array is one flat run of covered pixels.

    Returns:
        (flat image of length width·height, flat tangent image (width·height, 3) or None)
    """
    width, height = c.width, c.height
    size = width * height
    if u.val.shape[0] == 0:
        return np.zeros(size), (np.zeros((size, 3)) if u.tan is not None else None)

    sigma = c.sigma_splat
    cutoff = TRUNCATION_SIGMAS * sigma
    taper_start = TAPER_START_SIGMAS * sigma
    radius = int(math.ceil(cutoff))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)

    # candidate pixel centres around each point: (n, K)
    col_c = np.floor(u.val)[:, None] + offsets[None, :]
    row_c = np.floor(v.val)[:, None] + offsets[None, :]
    du = u.val[:, None] - col_c
    dv = v.val[:, None] - row_c

    # (n, K_rows, K_cols) -> flat covered pairs
    d2_box = dv[:, :, None] ** 2 + du[:, None, :] ** 2
    covered = (d2_box < cutoff * cutoff) & ((row_c >= 0) & (row_c < height))[:, :, None]
    point, r_off, c_off = np.nonzero(covered)
    d2 = d2_box[point, r_off, c_off]

    gauss = np.exp(-d2 / (2.0 * sigma * sigma))
    # smoothstep taper on [taper_start, cutoff]
    dist = np.sqrt(d2)
    s = np.clip((cutoff - dist) / (cutoff - taper_start), 0.0, 1.0)
    kernel = gauss * (s * s * (3.0 - 2.0 * s))

    rows = row_c[point, r_off].astype(np.intp)
    cols = np.mod(col_c[point, c_off], width).astype(np.intp)
    index = rows * width + cols

    w = weight.val[point]
    image = np.bincount(index, weights=(w * kernel) / c.n_samples, minlength=size)

    if u.tan is None:
        return image, None

    # kernel = g(d²)·taper(d); ∂kernel/∂u = radial·du and ∂kernel/∂v = radial·dv
    # with radial = −kernel/σ² + g·taper'(d)/d. Pixel centres are constants.
    band = s < 1.0
    dtaper = np.where(band, -6.0 * s * (1.0 - s) / (cutoff - taper_start), 0.0)
    radial = -kernel / (sigma * sigma) + np.where(band, gauss * dtaper / np.where(band, dist, 1.0), 0.0)

    du_p = du[point, c_off][:, None]
    dv_p = dv[point, r_off][:, None]
    dkernel = radial[:, None] * (du_p * u.tan[point] + dv_p * v.tan[point])          # (m, 3)
    w_tan = weight.tan[point] if weight.tan is not None else 0.0
    d_contrib = (w_tan * kernel[:, None] + w[:, None] * dkernel) / c.n_samples
    slots = (index[:, None] * 3 + np.arange(3)).reshape(-1)
    tangent = np.bincount(slots, weights=d_contrib.reshape(-1), minlength=size * 3).reshape(size, 3)
    return image, tangent


def rasterize(points: Sequence[Tuple[float, float, float]], c: PhysicsConstants) -> SensorImage:
    """
    Rasterise (lon, lat, weight) points.

    Args:
        points: Sequence of (lon rad, lat rad, weight >= 0), or an (n, 3) array
        c: Physical / image constants

    Returns:
        SensorImage of c.width × c.height
    """
    arr = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if np.any(arr[:, 2] < 0.0):
        raise ContractError("rasterize: weights must be non-negative")
    lon, lat = Dual(arr[:, 0]), Dual(arr[:, 1])
    u, v = pixel_coordinates(lon, lat, c)
    image, _ = splat(u, v, Dual(arr[:, 2]), c)
    return SensorImage(width=c.width, height=c.height, pixels=image)
