"""
The forward operator f̂: (e, i, ω) -> sensor image, and its Jacobian.

Both entry points run the same propagation -> ground track -> splat pipeline;
``render_jacobian`` carries a 3-dimensional forward-mode tangent through it.
The value path is shared, so its image is bitwise equal to ``render``.
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence, Tuple

import numpy as np

from infrastructure.errors import NumericError
from .dual import Dual
from .orbit import ground_track_dual, propagate
from .raster import pixel_coordinates, splat
from .schemas import IntensityLaw, OrbitalElements, PhysicsConstants, SensorImage


def sample_times(c: PhysicsConstants) -> np.ndarray:
    """t_k = k·t_span/(n_samples − 1), k = 0..n_samples−1"""
    k = np.arange(c.n_samples, dtype=np.float64)
    return k * (c.t_span / (c.n_samples - 1))


def _intensity(e: float, r: Dual, c: PhysicsConstants, with_tangent: bool) -> Dual:
    n = r.val.shape[0]
    if c.intensity_law == IntensityLaw.INVERSE_SQUARE:
        ecc = Dual.seed(e, 0, n, with_tangent)
        ratio = c.a * (1.0 - ecc) / r
        return ratio * ratio
    return Dual.constant(np.ones(n), with_tangent)


def _forward(x: OrbitalElements, c: PhysicsConstants, with_tangent: bool):
    x.check_domain(c.e_max)
    px, py, pz, r = propagate(x, sample_times(c), c, with_tangent)
    lon, lat = ground_track_dual(px, py, pz)
    u, v = pixel_coordinates(lon, lat, c)
    weight = _intensity(x.e, r, c, with_tangent)
    return splat(u, v, weight, c)


def render(x: OrbitalElements, c: PhysicsConstants) -> SensorImage:
    """Simulated observation f̂(x), deterministic for identical inputs"""
    image, _ = _forward(x, c, with_tangent=False)
    return SensorImage(width=c.width, height=c.height, pixels=image)


def render_jacobian(x: OrbitalElements, c: PhysicsConstants) -> Tuple[SensorImage, np.ndarray]:
    """
    Image and its Jacobian with respect to (e, i, ω).

    Returns:
        (image, J) with J of shape (width·height, 3), J[:, k] = ∂pixels/∂x_k

    Raises:
        NumericError: a sample sits on a pole, or the Jacobian is not finite
    """
    image, jac = _forward(x, c, with_tangent=True)
    if not np.all(np.isfinite(jac)):
        raise NumericError(f"render_jacobian: non-finite derivative for {x}")
    return SensorImage(width=c.width, height=c.height, pixels=image), jac


def render_jacobians(
    elements: Sequence[OrbitalElements],
    c: PhysicsConstants,
    threads: int = 1,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    ``render_jacobian`` for a batch of elements.

    Samples are independent, so with ``threads > 1`` they are rendered on a
    thread pool. Results are stored by sample index and are bitwise identical
    for any thread count.

    Returns:
        (images (width·height, B), jacobians (B, width·height, 3))
    """
    images = np.empty((c.pixel_count, len(elements)))
    jacobians = np.empty((len(elements), c.pixel_count, 3))

    def one(j: int) -> None:
        image, J = render_jacobian(elements[j], c)
        images[:, j] = image.pixels.reshape(-1)
        jacobians[j] = J

    if threads <= 1 or len(elements) <= 1:
        for j in range(len(elements)):
            one(j)
    else:
        with ThreadPoolExecutor(max_workers=min(threads, len(elements))) as pool:
            # list() re-raises the first failure in sample order
            list(pool.map(one, range(len(elements))))
    return images, jacobians
