"""
Forward-mode dual numbers with a 3-dimensional tangent, vectorised over the
time samples of one track.

``val`` has shape (n,), ``tan`` has shape (n, 3) or is ``None``. With
``tan=None`` every operation computes the value only, using exactly the same
floating-point expressions, so a value-only pass and a differentiated pass
produce bitwise-identical images.
"""
from typing import Optional, Union

import numpy as np

Number = Union[float, np.ndarray]


class Dual:
    __slots__ = ("val", "tan")

    def __init__(self, val, tan: Optional[np.ndarray] = None):
        self.val = np.asarray(val, dtype=np.float64)
        self.tan = tan

    @classmethod
    def seed(cls, value: float, index: int, n: int, with_tangent: bool) -> "Dual":
        """Independent variable number ``index`` broadcast over n samples"""
        val = np.full(n, float(value))
        if not with_tangent:
            return cls(val)
        tan = np.zeros((n, 3))
        tan[:, index] = 1.0
        return cls(val, tan)

    @classmethod
    def constant(cls, value: Number, with_tangent: bool) -> "Dual":
        val = np.asarray(value, dtype=np.float64)
        if not with_tangent:
            return cls(val)
        return cls(val, np.zeros(val.shape + (3,)))

    # -------------------------------------------------------------------------
    # Arithmetic
    # -------------------------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, _tan_add(self.tan, other.tan))
        return Dual(self.val + other, self.tan)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.val, None if self.tan is None else -self.tan)

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, _tan_add(self.tan, _tan_neg(other.tan)))
        return Dual(self.val - other, self.tan)

    def __rsub__(self, other):
        return Dual(other - self.val, _tan_neg(self.tan))

    def __mul__(self, other):
        if isinstance(other, Dual):
            tan = None
            if self.tan is not None:
                tan = self.tan * other.val[..., None] + other.tan * self.val[..., None]
            return Dual(self.val * other.val, tan)
        factor = np.asarray(other, dtype=np.float64)
        tan = None if self.tan is None else self.tan * _col(factor)
        return Dual(self.val * factor, tan)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            q = self.val / other.val
            tan = None
            if self.tan is not None:
                tan = (self.tan - other.tan * q[..., None]) / other.val[..., None]
            return Dual(q, tan)
        factor = np.asarray(other, dtype=np.float64)
        tan = None if self.tan is None else self.tan / _col(factor)
        return Dual(self.val / factor, tan)

    def _chain(self, val: np.ndarray, deriv: np.ndarray) -> "Dual":
        if self.tan is None:
            return Dual(val)
        return Dual(val, self.tan * deriv[..., None])


def _col(factor: np.ndarray) -> np.ndarray:
    return factor[..., None] if factor.ndim else factor


def _tan_add(a: Optional[np.ndarray], b: Optional[np.ndarray]) -> Optional[np.ndarray]:
    if a is None or b is None:
        return None
    return a + b


def _tan_neg(a: Optional[np.ndarray]) -> Optional[np.ndarray]:
    return None if a is None else -a


# =============================================================================
# Elementary functions
# =============================================================================

def sin(x: Dual) -> Dual:
    return x._chain(np.sin(x.val), np.cos(x.val))


def cos(x: Dual) -> Dual:
    return x._chain(np.cos(x.val), -np.sin(x.val))


def sqrt(x: Dual) -> Dual:
    root = np.sqrt(x.val)
    return x._chain(root, 0.5 / root)


def arcsin(x: Dual) -> Dual:
    return x._chain(np.arcsin(x.val), 1.0 / np.sqrt(1.0 - x.val * x.val))


def arctan2(y: Dual, x: Dual) -> Dual:
    val = np.arctan2(y.val, x.val)
    if y.tan is None:
        return Dual(val)
    r2 = (x.val * x.val + y.val * y.val)[..., None]
    tan = (x.val[..., None] * y.tan - y.val[..., None] * x.tan) / r2
    return Dual(val, tan)
