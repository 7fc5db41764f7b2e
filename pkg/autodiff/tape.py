"""
Define-by-run reverse-mode automatic differentiation over dense float64 tensors.

A ``Tape`` is rebuilt for every forward pass. Each op appends a ``TapeValue``
whose ``vjp`` maps the node's output gradient to one gradient per parent.
Nodes are appended in creation order, so parents always have smaller ids and
``backward`` is a single reverse sweep over the node list.

All values are 2-D arrays: column vectors are ``(n, 1)``, mini-batches are
``(n, B)`` with one sample per column.
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from infrastructure.errors import ContractError, DimensionError, NumericError

VjpFn = Callable[[np.ndarray], Tuple[np.ndarray, ...]]


# =============================================================================
# Nodes
# =============================================================================

@dataclass(eq=False)
class TapeValue:
    """A node of the reverse-mode graph"""
    id: int
    data: np.ndarray
    op: str
    parents: Tuple[int, ...] = ()
    grad: Optional[np.ndarray] = None
    vjp: Optional[VjpFn] = field(default=None, repr=False)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    @property
    def gradient(self) -> np.ndarray:
        """Gradient with lazy zero allocation"""
        if self.grad is None:
            return np.zeros_like(self.data)
        return self.grad

    def item(self) -> float:
        if self.data.shape != (1, 1):
            raise ContractError(f"item() needs a 1x1 node, got {self.data.shape}")
        return float(self.data[0, 0])


class Tape:
    """Append-only record of one forward pass (single owner, not thread-safe)"""

    def __init__(self):
        self.nodes: List[TapeValue] = []
        self.next_id = 0
        self._params: Dict[int, TapeValue] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    def _record(
        self,
        data: np.ndarray,
        op: str,
        parents: Sequence[TapeValue] = (),
        vjp: Optional[VjpFn] = None,
    ) -> TapeValue:
        node = TapeValue(
            id=self.next_id,
            data=data,
            op=op,
            parents=tuple(p.id for p in parents),
            vjp=vjp,
        )
        self.nodes.append(node)
        self.next_id += 1
        return node

    # -------------------------------------------------------------------------
    # Leaves
    # -------------------------------------------------------------------------

    def constant(self, data) -> TapeValue:
        """Leaf that is not differentiated with respect to anything"""
        return self._record(_as_matrix(data), "const")

    def variable(self, data) -> TapeValue:
        """Leaf whose gradient is wanted (fresh copy of ``data``)"""
        return self._record(_as_matrix(data).copy(), "leaf")

    def param(self, array: np.ndarray) -> TapeValue:
        """
        Bind a model parameter array as a leaf.

        Binding the same array object twice returns the same node, so a
        parameter shared by several sub-expressions accumulates one gradient.
        """
        key = id(array)
        node = self._params.get(key)
        if node is None or node.data is not array:
            if array.ndim != 2:
                raise DimensionError(f"parameters must be 2-D, got shape {array.shape}")
            node = self._record(array, "param")
            self._params[key] = node
        return node

    def grad_of(self, array: np.ndarray) -> np.ndarray:
        """Gradient accumulated on the leaf bound to ``array``"""
        node = self._params.get(id(array))
        if node is None or node.data is not array:
            return np.zeros_like(array)
        return node.gradient

    def reset(self) -> None:
        """Zero every gradient so ``backward`` can run again"""
        for node in self.nodes:
            node.grad = None


def _as_matrix(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 0:
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        return arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"tape values are 2-D, got {arr.ndim}-D input")
    return arr


def _require_same_shape(a: TapeValue, b: TapeValue, op: str) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


# =============================================================================
# Operations
# =============================================================================

def affine(tape: Tape, W: TapeValue, x: TapeValue, b: TapeValue) -> TapeValue:
    """W·x + b, with b (m×1) added to every column of W·x"""
    m, n = W.shape
    if x.shape[0] != n or b.shape != (m, 1):
        raise DimensionError(f"affine: W{W.shape} · x{x.shape} + b{b.shape} does not conform")

    Wd, xd = W.data, x.data

    def vjp(g: np.ndarray):
        return g @ xd.T, Wd.T @ g, g.sum(axis=1, keepdims=True)

    return tape._record(Wd @ xd + b.data, "affine", (W, x, b), vjp)


def relu(tape: Tape, x: TapeValue) -> TapeValue:
    """Elementwise max(0, x); subgradient 0 at x = 0"""
    mask = x.data > 0.0

    def vjp(g: np.ndarray):
        return (np.where(mask, g, 0.0),)

    return tape._record(np.where(mask, x.data, 0.0), "relu", (x,), vjp)


def _stable_sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid(tape: Tape, x: TapeValue) -> TapeValue:
    s = _stable_sigmoid(x.data)

    def vjp(g: np.ndarray):
        return (g * s * (1.0 - s),)

    return tape._record(s, "sigmoid", (x,), vjp)


def mse(tape: Tape, a: TapeValue, b: TapeValue) -> TapeValue:
    """Mean over all entries of (a − b)²"""
    _require_same_shape(a, b, "mse")
    diff = a.data - b.data
    n = diff.size

    def vjp(g: np.ndarray):
        da = g[0, 0] * 2.0 * diff / n
        return da, -da

    return tape._record(np.array([[np.mean(diff * diff)]]), "mse", (a, b), vjp)


def column_weighted_mse(
    tape: Tape,
    a: TapeValue,
    b: TapeValue,
    weights: Union[Sequence[float], np.ndarray],
) -> TapeValue:
    """
    (1/B) Σ_j w_j · mean_i (a_ij − b_ij)² over the B columns.

    With one sample per column this is the mean of per-sample weighted MSEs,
    the mini-batch form of the hybrid loss.
    """
    _require_same_shape(a, b, "column_weighted_mse")
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    rows, cols = a.shape
    if w.shape[0] != cols:
        raise DimensionError(f"column_weighted_mse: {w.shape[0]} weights for {cols} columns")
    diff = a.data - b.data
    per_column = np.mean(diff * diff, axis=0)
    value = float(np.dot(w, per_column)) / cols

    def vjp(g: np.ndarray):
        da = g[0, 0] * 2.0 * diff * (w / (rows * cols))[None, :]
        return da, -da

    return tape._record(np.array([[value]]), "column_weighted_mse", (a, b), vjp)


def total(tape: Tape, x: TapeValue) -> TapeValue:
    """Sum of all entries"""
    shape = x.shape

    def vjp(g: np.ndarray):
        return (np.full(shape, g[0, 0]),)

    return tape._record(np.array([[np.sum(x.data)]]), "sum", (x,), vjp)


def scale(tape: Tape, x: TapeValue, factor) -> TapeValue:
    """
    Multiply by a constant: a scalar, or an (m×1) column applied row-wise.
    """
    f = np.asarray(factor, dtype=np.float64)
    if f.ndim == 0:
        pass
    elif f.size == x.shape[0]:
        f = f.reshape(-1, 1)
    else:
        raise DimensionError(f"scale: factor of size {f.size} for value of shape {x.shape}")

    def vjp(g: np.ndarray):
        return (g * f,)

    return tape._record(x.data * f, "scale", (x,), vjp)


def add(tape: Tape, a: TapeValue, b: TapeValue) -> TapeValue:
    _require_same_shape(a, b, "add")

    def vjp(g: np.ndarray):
        return g, g

    return tape._record(a.data + b.data, "add", (a, b), vjp)


def inject_external_vjp(
    tape: Tape,
    input: TapeValue,
    output_data,
    jacobian,
) -> TapeValue:
    """
    Record a node produced outside the tape together with its Jacobian.

    Single sample: ``input`` is k×1, ``output_data`` p×1, ``jacobian`` p×k.
    Column batch: ``input`` is k×B, ``output_data`` p×B, ``jacobian`` B×p×k
    (one Jacobian per column). The VJP is dL/dinput = Jᵀ · dL/doutput.
    """
    out = _as_matrix(output_data)
    J = np.asarray(jacobian, dtype=np.float64)
    k, batch = input.shape
    p = out.shape[0]

    if J.ndim == 2:
        J = J[None, :, :]
    if J.shape != (batch, p, k) or out.shape != (p, batch):
        raise DimensionError(
            f"inject_external_vjp: input {input.shape}, output {out.shape}, jacobian {np.shape(jacobian)}"
        )
    if not np.all(np.isfinite(J)):
        raise NumericError("inject_external_vjp: jacobian has non-finite entries")

    def vjp(g: np.ndarray):
        # (B, k) = Σ_p J[b, p, k] · g[p, b]
        return (np.einsum("bpk,pb->kb", J, g),)

    return tape._record(out, "external", (input,), vjp)


# =============================================================================
# Backward
# =============================================================================

def backward(tape: Tape, root: TapeValue) -> None:
    """
    Accumulate ∂root/∂node into every node reachable from ``root``.

    Raises:
        ContractError: root is not 1×1, or gradients were not reset
    """
    if root.shape != (1, 1):
        raise ContractError(f"backward needs a scalar (1x1) root, got {root.shape}")
    if any(node.grad is not None for node in tape.nodes):
        raise ContractError("backward called on a tape with live gradients; call reset() first")

    nodes = tape.nodes
    root.grad = np.ones((1, 1))
    for node in reversed(nodes[: root.id + 1]):
        if node.grad is None or node.vjp is None:
            continue
        for pid, g in zip(node.parents, node.vjp(node.grad)):
            parent = nodes[pid]
            if parent.grad is None:
                parent.grad = np.array(g, dtype=np.float64, copy=True)
            else:
                parent.grad = parent.grad + g
