"""
Reverse-mode automatic differentiation.

A Tensor is an n-dimensional float array (row-major, engine precision) with an
optional gradient. Primitive applications are recorded on the active Tape when
any input requires a gradient; outside a `with Tape():` block nothing is
recorded, which is how inference runs.

    with Tape() as tape:
        loss = F.mean(F.sigmoid(F.affine(x, w, b)))
    backward(tape, loss)       # accumulates into w.grad and b.grad
"""

import itertools
import logging
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from t2f.engine.precision import get_dtype
from t2f.errors import ContractError, NonFiniteError

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, float, int, Sequence]
BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_ids = itertools.count(1)
_active = threading.local()


class Tensor:
    """Numeric array carrying an optional accumulated gradient."""

    __array_priority__ = 100  # make ndarray ⊕ Tensor dispatch to Tensor

    def __init__(self, data: ArrayLike, requires_grad: bool = False, name: str = ""):
        array = np.array(data, dtype=get_dtype(), copy=True)
        if array.ndim == 0:
            array = array.reshape(())
        if not np.isfinite(array).all():
            raise NonFiniteError(
                f"non-finite value in tensor{' ' + name if name else ''} of shape {array.shape}"
            )
        self.data: np.ndarray = array
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self.id: int = next(_ids)

    @classmethod
    def _wrap(cls, array: np.ndarray, requires_grad: bool) -> "Tensor":
        out = cls.__new__(cls)
        if not np.isfinite(array).all():
            raise NonFiniteError(f"non-finite value produced, shape {array.shape}")
        out.data = array
        out.requires_grad = requires_grad
        out.grad = None
        out.name = ""
        out.id = next(_ids)
        return out

    # ── Introspection ─────────────────────────────────────────────────────────

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor._wrap(self.data, requires_grad=False)

    def __repr__(self) -> str:
        flag = ", requires_grad" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}{flag})"

    # ── Operators (delegate to functional) ───────────────────────────────────

    def __add__(self, other):
        from t2f.engine import functional as F
        return F.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from t2f.engine import functional as F
        return F.sub(self, other)

    def __rsub__(self, other):
        from t2f.engine import functional as F
        return F.sub(other, self)

    def __mul__(self, other):
        from t2f.engine import functional as F
        return F.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from t2f.engine import functional as F
        return F.mul(self, -1.0)


@dataclass
class Node:
    """One recorded primitive application."""
    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward: BackwardFn = field(repr=False)


class Tape:
    """
    Ordered record of primitive applications.

    Nodes are appended as ops execute, so the list is already in topological
    order. A tape belongs to one thread of execution; it can be replayed by
    several backward() calls, each accumulating into the leaves' gradients.
    """

    def __init__(self):
        self.nodes: list[Node] = []
        self._producers: dict[int, Node] = {}

    def __enter__(self) -> "Tape":
        stack = _stack()
        stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        stack = _stack()
        if stack and stack[-1] is self:
            stack.pop()

    def record(self, node: Node) -> None:
        self.nodes.append(node)
        self._producers[node.output.id] = node

    def produced(self, tensor: Tensor) -> bool:
        return tensor.id in self._producers

    def __len__(self) -> int:
        return len(self.nodes)


def _stack() -> list[Tape]:
    if not hasattr(_active, "stack"):
        _active.stack = []
    return _active.stack


def current_tape() -> Optional[Tape]:
    stack = _stack()
    return stack[-1] if stack else None


def apply_op(op: str, out: np.ndarray, inputs: Sequence[Tensor], grad_fn: BackwardFn) -> Tensor:
    """Wrap a forward result and record it on the active tape if needed."""
    tape = current_tape()
    track = tape is not None and any(t.requires_grad for t in inputs)
    result = Tensor._wrap(np.asarray(out, dtype=get_dtype()), requires_grad=track)
    if track:
        tape.record(Node(op=op, inputs=tuple(inputs), output=result, backward=grad_fn))
    return result


def backward(tape: Tape, loss: Tensor) -> dict[int, np.ndarray]:
    """
    Accumulate d(loss)/d(leaf) into every requires_grad leaf reached.

    Returns the gradient contributed by this call, keyed by leaf tensor id.
    Tensors outside the loss's dependency cone keep their gradients unchanged.
    """
    if loss.data.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not tape.produced(loss):
        raise ContractError("loss is not reachable from the tape")

    grads: dict[int, np.ndarray] = {loss.id: np.ones_like(loss.data)}
    owners: dict[int, Tensor] = {}

    for node in reversed(tape.nodes):
        upstream = grads.pop(node.output.id, None)
        if upstream is None:
            continue
        for inp, g in zip(node.inputs, node.backward(upstream)):
            if g is None or not inp.requires_grad:
                continue
            owners[inp.id] = inp
            if inp.id in grads:
                grads[inp.id] = grads[inp.id] + g
            else:
                grads[inp.id] = g

    contributed: dict[int, np.ndarray] = {}
    for tid, g in grads.items():
        leaf = owners.get(tid)
        if leaf is None:
            continue
        g = np.asarray(g, dtype=leaf.data.dtype).reshape(leaf.shape)
        leaf.grad = g.copy() if leaf.grad is None else leaf.grad + g
        contributed[tid] = g
    logger.debug(f"backward: {len(tape)} nodes, {len(contributed)} leaves")
    return contributed


def as_tensor(value: Union[Tensor, ArrayLike]) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def parameter(data: ArrayLike, name: str = "") -> Tensor:
    """A leaf that takes gradients."""
    return Tensor(data, requires_grad=True, name=name)
