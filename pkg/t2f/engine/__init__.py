from t2f.engine.tensor import Tensor, Tape, Node, backward, parameter, as_tensor, current_tape
from t2f.engine.precision import get_dtype, get_precision, set_precision, precision
from t2f.engine.optim import Adam, AdamState, adam_step
from t2f.engine.functional import RunningStats
from t2f.engine.gradcheck import (
    GradCheckResult,
    check_gradients,
    finite_difference_grad,
    primitive_suite,
)

__all__ = [
    "Tensor",
    "Tape",
    "Node",
    "backward",
    "parameter",
    "as_tensor",
    "current_tape",
    "get_dtype",
    "get_precision",
    "set_precision",
    "precision",
    "Adam",
    "AdamState",
    "adam_step",
    "RunningStats",
    "GradCheckResult",
    "check_gradients",
    "finite_difference_grad",
    "primitive_suite",
]
