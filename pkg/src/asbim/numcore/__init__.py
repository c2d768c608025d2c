from .gradcheck import GradCheckResult, finite_difference_check, relative_error
from .ops import (
    as_mat,
    as_vec,
    dense_forward,
    gamma_from_logit,
    gamma_slope,
    masked_softmax,
    relu,
    sigmoid,
)
from .tape import Tape, Tensor, gradients

__all__ = [
    "GradCheckResult",
    "Tape",
    "Tensor",
    "as_mat",
    "as_vec",
    "dense_forward",
    "finite_difference_check",
    "gamma_from_logit",
    "gamma_slope",
    "gradients",
    "masked_softmax",
    "relative_error",
    "relu",
    "sigmoid",
]
