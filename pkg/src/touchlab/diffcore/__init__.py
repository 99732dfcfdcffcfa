from .tensor import (
    Tensor,
    add,
    as_tensor,
    concat,
    elu,
    grad_enabled,
    matmul,
    mul,
    neg,
    no_grad,
    relu,
    reshape,
    sigmoid,
    sigmoid_cross_entropy,
    slice_axis,
    softmax,
    softmax_cross_entropy,
    square,
    stack_last,
    sub,
    t_mean,
    t_sum,
    tanh,
    tile_rows,
    unitwise_linear,
)
from .nonlin import WIDTH_FACTOR, apply_activation, crelu, cres, relu_sq, sq
from .optim import Adam, AdamState, Parameter
from .gradcheck import check_gradients, numeric_gradient

__all__ = [
    "Adam",
    "AdamState",
    "Parameter",
    "Tensor",
    "WIDTH_FACTOR",
    "add",
    "apply_activation",
    "as_tensor",
    "check_gradients",
    "concat",
    "crelu",
    "cres",
    "elu",
    "grad_enabled",
    "matmul",
    "mul",
    "neg",
    "no_grad",
    "numeric_gradient",
    "relu",
    "relu_sq",
    "reshape",
    "sigmoid",
    "sigmoid_cross_entropy",
    "slice_axis",
    "softmax",
    "softmax_cross_entropy",
    "sq",
    "square",
    "stack_last",
    "sub",
    "t_mean",
    "t_sum",
    "tanh",
    "tile_rows",
    "unitwise_linear",
]
