"""Concatenated nonlinearities.

crelu doubles width by splitting sign information into two rectified halves;
sq doubles width by appending squares; cres composes both (4x width) and is
the workhorse multiplicative nonlinearity. All are ordinary graph ops, so
gradients come for free.
"""

from . import tensor as T

# Output width per input unit for each named activation.
WIDTH_FACTOR = {
    "crelu": 2,
    "sq": 2,
    "cres": 4,
    "relu_sq": 2,
    "relu": 1,
    "tanh": 1,
    "sigmoid": 1,
    "elu": 1,
    "identity": 1,
}


def crelu(x):
    """CReLU(x) = ReLU(x) (+) ReLU(-x); keeps both signs, doubles width."""
    return T.concat([T.relu(x), T.relu(T.neg(x))], axis=-1)


def sq(x):
    """Sq(x) = x (+) x^2; appends squared units, doubles width."""
    return T.concat([x, T.square(x)], axis=-1)


def cres(x):
    """CReS(x) = ReLU(x) (+) ReLU(-x) (+) ReLU(x)^2 (+) ReLU(-x)^2.

    Identical to sq(crelu(x)) including block order.
    """
    pos = T.relu(x)
    neg = T.relu(T.neg(x))
    return T.concat([pos, neg, T.square(pos), T.square(neg)], axis=-1)


def relu_sq(x):
    """ReLU(x) (+) x^2: the sign-symmetry ablation ([2,-3] -> [2,0,4,9])."""
    return T.concat([T.relu(x), T.square(x)], axis=-1)


def apply_activation(name, x):
    if name == "crelu":
        return crelu(x)
    if name == "sq":
        return sq(x)
    if name == "cres":
        return cres(x)
    if name == "relu_sq":
        return relu_sq(x)
    if name == "relu":
        return T.relu(x)
    if name == "tanh":
        return T.tanh(x)
    if name == "sigmoid":
        return T.sigmoid(x)
    if name == "elu":
        return T.elu(x)
    if name == "identity":
        return x
    from ..errors import ConfigurationError

    raise ConfigurationError(f"unknown activation: {name!r}")
