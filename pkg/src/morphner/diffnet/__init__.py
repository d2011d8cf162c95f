"""Minimal differentiable numeric core: graph ops, parameters, Adam."""

from .graph import (
    BiLstmWeights,
    LstmWeights,
    Node,
    add,
    add_all,
    affine,
    backward,
    bilstm,
    concat,
    constant,
    dot,
    dropout,
    embed,
    lstm_run,
    lstm_step,
    neg_log_softmax_pick,
    relu,
    stack,
    sub,
    tanh,
)
from .gradcheck import grad_check
from .params import (
    HyperParams,
    ModelParameters,
    Parameter,
    adam_update,
    glorot,
    lstm_bias,
)

__all__ = [
    "BiLstmWeights",
    "HyperParams",
    "LstmWeights",
    "ModelParameters",
    "Node",
    "Parameter",
    "adam_update",
    "add",
    "add_all",
    "affine",
    "backward",
    "bilstm",
    "concat",
    "constant",
    "dot",
    "dropout",
    "embed",
    "glorot",
    "grad_check",
    "lstm_bias",
    "lstm_run",
    "lstm_step",
    "neg_log_softmax_pick",
    "relu",
    "stack",
    "sub",
    "tanh",
]
