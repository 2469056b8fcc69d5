"""Context-aware multiple-instance learning with learnable hook tokens.

The heavy lifting lives in a C++ core; this package is a thin numpy-facing
shim over it. `Model` runs forward passes on one bag at a time (rows are
instances); the free functions expose the structural checks and the bag file
format. Training and sweeps stay in the `hookmil` command-line tool.
"""

from ._hookmil import (
    Model,
    analytic_flop_ratio,
    diversity_loss,
    generate_dataset,
    induced_dependency,
    mean_offdiag_similarity,
    numerical_rank,
    read_bag,
    softmax_jacobian_norm,
    write_bag,
)

__all__ = [
    "Model",
    "analytic_flop_ratio",
    "diversity_loss",
    "generate_dataset",
    "induced_dependency",
    "mean_offdiag_similarity",
    "numerical_rank",
    "read_bag",
    "softmax_jacobian_norm",
    "write_bag",
]
