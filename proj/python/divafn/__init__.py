"""Python bindings for the divafn C++ core.

The compiled extension module `_divafn` carries the implementation; this
package re-exports its public surface.
"""

from _divafn import (  # noqa: F401
    ContractViolation,
    FormatError,
    LinearClassifier,
    Matrix,
    Model,
    NumericalFailure,
    build_similarity,
    evaluate,
    expand_semantics,
    fuse,
    generate_synthetic,
    nll_pair_loss,
    pair_scores,
    predict,
    run_cli,
    run_gradcheck,
    sae_penalty,
    solve_sylvester,
    solve_w,
    stable_softplus,
    sylvester_oracle,
    train,
    train_classifier,
)

__all__ = [
    "ContractViolation",
    "FormatError",
    "LinearClassifier",
    "Matrix",
    "Model",
    "NumericalFailure",
    "build_similarity",
    "evaluate",
    "expand_semantics",
    "fuse",
    "generate_synthetic",
    "nll_pair_loss",
    "pair_scores",
    "predict",
    "run_cli",
    "run_gradcheck",
    "sae_penalty",
    "solve_sylvester",
    "solve_w",
    "stable_softplus",
    "sylvester_oracle",
    "train",
    "train_classifier",
]
