"""Exact robustness verification of message-passing networks under edge perturbations."""

from ._gnncert import (
    Graph,
    GnncertError,
    Model,
    Spec,
    attack,
    bounds,
    brute_force,
    export_lp,
    is_admissible,
    margin,
    sgm,
    verify,
)

__all__ = [
    "Graph",
    "GnncertError",
    "Model",
    "Spec",
    "attack",
    "bounds",
    "brute_force",
    "export_lp",
    "is_admissible",
    "margin",
    "sgm",
    "verify",
]
