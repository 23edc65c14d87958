"""Empirical coordination constraints, regions and coding simulation."""

import json

from ._coordkit import (
    ConfigurationError,
    DomainError,
    InfeasibleError,
    InstanceFormatError,
    NumericError,
    capacity,
    coordination_bounds,
    dc_constraint,
    gamma_star,
    hb,
)
from . import _coordkit

__all__ = [
    "ConfigurationError",
    "DomainError",
    "InfeasibleError",
    "InstanceFormatError",
    "NumericError",
    "capacity",
    "coordination_bounds",
    "dc_constraint",
    "evaluate",
    "evaluate_causal",
    "gamma_star",
    "hb",
    "membership",
    "simulate",
]


def _text(instance):
    return instance if isinstance(instance, str) else json.dumps(instance)


def evaluate(instance, restarts=16, seed=0):
    """Certified strictly causal constraint report for an instance dict."""
    return json.loads(_coordkit._evaluate(_text(instance), restarts, seed))


def evaluate_causal(instance, restarts=4, seed=0):
    return json.loads(_coordkit._evaluate_causal(_text(instance), restarts, seed))


def membership(instance, restarts=16, seed=0):
    return json.loads(_coordkit._membership(_text(instance), restarts, seed))


def simulate(instance, n=100, blocks=12, delta=0.05, eps_typ=0.1, trials=10, seed=0, mode="strict"):
    """Monte-Carlo summary with W = X as the auxiliary."""
    return json.loads(_coordkit._simulate(_text(instance), n, blocks, delta, eps_typ, trials, seed, mode))
