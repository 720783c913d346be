"""Navigation state and its 16-dimensional error-state parameterization.

The error state stacks [δp, δv, δθ, δb_a, δb_g, δc]; attitude perturbations
are applied on the right, ``q ⊞ δθ = q ⊗ exp(δθ)``, matching every analytic
Jacobian in the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import quat_exp, quat_identity, quat_log, quat_multiply, quat_conjugate, quat_normalize
from .preintegration import BiasState

STATE_ERR_DIM = 16


@dataclass
class NavState:
    """Pose, velocity, inertial biases and odometer scale at time t."""

    t: float
    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q: np.ndarray = field(default_factory=quat_identity)
    bias: BiasState = field(default_factory=BiasState)

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float).reshape(3)
        self.v = np.asarray(self.v, dtype=float).reshape(3)
        self.q = quat_normalize(np.asarray(self.q, dtype=float))

    def copy(self) -> "NavState":
        return NavState(t=self.t, p=self.p.copy(), v=self.v.copy(), q=self.q.copy(), bias=self.bias)


def boxplus(state: NavState, delta: np.ndarray) -> NavState:
    """Apply a 16-dim error-state increment."""
    delta = np.asarray(delta, dtype=float).reshape(STATE_ERR_DIM)
    bias = BiasState(
        b_a=state.bias.b_a + delta[9:12],
        b_g=state.bias.b_g + delta[12:15],
        c=state.bias.c + delta[15],
    )
    return NavState(
        t=state.t,
        p=state.p + delta[0:3],
        v=state.v + delta[3:6],
        q=quat_normalize(quat_multiply(state.q, quat_exp(delta[6:9]))),
        bias=bias,
    )


def boxminus(a: NavState, b: NavState) -> np.ndarray:
    """16-dim error taking b to a: boxplus(b, boxminus(a, b)) == a."""
    dtheta = quat_log(quat_multiply(quat_conjugate(b.q), a.q))
    return np.concatenate(
        [
            a.p - b.p,
            a.v - b.v,
            dtheta,
            a.bias.b_a - b.bias.b_a,
            a.bias.b_g - b.bias.b_g,
            [a.bias.c - b.bias.c],
        ]
    )
