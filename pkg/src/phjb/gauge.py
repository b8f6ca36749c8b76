"""Smooth gauge functionals built from the sup norm and the endpoint.

With a = ||gamma||_0^2 and b = |gamma(t)|^2 (so a >= b always):

    S(gamma)        = (a - b)^2 / a          (0 when a = 0)
    Upsilon^M(gamma) = S(gamma) + M b

S is vertically smooth with gradient -4 (a - b) gamma(t) / a and is invariant
under flat extension, so its Dupire time derivative vanishes identically.
The identity S + 2 b = (a^2 + b^2) / a gives the sandwich
a <= S + 2 b <= 3 a used throughout.
"""

from __future__ import annotations

import numpy as np

from .paths import Path, extend_semigroup, sup_norm

__all__ = [
    "eval_S",
    "grad_S",
    "eval_upsilon",
    "grad_upsilon",
    "pair_difference",
    "eval_upsilon_pair",
]


def _a_b(g: Path) -> tuple[float, np.ndarray, float]:
    end = g.endpoint
    a = sup_norm(g) ** 2
    b = float(end @ end)
    return a, end, b


def eval_S(g: Path) -> float:
    """S(gamma) = (||gamma||_0^2 - |gamma(t)|^2)^2 / ||gamma||_0^2."""
    a, _, b = _a_b(g)
    if a == 0.0:
        return 0.0
    return (a - b) ** 2 / a


def grad_S(g: Path) -> np.ndarray:
    """Vertical gradient of S: -4 (a - b) gamma(t) / a (zero path gives 0)."""
    a, end, b = _a_b(g)
    if a == 0.0:
        return np.zeros(g.space.dim)
    return (-4.0 * (a - b) / a) * end


def eval_upsilon(M: float, g: Path) -> float:
    """Upsilon^M(gamma) = S(gamma) + M |gamma(t)|^2."""
    a, _, b = _a_b(g)
    if a == 0.0:
        return 0.0
    return (a - b) ** 2 / a + M * b


def grad_upsilon(M: float, g: Path) -> np.ndarray:
    """Vertical gradient of Upsilon^M: grad S + 2 M gamma(t)."""
    a, end, b = _a_b(g)
    if a == 0.0:
        return np.zeros(g.space.dim)
    return (-4.0 * (a - b) / a) * end + (2.0 * M) * end


def pair_difference(anchor: Path, g: Path) -> Path:
    """Difference path used by the two-argument gauge.

    The path with the earlier horizon is carried forward along the semigroup
    to the later horizon and subtracted there; with equal horizons this is a
    plain samplewise difference.
    """
    if anchor.horizon <= g.horizon:
        return g - extend_semigroup(anchor, g.horizon)
    return anchor - extend_semigroup(g, anchor.horizon)


def eval_upsilon_pair(M: float, anchor: Path, g: Path, *, with_time: bool = False) -> float:
    """Upsilon^M of the pair difference, optionally plus |s - t|^2.

    The with_time form is the gauge whose sublevel sets control d_infty:
    a value <= delta forces d_infty <= (1 + sqrt 3) sqrt(delta).
    """
    val = eval_upsilon(M, pair_difference(anchor, g))
    if with_time:
        val += (g.horizon - anchor.horizon) ** 2
    return val
