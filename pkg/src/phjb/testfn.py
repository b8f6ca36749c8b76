"""Smooth test functionals and gauge packs for equation-side checks.

TestFunctionPhi bundles a cylinder path functional with analytic Dupire
derivatives; the derivatives are cross-checked against finite differences on
sampled paths before a functional is trusted. GaugePack is the confining
perturbation class: an outer function of (time, gauge value) with nonnegative
slope in the gauge argument plus anchored pair-gauge terms with positive
weights; packs localize a touching premise without polluting the derivative
terms at their own anchor.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .gauge import eval_upsilon, grad_upsilon, pair_difference
from .paths import Path, dupire_derivatives, extend_flat, sup_norm, vertical_bump

__all__ = ["TestFunctionPhi", "GaugePack", "differentiability_probe"]


@dataclass(frozen=True)
class TestFunctionPhi:
    """Path functional with analytic time and vertical derivatives.

    Attributes
    ----------
    value, dt, dx : callables on Path
        The functional, its horizontal (flat-extension) derivative, and its
        vertical gradient.
    a_star_dx_continuous : bool
        Whether A* dx is continuous along paths; the functional Ito check
        refuses functionals that do not declare this.
    label : str
        Used in reports.
    """

    __test__ = False  # keep pytest from collecting the class

    value: Callable[[Path], float]
    dt: Callable[[Path], float]
    dx: Callable[[Path], np.ndarray]
    a_star_dx_continuous: bool = True
    label: str = ""

    def __call__(self, g: Path) -> float:
        return float(self.value(g))

    def shifted(self, const: float) -> "TestFunctionPhi":
        """Same functional plus a constant (derivatives unchanged)."""
        base = self.value
        return replace(self, value=lambda g: float(base(g)) + const)

    def time_ramp(self, k: float, t_final: float) -> "TestFunctionPhi":
        """Add k*(t_final - s); shifts the time derivative by -k."""
        base_v, base_t = self.value, self.dt
        return replace(
            self,
            value=lambda g: float(base_v(g)) + k * (t_final - g.horizon),
            dt=lambda g: float(base_t(g)) - k,
            label=(self.label + "+ramp") if self.label else "ramp",
        )

    def validate_on(
        self,
        paths,
        *,
        t_final: Optional[float] = None,
        tol: float = 1e-5,
        h: Optional[float] = None,
    ) -> None:
        """Check analytic derivatives against grid finite differences.

        Raises ValueError at the first sample where they disagree beyond tol
        (absolute, relative to max(1, |analytic|)).
        """
        for g in paths:
            fd = dupire_derivatives(self.value, g, t_final=t_final, h=h)
            ax = np.asarray(self.dx(g), dtype=float)
            gap = np.max(np.abs(ax - fd.dx))
            if gap > tol * max(1.0, float(np.max(np.abs(ax)))):
                raise ValueError(
                    f"{self.label or 'phi'}: vertical derivative off by {gap:.3e} "
                    f"at horizon {g.horizon}"
                )
            if fd.dt is not None:
                at = float(self.dt(g))
                if abs(at - fd.dt) > tol * max(1.0, abs(at)):
                    raise ValueError(
                        f"{self.label or 'phi'}: time derivative off by "
                        f"{abs(at - fd.dt):.3e} at horizon {g.horizon}"
                    )

    # common constructors ------------------------------------------------

    @staticmethod
    def constant(c: float, dim: int, label: str = "const") -> "TestFunctionPhi":
        return TestFunctionPhi(
            value=lambda g: c,
            dt=lambda g: 0.0,
            dx=lambda g: np.zeros(dim),
            label=label,
        )

    @staticmethod
    def linear_endpoint(w, c: float = 0.0, label: str = "linear") -> "TestFunctionPhi":
        """g -> (w, gamma(t)) + c."""
        w = np.asarray(w, dtype=float)
        return TestFunctionPhi(
            value=lambda g: float(w @ g.endpoint) + c,
            dt=lambda g: 0.0,
            dx=lambda g: w.copy(),
            label=label,
        )

    @staticmethod
    def quadratic_endpoint(label: str = "quad") -> "TestFunctionPhi":
        """g -> |gamma(t)|^2."""
        return TestFunctionPhi(
            value=lambda g: float(g.endpoint @ g.endpoint),
            dt=lambda g: 0.0,
            dx=lambda g: 2.0 * g.endpoint,
            label=label,
        )


def differentiability_probe(
    value: Callable[[Path], float],
    dt: Callable[[Path], float],
    dx: Callable[[Path], np.ndarray],
    g: Path,
    *,
    t_final: Optional[float] = None,
    h_base: float = 1e-3,
) -> bool:
    """True when finite differences converge to the supplied derivatives.

    Three tests, all must hold: halving the central-difference step shrinks
    the vertical error (it stalls at a one-sided kink); forward and backward
    differences agree (central differences alone cancel at a symmetric
    cone); and the flat-extension time slope matches when it exists.
    """
    fd1 = dupire_derivatives(value, g, t_final=t_final, h=h_base)
    fd2 = dupire_derivatives(value, g, t_final=t_final, h=0.5 * h_base)
    ax = np.asarray(dx(g), dtype=float)
    e1 = float(np.max(np.abs(fd1.dx - ax)))
    e2 = float(np.max(np.abs(fd2.dx - ax)))
    ok_x = e2 <= 0.6 * e1 + 1e-8

    f0 = float(value(g))
    scale = max(1.0, float(np.max(np.abs(ax))))
    h = h_base * max(1.0, float(np.max(np.abs(g.endpoint))))
    for k in range(g.space.dim):
        e = np.zeros(g.space.dim)
        e[k] = h
        fwd = (float(value(vertical_bump(g, e))) - f0) / h
        bwd = (f0 - float(value(vertical_bump(g, -e)))) / h
        if abs(fwd - bwd) > 0.05 * scale:
            return False

    if fd1.dt is None or fd2.dt is None:
        return ok_x
    at = float(dt(g))
    two_fit = t_final is None or g.horizon + 2 * g.step <= t_final + 1e-9
    if two_fit:
        # second-order one-sided difference cancels smooth curvature but
        # still misreads a genuine slope break
        f1 = float(value(extend_flat(g, g.horizon + g.step)))
        f2 = float(value(extend_flat(g, g.horizon + 2 * g.step)))
        est = (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * g.step)
        return ok_x and abs(est - at) <= 0.5 * abs(at) + 0.1
    # one step before the horizon the slope test is first-order only;
    # allow a curvature-sized gap rather than flag smooth points
    return ok_x and abs(fd1.dt - at) <= 0.5 * abs(at) + 0.1 + 2.0 * g.step


@dataclass(frozen=True)
class GaugePack:
    """Confining perturbation: outer h(s, Upsilon^2) plus anchored pair gauges.

    g(eta_s) = h(s, Upsilon^2(eta_s))
               + sum_i delta_i [ Upsilon^2(eta_s - ext gamma^i) + (s - t_i)^2 ]

    h_y must be >= 0 wherever evaluated. Anchors must not outlive the paths
    they are evaluated against. The time derivative treats the pair terms'
    Upsilon^2 part as time-flat, so dt g = h_t + 2 sum_i delta_i (s - t_i).
    """

    h: Callable[[float, float], float] = staticmethod(lambda s, y: 0.0)
    h_t: Callable[[float, float], float] = staticmethod(lambda s, y: 0.0)
    h_y: Callable[[float, float], float] = staticmethod(lambda s, y: 0.0)
    anchors: tuple = ()  # of (Path, positive weight)
    bound_N: float = float("inf")
    label: str = ""

    def __post_init__(self):
        total = 0.0
        for anchor, delta in self.anchors:
            if delta <= 0.0:
                raise ValueError(f"anchor weight must be > 0, got {delta}")
            total += delta
        if np.isfinite(self.bound_N):
            if total > self.bound_N:
                raise ValueError(f"anchor weights sum {total} exceed bound {self.bound_N}")
            for anchor, _ in self.anchors:
                if sup_norm(anchor) > self.bound_N:
                    raise ValueError("anchor norm exceeds bound")

    @staticmethod
    def zero() -> "GaugePack":
        return GaugePack(label="zero")

    @staticmethod
    def anchored(anchor: Path, delta: float, label: str = "anchored") -> "GaugePack":
        return GaugePack(anchors=((anchor, delta),), label=label)

    def _hy_checked(self, s: float, y: float) -> float:
        hy = float(self.h_y(s, y))
        if hy < 0.0:
            raise ValueError(f"pack outer slope h_y={hy} < 0 at (s={s}, y={y})")
        return hy

    def value(self, g: Path) -> float:
        s = g.horizon
        y = eval_upsilon(2.0, g)
        self._hy_checked(s, y)
        out = float(self.h(s, y))
        for anchor, delta in self.anchors:
            if anchor.horizon > s + 1e-12:
                raise ValueError(
                    f"anchor horizon {anchor.horizon} beyond evaluated path {s}"
                )
            diff = pair_difference(anchor, g)
            out += delta * (eval_upsilon(2.0, diff) + (s - anchor.horizon) ** 2)
        return out

    def dt(self, g: Path) -> float:
        s = g.horizon
        y = eval_upsilon(2.0, g)
        out = float(self.h_t(s, y))
        for anchor, delta in self.anchors:
            out += 2.0 * delta * (s - anchor.horizon)
        return out

    def dx(self, g: Path) -> np.ndarray:
        s = g.horizon
        y = eval_upsilon(2.0, g)
        out = self._hy_checked(s, y) * grad_upsilon(2.0, g)
        for anchor, delta in self.anchors:
            diff = pair_difference(anchor, g)
            out = out + delta * grad_upsilon(2.0, diff)
        return out
