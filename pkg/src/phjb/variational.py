"""Perturbed maximization on finite path nets.

Given a bounded functional f on a net of paths and a start within eps of
the supremum, the search produces a nearby path that is the strict global
maximum of f minus a telescoping sum of anchored pair gauges. Weights
halve at every stage, so the accumulated perturbation at the output is
controlled by eps; anchor times never decrease, but the scheme is allowed
to stall at the starting horizon and says so.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .gauge import eval_upsilon_pair
from .paths import GRID_TOL, Path

__all__ = ["pair_gauge", "BPResult", "bp_search"]


def pair_gauge(anchor: Path, g: Path) -> float:
    """Default gauge: time-augmented Upsilon^2 of the semigroup gap."""
    return eval_upsilon_pair(2.0, anchor, g, with_time=True)


@dataclass(frozen=True)
class BPResult:
    maximizer: Path
    anchors: tuple
    deltas: tuple
    anchor_times: tuple
    f_start: float
    f_max_net: float
    sum_rho: float
    perturbed_value: float
    strict_gap: float
    stalled: bool
    iterations: int

    @property
    def rho_terms(self) -> tuple:
        return tuple(
            d * pair_gauge(a, self.maximizer) for a, d in zip(self.anchors, self.deltas)
        )


def bp_search(
    f: Callable[[Path], float],
    net,
    start: Path,
    eps: float,
    *,
    rho: Callable[[Path, Path], float] = pair_gauge,
    delta0: float = 1.0,
    max_anchors: int = 64,
    gauge_tol: float = 1e-12,
) -> BPResult:
    """Anchor-and-perturb argmax refinement over a finite net.

    Requires f(start) >= max f - eps over the net (raises otherwise).
    Each stage maximizes f minus the anchored gauges accumulated so far,
    with ties resolved toward the incumbent; a stage that reproduces its
    incumbent ends the search. Only paths at or after the incumbent's
    horizon compete.
    """
    if eps <= 0.0 or delta0 <= 0.0:
        raise ValueError("eps and delta0 must be positive")
    net = list(net)
    if not any(p is start for p in net):
        net.append(start)
    f_vals = [float(f(p)) for p in net]
    f_max = max(f_vals)
    f_start = float(f(start))
    if f_start < f_max - eps:
        raise ValueError(
            f"start is not eps-maximal: f(start)={f_start}, max={f_max}, eps={eps}"
        )

    anchors = [start]
    deltas = [delta0]
    incumbent = start
    iterations = 0

    def perturbed(g: Path, fg: float) -> float:
        total = fg
        for a, d in zip(anchors, deltas):
            r = rho(a, g)
            if r < 0.0:
                raise ValueError("gauge returned a negative value")
            total -= d * r
        return total

    while iterations < max_anchors:
        iterations += 1
        best = incumbent
        best_v = perturbed(incumbent, float(f(incumbent)))
        for g, fg in zip(net, f_vals):
            if g.horizon < incumbent.horizon - GRID_TOL:
                continue
            v = perturbed(g, fg)
            if v > best_v:
                best, best_v = g, v
        if best is incumbent or rho(incumbent, best) <= gauge_tol:
            break
        anchors.append(best)
        deltas.append(delta0 * 2.0 ** (-len(deltas)))
        incumbent = best

    # strictness over the final functional, distinct paths only
    final_v = perturbed(incumbent, float(f(incumbent)))
    gap = float("inf")
    for g, fg in zip(net, f_vals):
        if g.horizon < incumbent.horizon - GRID_TOL:
            continue
        if rho(incumbent, g) <= gauge_tol:
            continue
        gap = min(gap, final_v - perturbed(g, fg))

    sum_rho = sum(d * rho(a, incumbent) for a, d in zip(anchors, deltas))
    return BPResult(
        maximizer=incumbent,
        anchors=tuple(anchors),
        deltas=tuple(deltas),
        anchor_times=tuple(a.horizon for a in anchors),
        f_start=f_start,
        f_max_net=f_max,
        sum_rho=sum_rho,
        perturbed_value=float(f(incumbent)) - sum_rho,
        strict_gap=gap,
        stalled=(incumbent.horizon <= start.horizon + GRID_TOL)
        and (incumbent is not start),
        iterations=iterations,
    )
