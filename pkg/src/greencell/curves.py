"""Pluggable hardware curves: PA consumption/efficiency and converter losses.

The component power model needs two kinds of measured curves that vendors
normally supply as lab data:

* a power-amplifier curve mapping per-PA output power (W) to consumption (W),
  from which the efficiency follows as ``p_out / consumption``;
* converter loss curves mapping the ratio ``zeta = max_output / current_draw``
  (>= 1) to a loss fraction in [0, 1).  Losses grow as the draw falls further
  below the converter's rated output.

Both are injectable; the defaults below are calibrated against published
full-load and sleep figures for a 3-sector macro site (see the anchor
constants in :mod:`greencell.powermodel`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class CurveDomainError(ValueError):
    """Raised when a curve is evaluated outside its declared domain."""


@dataclass(frozen=True)
class PaCurve:
    """Monotone per-PA consumption curve, piecewise linear between anchors.

    ``points`` are (output_w, consumption_w) pairs with strictly increasing
    output and non-decreasing consumption.  The first anchor at zero output
    gives the idle draw of a powered-but-silent amplifier.  Beyond the last
    anchor the final segment is extended linearly.

    Efficiency is derived as ``p_out / consumption(p_out)`` and must stay
    within (0, 1] over the anchored range.
    """

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.points) < 2:
            raise ValueError("PaCurve needs at least two anchor points")
        xs = [p[0] for p in self.points]
        ys = [p[1] for p in self.points]
        if xs[0] != 0.0:
            raise ValueError("PaCurve must anchor the idle draw at output 0 W")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("PaCurve outputs must be strictly increasing")
        if any(b < a for a, b in zip(ys, ys[1:])):
            raise ValueError("PaCurve consumption must be non-decreasing")
        if any(y <= 0 for y in ys):
            raise ValueError("PaCurve consumption must be positive")
        for x, y in self.points[1:]:
            eff = x / y
            if not 0.0 < eff <= 1.0:
                raise ValueError(f"PaCurve efficiency {eff:.3f} at {x} W output "
                                 "outside (0, 1]")

    def consumption(self, p_out: float) -> float:
        """Consumption in W of one PA producing ``p_out`` W."""
        if p_out < 0:
            raise CurveDomainError(f"PA output power {p_out} W is negative")
        pts = self.points
        if p_out >= pts[-1][0]:
            (x0, y0), (x1, y1) = pts[-2], pts[-1]
        else:
            for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
                if p_out <= x1:
                    break
        return y0 + (y1 - y0) * (p_out - x0) / (x1 - x0)

    def efficiency(self, p_out: float) -> float:
        """Power-added efficiency at ``p_out`` W; 0 at zero output."""
        if p_out <= 0:
            return 0.0
        return p_out / self.consumption(p_out)


def heuristic_pa_curve(eta_max: float = 0.54, theta: float = 0.15,
                       p_limit_w: float = 80.0,
                       clip: tuple[float, float] = (0.05, 0.54),
                       n_anchors: int = 64) -> PaCurve:
    """PA curve from the log-law efficiency heuristic.

    Efficiency ``eta_max * (1 - theta * log2(p_limit / p_out))`` clipped to
    ``clip``, tabulated into a consumption curve.  Useful for what-if studies;
    note it has no idle draw, so a zero-output PA consumes nothing.
    """
    lo, hi = clip
    anchors = [(0.0, 1e-9)]
    for i in range(1, n_anchors + 1):
        p = p_limit_w * i / n_anchors
        eta = eta_max * (1.0 - theta * math.log2(p_limit_w / p))
        eta = min(max(eta, lo), hi)
        anchors.append((p, p / eta))
    return PaCurve(points=tuple(anchors))


@dataclass(frozen=True)
class LossCurve:
    """Converter loss over the load ratio ``zeta = max_output / draw``.

    Power-law form ``loss_full * (zeta / zeta_full) ** exponent`` on the
    declared domain, so the loss equals ``loss_full`` exactly at the rated
    operating point and grows as the converter is driven further below its
    rated output.  Values are capped below ``cap``.
    """

    loss_full: float
    zeta_full: float = 1.1
    exponent: float = 0.25
    domain: tuple[float, float] = (1.0, 50.0)
    cap: float = 0.95

    def __post_init__(self):
        if not 0.0 <= self.loss_full < 1.0:
            raise ValueError("loss_full must be in [0, 1)")
        if self.zeta_full < self.domain[0] or self.zeta_full > self.domain[1]:
            raise ValueError("zeta_full outside the declared domain")

    def loss(self, zeta: float) -> float:
        lo, hi = self.domain
        if not lo <= zeta <= hi:
            raise CurveDomainError(
                f"load ratio zeta={zeta:.4g} outside declared domain [{lo}, {hi}]")
        return min(self.loss_full * (zeta / self.zeta_full) ** self.exponent, self.cap)


@dataclass(frozen=True)
class TabulatedLossCurve:
    """Loss curve interpolated piecewise-linearly through (zeta, loss) points."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.points) < 2:
            raise ValueError("TabulatedLossCurve needs at least two points")
        zs = [p[0] for p in self.points]
        ls = [p[1] for p in self.points]
        if any(b <= a for a, b in zip(zs, zs[1:])):
            raise ValueError("zeta values must be strictly increasing")
        if any(not 0.0 <= l < 1.0 for l in ls):
            raise ValueError("loss values must be in [0, 1)")

    @property
    def domain(self) -> tuple[float, float]:
        return (self.points[0][0], self.points[-1][0])

    def loss(self, zeta: float) -> float:
        lo, hi = self.domain
        if not lo <= zeta <= hi:
            raise CurveDomainError(
                f"load ratio zeta={zeta:.4g} outside declared domain [{lo}, {hi}]")
        for (x0, y0), (x1, y1) in zip(self.points, self.points[1:]):
            if zeta <= x1:
                return y0 + (y1 - y0) * (zeta - x0) / (x1 - x0)
        return self.points[-1][1]
