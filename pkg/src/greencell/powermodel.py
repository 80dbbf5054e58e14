"""Base-station supply-power models at three levels of detail.

* ``component_supply``: per-component chain (PA, RF transceiver, baseband,
  DC-DC conversion, mains supply, cooling) built from reference tables and
  injectable hardware curves.
* ``parameterized_supply``: scalar-parameter abstraction keeping only the
  knobs that resource allocation touches (bandwidth, antennas, transmit
  power, sleep).
* ``affine_supply``: the two-parameter affine load model used inside the
  optimizers.

All parameter types are frozen and safe to share across worker processes;
all operations are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

from .curves import LossCurve, PaCurve

WATT_TOL = 1e-9


class BbRow(NamedTuple):
    """One baseband processing block: reference draw and scaling exponents."""
    name: str
    p_ref_w: float      # draw at one antenna, full bandwidth
    y_d: int            # antenna-count exponent
    y_f: int            # bandwidth-share exponent
    z_s: int            # 1 if the block stays powered in sleep mode


# Reference complexities of the baseband blocks (W at D=1, f=1).
DEFAULT_BB_TABLE: tuple[BbRow, ...] = (
    BbRow("time_domain", 9.0, 1, 0, 0),
    BbRow("freq_domain", 1.5, 2, 1, 0),
    BbRow("fec", 1.5, 1, 0, 1),
    BbRow("cpu", 10.0, 1, 0, 1),
    BbRow("cpri", 7.5, 1, 0, 1),
    BbRow("leakage", 3.0, 1, 0, 1),
)

# Per-chain RF transceiver draw: 10.88 W of block consumption scaled by the
# 1.19 technology factor.
RF_PER_CHAIN_W = 12.94

PA_SLEEP_PER_CHAIN_W = 27.75

# Default PA consumption anchors, calibrated so that a 3-sector site draws
# 1419 W (dual antenna) and 1025 W (single antenna) at full load, with an
# 80 W idle floor per amplifier.
_DEFAULT_PA_POINTS = ((0.0, 80.0), (10.0, 133.2697), (20.0, 214.9052))


def default_pa_curve() -> PaCurve:
    return PaCurve(points=_DEFAULT_PA_POINTS)


def default_dc_curve() -> LossCurve:
    return LossCurve(loss_full=0.075)


def default_ac_curve() -> LossCurve:
    return LossCurve(loss_full=0.09)


@dataclass(frozen=True)
class PowerBreakdown:
    """Supply power split by component, in W, for the whole site."""

    pa: float
    rf: float
    bb: float
    dc: float
    ac: float
    cool: float
    total: float
    mode: str  # "active" or "sleep"

    def __post_init__(self):
        parts = (self.pa, self.rf, self.bb, self.dc, self.ac, self.cool)
        if any(p < 0 for p in parts):
            raise ValueError("power components must be non-negative")
        if abs(sum(parts) - self.total) > WATT_TOL:
            raise ValueError("breakdown does not sum to total")
        if self.mode not in ("active", "sleep"):
            raise ValueError(f"unknown mode {self.mode!r}")

    def as_dict(self) -> dict:
        return {
            "pa_w": self.pa, "rf_w": self.rf, "bb_w": self.bb,
            "dc_w": self.dc, "ac_w": self.ac, "cool_w": self.cool,
            "total_w": self.total, "mode": self.mode,
        }


@dataclass(frozen=True)
class ComponentConfig:
    """Inputs of the component model for one base station.

    ``dc_max_out_w`` / ``ac_max_out_w`` default to 1.1x the full-load draw of
    the components each converter feeds, so the converters sit at their rated
    point (``zeta = 1.1``) when the station transmits at full power and
    bandwidth.
    """

    feeder_loss: float = 0.5
    num_chains: int = 2
    num_sectors: int = 3
    max_tx_power_w: float = 40.0
    bandwidth_hz: float = 10e6
    pa_sleep_per_chain_w: float = PA_SLEEP_PER_CHAIN_W
    pa_curve: PaCurve = field(default_factory=default_pa_curve)
    dc_loss_curve: LossCurve = field(default_factory=default_dc_curve)
    ac_loss_curve: LossCurve = field(default_factory=default_ac_curve)
    cooling_loss: float = 0.12
    bb_table: tuple[BbRow, ...] = DEFAULT_BB_TABLE
    rf_per_chain_w: float = RF_PER_CHAIN_W
    dc_max_out_w: float | None = None
    ac_max_out_w: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.feeder_loss < 1.0:
            raise ValueError("feeder_loss must be in [0, 1)")
        if not 0.0 <= self.cooling_loss < 1.0:
            raise ValueError("cooling_loss must be in [0, 1)")
        if self.num_chains < 1 or self.num_sectors < 1:
            raise ValueError("num_chains and num_sectors must be >= 1")
        if self.max_tx_power_w <= 0:
            raise ValueError("max_tx_power_w must be positive")
        for row in self.bb_table:
            if row.y_d < 0 or row.y_f < 0 or row.z_s not in (0, 1):
                raise ValueError(f"invalid baseband row {row}")
        # Size the converters against the full-load draw of what they feed.
        full = self._chain_draw(self.max_tx_power_w, 1.0, sleep=False)
        if self.dc_max_out_w is None:
            object.__setattr__(self, "dc_max_out_w", 1.1 * full)
        dc_full = self.dc_loss_curve.loss(self.dc_max_out_w / full) * full
        if self.ac_max_out_w is None:
            object.__setattr__(self, "ac_max_out_w", 1.1 * (full + dc_full))

    def _pa_draw(self, tx_power_w: float, bw_share: float, sleep: bool) -> float:
        if sleep:
            return self.num_chains * self.pa_sleep_per_chain_w
        p_out = tx_power_w * bw_share * (1.0 - self.feeder_loss) / self.num_chains
        return self.num_chains * self.pa_curve.consumption(p_out)

    def _bb_draw(self, bw_share: float, sleep: bool) -> float:
        total = 0.0
        for row in self.bb_table:
            if sleep and row.z_s == 0:
                continue
            total += (row.p_ref_w * self.num_chains ** row.y_d
                      * bw_share ** row.y_f)
        return total

    def _chain_draw(self, tx_power_w: float, bw_share: float, sleep: bool) -> float:
        """Draw of PA + RF + BB, the load seen by the DC-DC converter."""
        return (self._pa_draw(tx_power_w, bw_share, sleep)
                + self.num_chains * self.rf_per_chain_w
                + self._bb_draw(bw_share, sleep))


def component_supply(cfg: ComponentConfig, tx_power_w: float, bw_share: float,
                     sleep: bool = False) -> PowerBreakdown:
    """Chain the component draws into the site supply power.

    ``tx_power_w`` is the sum transmit power at the antenna inputs when the
    full bandwidth is used; ``bw_share`` scales both the occupied bandwidth
    and (at constant spectral density) the radiated power.  Sleep keeps RF,
    conversion and cooling running, swaps the PAs to their sleep draw and
    gates the baseband blocks that can be powered down.
    """
    if not 0.0 <= bw_share <= 1.0:
        raise ValueError(f"bw_share {bw_share} outside [0, 1]")
    if tx_power_w < 0 or tx_power_w > cfg.max_tx_power_w * (1 + 1e-9):
        raise ValueError(
            f"tx_power_w {tx_power_w} outside [0, {cfg.max_tx_power_w}]")

    pa = cfg._pa_draw(tx_power_w, bw_share, sleep)
    rf = cfg.num_chains * cfg.rf_per_chain_w
    bb = cfg._bb_draw(bw_share, sleep)
    draw = pa + rf + bb
    dc = cfg.dc_loss_curve.loss(cfg.dc_max_out_w / draw) * draw
    ac = cfg.ac_loss_curve.loss(cfg.ac_max_out_w / (draw + dc)) * (draw + dc)
    cool = cfg.cooling_loss * (draw + dc + ac)
    m = cfg.num_sectors
    parts = [m * pa, m * rf, m * bb, m * dc, m * ac, m * cool]
    return PowerBreakdown(*parts, total=sum(parts),
                          mode="sleep" if sleep else "active")


@dataclass(frozen=True)
class ParameterizedParams:
    """Scalar parameters of the mid-level power model (one macro sector).

    ``p_bb_w`` and ``p_rf_w`` are per chain and per 10 MHz.  ``p_sleep_ref_w``
    is the per-chain, per-sector sleep draw, fitted so that the dual-antenna
    sleep consumption matches the component model defaults.
    """

    pa_limit_w: float = 80.0
    eta_pa_max: float = 0.36
    theta: float = 0.15
    p_bb_w: float = 29.4
    p_rf_w: float = 12.9
    feeder_loss: float = 0.5
    dc_loss: float = 0.075
    cool_loss: float = 0.1
    ac_loss: float = 0.09
    num_sectors: int = 3
    max_tx_power_w: float = 40.0
    bandwidth_hz: float = 10e6
    delta_p: float = 4.2
    p_sleep_ref_w: float = 86.054368
    supported_antennas: tuple[int, ...] = (1, 2)

    def __post_init__(self):
        for name in ("feeder_loss", "dc_loss", "cool_loss", "ac_loss"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must be in [0, 1)")
        if self.dc_loss + self.ac_loss >= 1.0:
            raise ValueError("dc_loss + ac_loss must be below 1")
        for d in self.supported_antennas:
            if self.pa_efficiency(d) <= 0:
                raise ValueError(
                    f"PA efficiency non-positive for {d} antennas; "
                    "lower theta or raise max_tx_power_w")

    def pa_output_per_chain(self, num_antennas: int) -> float:
        """Peak output one PA must produce, feeder compensation included."""
        return self.max_tx_power_w / num_antennas / (1.0 - self.feeder_loss)

    def pa_efficiency(self, num_antennas: int) -> float:
        """Log-law efficiency at the per-chain peak operating point."""
        ratio = self.pa_limit_w / self.pa_output_per_chain(num_antennas)
        if ratio < 1.0 - 1e-9:
            raise ValueError("per-PA output exceeds pa_limit_w")
        return self.eta_pa_max * (1.0 - self.theta * math.log2(max(ratio, 1.0)))


def parameterized_p1(p: ParameterizedParams, num_antennas: int,
                     pa_term: str = "per_antenna") -> float:
    """Full-load supply power of one sector, in W.

    ``pa_term`` selects how the amplifier term enters the sum:

    * ``"per_antenna"`` (default): each of the ``num_antennas`` amplifiers
      contributes its own draw, so the PA term is
      ``max_tx_power / (eta * (1 - feeder_loss))``.  This reproduces the
      published 460.4 W breakdown for the dual-antenna macro sector.
    * ``"total"``: the same expression divided by ``num_antennas``, reading
      the PA term as already summed.

    Conversion losses enter as one combined DC+AC fraction, cooling as its
    own fraction.
    """
    eta = p.pa_efficiency(num_antennas)
    per_pa = p.pa_output_per_chain(num_antennas) / eta
    if pa_term == "per_antenna":
        pa = num_antennas * per_pa
    elif pa_term == "total":
        pa = per_pa
    else:
        raise ValueError(f"unknown pa_term {pa_term!r}")
    bbrf = (num_antennas * (p.bandwidth_hz / 10e6) * (p.p_bb_w + p.p_rf_w))
    return (bbrf + pa) / ((1.0 - p.dc_loss - p.ac_loss) * (1.0 - p.cool_loss))


def parameterized_supply(p: ParameterizedParams, load: float,
                         num_antennas: int) -> float:
    """Site supply power at load share ``load`` in [0, 1].

    Zero load means sleep: ``num_sectors * num_antennas * p_sleep_ref_w``.
    Any positive load sits on the affine segment anchored at the full-load
    power ``parameterized_p1``.
    """
    if not 0.0 <= load <= 1.0:
        raise ValueError(f"load {load} outside [0, 1]")
    if load == 0.0:
        return p.num_sectors * num_antennas * p.p_sleep_ref_w
    p1 = parameterized_p1(p, num_antennas)
    return p.num_sectors * (p1 + p.delta_p * p.max_tx_power_w * (load - 1.0))


@dataclass(frozen=True)
class AffineParams:
    """Affine load model for one sector: idle, full-load and sleep power."""

    p0_w: float
    p1_w: float
    p_sleep_w: float
    delta_p: float
    max_tx_power_w: float = 40.0
    num_antennas: int = 1

    def __post_init__(self):
        if abs(self.p1_w - (self.p0_w + self.delta_p * self.max_tx_power_w)) > WATT_TOL:
            raise ValueError("p1_w must equal p0_w + delta_p * max_tx_power_w")
        # equality of p0 and p1 is allowed for degenerate zero-slope studies
        if not self.p_sleep_w <= self.p0_w <= self.p1_w:
            raise ValueError("need p_sleep_w <= p0_w <= p1_w")

    @classmethod
    def from_idle(cls, p0_w: float, delta_p: float, p_sleep_w: float,
                  max_tx_power_w: float = 40.0, num_antennas: int = 1) -> "AffineParams":
        return cls(p0_w=p0_w, p1_w=p0_w + delta_p * max_tx_power_w,
                   p_sleep_w=p_sleep_w, delta_p=delta_p,
                   max_tx_power_w=max_tx_power_w, num_antennas=num_antennas)


NUM_SECTORS = 3

# Macro-sector affine parameters (W): single and dual antenna.
AFFINE_1X = AffineParams(p0_w=186.0, p1_w=354.0, p_sleep_w=107.0,
                         delta_p=4.2, max_tx_power_w=40.0, num_antennas=1)
AFFINE_2X = AffineParams(p0_w=292.0, p1_w=460.0, p_sleep_w=216.0,
                         delta_p=4.2, max_tx_power_w=40.0, num_antennas=2)

# Alternative single-sector models for the rate sweeps: one biased towards
# deep sleep states, one idealized fully load-proportional.
FRENGER = AffineParams.from_idle(p0_w=170.0, delta_p=3.4, p_sleep_w=10.0)
LINEAR = AffineParams.from_idle(p0_w=1.0, delta_p=8.8, p_sleep_w=1.0)

POWER_MODEL_PRESETS = {
    "affine": AFFINE_1X,
    "affine2x": AFFINE_2X,
    "frenger": FRENGER,
    "linear": LINEAR,
}


def affine_supply(a: AffineParams, load: float) -> float:
    """3-sector site supply power at load share ``load`` in [0, 1]."""
    if not 0.0 <= load <= 1.0:
        raise ValueError(f"load {load} outside [0, 1]")
    if load == 0.0:
        return NUM_SECTORS * a.p_sleep_w
    return NUM_SECTORS * (a.p1_w + a.delta_p * a.max_tx_power_w * (load - 1.0))


def load_dependence(a: AffineParams) -> float:
    """Share of the full-load consumption that scales with load."""
    slope = a.delta_p * a.max_tx_power_w
    return slope / (a.p0_w + slope)
