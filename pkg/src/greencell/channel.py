"""User drops, link gains and per-resource-block MIMO channels.

The cell geometry is a disk with a keep-out radius around the base station.
Link gains combine a distance power law with log-normal shadowing, drawn once
per user per drop.  Fast fading is i.i.d. circularly-symmetric complex
Gaussian per resource block by default; a block-fading mode (one draw per
frame) is available and is what makes the real-valued allocation stage exact
in unit tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

BOLTZMANN_J_PER_K = 1.380649e-23


@dataclass(frozen=True)
class Scenario:
    """Cell geometry, OFDMA frame grid and receiver parameters."""

    num_users: int = 10
    cell_radius_m: float = 250.0
    min_distance_m: float = 40.0
    carrier_hz: float = 2e9
    shadowing_db: float = 8.0
    bandwidth_hz: float = 10e6
    subcarrier_hz: float = 200e3
    num_subcarriers: int = 50
    num_slots: int = 10
    slot_s: float = 1e-3
    frame_s: float = 10e-3
    temperature_k: float = 290.0
    num_rx_antennas: int = 2
    max_tx_antennas: int = 2

    def __post_init__(self):
        if abs(self.frame_s - self.num_slots * self.slot_s) > 1e-12:
            raise ValueError("frame_s must equal num_slots * slot_s")
        if self.num_subcarriers * self.subcarrier_hz > self.bandwidth_hz * (1 + 1e-9):
            raise ValueError("subcarriers exceed the system bandwidth")
        if self.min_distance_m >= self.cell_radius_m:
            raise ValueError("min_distance_m must be below cell_radius_m")

    @property
    def noise_per_subcarrier_w(self) -> float:
        return noise_power(self.subcarrier_hz, self.temperature_k)

    @property
    def noise_full_band_w(self) -> float:
        return noise_power(self.bandwidth_hz, self.temperature_k)


DEFAULT_SCENARIO = Scenario()


@dataclass(frozen=True)
class FrameChannels:
    """Channel matrices for one OFDMA frame.

    ``h`` has shape (N, T, K, M_R, D): subcarrier, slot, user, receive
    antenna, transmit antenna.  ``gains`` holds the per-user linear power
    gains already baked into ``h``.
    """

    h: np.ndarray
    gains: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.h)):
            raise ValueError("channel entries must be finite")
        if np.any(self.gains <= 0):
            raise ValueError("gains must be positive")
        self.h.setflags(write=False)
        self.gains.setflags(write=False)

    @property
    def shape(self):
        return self.h.shape


@dataclass(frozen=True)
class EigenSpectrum:
    """Non-negative eigenvalues of H H^H, sorted descending."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if np.any(v < 0) or np.any(v[:-1] < v[1:]):
            raise ValueError("eigenvalues must be non-negative and descending")
        v.setflags(write=False)


def noise_power(bandwidth_hz: float, temperature_k: float) -> float:
    """Thermal noise power k_B * temperature * bandwidth in W."""
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth_hz must be positive")
    if temperature_k < 0:
        raise ValueError("temperature_k must be non-negative")
    return BOLTZMANN_J_PER_K * temperature_k * bandwidth_hz


def drop_users(s: Scenario, rng: np.random.Generator) -> np.ndarray:
    """Drop users area-uniformly on the annulus [min_distance, radius].

    Returns an (K, 2) array of x/y coordinates in metres.
    """
    r = np.sqrt(rng.uniform(s.min_distance_m ** 2, s.cell_radius_m ** 2,
                            size=s.num_users))
    phi = rng.uniform(0.0, 2.0 * math.pi, size=s.num_users)
    return np.column_stack((r * np.cos(phi), r * np.sin(phi)))


def urban_macro_pathloss_db(distance_m: np.ndarray) -> np.ndarray:
    """Urban-macro NLOS distance power law at 2 GHz, in dB."""
    return 128.1 + 37.6 * np.log10(np.asarray(distance_m) / 1000.0)


def path_gain(distance_m, shadowing_db: float, rng: np.random.Generator,
              pathloss_db=urban_macro_pathloss_db) -> np.ndarray:
    """Linear power gain: distance power law plus log-normal shadowing.

    Shadowing is drawn once per entry of ``distance_m`` (one value per user
    per drop).
    """
    d = np.atleast_1d(np.asarray(distance_m, dtype=float))
    if np.any(d <= 0):
        raise ValueError("distances must be positive")
    shadow = rng.normal(0.0, shadowing_db, size=d.shape) if shadowing_db > 0 \
        else np.zeros_like(d)
    return 10.0 ** (-(pathloss_db(d) + shadow) / 10.0)


def gen_frame_channels(s: Scenario, num_tx: int, gains: np.ndarray,
                       rng: np.random.Generator,
                       fading: str = "iid") -> FrameChannels:
    """Draw Rayleigh-fading channel matrices for one frame.

    Entries are i.i.d. CN(0, gain) across antenna pairs and users.  With
    ``fading="iid"`` every resource block fades independently; with
    ``fading="block"`` one draw per user covers the whole frame.
    """
    if num_tx > s.max_tx_antennas:
        raise ValueError(f"num_tx {num_tx} exceeds max_tx_antennas")
    gains = np.asarray(gains, dtype=float)
    k = gains.size
    n, t, mr = s.num_subcarriers, s.num_slots, s.num_rx_antennas
    scale = np.sqrt(gains / 2.0)[:, None, None]
    if fading == "iid":
        shape = (n, t, k, mr, num_tx)
        h = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        h *= scale[None, None]
    elif fading == "block":
        one = rng.standard_normal((k, mr, num_tx)) \
            + 1j * rng.standard_normal((k, mr, num_tx))
        one *= scale
        h = np.broadcast_to(one, (n, t, k, mr, num_tx)).copy()
    else:
        raise ValueError(f"unknown fading mode {fading!r}")
    return FrameChannels(h=h, gains=gains.copy())


def eigenvalues(h: np.ndarray) -> EigenSpectrum:
    """Eigenvalues of H H^H (squared singular values of H), descending.

    Length is min(num_tx, num_rx); zero eigenvalues of the larger Gram matrix
    are dropped.
    """
    h = np.asarray(h)
    if not np.all(np.isfinite(h)):
        raise ValueError("channel entries must be finite")
    mr, d = h.shape
    gram = h @ h.conj().T if mr <= d else h.conj().T @ h
    vals = np.linalg.eigvalsh(gram)[::-1]
    return EigenSpectrum(values=np.clip(vals.real, 0.0, None)[: min(mr, d)])


def center_channel(fc: FrameChannels, user: int) -> np.ndarray:
    """Channel matrix of the frame's central resource block for one user.

    The centre index is the upper middle for even grids: 1-based
    ``ceil(N/2)`` in frequency and ``ceil(T/2)`` in time.
    """
    n, t = fc.h.shape[0], fc.h.shape[1]
    nc = (n + 1) // 2 - 1
    tc = (t + 1) // 2 - 1
    return fc.h[nc, tc, user]


def shannon_rate(tx_power_w: float, gain: float, bandwidth_hz: float,
                 noise_w: float) -> float:
    """Single-stream capacity bound in bps."""
    return bandwidth_hz * math.log2(1.0 + gain * tx_power_w / noise_w)


def shannon_power(rate_bps: float, gain: float, bandwidth_hz: float,
                  noise_w: float) -> float:
    """Transmit power achieving ``rate_bps`` on a single stream."""
    return (noise_w / gain) * (2.0 ** (rate_bps / bandwidth_hz) - 1.0)


def mimo_capacity_bps(h: np.ndarray, tx_power_w: float, bandwidth_hz: float,
                      noise_w: float) -> float:
    """Equal-power MIMO capacity over the eigenvalues of H H^H, in bps."""
    d = h.shape[1]
    eig = eigenvalues(h).values
    snr = tx_power_w / d * eig / noise_w
    return bandwidth_hz * float(np.sum(np.log2(1.0 + snr)))
