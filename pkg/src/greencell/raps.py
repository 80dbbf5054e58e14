"""Integer OFDMA scheduling on top of the real-valued share solution.

The share solution is quantized onto the N x T resource grid, subcarriers are
handed out per slot by a two-phase greedy trade (best-channel seeding, then
surplus trading by nearest channel metric), and per-block spatial powers are
set by margin-adaptive water-filling that delivers each user's bit target at
minimum total power.  Sleep slots sit statically at the tail of the frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import FrameChannels, Scenario, eigenvalues
from .optimizer import Step1Solution, raps_step1
from .powermodel import AffineParams

LN2 = math.log(2.0)
_SNAP = 1e-9  # treat shares this close to an integer count as exact


def _snap(x: float) -> float:
    r = round(x)
    return r if abs(x - r) <= _SNAP * max(1.0, abs(x)) else x


@dataclass(frozen=True)
class Quantization:
    """Resource counts per user and the sleep/active slot split."""

    m_k: np.ndarray
    t_sleep: int
    t_active: int
    corner_case: bool

    def __post_init__(self):
        self.m_k.setflags(write=False)


def quantize(mu, nu: float, num_subcarriers: int, num_slots: int,
             num_users: int) -> Quantization:
    """Map real-valued shares to integer resource counts.

    Per-user counts round up and the sleep-slot count rounds down far enough
    to stay feasible; the leftover blocks go back to the users round-robin by
    ascending index.  Only users with a positive share can inflate through
    the ceiling, so only they enter the rounding headroom term.  When the
    sleep share is too small to cover that headroom the mapping flips to
    rounding counts down with no sleep slots.
    """
    mu = np.asarray(mu, float)
    if mu.size != num_users:
        raise ValueError("mu length must equal num_users")
    if np.any(mu < 0) or nu < 0:
        raise ValueError("negative share")
    if abs(mu.sum() + nu - 1.0) > 1e-6:
        raise ValueError("shares must sum to one")
    n, t = num_subcarriers, num_slots
    k_pos = int(np.count_nonzero(mu > 0))
    corner = t * n * nu < k_pos
    if corner:
        m = np.floor([_snap(v) for v in mu * n * t]).astype(int)
        t_sleep = 0
    else:
        m = np.ceil([_snap(v) for v in mu * n * t]).astype(int)
        t_sleep = max(0, math.floor(_snap(t * nu - k_pos / n)))
    rem = n * t - int(m.sum()) - n * t_sleep
    if rem < 0:
        raise AssertionError("quantization produced negative remainder")
    for i in range(rem):
        m[i % num_users] += 1
    return Quantization(m_k=m, t_sleep=t_sleep, t_active=t - t_sleep,
                        corner_case=corner)


def per_slot_split(m_k, num_subcarriers: int, t_active: int) -> np.ndarray:
    """Split per-user counts evenly over the active slots.

    Returns an (K, t_active) matrix whose columns sum to ``num_subcarriers``
    and whose rows sum to ``m_k``.  Floors first, then places each user's
    leftover units into the emptiest slots.
    """
    m_k = np.asarray(m_k, int)
    n = num_subcarriers
    if int(m_k.sum()) != n * t_active:
        raise ValueError("per-user counts must fill the active grid exactly")
    if t_active == 0:
        return np.zeros((m_k.size, 0), int)
    base = (m_k * n) // int(m_k.sum())
    out = np.tile(base[:, None], (1, t_active))
    capacity = np.full(t_active, n - int(base.sum()))
    for k in range(m_k.size):
        for _ in range(int(m_k[k] - t_active * base[k])):
            slot = int(np.argmax(capacity))
            if capacity[slot] <= 0:
                raise AssertionError("slot capacity exhausted")
            out[k, slot] += 1
            capacity[slot] -= 1
    return out


def rcg_allocate(metric: np.ndarray, counts) -> np.ndarray:
    """Two-phase greedy subcarrier assignment for one time slot.

    ``metric`` is (N, K); ``counts`` the per-user targets summing to N.
    Phase one hands every subcarrier to its best user; phase two lets
    over-provisioned users (ascending index) trade the subcarrier whose
    metric is nearest to an under-provisioned user's.  Returns the owner
    index per subcarrier.
    """
    metric = np.asarray(metric, float)
    n, k = metric.shape
    counts = np.asarray(counts, int)
    if counts.sum() != n:
        raise ValueError("counts must sum to the number of subcarriers")
    owner = np.argmax(metric, axis=1)
    have = np.bincount(owner, minlength=k)
    for src in range(k):
        while have[src] > counts[src]:
            mine = np.flatnonzero(owner == src)
            needy = np.flatnonzero(have < counts)
            # nearest-metric trade: cost |metric[n, dst] - metric[n, src]|
            cost = np.abs(metric[np.ix_(mine, needy)]
                          - metric[mine, src][:, None])
            best_per_dst = cost.min(axis=0)
            dst = needy[int(np.argmin(best_per_dst))]
            row = int(np.argmin(cost[:, np.flatnonzero(needy == dst)[0]]))
            block = mine[row]
            owner[block] = dst
            have[src] -= 1
            have[dst] += 1
    return owner


def _water_level_log2(eps_active: np.ndarray, target_bits: float,
                      subcarrier_hz: float, slot_s: float,
                      noise_w: float) -> float:
    """log2 of the water level over a candidate active set."""
    m = eps_active.size
    return (target_bits / (subcarrier_hz * slot_s)
            - np.log2(slot_s * eps_active * subcarrier_hz
                      / (noise_w * LN2)).sum()) / m


def waterfill(eps, target_bits: float, subcarrier_hz: float, slot_s: float,
              noise_w: float) -> tuple[np.ndarray, float]:
    """Minimum-power bit loading over parallel spatial channels.

    ``eps`` lists the channel eigenvalues in (block, eigenchannel) order.
    Channels join the active set best-first; each addition lowers the water
    level, and the search stops before any channel would be pushed to
    non-positive power.  Returns per-channel powers aligned with ``eps`` and
    the final water level.
    """
    eps = np.asarray(eps, float)
    if target_bits < 0:
        raise ValueError("target_bits must be non-negative")
    if target_bits == 0:
        return np.zeros(eps.size), math.nan
    if eps.size == 0 or not np.any(eps > 0):
        raise ValueError("no usable channel for a positive bit target")
    order = np.argsort(-eps, kind="stable")
    eps_sorted = eps[order]
    usable = int(np.count_nonzero(eps_sorted > 0))
    best_m, best_log2 = 1, _water_level_log2(
        eps_sorted[:1], target_bits, subcarrier_hz, slot_s, noise_w)
    for m in range(2, usable + 1):
        lvl = _water_level_log2(eps_sorted[:m], target_bits, subcarrier_hz,
                                slot_s, noise_w)
        # power on the weakest member must stay positive; compare in the log
        # domain, the raw level can overflow for extreme bit targets
        if lvl <= math.log2(noise_w * LN2
                            / (subcarrier_hz * slot_s * eps_sorted[m - 1])):
            break
        best_m, best_log2 = m, lvl
    level = 2.0 ** best_log2 if best_log2 < 1000.0 else math.inf
    powers = np.zeros(eps.size)
    active = order[:best_m]
    powers[active] = level * subcarrier_hz * slot_s / LN2 - noise_w / eps[active]
    return powers, level


@dataclass(frozen=True)
class FrameAllocation:
    """Integer schedule with per-block spatial powers and supply cost.

    ``owner`` is (N, T) with -1 for unassigned blocks (sleep slots or spare
    capacity); ``powers`` is (N, T, num_antennas) in W per spatial channel.
    """

    owner: np.ndarray
    powers: np.ndarray
    sleep_slots: tuple[int, ...]
    num_antennas: int
    tx_per_slot_w: np.ndarray
    supply_w: float
    delivered_bits: np.ndarray
    outage: bool
    violation: bool
    step1: Step1Solution | None

    def __post_init__(self):
        for a in (self.owner, self.powers, self.tx_per_slot_w,
                  self.delivered_bits):
            a.setflags(write=False)


def _outage_allocation(n, t, k, step1) -> FrameAllocation:
    return FrameAllocation(
        owner=np.full((n, t), -1), powers=np.zeros((n, t, 1)),
        sleep_slots=(), num_antennas=step1.num_antennas,
        tx_per_slot_w=np.zeros(t), supply_w=math.nan,
        delivered_bits=np.zeros(k), outage=True, violation=False,
        step1=step1)


def run_raps(frame: FrameChannels, rates, affine_by_d: dict[int, AffineParams],
             scenario: Scenario, tol: float = 1e-6) -> FrameAllocation:
    """Full pipeline: share estimate, quantization, subcarrier and power fill.

    Outage from the real-valued stage aborts the pipeline.  A slot whose
    summed power exceeds the transmit budget is flagged, not repaired.
    """
    rates = np.asarray(rates, float)
    n, t, k = frame.h.shape[:3]
    noise_sub = scenario.noise_per_subcarrier_w
    step1 = raps_step1(frame, rates, affine_by_d,
                       bandwidth_hz=scenario.bandwidth_hz,
                       noise_w=scenario.noise_full_band_w, tol=tol)
    if step1.status != "optimal":
        return _outage_allocation(n, t, k, step1)
    d = step1.num_antennas
    affine = affine_by_d[d]
    quant = quantize(step1.share.mu, step1.share.nu, n, t, k)
    m_kt = per_slot_split(quant.m_k, n, quant.t_active)
    sleep_slots = tuple(range(t - quant.t_sleep, t))

    owner = np.full((n, t), -1, int)
    h_sub = frame.h[:, :, :, :, :d]
    for slot in range(quant.t_active):
        metric = np.abs(h_sub[:, slot].mean(axis=(2, 3))) ** 2  # (N, K)
        owner[:, slot] = rcg_allocate(metric, m_kt[:, slot])

    powers = np.zeros((n, t, d))
    violation = False
    delivered = np.zeros(k)
    for user in range(k):
        target = rates[user] * scenario.frame_s
        blocks = np.argwhere(owner == user)  # rows (n_idx, t_idx)
        if target <= 0:
            continue
        if blocks.size == 0:
            violation = True
            continue
        blocks = blocks[np.lexsort((blocks[:, 0], blocks[:, 1]))]
        eps = np.concatenate([
            eigenvalues(frame.h[bn, bt, user][:, :d]).values
            for bn, bt in blocks])
        p_flat, _ = waterfill(eps, target, scenario.subcarrier_hz,
                              scenario.slot_s, noise_sub)
        streams = min(d, scenario.num_rx_antennas)
        for i, (bn, bt) in enumerate(blocks):
            powers[bn, bt, :streams] = p_flat[i * streams:(i + 1) * streams]
        snr = p_flat * eps / noise_sub
        delivered[user] = (scenario.subcarrier_hz * scenario.slot_s
                           * np.log2(1.0 + snr).sum())

    tx_per_slot = powers.sum(axis=(0, 2))
    p_max = affine.max_tx_power_w
    if np.any(tx_per_slot > p_max * (1.0 + 1e-9)):
        violation = True
    active_cost = float(np.sum(affine.p0_w + affine.delta_p
                               * tx_per_slot[: quant.t_active]))
    supply = (active_cost + quant.t_sleep * affine.p_sleep_w) / t
    return FrameAllocation(owner=owner, powers=powers,
                           sleep_slots=sleep_slots, num_antennas=d,
                           tx_per_slot_w=tx_per_slot, supply_w=supply,
                           delivered_bits=delivered, outage=False,
                           violation=violation, step1=step1)
