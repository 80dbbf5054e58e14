"""Monte Carlo driver, benchmark schemes and aggregate statistics.

Two evaluation contexts share the driver:

* ``tdma``: block-flat per-user gains, single-sector affine power model;
  schemes ``pc``, ``prais``, ``dtx``, ``ba``.
* ``ofdma``: full frame channels with antenna adaptation; schemes ``raps``,
  ``dtx``, ``ba`` (both benchmarks pick the cheaper antenna count).

Every trial draws its own counter-derived random stream from the master
seed, so results are identical for any worker count and any completion
order.  All schemes inside one trial see the same drop and channels, and the
same drop is reused across the rate grid.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import (Scenario, drop_users, gen_frame_channels, noise_power,
                      path_gain)
from .optimizer import pc_only_problem, prais_problem, solve_share
from .powermodel import AffineParams
from .raps import run_raps

TDMA_SCHEMES = ("ba", "dtx", "pc", "prais")
OFDMA_SCHEMES = ("ba", "dtx", "raps")


@dataclass(frozen=True)
class TrialResult:
    """Outcome of one scheme on one drop at one rate point."""

    scheme: str
    supply_w: float
    outage: bool
    violation: bool
    achieved_rates_bps: np.ndarray
    trial: int
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.outage and self.supply_w < 0:
            raise ValueError("supply power must be non-negative")


@dataclass(frozen=True)
class SweepRecord:
    """Aggregate of one (scheme, rate point) cell of the sweep."""

    scheme: str
    rate_bps: float
    mean_supply_w: float
    outage_frac: float
    trials: int
    energy_eff_bpj: float
    included: bool
    mean_t_sleep: float = math.nan
    d2_frac: float = math.nan


@dataclass(frozen=True)
class AggregateStats:
    records: tuple[SweepRecord, ...]

    def by_scheme(self, scheme: str) -> list[SweepRecord]:
        return [r for r in self.records if r.scheme == scheme]


# ---------------------------------------------------------------------------
# TDMA-context schemes (flat per-user gains, single-sector supply)

def _flat_tx_shares(gains, rates, affine: AffineParams, bandwidth_hz,
                    noise_w) -> np.ndarray:
    """Full-power time (equally: bandwidth) share needed per user."""
    gains = np.asarray(gains, float)
    rates = np.asarray(rates, float)
    cap = bandwidth_hz * np.log2(1.0 + gains * affine.max_tx_power_w / noise_w)
    return rates / cap


def eval_ba_flat(gains, rates, affine: AffineParams, bandwidth_hz, noise_w,
                 trial: int = 0) -> TrialResult:
    """Minimum bandwidth at maximum spectral density, never sleeping."""
    share = _flat_tx_shares(gains, rates, affine, bandwidth_hz, noise_w)
    total = float(share.sum())
    outage = total > 1.0
    supply = affine.p0_w + affine.delta_p * affine.max_tx_power_w * min(total, 1.0)
    rates = np.asarray(rates, float)
    return TrialResult("ba", supply, outage, False,
                       np.zeros_like(rates) if outage else rates, trial)


def eval_dtx_flat(gains, rates, affine: AffineParams, bandwidth_hz, noise_w,
                  trial: int = 0) -> TrialResult:
    """Full-power bursts, sleep for the rest of the frame.

    Computed as the restricted point of the joint problem (all shares at
    their power-cap bounds), so the joint optimum can never exceed it.
    """
    prob = prais_problem(gains, rates, affine, bandwidth_hz, noise_w)
    lo_total = float(prob.mu_min.sum())
    rates = np.asarray(rates, float)
    if not np.isfinite(lo_total) or lo_total > 1.0:
        return TrialResult("dtx", math.nan, True, False,
                           np.zeros_like(rates), trial)
    cost = float(prob.costs.value(prob.mu_min).sum()
                 + prob.sleep_cost_w * (1.0 - lo_total))
    return TrialResult("dtx", cost, False, False, rates, trial)


def eval_pc_flat(gains, rates, affine: AffineParams, bandwidth_hz, noise_w,
                 trial: int = 0) -> TrialResult:
    prob = pc_only_problem(gains, rates, affine, bandwidth_hz, noise_w)
    sol = solve_share(prob)
    rates = np.asarray(rates, float)
    outage = sol.status != "optimal"
    extras = {} if outage else {"mu": sol.mu}
    return TrialResult("pc", sol.objective_w if not outage else math.nan,
                       outage, False,
                       np.zeros_like(rates) if outage else rates, trial,
                       extras=extras)


def eval_prais_flat(gains, rates, affine: AffineParams, bandwidth_hz, noise_w,
                    trial: int = 0, pc_mu=None) -> TrialResult:
    """Joint allocation; handed the power-control optimum as a candidate so
    its cost can never exceed it."""
    prob = prais_problem(gains, rates, affine, bandwidth_hz, noise_w)
    extra = [pc_mu[prob.active]] if pc_mu is not None else None
    sol = solve_share(prob, extra_candidates=extra)
    rates = np.asarray(rates, float)
    outage = sol.status != "optimal"
    return TrialResult("prais", sol.objective_w if not outage else math.nan,
                       outage, False,
                       np.zeros_like(rates) if outage else rates, trial)


# ---------------------------------------------------------------------------
# OFDMA-context benchmarks

def _block_eigenvalues(frame, num_tx) -> np.ndarray:
    """Eigenvalues of H H^H for every (n, t, k) block at once."""
    h = frame.h[:, :, :, :, :num_tx]
    gram = np.einsum("...re,...se->...rs", h, h.conj())
    return np.clip(np.linalg.eigvalsh(gram).real, 0.0, None)


def benchmark_ba(frame, rates, affine_by_d: dict[int, AffineParams],
                 scenario: Scenario, trial: int = 0) -> TrialResult:
    """Greedy minimum-subcarrier allocation at fixed spectral density.

    Users take turns claiming their best remaining block until their target
    is met; a drained grid is an outage.  Evaluated per antenna count, the
    cheaper feasible configuration wins.
    """
    rates = np.asarray(rates, float)
    n, t, k = frame.h.shape[:3]
    noise = scenario.noise_per_subcarrier_w
    wtau_over_frame = (scenario.subcarrier_hz * scenario.slot_s
                       / scenario.frame_s)
    best_supply, best_extras = math.inf, None
    for d, affine in sorted(affine_by_d.items()):
        eig = _block_eigenvalues(frame, d)
        p_stream = affine.max_tx_power_w / (n * d)
        r_blk = wtau_over_frame * np.log2(1.0 + p_stream * eig / noise).sum(-1)
        flat = r_blk.reshape(n * t, k)
        order = np.argsort(-flat, axis=0, kind="stable")  # per user
        claimed = np.zeros(n * t, bool)
        got = np.zeros(k)
        used = 0
        ptr = np.zeros(k, int)
        pending = [u for u in range(k) if rates[u] > 0]
        feasible = True
        while pending:
            progressed = False
            for u in list(pending):
                while ptr[u] < n * t and claimed[order[ptr[u], u]]:
                    ptr[u] += 1
                if ptr[u] >= n * t:
                    feasible = False
                    pending.remove(u)
                    continue
                blk = order[ptr[u], u]
                claimed[blk] = True
                got[u] += flat[blk, u]
                used += 1
                progressed = True
                if got[u] >= rates[u]:
                    pending.remove(u)
            if not progressed:
                feasible = False
                break
        if not feasible:
            continue
        supply = (affine.p0_w
                  + affine.delta_p * affine.max_tx_power_w * used / (n * t))
        if supply < best_supply:
            best_supply = supply
            best_extras = {"num_antennas": d, "blocks_used": used}
    if best_extras is None:
        return TrialResult("ba", math.nan, True, False, np.zeros(k), trial)
    return TrialResult("ba", best_supply, False, False, rates.copy(), trial,
                       extras=best_extras)


def benchmark_dtx(frame, rates, affine_by_d: dict[int, AffineParams],
                  scenario: Scenario, trial: int = 0) -> TrialResult:
    """Full-power transmission for the minimal share of the frame, then sleep.

    Each user is served over the whole band at maximum power; the frame share
    it needs follows from its mean full-power slot rate.
    """
    rates = np.asarray(rates, float)
    n, t, k = frame.h.shape[:3]
    noise = scenario.noise_per_subcarrier_w
    best_supply, best_extras = math.inf, None
    for d, affine in sorted(affine_by_d.items()):
        eig = _block_eigenvalues(frame, d)
        p_stream = affine.max_tx_power_w / (n * d)
        r_blk = scenario.subcarrier_hz * np.log2(1.0 + p_stream * eig / noise).sum(-1)
        full_rate = r_blk.sum(axis=0).mean(axis=0)  # (K,) bps at full power
        share = float((rates / full_rate).sum())
        if share > 1.0:
            continue
        supply = (affine.p_sleep_w
                  + (affine.p1_w - affine.p_sleep_w) * share)
        if supply < best_supply:
            best_supply = supply
            best_extras = {"num_antennas": d, "tx_share": share}
    if best_extras is None:
        return TrialResult("dtx", math.nan, True, False, np.zeros(k), trial)
    return TrialResult("dtx", best_supply, False, False, rates.copy(), trial,
                       extras=best_extras)


def eval_raps(frame, rates, affine_by_d, scenario, trial: int = 0) -> TrialResult:
    alloc = run_raps(frame, rates, affine_by_d, scenario)
    achieved = alloc.delivered_bits / scenario.frame_s
    return TrialResult("raps", alloc.supply_w, alloc.outage, alloc.violation,
                       achieved, trial,
                       extras={"num_antennas": alloc.num_antennas,
                               "t_sleep": len(alloc.sleep_slots)})


# ---------------------------------------------------------------------------
# Monte Carlo driver

def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-derived stream: identical for any worker layout."""
    return np.random.default_rng(np.random.SeedSequence(
        entropy=seed, spawn_key=(trial,)))


@dataclass(frozen=True)
class RunSpec:
    """Everything one worker needs to evaluate a batch of trials."""

    scenario: Scenario
    schemes: tuple[str, ...]
    rate_grid: tuple[float, ...]
    seed: int
    context: str                      # "tdma" or "ofdma"
    affine: AffineParams | None = None
    affine_by_d: dict | None = None
    fading: str = "iid"


def _run_trial(spec: RunSpec, trial: int) -> list[TrialResult]:
    s = spec.scenario
    rng = trial_rng(spec.seed, trial)
    pos = drop_users(s, rng)
    dist = np.hypot(pos[:, 0], pos[:, 1])
    gains = path_gain(dist, s.shadowing_db, rng)
    results: list[TrialResult] = []
    if spec.context == "tdma":
        noise = noise_power(s.bandwidth_hz, s.temperature_k)
        for rate in spec.rate_grid:
            rates = np.full(s.num_users, rate)
            pc_mu = None
            for scheme in spec.schemes:
                if scheme == "ba":
                    r = eval_ba_flat(gains, rates, spec.affine,
                                     s.bandwidth_hz, noise, trial)
                elif scheme == "dtx":
                    r = eval_dtx_flat(gains, rates, spec.affine,
                                      s.bandwidth_hz, noise, trial)
                elif scheme == "pc":
                    r = eval_pc_flat(gains, rates, spec.affine,
                                     s.bandwidth_hz, noise, trial)
                    pc_mu = r.extras.get("mu")
                elif scheme == "prais":
                    r = eval_prais_flat(gains, rates, spec.affine,
                                        s.bandwidth_hz, noise, trial,
                                        pc_mu=pc_mu)
                else:
                    raise ValueError(f"unknown tdma scheme {scheme!r}")
                results.append(r)
    elif spec.context == "ofdma":
        frame = gen_frame_channels(s, s.max_tx_antennas, gains, rng,
                                   fading=spec.fading)
        for rate in spec.rate_grid:
            rates = np.full(s.num_users, rate)
            for scheme in spec.schemes:
                if scheme == "ba":
                    r = benchmark_ba(frame, rates, spec.affine_by_d, s, trial)
                elif scheme == "dtx":
                    r = benchmark_dtx(frame, rates, spec.affine_by_d, s, trial)
                elif scheme == "raps":
                    r = eval_raps(frame, rates, spec.affine_by_d, s, trial)
                else:
                    raise ValueError(f"unknown ofdma scheme {scheme!r}")
                results.append(r)
    else:
        raise ValueError(f"unknown context {spec.context!r}")
    return results


def _run_batch(args) -> list[TrialResult]:
    spec, trials = args
    out = []
    for i in trials:
        out.extend(_run_trial(spec, i))
    return out


def run_monte_carlo(spec: RunSpec, trials: int, workers: int = 1,
                    outage_threshold: float = 0.10) -> AggregateStats:
    """Paired Monte Carlo sweep; deterministic for a fixed seed.

    Rate points whose outage fraction reaches ``outage_threshold`` stay in
    the report but are flagged as excluded from headline comparisons.
    Trials where a scheme flags a constraint violation count as outages.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    indices = list(range(trials))
    if workers <= 1 or trials < 4:
        flat = _run_batch((spec, indices))
    else:
        chunks = [indices[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_batch, [(spec, c) for c in chunks]))
        flat = [r for part in parts for r in part]

    # Reassemble by trial index so the aggregation is independent of the
    # worker layout; within one trial the (rate, scheme) order is fixed.
    per_trial: dict[int, list[TrialResult]] = {i: [] for i in indices}
    for r in flat:
        per_trial[r.trial].append(r)
    per_cell: dict[tuple[str, float], list[TrialResult]] = {
        (sch, rate): [] for rate in spec.rate_grid for sch in spec.schemes}
    for trial in range(trials):
        row = per_trial[trial]
        idx = 0
        for rate in spec.rate_grid:
            for sch in spec.schemes:
                per_cell[(sch, rate)].append(row[idx])
                idx += 1

    records = []
    k = spec.scenario.num_users
    for rate in spec.rate_grid:
        for sch in spec.schemes:
            cell = per_cell[(sch, rate)]
            bad = np.array([r.outage or r.violation for r in cell])
            supplies = np.array([r.supply_w for r in cell])
            ok = ~bad
            mean_supply = float(supplies[ok].mean()) if ok.any() else math.nan
            frac = float(bad.mean())
            eff = (k * rate / mean_supply
                   if ok.any() and mean_supply > 0 else math.nan)
            extras = {}
            if sch == "raps":
                ts = [c.extras.get("t_sleep") for c in cell
                      if not (c.outage or c.violation)]
                d2 = [c.extras.get("num_antennas") == 2 for c in cell
                      if not (c.outage or c.violation)]
                extras["mean_t_sleep"] = float(np.mean(ts)) if ts else math.nan
                extras["d2_frac"] = float(np.mean(d2)) if d2 else math.nan
            records.append(SweepRecord(
                scheme=sch, rate_bps=rate, mean_supply_w=mean_supply,
                outage_frac=frac, trials=trials, energy_eff_bpj=eff,
                included=frac < outage_threshold, **extras))
    return AggregateStats(records=tuple(records))


# ---------------------------------------------------------------------------
# Output emission

CSV_COLUMNS = ("scheme", "rate_bps", "mean_supply_w", "outage_frac",
               "trials", "energy_eff_bpj", "included")
RAPS_EXTRA_COLUMNS = ("mean_t_sleep", "d2_frac")


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return "nan" if math.isnan(x) else f"{x:.10g}"
    return str(x)


def stats_to_csv(stats: AggregateStats, with_raps_columns: bool = False) -> str:
    cols = CSV_COLUMNS + (RAPS_EXTRA_COLUMNS if with_raps_columns else ())
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in stats.records:
        writer.writerow([_fmt(getattr(r, c)) for c in cols])
    return buf.getvalue()


def stats_to_json(stats: AggregateStats, with_raps_columns: bool = False) -> str:
    cols = CSV_COLUMNS + (RAPS_EXTRA_COLUMNS if with_raps_columns else ())
    rows = []
    for r in stats.records:
        row = {}
        for c in cols:
            v = getattr(r, c)
            if isinstance(v, float) and math.isnan(v):
                v = None
            row[c] = v
        rows.append(row)
    return json.dumps(rows, indent=2, sort_keys=True) + "\n"
