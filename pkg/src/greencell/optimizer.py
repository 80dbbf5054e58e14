"""Convex time-share allocation: power control, micro-sleep and antenna choice.

One frame is shared between K users (time shares ``mu``) and a sleep slice
(``nu``) on the simplex ``sum(mu) + nu = 1``.  Serving user k for a share
``mu_k`` costs ``mu_k * (P0 + delta_p * P_k(mu_k))`` where the transmit power
``P_k`` follows from inverting the link rate; sleeping costs ``nu * P_S``.
Each per-user cost is convex in ``mu_k``, so the whole problem is solved with
a log-barrier interior-point method: Newton inner steps on the K free shares,
barrier weight scaled up tenfold per outer round.

The transmit-power cap enters as a per-user lower bound on ``mu_k`` (less
time means more power), which makes the feasible set a box inside the
simplex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import FrameChannels, center_channel, eigenvalues, noise_power
from .powermodel import AffineParams

LN2 = math.log(2.0)
_EXP2_MAX = 500.0  # guard: 2**x overflows float64 near x ~ 1024


def _exp2(x):
    return np.exp2(np.minimum(x, _EXP2_MAX))


def power_from_rate_simo(eps1, rate_bps, mu, bandwidth_hz, noise_w):
    """Transmit power for a single spatial stream (1x1 or 1x2 combining).

    Zero rate needs zero power; a positive rate with ``mu == 0`` is marked
    infeasible with an infinite power.
    """
    eps1, rate, mu = np.broadcast_arrays(
        np.asarray(eps1, float), np.asarray(rate_bps, float),
        np.asarray(mu, float))
    out = np.zeros(mu.shape)
    pos = rate > 0
    zero_mu = pos & (mu <= 0)
    ok = pos & (mu > 0)
    out[zero_mu] = np.inf
    out[ok] = (noise_w / eps1[ok]) * (_exp2(rate[ok] / (bandwidth_hz * mu[ok])) - 1.0)
    return out if out.ndim else float(out)


def power_from_rate_mimo2x2(eps1, eps2, rate_bps, mu, bandwidth_hz, noise_w):
    """Transmit power for two equal-power spatial streams (2x2)."""
    eps1, eps2, rate, mu = np.broadcast_arrays(
        np.asarray(eps1, float), np.asarray(eps2, float),
        np.asarray(rate_bps, float), np.asarray(mu, float))
    out = np.zeros(mu.shape)
    pos = rate > 0
    zero_mu = pos & (mu <= 0)
    ok = pos & (mu > 0)
    out[zero_mu] = np.inf
    s = eps1[ok] + eps2[ok]
    q = eps1[ok] * eps2[ok]
    u = _exp2(rate[ok] / (bandwidth_hz * mu[ok]))
    out[ok] = noise_w * (-s + np.sqrt(s * s + 4.0 * q * (u - 1.0))) / q
    return out if out.ndim else float(out)


class _LinkCosts:
    """Vectorized per-user cost mu*(P0 + dp*P(mu)) and its derivatives.

    Holds only the users with positive rate targets.  ``eps2`` of None means
    single-stream links; otherwise the dual-stream power inversion is used.
    """

    def __init__(self, eps1, eps2, rates, bandwidth_hz, noise_w, p0, dp):
        self.eps1 = np.asarray(eps1, float)
        self.eps2 = None if eps2 is None else np.asarray(eps2, float)
        self.a = np.asarray(rates, float) / bandwidth_hz  # bits/s/Hz targets
        self.noise_w = noise_w
        self.p0 = p0
        self.dp = dp

    def power(self, mu):
        if self.eps2 is None:
            return power_from_rate_simo(self.eps1, self.a, mu, 1.0, self.noise_w)
        return power_from_rate_mimo2x2(self.eps1, self.eps2, self.a, mu, 1.0,
                                       self.noise_w)

    def _power_derivs(self, mu):
        """P, P', P'' at mu (elementwise, mu > 0)."""
        u = _exp2(self.a / mu)
        du = -(self.a * LN2 / mu ** 2) * u
        ddu = u * (self.a * LN2 / mu ** 2) ** 2 + 2.0 * self.a * LN2 * u / mu ** 3
        if self.eps2 is None:
            b = self.noise_w / self.eps1
            return b * (u - 1.0), b * du, b * ddu
        s = self.eps1 + self.eps2
        q = self.eps1 * self.eps2
        root = np.sqrt(s * s + 4.0 * q * (u - 1.0))
        p = self.noise_w * (-s + root) / q
        droot = 2.0 * q * du / root
        dp_ = 2.0 * self.noise_w * du / root
        ddp = 2.0 * self.noise_w * (ddu * root - du * droot) / root ** 2
        return p, dp_, ddp

    def value(self, mu):
        return mu * (self.p0 + self.dp * self.power(mu))

    def grad(self, mu):
        p, dp_, _ = self._power_derivs(mu)
        return self.p0 + self.dp * (p + mu * dp_)

    def hess(self, mu):
        _, dp_, ddp = self._power_derivs(mu)
        return self.dp * (2.0 * dp_ + mu * ddp)

    def spectral_efficiency_at(self, tx_power_w):
        """Sum rate per Hz at fixed transmit power (bits/s/Hz)."""
        if self.eps2 is None:
            return np.log2(1.0 + tx_power_w * self.eps1 / self.noise_w)
        return (np.log2(1.0 + tx_power_w / 2.0 * self.eps1 / self.noise_w)
                + np.log2(1.0 + tx_power_w / 2.0 * self.eps2 / self.noise_w))


@dataclass(frozen=True)
class ShareProblem:
    """One instance of the time-share allocation problem."""

    rates_bps: np.ndarray
    costs: _LinkCosts          # costs of the users with positive rates
    active: np.ndarray         # indices of those users
    mu_min: np.ndarray         # power-cap lower bounds for active users
    sleep_cost_w: float
    p0_w: float
    dp: float
    p_max_w: float
    bandwidth_hz: float
    noise_w: float

    @property
    def num_users(self) -> int:
        return self.rates_bps.size


@dataclass(frozen=True)
class ShareSolution:
    """Solver output: shares, sleep slice, cost and per-user powers."""

    mu: np.ndarray
    nu: float
    objective_w: float
    status: str                # "optimal" or "infeasible"
    tx_powers_w: np.ndarray
    converged: bool = True

    def __post_init__(self):
        if self.status == "optimal":
            if abs(self.mu.sum() + self.nu - 1.0) > 1e-8:
                raise ValueError("shares do not lie on the simplex")
            if np.any(self.mu < -1e-12) or self.nu < -1e-12:
                raise ValueError("negative share")


@dataclass(frozen=True)
class Step1Solution:
    """Share solution plus the antenna count that won the comparison."""

    share: ShareSolution
    num_antennas: int
    supply_w: float

    @property
    def status(self) -> str:
        return self.share.status


def _build_problem(eps1, eps2, rates, affine: AffineParams, sleep_cost_w,
                   bandwidth_hz, noise_w) -> ShareProblem:
    rates = np.asarray(rates, float)
    eps1 = np.asarray(eps1, float)
    if np.any(eps1 <= 0) or np.any(rates < 0):
        raise ValueError("gains must be positive and rates non-negative")
    active = np.flatnonzero(rates > 0)
    e2 = None if eps2 is None else np.asarray(eps2, float)[active]
    costs = _LinkCosts(eps1[active], e2, rates[active], bandwidth_hz, noise_w,
                       affine.p0_w, affine.delta_p)
    # Power cap as a box bound: the rate is linear in mu at fixed power, so
    # the smallest feasible share is rate / (W * capacity(P_max)).
    ceff = costs.spectral_efficiency_at(affine.max_tx_power_w)
    mu_min = costs.a / ceff
    _check_convexity(costs, mu_min)
    return ShareProblem(rates_bps=rates, costs=costs, active=active,
                        mu_min=mu_min, sleep_cost_w=sleep_cost_w,
                        p0_w=affine.p0_w, dp=affine.delta_p,
                        p_max_w=affine.max_tx_power_w,
                        bandwidth_hz=bandwidth_hz, noise_w=noise_w)


def _check_convexity(costs: _LinkCosts, mu_min, samples: int = 5):
    if costs.a.size == 0:
        return
    lo = np.minimum(mu_min, 0.99)
    for frac in np.linspace(0.02, 1.0, samples):
        mu = lo + frac * (1.0 - lo)
        if np.any(costs.hess(mu) < -1e-6):
            raise ValueError("non-convex per-user cost term")


def pc_only_problem(gains, rates, affine: AffineParams,
                    bandwidth_hz: float = 10e6,
                    noise_w: float | None = None) -> ShareProblem:
    """Power-control-only variant: idle instead of sleep (cost P0 for nu)."""
    if noise_w is None:
        noise_w = noise_power(bandwidth_hz, 290.0)
    return _build_problem(gains, None, rates, affine, affine.p0_w,
                          bandwidth_hz, noise_w)


def prais_problem(gains, rates, affine: AffineParams,
                  bandwidth_hz: float = 10e6,
                  noise_w: float | None = None) -> ShareProblem:
    """Joint power control and micro-sleep: the sleep slice costs P_S."""
    if noise_w is None:
        noise_w = noise_power(bandwidth_hz, 290.0)
    return _build_problem(gains, None, rates, affine, affine.p_sleep_w,
                          bandwidth_hz, noise_w)


def _objective(p: ShareProblem, x) -> float:
    return float(p.costs.value(x).sum() + p.sleep_cost_w * (1.0 - x.sum()))


def solve_share(p: ShareProblem, tol: float = 1e-6,
                max_outer: int = 50, max_inner: int = 100,
                extra_candidates=None) -> ShareSolution:
    """Log-barrier interior-point minimization over the share simplex.

    Infeasibility (the power-cap bounds alone overfill the frame) is reported
    through the status flag rather than an exception.  ``extra_candidates``
    may list feasible share vectors (active users only) that the result must
    not be worse than; restricted-strategy points go here so dominance over
    them is exact rather than within solver tolerance.
    """
    k = p.costs.a.size
    mu_full = np.zeros(p.num_users)
    if k == 0:
        return ShareSolution(mu=mu_full, nu=1.0, objective_w=p.sleep_cost_w,
                             status="optimal", tx_powers_w=np.zeros(p.num_users))
    lo = p.mu_min
    slack0 = 1.0 - lo.sum()
    if not np.isfinite(slack0) or slack0 <= 1e-12:
        return ShareSolution(mu=mu_full, nu=0.0, objective_w=math.inf,
                             status="infeasible",
                             tx_powers_w=np.full(p.num_users, np.inf))

    # Strictly interior start: equal shares when they clear the bounds,
    # otherwise the bounds plus an even split of most of the slack.
    x = np.full(k, (1.0 - 1e-3) / k)
    if np.any(x <= lo):
        x = lo + 0.9 * slack0 / k
    t = 1.0
    m = k + 1
    converged = False
    for _ in range(max_outer):
        for _ in range(max_inner):
            g = t * (p.costs.grad(x) - p.sleep_cost_w) \
                - 1.0 / (x - lo) + 1.0 / (1.0 - x.sum())
            diag = t * p.costs.hess(x) + 1.0 / (x - lo) ** 2
            beta = 1.0 / (1.0 - x.sum()) ** 2
            # Solve (diag + beta * ones ones^T) d = -g via Sherman-Morrison.
            u = g / diag
            w = 1.0 / diag
            d = -(u - beta * w * u.sum() / (1.0 + beta * w.sum()))
            lam2 = float(-g @ d)
            if lam2 / 2.0 <= 1e-12 * t:
                break
            step = 1.0
            fx = t * _objective(p, x) - np.log(x - lo).sum() \
                - math.log(1.0 - x.sum())
            while True:
                xn = x + step * d
                if np.all(xn > lo) and xn.sum() < 1.0:
                    fn = t * _objective(p, xn) - np.log(xn - lo).sum() \
                        - math.log(1.0 - xn.sum())
                    if fn <= fx - 0.25 * step * lam2:
                        break
                step *= 0.5
                if step < 1e-14:
                    break
            if step < 1e-14:
                break
            x = x + step * d
        if m / t <= tol * (1.0 + abs(_objective(p, x))):
            converged = True
            break
        t *= 10.0

    # Candidate polish: the all-power point (shares at their bounds), the
    # equal-share point and any caller-supplied points are feasible; never
    # return anything worse than the best of them.
    best_x, best_f = x, _objective(p, x)
    candidates = [lo]
    eq = np.full(k, 1.0 / k)
    if np.all(eq >= lo):
        candidates.append(eq)
    for c in extra_candidates or ():
        c = np.asarray(c, float)
        if c.shape == (k,) and np.all(c >= lo) and c.sum() <= 1.0 + 1e-12:
            candidates.append(c)
    for c in candidates:
        if c.sum() <= 1.0 + 1e-12:
            fc = _objective(p, c)
            if fc < best_f:
                best_x, best_f = c, fc

    mu_full[p.active] = best_x
    powers = np.zeros(p.num_users)
    powers[p.active] = np.minimum(p.costs.power(best_x), p.p_max_w)
    nu = max(0.0, 1.0 - mu_full.sum())
    return ShareSolution(mu=mu_full, nu=nu, objective_w=best_f,
                         status="optimal", tx_powers_w=powers,
                         converged=converged)


def center_eigenvalues(frame: FrameChannels, num_tx: int) -> np.ndarray:
    """Per-user eigenvalue vectors of the frame-centre channel, (K, num_tx)."""
    k = frame.h.shape[2]
    out = np.zeros((k, num_tx))
    for i in range(k):
        h = center_channel(frame, i)[:, :num_tx]
        eig = eigenvalues(h).values
        out[i, : eig.size] = eig
    return out


def step1_problem(frame: FrameChannels, rates, affine: AffineParams,
                  num_tx: int, bandwidth_hz: float, noise_w: float,
                  sleep_cost_w: float | None = None) -> ShareProblem:
    """Share problem on the centre-channel eigenvalues for one antenna count."""
    eig = center_eigenvalues(frame, num_tx)
    sleep = affine.p_sleep_w if sleep_cost_w is None else sleep_cost_w
    eps2 = eig[:, 1] if num_tx == 2 else None
    return _build_problem(eig[:, 0], eps2, rates, affine, sleep,
                          bandwidth_hz, noise_w)


def raps_step1(frame: FrameChannels, rates, affine_by_d: dict[int, AffineParams],
               bandwidth_hz: float, noise_w: float,
               tol: float = 1e-6) -> Step1Solution:
    """Solve the share problem per antenna count and keep the cheaper one.

    Ties (within solver tolerance) go to the single-antenna configuration.
    Returns an infeasible solution when no antenna count admits one.
    """
    best: Step1Solution | None = None
    for d in sorted(affine_by_d):
        prob = step1_problem(frame, rates, affine_by_d[d], d,
                             bandwidth_hz, noise_w)
        sol = solve_share(prob, tol=tol)
        if sol.status != "optimal":
            continue
        cand = Step1Solution(share=sol, num_antennas=d,
                             supply_w=sol.objective_w)
        if best is None or cand.supply_w < best.supply_w * (1.0 - 1e-9):
            best = cand
    if best is None:
        empty = ShareSolution(
            mu=np.zeros(len(np.atleast_1d(rates))), nu=0.0,
            objective_w=math.inf, status="infeasible",
            tx_powers_w=np.full(len(np.atleast_1d(rates)), np.inf))
        return Step1Solution(share=empty, num_antennas=min(affine_by_d),
                             supply_w=math.inf)
    return best
