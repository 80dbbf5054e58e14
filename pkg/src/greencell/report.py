"""Figure rendering for sweep results and power breakdowns.

Figures are written to files next to the delimited output; nothing is shown
interactively.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .harness import AggregateStats  # noqa: E402
from .powermodel import PowerBreakdown  # noqa: E402

_SCHEME_STYLE = {
    "ba": ("tab:red", "s"),
    "dtx": ("tab:orange", "^"),
    "pc": ("tab:blue", "o"),
    "prais": ("tab:green", "d"),
    "raps": ("tab:purple", "*"),
}


def render_sweep_figure(stats: AggregateStats, path: str,
                        title: str = "Mean supply power vs. target rate"):
    """Supply-vs-rate curves per scheme; excluded points drawn hollow."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    schemes = sorted({r.scheme for r in stats.records})
    for scheme in schemes:
        rows = stats.by_scheme(scheme)
        color, marker = _SCHEME_STYLE.get(scheme, ("gray", "x"))
        xs = [r.rate_bps / 1e6 for r in rows]
        ys = [r.mean_supply_w for r in rows]
        ax.plot(xs, ys, color=color, marker=marker, ms=4, lw=1.2,
                label=scheme)
        ex = [(x, y) for x, y, r in zip(xs, ys, rows) if not r.included]
        if ex:
            ax.plot(*zip(*ex), ls="none", marker=marker, ms=8,
                    mfc="none", mec=color)
    ax.set_xlabel("target rate per user [Mbps]")
    ax.set_ylabel("mean supply power [W]")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_breakdown_figure(breakdown: PowerBreakdown, path: str):
    """Bar chart of the component contributions."""
    parts = [("PA", breakdown.pa), ("RF", breakdown.rf), ("BB", breakdown.bb),
             ("DC", breakdown.dc), ("AC", breakdown.ac),
             ("Cool", breakdown.cool)]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar([p[0] for p in parts], [p[1] for p in parts], color="tab:blue")
    ax.set_ylabel("power [W]")
    ax.set_title(f"Supply power breakdown ({breakdown.mode}), "
                 f"total {breakdown.total:.1f} W")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
