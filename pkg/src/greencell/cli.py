"""Command-line entry point.

Subcommands: powermodel, channel, pc-sweep, prais-sweep, raps-sim, compare.
Exit codes: 0 success, 1 configuration/usage error, 2 the whole sweep was
infeasible.  Diagnostics go to stderr as key=value lines.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import secrets
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .channel import gen_frame_channels, drop_users, path_gain, eigenvalues
from .config import ConfigError, RunConfig, load_config, parse_rate_grid
from .harness import (OFDMA_SCHEMES, TDMA_SCHEMES, RunSpec, run_monte_carlo,
                      stats_to_csv, stats_to_json, trial_rng)
from .powermodel import (AFFINE_2X, POWER_MODEL_PRESETS, affine_supply,
                         component_supply, parameterized_supply)

RAPS_AFFINE_BY_D = {
    1: POWER_MODEL_PRESETS["affine"],
    2: replace(AFFINE_2X, p_sleep_w=107.0),
}


def log_kv(**kv):
    print(" ".join(f"{k}={v}" for k, v in kv.items()), file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 on usage errors, matching the CLI contract."""

    def error(self, message):
        self.print_usage(sys.stderr)
        log_kv(error="usage", detail=message.replace(" ", "_"))
        raise SystemExit(1)


def _build_parser() -> _Parser:
    p = _Parser(prog="greencell",
                description="Base-station power models and energy-minimal "
                            "downlink resource allocation")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, schemes_default):
        sp.add_argument("--config", help="INI config file "
                        f"(default: ${'GREENCELL_CONFIG'})")
        sp.add_argument("--rates", help="rate grid start:stop:steps or list; "
                        "accepts k/M/G suffixes")
        sp.add_argument("--spacing", choices=("linear", "log"))
        sp.add_argument("--trials", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--schemes", help="comma-separated scheme list",
                        default=None)
        sp.add_argument("--model", choices=sorted(POWER_MODEL_PRESETS),
                        help="power model preset for the sweep")
        sp.add_argument("--output", "-o", help="output file (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), dest="out_format")
        sp.add_argument("--plot", action="store_true",
                        help="render a PNG figure next to the output file")
        sp.add_argument("--dry-run", action="store_true",
                        help="validate and print the resolved configuration")
        sp.set_defaults(schemes_default=schemes_default)

    pm = sub.add_parser("powermodel", help="evaluate a power model")
    pm.add_argument("action", choices=("eval",))
    pm.add_argument("--model", default="affine",
                    choices=("affine", "parameterized", "component"))
    pm.add_argument("--d", type=int, default=1, help="antenna count")
    pm.add_argument("--chi", type=float, default=1.0, help="load share [0,1]")
    pm.add_argument("--tx", type=float, default=None,
                    help="component model: transmit power in W at full "
                         "bandwidth (default: the configured maximum)")
    pm.add_argument("--bw-share", type=float, default=None,
                    help="component model: bandwidth share (default: chi)")
    pm.add_argument("--sleep", action="store_true")
    pm.add_argument("--config")
    pm.add_argument("--output", "-o")
    pm.add_argument("--plot", action="store_true")
    pm.add_argument("--dry-run", action="store_true")

    ch = sub.add_parser("channel", help="inspect channel generation")
    ch.add_argument("action", choices=("dump",))
    ch.add_argument("--config")
    ch.add_argument("--seed", type=int)
    ch.add_argument("--d", type=int, default=2)
    ch.add_argument("--output", "-o")
    ch.add_argument("--dry-run", action="store_true")

    for name, schemes in (("pc-sweep", ("pc",)), ("prais-sweep", ("prais",)),
                          ("compare", ("ba", "dtx", "pc", "prais")),
                          ("raps-sim", ("raps", "dtx", "ba"))):
        sp = sub.add_parser(name, help=f"Monte Carlo sweep ({'/'.join(schemes)})")
        common(sp, schemes)
    return p


def _resolve(args) -> RunConfig:
    cfg = load_config(getattr(args, "config", None))
    updates = {}
    if getattr(args, "rates", None):
        updates["rate_grid"] = parse_rate_grid(
            args.rates, args.spacing or cfg.spacing)
    if getattr(args, "spacing", None):
        updates["spacing"] = args.spacing
    if getattr(args, "trials", None) is not None:
        updates["trials"] = args.trials
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        updates["workers"] = args.workers
    if getattr(args, "model", None):
        updates["power_model"] = args.model
    if getattr(args, "schemes", None):
        updates["schemes"] = tuple(s.strip() for s in args.schemes.split(","))
    elif not cfg.schemes:
        updates["schemes"] = args.schemes_default
    if getattr(args, "output", None):
        updates["output"] = args.output
    if getattr(args, "out_format", None):
        updates["out_format"] = args.out_format
    if getattr(args, "plot", False):
        updates["plot"] = True
    return replace(cfg, **updates).validate()


def _emit(text: str, output: str | None):
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_powermodel(args) -> int:
    cfg = load_config(args.config)
    if args.dry_run:
        log_kv(command="powermodel", model=args.model, d=args.d, chi=args.chi)
        return 0
    if not 0.0 <= args.chi <= 1.0:
        raise ConfigError("powermodel.chi: must lie in [0, 1]")
    if args.model == "affine":
        if args.d not in (1, 2):
            raise ConfigError("powermodel.d: affine preset needs d in {1, 2}")
        preset = POWER_MODEL_PRESETS["affine" if args.d == 1 else "affine2x"]
        total = affine_supply(preset, 0.0 if args.sleep else args.chi)
        record = {"model": "affine", "num_antennas": args.d,
                  "chi": args.chi, "total_w": total}
    elif args.model == "parameterized":
        p = cfg.parameterized
        total = parameterized_supply(p, 0.0 if args.sleep else args.chi, args.d)
        record = {"model": "parameterized", "num_antennas": args.d,
                  "chi": args.chi, "total_w": total}
    else:
        comp = replace(cfg.component, num_chains=args.d)
        # load chi means radiating chi * P_max over a bandwidth share chi,
        # i.e. constant maximum spectral density
        tx = comp.max_tx_power_w if args.tx is None else args.tx
        bw = args.chi if args.bw_share is None else args.bw_share
        bd = component_supply(comp, tx, bw, sleep=args.sleep)
        record = {"model": "component", "num_antennas": args.d,
                  "chi": args.chi, **bd.as_dict()}
        if args.plot:
            from .report import render_breakdown_figure
            fig_path = (os.path.splitext(args.output)[0] + ".png"
                        if args.output else "powermodel.png")
            render_breakdown_figure(bd, fig_path)
            log_kv(figure=fig_path)
    lines = [json.dumps(record, sort_keys=True)]
    width = max(len(k) for k in record)
    for key in sorted(record):
        value = record[key]
        shown = f"{value:.3f}" if isinstance(value, float) else str(value)
        lines.append(f"{key.ljust(width)}  {shown}")
    _emit("\n".join(lines) + "\n", args.output)
    return 0


def _cmd_channel(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else secrets.randbits(32)
    log_kv(command="channel", seed=seed)
    if args.dry_run:
        return 0
    s = cfg.scenario
    rng = trial_rng(seed, 0)
    pos = drop_users(s, rng)
    gains = path_gain(np.hypot(pos[:, 0], pos[:, 1]), s.shadowing_db, rng)
    frame = gen_frame_channels(s, min(args.d, s.max_tx_antennas), gains, rng)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("subcarrier", "slot", "user", "eig_index", "eigenvalue"))
    n, t, k = frame.h.shape[:3]
    for ni in range(n):
        for ti in range(t):
            for ki in range(k):
                eig = eigenvalues(frame.h[ni, ti, ki]).values
                for ei, val in enumerate(eig):
                    writer.writerow((ni, ti, ki, ei, f"{val:.10g}"))
    _emit(buf.getvalue(), args.output)
    return 0


def _cmd_sweep(args, context: str) -> int:
    cfg = _resolve(args)
    if not cfg.rate_grid:
        raise ConfigError("run.rates: a rate grid is required (--rates)")
    allowed = TDMA_SCHEMES if context == "tdma" else OFDMA_SCHEMES
    for s in cfg.schemes:
        if s not in allowed:
            raise ConfigError(f"run.schemes: {s!r} not valid here "
                              f"(choose from {', '.join(allowed)})")
    seed = cfg.seed if cfg.seed is not None else secrets.randbits(32)
    log_kv(command=args.command, seed=seed, trials=cfg.trials,
           workers=cfg.workers, schemes=",".join(cfg.schemes),
           points=len(cfg.rate_grid))
    if args.dry_run:
        for k, v in cfg.resolved_items():
            log_kv(**{k.replace(".", "_"): v})
        return 0
    if context == "tdma":
        affine = cfg.affine or POWER_MODEL_PRESETS[cfg.power_model]
        spec = RunSpec(scenario=cfg.scenario, schemes=cfg.schemes,
                       rate_grid=cfg.rate_grid, seed=seed, context="tdma",
                       affine=affine)
    else:
        spec = RunSpec(scenario=cfg.scenario, schemes=cfg.schemes,
                       rate_grid=cfg.rate_grid, seed=seed, context="ofdma",
                       affine_by_d=RAPS_AFFINE_BY_D)
    stats = run_monte_carlo(spec, trials=cfg.trials, workers=cfg.workers)
    with_extra = context == "ofdma"
    text = (stats_to_csv(stats, with_extra) if cfg.out_format == "csv"
            else stats_to_json(stats, with_extra))
    _emit(text, cfg.output)
    if cfg.plot:
        from .report import render_sweep_figure
        fig_path = (os.path.splitext(cfg.output)[0] + ".png"
                    if cfg.output else f"{args.command}.png")
        render_sweep_figure(stats, fig_path)
        log_kv(figure=fig_path)
    if all(not r.included for r in stats.records):
        log_kv(error="all_rate_points_excluded")
        return 2
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "powermodel":
            return _cmd_powermodel(args)
        if args.command == "channel":
            return _cmd_channel(args)
        if args.command in ("pc-sweep", "prais-sweep", "compare"):
            return _cmd_sweep(args, "tdma")
        if args.command == "raps-sim":
            return _cmd_sweep(args, "ofdma")
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        log_kv(error="config", detail=str(exc).replace(" ", "_"))
        return 1


if __name__ == "__main__":
    sys.exit(main())
