"""Command-line entry point: ``aoajam {crb,spectrum,sweep}``.

Exit codes: 0 on success, 1 on runtime failure (including unwritable output),
2 on configuration or usage errors.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ScenarioConfig, load_config, write_table
from .harness import crb_sweep, run_scenario

log = logging.getLogger("aoajam")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2

SUMMARY_COLUMNS = [
    "theta_hat_deg",
    "mean_theta_hat_deg",
    "var_theta_hat_rad2",
    "capture_rate",
    "crb_rad2",
    "mean_sjnr_db",
    "trials",
]

SWEEP_COLUMNS = [
    "mean_theta_hat_deg",
    "var_theta_hat_rad2",
    "capture_rate",
    "crb_rad2",
    "var_over_crb",
    "mean_sjnr_db",
]

_SWEEPABLE = {
    "theta_t_deg", "theta_j_deg", "snr_db", "k_t_db", "k_j_db", "power_ratio",
    "training_length", "trials", "n_r", "n_j", "spacing_m", "wavelength_m", "grid_step_deg",
}


def _load(args) -> ScenarioConfig:
    return load_config(args.config).override(seed=args.seed, trials=args.trials)


def cmd_crb(args) -> None:
    cfg = _load(args)
    s = cfg.to_scenario()
    # the bound is unbounded at endfire, so those grid points are left out
    grid = s.grid[np.abs(s.grid) < np.pi / 2 - 1e-12]
    if grid.size < s.grid.size:
        log.info("dropped %d endfire grid point(s)", s.grid.size - grid.size)
    curves = crb_sweep(s, grid)
    rows = zip(np.degrees(grid), curves["free"].values, curves["uniform"].values,
               curves["optimal"].values)
    write_table(args.out, ["theta_deg", "crb_free", "crb_uniform", "crb_optimal"], rows)


def summary_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.stem + ".summary.csv")


def cmd_spectrum(args) -> None:
    cfg = _load(args)
    s = cfg.to_scenario()
    summary, records = run_scenario(s, keep_spectra="first")
    spec = records[0].spectrum
    write_table(args.out, ["theta_deg", "normalized_value"], zip(np.degrees(spec.grid), spec.values))
    write_table(summary_path(args.out), SUMMARY_COLUMNS, [[
        math.degrees(records[0].theta_hat),
        math.degrees(summary.mean_theta_hat),
        summary.var_theta_hat,
        summary.capture_rate,
        summary.crb_at_theta_t,
        summary.mean_sjnr_db,
        summary.trials,
    ]])


def _parse_values(text: str, kind: type) -> list:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ConfigError("sweep needs at least one value")
    try:
        return [kind(t) for t in items]
    except ValueError:
        raise ConfigError(f"sweep values must be {kind.__name__}: {text!r}") from None


def row_seed(master: int, row: int) -> int:
    return int(np.random.SeedSequence(master, spawn_key=(2, row)).generate_state(1, np.uint64)[0])


def cmd_sweep(args) -> None:
    cfg = _load(args)
    if args.param not in _SWEEPABLE:
        raise ConfigError(f"cannot sweep '{args.param}'; choose from {sorted(_SWEEPABLE)}")
    kind = int if isinstance(getattr(cfg, args.param), int) else float
    values = _parse_values(args.values, kind)
    rows = []
    for i, v in enumerate(values):
        s = cfg.override(**{args.param: v, "seed": row_seed(cfg.seed, i)}).to_scenario()
        summary, _ = run_scenario(s, keep_spectra="none")
        log.info("%s=%s capture=%.3f", args.param, v, summary.capture_rate)
        rows.append([v, math.degrees(summary.mean_theta_hat), summary.var_theta_hat,
                     summary.capture_rate, summary.crb_at_theta_t, summary.efficiency_ratio,
                     summary.mean_sjnr_db])
    write_table(args.out, [args.param] + SWEEP_COLUMNS, rows)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aoajam", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="scenario config file")
        sp.add_argument("--out", required=True, help="output CSV path")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--trials", type=int, help="override the config trial count")

    common(sub.add_parser("crb", help="CRB curves versus angle"))
    common(sub.add_parser("spectrum", help="first-trial ML spectrum plus a summary sidecar"))
    sw = sub.add_parser("sweep", help="one summary row per parameter value")
    common(sw)
    sw.add_argument("--param", required=True, help="config key to sweep")
    sw.add_argument("--values", required=True, help="comma-separated values")
    return p


_COMMANDS = {"crb": cmd_crb, "spectrum": cmd_spectrum, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"aoajam: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"aoajam: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001
        print(f"aoajam: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
