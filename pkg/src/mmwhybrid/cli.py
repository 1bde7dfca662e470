"""Command-line experiment runner.

Four subcommands cover the study's three result families plus config
checking:

- ``ba-sweep``: beam-alignment detection probability vs beacon slots,
- ``se-sweep``: sum spectral efficiency vs SNR before beamforming,
- ``power-sweep``: PA consumption/efficiency under both deployment options,
- ``validate``: parse and check a config without running anything.

Each sweep writes one CSV (plus PNG figures unless ``--no-figures``)
and a JSON manifest into the output directory, resolved from ``--out``,
the config's ``run.out_dir``, the MMWHYBRID_OUT environment variable,
or the working directory, in that order.  Results are deterministic in
(config, seed): every Monte Carlo point derives its own generator from
the top-level seed and its sweep coordinates, so the row set is
independent of execution order and ``--threads``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .config import ConfigError, ScenarioConfig, parse_config
from .evaluate import PrecodingScheme, ba_point, se_point
from .power import (BACKOFF_DB_TABLE, PAPR_PROVENANCE, REFERENCE_PROFILE, backoff_for,
                    dbm_to_watts, option1_evaluate, option2_evaluate, watts_to_dbm)

BA_COLUMNS = ("architecture", "scheme", "slots", "p_d", "std_err", "trials", "seed")
SE_COLUMNS = ("architecture", "scheme", "snr_bbf_db", "r_sum", "std_err", "trials", "seed")
POWER_COLUMNS = ("p_rad0_dbm", "p_rad_dbm", "p_cons_dbm", "eta_eff",
                 "architecture", "waveform", "option")


def _run_ba_task(task):
    scenario, slots, snr_db, trials, seed = task
    return ba_point(scenario, slots, snr_db, trials, seed)


def _run_se_task(task):
    scenario, label, index, snr_db, trials, seed = task
    return se_point(scenario, PrecodingScheme.from_label(label), index, snr_db, trials, seed)


def _map_tasks(worker, tasks, threads: int):
    """Evaluate tasks, preserving input order regardless of scheduling."""
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(worker, tasks))
    return [worker(t) for t in tasks]


def _write_csv(path: str, columns, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row[c] for c in columns])


def _config_digest(config_path: str | None, config: ScenarioConfig) -> str:
    if config_path:
        with open(config_path, "rb") as fh:
            return hashlib.sha256(fh.read()).hexdigest()
    return hashlib.sha256(repr(config).encode()).hexdigest()


def _write_manifest(out_dir: str, command: str, config_path, config, seed, outputs,
                    duration_s: float, metadata: dict | None = None) -> str:
    manifest = {
        "command": command,
        "version": __version__,
        "seed": seed,
        "config_path": config_path,
        "config_sha256": _config_digest(config_path, config),
        "outputs": outputs,
        "duration_s": round(duration_s, 3),
    }
    if metadata:
        manifest["metadata"] = metadata
    path = os.path.join(out_dir, f"{command}_manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _cmd_ba_sweep(config: ScenarioConfig, args) -> dict:
    trials = args.trials or config.ba_trials
    seed = config.seed if args.seed is None else args.seed
    tasks = [(config.scenario(arch, "grid"), slots, config.ba_snr_db, trials, seed)
             for arch in config.architectures
             for slots in config.ba_slots]
    points = _map_tasks(_run_ba_task, tasks, args.threads or config.threads)
    rows = [{"architecture": p.architecture, "scheme": p.scheme, "slots": int(p.axis),
             "p_d": p.value, "std_err": p.std_err, "trials": p.trials, "seed": p.seed}
            for p in points]
    return {"csv": ("ba.csv", BA_COLUMNS, rows), "plot": "ba"}


def _cmd_se_sweep(config: ScenarioConfig, args) -> dict:
    trials = args.trials or config.se_trials
    seed = config.seed if args.seed is None else args.seed
    tasks = [(config.scenario(arch, "continuous"), label, index, snr_db, trials, seed)
             for arch in config.architectures
             for label in config.se_schemes
             for index, snr_db in enumerate(config.se_snr_db)]
    points = _map_tasks(_run_se_task, tasks, args.threads or config.threads)
    rows = [{"architecture": p.architecture, "scheme": p.scheme, "snr_bbf_db": p.axis,
             "r_sum": p.value, "std_err": p.std_err, "trials": p.trials, "seed": p.seed}
            for p in points]
    return {"csv": ("se.csv", SE_COLUMNS, rows), "plot": "se"}


def _cmd_power_sweep(config: ScenarioConfig, args) -> dict:
    pa = config.pa_model
    evaluate = {1: option1_evaluate, 2: option2_evaluate}
    rows = []
    for option in config.power_options:
        for arch, waveform in BACKOFF_DB_TABLE:
            profile = backoff_for(arch, waveform)
            for p_rad0_dbm in config.power_p_rad0_dbm:
                op = evaluate[option](dbm_to_watts(p_rad0_dbm), profile, REFERENCE_PROFILE, pa)
                rows.append({"p_rad0_dbm": p_rad0_dbm,
                             "p_rad_dbm": watts_to_dbm(op.p_rad),
                             "p_cons_dbm": watts_to_dbm(op.p_cons),
                             "eta_eff": op.eta_eff,
                             "architecture": profile.architecture.value,
                             "waveform": profile.waveform,
                             "option": option})
    metadata = {"pa_p_max_w": pa.p_max, "pa_eta_max": pa.eta_max,
                "backoff_provenance": PAPR_PROVENANCE}
    return {"csv": ("power.csv", POWER_COLUMNS, rows), "plot": "power", "metadata": metadata}


def _cmd_validate(config: ScenarioConfig, args) -> dict:
    archs = "/".join(a.value for a in config.architectures)
    print(f"config OK: {config.bs_antennas}x{config.bs_rf_chains} BS, "
          f"{config.ue_antennas}x{config.ue_rf_chains} UE, {archs}, "
          f"{len(config.profile)} paths, seed {config.seed}")
    return {}


_COMMANDS = {
    "ba-sweep": _cmd_ba_sweep,
    "se-sweep": _cmd_se_sweep,
    "power-sweep": _cmd_power_sweep,
    "validate": _cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmwhybrid",
        description="mmWave hybrid beamforming link simulator: training, "
                    "spectral-efficiency, and PA-efficiency sweeps.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
            ("ba-sweep", "beam-alignment detection probability vs beacon slots"),
            ("se-sweep", "sum spectral efficiency vs SNR before beamforming"),
            ("power-sweep", "PA consumption and efficiency tables"),
            ("validate", "check a config file and exit")]:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", metavar="PATH", help="YAML scenario config")
        cmd.add_argument("--out", metavar="DIR",
                         help=f"output directory (default: $MMWHYBRID_OUT or cwd)")
        cmd.add_argument("--seed", type=int, help="override run.seed")
        cmd.add_argument("--trials", type=int, help="override Monte Carlo trials per point")
        cmd.add_argument("--threads", type=int, help="worker processes for sweep points")
        cmd.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = parse_config(args.config)
        if args.trials is not None and args.trials < 1:
            raise ConfigError("--trials must be positive")
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be at least 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    started = time.monotonic()
    try:
        result = _COMMANDS[args.command](config, args)
        if not result:
            return 0
        out_dir = config.resolve_out_dir(args.out)
        os.makedirs(out_dir, exist_ok=True)
        name, columns, rows = result["csv"]
        csv_path = os.path.join(out_dir, name)
        _write_csv(csv_path, columns, rows)
        outputs = [name]
        if not args.no_figures:
            from . import plots
            png = name.replace(".csv", ".png")
            getattr(plots, f"plot_{result['plot']}")(rows, os.path.join(out_dir, png))
            outputs.append(png)
        seed = config.seed if args.seed is None else args.seed
        _write_manifest(out_dir, result["plot"], args.config, config, seed, outputs,
                        time.monotonic() - started, result.get("metadata"))
        print(f"wrote {', '.join(outputs)} to {out_dir}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
