"""Command-line front end: ``rydberg-hcp {basis,kick,full,carpet,table1}``."""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import constants as C
from .analysis import (
    REFERENCE_ENTROPY,
    REFERENCE_TARGETS,
    carpet_scan,
    entropy,
    entropy_table,
    match_ridges,
    ridge_predictions,
)
from .basis import BasisError, state_label
from .config import ConfigError, RunConfig, load_config, parse_quantity
from .dynamics import Propagator, TrajectoryRecorder, evolution_operator, propagate
from .kick import kick_matrix
from .output import num, write_csv, write_kv, write_pgm
from .register import RegisterError, free_evolve, load_register

SUBCOMMANDS = ("basis", "kick", "full", "carpet", "table1")
RIDGE_TOLERANCE = 0.15


def _header(cfg: RunConfig, command: str) -> list[str]:
    return [f"rydberg-hcp {command}", *cfg.resolved_lines()]


def _populations_rows(basis, reg_idx, delays, all_pops):
    reg = set(int(i) for i in reg_idx)
    for d, p in zip(delays, all_pops):
        for i, s in enumerate(basis.states):
            yield (float(d), float(d) * C.AU_TIME_PS, s.n, s.l, s.label, int(i in reg), float(p[i]))


def _entropy_blocks(cfg: RunConfig, delays, reg_pops):
    labels = cfg.register.labels
    blocks = []
    for k, (d, p) in enumerate(zip(delays, reg_pops)):
        rep = entropy(p)
        lines = [
            f"delay_au = {num(d)}",
            f"delay_ps = {num(d * C.AU_TIME_PS)}",
            f"argmax = {labels[int(np.argmax(p))]}",
            *rep.as_lines(labels),
        ]
        blocks.append((f"delay_{k + 1}", lines))
    return blocks


def _write_spectra(cfg, command, basis, scan, written):
    header = _header(cfg, command)
    out = cfg.out_dir
    idx = cfg.register.indices(basis)
    if "csv" in cfg.formats:
        cols = ["delay_au", "delay_ps", "n", "l", "state", "register", "population"]
        written.append(
            write_csv(out / f"populations_{command}.csv", header, cols,
                      _populations_rows(basis, idx, scan.delays, scan.all_populations))
        )
    if "kv" in cfg.formats:
        written.append(write_kv(out / f"entropy_{command}.txt", header, _entropy_blocks(cfg, scan.delays, scan.populations)))


def cmd_basis(cfg: RunConfig, args) -> list[Path]:
    basis = cfg.basis.build()
    rows = (
        (i, s.n, s.l, s.label, float(s.n_star), float(s.energy), float(s.energy * C.HARTREE_CM1))
        for i, s in enumerate(basis.states)
    )
    cols = ["index", "n", "l", "state", "n_star", "energy_au", "energy_cm1"]
    return [write_csv(cfg.out_dir / "basis.csv", _header(cfg, "basis") + [f"states = {len(basis)}"], cols, rows)]


def cmd_kick(cfg: RunConfig, args) -> list[Path]:
    basis = cfg.basis.build()
    kick = kick_matrix(basis, cfg.pulse.Q)
    packet = load_register(cfg.register, basis)
    scan = carpet_scan(packet, kick, cfg.scan.delays, cfg.register, keep_all=True, threads=args.threads)
    written: list[Path] = []
    _write_spectra(cfg, "kick", basis, scan, written)
    if "matrix" in cfg.formats:
        written.append(kick.write_csv(cfg.out_dir / "kick_matrix.csv", _header(cfg, "kick")))
    return written


def cmd_full(cfg: RunConfig, args) -> list[Path]:
    basis = cfg.basis.build()
    prop = Propagator.for_basis(basis, cfg.pulse.dt)
    pulse = cfg.pulse.pulse
    op = evolution_operator(pulse, prop)
    packet = load_register(cfg.register, basis)
    # Pulse centroid sits at each requested delay.
    offset = pulse.centroid - pulse.t_start
    scan = carpet_scan(packet, op, cfg.scan.delays, cfg.register, keep_all=True, threads=args.threads,
                       operator_offset=offset)
    written: list[Path] = []
    _write_spectra(cfg, "full", basis, scan, written)
    if cfg.trajectory:
        placed = pulse.centered_at(cfg.scan.delays[0])
        rec = TrajectoryRecorder(cfg.register.indices(basis))
        propagate(free_evolve(packet, placed.t_start), placed, prop, placed.t_start, placed.t_end, rec)
        written.append(rec.write_csv(cfg.out_dir / "trajectory_full.csv", cfg.register.labels, _header(cfg, "full")))
    return written


def cmd_carpet(cfg: RunConfig, args) -> list[Path]:
    delays = cfg.scan.grid()
    basis = cfg.basis.build()
    kick = kick_matrix(basis, cfg.pulse.Q)
    packet = load_register(cfg.register, basis)
    scan = carpet_scan(packet, kick, delays, cfg.register, threads=args.threads)
    header = _header(cfg, "carpet") + [f"carpet.delays = {len(delays)}", f"carpet.states = {len(scan.labels)}"]
    out = cfg.out_dir
    written: list[Path] = []
    if "csv" in cfg.formats:
        cols = ["delay_au", "delay_ps", *[f"P_{x}" for x in scan.labels], "contrast"]
        contrast = scan.contrast()
        rows = (
            (float(d), float(d) * C.AU_TIME_PS, *map(float, p), float(c))
            for d, p, c in zip(scan.delays, scan.populations, contrast)
        )
        written.append(write_csv(out / "carpet.csv", header, cols, rows))
    if "pgm" in cfg.formats:
        pgm_header = header + ["rows = " + " ".join(scan.labels), "columns = delays in scan order"]
        written.append(write_pgm(out / "carpet.pgm", scan.populations.T, pgm_header))
    s = cfg.scan
    preds = ridge_predictions(s.ridge_n, s.ridge_l, cfg.basis.defects, s.ridge_k_max)
    rows = []
    for k, m in enumerate(match_ridges(scan, preds)):
        peak = m.nearest_peak
        rows.append((
            k, m.predicted, m.predicted * C.AU_TIME_PS,
            "none" if peak is None else num(peak * C.AU_TIME_PS),
            float(m.relative_offset), int(m.within(RIDGE_TOLERANCE)),
        ))
    cols = ["k", "predicted_au", "predicted_ps", "nearest_peak_ps", "relative_offset", "within_15pct"]
    written.append(write_csv(out / "ridges.csv", header + [f"ridge.reference = {state_label(s.ridge_n, s.ridge_l)}"], cols, rows))
    return written


def cmd_table1(cfg: RunConfig, args) -> list[Path]:
    basis = cfg.basis.build()
    kick = kick_matrix(basis, cfg.pulse.Q)
    prop = Propagator.for_basis(basis, cfg.pulse.dt)
    s = cfg.scan
    common = dict(targets=s.targets, search_window=s.search_window, search_step=s.search_step)
    tables = {
        "impulse": entropy_table(basis, cfg.register, cfg.pulse.Q, mode="impulse", kick=kick, **common),
        "full": entropy_table(basis, cfg.register, cfg.pulse.Q, pulse=cfg.pulse.pulse, mode="full",
                              propagator=prop, **common),
    }
    reference_targets = len(s.targets) == len(REFERENCE_TARGETS) and all(
        tuple(k) == rk and abs(t - rt) < 1e-9 for (k, t), (rk, rt) in zip(s.targets, REFERENCE_TARGETS)
    )
    header = _header(cfg, "table1")
    initial = entropy(np.array(cfg.register.base_amplitudes) ** 2 / np.sum(np.square(cfg.register.base_amplitudes)))
    rows, blocks = [], [("initial", [f"entropy_nats = {num(initial.entropy)}"])]
    for mode, table in tables.items():
        for k, row in enumerate(table):
            ref = REFERENCE_ENTROPY[mode][k] if reference_targets else "none"
            exp = REFERENCE_ENTROPY["exp"][k] if reference_targets else "none"
            rows.append((mode, row.label, row.nominal_delay * C.AU_TIME_PS, row.delay * C.AU_TIME_PS,
                         int(row.found), row.argmax, row.entropy, ref if isinstance(ref, str) else float(ref),
                         exp if isinstance(exp, str) else float(exp)))
            blocks.append((f"{mode}_{row.label}", [
                f"nominal_delay_ps = {num(row.nominal_delay * C.AU_TIME_PS)}",
                f"delay_ps = {num(row.delay * C.AU_TIME_PS)}",
                f"found = {str(row.found).lower()}",
                f"argmax = {row.argmax}",
                f"reference_entropy = {ref}",
                f"experimental_entropy = {exp}",
                *row.report.as_lines(cfg.register.labels),
            ]))
    cols = ["mode", "state", "nominal_ps", "delay_ps", "found", "argmax", "entropy", "reference_entropy",
            "experimental_entropy"]
    written = [write_csv(cfg.out_dir / "table1.csv", header, cols, rows)]
    if "kv" in cfg.formats:
        written.append(write_kv(cfg.out_dir / "table1.txt", header, blocks))
    return written


COMMANDS = {"basis": cmd_basis, "kick": cmd_kick, "full": cmd_full, "carpet": cmd_carpet, "table1": cmd_table1}


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="YAML run configuration (defaults built in)")
    common.add_argument("--out", type=Path, default=None, help="output directory (overrides output.directory)")
    common.add_argument("--threads", type=_positive_int, default=1, help="worker threads for delay scans")
    common.add_argument("--dt", default=None, help="time step with unit, e.g. '5 fs' (overrides pulse.dt)")
    common.add_argument("--seedless", action="store_true",
                        help="assert a random-number-free run (always true; takes no value)")
    parser = argparse.ArgumentParser(prog="rydberg-hcp", description="Rydberg register retrieval by half-cycle pulses")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "basis": "write the basis state table",
        "kick": "impulse-model spectra at the configured delays",
        "full": "split-operator spectra at the configured delays",
        "carpet": "delay scan heatmap and ridge overlay",
        "table1": "retrieval entropies for both models",
    }
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.out is not None:
            cfg = dataclasses.replace(cfg, out_dir=args.out)
        if args.dt is not None:
            dt = parse_quantity(args.dt, "time", "--dt")
            if not dt > 0:
                raise ConfigError("--dt must be positive")
            cfg = dataclasses.replace(cfg, pulse=dataclasses.replace(cfg.pulse, dt=dt))
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        written = COMMANDS[args.command](cfg, args)
    except (ConfigError, BasisError, RegisterError, ValueError) as exc:
        print(f"rydberg-hcp: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"rydberg-hcp: error writing outputs: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
