"""Command-line runner: config or preset in, CSV table and JSON manifest out.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import COMMANDS, RunSpec, list_presets, load_preset, parse_config
from .effective_theory import closed_form_effective, reduce_to_chain
from .errors import ConfigError, NumericalError
from .lattice_model import edge_unlock_field
from .open_system import dephasing_sweep
from .protocols import (
    fisher_information,
    ideal_quench_hom,
    mach_zehnder_fringes,
    optimize_edge_field,
    optimize_split_field,
    quench_detection,
    run_noon,
    run_transfer,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def _pmap(fn, items, threads: int):
    items = list(items)
    if threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    workers = threads if threads > 0 else (os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))  # map keeps input order


# --- subcommands: each returns (header, rows, summary) ------------------------

def cmd_transfer(spec: RunSpec, threads: int):
    cfg = spec.build()
    rep = run_transfer(cfg)
    rows = [(t, t / rep.t_star, p1, pL) for t, p1, pL in zip(rep.times, rep.P_first_series, rep.P_last_series)]
    return ("t", "t_over_tstar", "P_first", "P_last"), rows, {
        "t_star": rep.t_star, "P_first_at_tstar": rep.P_first, "P_last_at_tstar": rep.P_last}


def cmd_unlock_opt(spec: RunSpec, threads: int):
    points = [(U, L) for L in spec.L_values() for U in spec.U_values()]

    def one(point):
        U, L = point
        cfg = spec.build(U=U, L=L, split=False)
        res = optimize_edge_field(cfg)
        theory = edge_unlock_field(cfg.M, cfg.J, U)
        return (U, L, res.beta_prime, theory, res.beta_prime / theory, res.P_last, res.t_star, int(res.degenerate))

    rows = _pmap(one, points, threads)
    header = ("U_over_J", "L", "beta_prime", "beta_prime_theory", "ratio", "P_last", "t_star", "degenerate")
    return header, rows, {}


def _noon_row(spec: RunSpec, U: float):
    cfg = spec.build(U=U)
    rep = run_noon(cfg)
    return (U, rep.beta, rep.t_star, rep.P_first, rep.P_last, *rep.mixed.values(), rep.balance_residual), rep


def cmd_noon(spec: RunSpec, threads: int):
    results = _pmap(lambda U: _noon_row(spec, U), spec.U_values(), threads)
    mixed = [f"P_{k}" for k in results[0][1].mixed]
    header = ("U_over_J", "beta", "t_star", "P_first", "P_last", *mixed, "balance_residual")
    return header, [r for r, _ in results], {}


def cmd_split_opt(spec: RunSpec, threads: int):
    M = spec.experiment["M"]

    def one(U):
        cfg = spec.build(U=U, split=False)
        res = optimize_split_field(cfg)
        scale = abs(cfg.J) ** M / U ** (M - 1)
        return (U, res.beta, res.beta / scale, res.residual, res.t_star), scale

    results = _pmap(one, spec.U_values(), threads)
    x = np.array([s for _, s in results])
    y = np.array([r[1] for r, _ in results])
    alpha = float(x @ y / (x @ x))
    header = ("U_over_J", "beta_5050", "beta_scaled", "balance_residual", "t_star")
    return header, [r for r, _ in results], {"alpha": alpha}


def cmd_fringes(spec: RunSpec, threads: int):
    cfg = spec.build()
    scan = mach_zehnder_fringes(cfg, spec.phis(), literal=spec.sweep.get("literal_phase", False))
    rows = list(zip(scan.phis, scan.probability, scan.ideal))
    return ("phi", "P_first", "ideal"), rows, {"t_star": scan.t_star}


def cmd_quench(spec: RunSpec, threads: int):
    cfg = spec.build()
    scan = quench_detection(cfg, spec.phis(), literal=spec.sweep.get("literal_phase", False))
    rows = list(zip(scan.phis, scan.probability, scan.ideal, ideal_quench_hom(scan.phis)))
    return ("phi", "P_1L", "ideal_printed", "ideal_normalized"), rows, {
        "t_star": scan.t_star, "t_second": scan.t_second}


def cmd_fisher(spec: RunSpec, threads: int):
    def one(U):
        rep = fisher_information(spec.build(U=U))
        return (U, rep.F_Q, rep.delta_phi, rep.classical_bound, rep.quantum_bound)

    rows = _pmap(one, spec.U_values(), threads)
    return ("U_over_J", "F_Q", "delta_phi", "classical_bound", "quantum_bound"), rows, {}


def cmd_dephasing(spec: RunSpec, threads: int):
    cfg = spec.build()
    rel = spec.sweep.get("gammas", (0.0, spec.experiment.get("gamma", 0.0)))
    Jeff = cfg.J_eff()
    points = dephasing_sweep(cfg, [g * Jeff for g in rel])
    rows = [(g, p.gamma, p.probability, p.relative_variation) for g, p in zip(rel, points)]
    return ("gamma_over_Jeff", "gamma", "P_last", "relative_variation"), rows, {"J_eff": Jeff}


def cmd_effective(spec: RunSpec, threads: int):
    cfg = spec.build(split=False)
    params = cfg.params()
    chain = reduce_to_chain(params, cfg.M, order=spec.sweep.get("order"), onsite=cfg.onsite)
    try:
        closed = closed_form_effective(cfg.M, params, onsite=cfg.onsite)
    except ValueError:
        closed = None
    rows = []
    for j in range(cfg.L):
        J_num = chain.hopping[j] if j < cfg.L - 1 else np.nan
        if closed is None:
            Bc = Jc = np.nan
        else:
            Bc = closed.onsite[j]
            Jc = closed.hopping[j] if j < cfg.L - 1 else np.nan
        rows.append((j + 1, chain.onsite[j], J_num, Bc, Jc))
    return ("j", "B_eff_j", "J_eff_j", "B_closed_j", "J_closed_j"), rows, {"discarded": chain.discarded}


RUNNERS = {
    "transfer": cmd_transfer,
    "unlock-opt": cmd_unlock_opt,
    "noon": cmd_noon,
    "split-opt": cmd_split_opt,
    "fringes": cmd_fringes,
    "quench-fringes": cmd_quench,
    "fisher": cmd_fisher,
    "dephasing-sweep": cmd_dephasing,
    "effective-dump": cmd_effective,
}
assert set(RUNNERS) == set(COMMANDS)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def write_gnuplot(path: Path, csv_name: str, header) -> None:
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set xlabel '{header[0]}'",
        "plot " + ", \\\n     ".join(f"'{csv_name}' using 1:{k} with lines" for k in range(2, len(header) + 1)),
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def run(command: str, spec: RunSpec, out: Path, threads: int = 1, seed: int | None = None,
        gnuplot: bool = False, source: str = "") -> dict:
    """Execute one subcommand and write its outputs; returns the manifest."""
    if command not in RUNNERS:
        raise ConfigError(f"unknown command {command!r}")
    header, rows, summary = RUNNERS[command](spec, threads)
    out.mkdir(parents=True, exist_ok=True)
    stem = command.replace("-", "_")
    csv_path = out / f"{stem}.csv"
    write_csv(csv_path, header, rows)
    outputs = [csv_path.name]
    if gnuplot:
        gp = out / f"{stem}.gp"
        write_gnuplot(gp, csv_path.name, header)
        outputs.append(gp.name)
    manifest = {
        "experiment": command,
        "source": source,
        "config": spec.echo,
        "summary": {k: float(v) for k, v in summary.items()},
        "version": __version__,
        "seed": seed,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "outputs": outputs + ["manifest.json"],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="boundnoon", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--list-presets", action="store_true", help="print bundled preset names and exit")
    sub = p.add_subparsers(dest="command")
    for name in COMMANDS + ("run",):
        sp = sub.add_parser(name, help="use the preset's [run] command" if name == "run" else None)
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--config", type=Path, help="INI config file")
        src.add_argument("--preset", help="bundled preset name")
        sp.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for sweeps, 0 = auto")
        sp.add_argument("--seed", type=int, default=None, help="reserved; all protocols are deterministic")
        sp.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list_presets:
        print("\n".join(list_presets()))
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        if args.config is not None:
            spec, source = parse_config(args.config), str(args.config)
        elif args.preset is not None:
            spec, source = load_preset(args.preset), f"preset:{args.preset}"
        else:
            raise ConfigError("one of --config or --preset is required")
        if args.threads < 0:
            raise ConfigError("--threads must be >= 0")
        command = args.command
        if command == "run":
            if spec.command is None:
                raise ConfigError("config has no [run] command")
            command = spec.command
        manifest = run(command, spec, args.out, args.threads, args.seed, args.gnuplot, source)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, IndexError) as exc:
        # parameter combinations the protocols reject (e.g. no closed form for this M)
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for name in manifest["outputs"]:
        print(args.out / name)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
