"""Command line entry point: ``spde-lab <subcommand> --config <path> [--out <dir>] [--seed <u64>]``.

Exit codes: 0 success, 2 config parse error, 3 invariant violation, 4 I/O failure.
Errors are reported on stderr as a one-line JSON record.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, experiments
from .config import ConfigError, ConfigInvariantError, ExperimentConfig, ExperimentKind, load
from .io import write_csv, write_json
from .noise import SeedSpec
from .schemes import trajectory_dump_rows
from .montecarlo import simulate_finals, worker_count

EXIT_PARSE, EXIT_INVARIANT, EXIT_IO = 2, 3, 4


class InvariantViolation(RuntimeError):
    """A validation experiment found a failed check."""


def _rows_to_csv(path: Path, rows: list[dict], header=None) -> Path:
    header = header or list(rows[0].keys())
    return write_csv(path, header, ([r[h] for h in header] for r in rows))


def _variants(cfg: ExperimentConfig):
    kinds = cfg.semigroup_kinds or (cfg.scheme.semigroup_kind,)
    schemes = cfg.schemes or (cfg.scheme.scheme,)
    for kind in kinds:
        for scheme in schemes:
            yield cfg.scheme.with_(semigroup_kind=kind, scheme=scheme), f"{kind.value}_{scheme.value}"


def run_sweep(cfg: ExperimentConfig, out: Path) -> list[Path]:
    paths = []
    for scheme_cfg, tag in _variants(cfg):
        rows = experiments.moment_sweep(scheme_cfg, cfg.N_list, cfg.p_list, cfg.n_samples,
                                        cfg.master_seed, label=f"sweep/{tag}")
        paths.append(_rows_to_csv(out / f"sweep_{tag}.csv", rows, experiments.MOMENT_COLUMNS))
    return paths


def run_simulate(cfg: ExperimentConfig, out: Path) -> list[Path]:
    s = cfg.scheme
    seed = SeedSpec(cfg.master_seed, experiments.experiment_id(f"simulate/N={s.N}"))
    res = simulate_finals(s, cfg.n_samples, seed)
    header = ["trajectory", "exploded_at", "N"] + [f"c{n}" for n in range(-s.N, s.N + 1)]
    rows = ([i, int(k), s.N, *map(float, row)] for i, (row, k) in enumerate(zip(res.final, res.exploded_at)))
    paths = [write_csv(out / "final_states.csv", header, rows)]
    if cfg.dump_trajectory:
        dump = trajectory_dump_rows(s, seed.at(trajectory=0))
        paths.append(write_csv(out / "trajectory_0.csv", ["step", "norm_H", "e0_coefficient", "exploded"], dump))
    return paths


def run_bounds(cfg: ExperimentConfig, out: Path) -> list[Path]:
    M_list = [M for M in cfg.N_list if M >= 2]
    if not M_list:
        raise ConfigInvariantError("bounds needs N_list entries >= 2")
    rows = experiments.bounds_table(cfg.scheme, M_list, cfg.r_list)
    return [_rows_to_csv(out / "bounds.csv", rows)]


def run_validate_ou(cfg: ExperimentConfig, out: Path) -> list[Path]:
    paths = []
    failures = 0
    for N in cfg.N_list:
        rows = experiments.validate_ou(cfg.scheme.with_(N=N), cfg.n_samples, cfg.master_seed)
        failures += sum(not r["within_3se"] for r in rows)
        paths.append(_rows_to_csv(out / f"validate_ou_N{N}.csv", rows))
    if failures:
        raise InvariantViolation(f"{failures} modes outside 3 standard errors", paths)
    return paths


def run_validate_gaussian(cfg: ExperimentConfig, out: Path) -> list[Path]:
    tables = {
        "gaussian_interval.csv": experiments.validate_gaussian_interval(),
        "projected_ball.csv": experiments.validate_ball_bounds(False, cfg.n_samples, cfg.master_seed),
        "smoothed_ball.csv": experiments.validate_ball_bounds(True, cfg.n_samples, cfg.master_seed),
    }
    paths = [_rows_to_csv(out / name, rows) for name, rows in tables.items()]
    bad = sum(not r["holds"] for rows in tables.values() for r in rows)
    if bad:
        raise InvariantViolation(f"{bad} bound checks failed", paths)
    return paths


def run_validate_abstract(cfg: ExperimentConfig, out: Path) -> list[Path]:
    row = experiments.validate_abstract_bound(n_paths=cfg.n_samples, master_seed=cfg.master_seed)
    paths = [_rows_to_csv(out / "abstract_bound.csv", [row])]
    if not row["holds"]:
        raise InvariantViolation("abstract product bound exceeds the Monte Carlo estimate", paths)
    return paths


def run_sode1d(cfg: ExperimentConfig, out: Path) -> list[Path]:
    rows = experiments.sode1d_sweep(cfg.sode1d, cfg.N_list, cfg.p_list, cfg.n_samples, cfg.master_seed)
    return [_rows_to_csv(out / "sode1d_sweep.csv", rows, experiments.MOMENT_COLUMNS)]


DISPATCH = {
    ExperimentKind.SWEEP: run_sweep,
    ExperimentKind.SIMULATE: run_simulate,
    ExperimentKind.BOUNDS: run_bounds,
    ExperimentKind.VALIDATE_OU: run_validate_ou,
    ExperimentKind.VALIDATE_GAUSSIAN_BOUNDS: run_validate_gaussian,
    ExperimentKind.VALIDATE_ABSTRACT_BOUND: run_validate_abstract,
    ExperimentKind.SODE1D_SWEEP: run_sode1d,
}


def _error(code: int, kind: str, message: str) -> int:
    print(json.dumps({"error": kind, "message": message, "exit_code": code}), file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spde-lab", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=[k.value for k in ExperimentKind])
    parser.add_argument("--config", required=True, type=Path)
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override master_seed (u64)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
    except OSError as exc:
        return _error(EXIT_IO, "io", str(exc))
    except ConfigError as exc:
        return _error(EXIT_PARSE, "parse", str(exc))
    except ConfigInvariantError as exc:
        return _error(EXIT_INVARIANT, "invariant", str(exc))
    if cfg.kind.value != args.subcommand:
        return _error(EXIT_PARSE, "parse",
                      f"subcommand {args.subcommand} does not match config kind {cfg.kind.value}")
    out = args.out or Path(cfg.output)
    start = time.perf_counter()
    status, code = "ok", 0
    try:
        paths = DISPATCH[cfg.kind](cfg, out)
    except InvariantViolation as exc:
        paths = exc.args[1] if len(exc.args) > 1 else []
        status, code = "invariant_violation", EXIT_INVARIANT
        _error(code, "invariant", exc.args[0])
    except (ConfigInvariantError, ValueError) as exc:
        return _error(EXIT_INVARIANT, "invariant", str(exc))
    except OSError as exc:
        return _error(EXIT_IO, "io", str(exc))
    meta = {
        "config": cfg.to_dict(), "master_seed": cfg.master_seed, "status": status,
        "wall_time_s": time.perf_counter() - start, "workers": worker_count(),
        "outputs": [str(p) for p in paths],
        "versions": {"spde_lab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
    }
    try:
        write_json(out / f"{cfg.kind.value}.meta.json", meta)
    except OSError as exc:
        return _error(EXIT_IO, "io", str(exc))
    return code


if __name__ == "__main__":
    sys.exit(main())
