"""Experiment runner: sweeps, oracle scans, reconstruction dumps.

Subcommands:

* ``buresq sweep <config.json>`` -- train over a noise grid, write one CSV
  row per grid point (and a JSONL trace file when the config asks for it).
* ``buresq oracle <preset> --grid a:b:step`` -- classical quantities only.
* ``buresq reconstruct <config.json> --p <value>`` -- train one point and
  dump the reconstructed separable ensemble.

Grid points are dispatched to a process pool (``--threads``); point ``i``
trains with seed ``base_seed + i``, so results do not depend on worker
scheduling and reruns are byte-identical apart from wall-time columns.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ansatz import AnsatzConfig
from .oracle import (
    Bipartition,
    concurrence,
    fidelity_exact,
    negativity,
    werner_bures_reference,
)
from .purify import ResourceSpec, build_plan
from .reconstruct import dump_ensemble, reconstruct_free_state
from .simulator import DensityMatrix, SimulationError
from .states import load_density_matrix, preset_state
from .train import TrainConfig, TrainReport, train_resource

SWEEP_COLUMNS = (
    "p",
    "mean_R_half",
    "min_R_half",
    "max_R_half",
    "oracle_R_half",
    "n_failed_restarts",
    "wall_time",
)

ORACLE_COLUMNS = {
    "werner": ("p", "concurrence", "bures_r_half", "neg_1_2"),
    "cluster": ("p", "neg_1_23", "neg_2_13", "neg_3_12"),
    "smolin": (
        "p",
        "neg_1_234",
        "neg_2_134",
        "neg_3_124",
        "neg_4_123",
        "neg_12_34",
        "neg_13_24",
        "neg_14_23",
    ),
}

# analytic R/2 references, per preset (only the Werner family has one)
ORACLE_R_HALF = {"werner": werner_bures_reference}


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    state: str | dict
    grid: tuple[float, ...]
    resource: ResourceSpec
    ansatz: AnsatzConfig
    train: TrainConfig
    emit_trace: bool = False

    def __post_init__(self):
        if isinstance(self.state, str) and self.state not in ("werner", "cluster", "smolin"):
            raise SimulationError(f"unknown state preset {self.state!r}")
        if any(not 0.0 <= p <= 1.0 for p in self.grid):
            raise SimulationError("grid values must lie in [0, 1]")


def load_config(path: str | Path) -> ExperimentConfig:
    with open(path) as fh:
        raw = json.load(fh)
    try:
        return ExperimentConfig(
            name=raw.get("name", Path(path).stem),
            state=raw["state"],
            grid=tuple(raw.get("grid", ())),
            resource=ResourceSpec(**raw["resource"]),
            ansatz=AnsatzConfig(**raw["ansatz"]),
            train=TrainConfig(**raw["train"]),
            emit_trace=bool(raw.get("emit_trace", False)),
        )
    except (KeyError, TypeError) as exc:
        raise SimulationError(f"malformed experiment config {path}: {exc}") from exc


def _with_overrides(config: ExperimentConfig, seed: int | None, fast: bool) -> ExperimentConfig:
    train = config.train
    if seed is not None:
        train = dataclasses.replace(train, seed=seed)
    if fast:
        train = dataclasses.replace(
            train,
            epochs=max(1, train.epochs // 10),
            restarts=max(1, train.restarts // 10),
        )
    return dataclasses.replace(config, train=train)


def _state_for_point(config: ExperimentConfig, p: float | None) -> DensityMatrix:
    if isinstance(config.state, str):
        return preset_state(config.state, p)
    return load_density_matrix(config.state["file"])


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _run_point(
    config: ExperimentConfig, index: int, p: float | None, n_jobs: int = 1
) -> tuple[int, dict]:
    rho = _state_for_point(config, p)
    cfg = dataclasses.replace(config.train, seed=config.train.seed + index)
    report = train_resource(rho, config.resource, config.ansatz, cfg, n_jobs=n_jobs)
    oracle_fn = ORACLE_R_HALF.get(config.state) if isinstance(config.state, str) else None
    return index, {
        "p": p,
        "report": report,
        "oracle": oracle_fn(p) if oracle_fn else None,
    }


def _sweep_row(point: dict) -> str:
    report: TrainReport = point["report"]
    stats = report.restart_stats
    cells = [
        "" if point["p"] is None else _fmt(point["p"]),
        _fmt(stats.mean),
        _fmt(stats.min),
        _fmt(stats.max),
        "" if point["oracle"] is None else _fmt(point["oracle"]),
        str(report.n_failed),
        format(report.wall_time, ".3f"),
    ]
    return ",".join(cells)


def _trace_lines(point: dict) -> list[str]:
    lines = []
    for r, trace in enumerate(point["report"].traces):
        cleaned = [float(x) if np.isfinite(x) else None for x in trace]
        lines.append(
            json.dumps(
                {"p": point["p"], "restart": r, "r_half": cleaned},
                separators=(",", ":"),
            )
        )
    return lines


def run_sweep(config: ExperimentConfig, out_dir: str | Path, threads: int = 1) -> Path:
    """Train every grid point and write the results CSV (plus optional JSONL)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    points: list[tuple[int, float | None]]
    if isinstance(config.state, str):
        points = list(enumerate(config.grid))
    else:
        points = [(0, None)]

    results: dict[int, dict] = {}
    if threads > 1 and len(points) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_run_point, config, i, p) for i, p in points]
            for fut in concurrent.futures.as_completed(futures):
                index, payload = fut.result()
                results[index] = payload
    else:
        # single point (or single worker): spend the budget on restarts
        for i, p in points:
            index, payload = _run_point(config, i, p, n_jobs=threads)
            results[index] = payload

    csv_path = out_dir / f"{config.name}.csv"
    with open(csv_path, "w") as fh:
        fh.write(",".join(SWEEP_COLUMNS) + "\n")
        for i, _ in points:
            fh.write(_sweep_row(results[i]) + "\n")
    if config.emit_trace:
        with open(out_dir / f"{config.name}_trace.jsonl", "w") as fh:
            for i, _ in points:
                for line in _trace_lines(results[i]):
                    fh.write(line + "\n")
    return csv_path


def oracle_scan_rows(preset: str, grid) -> list[list[float]]:
    if preset not in ORACLE_COLUMNS:
        raise SimulationError(f"unknown oracle preset {preset!r}")
    rows = []
    for p in grid:
        rho = preset_state(preset, p)
        if preset == "werner":
            row = [p, concurrence(rho), werner_bures_reference(p),
                   negativity(rho, Bipartition.of([0], 2))]
        elif preset == "cluster":
            row = [p] + [negativity(rho, Bipartition.of([q], 3)) for q in range(3)]
        else:
            cuts = [[0], [1], [2], [3], [0, 1], [0, 2], [0, 3]]
            row = [p] + [negativity(rho, Bipartition.of(c, 4)) for c in cuts]
        rows.append(row)
    return rows


def run_oracle_scan(preset: str, grid, out_dir: str | Path) -> Path:
    """Classical quantities per grid point; no training."""
    if preset not in ORACLE_COLUMNS:
        raise SimulationError(f"unknown oracle preset {preset!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"oracle_{preset}.csv"
    with open(path, "w") as fh:
        fh.write(",".join(ORACLE_COLUMNS[preset]) + "\n")
        for row in oracle_scan_rows(preset, grid):
            fh.write(",".join(_fmt(x) for x in row) + "\n")
    return path


def run_reconstruct(
    config: ExperimentConfig, p: float, out_dir: str | Path, threads: int = 1
) -> Path:
    """Train one grid point, reconstruct the closest separable state, dump it."""
    if config.resource.family != "separable":
        raise SimulationError("reconstruction handles the separable family")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rho = _state_for_point(config, p)
    report = train_resource(
        rho, config.resource, config.ansatz, config.train, n_jobs=threads
    )
    plan = build_plan(config.resource, config.ansatz)
    ensemble, sigma = reconstruct_free_state(plan, report.best_params)
    path = out_dir / f"{config.name}_p{_fmt(p)}_ensemble.json"
    dump_ensemble(ensemble, path)
    print(
        f"p={_fmt(p)}: best R/2 = {_fmt(report.best_cost)}, "
        f"F(target, reconstructed) = {_fmt(fidelity_exact(rho, sigma))}, "
        f"{len(ensemble)} ensemble terms -> {path}"
    )
    return path


def parse_grid(text: str) -> list[float]:
    """``a:b:step`` inclusive of both ends (within float rounding)."""
    try:
        a, b, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise SimulationError(f"bad grid spec {text!r}; expected a:b:step") from None
    if step <= 0 or b < a:
        raise SimulationError("grid needs step > 0 and b >= a")
    count = int(round((b - a) / step)) + 1
    return [round(a + i * step, 10) for i in range(count)]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="buresq", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="train over a noise grid")
    sweep.add_argument("config", type=Path)
    sweep.add_argument("--seed", type=int, default=None)
    sweep.add_argument("--fast", action="store_true", help="scale epochs/restarts down 10x")
    sweep.add_argument("--threads", type=int, default=1)
    sweep.add_argument("--out", type=Path, default=Path("results"))

    oracle = sub.add_parser("oracle", help="classical oracle scan")
    oracle.add_argument("preset", choices=sorted(ORACLE_COLUMNS))
    oracle.add_argument("--grid", required=True, help="a:b:step")
    oracle.add_argument("--out", type=Path, default=Path("results"))

    rec = sub.add_parser("reconstruct", help="reconstruct the closest separable state")
    rec.add_argument("config", type=Path)
    rec.add_argument("--p", type=float, required=True)
    rec.add_argument("--seed", type=int, default=None)
    rec.add_argument("--fast", action="store_true")
    rec.add_argument("--threads", type=int, default=1)
    rec.add_argument("--out", type=Path, default=Path("results"))

    args = parser.parse_args(argv)
    try:
        if args.command == "sweep":
            config = _with_overrides(load_config(args.config), args.seed, args.fast)
            path = run_sweep(config, args.out, threads=args.threads)
            print(f"wrote {path}")
        elif args.command == "oracle":
            path = run_oracle_scan(args.preset, parse_grid(args.grid), args.out)
            print(f"wrote {path}")
        else:
            config = _with_overrides(load_config(args.config), args.seed, args.fast)
            run_reconstruct(config, args.p, args.out, threads=args.threads)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
