"""
N_o × N_s sweep: one independent, seeded training run per (N_o, N_s, seed)
cell, a per-cell JSON manifest for resumption, and the CSV / markdown report.

Cell data comes from pool prefixes: the first n items of a seeded pool are
the same whatever the pool length, so every cell of a seed sees nested data.
"""
import logging
import os
from concurrent.futures import Executor, ProcessPoolExecutor, as_completed
from typing import Dict, List, Optional, Tuple, Type

from agno.utils.log import logger

from datagen.synth import default_noise_sigma, make_labeled, make_observed, make_test
from evaluation.metrics import evaluate
from evaluation.report import CellResult, SweepReport
from infrastructure.errors import SimPinnError
from infrastructure.retry_utils import atomic_write_text
from training.trainer import train
from .experiment import ExperimentConfig, content_hash

CELLS_DIR = "cells"
SWEEP_LOG = "sweep.log"
CSV_NAME = "sweep.csv"
MARKDOWN_NAME = "sweep.md"

Cell = Tuple[int, int, int]  # (n_observed, n_simulated, seed)


def sweep_cells(exp: ExperimentConfig) -> List[Cell]:
    """Every grid cell for every seed, skipping N_o = N_s = 0"""
    return [
        (n_o, n_s, seed)
        for n_s in exp.n_simulated_grid
        for n_o in exp.n_observed_grid
        for seed in exp.seeds
        if not (n_o == 0 and n_s == 0)
    ]


def sweep_directory(exp: ExperimentConfig) -> str:
    """Output directory keyed by everything that affects the results"""
    key = exp.model_dump(mode="json", exclude={"output_dir", "log_every", "gallery_k", "lambda_grid"})
    return os.path.join(exp.output_dir, f"sweep-{content_hash(key)}")


def cell_path(directory: str, cell: Cell) -> str:
    n_o, n_s, seed = cell
    return os.path.join(directory, CELLS_DIR, f"o{n_o}_s{n_s}_seed{seed}.json")


def resolve_noise(exp: ExperimentConfig) -> float:
    if exp.noise_sigma is not None:
        return exp.noise_sigma
    return default_noise_sigma(exp.physics())


# =============================================================================
# One cell
# =============================================================================

def run_cell(exp: ExperimentConfig, cell: Cell, noise_sigma: float) -> CellResult:
    """Generate the cell's pools, train, evaluate on the seed's test pool"""
    n_o, n_s, seed = cell
    method = "supervised" if exp.objective == "supervised" else ("pinn" if n_s == 0 else "simpinn")
    try:
        physics = exp.physics()
        config = exp.train_config(n_observed=n_o, n_simulated=n_s, seed=seed, noise_sigma=noise_sigma)
        labeled = make_labeled(seed, n_s, physics)
        observed = make_observed(seed, n_o, physics, noise_sigma)
        test = make_test(seed, exp.n_test, physics, noise_sigma)
        params, train_metrics = train(config, labeled, observed)
        metrics = evaluate(params, test, physics)
        metrics = metrics.model_copy(update={"loss_history": train_metrics.loss_history})
        return CellResult(n_observed=n_o, n_simulated=n_s, seed=seed, method=config.method, metrics=metrics)
    except SimPinnError as e:
        return CellResult(n_observed=n_o, n_simulated=n_s, seed=seed, method=method,
                          status="failed", error=e.one_line())
    except Exception as e:
        return CellResult(n_observed=n_o, n_simulated=n_s, seed=seed, method=method,
                          status="failed", error=f"error[INTERNAL]: {type(e).__name__}: {e}")


def _load_completed(path: str) -> Optional[CellResult]:
    if not os.path.exists(path):
        return None
    try:
        with open(path, "r", encoding="utf-8") as f:
            result = CellResult.model_validate_json(f.read())
    except (OSError, ValueError) as e:
        logger.warning(f"[Sweep] ignoring unreadable manifest entry {path}: {e}")
        return None
    return result if result.ok else None


# =============================================================================
# Sweep
# =============================================================================

class Sweep:
    """
    Runs (or resumes) a sweep and writes its report.

    Usage:
        report = Sweep(exp, workers=4).run()
    """

    executor_class: Type[Executor] = ProcessPoolExecutor

    def __init__(self, exp: ExperimentConfig, workers: int = 1):
        exp.require_grids()
        self.exp = exp
        self.workers = max(1, workers)
        self.directory = sweep_directory(exp)
        self._log_handler: Optional[logging.Handler] = None

    def _attach_log(self) -> None:
        os.makedirs(self.directory, exist_ok=True)
        handler = logging.FileHandler(os.path.join(self.directory, SWEEP_LOG), encoding="utf-8")
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
        logger.addHandler(handler)
        self._log_handler = handler

    def _detach_log(self) -> None:
        if self._log_handler is not None:
            logger.removeHandler(self._log_handler)
            self._log_handler.close()
            self._log_handler = None

    def _record(self, result: CellResult) -> None:
        cell = (result.n_observed, result.n_simulated, result.seed)
        atomic_write_text(cell_path(self.directory, cell), result.model_dump_json(indent=2) + "\n")
        if result.ok:
            logger.info(
                f"[Sweep] cell N_o={cell[0]} N_s={cell[1]} seed={cell[2]} done: "
                f"param={result.metrics.total_parameter_mse:.4e} "
                f"recon={result.metrics.mse_reconstruction:.4e}"
            )
        else:
            logger.error(f"[Sweep] cell N_o={cell[0]} N_s={cell[1]} seed={cell[2]} failed: {result.error}")

    def pending(self) -> Tuple[Dict[Cell, CellResult], List[Cell]]:
        """(completed results from the manifest, cells still to run)"""
        done: Dict[Cell, CellResult] = {}
        todo: List[Cell] = []
        for cell in sweep_cells(self.exp):
            result = _load_completed(cell_path(self.directory, cell))
            if result is None:
                todo.append(cell)
            else:
                done[cell] = result
        return done, todo

    def run(self) -> SweepReport:
        self._attach_log()
        try:
            done, todo = self.pending()
            if done:
                logger.warning(f"[Sweep] resuming: {len(done)} cells already complete, {len(todo)} to run")
            logger.info(f"[Sweep] {len(todo)} cells to run in {self.directory} (workers={self.workers})")
            self.exp.dump(self.directory)

            noise_sigma = resolve_noise(self.exp) if todo else 0.0
            results = dict(done)
            if self.workers == 1 or len(todo) <= 1:
                for cell in todo:
                    results[cell] = run_cell(self.exp, cell, noise_sigma)
                    self._record(results[cell])
            else:
                with self.executor_class(max_workers=self.workers) as pool:
                    futures = {pool.submit(run_cell, self.exp, cell, noise_sigma): cell for cell in todo}
                    # completion order: an interrupt must not lose finished cells
                    for future in as_completed(futures):
                        cell = futures[future]
                        results[cell] = future.result()
                        self._record(results[cell])

            report = SweepReport(
                grid_o=list(self.exp.n_observed_grid),
                grid_s=list(self.exp.n_simulated_grid),
                seeds=list(self.exp.seeds),
                cells=[results[c] for c in sweep_cells(self.exp)],
            )
            self.write(report)
            return report
        finally:
            self._detach_log()

    def write(self, report: SweepReport) -> Tuple[str, str]:
        csv_path = atomic_write_text(os.path.join(self.directory, CSV_NAME), report.to_csv())
        md_path = atomic_write_text(os.path.join(self.directory, MARKDOWN_NAME), report.to_markdown())
        logger.info(f"[Sweep] report written: {csv_path}, {md_path}")
        return csv_path, md_path
