"""
CLI commands: gen, train, eval, sweep, render, lambda-cv.

Each command takes a resolved ExperimentConfig, writes its outputs under
``output_dir`` next to a dump of that config, and raises a SimPinnError
subclass on failure (the CLI maps it to an exit code).
"""
import csv
import io
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from agno.utils.log import logger

from datagen.formats import (
    FLAG_TEST_POOL,
    Dataset,
    load_checkpoint,
    load_dataset,
    save_checkpoint,
    save_dataset,
)
from datagen.pgm import side_by_side
from datagen.synth import make_labeled, make_observed, make_test
from evaluation.metrics import RunMetrics, evaluate, predict_pool, sample_errors
from evaluation.report import metrics_row
from infrastructure.errors import ContractError, DataError
from infrastructure.observability import observe
from infrastructure.retry_utils import atomic_write_text
from model.mlp import decode
from physics.render import render
from training.cross_validation import cross_validate_lambda
from training.trainer import Trainer
from .experiment import ExperimentConfig, content_hash
from .sweep import Sweep, resolve_noise

DATA_DIR = "data"
RUNS_DIR = "runs"
DATASET_SUFFIX = ".spnd"
CHECKPOINT_NAME = "model.spnc"
METRICS_NAME = "metrics.csv"


def _banner(title: str) -> None:
    print("\n" + "=" * 60)
    print(f"  {title}")
    print("=" * 60)


def _print_metrics(metrics: RunMetrics) -> None:
    print(f"   Eccentricity MSE:   {metrics.mse_e:.6e}")
    print(f"   Inclination MSE:    {metrics.mse_i:.6e}")
    print(f"   Arg. periapsis MSE: {metrics.mse_omega:.6e}")
    print(f"   Reconstruction MSE: {metrics.mse_reconstruction:.6e}")


# =============================================================================
# gen
# =============================================================================

@dataclass
class DatasetPaths:
    labeled: str
    observed: str
    test: str


def dataset_paths(exp: ExperimentConfig, noise_sigma: float) -> DatasetPaths:
    """File names keyed by the content hash of (kind, seed, count, physics, noise)"""
    physics = exp.physics().model_dump(mode="json")
    directory = os.path.join(exp.output_dir, DATA_DIR)

    def path(kind: str, count: int, noisy: bool) -> str:
        key = {"kind": kind, "seed": exp.seed, "count": count, "physics": physics}
        if noisy:
            key["noise_sigma"] = noise_sigma
        return os.path.join(directory, f"{kind}-{content_hash(key)}{DATASET_SUFFIX}")

    return DatasetPaths(
        labeled=path("labeled", exp.n_simulated, noisy=False),
        observed=path("observed", exp.n_observed, noisy=True),
        test=path("test", exp.n_test, noisy=True),
    )


def _is_current(path: str) -> bool:
    if not os.path.exists(path):
        return False
    try:
        load_dataset(path)
    except DataError as e:
        logger.warning(f"[Gen] regenerating {path}: {e.message}")
        return False
    return True


@dataclass
class GenResult:
    paths: DatasetPaths
    noise_sigma: float
    written: List[str] = field(default_factory=list)

    @property
    def up_to_date(self) -> bool:
        return not self.written


@observe(name="simpinn.cmd_gen")
def cmd_gen(exp: ExperimentConfig) -> GenResult:
    """Write labeled / observed / test datasets; existing valid files are kept"""
    physics = exp.physics()
    noise_sigma = resolve_noise(exp)
    paths = dataset_paths(exp, noise_sigma)
    result = GenResult(paths=paths, noise_sigma=noise_sigma)

    builders = {
        paths.labeled: lambda: Dataset(physics.width, physics.height,
                                       labeled=make_labeled(exp.seed, exp.n_simulated, physics)),
        paths.observed: lambda: Dataset(physics.width, physics.height,
                                        observed=make_observed(exp.seed, exp.n_observed, physics, noise_sigma)),
        paths.test: lambda: Dataset(physics.width, physics.height,
                                    observed=make_test(exp.seed, exp.n_test, physics, noise_sigma),
                                    flags=FLAG_TEST_POOL),
    }
    for path, build in builders.items():
        if _is_current(path):
            logger.info(f"[Gen] {path} up to date")
            continue
        save_dataset(path, build())
        result.written.append(path)
        logger.info(f"[Gen] wrote {path}")

    exp.dump(os.path.join(exp.output_dir, DATA_DIR))
    _banner("DATASETS")
    print(f"   noise_sigma: {noise_sigma:.6e}")
    for label, path in (("labeled", paths.labeled), ("observed", paths.observed), ("test", paths.test)):
        print(f"   {label:9s} {path}")
    print("\n   up to date" if result.up_to_date else f"\n   wrote {len(result.written)} file(s)")
    return result


# =============================================================================
# train / eval
# =============================================================================

def _load_checked(path: str, exp: ExperimentConfig) -> Dataset:
    if not os.path.exists(path):
        raise DataError(f"dataset {path} not found; run 'gen' with the same config first")
    data = load_dataset(path)
    if (data.width, data.height) != (exp.width, exp.height):
        raise DataError(
            f"{path}: images are {data.width}x{data.height}, config expects {exp.width}x{exp.height}"
        )
    return data


def run_directory(exp: ExperimentConfig, method: str) -> str:
    name = f"{method}-o{exp.n_observed}-s{exp.n_simulated}-seed{exp.seed}"
    return os.path.join(exp.output_dir, RUNS_DIR, name)


@dataclass
class TrainResult:
    directory: str
    checkpoint: str
    method: str
    metrics: RunMetrics


@observe(name="simpinn.cmd_train")
def cmd_train(
    exp: ExperimentConfig,
    labeled_path: Optional[str] = None,
    observed_path: Optional[str] = None,
    test_path: Optional[str] = None,
) -> TrainResult:
    """
    Train on the generated pools, save the checkpoint (with optimizer state)
    and write the test metrics row.

    Raises:
        DataError: missing dataset or pool sizes / image size differ from the config
    """
    noise_sigma = resolve_noise(exp)
    defaults = dataset_paths(exp, noise_sigma)
    labeled = _load_checked(labeled_path or defaults.labeled, exp).labeled
    observed = _load_checked(observed_path or defaults.observed, exp).observed
    test = _load_checked(test_path or defaults.test, exp).observed
    if len(labeled) != exp.n_simulated or len(observed) != exp.n_observed:
        raise DataError(
            f"datasets hold N_s={len(labeled)}, N_o={len(observed)}; "
            f"config asks for N_s={exp.n_simulated}, N_o={exp.n_observed}"
        )

    config = exp.train_config(noise_sigma=noise_sigma)
    trainer = Trainer(config, labeled, observed)
    params, train_metrics = trainer.run()
    metrics = evaluate(params, test, config.physics).model_copy(
        update={"loss_history": train_metrics.loss_history}
    )

    directory = run_directory(exp, config.method)
    checkpoint = save_checkpoint(os.path.join(directory, CHECKPOINT_NAME), params, trainer.optimizer.state)
    atomic_write_text(
        os.path.join(directory, METRICS_NAME),
        metrics_row(config.method, metrics, n_observed=exp.n_observed,
                    n_simulated=exp.n_simulated, seed=exp.seed),
    )
    exp.dump(directory)

    _banner(f"TRAINED ({config.method})")
    _print_metrics(metrics)
    print(f"\n   checkpoint: {checkpoint}")
    return TrainResult(directory=directory, checkpoint=checkpoint, method=config.method, metrics=metrics)


@observe(name="simpinn.cmd_eval")
def cmd_eval(exp: ExperimentConfig, checkpoint: str, test_path: Optional[str] = None) -> RunMetrics:
    """Evaluate an existing checkpoint on the test pool"""
    params, _ = load_checkpoint(checkpoint, expected_arch=exp.arch())
    path = test_path or dataset_paths(exp, resolve_noise(exp)).test
    test = _load_checked(path, exp).observed
    metrics = evaluate(params, test, exp.physics())

    directory = os.path.dirname(os.path.abspath(checkpoint))
    atomic_write_text(os.path.join(directory, "eval.csv"), metrics_row("eval", metrics, checkpoint=checkpoint))
    _banner("EVALUATION")
    _print_metrics(metrics)
    return metrics


# =============================================================================
# render
# =============================================================================

@observe(name="simpinn.cmd_render")
def cmd_render(exp: ExperimentConfig, checkpoint: str, dataset: str, k: int) -> str:
    """
    Side-by-side (observation | render(ψ(y, θ))) PGMs for the first k samples of
    a dataset's observed pool, plus a per-sample error CSV.

    Returns:
        The gallery directory
    """
    params, _ = load_checkpoint(checkpoint, expected_arch=exp.arch())
    pool = _load_checked(dataset, exp).observed
    if k < 0 or k > len(pool):
        raise ContractError(f"k = {k} but the dataset holds {len(pool)} observations")

    physics = exp.physics()
    samples = pool[:k]
    directory = os.path.join(os.path.dirname(os.path.abspath(checkpoint)), "gallery")
    os.makedirs(directory, exist_ok=True)
    rows: list = []
    if samples:
        predictions = predict_pool(params, samples)
        for j, x_hat in enumerate(decode(predictions)):
            side_by_side(samples[j].y, render(x_hat, physics), os.path.join(directory, f"sample_{j:04d}.pgm"))
        rows = sample_errors(predictions, samples, physics)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["index", "sq_err_e", "sq_err_i", "sq_err_omega", "mse_reconstruction"])
    for r in rows:
        writer.writerow([r.index, repr(r.sq_err_e), repr(r.sq_err_i), repr(r.sq_err_omega),
                         repr(r.mse_reconstruction)])
    atomic_write_text(os.path.join(directory, "errors.csv"), buf.getvalue())
    logger.info(f"[Render] {k} gallery images in {directory}")
    print(f"\n   gallery: {directory} ({k} images)")
    return directory


# =============================================================================
# lambda-cv / sweep
# =============================================================================

@observe(name="simpinn.cmd_lambda_cv")
def cmd_lambda_cv(exp: ExperimentConfig, grid: Optional[Sequence[float]] = None) -> float:
    """Cross-validate λ on the generated pools; prints and writes the table"""
    grid = list(grid) if grid is not None else list(exp.lambda_grid)
    noise_sigma = resolve_noise(exp)
    paths = dataset_paths(exp, noise_sigma)
    labeled = _load_checked(paths.labeled, exp).labeled
    observed = _load_checked(paths.observed, exp).observed
    base = exp.train_config(noise_sigma=noise_sigma)
    best, table = cross_validate_lambda(base, labeled, observed, grid)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["lambda", "mse_e", "mse_i", "mse_omega", "mse_reconstruction", "total_parameter_mse"])
    for row in table:
        m = row.metrics
        writer.writerow([repr(row.lam), repr(m.mse_e), repr(m.mse_i), repr(m.mse_omega),
                         repr(m.mse_reconstruction), repr(m.total_parameter_mse)])
    directory = os.path.join(exp.output_dir, "lambda-cv")
    atomic_write_text(os.path.join(directory, "lambda_cv.csv"), buf.getvalue())
    exp.dump(directory)

    _banner("LAMBDA CROSS-VALIDATION")
    for row in table:
        marker = "  <- best" if row.lam == best else ""
        print(f"   λ = {row.lam:<6g} held-out total parameter MSE = {row.score:.6e}{marker}")
    return best


@observe(name="simpinn.cmd_sweep")
def cmd_sweep(exp: ExperimentConfig, workers: int = 1) -> Dict[str, str]:
    """Run the N_o × N_s sweep and write sweep.csv / sweep.md"""
    sweep = Sweep(exp, workers=workers)
    report = sweep.run()
    failed = [c for c in report.cells if not c.ok]
    _banner("SWEEP COMPLETE")
    print(f"   {len(report.cells)} cells, {len(failed)} failed")
    print(f"   {os.path.join(sweep.directory, 'sweep.md')}")
    return {"directory": sweep.directory, "failed": str(len(failed))}
