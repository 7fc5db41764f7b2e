"""
Desk-scale trend checks for the N_o × N_s comparison

These train several 32×32 runs to convergence and take a long time, so they
only run with SIMPINN_RUN_SLOW=1. Cells run through the sweep's process pool
(SIMPINN_WORKERS) and each cell renders its batches on SIMPINN_RENDER_THREADS
threads; a laptop run wants both set to the core count.

- training loss goes down at desk scale
- with N_o = 2000, adding N_s = 2000 simulated pairs beats the PINN baseline
  on parameter error and at least halves the reconstruction error
- with N_o = 0, more simulated pairs (2000 vs 500) give lower parameter error

Run with: SIMPINN_RUN_SLOW=1 SIMPINN_WORKERS=6 pytest tests/test_trends.py -v
"""
import os
import statistics
import sys
from typing import Dict, Tuple

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import pytest

from bench.experiment import build_experiment
from bench.sweep import Sweep
from config import config

pytestmark = pytest.mark.skipif(
    not config.runtime.run_slow_tests,
    reason="SIMPINN_RUN_SLOW not set"
)


def desk_sweep(tmp_path, **overrides) -> Dict[Tuple[int, int], list]:
    """Run one desk-profile sweep; metrics grouped by (N_o, N_s) across seeds"""
    values = {"output_dir": str(tmp_path)}
    values.update(overrides)
    report = Sweep(build_experiment("desk", None, values), workers=config.runtime.workers).run()
    grouped: Dict[Tuple[int, int], list] = {}
    for cell in report.cells:
        assert cell.ok, cell.error
        grouped.setdefault((cell.n_observed, cell.n_simulated), []).append(cell.metrics)
    return grouped


def median(runs: list, key: str) -> float:
    return statistics.median(getattr(m, key) for m in runs)


class TestDeskTrends:

    def test_loss_decreases(self, tmp_path):
        grouped = desk_sweep(tmp_path, epochs="30", seeds="0",
                             n_observed_grid="500", n_simulated_grid="500")
        history = grouped[(500, 500)][0].loss_history
        assert len(history) == 30
        assert history[-1] < 0.5 * history[0]
        print(f"✅ Loss {history[0]:.4e} -> {history[-1]:.4e}")

    def test_simulated_pairs_beat_pinn(self, tmp_path):
        grouped = desk_sweep(tmp_path, n_observed_grid="2000", n_simulated_grid="0, 2000")
        pinn = grouped[(2000, 0)]
        sim = grouped[(2000, 2000)]
        assert len(pinn) == len(sim) == 3

        assert median(sim, "total_parameter_mse") < median(pinn, "total_parameter_mse")
        assert median(sim, "mse_reconstruction") <= 0.5 * median(pinn, "mse_reconstruction")
        print(f"✅ N_o=2000: param {median(pinn, 'total_parameter_mse'):.4e} -> "
              f"{median(sim, 'total_parameter_mse'):.4e}, recon {median(pinn, 'mse_reconstruction'):.4e} -> "
              f"{median(sim, 'mse_reconstruction'):.4e}")

    def test_more_simulated_pairs_help(self, tmp_path):
        grouped = desk_sweep(tmp_path, n_observed_grid="0", n_simulated_grid="500, 2000")
        small = median(grouped[(0, 500)], "total_parameter_mse")
        large = median(grouped[(0, 2000)], "total_parameter_mse")
        assert large < small
        print(f"✅ N_o=0: N_s=500 {small:.4e} -> N_s=2000 {large:.4e}")
