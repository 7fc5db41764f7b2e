"""
Sweep report: one CSV row per (N_o, N_s, seed) cell and, per metric, a
markdown table with N_o as columns and N_s as rows holding the median over
seeds. The per-metric argmin cell is bolded; the (0, 0) cell reads "-".
"""
import csv
import io
import math
import statistics
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from pydantic import BaseModel

from .metrics import RunMetrics

METRICS = ["mse_e", "mse_i", "mse_omega", "mse_reconstruction"]
METRIC_TITLES = {
    "mse_e": "Eccentricity",
    "mse_i": "Inclination",
    "mse_omega": "Argument of periapsis",
    "mse_reconstruction": "Reconstruction",
}
CSV_COLUMNS = [
    "n_observed", "n_simulated", "seed", "method", "status",
    "mse_e", "mse_i", "mse_omega", "mse_reconstruction",
    "total_parameter_mse", "final_loss", "error",
]


class CellResult(BaseModel):
    """Outcome of one sweep cell"""
    n_observed: int
    n_simulated: int
    seed: int
    method: str
    status: str = "ok"            # ok | failed
    error: str = ""
    metrics: Optional[RunMetrics] = None

    @property
    def ok(self) -> bool:
        return self.status == "ok" and self.metrics is not None

    def value(self, metric: str) -> float:
        if not self.ok:
            return math.nan
        if metric == "total_parameter_mse":
            return self.metrics.total_parameter_mse
        return float(getattr(self.metrics, metric))


def _fmt(value: float) -> str:
    return "" if math.isnan(value) else repr(float(value))


def safe_median(values: Iterable[float]) -> float:
    vals = [v for v in values if not math.isnan(v)]
    return statistics.median(vals) if vals else math.nan


# =============================================================================
# CSV
# =============================================================================

def csv_text(cells: Sequence[CellResult]) -> str:
    """RFC-4180 CSV (CRLF line ends, minimal quoting), cells in given order"""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(CSV_COLUMNS)
    for c in cells:
        history = c.metrics.loss_history if c.ok else []
        writer.writerow([
            c.n_observed, c.n_simulated, c.seed, c.method, c.status,
            *(_fmt(c.value(m)) for m in METRICS),
            _fmt(c.value("total_parameter_mse")),
            _fmt(history[-1]) if history else "",
            c.error,
        ])
    return buf.getvalue()


def metrics_row(method: str, metrics: RunMetrics, **extra) -> str:
    """Single-run metrics as a two-line CSV (header + row)"""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    keys = [*extra.keys(), "method", *METRICS, "total_parameter_mse", "n_samples"]
    writer.writerow(keys)
    writer.writerow([
        *extra.values(), method,
        *(_fmt(getattr(metrics, m)) for m in METRICS),
        _fmt(metrics.total_parameter_mse), metrics.n_samples,
    ])
    return buf.getvalue()


# =============================================================================
# Aggregation
# =============================================================================

def median_grid(
    cells: Sequence[CellResult],
    metric: str,
    grid_o: Sequence[int],
    grid_s: Sequence[int],
) -> Dict[Tuple[int, int], float]:
    """(N_s, N_o) -> median over successful seeds (NaN when none succeeded)"""
    out = {}
    for n_s in grid_s:
        for n_o in grid_o:
            values = [c.value(metric) for c in cells if c.n_observed == n_o and c.n_simulated == n_s]
            out[(n_s, n_o)] = safe_median(values)
    return out


def argmin_cell(grid: Dict[Tuple[int, int], float]) -> Optional[Tuple[int, int]]:
    finite = [(v, key) for key, v in grid.items() if not math.isnan(v)]
    if not finite:
        return None
    return min(finite)[1]


def markdown_table(
    cells: Sequence[CellResult],
    metric: str,
    grid_o: Sequence[int],
    grid_s: Sequence[int],
) -> str:
    grid = median_grid(cells, metric, grid_o, grid_s)
    best = argmin_cell(grid)
    lines = [
        f"### {METRIC_TITLES.get(metric, metric)} (`{metric}`, median over seeds)",
        "",
        "| N_s \\ N_o | " + " | ".join(str(o) for o in grid_o) + " |",
        "|---|" + "---|" * len(grid_o),
    ]
    for n_s in grid_s:
        row = []
        for n_o in grid_o:
            value = grid[(n_s, n_o)]
            if n_s == 0 and n_o == 0:
                row.append("-")
            elif math.isnan(value):
                row.append("failed")
            elif (n_s, n_o) == best:
                row.append(f"**{value:.4e}**")
            else:
                row.append(f"{value:.4e}")
        lines.append(f"| {n_s} | " + " | ".join(row) + " |")
    if best is not None:
        lines.extend(["", f"Best cell: N_o = {best[1]}, N_s = {best[0]}"])
    return "\n".join(lines) + "\n"


def improvement_summary(
    cells: Sequence[CellResult],
    grid_o: Sequence[int],
    grid_s: Sequence[int],
) -> str:
    """PINN (N_s = 0) error divided by the best N_s > 0 error, per N_o column"""
    lines = [
        "### Improvement over PINN (N_s = 0)",
        "",
        "| N_o | PINN total param | best SimPINN total param | ratio | PINN recon | best SimPINN recon | ratio |",
        "|---|---|---|---|---|---|---|",
    ]
    param = median_grid(cells, "total_parameter_mse", grid_o, grid_s)
    recon = median_grid(cells, "mse_reconstruction", grid_o, grid_s)
    for n_o in grid_o:
        if n_o == 0:
            continue
        entries = []
        for grid in (param, recon):
            base = grid.get((0, n_o), math.nan)
            sim = [grid[(n_s, n_o)] for n_s in grid_s if n_s > 0 and not math.isnan(grid[(n_s, n_o)])]
            best = min(sim) if sim else math.nan
            ratio = base / best if best > 0 and not math.isnan(base) else math.nan
            entries.extend([_cell(base), _cell(best), "-" if math.isnan(ratio) else f"{ratio:.2f}x"])
        lines.append(f"| {n_o} | " + " | ".join(entries) + " |")
    return "\n".join(lines) + "\n"


def _cell(value: float) -> str:
    return "-" if math.isnan(value) else f"{value:.4e}"


def markdown_report(
    cells: Sequence[CellResult],
    grid_o: Sequence[int],
    grid_s: Sequence[int],
    title: str = "SimPINNs sweep",
) -> str:
    failed = [c for c in cells if not c.ok]
    parts = [f"# {title}", "", f"{len(cells)} cells, {len(failed)} failed.", ""]
    for metric in METRICS:
        parts.append(markdown_table(cells, metric, grid_o, grid_s))
    parts.append(improvement_summary(cells, grid_o, grid_s))
    if failed:
        parts.append("### Failed cells\n")
        for c in failed:
            parts.append(f"- N_o = {c.n_observed}, N_s = {c.n_simulated}, seed = {c.seed}: {c.error}")
        parts.append("")
    return "\n".join(parts)


class SweepReport(BaseModel):
    """All cells of a sweep plus the grid they were laid out on"""
    grid_o: List[int]
    grid_s: List[int]
    seeds: List[int]
    cells: List[CellResult]

    def ordered(self) -> List[CellResult]:
        order = {(s, o, seed): k for k, (s, o, seed) in enumerate(
            (s, o, seed) for s in self.grid_s for o in self.grid_o for seed in self.seeds
        )}
        return sorted(self.cells, key=lambda c: order.get((c.n_simulated, c.n_observed, c.seed), len(order)))

    def to_csv(self) -> str:
        return csv_text(self.ordered())

    def to_markdown(self) -> str:
        return markdown_report(self.ordered(), self.grid_o, self.grid_s)
