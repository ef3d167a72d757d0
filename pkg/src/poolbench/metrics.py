"""Test metrics, learning curves, and benchmark aggregation.

The learning-curve summary statistics are the normalized area under the
curve (trapezoidal mean over cycle index, so a constant curve maps to its
own value) and the final score.  Aggregation follows the equal-weight
convention: per-dataset means over seeds, an unweighted average across
datasets, the improvement over the random baseline, and a rank per
configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IncompleteSuiteError, UndefinedMetricError


@dataclass(frozen=True, eq=False)
class LearningCurve:
    """Test score per cycle, indexed by labeled-pool size."""

    labeled_counts: np.ndarray  # strictly increasing ints
    scores: np.ndarray  # floats in [0, 1]

    def __post_init__(self):
        counts = np.asarray(self.labeled_counts, dtype=np.int64)
        scores = np.asarray(self.scores, dtype=np.float64)
        if counts.shape != scores.shape or counts.ndim != 1:
            raise UndefinedMetricError("curve counts and scores must be 1-D and aligned")
        if counts.size and (np.diff(counts) <= 0).any():
            raise UndefinedMetricError("labeled counts must be strictly increasing")
        object.__setattr__(self, "labeled_counts", counts)
        object.__setattr__(self, "scores", scores)

    def __len__(self) -> int:
        return self.scores.size


@dataclass(frozen=True, eq=False)
class RunSummary:
    """One experiment condensed to its headline numbers."""

    strategy: str
    dataset: str
    seed: int
    config_id: str
    auc: float
    fac: float
    curve: LearningCurve


@dataclass(frozen=True)
class BenchmarkRow:
    strategy: str
    config_id: str
    per_dataset: dict  # name -> (mean, std)
    average: float
    delta: float | None  # vs random; None when deltas were not requested
    rank: int


@dataclass(frozen=True)
class BenchmarkTable:
    datasets: tuple
    rows: tuple = field(default_factory=tuple)


def accuracy(pred_labels, true_labels) -> float:
    """Fraction of correct predictions."""
    pred = np.asarray(pred_labels)
    true = np.asarray(true_labels)
    if pred.shape != true.shape:
        raise UndefinedMetricError(f"shape mismatch {pred.shape} vs {true.shape}")
    if pred.size == 0:
        raise UndefinedMetricError("accuracy is undefined on empty inputs")
    return float(np.mean(pred == true))


def balanced_accuracy(pred_labels, true_labels, c: int) -> float:
    """Mean per-class recall over the classes present in the truth."""
    pred = np.asarray(pred_labels)
    true = np.asarray(true_labels)
    if pred.shape != true.shape:
        raise UndefinedMetricError(f"shape mismatch {pred.shape} vs {true.shape}")
    if pred.size == 0:
        raise UndefinedMetricError("balanced accuracy is undefined on empty inputs")
    if true.min() < 0 or true.max() >= c:
        raise UndefinedMetricError(f"true labels outside [0, {c})")
    recalls = []
    for cls in range(c):
        mask = true == cls
        if mask.any():
            recalls.append(np.mean(pred[mask] == cls))
    return float(np.mean(recalls))


def normalized_auc(curve: LearningCurve) -> float:
    """Trapezoidal mean of the curve over the cycle index.

    With scores s_0..s_T this is (1/T) * sum of (s_{t-1} + s_t) / 2; a
    constant curve returns its value exactly.
    """
    s = curve.scores
    if s.size < 2:
        raise UndefinedMetricError("normalized AUC needs at least one cycle (2 points)")
    mids = 0.5 * (s[:-1] + s[1:])
    if mids.min() == mids.max():  # keep the constant-curve fixed point exact
        return float(mids[0])
    return float(np.mean(mids))


def fac(curve: LearningCurve) -> float:
    """Final score of the curve."""
    if len(curve) == 0:
        raise UndefinedMetricError("fac is undefined on an empty curve")
    return float(curve.scores[-1])


def aggregate(
    summaries,
    metric: str = "auc",
    include_deltas: bool = True,
    baseline: str = "random",
) -> BenchmarkTable:
    """Build the benchmark comparison table from per-run summaries.

    Groups by (strategy, config); within each group computes the
    per-dataset mean and sample standard deviation over seeds, the
    equal-weight average of the per-dataset means, the delta against the
    baseline strategy for the same config, and a dense rank per config
    (descending average, ties alphabetical).
    """
    if metric not in ("auc", "fac"):
        raise UndefinedMetricError(f"unknown aggregation metric {metric!r}")
    cells: dict = {}
    datasets: set = set()
    for s in summaries:
        cells.setdefault((s.strategy, s.config_id), {}).setdefault(s.dataset, []).append(
            getattr(s, metric)
        )
        datasets.add(s.dataset)
    if not cells:
        raise IncompleteSuiteError("no summaries to aggregate")
    datasets = tuple(sorted(datasets))

    stats = {}
    for key, per_ds in sorted(cells.items()):
        means = {}
        for ds, values in per_ds.items():
            arr = np.asarray(sorted(values), dtype=np.float64)
            std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
            means[ds] = (float(arr.mean()), std)
        average = float(np.mean([m for m, _ in means.values()]))
        stats[key] = (means, average)

    configs = sorted({cfg for _, cfg in stats})
    rows = []
    for cfg in configs:
        group = [(strat, c) for (strat, c) in stats if c == cfg]
        averages = {strat: stats[(strat, c)][1] for strat, c in group}
        if include_deltas and baseline not in averages:
            raise IncompleteSuiteError(
                f"deltas requested but no {baseline!r} results for config {cfg}"
            )
        order = sorted(averages, key=lambda strat: (-averages[strat], strat))
        ranks = {strat: i + 1 for i, strat in enumerate(order)}
        for strat in order:
            means, average = stats[(strat, cfg)]
            delta = average - averages[baseline] if include_deltas else None
            rows.append(
                BenchmarkRow(
                    strategy=strat,
                    config_id=cfg,
                    per_dataset=means,
                    average=average,
                    delta=delta,
                    rank=ranks[strat],
                )
            )
    return BenchmarkTable(datasets=datasets, rows=tuple(rows))


def format_table(table: BenchmarkTable, sep: str = "\t") -> str:
    """Render a benchmark table as delimiter-separated text.

    Scores are scaled by 100 and printed with two decimals; absent cells
    (failed or missing runs) are printed as ``--``.
    """
    header = ["strategy", "config", *table.datasets, "Average", "Delta", "Rank"]
    lines = [sep.join(header)]
    for row in table.rows:
        cells = [row.strategy, row.config_id]
        for ds in table.datasets:
            if ds in row.per_dataset:
                mean, std = row.per_dataset[ds]
                cells.append(f"{100 * mean:.2f}±{100 * std:.2f}")
            else:
                cells.append("--")
        cells.append(f"{100 * row.average:.2f}")
        cells.append("--" if row.delta is None else f"{100 * row.delta:+.2f}")
        cells.append(str(row.rank))
        lines.append(sep.join(cells))
    return "\n".join(lines) + "\n"
