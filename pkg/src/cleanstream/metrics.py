"""Per-batch reports, run results, and cross-repetition aggregation.

The two stream-selection metrics are cumulative sums over arriving batches
(the initial batch never counts): ``active_fraction`` adds the selected
share of each batch, and ``active_truth_fraction`` adds the share whose
label, after any replacement or oracle correction, matches ground truth.
The first can only over-count the second, never the reverse.
"""

from __future__ import annotations

from dataclasses import dataclass, fields


@dataclass
class BatchReport:
    """What one arrival produced. Field order is the batches.csv column order."""

    batch_index: int
    drawn_noise_level: float
    selected_count: int
    selected_true_clean_count: int
    oracle_queries: int
    inactive_total: int
    test_accuracy: float = float("nan")
    cumulative_A: float = float("nan")
    cumulative_A_truth: float = float("nan")


CSV_COLUMNS = tuple(f.name for f in fields(BatchReport))


def active_fraction(reports: list[BatchReport], batch_size: int) -> float:
    """Sum over arrivals of selected_count / batch size."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    total = 0.0
    for report in reports:
        total += report.selected_count / batch_size
    return total


def active_truth_fraction(reports: list[BatchReport], batch_size: int) -> float:
    """Sum over arrivals of selected-and-correctly-labelled count / batch size."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    total = 0.0
    for report in reports:
        total += report.selected_true_clean_count / batch_size
    return total


def write_reports_csv(reports: list[BatchReport], path) -> None:
    """Write per-batch rows with full-precision floats, one line per arrival."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for report in reports:
            cells = []
            for column in CSV_COLUMNS:
                value = getattr(report, column)
                cells.append(repr(float(value)) if isinstance(value, float) else str(value))
            fh.write(",".join(cells) + "\n")


@dataclass
class RunResult:
    """One repetition of one (variant, noise) configuration."""

    variant: str
    noise_mean: float
    repetition: int
    seed: int
    initial_accuracy: float
    reports: list[BatchReport]
    oracle_queries_total: int = 0

    @property
    def final_accuracy(self) -> float:
        if not self.reports:
            return self.initial_accuracy
        return self.reports[-1].test_accuracy

    @property
    def final_A(self) -> float:
        return self.reports[-1].cumulative_A if self.reports else 0.0

    @property
    def final_A_truth(self) -> float:
        return self.reports[-1].cumulative_A_truth if self.reports else 0.0


@dataclass
class RunSummary:
    """Mean behaviour of one (variant, noise) configuration across repetitions."""

    variant: str
    noise_mean: float
    repetitions: int
    initial_accuracy: float
    final_accuracy: float
    final_accuracy_variance: float
    accuracy_series: list[float]
    accuracy_variance_series: list[float]
    per_run_final_accuracies: list[float]
    final_A: float
    final_A_truth: float
    mean_oracle_queries: float
    improvement: float | None = None
    improvement_room: float | None = None


def _mean(values: list[float]) -> float:
    return sum(values) / len(values)


def _variance(values: list[float]) -> float:
    m = _mean(values)
    return sum((v - m) ** 2 for v in values) / len(values)


def aggregate_runs(
    results: list[RunResult], repetitions: int | None = None
) -> RunSummary:
    """Average repetitions of a single configuration into one summary.

    All results must share variant, noise level, and arrival count; seeds are
    expected to differ per repetition.
    """
    if not results:
        raise ValueError("need at least one run result")
    if repetitions is not None and len(results) != repetitions:
        raise ValueError(f"expected {repetitions} results, got {len(results)}")
    first = results[0]
    for r in results[1:]:
        if (
            r.variant != first.variant
            or r.noise_mean != first.noise_mean
            or len(r.reports) != len(first.reports)
        ):
            raise ValueError(
                "run results mix configurations: "
                f"({r.variant}, {r.noise_mean}, {len(r.reports)} batches) vs "
                f"({first.variant}, {first.noise_mean}, {len(first.reports)} batches)"
            )
    finals = [r.final_accuracy for r in results]
    series = [
        _mean([r.reports[i].test_accuracy for r in results])
        for i in range(len(first.reports))
    ]
    series_var = [
        _variance([r.reports[i].test_accuracy for r in results])
        for i in range(len(first.reports))
    ]
    return RunSummary(
        variant=first.variant,
        noise_mean=first.noise_mean,
        repetitions=len(results),
        initial_accuracy=_mean([r.initial_accuracy for r in results]),
        final_accuracy=_mean(finals),
        final_accuracy_variance=_variance(finals),
        accuracy_series=series,
        accuracy_variance_series=series_var,
        per_run_final_accuracies=finals,
        final_A=_mean([r.final_A for r in results]),
        final_A_truth=_mean([r.final_A_truth for r in results]),
        mean_oracle_queries=_mean([float(r.oracle_queries_total) for r in results]),
    )


def attach_improvements(
    summary: RunSummary, no_sel: RunSummary, full_clean: RunSummary
) -> RunSummary:
    """Fill the improvement fields from the paired baselines at the same noise."""
    if no_sel.noise_mean != summary.noise_mean or full_clean.noise_mean != summary.noise_mean:
        raise ValueError("baseline summaries must share the noise level")
    summary.improvement = summary.final_accuracy - no_sel.final_accuracy
    summary.improvement_room = full_clean.final_accuracy - no_sel.final_accuracy
    return summary
