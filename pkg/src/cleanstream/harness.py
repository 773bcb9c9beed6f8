"""Experiment harness: config files, run loops, and result files.

A config file is flat ``key = value`` lines (``#`` starts a comment). The
same mapping drives single runs and matrix runs; the CLI layers
``--key=value`` overrides on top before anything is parsed into typed
config objects.

Output layout, rooted at ``run.output_dir``::

    <out>/<variant>/<noise>/<repetition>/batches.csv
    <out>/summary.txt          one line per run plus aggregates
    <out>/comparison.txt       matrix mode only

Reruns with identical inputs rewrite byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import baselines, frameworks
from .baselines import BASELINE_KINDS, BaselineState
from .core import (
    Batch,
    Dataset,
    LabeledInstance,
    StreamConfig,
    fit_feature_ranges,
    generate_synthetic,
    load_csv,
    scale_features,
    split_stream,
)
from .frameworks import VARIANTS, FrameworkState, GroundTruthOracle, OracleBudget
from .metrics import (
    RunResult,
    RunSummary,
    active_fraction,
    active_truth_fraction,
    aggregate_runs,
    attach_improvements,
    write_reports_csv,
)
from .models import ClassifierSpec, evaluate_accuracy
from .noise import NoiseSpec, draw_batch_noise_level, inject_symmetric_noise

ALL_VARIANTS = VARIANTS + BASELINE_KINDS


class ConfigError(ValueError):
    """A config file or override is malformed or names an unknown key."""


class RepetitionError(RuntimeError):
    """One repetition failed; carries where, so other repetitions can go on."""

    def __init__(self, repetition: int, batch_index: int, stage: str, cause: Exception):
        super().__init__(
            f"repetition {repetition}, batch {batch_index}, stage {stage}: {cause}"
        )
        self.repetition = repetition
        self.batch_index = batch_index
        self.stage = stage
        self.cause = cause


@dataclass
class ExperimentConfig:
    """Fully typed description of one (variant, noise) experiment."""

    stream: StreamConfig
    noise: NoiseSpec
    variant: str
    classifier_spec: ClassifierSpec
    label_spec: ClassifierSpec | None
    budget: OracleBudget
    dataset_source: str = "synthetic"
    dataset_path: str | None = None
    separation: float = 3.0
    scale: bool = False
    initial_clean: bool = False
    repetitions: int = 1
    output_dir: str | None = None


# ---------------------------------------------------------------------------
# config parsing

KNOWN_KEYS = frozenset(
    [
        "dataset.source",
        "dataset.path",
        "dataset.separation",
        "dataset.scale",
        "initial.clean",
        "stream.num_classes",
        "stream.num_features",
        "stream.initial_batch_size",
        "stream.batch_size",
        "stream.num_batches",
        "stream.test_size",
        "stream.seed",
        "stream.stratify",
        "noise.mean",
        "noise.std_mode",
        "noise.std",
        "noise.seed",
        "framework.variant",
        "oracle.limit_mode",
        "oracle.fraction",
        "run.repetitions",
        "run.output_dir",
        "matrix.variants",
        "matrix.noise_levels",
    ]
    + [
        f"{role}.{option}"
        for role in ("label_model", "classifier")
        for option in (
            "kind",
            "knn_k",
            "mlp_hidden",
            "mlp_epochs",
            "mlp_learning_rate",
            "mlp_batch_size",
            "seed",
        )
    ]
)


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse ``key = value`` lines into a string mapping. Later keys win."""
    mapping: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}: line {lineno}: expected 'key = value'")
        mapping[key] = value
    return mapping


def load_config_file(path) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=str(path))


def apply_overrides(mapping: dict[str, str], overrides: dict[str, str]) -> dict[str, str]:
    merged = dict(mapping)
    merged.update(overrides)
    return merged


def _get(mapping, key, default):
    return mapping.get(key, default)


def _as_int(mapping, key, default):
    raw = mapping.get(key)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None


def _as_float(mapping, key, default):
    raw = mapping.get(key)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def _as_bool(mapping, key, default):
    raw = mapping.get(key)
    if raw is None:
        return default
    lowered = raw.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: expected true/false, got {raw!r}")


def _as_int_tuple(mapping, key, default):
    raw = mapping.get(key)
    if raw is None:
        return default
    try:
        return tuple(int(part) for part in raw.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated integers, got {raw!r}") from None


def _classifier_spec(mapping: dict[str, str], role: str, num_classes: int) -> ClassifierSpec:
    default_kind = "mlp" if role == "label_model" else "knn"
    try:
        return ClassifierSpec(
            kind=_get(mapping, f"{role}.kind", default_kind),
            num_classes=num_classes,
            knn_k=_as_int(mapping, f"{role}.knn_k", 5),
            mlp_hidden=_as_int_tuple(mapping, f"{role}.mlp_hidden", (28, 28)),
            mlp_epochs=_as_int(mapping, f"{role}.mlp_epochs", 50),
            mlp_learning_rate=_as_float(mapping, f"{role}.mlp_learning_rate", 0.01),
            mlp_batch_size=_as_int(mapping, f"{role}.mlp_batch_size", 32),
            seed=_as_int(mapping, f"{role}.seed", 0),
        )
    except ValueError as exc:
        raise ConfigError(f"{role}: {exc}") from None


def config_from_mapping(mapping: dict[str, str]) -> ExperimentConfig:
    """Build a typed experiment config, rejecting unknown keys early."""
    unknown = sorted(set(mapping) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

    try:
        stream = StreamConfig(
            num_classes=_as_int(mapping, "stream.num_classes", 4),
            num_features=_as_int(mapping, "stream.num_features", 20),
            initial_batch_size=_as_int(mapping, "stream.initial_batch_size", 1000),
            batch_size=_as_int(mapping, "stream.batch_size", 300),
            num_batches=_as_int(mapping, "stream.num_batches", 20),
            test_size=_as_int(mapping, "stream.test_size", 2000),
            seed=_as_int(mapping, "stream.seed", 0),
            stratify=_as_bool(mapping, "stream.stratify", False),
        )
        noise = NoiseSpec(
            mean_level=_as_float(mapping, "noise.mean", 0.3),
            std_dev_mode=_get(mapping, "noise.std_mode", "relative"),
            std_dev=_as_float(mapping, "noise.std", 0.2),
            seed=_as_int(mapping, "noise.seed", 0),
        )
        budget = OracleBudget(
            limit_mode=_get(mapping, "oracle.limit_mode", "unlimited"),
            fraction=_as_float(mapping, "oracle.fraction", 1.0),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    variant = _get(mapping, "framework.variant", "rad")
    if variant not in ALL_VARIANTS:
        raise ConfigError(
            f"framework.variant: expected one of {', '.join(ALL_VARIANTS)}, "
            f"got {variant!r}"
        )
    source = _get(mapping, "dataset.source", "synthetic")
    if source not in ("synthetic", "csv"):
        raise ConfigError(f"dataset.source: expected synthetic or csv, got {source!r}")
    path = mapping.get("dataset.path")
    if source == "csv" and not path:
        raise ConfigError("dataset.path is required when dataset.source = csv")

    repetitions = _as_int(mapping, "run.repetitions", 1)
    if repetitions < 1:
        raise ConfigError(f"run.repetitions must be >= 1, got {repetitions}")

    return ExperimentConfig(
        stream=stream,
        noise=noise,
        variant=variant,
        classifier_spec=_classifier_spec(mapping, "classifier", stream.num_classes),
        label_spec=_classifier_spec(mapping, "label_model", stream.num_classes),
        budget=budget,
        dataset_source=source,
        dataset_path=path,
        separation=_as_float(mapping, "dataset.separation", 3.0),
        scale=_as_bool(mapping, "dataset.scale", False),
        initial_clean=_as_bool(mapping, "initial.clean", False),
        repetitions=repetitions,
        output_dir=mapping.get("run.output_dir"),
    )


def _split_list(raw: str) -> list[str]:
    return [part.strip() for part in raw.split(",") if part.strip()]


def expand_matrix(mapping: dict[str, str]) -> list[ExperimentConfig]:
    """One config per (variant, noise level) pair named by the matrix keys."""
    base = dict(mapping)
    variants = _split_list(base.pop("matrix.variants", "")) or [
        _get(mapping, "framework.variant", "rad")
    ]
    noise_levels = _split_list(base.pop("matrix.noise_levels", "")) or [
        _get(mapping, "noise.mean", "0.3")
    ]
    configs = []
    for noise_level in noise_levels:
        for variant in variants:
            cell = dict(base)
            cell["framework.variant"] = variant
            cell["noise.mean"] = noise_level
            configs.append(config_from_mapping(cell))
    return configs


# ---------------------------------------------------------------------------
# running

def _load_dataset(config: ExperimentConfig) -> Dataset:
    if config.dataset_source == "csv":
        return load_csv(config.dataset_path, config.stream.num_classes)
    return generate_synthetic(config.stream, separation=config.separation)


def _initialize_state(config: ExperimentConfig, initial: Batch, rng):
    if config.variant in BASELINE_KINDS:
        return baselines.initialize(config.variant, initial, config.classifier_spec, rng)
    return frameworks.initialize(
        config.variant, initial, config.label_spec, config.classifier_spec, rng
    )


def _training_instances(state) -> list[LabeledInstance]:
    if isinstance(state, BaselineState):
        return list(state.pool)
    out = list(state.clean_pool)
    for group in state.inactive:
        out.extend(group)
    out.extend(state.prev_oracle_batch)
    out.extend(state.prev2_oracle_batch)
    return out


def _audit_test_purity(state, test: list[LabeledInstance]) -> None:
    test_ids = {id(inst) for inst in test}
    for inst in _training_instances(state):
        if id(inst) in test_ids:
            raise RuntimeError("a test instance leaked into a training pool")


def run_single(config: ExperimentConfig, repetition: int) -> RunResult:
    """Run one repetition end to end; deterministic in (config, repetition)."""
    stage, batch_index = "load-dataset", 0
    try:
        dataset = _load_dataset(config)
        stage = "split"
        split_rng = np.random.default_rng(config.stream.seed ^ repetition)
        initial, arrivals, test = split_stream(dataset, config.stream, split_rng)
        if config.scale:
            lo, hi = fit_feature_ranges(initial.instances)
            scale_features(initial.instances, lo, hi)
            for batch in arrivals:
                scale_features(batch.instances, lo, hi)
            scale_features(test, lo, hi)

        stage = "noise"
        noise_rng = np.random.default_rng(config.noise.seed ^ repetition)
        if not config.initial_clean:
            level = draw_batch_noise_level(config.noise, noise_rng)
            inject_symmetric_noise(initial, level, config.stream.num_classes, noise_rng)

        stage = "initialize"
        train_rng = np.random.default_rng(config.classifier_spec.seed ^ repetition)
        state = _initialize_state(config, initial, train_rng)
        oracle = GroundTruthOracle()

        stage = "evaluate"
        initial_accuracy = evaluate_accuracy(state.classifier, test)

        reports = []
        for batch in arrivals:
            batch_index = batch.index
            stage = "noise"
            level = draw_batch_noise_level(config.noise, noise_rng)
            inject_symmetric_noise(batch, level, config.stream.num_classes, noise_rng)
            stage = "step"
            if isinstance(state, BaselineState):
                state, report = baselines.step(state, batch)
            else:
                state, report = frameworks.step(state, batch, oracle, config.budget)
            stage = "evaluate"
            report.test_accuracy = evaluate_accuracy(state.classifier, test)
            reports.append(report)
            report.cumulative_A = active_fraction(reports, config.stream.batch_size)
            report.cumulative_A_truth = active_truth_fraction(
                reports, config.stream.batch_size
            )

        stage = "audit"
        _audit_test_purity(state, test)
    except RepetitionError:
        raise
    except Exception as exc:
        raise RepetitionError(repetition, batch_index, stage, exc) from exc

    oracle_queries = getattr(state, "oracle_queries_total", 0)
    return RunResult(
        variant=config.variant,
        noise_mean=config.noise.mean_level,
        repetition=repetition,
        seed=config.stream.seed ^ repetition,
        initial_accuracy=initial_accuracy,
        reports=reports,
        oracle_queries_total=oracle_queries,
    )


@dataclass
class ExperimentOutcome:
    config: ExperimentConfig
    results: list[RunResult]
    summary: RunSummary | None
    errors: list[RepetitionError]


def format_noise(noise_mean: float) -> str:
    return f"{noise_mean:g}"


def result_dir(output_dir, variant: str, noise_mean: float, repetition: int) -> Path:
    return Path(output_dir) / variant / format_noise(noise_mean) / str(repetition)


def _write_batch_files(config: ExperimentConfig, results: list[RunResult]) -> None:
    for result in results:
        directory = result_dir(
            config.output_dir, result.variant, result.noise_mean, result.repetition
        )
        directory.mkdir(parents=True, exist_ok=True)
        write_reports_csv(result.reports, directory / "batches.csv")


def _fmt(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def summary_lines(results: list[RunResult], summaries: list[RunSummary]) -> list[str]:
    lines = []
    for r in results:
        lines.append(
            f"run variant={r.variant} noise={format_noise(r.noise_mean)} "
            f"repetition={r.repetition} seed={r.seed} "
            f"initial_accuracy={_fmt(r.initial_accuracy)} "
            f"final_accuracy={_fmt(r.final_accuracy)} "
            f"final_A={_fmt(r.final_A)} final_A_truth={_fmt(r.final_A_truth)} "
            f"oracle_queries={r.oracle_queries_total}"
        )
    for s in summaries:
        lines.append(
            f"aggregate variant={s.variant} noise={format_noise(s.noise_mean)} "
            f"repetitions={s.repetitions} "
            f"initial_accuracy={_fmt(s.initial_accuracy)} "
            f"final_accuracy={_fmt(s.final_accuracy)} "
            f"final_accuracy_variance={_fmt(s.final_accuracy_variance)} "
            f"final_A={_fmt(s.final_A)} final_A_truth={_fmt(s.final_A_truth)} "
            f"mean_oracle_queries={_fmt(s.mean_oracle_queries)} "
            f"improvement={_fmt(s.improvement)} "
            f"improvement_room={_fmt(s.improvement_room)}"
        )
    return lines


def run_experiment(config: ExperimentConfig, write_files: bool = True) -> ExperimentOutcome:
    """Run all repetitions of one config; failed repetitions don't stop the rest."""
    results: list[RunResult] = []
    errors: list[RepetitionError] = []
    for repetition in range(config.repetitions):
        try:
            results.append(run_single(config, repetition))
        except RepetitionError as exc:
            errors.append(exc)
    if not results:
        raise errors[0]
    summary = aggregate_runs(results)
    if write_files and config.output_dir:
        _write_batch_files(config, results)
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        text = "\n".join(summary_lines(results, [summary])) + "\n"
        (out / "summary.txt").write_text(text, encoding="utf-8")
    return ExperimentOutcome(config, results, summary, errors)


COMPARISON_COLUMNS = (
    "variant",
    "noise",
    "initial_accuracy",
    "no_sel",
    "opt_sel",
    "full_clean",
    "final_accuracy",
    "improvement_room",
    "improvement",
)


def comparison_lines(summaries: list[RunSummary]) -> list[str]:
    """Fixed-width table relating every variant to the baselines at its noise."""
    by_noise: dict[float, dict[str, RunSummary]] = {}
    for s in summaries:
        by_noise.setdefault(s.noise_mean, {})[s.variant] = s

    def cell(value) -> str:
        return "NA" if value is None else f"{value:.4f}"

    rows = [COMPARISON_COLUMNS]
    for s in summaries:
        anchors = by_noise[s.noise_mean]
        no_sel = anchors.get("no_sel")
        opt_sel = anchors.get("opt_sel")
        full_clean = anchors.get("full_clean")
        rows.append(
            (
                s.variant,
                format_noise(s.noise_mean),
                cell(s.initial_accuracy),
                cell(no_sel.final_accuracy if no_sel else None),
                cell(opt_sel.final_accuracy if opt_sel else None),
                cell(full_clean.final_accuracy if full_clean else None),
                cell(s.final_accuracy),
                cell(s.improvement_room),
                cell(s.improvement),
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(COMPARISON_COLUMNS))]
    return ["  ".join(text.ljust(w) for text, w in zip(row, widths)).rstrip() for row in rows]


def run_matrix(configs: list[ExperimentConfig]) -> list[ExperimentOutcome]:
    """Run every config; a config that fails entirely doesn't stop the others.

    Improvement fields are attached wherever the same noise level also ran
    the no_sel and full_clean baselines. Writes one combined summary.txt and
    comparison.txt under the shared output dir.
    """
    if not configs:
        raise ValueError("matrix expansion produced no configs")
    outcomes: list[ExperimentOutcome] = []
    for config in configs:
        try:
            outcomes.append(run_experiment(config, write_files=False))
        except RepetitionError as exc:
            outcomes.append(ExperimentOutcome(config, [], None, [exc]))

    summaries = [o.summary for o in outcomes if o.summary is not None]
    by_noise: dict[float, dict[str, RunSummary]] = {}
    for s in summaries:
        by_noise.setdefault(s.noise_mean, {})[s.variant] = s
    for s in summaries:
        anchors = by_noise[s.noise_mean]
        if "no_sel" in anchors and "full_clean" in anchors:
            attach_improvements(s, anchors["no_sel"], anchors["full_clean"])

    output_dir = configs[0].output_dir
    if output_dir:
        all_results: list[RunResult] = []
        for outcome in outcomes:
            if outcome.results:
                _write_batch_files(outcome.config, outcome.results)
                all_results.extend(outcome.results)
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        text = "\n".join(summary_lines(all_results, summaries)) + "\n"
        (out / "summary.txt").write_text(text, encoding="utf-8")
        table = "\n".join(comparison_lines(summaries)) + "\n"
        (out / "comparison.txt").write_text(table, encoding="utf-8")
    return outcomes
