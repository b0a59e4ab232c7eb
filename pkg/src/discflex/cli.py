"""Command-line front end for the disc design-exploration pipeline.

Owns run configuration (defaults, config file, ``DISCFLEX_*`` environment
variables, flags, in rising precedence), the versioned JSON result envelope
that every artifact-producing command emits, and the six subcommands:
gen-data, fit-rsm, train-ann, optimize, study, report.

Exit codes: 0 success, 2 configuration or input-content error, 3 I/O error,
4 training divergence, 5 empty feasible set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from . import __version__, dataset, explorer, nsga2, rsm
from .ann import (
    NetworkParams,
    NetworkShape,
    TrainConfig,
    TrainedNetwork,
    TrainingDivergenceError,
    TrainingSummary,
    mean_abs_percent_error,
    predict_batch,
    train,
)
from .dataset import RESPONSE_COLUMNS, Dataset, DesignTag, NormalizationStats
from .explorer import (
    DesignProblem,
    EmptyFrontError,
    ExplorationResult,
    StudyCell,
    StudyReport,
    SurrogateSource,
)
from .nsga2 import GaConfig

SCHEMA_VERSION = 1
ENV_PREFIX = "DISCFLEX_"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DIVERGENCE = 4
EXIT_EMPTY_FRONT = 5

FRONT_CSV_HEADER = "length_mm,width_mm,thickness_mm,mass_g,stress_mpa,buckling_n"

_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


class ConfigError(ValueError):
    """Invalid run configuration or input file contents."""


# ---------------------------------------------------------------------------
# run configuration


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings of one pipeline run."""

    design: str = "A"
    source: str = "rsm"
    seed: int = 0
    population: int = 500
    generations: int = 300
    crossover_probability: float = 0.9
    mutation_probability: Optional[float] = None
    crossover_index: float = 20.0
    mutation_index: float = 20.0
    threshold_n: float = 150.0
    noise: float = 0.01
    samples: Optional[int] = None
    scheme: str = "latin_hypercube"
    hidden_layers: tuple[int, ...] = (20, 20)
    train_count: int = 100
    max_iterations: int = 300
    tolerance: float = 1e-9
    trials: int = 10
    layer_counts: tuple[int, ...] = (1, 2, 3)
    neuron_counts: tuple[int, ...] = (10, 20, 30, 40)
    train_sizes: tuple[int, ...] = (40, 60, 80, 100, 120)
    workers: int = 0  # 0 means machine parallelism
    out: str = "."

    def __post_init__(self):
        for name in ("hidden_layers", "layer_counts", "neuron_counts", "train_sizes"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))

    @property
    def design_tag(self) -> DesignTag:
        return DesignTag(self.design)

    @property
    def surrogate_source(self) -> SurrogateSource:
        return SurrogateSource(self.source)

    @property
    def resolved_samples(self) -> int:
        if self.samples is not None:
            return self.samples
        return {"A": 127, "B": 128}[self.design]

    @property
    def resolved_workers(self) -> int:
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)

    def ga_config(self) -> GaConfig:
        return GaConfig(
            population_size=self.population,
            generations=self.generations,
            crossover_probability=self.crossover_probability,
            mutation_probability=self.mutation_probability,
            crossover_index=self.crossover_index,
            mutation_index=self.mutation_index,
            seed=self.seed,
        )

    def train_config(self, seed: Optional[int] = None) -> TrainConfig:
        return TrainConfig(
            max_iterations=self.max_iterations,
            tolerance=self.tolerance,
            seed=self.seed if seed is None else seed,
        )

    def validate(self) -> None:
        if self.design not in ("A", "B"):
            raise ConfigError(f"design must be A or B, got {self.design!r}")
        if self.source not in ("rsm", "ann"):
            raise ConfigError(f"source must be rsm or ann, got {self.source!r}")
        if self.scheme not in ("grid", "latin_hypercube"):
            raise ConfigError(f"scheme must be grid or latin_hypercube, got {self.scheme!r}")
        if self.noise < 0:
            raise ConfigError(f"noise must be >= 0, got {self.noise}")
        if self.samples is not None and self.samples < 1:
            raise ConfigError(f"samples must be >= 1, got {self.samples}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.train_count < 1:
            raise ConfigError(f"train_count must be >= 1, got {self.train_count}")
        if self.workers < 0:
            raise ConfigError(f"workers must be >= 0, got {self.workers}")
        if not self.threshold_n > 0:
            raise ConfigError(f"threshold_n must be > 0, got {self.threshold_n}")
        if not all(s >= 1 for s in self.hidden_layers) or not self.hidden_layers:
            raise ConfigError(f"hidden_layers must be positive ints, got {self.hidden_layers}")
        for name in ("layer_counts", "neuron_counts", "train_sizes"):
            values = getattr(self, name)
            if not values or not all(v >= 1 for v in values):
                raise ConfigError(f"{name} must be positive ints, got {values}")
        # delegate the rest to the module constructors so rules live in one place
        try:
            self.ga_config()
            self.train_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out


_LIST_FIELDS = {"hidden_layers", "layer_counts", "neuron_counts", "train_sizes"}
_INT_FIELDS = {
    "seed", "population", "generations", "samples", "train_count",
    "max_iterations", "trials", "workers",
}
_FLOAT_FIELDS = {
    "crossover_probability", "mutation_probability", "crossover_index",
    "mutation_index", "threshold_n", "noise", "tolerance",
}


def _coerce_field(name: str, raw: object) -> object:
    """Parse one config value from text/JSON into its field type."""
    if raw is None:
        return None
    try:
        if name in _LIST_FIELDS:
            if isinstance(raw, str):
                raw = [part for part in raw.split(",") if part.strip()]
            return tuple(int(v) for v in raw)
        if name in _INT_FIELDS:
            return int(raw)
        if name in _FLOAT_FIELDS:
            return float(raw)
        if isinstance(raw, str):
            return raw
        raise ConfigError(f"{name} must be a string, got {type(raw).__name__}")
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {name}: {raw!r} ({exc})") from None


def _load_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    try:
        values = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(values, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return values


def _env_overrides(env: Mapping[str, str]) -> dict:
    names = {f.name for f in fields(RunConfig)}
    out = {}
    for key, value in env.items():
        if key.startswith(ENV_PREFIX):
            name = key[len(ENV_PREFIX):].lower()
            if name in names:
                out[name] = value
    return out


def resolve_config(
    config_path: Optional[str] = None,
    flag_values: Optional[Mapping[str, object]] = None,
    env: Optional[Mapping[str, str]] = None,
) -> RunConfig:
    """Merge defaults, config file, environment and flags, then validate."""
    names = {f.name for f in fields(RunConfig)}
    merged: dict = {}
    if config_path is not None:
        file_values = _load_config_file(config_path)
        unknown = sorted(set(file_values) - names)
        if unknown:
            raise ConfigError(f"{config_path}: unknown config keys {unknown}")
        merged.update(file_values)
    merged.update(_env_overrides(os.environ if env is None else env))
    for key, value in (flag_values or {}).items():
        if value is not None:
            merged[key] = value
    coerced = {name: _coerce_field(name, raw) for name, raw in merged.items()}
    try:
        cfg = RunConfig(**coerced)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# result envelope


def _timestamp() -> str:
    """UTC timestamp; SOURCE_DATE_EPOCH pins it for reproducible artifacts."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        moment = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
    else:
        moment = datetime.now(tz=timezone.utc)
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")


def make_envelope(
    cfg: RunConfig, kind: str, payload: Mapping, timestamp: Optional[str] = None
) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "toolkit_version": __version__,
        "timestamp": _timestamp() if timestamp is None else timestamp,
        "kind": kind,
        "config": cfg.to_dict(),
        "payload": dict(payload),
    }


def render_envelope(envelope: Mapping) -> str:
    return json.dumps(envelope, indent=2, allow_nan=False) + "\n"


def write_envelope(path: Path, envelope: Mapping) -> None:
    path.write_text(render_envelope(envelope))


def load_envelope(path: str | Path) -> dict:
    try:
        envelope = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not a result envelope ({exc})") from None
    version = envelope.get("schema_version") if isinstance(envelope, dict) else None
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"{path}: envelope schema version {version!r}, this toolkit reads {SCHEMA_VERSION}"
        )
    return envelope


# ---------------------------------------------------------------------------
# payload codecs (deterministic field order for diffability)


def models_payload(design_tag: DesignTag, models: Mapping[str, rsm.RsmModel]) -> dict:
    return {
        "design_tag": design_tag.value,
        "models": {name: models[name].to_record() for name in RESPONSE_COLUMNS},
    }


def models_from_payload(payload: Mapping) -> tuple[DesignTag, dict[str, rsm.RsmModel]]:
    try:
        tag = DesignTag(payload["design_tag"])
        models = {
            name: rsm.RsmModel.from_record(payload["models"][name])
            for name in RESPONSE_COLUMNS
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed model payload: {exc!r}") from None
    return tag, models


def network_payload(net: TrainedNetwork) -> dict:
    return {
        "shape": {
            "n_inputs": net.shape.n_inputs,
            "hidden_layers": list(net.shape.hidden_layers),
            "n_outputs": net.shape.n_outputs,
        },
        "weights": [W.tolist() for W in net.params.weights],
        "biases": [b.tolist() for b in net.params.biases],
        "input_stats": {
            "mean": net.input_stats.mean.tolist(),
            "std": net.input_stats.std.tolist(),
        },
        "output_stats": {
            "mean": net.output_stats.mean.tolist(),
            "std": net.output_stats.std.tolist(),
        },
        "summary": {
            "alpha": net.summary.alpha,
            "beta": net.summary.beta,
            "gamma": net.summary.gamma,
            "iterations": net.summary.iterations,
            "objective": net.summary.objective,
            "stop_reason": net.summary.stop_reason,
        },
    }


def network_from_payload(payload: Mapping) -> TrainedNetwork:
    try:
        shape = NetworkShape(
            n_inputs=payload["shape"]["n_inputs"],
            hidden_layers=tuple(payload["shape"]["hidden_layers"]),
            n_outputs=payload["shape"]["n_outputs"],
        )
        params = NetworkParams(
            weights=tuple(np.array(W, dtype=float) for W in payload["weights"]),
            biases=tuple(np.array(b, dtype=float) for b in payload["biases"]),
        )
        summary = TrainingSummary(**payload["summary"])
        net = TrainedNetwork(
            shape=shape,
            params=params,
            input_stats=NormalizationStats(
                np.array(payload["input_stats"]["mean"]), np.array(payload["input_stats"]["std"])
            ),
            output_stats=NormalizationStats(
                np.array(payload["output_stats"]["mean"]), np.array(payload["output_stats"]["std"])
            ),
            summary=summary,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed network payload: {exc!r}") from None
    return net


def exploration_payload(result: ExplorationResult) -> dict:
    return {
        "design_tag": result.problem.design_tag.value,
        "source": result.problem.source.value,
        "threshold_n": result.problem.threshold_n,
        "front_designs": result.front_designs.tolist(),
        "front_objectives": result.front_objectives.tolist(),
        "minimal_mass_index": result.minimal_mass_index,
        "minimal_stress_index": result.minimal_stress_index,
        "optimum_index": result.optimum_index,
        "provenance": dict(result.provenance),
    }


def _json_safe(value: Optional[float]) -> Optional[float]:
    # all-diverged cells carry nan means; JSON gets null instead
    if value is None or np.isnan(value):
        return None
    return value


def study_payload(report: StudyReport) -> dict:
    return {
        "axis": report.axis,
        "cells": [
            {
                "key": c.key,
                "test_mean": _json_safe(c.test_mean),
                "test_std": _json_safe(c.test_std),
                "all_mean": _json_safe(c.all_mean),
                "all_std": _json_safe(c.all_std),
                "trials": c.trials,
                "divergences": c.divergences,
            }
            for c in report.cells
        ],
    }


def study_from_payload(payload: Mapping) -> StudyReport:
    try:
        cells = []
        for cell in payload["cells"]:
            cell = dict(cell)
            for key in ("test_mean", "all_mean"):
                if cell[key] is None:
                    cell[key] = float("nan")
            cells.append(StudyCell(**cell))
        return StudyReport(axis=payload["axis"], cells=tuple(cells))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed study payload: {exc!r}") from None


# ---------------------------------------------------------------------------
# shared helpers


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read_dataset(cfg: RunConfig, data_path: str) -> Dataset:
    return dataset.read_csv(data_path, design_tag=cfg.design_tag)


def _fit_reference_models(cfg: RunConfig, data: Dataset) -> dict[str, rsm.RsmModel]:
    return {
        name: rsm.fit(rsm.reference_basis(cfg.design_tag, name), data, name)
        for name in RESPONSE_COLUMNS
    }


def _surrogate_buckling(
    source: SurrogateSource,
    designs: np.ndarray,
    models: Optional[Mapping[str, rsm.RsmModel]],
    network: Optional[TrainedNetwork],
) -> np.ndarray:
    if source is SurrogateSource.RSM:
        return rsm.evaluate_batch(models["buckling_n"], designs)
    return predict_batch(network, designs)[:, 2]


def _format_float(value: float) -> str:
    return repr(float(value))


def _write_front_csv(path: Path, designs: np.ndarray, objectives: np.ndarray,
                     buckling: np.ndarray) -> None:
    order = np.lexsort(
        (designs[:, 2], designs[:, 1], designs[:, 0], objectives[:, 1], objectives[:, 0])
    )
    lines = [FRONT_CSV_HEADER]
    for i in order:
        row = list(designs[i]) + list(objectives[i]) + [buckling[i]]
        lines.append(",".join(_format_float(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _named_row(label: str, design: np.ndarray, objectives: np.ndarray) -> str:
    l, w, t = design
    return (
        f"{label:<15} l={l:8.3f} mm  b={w:7.3f} mm  t={t:6.3f} mm  "
        f"mass={objectives[0]:.6f} g  stress={objectives[1]:.3f} MPa"
    )


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen_data(cfg: RunConfig) -> int:
    data = explorer.synthesize_dataset(
        cfg.design_tag,
        cfg.resolved_samples,
        scheme=cfg.scheme,
        seed=cfg.seed,
        noise_std_fraction=cfg.noise,
    )
    path = _out_dir(cfg) / f"dataset_{cfg.design}.csv"
    dataset.write_csv(data, path)
    print(f"wrote {len(data)} rows to {path}")
    return EXIT_OK


def cmd_fit_rsm(cfg: RunConfig, data_path: str) -> int:
    data = _read_dataset(cfg, data_path)
    models = _fit_reference_models(cfg, data)
    envelope = make_envelope(cfg, "rsm_models", models_payload(cfg.design_tag, models))
    path = _out_dir(cfg) / f"rsm_models_{cfg.design}.json"
    write_envelope(path, envelope)
    for name in RESPONSE_COLUMNS:
        model = models[name]
        print(f"{name}: R^2 = {model.r_squared:.6f}")
        for term, coeff in zip(model.basis.terms, model.coefficients):
            print(f"  l^{term[0]} b^{term[1]} t^{term[2]}: {coeff:.6g}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_train_ann(cfg: RunConfig, data_path: str) -> int:
    data = _read_dataset(cfg, data_path)
    if not 1 <= cfg.train_count < len(data):
        raise ConfigError(
            f"train_count {cfg.train_count} must leave a test remainder of {len(data)} rows"
        )
    train_data, test_data = dataset.split(data, cfg.train_count, seed=cfg.seed)
    shape = NetworkShape(n_inputs=3, hidden_layers=cfg.hidden_layers, n_outputs=3)
    net = train(shape, train_data, cfg.train_config())
    envelope = make_envelope(cfg, "network", network_payload(net))
    path = _out_dir(cfg) / f"network_{cfg.design}.json"
    write_envelope(path, envelope)
    test_err = mean_abs_percent_error(test_data.responses, predict_batch(net, test_data.designs))
    all_err = mean_abs_percent_error(data.responses, predict_batch(net, data.designs))
    print(f"trained {shape.describe()} in {net.summary.iterations} iterations "
          f"({net.summary.stop_reason})")
    for j, name in enumerate(RESPONSE_COLUMNS):
        print(f"{name}: test error {test_err[j]:.3f}%  all error {all_err[j]:.3f}%")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_optimize(cfg: RunConfig, surrogate_path: Optional[str]) -> int:
    source = cfg.surrogate_source
    models: Optional[dict[str, rsm.RsmModel]] = None
    network: Optional[TrainedNetwork] = None
    if source is SurrogateSource.RSM:
        if surrogate_path is not None:
            envelope = load_envelope(surrogate_path)
            if envelope["kind"] != "rsm_models":
                raise ConfigError(f"{surrogate_path}: expected an rsm_models envelope")
            tag, models = models_from_payload(envelope["payload"])
            if tag is not cfg.design_tag:
                raise ConfigError(f"{surrogate_path}: models are for design {tag.value}")
        else:
            models = rsm.reference_models(cfg.design_tag)
        fingerprint = explorer.fingerprint_models(models)
    else:
        if surrogate_path is None:
            raise ConfigError("source ann requires --surrogate with a network envelope")
        envelope = load_envelope(surrogate_path)
        if envelope["kind"] != "network":
            raise ConfigError(f"{surrogate_path}: expected a network envelope")
        network = network_from_payload(envelope["payload"])
        fingerprint = explorer.fingerprint_network(network)

    problem = DesignProblem(cfg.design_tag, source, threshold_n=cfg.threshold_n)
    spec = explorer.build_problem(
        cfg.design_tag, source, models=models, network=network, threshold_n=cfg.threshold_n
    )
    ga = cfg.ga_config()
    result = nsga2.optimize(spec, ga)
    if not result.front:
        raise EmptyFrontError(
            f"no feasible solution for design {cfg.design} at threshold {cfg.threshold_n} N"
        )
    designs = np.array([ind.x for ind in result.front])
    objectives = np.array([ind.objectives for ind in result.front])
    i_mass, i_stress = explorer.extract_extremes(objectives)
    i_opt = explorer.select_optimum(objectives)
    exploration = ExplorationResult(
        problem=problem,
        front_designs=designs,
        front_objectives=objectives,
        minimal_mass_index=i_mass,
        minimal_stress_index=i_stress,
        optimum_index=i_opt,
        provenance={
            "design_tag": cfg.design,
            "source": cfg.source,
            "threshold_n": cfg.threshold_n,
            "population_size": ga.population_size,
            "generations": ga.generations,
            "seed": ga.seed,
            "surrogate_fingerprint": fingerprint,
        },
    )

    out = _out_dir(cfg)
    stem = f"{cfg.design}_{cfg.source}"
    write_envelope(
        out / f"exploration_{stem}.json",
        make_envelope(cfg, "exploration", exploration_payload(exploration)),
    )
    buckling = _surrogate_buckling(source, designs, models, network)
    _write_front_csv(out / f"front_{stem}.csv", designs, objectives, buckling)
    log_lines = ["generation,best_mass_g,best_stress_mpa,feasible_count,front_size"]
    for summary in result.history:
        best = summary.best_objectives
        log_lines.append(
            f"{summary.generation},{_format_float(best[0])},{_format_float(best[1])},"
            f"{summary.feasible_count},{summary.front_size}"
        )
    (out / f"generations_{stem}.csv").write_text("\n".join(log_lines) + "\n")

    print(f"front of {len(result.front)} solutions "
          f"({cfg.source} surrogate, design {cfg.design}, seed {cfg.seed})")
    print(_named_row("minimal mass", designs[i_mass], objectives[i_mass]))
    print(_named_row("minimal stress", designs[i_stress], objectives[i_stress]))
    print(_named_row("optimum", designs[i_opt], objectives[i_opt]))
    print(f"wrote {out / f'exploration_{stem}.json'}, {out / f'front_{stem}.csv'}, "
          f"{out / f'generations_{stem}.csv'}")
    return EXIT_OK


def _format_cell(mean: float, std: Optional[float], divergences: int) -> str:
    if np.isnan(mean):
        cell = "diverged"
    elif std is None:
        cell = f"{mean:.2f}"
    else:
        cell = f"{mean:.2f} +/- {std:.2f}"
    if divergences:
        cell += f" ({divergences} div)"
    return cell


def format_study_table(report: StudyReport, trials: int) -> str:
    """Layers-by-neurons (or sizes) grid with Test and All rows per group."""
    lines = [f"{report.axis} study, {trials} trials per cell, mean percent error"]
    if report.axis == "network_size":
        groups: dict[int, list[StudyCell]] = {}
        for cell in report.cells:
            n_layers = int(cell.key.split("x")[0])
            groups.setdefault(n_layers, []).append(cell)
        for n_layers in sorted(groups):
            cells = groups[n_layers]
            widths = [c.key.split("x")[1] for c in cells]
            lines.append(f"hidden layers: {n_layers}")
            lines.append("  " + "".join(f"{'n=' + w:>20}" for w in widths))
            test_row = "".join(
                f"{_format_cell(c.test_mean, c.test_std, c.divergences):>20}" for c in cells
            )
            all_row = "".join(
                f"{_format_cell(c.all_mean, c.all_std, c.divergences):>20}" for c in cells
            )
            lines.append(f"  Test{test_row}")
            lines.append(f"  All {all_row}")
    else:
        sizes = [c.key.lstrip("n") for c in report.cells]
        lines.append("  " + "".join(f"{'n=' + s:>20}" for s in sizes))
        test_row = "".join(
            f"{_format_cell(c.test_mean, c.test_std, c.divergences):>20}" for c in report.cells
        )
        all_row = "".join(
            f"{_format_cell(c.all_mean, c.all_std, c.divergences):>20}" for c in report.cells
        )
        lines.append(f"  Test{test_row}")
        lines.append(f"  All {all_row}")
    return "\n".join(lines)


def cmd_study(cfg: RunConfig, data_path: str, which: str) -> int:
    data = _read_dataset(cfg, data_path)
    base = cfg.train_config()
    if which == "network_size":
        report = explorer.run_network_size_study(
            data,
            layer_counts=cfg.layer_counts,
            neuron_counts=cfg.neuron_counts,
            trials=cfg.trials,
            seed=cfg.seed,
            train_count=cfg.train_count,
            base_config=base,
            workers=cfg.resolved_workers,
        )
    elif which == "train_size":
        report = explorer.run_training_size_study(
            data,
            sizes=cfg.train_sizes,
            trials=cfg.trials,
            seed=cfg.seed,
            hidden_layers=cfg.hidden_layers,
            base_config=base,
            workers=cfg.resolved_workers,
        )
    else:
        raise ConfigError(f"unknown study {which!r}, expected network_size or train_size")
    path = _out_dir(cfg) / f"study_{which}_{cfg.design}.json"
    write_envelope(path, make_envelope(cfg, "study", study_payload(report)))
    print(format_study_table(report, cfg.trials))
    print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# report plumbing


def _svg_front_overlay(
    series: Sequence[tuple[str, np.ndarray, dict[int, str]]],
) -> str:
    """Static stress-vs-mass rendering of one or more fronts.

    Each entry is (label, objectives sorted by mass, {point index: marker
    name}).  Fixed canvas, fixed palette, fixed float formatting, so repeated
    runs produce identical bytes.
    """
    width, height, pad = 640.0, 480.0, 60.0
    all_pts = np.vstack([objs for _, objs, _ in series])
    lo = all_pts.min(axis=0)
    hi = all_pts.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    lo = lo - 0.05 * span
    hi = hi + 0.05 * span

    def sx(v: float) -> float:
        return pad + (v - lo[0]) / (hi[0] - lo[0]) * (width - 2 * pad)

    def sy(v: float) -> float:
        return height - pad - (v - lo[1]) / (hi[1] - lo[1]) * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect width="{width:.0f}" height="{height:.0f}" fill="white"/>',
        f'<line x1="{pad:.2f}" y1="{height - pad:.2f}" x2="{width - pad:.2f}" '
        f'y2="{height - pad:.2f}" stroke="black"/>',
        f'<line x1="{pad:.2f}" y1="{pad:.2f}" x2="{pad:.2f}" y2="{height - pad:.2f}" '
        f'stroke="black"/>',
    ]
    for k in range(5):
        fx = lo[0] + (hi[0] - lo[0]) * k / 4
        fy = lo[1] + (hi[1] - lo[1]) * k / 4
        x = sx(fx)
        y = sy(fy)
        parts.append(
            f'<text x="{x:.2f}" y="{height - pad + 18:.2f}" font-size="11" '
            f'text-anchor="middle">{fx:.4g}</text>'
        )
        parts.append(
            f'<text x="{pad - 8:.2f}" y="{y + 4:.2f}" font-size="11" '
            f'text-anchor="end">{fy:.4g}</text>'
        )
    parts.append(
        f'<text x="{width / 2:.2f}" y="{height - 16:.2f}" font-size="13" '
        f'text-anchor="middle">mass (g)</text>'
    )
    parts.append(
        f'<text x="16" y="{height / 2:.2f}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 16 {height / 2:.2f})">stress (MPa)</text>'
    )
    for idx, (label, objs, markers) in enumerate(series):
        color = _SVG_COLORS[idx % len(_SVG_COLORS)]
        coords = " ".join(f"{sx(m):.2f},{sy(s):.2f}" for m, s in objs)
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1"/>'
        )
        for m, s in objs:
            parts.append(f'<circle cx="{sx(m):.2f}" cy="{sy(s):.2f}" r="2" fill="{color}"/>')
        for point_index, name in sorted(markers.items()):
            m, s = objs[point_index]
            parts.append(
                f'<circle cx="{sx(m):.2f}" cy="{sy(s):.2f}" r="5" fill="none" '
                f'stroke="black" stroke-width="1.5"/>'
            )
            parts.append(
                f'<text x="{sx(m) + 8:.2f}" y="{sy(s) - 6:.2f}" font-size="11">{name}</text>'
            )
        parts.append(
            f'<text x="{width - pad:.2f}" y="{pad + 16 * idx:.2f}" font-size="12" '
            f'text-anchor="end" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_report(cfg: RunConfig, envelope_paths: Sequence[str], data_path: Optional[str]) -> int:
    explorations = []
    networks = []
    for path in envelope_paths:
        envelope = load_envelope(path)
        kind = envelope.get("kind")
        if kind == "exploration":
            explorations.append((path, envelope["payload"]))
        elif kind == "network":
            networks.append((path, network_from_payload(envelope["payload"])))
        else:
            raise ConfigError(f"{path}: cannot report on envelope kind {kind!r}")
    if not explorations and not networks:
        raise ConfigError("nothing to report: pass exploration or network envelopes")
    if networks and data_path is None:
        raise ConfigError("network envelopes need --data with ground-truth rows")

    out = _out_dir(cfg)
    written = []
    if explorations:
        overlay_lines = ["source,length_mm,width_mm,thickness_mm,mass_g,stress_mpa,marker"]
        series = []
        for path, payload in explorations:
            try:
                label = f"{payload['source']}_{payload['design_tag']}"
                designs = np.array(payload["front_designs"], dtype=float)
                objectives = np.array(payload["front_objectives"], dtype=float)
                marker_names = {
                    int(payload["minimal_mass_index"]): "minimal_mass",
                    int(payload["minimal_stress_index"]): "minimal_stress",
                    int(payload["optimum_index"]): "optimum",
                }
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"{path}: malformed exploration payload ({exc!r})") from None
            order = np.lexsort((objectives[:, 1], objectives[:, 0]))
            sorted_markers = {}
            for rank, original in enumerate(order):
                if int(original) in marker_names:
                    sorted_markers[rank] = marker_names[int(original)]
            for rank, original in enumerate(order):
                row = list(designs[original]) + list(objectives[original])
                marker = sorted_markers.get(rank, "")
                overlay_lines.append(
                    label + "," + ",".join(_format_float(v) for v in row) + "," + marker
                )
            series.append((label, objectives[order], sorted_markers))
        (out / "front_overlay.csv").write_text("\n".join(overlay_lines) + "\n")
        (out / "front_overlay.svg").write_text(_svg_front_overlay(series))
        written += [out / "front_overlay.csv", out / "front_overlay.svg"]
    if networks:
        data = _read_dataset(cfg, data_path)
        predictions = np.stack([predict_batch(net, data.designs) for _, net in networks])
        pred_mean = predictions.mean(axis=0)
        pred_std = predictions.std(axis=0, ddof=1) if len(networks) >= 2 else np.zeros_like(
            pred_mean
        )
        scatter_lines = ["response,truth,prediction_mean,prediction_std"]
        for j, name in enumerate(RESPONSE_COLUMNS):
            for i in range(len(data)):
                scatter_lines.append(
                    f"{name},{_format_float(data.responses[i, j])},"
                    f"{_format_float(pred_mean[i, j])},{_format_float(pred_std[i, j])}"
                )
        (out / "prediction_scatter.csv").write_text("\n".join(scatter_lines) + "\n")
        written.append(out / "prediction_scatter.csv")
    print("wrote " + ", ".join(str(p) for p in written))
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing and dispatch


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (flags override it)")
    common.add_argument("--design", choices=("A", "B"), help="disc design variant")
    common.add_argument("--source", choices=("rsm", "ann"), help="surrogate family")
    common.add_argument("--seed", type=int, help="master random seed")
    common.add_argument("--pop", type=int, dest="population", help="GA population size")
    common.add_argument("--gens", type=int, dest="generations", help="GA generations")
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int, help="parallel trial workers (0 = all cores)")
    common.add_argument("--noise", type=float, help="relative response noise for gen-data")

    parser = argparse.ArgumentParser(
        prog="discflex",
        description="Surrogate-driven design exploration for flexible disc elements.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("gen-data", parents=[common], help="synthesize a design-response CSV")
    p_fit = sub.add_parser("fit-rsm", parents=[common], help="fit polynomial response models")
    p_fit.add_argument("--data", required=True, help="input dataset CSV")
    p_train = sub.add_parser("train-ann", parents=[common], help="train a network surrogate")
    p_train.add_argument("--data", required=True, help="input dataset CSV")
    p_opt = sub.add_parser("optimize", parents=[common], help="run the constrained GA")
    p_opt.add_argument("--surrogate", help="surrogate envelope (required for --source ann)")
    p_study = sub.add_parser("study", parents=[common], help="run a parametric study")
    p_study.add_argument("which", choices=("network_size", "train_size"))
    p_study.add_argument("--data", required=True, help="input dataset CSV")
    p_report = sub.add_parser("report", parents=[common], help="emit plot data and SVG")
    p_report.add_argument("envelopes", nargs="+", help="result envelopes to render")
    p_report.add_argument("--data", help="dataset CSV for prediction scatter")
    return parser


_FLAG_FIELDS = ("design", "source", "seed", "population", "generations", "out",
                "workers", "noise")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        flag_values = {name: getattr(args, name) for name in _FLAG_FIELDS}
        cfg = resolve_config(config_path=args.config, flag_values=flag_values)
        if args.command == "gen-data":
            return cmd_gen_data(cfg)
        if args.command == "fit-rsm":
            return cmd_fit_rsm(cfg, args.data)
        if args.command == "train-ann":
            return cmd_train_ann(cfg, args.data)
        if args.command == "optimize":
            return cmd_optimize(cfg, args.surrogate)
        if args.command == "study":
            return cmd_study(cfg, args.data, args.which)
        if args.command == "report":
            return cmd_report(cfg, args.envelopes, args.data)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingDivergenceError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except EmptyFrontError as exc:
        print(f"empty feasible set: {exc}", file=sys.stderr)
        return EXIT_EMPTY_FRONT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
