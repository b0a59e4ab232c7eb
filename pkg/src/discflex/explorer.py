"""Case-study assembly around the surrogates.

Synthesizes disc datasets from the shipped polynomial models, builds the
two-objective constrained optimization problem for either surrogate kind,
post-processes Pareto fronts (extremes and the equal-importance optimum),
provides a brute-force lattice oracle, and runs the parametric studies over
network size and training-data size.
"""

from __future__ import annotations

import enum
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from . import nsga2, rsm
from .ann import (
    NetworkShape,
    TrainConfig,
    TrainedNetwork,
    TrainingDivergenceError,
    mean_abs_percent_error,
    predict_batch,
    train,
)
from .dataset import (
    DESIGN_BOUNDS,
    RESPONSE_COLUMNS,
    Dataset,
    DesignTag,
    SamplingScheme,
    sample_designs,
    split,
)
from .nsga2 import GaConfig, ProblemSpec

OBJECTIVE_RESPONSES = ("mass_g", "stress_mpa")
CONSTRAINT_RESPONSE = "buckling_n"
DEFAULT_BUCKLING_THRESHOLD_N = 150.0
DEFAULT_NOISE_FRACTION = 0.01
DEFAULT_GRID_LEVELS = 101


class SurrogateSource(enum.Enum):
    """Which surrogate family backs an optimization problem."""

    RSM = "rsm"
    ANN = "ann"


class EmptyFrontError(RuntimeError):
    """Raised when optimization finishes without any feasible solution."""


@dataclass(frozen=True)
class DesignProblem:
    """The disc exploration task: minimize mass and stress, keep buckling high."""

    design_tag: DesignTag
    source: SurrogateSource
    threshold_n: float = DEFAULT_BUCKLING_THRESHOLD_N

    def __post_init__(self):
        if not self.threshold_n > 0:
            raise ValueError("buckling threshold must be > 0")


@dataclass(frozen=True)
class ExplorationResult:
    """Feasible front with its three named solutions and run provenance."""

    problem: DesignProblem
    front_designs: np.ndarray  # (k, 3)
    front_objectives: np.ndarray  # (k, 2) mass, stress
    minimal_mass_index: int
    minimal_stress_index: int
    optimum_index: int
    provenance: Mapping[str, object]

    def __post_init__(self):
        fd = np.array(self.front_designs, dtype=float)
        fo = np.array(self.front_objectives, dtype=float)
        fd.flags.writeable = False
        fo.flags.writeable = False
        object.__setattr__(self, "front_designs", fd)
        object.__setattr__(self, "front_objectives", fo)
        k = fd.shape[0]
        if k == 0:
            raise ValueError("front must be non-empty")
        for idx in (self.minimal_mass_index, self.minimal_stress_index, self.optimum_index):
            if not 0 <= idx < k:
                raise ValueError(f"named index {idx} outside front of size {k}")

    def named_design(self, index: int) -> tuple[np.ndarray, np.ndarray]:
        return self.front_designs[index], self.front_objectives[index]


@dataclass(frozen=True)
class StudyCell:
    """Aggregated prediction errors of one study configuration."""

    key: str
    test_mean: float
    test_std: Optional[float]
    all_mean: float
    all_std: Optional[float]
    trials: int
    divergences: int


@dataclass(frozen=True)
class StudyReport:
    """All cells of one parametric study."""

    axis: str
    cells: tuple[StudyCell, ...]

    def __post_init__(self):
        keys = [c.key for c in self.cells]
        if len(set(keys)) != len(keys):
            raise ValueError(f"duplicate study cell keys in {keys}")

    def cell(self, key: str) -> StudyCell:
        for c in self.cells:
            if c.key == key:
                return c
        raise KeyError(key)


def synthesize_dataset(
    design_tag: DesignTag,
    n: int,
    scheme: SamplingScheme = "latin_hypercube",
    seed: int = 0,
    noise_std_fraction: float = DEFAULT_NOISE_FRACTION,
) -> Dataset:
    """Sample the design box and evaluate the shipped models, plus noise.

    Responses are oracle * (1 + eps) with eps zero-mean Gaussian of the given
    relative standard deviation; zero noise reproduces the models exactly.
    """
    if noise_std_fraction < 0:
        raise ValueError("noise fraction must be >= 0")
    models = rsm.reference_models(design_tag)
    largest_basis = max(len(m.basis) for m in models.values())
    if n < largest_basis:
        raise ValueError(f"need at least {largest_basis} samples to cover the model bases, got {n}")
    sample_seed, noise_seed = (int(s) for s in np.random.SeedSequence(seed).generate_state(2))
    designs = sample_designs(DESIGN_BOUNDS, n, scheme, seed=sample_seed)
    responses = np.column_stack(
        [rsm.evaluate_batch(models[name], designs) for name in RESPONSE_COLUMNS]
    )
    if noise_std_fraction > 0:
        eps = np.random.default_rng(noise_seed).standard_normal(responses.shape)
        responses = responses * (1.0 + noise_std_fraction * eps)
    return Dataset(designs=designs, responses=responses, design_tag=design_tag)


def build_problem(
    design_tag: DesignTag,
    source: SurrogateSource,
    *,
    models: Optional[Mapping[str, rsm.RsmModel]] = None,
    network: Optional[TrainedNetwork] = None,
    threshold_n: float = DEFAULT_BUCKLING_THRESHOLD_N,
) -> ProblemSpec:
    """Wrap surrogates as a box-bounded two-objective constrained problem.

    Objectives are (mass, stress), both minimized; the constraint is
    threshold - buckling <= 0.
    """
    if source is SurrogateSource.RSM:
        models = dict(models) if models is not None else rsm.reference_models(design_tag)
        missing = [name for name in RESPONSE_COLUMNS if name not in models]
        if missing:
            raise ValueError(f"missing response model(s): {missing}")
        m_mass = models[OBJECTIVE_RESPONSES[0]]
        m_stress = models[OBJECTIVE_RESPONSES[1]]
        m_buck = models[CONSTRAINT_RESPONSE]

        def objectives(X: np.ndarray) -> np.ndarray:
            return np.column_stack(
                [rsm.evaluate_batch(m_mass, X), rsm.evaluate_batch(m_stress, X)]
            )

        def constraints(X: np.ndarray) -> np.ndarray:
            return (threshold_n - rsm.evaluate_batch(m_buck, X))[:, None]

    elif source is SurrogateSource.ANN:
        if network is None:
            raise ValueError("ANN-backed problem requires a trained network")
        net = network

        def objectives(X: np.ndarray) -> np.ndarray:
            return predict_batch(net, X)[:, :2]

        def constraints(X: np.ndarray) -> np.ndarray:
            return (threshold_n - predict_batch(net, X)[:, 2])[:, None]

    else:
        raise ValueError(f"unknown surrogate source {source!r}")

    return ProblemSpec(
        n_vars=3,
        lower=DESIGN_BOUNDS.low_array(),
        upper=DESIGN_BOUNDS.high_array(),
        objectives=objectives,
        constraints=constraints,
    )


def select_optimum(front_objectives: np.ndarray) -> int:
    """Front point of minimum Euclidean norm after per-objective normalization.

    Objectives are centered and scaled to unit (population) standard deviation
    across the front; a zero-variance objective contributes nothing.  Ties go
    to the lower index.
    """
    f = np.atleast_2d(np.asarray(front_objectives, dtype=float))
    if f.shape[0] == 0:
        raise ValueError("front must be non-empty")
    if f.shape[0] == 1:
        return 0
    mean = f.mean(axis=0)
    std = f.std(axis=0)
    z = np.zeros_like(f)
    nz = std > 0
    z[:, nz] = (f[:, nz] - mean[nz]) / std[nz]
    return int(np.argmin(np.sqrt((z**2).sum(axis=1))))


def extract_extremes(front_objectives: np.ndarray) -> tuple[int, int]:
    """Indices of the minimal-mass and minimal-stress front points."""
    f = np.atleast_2d(np.asarray(front_objectives, dtype=float))
    if f.shape[0] == 0:
        raise ValueError("front must be non-empty")
    return int(np.argmin(f[:, 0])), int(np.argmin(f[:, 1]))


@dataclass(frozen=True)
class GridFront:
    """Nondominated feasible subset of a full lattice evaluation."""

    designs: np.ndarray  # (k, 3)
    objectives: np.ndarray  # (k, 2) mass, stress
    buckling: np.ndarray  # (k,)
    levels: int

    def __post_init__(self):
        for name in ("designs", "objectives", "buckling"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def grid_pareto_oracle(
    design_tag: DesignTag,
    models: Optional[Mapping[str, rsm.RsmModel]] = None,
    levels: int = DEFAULT_GRID_LEVELS,
    threshold_n: float = DEFAULT_BUCKLING_THRESHOLD_N,
) -> GridFront:
    """Exact nondominated feasible set of the levels^3 lattice over the box.

    Independent of the evolutionary optimizer: evaluates every lattice point,
    drops constraint violators, and keeps a row iff no other row is at least
    as good in both objectives and better in one.
    """
    if levels < 2:
        raise ValueError("need at least 2 levels per axis")
    models = dict(models) if models is not None else rsm.reference_models(design_tag)
    low = DESIGN_BOUNDS.low_array()
    high = DESIGN_BOUNDS.high_array()
    axes = [np.linspace(low[j], high[j], levels) for j in range(3)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)

    mass = rsm.evaluate_batch(models[OBJECTIVE_RESPONSES[0]], pts)
    stress = rsm.evaluate_batch(models[OBJECTIVE_RESPONSES[1]], pts)
    buck = rsm.evaluate_batch(models[CONSTRAINT_RESPONSE], pts)
    feasible = buck >= threshold_n
    pts, mass, stress, buck = pts[feasible], mass[feasible], stress[feasible], buck[feasible]
    if pts.shape[0] == 0:
        return GridFront(
            designs=np.empty((0, 3)),
            objectives=np.empty((0, 2)),
            buckling=np.empty(0),
            levels=levels,
        )

    # Skyline sweep: sort by (mass, stress); a mass group survives iff its
    # minimum stress strictly undercuts everything at lower mass, and within
    # a surviving group exactly the minimum-stress rows are nondominated.
    order = np.lexsort((stress, mass))
    mass_s, stress_s = mass[order], stress[order]
    new_group = np.empty(mass_s.size, dtype=bool)
    new_group[0] = True
    new_group[1:] = mass_s[1:] != mass_s[:-1]
    starts = np.nonzero(new_group)[0]
    group_min = np.minimum.reduceat(stress_s, starts)
    best_before = np.concatenate(([np.inf], np.minimum.accumulate(group_min)[:-1]))
    group_keeps = group_min < best_before
    group_id = np.cumsum(new_group) - 1
    keep_sorted = group_keeps[group_id] & (stress_s == group_min[group_id])
    keep = order[keep_sorted]
    keep = keep[np.lexsort((pts[keep, 2], pts[keep, 1], pts[keep, 0], stress[keep], mass[keep]))]
    return GridFront(
        designs=pts[keep],
        objectives=np.column_stack([mass[keep], stress[keep]]),
        buckling=buck[keep],
        levels=levels,
    )


def fingerprint_models(models: Mapping[str, rsm.RsmModel]) -> str:
    """Short stable digest of a model set, for result provenance."""
    payload = json.dumps(
        {name: models[name].to_record() for name in sorted(models)}, sort_keys=True
    )
    return hashlib.sha256(payload.encode("ascii")).hexdigest()[:16]


def fingerprint_network(net: TrainedNetwork) -> str:
    """Short stable digest of a trained network, for result provenance."""
    h = hashlib.sha256()
    h.update(repr(net.shape.layer_sizes).encode("ascii"))
    h.update(net.params.to_vector().tobytes())
    h.update(net.input_stats.mean.tobytes() + net.input_stats.std.tobytes())
    h.update(net.output_stats.mean.tobytes() + net.output_stats.std.tobytes())
    return h.hexdigest()[:16]


def explore(
    problem: DesignProblem,
    ga: GaConfig,
    *,
    models: Optional[Mapping[str, rsm.RsmModel]] = None,
    network: Optional[TrainedNetwork] = None,
) -> ExplorationResult:
    """Optimize the disc problem and name the mass/stress extremes and optimum."""
    if problem.source is SurrogateSource.RSM:
        models = dict(models) if models is not None else rsm.reference_models(problem.design_tag)
        fingerprint = fingerprint_models(models)
    else:
        if network is None:
            raise ValueError("ANN exploration requires a trained network")
        fingerprint = fingerprint_network(network)
    spec = build_problem(
        problem.design_tag,
        problem.source,
        models=models,
        network=network,
        threshold_n=problem.threshold_n,
    )
    result = nsga2.optimize(spec, ga)
    if not result.front:
        raise EmptyFrontError(
            f"no feasible solution found for design {problem.design_tag.value} "
            f"({problem.source.value} surrogate, threshold {problem.threshold_n} N)"
        )
    designs = np.array([ind.x for ind in result.front])
    objectives = np.array([ind.objectives for ind in result.front])
    i_mass, i_stress = extract_extremes(objectives)
    i_opt = select_optimum(objectives)
    provenance = {
        "design_tag": problem.design_tag.value,
        "source": problem.source.value,
        "threshold_n": problem.threshold_n,
        "population_size": ga.population_size,
        "generations": ga.generations,
        "seed": ga.seed,
        "surrogate_fingerprint": fingerprint,
    }
    return ExplorationResult(
        problem=problem,
        front_designs=designs,
        front_objectives=objectives,
        minimal_mass_index=i_mass,
        minimal_stress_index=i_stress,
        optimum_index=i_opt,
        provenance=provenance,
    )


def _trial_seed_pairs(seed: int, trials: int) -> list[tuple[int, int]]:
    """Per-trial (split, init) seeds, shared across cells so trials are paired."""
    draws = np.random.default_rng(seed).integers(0, 2**31 - 1, size=(trials, 2))
    return [(int(a), int(b)) for a, b in draws]


def _study_trial(args: tuple) -> tuple[str, float, float]:
    """One train/evaluate trial; returns a status tag so divergence is countable."""
    (designs, responses, tag_value, hidden, train_count, split_seed, init_seed, cfg_fields) = args
    data = Dataset(
        designs=designs, responses=responses, design_tag=DesignTag(tag_value)
    )
    train_data, test_data = split(data, train_count, seed=split_seed)
    shape = NetworkShape(n_inputs=3, hidden_layers=tuple(hidden), n_outputs=3)
    cfg = TrainConfig(**dict(cfg_fields, seed=init_seed))
    try:
        net = train(shape, train_data, cfg)
    except TrainingDivergenceError:
        return ("diverged", float("nan"), float("nan"))
    test_err = float(
        mean_abs_percent_error(test_data.responses, predict_batch(net, test_data.designs)).mean()
    )
    all_err = float(
        mean_abs_percent_error(data.responses, predict_batch(net, data.designs)).mean()
    )
    return ("ok", test_err, all_err)


def _run_trials(tasks: list[tuple], workers: int) -> list[tuple[str, float, float]]:
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_study_trial, tasks))
    return [_study_trial(t) for t in tasks]


def _aggregate_cell(key: str, outcomes: Sequence[tuple[str, float, float]]) -> StudyCell:
    good = [(t, a) for status, t, a in outcomes if status == "ok"]
    diverged = sum(1 for status, _, _ in outcomes if status == "diverged")
    if not good:
        return StudyCell(key, float("nan"), None, float("nan"), None, 0, diverged)
    tests = np.array([t for t, _ in good])
    alls = np.array([a for _, a in good])
    test_std = float(tests.std(ddof=1)) if len(good) >= 2 else None
    all_std = float(alls.std(ddof=1)) if len(good) >= 2 else None
    return StudyCell(
        key=key,
        test_mean=float(tests.mean()),
        test_std=test_std,
        all_mean=float(alls.mean()),
        all_std=all_std,
        trials=len(good),
        divergences=diverged,
    )


def run_network_size_study(
    data: Dataset,
    layer_counts: Sequence[int] = (1, 2, 3),
    neuron_counts: Sequence[int] = (10, 20, 30, 40),
    trials: int = 10,
    seed: int = 0,
    train_count: int = 100,
    base_config: TrainConfig = TrainConfig(),
    workers: int = 1,
) -> StudyReport:
    """Prediction error versus hidden-layer count and width.

    Each cell trains ``trials`` networks on fresh train/test splits (the same
    split sequence for every cell, so comparisons between cells are paired)
    and reports mean and standard deviation of the error over Test rows and
    over All rows.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if not 1 <= train_count < len(data):
        raise ValueError(f"train_count must leave a test remainder of {len(data)} rows")
    seeds = _trial_seed_pairs(seed, trials)
    cfg_fields = {
        "max_iterations": base_config.max_iterations,
        "tolerance": base_config.tolerance,
        "initial_alpha": base_config.initial_alpha,
        "initial_beta": base_config.initial_beta,
        "adapt_hyperparams": base_config.adapt_hyperparams,
    }
    cells = []
    for n_layers in layer_counts:
        for width in neuron_counts:
            hidden = (width,) * n_layers
            tasks = [
                (data.designs, data.responses, data.design_tag.value, hidden,
                 train_count, split_seed, init_seed, cfg_fields)
                for split_seed, init_seed in seeds
            ]
            outcomes = _run_trials(tasks, workers)
            cells.append(_aggregate_cell(f"{n_layers}x{width}", outcomes))
    return StudyReport(axis="network_size", cells=tuple(cells))


def run_training_size_study(
    data: Dataset,
    sizes: Sequence[int] = (40, 60, 80, 100, 120),
    trials: int = 10,
    seed: int = 0,
    hidden_layers: Sequence[int] = (20, 20),
    base_config: TrainConfig = TrainConfig(),
    workers: int = 1,
) -> StudyReport:
    """Prediction error versus training-set size at a fixed network shape."""
    if trials < 1:
        raise ValueError("need at least one trial")
    if max(sizes) >= len(data):
        raise ValueError(
            f"largest size {max(sizes)} must leave a test remainder of {len(data)} rows"
        )
    seeds = _trial_seed_pairs(seed, trials)
    cfg_fields = {
        "max_iterations": base_config.max_iterations,
        "tolerance": base_config.tolerance,
        "initial_alpha": base_config.initial_alpha,
        "initial_beta": base_config.initial_beta,
        "adapt_hyperparams": base_config.adapt_hyperparams,
    }
    hidden = tuple(hidden_layers)
    cells = []
    for size in sizes:
        tasks = [
            (data.designs, data.responses, data.design_tag.value, hidden,
             size, split_seed, init_seed, cfg_fields)
            for split_seed, init_seed in seeds
        ]
        outcomes = _run_trials(tasks, workers)
        cells.append(_aggregate_cell(f"n{size}", outcomes))
    return StudyReport(axis="training_size", cells=tuple(cells))
