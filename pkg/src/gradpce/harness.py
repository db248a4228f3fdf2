"""Experiment drivers: coherence sweeps, recovery rates, approximation error.

Every run is reproducible: the configuration seed is split into one stream
per trial and, within a trial, one stream per grid point, so results do not
depend on scheduling or on which grid points are requested together.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import Callable

import numpy as np

from .design import assemble_gradient_enhanced, assemble_standard, design_matrices, mic
from .l1solver import SolveSpec, solve
from .pce import PceBasis
from .polynomials import Measure
from .sampling import generator, sample, split_stream

SUCCESS_TOL = 1e-3
MODES = ("standard", "gradient-enhanced", "standard-double")
KINDS = ("mic-sweep", "recovery-vs-N", "recovery-vs-s", "rmse")
MATRIX_IDS = ("values", "stacked", "preconditioned")

_DEFAULT_TRIALS = {"mic-sweep": 10, "recovery-vs-N": 100, "recovery-vs-s": 100, "rmse": 10}
_RELATIVE_EPSILON = 1e-8
_VALIDATION_STREAM = 0x56414C
_VALIDATION_POINTS = 10_000
_RECOVERY_OPT_TOL = 1e-6
_RMSE_OPT_TOL = 1e-8


# -- test functions ----------------------------------------------------------


@dataclass(frozen=True)
class TargetFunction:
    """Benchmark function on [-1, 1]^dim with an analytic gradient."""

    name: str
    description: str
    values: Callable[[np.ndarray], np.ndarray]
    gradients: Callable[[np.ndarray], np.ndarray]


def _sum_of_squares(points: np.ndarray) -> np.ndarray:
    return np.sum(points * points, axis=1)


def _sum_of_squares_gradient(points: np.ndarray) -> np.ndarray:
    return 2.0 * points


def _gaussian_bump(points: np.ndarray) -> np.ndarray:
    z = 0.5 * (points + 1.0) - 0.375
    return np.exp(-np.sum(0.01 * z * z, axis=1))


def _gaussian_bump_gradient(points: np.ndarray) -> np.ndarray:
    z = 0.5 * (points + 1.0) - 0.375
    return -0.01 * z * _gaussian_bump(points)[:, None]


_SIN_FREQUENCY = 16.0 / 15.0
_SIN_SHIFT = 0.7


def _sinusoids(points: np.ndarray) -> np.ndarray:
    u = _SIN_FREQUENCY * points - _SIN_SHIFT
    s = np.sin(u)
    return np.sum(0.3 + s + s * s, axis=1)


def _sinusoids_gradient(points: np.ndarray) -> np.ndarray:
    u = _SIN_FREQUENCY * points - _SIN_SHIFT
    return _SIN_FREQUENCY * np.cos(u) * (1.0 + 2.0 * np.sin(u))


TARGETS = {
    "f1": TargetFunction(
        "f1", "sum of squared coordinates", _sum_of_squares, _sum_of_squares_gradient
    ),
    "f2": TargetFunction(
        "f2", "gaussian bump centered off the origin", _gaussian_bump, _gaussian_bump_gradient
    ),
    "f3": TargetFunction(
        "f3", "sum of shifted sinusoids", _sinusoids, _sinusoids_gradient
    ),
}


# -- configuration -----------------------------------------------------------


def direction_count(fraction: float, dim: int) -> int:
    """Number of gradient directions for a fraction of the dimensions.

    Rounds fraction * dim to the nearest integer when it is one up to
    floating-point noise, otherwise takes the ceiling.
    """
    exact = fraction * dim
    nearest = round(exact)
    if abs(exact - nearest) <= 1e-9:
        return int(nearest)
    return int(math.ceil(exact))


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one benchmark run."""

    kind: str
    dim: int = 2
    degree: int = 20
    measure: str = "legendre"
    sample_grid: tuple[int, ...] = (20, 35, 50, 65, 80)
    sparsity: int = 8
    sparsity_grid: tuple[int, ...] = (2, 4, 6, 8, 10, 12)
    sample_count: int = 50
    trials: int | None = None
    gradient_fraction: float = 1.0
    modes: tuple[str, ...] = ("standard", "gradient-enhanced")
    target: str = "f1"
    epsilon: float | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sample_grid", tuple(int(n) for n in self.sample_grid))
        object.__setattr__(self, "sparsity_grid", tuple(int(s) for s in self.sparsity_grid))
        object.__setattr__(self, "modes", tuple(self.modes))
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.dim < 1 or self.degree < 0:
            raise ValueError("dim must be >= 1 and degree >= 0")
        Measure.parse(self.measure)
        if not self.sample_grid or any(n < 1 for n in self.sample_grid):
            raise ValueError("sample_grid must be non-empty with positive entries")
        if self.kind == "recovery-vs-s":
            if not self.sparsity_grid or any(s < 0 for s in self.sparsity_grid):
                raise ValueError("sparsity_grid must be non-empty with entries >= 0")
        if self.sparsity < 0 or self.sample_count < 1:
            raise ValueError("sparsity must be >= 0 and sample_count >= 1")
        if self.trials is not None and self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0.0 <= self.gradient_fraction <= 1.0:
            raise ValueError("gradient_fraction must lie in [0, 1]")
        if not self.modes or len(set(self.modes)) != len(self.modes):
            raise ValueError("modes must be non-empty and free of duplicates")
        for mode in self.modes:
            if mode not in MODES:
                raise ValueError(f"unknown mode {mode!r}")
        if self.kind == "rmse" and self.target not in TARGETS:
            raise ValueError(f"unknown target {self.target!r}")
        if self.epsilon is not None and self.epsilon < 0.0:
            raise ValueError("epsilon must be >= 0")

    @property
    def effective_trials(self) -> int:
        return self.trials if self.trials is not None else _DEFAULT_TRIALS[self.kind]

    @property
    def direction_count(self) -> int:
        return direction_count(self.gradient_fraction, self.dim)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    @staticmethod
    def from_dict(data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(ExperimentConfig)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return ExperimentConfig(**data)


@dataclass(frozen=True)
class TrialOutcome:
    """Result of one (trial, grid point, mode) recovery attempt."""

    mode: str
    n_samples: int
    sparsity: int
    success: bool
    error_inf: float
    rmse: float = math.nan

    @staticmethod
    def from_error(mode: str, n_samples: int, sparsity: int, error_inf: float,
                   rmse: float = math.nan) -> "TrialOutcome":
        return TrialOutcome(
            mode, n_samples, sparsity, bool(error_inf <= SUCCESS_TOL), float(error_inf), rmse
        )


# -- result tables -----------------------------------------------------------


def _cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


@dataclass(frozen=True)
class ResultTable:
    """Column-named rows with deterministic CSV and JSON renderings."""

    columns: tuple[str, ...]
    rows: tuple[tuple, ...]

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        lines.extend(",".join(_cell(v) for v in row) for row in self.rows)
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "columns": list(self.columns),
            "rows": [[v if isinstance(v, str) else _json_value(v) for v in row]
                     for row in self.rows],
        }
        return json.dumps(payload, indent=2) + "\n"

    def write(self, path, fmt: str = "csv") -> None:
        if fmt == "csv":
            text = self.to_csv()
        elif fmt == "json":
            text = self.to_json()
        else:
            raise ValueError(f"unknown format {fmt!r}")
        with open(path, "w") as handle:
            handle.write(text)


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    return float(value)


# -- fitting -----------------------------------------------------------------


def sampling_measure(basis_measure: Measure) -> Measure:
    """Sampling distribution paired with a basis measure."""
    if basis_measure.kind == "gaussian":
        return Measure.gaussian()
    return Measure.chebyshev()


def fit_sparse_expansion(
    basis: PceBasis,
    batch,
    values: np.ndarray,
    gradients: np.ndarray | None = None,
    directions=(),
    epsilon: float | None = 0.0,
    opt_tol: float = 1e-6,
    max_iters: int = 10_000,
) -> np.ndarray:
    """Recover expansion coefficients from sampled data by l1 minimization.

    With directions the weighted stacked system is solved and the result
    mapped back through the column normalizer; otherwise the value-only
    preconditioned system is used. ``epsilon=None`` applies the default
    denoising level of 1e-8 times the norm of the raw stacked data.
    """
    dirs = tuple(directions)
    if dirs:
        design = assemble_gradient_enhanced(basis, batch, values, gradients, dirs)
        matrix, rhs, raw = design.phi_hat, design.rhs, design.f_tilde
    else:
        matrix, w = assemble_standard(basis, batch)
        raw = np.asarray(values, dtype=float).reshape(-1)
        rhs = w * raw
    eps = _RELATIVE_EPSILON * float(np.linalg.norm(raw)) if epsilon is None else float(epsilon)
    result = solve(SolveSpec(matrix, rhs, epsilon=eps, opt_tol=opt_tol, max_iters=max_iters))
    if dirs:
        return design.unscale(result.coefficients)
    return result.coefficients


# -- recovery benchmarks -----------------------------------------------------


def _choose_directions(rng: np.random.Generator, dim: int, count: int) -> tuple[int, ...]:
    if count == 0:
        return ()
    return tuple(sorted(int(a) for a in rng.choice(dim, size=count, replace=False)))


def _synthetic_gradients(basis: PceBasis, points, coefficients, directions) -> np.ndarray:
    out = np.zeros((points.shape[0], basis.dim))
    for axis in directions:
        out[:, axis] = basis.gradient_matrix(points, axis) @ coefficients
    return out


def _recovery_trial(config: ExperimentConfig, basis: PceBasis, grid, trial: int):
    measure = sampling_measure(basis.families[0].measure)
    trial_seed = split_stream(config.seed, trial)
    rng = generator(split_stream(trial_seed, 0))
    q = config.direction_count
    dirs = _choose_directions(rng, config.dim, q)
    s_values = [config.sparsity] * len(grid) if config.kind == "recovery-vs-N" else list(grid)
    s_max = max(s_values)
    support = rng.choice(basis.size, size=s_max, replace=False) if s_max else np.empty(0, int)
    spikes = rng.standard_normal(s_max)
    epsilon = 0.0 if config.epsilon is None else config.epsilon
    outcomes = []
    for gi, gval in enumerate(grid):
        n = gval if config.kind == "recovery-vs-N" else config.sample_count
        s = s_values[gi]
        coeffs = np.zeros(basis.size)
        coeffs[support[:s]] = spikes[:s]
        full = sample(measure, config.dim, (1 + q) * n, split_stream(trial_seed, gi + 1))
        train = full.subset(n)
        values = basis.matrix(train.points) @ coeffs
        grads = _synthetic_gradients(basis, train.points, coeffs, dirs) if dirs else None
        for mode in config.modes:
            try:
                if mode == "standard":
                    estimate = fit_sparse_expansion(
                        basis, train, values, epsilon=epsilon, opt_tol=_RECOVERY_OPT_TOL
                    )
                elif mode == "gradient-enhanced":
                    estimate = fit_sparse_expansion(
                        basis, train, values, grads, dirs,
                        epsilon=epsilon, opt_tol=_RECOVERY_OPT_TOL,
                    )
                else:
                    doubled = basis.matrix(full.points) @ coeffs
                    estimate = fit_sparse_expansion(
                        basis, full, doubled, epsilon=epsilon, opt_tol=_RECOVERY_OPT_TOL
                    )
                error = float(np.abs(estimate - coeffs).max())
            except (ValueError, FloatingPointError):
                error = math.inf
            outcomes.append(TrialOutcome.from_error(mode, n, s, error))
    return outcomes


def _run_trials(worker, trials: int, threads: int):
    if threads <= 1:
        return [worker(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, range(trials)))


def run_recovery_benchmark(config: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Success fraction per (mode, grid point) over seeded random trials."""
    if config.kind not in ("recovery-vs-N", "recovery-vs-s"):
        raise ValueError("config kind must be recovery-vs-N or recovery-vs-s")
    basis = PceBasis.from_measure(Measure.parse(config.measure), config.dim, config.degree)
    grid = config.sample_grid if config.kind == "recovery-vs-N" else config.sparsity_grid
    max_s = config.sparsity if config.kind == "recovery-vs-N" else max(config.sparsity_grid)
    if max_s > basis.size:
        raise ValueError("sparsity exceeds the basis size")
    trials = config.effective_trials
    per_trial = _run_trials(
        lambda t: _recovery_trial(config, basis, grid, t), trials, threads
    )
    rows = []
    grid_label = "N" if config.kind == "recovery-vs-N" else "s"
    for mode in config.modes:
        for gi, gval in enumerate(grid):
            hits = sum(
                outcomes[gi * len(config.modes) + config.modes.index(mode)].success
                for outcomes in per_trial
            )
            rows.append((mode, int(gval), hits / trials))
    return ResultTable(("mode", grid_label, "success_fraction"), tuple(rows))


# -- coherence sweep ---------------------------------------------------------


def _mic_trial(config: ExperimentConfig, basis: PceBasis, trial: int):
    measure = sampling_measure(basis.families[0].measure)
    trial_seed = split_stream(config.seed, trial)
    rng = generator(split_stream(trial_seed, 0))
    dirs = _choose_directions(rng, config.dim, config.direction_count)
    out = []
    for gi, n in enumerate(config.sample_grid):
        batch = sample(measure, config.dim, n, split_stream(trial_seed, gi + 1))
        phi, phi_tilde, w, p = design_matrices(basis, batch, dirs)
        phi_hat = (w[:, None] * phi_tilde) * p[None, :]
        out.append((mic(phi), mic(phi_tilde), mic(phi_hat)))
    return out


def run_mic_sweep(config: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Average mutual coherence of the value, stacked, and weighted systems."""
    if config.kind != "mic-sweep":
        raise ValueError("config kind must be mic-sweep")
    basis = PceBasis.from_measure(Measure.parse(config.measure), config.dim, config.degree)
    trials = config.effective_trials
    per_trial = _run_trials(lambda t: _mic_trial(config, basis, t), trials, threads)
    rows = []
    for which, matrix_id in enumerate(MATRIX_IDS):
        for gi, n in enumerate(config.sample_grid):
            mean = sum(outcome[gi][which] for outcome in per_trial) / trials
            rows.append((matrix_id, int(n), mean))
    return ResultTable(("matrix_id", "N", "mic"), tuple(rows))


# -- approximation benchmark -------------------------------------------------


def _rmse_trial(config, basis, target: TargetFunction, val_matrix, val_truth, trial: int):
    measure = sampling_measure(basis.families[0].measure)
    trial_seed = split_stream(config.seed, trial)
    rng = generator(split_stream(trial_seed, 0))
    q = config.direction_count
    dirs = _choose_directions(rng, config.dim, q)
    scale = math.sqrt(val_matrix.shape[0])
    out = []
    for gi, n in enumerate(config.sample_grid):
        full = sample(measure, config.dim, (1 + q) * n, split_stream(trial_seed, gi + 1))
        train = full.subset(n)
        values = target.values(train.points)
        grads = target.gradients(train.points) if dirs else None
        for mode in config.modes:
            try:
                if mode == "standard":
                    estimate = fit_sparse_expansion(
                        basis, train, values,
                        epsilon=config.epsilon, opt_tol=_RMSE_OPT_TOL,
                    )
                elif mode == "gradient-enhanced":
                    estimate = fit_sparse_expansion(
                        basis, train, values, grads, dirs,
                        epsilon=config.epsilon, opt_tol=_RMSE_OPT_TOL,
                    )
                else:
                    estimate = fit_sparse_expansion(
                        basis, full, target.values(full.points),
                        epsilon=config.epsilon, opt_tol=_RMSE_OPT_TOL,
                    )
                rmse = float(np.linalg.norm(val_matrix @ estimate - val_truth)) / scale
            except (ValueError, FloatingPointError):
                rmse = math.inf
            out.append((mode, n, rmse))
    return out


def run_rmse_benchmark(config: ExperimentConfig, threads: int = 1,
                       target: str | None = None) -> ResultTable:
    """Median validation error per (mode, N) against a held-out uniform grid."""
    if config.kind != "rmse":
        raise ValueError("config kind must be rmse")
    basis = PceBasis.from_measure(Measure.parse(config.measure), config.dim, config.degree)
    if basis.kind != "jacobi":
        raise ValueError("approximation targets are defined on [-1, 1]^dim")
    fn = TARGETS[target] if target is not None else TARGETS[config.target]
    validation = sample(
        Measure.uniform(), config.dim, _VALIDATION_POINTS,
        split_stream(config.seed, _VALIDATION_STREAM),
    )
    val_matrix = basis.matrix(validation.points)
    val_truth = fn.values(validation.points)
    trials = config.effective_trials
    per_trial = _run_trials(
        lambda t: _rmse_trial(config, basis, fn, val_matrix, val_truth, t), trials, threads
    )
    rows = []
    for mode in config.modes:
        for gi, n in enumerate(config.sample_grid):
            position = gi * len(config.modes) + config.modes.index(mode)
            median = float(np.median([outcome[position][2] for outcome in per_trial]))
            rows.append((mode, int(n), median))
    return ResultTable(("mode", "N", "rmse"), tuple(rows))
