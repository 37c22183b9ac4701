"""Two-stage block simulation, Monte-Carlo aggregation, and parameter sweeps.

Every random quantity derives from the master seed and the trial index, so a
(config, seed) pair fully determines all outputs. The stage-1 covariance
design depends only on scenario physics, never on the trial, and is cached.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .arrays import ErGroundTruth, channel, construct_csi, path_gain
from .config import GAMMA_AUTO, SCHEMES, ScenarioConfig
from .energy import min_avg_harvested, optimize_energy_covariance
from .estimation import (
    METHOD_CRB_SAMPLED,
    METHOD_ML,
    estimate_crb_sampled,
    estimate_ml,
    generate_echo,
    synthesize_waveform,
)
from .fim import TargetSet, UnidentifiableParametersError, assemble_fim
from .sensing import (
    CovarianceSolution,
    DurationInfeasibleError,
    minimal_duration,
    optimize_sensing_covariance,
    targets_from_priors,
)

AUTO_TAU_TARGETS = (9, 12, 17, 24, 34, 48, 68, 96)
AUTO_TRIALS_CAP = 150

CSV_COLUMNS = (
    "sweep_param",
    "sweep_value",
    "scheme",
    "estimator",
    "n_tx",
    "n_rx",
    "p_max_dbm",
    "gamma",
    "tau_star",
    "crb_unit",
    "trials",
    "min_avg_harvested_uw_mean",
    "min_avg_harvested_uw_std",
    "infeasible_count",
)

_COVARIANCE_CACHE: dict = {}


@dataclass(frozen=True)
class BlockResult:
    """Outcome of one simulated block for one scheme."""

    scheme: str
    trial: int
    feasible: bool
    tau: int
    crb_unit: float
    crb_at_tau: float
    per_er_harvested: tuple
    min_avg_harvested: float
    theta_err: tuple
    alpha_err: tuple
    note: str = ""


@dataclass(frozen=True)
class SchemeStats:
    """Aggregate of min_avg_harvested over the feasible trials of one scheme."""

    scheme: str
    mean_w: float
    median_w: float
    std_w: float
    trials: int
    infeasible_count: int
    tau: int
    crb_unit: float
    values: tuple


@dataclass(frozen=True)
class RunSummary:
    config: ScenarioConfig
    gamma_used: float
    per_scheme: dict


@dataclass(frozen=True)
class SweepSpec:
    """One swept parameter with its value list and the schemes to evaluate."""

    param: str
    values: tuple
    schemes: tuple = SCHEMES

    def __post_init__(self) -> None:
        if self.param not in ("gamma", "p_max_dbm", "n_antennas"):
            raise ValueError("param must be gamma, p_max_dbm, or n_antennas")
        if len(self.values) == 0:
            raise ValueError("value list must be nonempty")
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "schemes", tuple(self.schemes))


def _design_key(config: ScenarioConfig) -> tuple:
    return (
        config.n_tx,
        config.n_rx,
        config.spacing_over_wavelength,
        config.wavelength_m,
        config.angles_bar_deg,
        config.distances_bar_m,
        config.rcs,
        config.rho0_db,
        config.noise_dbm,
        config.p_max_dbm,
    )


def stage_one_covariance(config: ScenarioConfig) -> CovarianceSolution:
    """CRB-optimal sensing covariance for the scenario's prior point (cached)."""
    key = _design_key(config)
    hit = _COVARIANCE_CACHE.get(key)
    if hit is None:
        targets = targets_from_priors(
            config.priors(), np.array(config.rcs), config.geometry, config.rho0
        )
        hit = optimize_sensing_covariance(targets, config.p_max_w, config.noise_var)
        _COVARIANCE_CACHE[key] = hit
    return hit


def _draw_truth(config: ScenarioConfig, trial: int):
    rng = np.random.default_rng([config.seed, trial])
    k = config.k
    centers = np.array(config.angles_bar_rad)
    dists = np.array(config.distances_bar_m)
    if config.truth_draw == "uniform":
        d_theta = rng.uniform(-config.angle_bound_rad, config.angle_bound_rad, k)
        d_dist = rng.uniform(-config.distance_bound_m, config.distance_bound_m, k)
    else:
        # centered normals at half the bound, redrawn into the box
        d_theta = _truncated_normal(rng, config.angle_bound_rad, k)
        d_dist = _truncated_normal(rng, config.distance_bound_m, k)
    angles = centers + d_theta
    distances = dists + d_dist
    ers = [
        ErGroundTruth(angle_rad=a, distance_m=d, rcs=b)
        for a, d, b in zip(angles, distances, config.rcs)
    ]
    return ers


def _truncated_normal(rng, bound: float, k: int) -> np.ndarray:
    if bound == 0.0:
        return np.zeros(k)
    out = rng.normal(0.0, bound / 2.0, k)
    for i in range(k):
        while abs(out[i]) > bound:
            out[i] = rng.normal(0.0, bound / 2.0)
    return out


def _targets_from_ers(config: ScenarioConfig, ers: list) -> TargetSet:
    geom = config.geometry
    return TargetSet(
        angles=np.array([er.angle_rad for er in ers]),
        gains=np.array(
            [path_gain(er, config.rho0, geom.wavelength_m) for er in ers]
        ),
        geometry=geom,
    )


def draw_truth_targets(config: ScenarioConfig, trial: int) -> TargetSet:
    """The trial's ground-truth angles and round-trip gains as a TargetSet."""
    return _targets_from_ers(config, _draw_truth(config, trial))


def _estimate(config: ScenarioConfig, truth: TargetSet, s_x, tau: int, trial: int):
    seed = [config.seed, trial, 1]
    if config.estimator == METHOD_ML:
        wf = synthesize_waveform(s_x, tau)
        echo = generate_echo(wf, truth, config.noise_var, seed)
        return estimate_ml(echo, wf, config.priors(), config.geometry)
    fim = assemble_fim(truth, s_x, tau=tau, noise_var=config.noise_var)
    return estimate_crb_sampled(truth, fim, seed)


def _infeasible(scheme: str, trial: int, note: str) -> BlockResult:
    return BlockResult(
        scheme=scheme,
        trial=trial,
        feasible=False,
        tau=0,
        crb_unit=0.0,
        crb_at_tau=0.0,
        per_er_harvested=(),
        min_avg_harvested=0.0,
        theta_err=(),
        alpha_err=(),
        note=note,
    )


def run_block(config: ScenarioConfig, trial: int, scheme: str | None = None) -> BlockResult:
    """Simulate one block for one scheme and score it on the true channels."""
    scheme = scheme or config.scheme
    if scheme not in SCHEMES:
        raise ValueError(f"run_block needs a single scheme, got {scheme!r}")
    geom = config.geometry
    horizon = config.horizon_symbols
    p_max = config.p_max_w

    ers = _draw_truth(config, trial)
    h_true = [channel(geom, er, config.rho0) for er in ers]

    if scheme == "isotropic":
        r_x = (p_max / geom.n_tx) * np.eye(geom.n_tx, dtype=complex)
        per_er = tuple(float(np.real(h.conj() @ r_x @ h)) for h in h_true)
        return BlockResult(
            scheme=scheme,
            trial=trial,
            feasible=True,
            tau=0,
            crb_unit=0.0,
            crb_at_tau=0.0,
            per_er_harvested=per_er,
            min_avg_harvested=min_avg_harvested(h_true, r_x, 0, horizon),
            theta_err=(),
            alpha_err=(),
        )

    if scheme == "perfect":
        design = optimize_energy_covariance(h_true, p_max)
        per_er = tuple(float(np.real(h.conj() @ design.r_x @ h)) for h in h_true)
        return BlockResult(
            scheme=scheme,
            trial=trial,
            feasible=True,
            tau=0,
            crb_unit=0.0,
            crb_at_tau=0.0,
            per_er_harvested=per_er,
            min_avg_harvested=min_avg_harvested(h_true, design.r_x, 0, horizon),
            theta_err=(),
            alpha_err=(),
        )

    # sensing-based schemes share the stage-1 covariance design
    cov = stage_one_covariance(config)
    if scheme == "proposed":
        if config.gamma == GAMMA_AUTO:
            raise ValueError("resolve gamma before run_block (use run_monte_carlo)")
        try:
            tau = minimal_duration(cov.crb_unit, config.gamma, geom, horizon)
        except DurationInfeasibleError as exc:
            return _infeasible(scheme, trial, str(exc))
    else:  # equal-time
        tau = math.ceil(horizon / 2)

    truth = _targets_from_ers(config, ers)
    try:
        est = _estimate(config, truth, cov.s_x, tau, trial)
    except UnidentifiableParametersError as exc:
        return _infeasible(scheme, trial, str(exc))

    csi = [
        construct_csi(a_hat, th_hat, er.rcs, config.rho0, geom)
        for a_hat, th_hat, er in zip(est.alpha_hat, est.theta_hat, ers)
    ]
    design = optimize_energy_covariance(csi, p_max)
    per_er = tuple(float(np.real(h.conj() @ design.r_x @ h)) for h in h_true)
    return BlockResult(
        scheme=scheme,
        trial=trial,
        feasible=True,
        tau=tau,
        crb_unit=cov.crb_unit,
        crb_at_tau=cov.crb_unit / tau,
        per_er_harvested=per_er,
        min_avg_harvested=min_avg_harvested(h_true, design.r_x, tau, horizon),
        theta_err=tuple(est.theta_hat - truth.angles),
        alpha_err=tuple(est.alpha_hat - truth.gains),
    )


def _aggregate(scheme: str, results: list) -> SchemeStats:
    vals = [r.min_avg_harvested for r in results if r.feasible]
    infeasible = sum(1 for r in results if not r.feasible)
    taus = [r.tau for r in results if r.feasible]
    crbs = [r.crb_unit for r in results if r.feasible]
    arr = np.array(vals) if vals else np.zeros(0)
    return SchemeStats(
        scheme=scheme,
        mean_w=float(arr.mean()) if arr.size else 0.0,
        median_w=float(np.median(arr)) if arr.size else 0.0,
        std_w=float(arr.std()) if arr.size else 0.0,
        trials=len(results),
        infeasible_count=infeasible,
        tau=taus[0] if taus else 0,
        crb_unit=crbs[0] if crbs else 0.0,
        values=tuple(vals),
    )


def resolve_gamma(config: ScenarioConfig) -> float:
    """The scenario's accuracy target: configured value, or grid-optimized."""
    if config.gamma != GAMMA_AUTO:
        return float(config.gamma)
    return auto_gamma(config)


def default_gamma_grid(config: ScenarioConfig) -> tuple:
    """Scale-free candidate targets mapped from duration targets.

    Each candidate gives the duration tau in AUTO_TAU_TARGETS exactly, so the
    grid adapts to the scenario's unit bound and always stays feasible.
    """
    crb_unit = stage_one_covariance(config).crb_unit
    taus = sorted(
        {
            max(config.n_tx, t)
            for t in AUTO_TAU_TARGETS
            if max(config.n_tx, t) < config.horizon_symbols
        }
    )
    # ascending gamma = descending duration
    return tuple(crb_unit / t for t in reversed(taus))


def auto_gamma(config: ScenarioConfig, grid=None) -> float:
    """Pick the accuracy target maximizing the proposed scheme's mean outcome.

    Ties go to the smaller (stricter) candidate. Candidates whose duration
    never fits the block are skipped; an entirely infeasible grid raises.
    """
    if grid is None:
        grid = default_gamma_grid(config)
    grid = tuple(float(g) for g in grid)
    if len(grid) == 0:
        raise ValueError("gamma grid must be nonempty")
    trials = min(config.trials, AUTO_TRIALS_CAP)
    best_gamma, best_mean = None, -np.inf
    for gamma in sorted(grid):
        candidate = config.with_overrides(
            gamma=gamma, scheme="proposed", trials=trials
        )
        results = [run_block(candidate, t, "proposed") for t in range(trials)]
        stats = _aggregate("proposed", results)
        if stats.infeasible_count == stats.trials:
            continue
        if stats.mean_w > best_mean:
            best_gamma, best_mean = gamma, stats.mean_w
    if best_gamma is None:
        raise DurationInfeasibleError("every gamma candidate is infeasible")
    return best_gamma


def run_monte_carlo(config: ScenarioConfig) -> RunSummary:
    """All requested schemes over the configured trial count."""
    schemes = SCHEMES if config.scheme == "all" else (config.scheme,)
    gamma_used = (
        resolve_gamma(config)
        if "proposed" in schemes
        else (config.gamma if config.gamma != GAMMA_AUTO else 0.0)
    )
    resolved = config.with_overrides(gamma=gamma_used) if gamma_used else config
    per_scheme = {}
    for scheme in schemes:
        results = [run_block(resolved, t, scheme) for t in range(config.trials)]
        per_scheme[scheme] = _aggregate(scheme, results)
    return RunSummary(config=config, gamma_used=float(gamma_used), per_scheme=per_scheme)


def _sweep_point(config: ScenarioConfig, param: str, value) -> ScenarioConfig:
    if param == "gamma":
        return config.with_overrides(gamma=float(value))
    if param == "p_max_dbm":
        return config.with_overrides(p_max_dbm=float(value))
    return config.with_overrides(n_tx=int(value), n_rx=int(value))


def sweep(config: ScenarioConfig, spec: SweepSpec) -> list:
    """One row per (swept value, scheme), in deterministic order."""
    rows = []
    for value in spec.values:
        point = _sweep_point(config, spec.param, value)
        if "proposed" in spec.schemes:
            gamma_used = resolve_gamma(point)
        elif point.gamma != GAMMA_AUTO:
            gamma_used = float(point.gamma)
        else:
            gamma_used = 0.0
        resolved = point.with_overrides(gamma=gamma_used) if gamma_used else point
        for scheme in spec.schemes:
            results = [run_block(resolved, t, scheme) for t in range(point.trials)]
            stats = _aggregate(scheme, results)
            rows.append(_row(spec.param, value, point, scheme, stats, gamma_used))
    return rows


def _row(param, value, config, scheme, stats: SchemeStats, gamma_used: float) -> dict:
    estimates = scheme in ("proposed", "equal-time")
    return {
        "sweep_param": param,
        "sweep_value": _fmt(value),
        "scheme": scheme,
        "estimator": config.estimator if estimates else "none",
        "n_tx": config.n_tx,
        "n_rx": config.n_rx,
        "p_max_dbm": _fmt(config.p_max_dbm),
        "gamma": _fmt(gamma_used),
        "tau_star": stats.tau,
        "crb_unit": _fmt(stats.crb_unit),
        "trials": stats.trials,
        "min_avg_harvested_uw_mean": _fmt(stats.mean_w * 1e6),
        "min_avg_harvested_uw_std": _fmt(stats.std_w * 1e6),
        "infeasible_count": stats.infeasible_count,
    }


def summary_rows(summary: RunSummary) -> list:
    """Single-point rows (no sweep) using the same column contract."""
    return [
        _row("none", 0.0, summary.config, scheme, stats, summary.gamma_used)
        for scheme, stats in summary.per_scheme.items()
    ]


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return f"{float(value):.6g}"


def write_csv(rows: list, path: str) -> None:
    """Byte-deterministic CSV with the fixed column contract."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
