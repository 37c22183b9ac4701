"""Scenario configuration: flat YAML keys, degree/dB units at the boundary.

All simulation code consumes the converted properties (radians, linear
watts); the raw dB/dBm/degree fields exist only for loading and reporting.
"""

from dataclasses import dataclass, fields, replace

import numpy as np
import yaml

from .arrays import ArrayGeometry, PriorEstimate

SCHEMES = ("proposed", "perfect", "isotropic", "equal-time")
SCHEME_CHOICES = SCHEMES + ("all",)
ESTIMATORS = ("ml", "crb-sampled")
TRUTH_DRAWS = ("uniform", "truncated-gaussian")
GAMMA_AUTO = "auto"


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """One complete experiment description (hashable; lists stored as tuples)."""

    n_tx: int = 8
    n_rx: int = 8
    spacing_over_wavelength: float = 0.5
    wavelength_m: float = 0.1
    angles_bar_deg: tuple = (0.0, 30.0, 60.0)
    distances_bar_m: tuple = (5.0, 8.0, 10.0)
    rcs: tuple = (1.0, 1.0, 1.0)
    angle_bound_deg: float = 5.0
    distance_bound_m: float = 2.0
    rho0_db: float = -40.0
    noise_dbm: float = -50.0
    p_max_dbm: float = 30.0
    horizon_symbols: int = 200
    gamma: object = GAMMA_AUTO
    scheme: str = "proposed"
    estimator: str = "crb-sampled"
    trials: int = 100
    seed: int = 2026
    truth_draw: str = "uniform"

    def __post_init__(self) -> None:
        for name in ("angles_bar_deg", "distances_bar_m", "rcs"):
            value = getattr(self, name)
            if not isinstance(value, tuple):
                object.__setattr__(self, name, tuple(float(v) for v in value))
        k = len(self.angles_bar_deg)
        if k < 1:
            raise ValueError("need at least one receiver")
        if len(self.distances_bar_m) != k or len(self.rcs) != k:
            raise ValueError("angles_bar_deg, distances_bar_m, rcs lengths differ")
        if not k <= self.n_tx <= self.n_rx:
            raise ValueError("model assumes K <= n_tx <= n_rx")
        if self.horizon_symbols < self.n_tx:
            raise ValueError("horizon_symbols must be at least n_tx")
        if self.angle_bound_deg < 0 or self.distance_bound_m < 0:
            raise ValueError("error bounds must be nonnegative")
        if any(d <= self.distance_bound_m for d in self.distances_bar_m):
            raise ValueError("distance bound reaches zero range")
        if any(abs(a) + self.angle_bound_deg >= 90.0 for a in self.angles_bar_deg):
            raise ValueError("angle box leaves the (-90, 90) degree sector")
        if any(b <= 0 for b in self.rcs):
            raise ValueError("rcs entries must be positive")
        if self.gamma != GAMMA_AUTO:
            if not isinstance(self.gamma, (int, float)) or self.gamma <= 0:
                raise ValueError("gamma must be positive or 'auto'")
            object.__setattr__(self, "gamma", float(self.gamma))
        if self.scheme not in SCHEME_CHOICES:
            raise ValueError(f"scheme must be one of {SCHEME_CHOICES}")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")
        if self.truth_draw not in TRUTH_DRAWS:
            raise ValueError(f"truth_draw must be one of {TRUTH_DRAWS}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")

    # -- converted views -----------------------------------------------------

    @property
    def k(self) -> int:
        return len(self.angles_bar_deg)

    @property
    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry(
            n_tx=self.n_tx,
            n_rx=self.n_rx,
            spacing_over_wavelength=self.spacing_over_wavelength,
            wavelength_m=self.wavelength_m,
        )

    @property
    def rho0(self) -> float:
        return db_to_linear(self.rho0_db)

    @property
    def noise_var(self) -> float:
        return dbm_to_watts(self.noise_dbm)

    @property
    def p_max_w(self) -> float:
        return dbm_to_watts(self.p_max_dbm)

    @property
    def angles_bar_rad(self) -> tuple:
        return tuple(np.deg2rad(a) for a in self.angles_bar_deg)

    @property
    def angle_bound_rad(self) -> float:
        return float(np.deg2rad(self.angle_bound_deg))

    def priors(self) -> list[PriorEstimate]:
        return [
            PriorEstimate(
                angle_bar_rad=a,
                distance_bar_m=d,
                angle_bound_rad=self.angle_bound_rad,
                distance_bound_m=self.distance_bound_m,
            )
            for a, d in zip(self.angles_bar_rad, self.distances_bar_m)
        ]

    def with_overrides(self, **kwargs) -> "ScenarioConfig":
        return replace(self, **kwargs)


def config_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ValueError("config must be a mapping of scalar keys")
    known = {f.name for f in fields(ScenarioConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    return ScenarioConfig(**data)


def load_config(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        data = {}
    return config_from_dict(data)
