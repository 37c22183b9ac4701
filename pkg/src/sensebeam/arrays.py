"""ULA geometry, steering vectors, line-of-sight channels, and CSI reconstruction.

All angles are radians and all powers are linear watts; degree and dB/dBm
conversions happen at the config/CLI boundary only.
"""

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array at the access point.

    ``spacing_over_wavelength`` is the inter-antenna spacing in carrier
    wavelengths (0.5 for the usual half-wavelength layout).
    """

    n_tx: int
    n_rx: int
    spacing_over_wavelength: float = 0.5
    wavelength_m: float = 0.1

    def __post_init__(self) -> None:
        if self.n_tx < 1 or self.n_rx < 1:
            raise ValueError("antenna counts must be >= 1")
        if self.spacing_over_wavelength <= 0:
            raise ValueError("spacing_over_wavelength must be positive")
        if self.wavelength_m <= 0:
            raise ValueError("wavelength_m must be positive")


@dataclass(frozen=True)
class ErGroundTruth:
    """True per-receiver parameters: bearing, range, and radar cross section."""

    angle_rad: float
    distance_m: float
    rcs: float = 1.0

    def __post_init__(self) -> None:
        if self.distance_m <= 0:
            raise ValueError("distance_m must be positive")
        if not -np.pi / 2 < self.angle_rad < np.pi / 2:
            raise ValueError("angle_rad must lie in (-pi/2, pi/2)")
        if self.rcs <= 0:
            raise ValueError("rcs must be positive")


@dataclass(frozen=True)
class PriorEstimate:
    """Previous-block estimate of one receiver plus its hard error bounds.

    The true angle/distance are guaranteed to lie within +-bound of the bar
    values when the truth is drawn by the simulation harness.
    """

    angle_bar_rad: float
    distance_bar_m: float
    angle_bound_rad: float = 0.0
    distance_bound_m: float = 0.0

    def __post_init__(self) -> None:
        if self.angle_bound_rad < 0 or self.distance_bound_m < 0:
            raise ValueError("error bounds must be nonnegative")


def _steering(count: int, ratio: float, angle: float) -> np.ndarray:
    n = np.arange(count)
    return np.exp(1j * TWO_PI * ratio * np.sin(angle) * n)


def _steering_derivative(count: int, ratio: float, angle: float) -> np.ndarray:
    n = np.arange(count)
    return 1j * TWO_PI * ratio * np.cos(angle) * n * _steering(count, ratio, angle)


def steering_tx(geom: ArrayGeometry, angle: float) -> np.ndarray:
    """Transmit steering vector; entry n is exp(j*2pi*n*(d/lambda)*sin(angle))."""
    return _steering(geom.n_tx, geom.spacing_over_wavelength, angle)


def steering_rx(geom: ArrayGeometry, angle: float) -> np.ndarray:
    """Receive steering vector (length n_rx)."""
    return _steering(geom.n_rx, geom.spacing_over_wavelength, angle)


def steering_derivative_tx(geom: ArrayGeometry, angle: float) -> np.ndarray:
    """d/d(angle) of steering_tx; entry 0 is always zero."""
    return _steering_derivative(geom.n_tx, geom.spacing_over_wavelength, angle)


def steering_derivative_rx(geom: ArrayGeometry, angle: float) -> np.ndarray:
    """d/d(angle) of steering_rx."""
    return _steering_derivative(geom.n_rx, geom.spacing_over_wavelength, angle)


def channel(geom: ArrayGeometry, er: ErGroundTruth, rho0: float) -> np.ndarray:
    """Line-of-sight downlink channel sqrt(rho0/d^2) * e^{j*2pi*d/lambda} * a_t."""
    if rho0 <= 0:
        raise ValueError("rho0 must be positive")
    amp = np.sqrt(rho0) / er.distance_m
    phase = np.exp(1j * TWO_PI * er.distance_m / geom.wavelength_m)
    return amp * phase * steering_tx(geom, er.angle_rad)


def path_gain(er: ErGroundTruth, rho0: float, wavelength_m: float) -> complex:
    """Round-trip echo gain: modulus sqrt(rho0*rcs)/d^2, phase (2pi/lambda)*2d.

    The phase is twice the one-way channel phase; the complex exponential
    keeps it reduced to the principal value.
    """
    if rho0 <= 0:
        raise ValueError("rho0 must be positive")
    mod = np.sqrt(rho0 * er.rcs) / er.distance_m**2
    return complex(mod * np.exp(1j * 2.0 * TWO_PI * er.distance_m / wavelength_m))


def construct_csi(
    alpha_hat: complex,
    theta_hat: float,
    beta: float,
    rho0: float,
    geom: ArrayGeometry,
) -> np.ndarray:
    """Rebuild the downlink channel from an estimated echo gain and angle.

    Halving the principal-valued phase of alpha_hat leaves a global +-1 sign
    ambiguity; harvested power h^H R h is invariant to it, so the ambiguity is
    accepted rather than resolved.
    """
    if abs(alpha_hat) == 0:
        raise ValueError("alpha_hat must be nonzero")
    scale = np.sqrt(abs(alpha_hat)) * (rho0 / beta) ** 0.25
    phase = np.exp(1j * np.angle(alpha_hat) / 2.0)
    return scale * phase * steering_tx(geom, theta_hat)
