"""Fisher information for joint angle/complex-gain estimation and the trace-CRB metric.

The information matrix is over the 3K real parameters (angles, real parts of
the gains, imaginary parts of the gains) of K scatterers observed through a
MIMO echo with sample covariance S_x over tau symbols.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .arrays import (
    ArrayGeometry,
    steering_derivative_rx,
    steering_derivative_tx,
    steering_rx,
    steering_tx,
)

RCOND_MIN = 1e-12


class UnidentifiableParametersError(ValueError):
    """The information matrix is singular or numerically unidentifiable."""


@dataclass(frozen=True)
class TargetSet:
    """Angles and complex gains of the K scatterers, plus the array they face."""

    angles: np.ndarray
    gains: np.ndarray
    geometry: ArrayGeometry

    def __post_init__(self) -> None:
        angles = np.atleast_1d(np.asarray(self.angles, dtype=float))
        gains = np.atleast_1d(np.asarray(self.gains, dtype=complex))
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "gains", gains)
        k = angles.size
        if k < 1 or gains.size != k:
            raise ValueError("need K >= 1 angles with matching gains")
        if not k <= self.geometry.n_tx <= self.geometry.n_rx:
            raise ValueError("model assumes K <= n_tx <= n_rx")

    @property
    def k(self) -> int:
        return self.angles.size


@dataclass(frozen=True)
class Fim:
    """Real symmetric 3K x 3K Fisher information matrix."""

    matrix: np.ndarray
    noise_var: float
    duration: float

    @property
    def k(self) -> int:
        return self.matrix.shape[0] // 3


def assemble_fim(
    targets: TargetSet, s_x: np.ndarray, tau: float, noise_var: float
) -> Fim:
    """Assemble the information matrix for the echo model A_r B A_t^T X + Z.

    Entries are exactly linear in tau and in S_x. The Hadamard-block layout
    uses the conjugate of S_x, matching the transpose (not conjugate-transpose)
    transmit steering in the echo model.
    """
    if tau < 1:
        raise ValueError("tau must be >= 1")
    if noise_var <= 0:
        raise ValueError("noise_var must be positive")
    geom = targets.geometry
    s_x = np.asarray(s_x, dtype=complex)
    if s_x.shape != (geom.n_tx, geom.n_tx):
        raise ValueError(
            f"s_x must be {geom.n_tx}x{geom.n_tx} for this geometry, got {s_x.shape}"
        )

    a_t = np.column_stack([steering_tx(geom, th) for th in targets.angles])
    a_r = np.column_stack([steering_rx(geom, th) for th in targets.angles])
    d_t = np.column_stack([steering_derivative_tx(geom, th) for th in targets.angles])
    d_r = np.column_stack([steering_derivative_rx(geom, th) for th in targets.angles])
    b = np.diag(targets.gains)
    sc = s_x.conj()

    f11 = (
        (d_r.conj().T @ d_r) * (b.conj().T @ a_t.conj().T @ sc @ a_t @ b)
        + (d_r.conj().T @ a_r) * (b.conj().T @ a_t.conj().T @ sc @ d_t @ b)
        + (a_r.conj().T @ d_r) * (b.conj().T @ d_t.conj().T @ sc @ a_t @ b)
        + (a_r.conj().T @ a_r) * (b.conj().T @ d_t.conj().T @ sc @ d_t @ b)
    )
    f12 = (d_r.conj().T @ a_r) * (b.conj().T @ a_t.conj().T @ sc @ a_t) + (
        a_r.conj().T @ a_r
    ) * (b.conj().T @ d_t.conj().T @ sc @ a_t)
    f22 = (a_r.conj().T @ a_r) * (a_t.conj().T @ sc @ a_t)

    full = np.block(
        [
            [f11.real, f12.real, -f12.imag],
            [f12.real.T, f22.real, -f22.imag],
            [-f12.imag.T, -f22.imag.T, f22.real],
        ]
    )
    full *= 2.0 * tau / noise_var
    # mathematically symmetric; remove floating-point asymmetry
    full = 0.5 * (full + full.T)
    return Fim(matrix=full, noise_var=noise_var, duration=tau)


def _solve_inverse(fim: Fim) -> np.ndarray:
    """Inverse via eigendecomposition guardrail + Cholesky solves against I."""
    f = fim.matrix
    eigvals = np.linalg.eigvalsh(f)
    lo, hi = eigvals[0], eigvals[-1]
    if hi <= 0 or lo <= 0 or lo / hi < RCOND_MIN:
        raise UnidentifiableParametersError(
            f"information matrix is unidentifiable (rcond={lo / hi if hi > 0 else 0:.2e})"
        )
    cho = scipy.linalg.cho_factor(f)
    return scipy.linalg.cho_solve(cho, np.eye(f.shape[0]))


def crb_trace(fim: Fim) -> float:
    """tr(F^-1); raises UnidentifiableParametersError on ill-conditioned input."""
    return float(np.trace(_solve_inverse(fim)))


def crb_diagonal(fim: Fim) -> np.ndarray:
    """Per-parameter variance lower bounds diag(F^-1), ordered (theta, Re b, Im b)."""
    return np.diag(_solve_inverse(fim)).copy()
