"""Stage-1 design: CRB-minimizing sensing covariance and minimal duration.

The covariance problem is solved once at unit duration; the exact 1/tau law
of the trace bound then gives the shortest duration meeting the accuracy
target analytically.
"""

import math
from dataclasses import dataclass

import numpy as np

from .arrays import ArrayGeometry, ErGroundTruth, PriorEstimate, path_gain
from .fim import TargetSet, assemble_fim, crb_trace
from .sdp import SdpProblem, SdpSolution, solve

DEFAULT_SDP_TOL = 1e-8


class SensingDesignError(RuntimeError):
    """Stage-1 covariance optimization failed to certify a solution."""


class DurationInfeasibleError(ValueError):
    """No duration within the block meets the accuracy target."""


@dataclass(frozen=True)
class SensingDesign:
    """Optimized sensing covariance plus the selected duration."""

    s_x: np.ndarray
    tau: int
    crb_unit: float
    crb_at_tau: float


@dataclass(frozen=True)
class CovarianceSolution:
    """Covariance optimum with both objective readings.

    ``crb_unit`` re-evaluates the trace bound directly at the returned
    covariance; ``sdp_objective_crb`` maps the solver objective back to the
    same units. The two agreeing is the correctness certificate.
    """

    s_x: np.ndarray
    crb_unit: float
    sdp_objective_crb: float
    sdp: SdpSolution


def targets_from_priors(
    priors: list[PriorEstimate],
    rcs: np.ndarray,
    geom: ArrayGeometry,
    rho0: float,
) -> TargetSet:
    """Nominal target set at the prior point; gains synthesized from range/RCS."""
    rcs = np.broadcast_to(np.asarray(rcs, dtype=float), (len(priors),))
    gains = [
        path_gain(
            ErGroundTruth(angle_rad=p.angle_bar_rad, distance_m=p.distance_bar_m, rcs=b),
            rho0,
            geom.wavelength_m,
        )
        for p, b in zip(priors, rcs)
    ]
    angles = np.array([p.angle_bar_rad for p in priors])
    return TargetSet(angles=angles, gains=np.array(gains), geometry=geom)


def build_covariance_problem(
    targets: TargetSet, p_max: float, noise_var: float
) -> tuple[SdpProblem, np.ndarray, float]:
    """Trace-bound minimization as one PSD variable plus 3K bordered LMIs.

    Each auxiliary scalar t_i upper-bounds one diagonal entry of the inverse
    information matrix through a Schur-complement block [[F, e_i], [e_i^T, t_i]].
    For numerical conditioning the information matrix is symmetrically scaled
    by the isotropic-covariance diagonal (entries span ~9 decades otherwise);
    the scaling is absorbed exactly into the objective weights, so
    objective_value * scale equals the unscaled trace bound. Returns
    (problem, per-scalar weights, scale).
    """
    if p_max <= 0:
        raise ValueError("p_max must be positive")
    if noise_var <= 0:
        raise ValueError("noise_var must be positive")
    geom = targets.geometry
    n, k3 = geom.n_tx, 3 * targets.k

    s_iso = (p_max / n) * np.eye(n, dtype=complex)
    f_iso = assemble_fim(targets, s_iso, tau=1.0, noise_var=noise_var).matrix
    diag = np.diag(f_iso)
    if np.any(diag <= 0):
        raise SensingDesignError(
            "prior point carries no information for some parameter"
        )
    whiten = 1.0 / np.sqrt(diag)
    weights = whiten**2
    scale = float(weights.max())
    weights = weights / scale

    prob = SdpProblem()
    prob.matrix_variable("s_x", n)
    for i in range(k3):
        prob.scalar_variable(f"t{i}")

    fim_map = prob.matrix_map(
        "s_x",
        lambda basis: np.einsum(
            "i,ij,j->ij",
            whiten,
            assemble_fim(targets, basis, tau=1.0, noise_var=noise_var).matrix,
            whiten,
        ),
        k3,
    )
    for i in range(k3):
        block = prob.matrix_expr(k3 + 1)
        SdpProblem.embed_block(block, fim_map, 0, 0)
        block.const[i, k3] += 1.0
        block.const[k3, i] += 1.0
        prob.add_scalar_entry(block, k3, k3, prob.scalar(f"t{i}"))
        prob.add_lmi(block)

    objective = prob.scalar("t0") * weights[0]
    for i in range(1, k3):
        objective = objective + prob.scalar(f"t{i}") * weights[i]
    prob.minimize(objective)
    prob.add_equality(prob.trace_of("s_x"), p_max)
    return prob, weights, scale


def optimize_sensing_covariance(
    targets: TargetSet, p_max: float, noise_var: float, tol: float = DEFAULT_SDP_TOL
) -> CovarianceSolution:
    """Solve the covariance problem and certify the objective against the bound."""
    prob, _, scale = build_covariance_problem(targets, p_max, noise_var)
    sol = solve(prob, tol=tol)
    if sol.status != "optimal":
        raise SensingDesignError(
            f"covariance solve ended {sol.status}: {sol.diagnostic}"
        )
    s_x = sol.values["s_x"]
    # clip solver-tolerance negative eigenvalues so downstream synthesis
    # receives an exactly PSD matrix with the exact power budget
    vals, vecs = np.linalg.eigh(s_x)
    s_x = (vecs * np.clip(vals, 0.0, None)) @ vecs.conj().T
    s_x *= p_max / np.trace(s_x).real
    crb_unit = crb_trace(assemble_fim(targets, s_x, tau=1.0, noise_var=noise_var))
    return CovarianceSolution(
        s_x=s_x,
        crb_unit=crb_unit,
        sdp_objective_crb=sol.objective_value * scale,
        sdp=sol,
    )


def minimal_duration(
    crb_unit: float, gamma: float, geom: ArrayGeometry, horizon: int
) -> int:
    """Shortest duration with crb_unit/tau <= gamma, floored at n_tx.

    Raises DurationInfeasibleError when even the full block cannot meet gamma.
    """
    if crb_unit <= 0:
        raise ValueError("crb_unit must be positive")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if horizon < geom.n_tx:
        raise ValueError("horizon must be at least n_tx")
    tau = max(geom.n_tx, math.ceil(crb_unit / gamma))
    if tau > horizon:
        raise DurationInfeasibleError(
            f"accuracy target needs tau={tau} > horizon {horizon}"
        )
    return tau


def design_stage_one(
    targets: TargetSet,
    p_max: float,
    noise_var: float,
    gamma: float,
    horizon: int,
) -> SensingDesign:
    """Joint covariance-and-duration design at the prior point."""
    cov = optimize_sensing_covariance(targets, p_max, noise_var)
    tau = minimal_duration(cov.crb_unit, gamma, targets.geometry, horizon)
    return SensingDesign(
        s_x=cov.s_x,
        tau=tau,
        crb_unit=cov.crb_unit,
        crb_at_tau=cov.crb_unit / tau,
    )
