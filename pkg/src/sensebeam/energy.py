"""Stage-2 design: max-min harvested-power covariance and its evaluation.

The semidefinite solve is followed by an exact eigenbeam re-weighting (a
small linear program over the returned beams) that removes the cone engine's
tolerance-level slack; on problems with a known closed form the polished
optimum matches it to working precision.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .sdp import SdpProblem, solve

RANK_EPS = 1e-8
BEAM_EPS = 1e-12


class EnergyDesignError(RuntimeError):
    """Max-min covariance optimization failed to certify a solution."""


@dataclass(frozen=True)
class EnergyDesign:
    """Optimized transmit covariance, attained worst-receiver power, and rank."""

    r_x: np.ndarray
    e_star: float
    rank: int


def harvested_power(h: np.ndarray, r_x: np.ndarray) -> float:
    """h^H R_x h, clamped at zero against solver-tolerance negatives."""
    h = np.asarray(h)
    val = float(np.real(h.conj() @ r_x @ h))
    return max(val, 0.0)


def min_avg_harvested(
    h_true: list, r_x: np.ndarray, tau: int, horizon: int
) -> float:
    """Worst per-receiver power scaled by the fraction of the block transmitting."""
    if not 0 <= tau <= horizon:
        raise ValueError("tau must lie in [0, horizon]")
    worst = min(harvested_power(h, r_x) for h in h_true)
    return (horizon - tau) / horizon * worst


def eigen_beams(r_x: np.ndarray) -> list[tuple[np.ndarray, float]]:
    """Beam directions and power weights of a PSD covariance.

    Weights sum to tr(r_x) up to the discard threshold; rebuilding
    sum w_i v_i v_i^H reproduces r_x.
    """
    vals, vecs = np.linalg.eigh(0.5 * (r_x + r_x.conj().T))
    total = max(float(vals.sum()), 0.0)
    out = []
    for i in range(vals.size - 1, -1, -1):
        if vals[i] > BEAM_EPS * max(total, 1e-300):
            out.append((vecs[:, i].copy(), float(vals[i])))
    return out


def _reweight_beams(r_x: np.ndarray, csi: list, p_max: float):
    """Re-optimize beam powers exactly for the returned eigen-directions.

    The original eigenvalues are feasible, so the re-weighted max-min value
    can only improve; errors in the beam weights are suppressed to linear
    programming accuracy.
    """
    vals, vecs = np.linalg.eigh(0.5 * (r_x + r_x.conj().T))
    keep = vals > RANK_EPS * max(float(vals.max()), 0.0)
    if not np.any(keep):
        return r_x
    vecs = vecs[:, keep]
    m = vecs.shape[1]
    k = len(csi)
    gains = np.array([[abs(np.vdot(v, h)) ** 2 for v in vecs.T] for h in csi])
    c = np.zeros(m + 1)
    c[-1] = -1.0
    a_ub = np.zeros((k + 1, m + 1))
    b_ub = np.zeros(k + 1)
    a_ub[:k, :m] = -gains
    a_ub[:k, -1] = 1.0
    a_ub[k, :m] = 1.0
    b_ub[k] = p_max
    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=b_ub,
        bounds=[(0.0, None)] * (m + 1),
        method="highs",
    )
    if not res.success:
        return r_x
    return (vecs * res.x[:m]) @ vecs.conj().T


def optimize_energy_covariance(csi: list, p_max: float) -> EnergyDesign:
    """max E s.t. h_k^H R h_k >= E for all k, tr(R) <= p_max, R PSD."""
    if p_max <= 0:
        raise ValueError("p_max must be positive")
    if len(csi) < 1:
        raise ValueError("need at least one channel")
    csi = [np.asarray(h, dtype=complex) for h in csi]
    n = csi[0].size
    if len(csi) > n:
        raise ValueError("model assumes K <= n_tx")
    norms = [float(np.vdot(h, h).real) for h in csi]
    if min(norms) <= 0:
        raise ValueError("channels must be nonzero")
    # normalize the constraint rows to O(1) for the cone engine
    scale = max(norms)

    prob = SdpProblem()
    prob.matrix_variable("r_x", n)
    prob.scalar_variable("e")
    for h in csi:
        prob.add_inequality(
            prob.quad_form("r_x", h / np.sqrt(scale)) - prob.scalar("e")
        )
    prob.add_inequality(prob.scalar("e"))
    prob.add_inequality(prob.trace_of("r_x") * -1.0 + p_max)
    prob.minimize(prob.scalar("e") * -1.0)
    sol = solve(prob)
    if sol.status != "optimal":
        raise EnergyDesignError(f"max-min solve ended {sol.status}: {sol.diagnostic}")

    r_x = _reweight_beams(sol.values["r_x"], csi, p_max)
    r_x = 0.5 * (r_x + r_x.conj().T)
    e_star = min(harvested_power(h, r_x) for h in csi)
    vals = np.linalg.eigvalsh(r_x)
    rank = int(np.sum(vals > RANK_EPS * max(float(np.real(np.trace(r_x))), 0.0)))
    return EnergyDesign(r_x=r_x, e_star=e_star, rank=rank)
