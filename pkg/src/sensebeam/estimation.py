"""Sensing waveform synthesis, echo generation, and angle/gain estimation.

Two estimator backends share one result type: a box-constrained grid maximum
likelihood search with closed-form least-squares gains, and a fast surrogate
that samples estimates from the Gaussian CRB ellipsoid around the truth.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .arrays import ArrayGeometry, PriorEstimate, steering_rx, steering_tx
from .fim import Fim, TargetSet, UnidentifiableParametersError

METHOD_ML = "ml"
METHOD_CRB_SAMPLED = "crb-sampled"

GRID_POINTS_PER_DIM = 51
REFINE_ROUNDS = 5
REFINE_POINTS = 21
RIDGE = 1e-10


@dataclass(frozen=True)
class WaveformBlock:
    """Transmit samples X (n_tx x tau) whose sample covariance hits a target."""

    samples: np.ndarray

    @property
    def n_tx(self) -> int:
        return self.samples.shape[0]

    @property
    def tau(self) -> int:
        return self.samples.shape[1]

    def sample_covariance(self) -> np.ndarray:
        return self.samples @ self.samples.conj().T / self.tau


@dataclass(frozen=True)
class EchoBlock:
    """Received samples Y (n_rx x tau) and the noise variance that shaped them."""

    samples: np.ndarray
    noise_var: float


@dataclass(frozen=True)
class EstimationResult:
    """Per-receiver angle and complex-gain estimates plus the fit residual."""

    theta_hat: np.ndarray
    alpha_hat: np.ndarray
    residual: float
    method: str


def synthesize_waveform(s_x: np.ndarray, tau: int) -> WaveformBlock:
    """Deterministic X with (1/tau) X X^H equal to s_x.

    X = sqrt(tau) V Lambda^{1/2} Q with Q the leading rows of the unitary
    DFT, so the rows of Q are exactly orthonormal for any tau >= n_tx.
    """
    s_x = np.asarray(s_x, dtype=complex)
    n = s_x.shape[0]
    if s_x.shape != (n, n):
        raise ValueError("s_x must be square")
    if tau < n:
        raise ValueError("tau must be >= n_tx for orthonormal rows")
    vals, vecs = np.linalg.eigh(0.5 * (s_x + s_x.conj().T))
    if vals[0] < -1e-10 * max(vals[-1], 1e-300):
        raise ValueError("s_x must be positive semidefinite")
    vals = np.clip(vals, 0.0, None)
    q = scipy.linalg.dft(tau, scale="sqrtn")[:n, :]
    x = np.sqrt(tau) * (vecs * np.sqrt(vals)) @ q
    return WaveformBlock(samples=x)


def generate_echo(
    x: WaveformBlock, targets: TargetSet, noise_var: float, seed
) -> EchoBlock:
    """Y = sum_k alpha_k a_r(theta_k) a_t(theta_k)^T X + Z with CN(0, noise_var) Z."""
    if noise_var < 0:
        raise ValueError("noise_var must be nonnegative")
    geom = targets.geometry
    if x.n_tx != geom.n_tx:
        raise ValueError("waveform row count does not match the geometry")
    a_t = np.column_stack([steering_tx(geom, th) for th in targets.angles])
    a_r = np.column_stack([steering_rx(geom, th) for th in targets.angles])
    y = a_r @ np.diag(targets.gains) @ a_t.T @ x.samples
    if noise_var > 0:
        rng = np.random.default_rng(seed)
        scale = np.sqrt(noise_var / 2.0)
        z = scale * (
            rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
        )
        y = y + z
    return EchoBlock(samples=y, noise_var=noise_var)


def _gain_fit(angles: np.ndarray, geom: ArrayGeometry, y: np.ndarray, x: np.ndarray):
    """Least-squares gains for fixed angles (normal equations of the bilinear fit)."""
    a_t = np.column_stack([steering_tx(geom, th) for th in angles])
    a_r = np.column_stack([steering_rx(geom, th) for th in angles])
    p = x @ x.conj().T
    g = (a_r.conj().T @ a_r) * (a_t.T @ p @ a_t.conj()).T
    w = np.einsum("ic,ij,jc->c", a_r.conj(), y @ x.conj().T, a_t.conj())
    k = angles.size
    sol = np.linalg.solve(g + RIDGE * np.trace(g).real / k * np.eye(k), w)
    return sol, w, g


class _MlSearch:
    """Concentrated-likelihood evaluation over per-receiver angle grids.

    For angles (one per receiver) the score is w^H G^{-1} w where G and w are
    the normal-equation blocks of the linear gain fit; maximizing the score
    minimizes the fit residual.
    """

    def __init__(self, y: np.ndarray, x: np.ndarray, geom: ArrayGeometry):
        self.y = y
        self.x = x
        self.geom = geom
        self.p = x @ x.conj().T
        self.u = y @ x.conj().T
        self.y_energy = float(np.linalg.norm(y) ** 2)

    def _tables(self, angles: np.ndarray):
        """Pairwise G entries and w entries for a flat list of candidate angles."""
        a_t = np.column_stack([steering_tx(self.geom, th) for th in angles])
        a_r = np.column_stack([steering_rx(self.geom, th) for th in angles])
        m = (a_r.conj().T @ a_r) * (a_t.T @ self.p @ a_t.conj()).T
        w = np.einsum("ic,ij,jc->c", a_r.conj(), self.u, a_t.conj())
        return m, w

    def score_combos(self, angle_lists: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
        """Score every combination of one angle per receiver; returns (idx, scores)."""
        flat = np.concatenate(angle_lists)
        offsets = np.cumsum([0] + [a.size for a in angle_lists[:-1]])
        m, w = self._tables(flat)
        grids = np.meshgrid(
            *[off + np.arange(a.size) for off, a in zip(offsets, angle_lists)],
            indexing="ij",
        )
        idx = np.stack([g.ravel() for g in grids], axis=1)
        scores = np.empty(idx.shape[0])
        k = len(angle_lists)
        eye = np.eye(k)
        for lo in range(0, idx.shape[0], 200_000):
            part = idx[lo : lo + 200_000]
            gb = m[part[:, :, None], part[:, None, :]]
            wb = w[part]
            ridge = RIDGE * np.einsum("cii->c", gb).real[:, None, None] / k
            sol = np.linalg.solve(gb + ridge * eye, wb[:, :, None])[:, :, 0]
            scores[lo : lo + 200_000] = np.real(np.einsum("ck,ck->c", wb.conj(), sol))
        return idx, scores

    def score_single(self, angles: np.ndarray) -> float:
        m, w = self._tables(angles)
        k = angles.size
        ridge = RIDGE * np.trace(m).real / k
        sol = np.linalg.solve(m + ridge * np.eye(k), w)
        return float(np.real(w.conj() @ sol))


def estimate_ml(
    y: EchoBlock,
    x: WaveformBlock,
    priors: list[PriorEstimate],
    geom: ArrayGeometry,
) -> EstimationResult:
    """Box-constrained grid search over angles with closed-form gain fits.

    Searches the product of per-receiver intervals [bar - bound, bar + bound]
    on a coarse grid, then shrinks per-coordinate grids around the incumbent.
    Zero-width boxes skip the search and fit gains at the prior angles.
    """
    k = len(priors)
    if k < 1:
        raise ValueError("need at least one prior")
    if not k <= geom.n_tx <= geom.n_rx:
        raise ValueError("model assumes K <= n_tx <= n_rx")
    if y.samples.shape != (geom.n_rx, x.tau):
        raise ValueError("echo dimensions do not match waveform and geometry")

    search = _MlSearch(y.samples, x.samples, geom)
    centers = np.array([p.angle_bar_rad for p in priors])
    bounds = np.array([p.angle_bound_rad for p in priors])
    lo, hi = centers - bounds, centers + bounds

    theta = centers.copy()
    if np.any(bounds > 0):
        angle_lists = [
            np.linspace(lo[i], hi[i], GRID_POINTS_PER_DIM)
            if bounds[i] > 0
            else np.array([centers[i]])
            for i in range(k)
        ]
        idx, scores = search.score_combos(angle_lists)
        flat = np.concatenate(angle_lists)
        theta = flat[idx[int(np.argmax(scores))]].copy()

        # per-coordinate refinement with shrinking local grids inside the box
        step = np.array(
            [
                (hi[i] - lo[i]) / (GRID_POINTS_PER_DIM - 1) if bounds[i] > 0 else 0.0
                for i in range(k)
            ]
        )
        for _ in range(REFINE_ROUNDS):
            for i in range(k):
                if step[i] == 0.0:
                    continue
                local = np.clip(
                    np.linspace(theta[i] - step[i], theta[i] + step[i], REFINE_POINTS),
                    lo[i],
                    hi[i],
                )
                best_val, best_angle = -np.inf, theta[i]
                for cand in local:
                    trial = theta.copy()
                    trial[i] = cand
                    val = search.score_single(trial)
                    if val > best_val:
                        best_val, best_angle = val, cand
                theta[i] = best_angle
            step = step * (2.0 / (REFINE_POINTS - 1))

    gains, w, g = _gain_fit(theta, geom, y.samples, x.samples)
    residual = max(search.y_energy - float(np.real(w.conj() @ gains)), 0.0)
    return EstimationResult(
        theta_hat=theta, alpha_hat=gains, residual=residual, method=METHOD_ML
    )


def estimate_crb_sampled(truth: TargetSet, fim: Fim, seed) -> EstimationResult:
    """Truth plus a zero-mean Gaussian draw with covariance F^{-1}.

    The draw uses the Cholesky factor of F, so the sample is exact for the
    information matrix supplied and deterministic per seed.
    """
    f = fim.matrix
    try:
        chol = np.linalg.cholesky(f)
    except np.linalg.LinAlgError as exc:
        raise UnidentifiableParametersError(
            "information matrix is not positive definite"
        ) from exc
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(f.shape[0])
    delta = scipy.linalg.solve_triangular(chol.T, z, lower=False)
    k = truth.k
    theta = truth.angles + delta[:k]
    gains = truth.gains + delta[k : 2 * k] + 1j * delta[2 * k :]
    return EstimationResult(
        theta_hat=theta,
        alpha_hat=gains,
        residual=0.0,
        method=METHOD_CRB_SAMPLED,
    )
