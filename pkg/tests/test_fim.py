"""Fisher information assembly and the trace-CRB metric.

The main oracle differentiates the noiseless echo mean numerically and builds
the information matrix as (2/noise_var) * Re(J^H J); the closed-form assembly
must agree on random scenarios.
"""

import numpy as np
import pytest

from sensebeam.arrays import ArrayGeometry, steering_rx, steering_tx
from sensebeam.fim import (
    Fim,
    TargetSet,
    UnidentifiableParametersError,
    assemble_fim,
    crb_diagonal,
    crb_trace,
)


def _echo_mean(angles, gains, geom, x):
    """Noiseless stacked echo vec(A_r diag(b) A_t^T X)."""
    a_t = np.column_stack([steering_tx(geom, th) for th in angles])
    a_r = np.column_stack([steering_rx(geom, th) for th in angles])
    return (a_r @ np.diag(gains) @ a_t.T @ x).ravel(order="F")


def _fim_finite_difference(targets, x, noise_var, h=1e-6):
    """Oracle: numerical Jacobian of the mean over (theta, Re b, Im b)."""
    k = targets.k
    geom = targets.geometry

    def mean(eta):
        angles = eta[:k]
        gains = eta[k : 2 * k] + 1j * eta[2 * k :]
        return _echo_mean(angles, gains, geom, x)

    eta0 = np.concatenate(
        [targets.angles, targets.gains.real, targets.gains.imag]
    )
    cols = []
    for i in range(3 * k):
        step = np.zeros(3 * k)
        step[i] = h
        cols.append((mean(eta0 + step) - mean(eta0 - step)) / (2 * h))
    jac = np.column_stack(cols)
    return (2.0 / noise_var) * np.real(jac.conj().T @ jac)


def _random_scenario(rng, k, n_tx=6, n_rx=8, tau=10):
    geom = ArrayGeometry(n_tx=n_tx, n_rx=n_rx)
    angles = rng.uniform(-1.2, 1.2, size=k)
    # keep angles separated so the FIM stays well conditioned
    while k > 1 and np.min(np.diff(np.sort(angles))) < 0.15:
        angles = rng.uniform(-1.2, 1.2, size=k)
    gains = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    targets = TargetSet(angles=angles, gains=gains, geometry=geom)
    x = rng.standard_normal((n_tx, tau)) + 1j * rng.standard_normal((n_tx, tau))
    return targets, x


@pytest.mark.parametrize("k", [1, 2, 3])
def test_fim_matches_finite_difference_jacobian(k):
    rng = np.random.default_rng(100 + k)
    for _ in range(7):
        targets, x = _random_scenario(rng, k)
        noise_var = 1e-2
        tau = x.shape[1]
        s_x = x @ x.conj().T / tau
        fim = assemble_fim(targets, s_x, tau=tau, noise_var=noise_var)
        oracle = _fim_finite_difference(targets, x, noise_var)
        err = np.linalg.norm(fim.matrix - oracle) / np.linalg.norm(oracle)
        assert err <= 1e-5


def test_fim_linear_in_tau():
    rng = np.random.default_rng(11)
    targets, x = _random_scenario(rng, 2)
    s_x = x @ x.conj().T / x.shape[1]
    f1 = assemble_fim(targets, s_x, tau=1, noise_var=1e-3).matrix
    f7 = assemble_fim(targets, s_x, tau=7, noise_var=1e-3).matrix
    assert np.allclose(f7, 7.0 * f1, rtol=1e-12)


def test_fim_linear_in_covariance():
    rng = np.random.default_rng(12)
    targets, _ = _random_scenario(rng, 3)
    n = targets.geometry.n_tx
    m1 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    m2 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    s1, s2 = m1 @ m1.conj().T, m2 @ m2.conj().T
    fa = assemble_fim(targets, s1, tau=4, noise_var=1e-3).matrix
    fb = assemble_fim(targets, s2, tau=4, noise_var=1e-3).matrix
    fsum = assemble_fim(targets, s1 + s2, tau=4, noise_var=1e-3).matrix
    assert np.linalg.norm(fsum - (fa + fb)) <= 1e-12 * np.linalg.norm(fsum)


def test_fim_symmetric_positive_semidefinite():
    rng = np.random.default_rng(13)
    for k in (1, 2, 3):
        targets, x = _random_scenario(rng, k)
        s_x = x @ x.conj().T / x.shape[1]
        f = assemble_fim(targets, s_x, tau=5, noise_var=1e-4).matrix
        assert np.allclose(f, f.T)
        assert np.linalg.eigvalsh(f)[0] >= -1e-9 * np.linalg.norm(f)


def test_fim_gain_block_closed_form_single_broadside_target():
    # K=1 at broadside with isotropic covariance: gain-block diagonal is
    # (2 tau / noise_var) * n_rx * p_total
    geom = ArrayGeometry(n_tx=8, n_rx=8)
    targets = TargetSet(angles=[0.0], gains=[0.5 + 0.5j], geometry=geom)
    p_total = 1.0
    s_x = (p_total / 8) * np.eye(8, dtype=complex)
    tau, noise_var = 10, 1e-8
    f = assemble_fim(targets, s_x, tau=tau, noise_var=noise_var).matrix
    expected = 2.0 * tau / noise_var * 8 * p_total
    assert np.isclose(f[1, 1], expected, rtol=1e-12)
    assert np.isclose(f[2, 2], expected, rtol=1e-12)
    assert np.isclose(f[1, 2], 0.0, atol=1e-6 * expected)


def test_crb_trace_matches_dense_inverse():
    rng = np.random.default_rng(14)
    targets, x = _random_scenario(rng, 3)
    s_x = x @ x.conj().T / x.shape[1]
    fim = assemble_fim(targets, s_x, tau=20, noise_var=1e-4)
    direct = float(np.trace(np.linalg.inv(fim.matrix)))
    assert np.isclose(crb_trace(fim), direct, rtol=1e-8)


def test_crb_trace_halves_when_duration_doubles():
    rng = np.random.default_rng(15)
    targets, x = _random_scenario(rng, 2)
    s_x = x @ x.conj().T / x.shape[1]
    c1 = crb_trace(assemble_fim(targets, s_x, tau=6, noise_var=1e-4))
    c2 = crb_trace(assemble_fim(targets, s_x, tau=12, noise_var=1e-4))
    assert np.isclose(c2, c1 / 2.0, rtol=1e-10)


def test_crb_diagonal_consistent_with_trace():
    rng = np.random.default_rng(16)
    targets, x = _random_scenario(rng, 2)
    s_x = x @ x.conj().T / x.shape[1]
    fim = assemble_fim(targets, s_x, tau=6, noise_var=1e-4)
    diag = crb_diagonal(fim)
    assert diag.shape == (6,)
    assert np.all(diag > 0)
    assert np.isclose(diag.sum(), crb_trace(fim), rtol=1e-10)


def test_identical_angles_are_unidentifiable():
    geom = ArrayGeometry(n_tx=6, n_rx=8)
    targets = TargetSet(
        angles=[0.3, 0.3], gains=[1.0 + 0.0j, 0.5 - 0.2j], geometry=geom
    )
    s_x = np.eye(6, dtype=complex) / 6
    fim = assemble_fim(targets, s_x, tau=5, noise_var=1e-4)
    with pytest.raises(UnidentifiableParametersError):
        crb_trace(fim)


def test_unilluminated_target_is_unidentifiable():
    # a beam orthogonal to one target's transmit steering leaves that target
    # invisible, so its parameters carry no information
    geom = ArrayGeometry(n_tx=6, n_rx=8)
    targets = TargetSet(
        angles=[-0.4, 0.5], gains=[1.0, 1.0 + 1.0j], geometry=geom
    )
    blind = np.conj(steering_tx(geom, -0.4))
    v = steering_tx(geom, 0.5)
    v = v - blind * (np.vdot(blind, v) / np.vdot(blind, blind))
    s_x = np.outer(v, v.conj())
    fim = assemble_fim(targets, s_x, tau=5, noise_var=1e-4)
    with pytest.raises(UnidentifiableParametersError):
        crb_trace(fim)


def test_assemble_validation():
    geom = ArrayGeometry(n_tx=4, n_rx=6)
    targets = TargetSet(angles=[0.1], gains=[1.0], geometry=geom)
    s_x = np.eye(4, dtype=complex)
    with pytest.raises(ValueError):
        assemble_fim(targets, s_x, tau=0, noise_var=1e-4)
    with pytest.raises(ValueError):
        assemble_fim(targets, s_x, tau=5, noise_var=0.0)
    with pytest.raises(ValueError):
        assemble_fim(targets, np.eye(5, dtype=complex), tau=5, noise_var=1e-4)
    with pytest.raises(ValueError):
        TargetSet(angles=[0.1, 0.2], gains=[1.0], geometry=geom)
    with pytest.raises(ValueError):
        TargetSet(angles=np.zeros(5), gains=np.ones(5), geometry=geom)


def test_fim_dataclass_reports_k():
    f = Fim(matrix=np.eye(9), noise_var=1.0, duration=3)
    assert f.k == 3
