"""Semidefinite modeling layer and cone-engine wrapper.

Solver answers are checked against closed forms (eigenvalues, Schur
complements) and against a brute-force grid over the 2x2 PSD cone, which
exercises the full coordinate/embedding/canonicalization path independently.
"""

import numpy as np
import pytest

from sensebeam.sdp import (
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
    SdpProblem,
    coords_to_matrix,
    hermitian_basis,
    matrix_to_coords,
    real_embedding,
    solve,
)


def _random_hermitian(rng, n):
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (m + m.conj().T)


def test_coordinate_round_trip():
    rng = np.random.default_rng(0)
    for n in (1, 2, 4, 7):
        x = _random_hermitian(rng, n)
        coords = matrix_to_coords(x)
        assert coords.shape == (n * n,)
        back = coords_to_matrix(coords, n)
        assert np.allclose(back, x, atol=1e-14)
    # real symmetric path
    s = rng.standard_normal((5, 5))
    s = 0.5 * (s + s.T)
    coords = matrix_to_coords(s, hermitian=False)
    assert coords.shape == (15,)
    assert np.allclose(coords_to_matrix(coords, 5, hermitian=False), s)


def test_basis_matches_coordinates():
    rng = np.random.default_rng(1)
    x = _random_hermitian(rng, 3)
    coords = matrix_to_coords(x)
    rebuilt = sum(
        c * b for c, b in zip(coords, hermitian_basis(3), strict=True)
    )
    assert np.allclose(rebuilt, x, atol=1e-14)


def test_real_embedding_eigenvalues_double_up():
    rng = np.random.default_rng(2)
    x = _random_hermitian(rng, 4)
    emb = real_embedding(x)
    ev_x = np.linalg.eigvalsh(x)
    ev_emb = np.linalg.eigvalsh(emb)
    assert np.allclose(ev_emb, np.sort(np.repeat(ev_x, 2)), atol=1e-10)


def test_scalar_builders_evaluate_correctly():
    rng = np.random.default_rng(3)
    prob = SdpProblem()
    prob.matrix_variable("x", 3)
    x0 = _random_hermitian(rng, 3)
    x0 = x0 @ x0.conj().T  # make it PSD so it is a feasible value
    coords = matrix_to_coords(x0)

    tr = prob.trace_of("x")
    assert np.isclose(tr.coeffs @ coords, np.trace(x0).real, atol=1e-12)

    w = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    td = prob.trace_dot("x", w)
    assert np.isclose(
        td.coeffs @ coords, np.real(np.trace(w.conj().T @ x0)), atol=1e-10
    )

    v = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    qf = prob.quad_form("x", v)
    assert np.isclose(qf.coeffs @ coords, np.real(v.conj() @ x0 @ v), atol=1e-10)


def test_matrix_map_evaluates_linear_image():
    rng = np.random.default_rng(4)
    prob = SdpProblem()
    prob.matrix_variable("x", 3)
    m = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    expr = prob.matrix_map("x", lambda b: m @ b @ m.conj().T, 2)
    x0 = _random_hermitian(rng, 3)
    coords = matrix_to_coords(x0)
    img = expr.coeffs @ coords + expr.const
    assert np.allclose(img, m @ x0 @ m.conj().T, atol=1e-10)


def test_min_trace_dot_on_spectraplex_is_min_eigenvalue():
    # min Re tr(C X) s.t. tr X = 1, X >= 0 equals lambda_min(C)
    rng = np.random.default_rng(5)
    c = _random_hermitian(rng, 4)
    prob = SdpProblem()
    prob.matrix_variable("x", 4)
    prob.minimize(prob.trace_dot("x", c))
    prob.add_equality(prob.trace_of("x"), 1.0)
    sol = solve(prob)
    assert sol.status == STATUS_OPTIMAL
    assert np.isclose(sol.objective_value, np.linalg.eigvalsh(c)[0], atol=1e-7)
    x = sol.values["x"]
    assert np.allclose(x, x.conj().T)
    assert np.isclose(np.trace(x).real, 1.0, atol=1e-7)
    assert np.linalg.eigvalsh(x)[0] >= -1e-7


def test_spectraplex_matches_psd_cone_grid():
    # independent oracle: brute-force the 2x2 Hermitian PSD cone with unit trace
    rng = np.random.default_rng(6)
    c = _random_hermitian(rng, 2)
    best = np.inf
    for a in np.linspace(0.0, 1.0, 101):
        rmax = np.sqrt(max(a * (1.0 - a), 0.0))
        for s in np.linspace(0.0, 1.0, 11):
            for phi in np.linspace(0.0, 2 * np.pi, 73, endpoint=False):
                z = s * rmax * np.exp(1j * phi)
                x = np.array([[a, z], [np.conj(z), 1.0 - a]])
                best = min(best, np.real(np.trace(c.conj().T @ x)))
    prob = SdpProblem()
    prob.matrix_variable("x", 2)
    prob.minimize(prob.trace_dot("x", c))
    prob.add_equality(prob.trace_of("x"), 1.0)
    sol = solve(prob)
    assert sol.status == STATUS_OPTIMAL
    assert sol.objective_value <= best + 1e-8
    assert np.isclose(sol.objective_value, best, atol=2e-2)


def test_schur_complement_scalar_bound():
    # [[c, 1], [1, t]] >= 0 with c > 0 forces t >= 1/c
    for c in (0.25, 1.0, 5.0):
        prob = SdpProblem()
        prob.scalar_variable("t")
        expr = prob.matrix_expr(2, const=np.array([[c, 1.0], [1.0, 0.0]]))
        prob.add_scalar_entry(expr, 1, 1, prob.scalar("t"))
        prob.add_lmi(expr)
        prob.minimize(prob.scalar("t"))
        sol = solve(prob)
        assert sol.status == STATUS_OPTIMAL
        assert np.isclose(sol.values["t"], 1.0 / c, rtol=1e-6)


def test_bordered_inverse_block():
    # min t with [[F, e], [e^H, t]] >= 0 gives t = e^H F^{-1} e for F > 0;
    # complex F routes the LMI through the real embedding
    rng = np.random.default_rng(7)
    f = _random_hermitian(rng, 4)
    f = f @ f.conj().T + 0.5 * np.eye(4)
    for i in (0, 2):
        e = np.zeros(4)
        e[i] = 1.0
        prob = SdpProblem()
        prob.scalar_variable("t")
        big = prob.matrix_expr(5)
        big.const[:4, :4] = f
        big.const[:4, 4] = e
        big.const[4, :4] = e
        prob.add_scalar_entry(big, 4, 4, prob.scalar("t"))
        prob.add_lmi(big)
        prob.minimize(prob.scalar("t"))
        sol = solve(prob)
        expected = float(np.real(e @ np.linalg.solve(f, e)))
        assert sol.status == STATUS_OPTIMAL
        assert np.isclose(sol.values["t"], expected, rtol=1e-6)


def test_real_and_hermitian_variables_agree_on_real_data():
    # real input data: the Hermitian formulation and the real symmetric one
    # must land on the same optimum
    rng = np.random.default_rng(8)
    c = rng.standard_normal((3, 3))
    c = 0.5 * (c + c.T)

    def build(hermitian):
        prob = SdpProblem()
        prob.matrix_variable("x", 3, hermitian=hermitian)
        prob.minimize(prob.trace_dot("x", c.astype(complex)))
        prob.add_equality(prob.trace_of("x"), 1.0)
        return solve(prob)

    sol_h = build(True)
    sol_r = build(False)
    assert sol_h.status == STATUS_OPTIMAL
    assert sol_r.status == STATUS_OPTIMAL
    assert np.isclose(sol_h.objective_value, sol_r.objective_value, atol=1e-8)


def test_duality_gap_is_reported_small():
    rng = np.random.default_rng(9)
    c = _random_hermitian(rng, 3)
    prob = SdpProblem()
    prob.matrix_variable("x", 3)
    prob.minimize(prob.trace_dot("x", c))
    prob.add_equality(prob.trace_of("x"), 2.0)
    sol = solve(prob)
    assert sol.status == STATUS_OPTIMAL
    assert sol.relative_duality_gap <= 1e-6
    assert np.isclose(sol.primal_objective, sol.dual_objective, rtol=1e-5)
    assert sol.iterations > 0


def test_scalar_inequalities():
    # min x + y s.t. x >= 1, y >= 2 (as affine >= 0 constraints), tiny PSD var
    prob = SdpProblem()
    prob.scalar_variable("x")
    prob.scalar_variable("y")
    prob.add_inequality(prob.scalar("x") - 1.0)
    prob.add_inequality(prob.scalar("y") - 2.0)
    prob.minimize(prob.scalar("x") + prob.scalar("y"))
    sol = solve(prob)
    assert sol.status == STATUS_OPTIMAL
    assert np.isclose(sol.objective_value, 3.0, atol=1e-7)


def test_infeasible_problem_is_flagged():
    prob = SdpProblem()
    prob.matrix_variable("x", 2)
    prob.minimize(prob.trace_of("x"))
    prob.add_equality(prob.trace_of("x"), -1.0)
    sol = solve(prob)
    assert sol.status == STATUS_INFEASIBLE
    assert sol.diagnostic


def test_variable_name_collisions_and_empty_problem():
    prob = SdpProblem()
    prob.matrix_variable("x", 2)
    with pytest.raises(ValueError):
        prob.matrix_variable("x", 3)
    with pytest.raises(ValueError):
        prob.scalar_variable("x")
    with pytest.raises(ValueError):
        solve(prob)  # no objective

    empty = SdpProblem()
    with pytest.raises(ValueError):
        solve(empty)
