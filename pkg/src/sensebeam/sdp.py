"""Small dense semidefinite programs with Hermitian matrix variables.

The modeling layer keeps each Hermitian variable as n^2 real coordinates
(diagonal, then Re/Im of the upper triangle). Complex Hermitian positive
semidefiniteness is enforced through the real symmetric embedding
[[Re X, -Im X], [Im X, Re X]] of doubled dimension, so a purely real cone
engine (CVXOPT's interior-point solver) does all the work. Trace and other
linear functionals act on the coordinates directly and need no embedding
rescaling.
"""

from dataclasses import dataclass, field

import numpy as np
from cvxopt import matrix as cvxmat
from cvxopt import solvers

DEFAULT_TOL = 1e-8
MAX_ITERATIONS = 200

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_NUMERICAL_FAILURE = "numerical-failure"


class SolverFailureError(RuntimeError):
    """The cone engine could not certify a solution."""


def hermitian_basis(dim: int, hermitian: bool = True) -> list[np.ndarray]:
    """Basis matrices matching the coordinate order used by matrix variables.

    Hermitian: dim diagonal units, then (E_pq + E_qp) and (jE_pq - jE_qp) for
    each p < q. Real symmetric: the diagonal units and (E_pq + E_qp) only.
    """
    out = []
    for p in range(dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[p, p] = 1.0
        out.append(e)
    for p in range(dim):
        for q in range(p + 1, dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[p, q] = 1.0
            e[q, p] = 1.0
            out.append(e)
            if hermitian:
                e = np.zeros((dim, dim), dtype=complex)
                e[p, q] = 1.0j
                e[q, p] = -1.0j
                out.append(e)
    return out


def coords_to_matrix(coords: np.ndarray, dim: int, hermitian: bool = True) -> np.ndarray:
    """Assemble the (exactly Hermitian/symmetric) matrix from its coordinates."""
    out = np.zeros((dim, dim), dtype=complex if hermitian else float)
    np.fill_diagonal(out, coords[:dim])
    i = dim
    for p in range(dim):
        for q in range(p + 1, dim):
            if hermitian:
                val = coords[i] + 1j * coords[i + 1]
                i += 2
            else:
                val = coords[i]
                i += 1
            out[p, q] = val
            out[q, p] = np.conj(val)
    return out


def matrix_to_coords(mat: np.ndarray, hermitian: bool = True) -> np.ndarray:
    """Inverse of coords_to_matrix (the Hermitian/symmetric part of mat)."""
    dim = mat.shape[0]
    sym = 0.5 * (mat + mat.conj().T)
    coords = [sym[p, p].real for p in range(dim)]
    for p in range(dim):
        for q in range(p + 1, dim):
            coords.append(sym[p, q].real)
            if hermitian:
                coords.append(sym[p, q].imag)
    return np.array(coords)


def real_embedding(mat: np.ndarray) -> np.ndarray:
    """[[Re M, -Im M], [Im M, Re M]]: PSD in R^{2n} iff M is Hermitian PSD."""
    return np.block([[mat.real, -mat.imag], [mat.imag, mat.real]])


@dataclass(frozen=True)
class _MatrixVar:
    name: str
    dim: int
    hermitian: bool
    psd: bool
    offset: int

    @property
    def n_coords(self) -> int:
        if self.hermitian:
            return self.dim * self.dim
        return self.dim * (self.dim + 1) // 2


@dataclass(frozen=True)
class _ScalarVar:
    name: str
    offset: int


@dataclass
class ScalarExpr:
    """Affine real-valued expression over the problem's packed coordinates."""

    coeffs: np.ndarray
    const: float = 0.0

    def __add__(self, other):
        if isinstance(other, ScalarExpr):
            return ScalarExpr(self.coeffs + other.coeffs, self.const + other.const)
        return ScalarExpr(self.coeffs.copy(), self.const + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (other * -1.0 if isinstance(other, ScalarExpr) else -float(other))

    def __rsub__(self, other):
        return (self * -1.0) + float(other)

    def __mul__(self, scale: float):
        return ScalarExpr(self.coeffs * float(scale), self.const * float(scale))

    __rmul__ = __mul__


@dataclass
class MatrixExpr:
    """Affine Hermitian-matrix-valued expression: const + sum_i x_i * coeff[..., i]."""

    dim: int
    coeffs: np.ndarray  # (dim, dim, n_total) complex
    const: np.ndarray  # (dim, dim) complex

    def is_real(self, tol: float = 1e-12) -> bool:
        return (
            float(np.abs(self.const.imag).max(initial=0.0)) <= tol
            and float(np.abs(self.coeffs.imag).max(initial=0.0)) <= tol
        )


@dataclass
class SdpSolution:
    """Certified outcome of one solve."""

    status: str
    values: dict = field(default_factory=dict)
    objective_value: float | None = None
    primal_objective: float | None = None
    dual_objective: float | None = None
    relative_duality_gap: float | None = None
    iterations: int = 0
    diagnostic: str = ""


class SdpProblem:
    """Minimize an affine objective over matrix/scalar variables subject to
    affine equalities and linear matrix inequalities (expressions required PSD).
    """

    def __init__(self) -> None:
        self._matrix_vars: dict[str, _MatrixVar] = {}
        self._scalar_vars: dict[str, _ScalarVar] = {}
        self._n_total = 0
        self._objective: ScalarExpr | None = None
        self._equalities: list[tuple[ScalarExpr, float]] = []
        self._inequalities: list[ScalarExpr] = []  # expr >= 0
        self._lmis: list[MatrixExpr] = []

    # -- variables ---------------------------------------------------------

    def matrix_variable(
        self, name: str, dim: int, hermitian: bool = True, psd: bool = True
    ) -> str:
        if name in self._matrix_vars or name in self._scalar_vars:
            raise ValueError(f"duplicate variable name {name!r}")
        var = _MatrixVar(name, dim, hermitian, psd, self._n_total)
        self._matrix_vars[name] = var
        self._n_total += var.n_coords
        return name

    def scalar_variable(self, name: str) -> str:
        if name in self._matrix_vars or name in self._scalar_vars:
            raise ValueError(f"duplicate variable name {name!r}")
        self._scalar_vars[name] = _ScalarVar(name, self._n_total)
        self._n_total += 1
        return name

    @property
    def n_coordinates(self) -> int:
        return self._n_total

    @property
    def matrix_variables(self) -> list[str]:
        return list(self._matrix_vars)

    @property
    def scalar_variables(self) -> list[str]:
        return list(self._scalar_vars)

    @property
    def lmis(self) -> list[MatrixExpr]:
        return list(self._lmis)

    @property
    def equalities(self) -> list[tuple[ScalarExpr, float]]:
        return list(self._equalities)

    def _grow(self, coeffs: np.ndarray) -> np.ndarray:
        """Pad a coefficient vector to the current total coordinate count."""
        if coeffs.shape[-1] < self._n_total:
            pad = self._n_total - coeffs.shape[-1]
            coeffs = np.concatenate(
                [coeffs, np.zeros(coeffs.shape[:-1] + (pad,), dtype=coeffs.dtype)],
                axis=-1,
            )
        return coeffs

    # -- expression builders ------------------------------------------------

    def scalar(self, name: str) -> ScalarExpr:
        var = self._scalar_vars[name]
        coeffs = np.zeros(self._n_total)
        coeffs[var.offset] = 1.0
        return ScalarExpr(coeffs)

    def trace_of(self, name: str) -> ScalarExpr:
        var = self._matrix_vars[name]
        coeffs = np.zeros(self._n_total)
        coeffs[var.offset : var.offset + var.dim] = 1.0
        return ScalarExpr(coeffs)

    def trace_dot(self, name: str, weight: np.ndarray) -> ScalarExpr:
        """Re tr(W^H X) as an affine functional of X's coordinates."""
        var = self._matrix_vars[name]
        coeffs = np.zeros(self._n_total)
        for i, basis in enumerate(hermitian_basis(var.dim, var.hermitian)):
            coeffs[var.offset + i] = np.real(np.sum(np.conj(weight) * basis))
        return ScalarExpr(coeffs)

    def quad_form(self, name: str, vec: np.ndarray) -> ScalarExpr:
        """v^H X v, real for Hermitian X."""
        var = self._matrix_vars[name]
        vec = np.asarray(vec, dtype=complex)
        coeffs = np.zeros(self._n_total)
        for i, basis in enumerate(hermitian_basis(var.dim, var.hermitian)):
            coeffs[var.offset + i] = np.real(vec.conj() @ basis @ vec)
        return ScalarExpr(coeffs)

    def matrix_map(self, name: str, fn, out_dim: int) -> MatrixExpr:
        """Lift a real-linear map X -> fn(X) (Hermitian-valued) to a MatrixExpr.

        fn is evaluated once per coordinate basis matrix of the variable.
        """
        var = self._matrix_vars[name]
        coeffs = np.zeros((out_dim, out_dim, self._n_total), dtype=complex)
        for i, basis in enumerate(hermitian_basis(var.dim, var.hermitian)):
            img = np.asarray(fn(basis), dtype=complex)
            if img.shape != (out_dim, out_dim):
                raise ValueError("matrix_map image has wrong shape")
            coeffs[:, :, var.offset + i] = img
        return MatrixExpr(out_dim, coeffs, np.zeros((out_dim, out_dim), dtype=complex))

    def matrix_expr(self, dim: int, const: np.ndarray | None = None) -> MatrixExpr:
        coeffs = np.zeros((dim, dim, self._n_total), dtype=complex)
        c = np.zeros((dim, dim), dtype=complex) if const is None else np.asarray(const, dtype=complex)
        return MatrixExpr(dim, coeffs, c.copy())

    @staticmethod
    def embed_block(big: MatrixExpr, small: MatrixExpr, row: int, col: int) -> None:
        """Add `small` into `big` at block position (row, col), mirroring to keep
        the expression Hermitian when off-diagonal."""
        r, c, d = row, col, small.dim
        big.coeffs[r : r + d, c : c + d, : small.coeffs.shape[-1]] += small.coeffs
        big.const[r : r + d, c : c + d] += small.const
        if (r, c) != (c, r):
            big.coeffs[c : c + d, r : r + d, : small.coeffs.shape[-1]] += (
                small.coeffs.conj().transpose(1, 0, 2)
            )
            big.const[c : c + d, r : r + d] += small.const.conj().T

    def add_scalar_entry(self, expr: MatrixExpr, row: int, col: int, scalar: ScalarExpr) -> None:
        """Add a scalar affine expression onto entry (row, col) (and its mirror)."""
        expr.coeffs[row, col, :] += self._grow(scalar.coeffs)
        expr.const[row, col] += scalar.const
        if (row, col) != (col, row):
            expr.coeffs[col, row, :] += self._grow(scalar.coeffs)
            expr.const[col, row] += scalar.const

    # -- constraints ---------------------------------------------------------

    def minimize(self, objective: ScalarExpr) -> None:
        self._objective = ScalarExpr(self._grow(objective.coeffs), objective.const)

    def add_equality(self, expr: ScalarExpr, rhs: float) -> None:
        self._equalities.append((ScalarExpr(self._grow(expr.coeffs), expr.const), float(rhs)))

    def add_inequality(self, expr: ScalarExpr) -> None:
        """Constrain expr >= 0."""
        self._inequalities.append(ScalarExpr(self._grow(expr.coeffs), expr.const))

    def add_lmi(self, expr: MatrixExpr) -> None:
        """Constrain the Hermitian-valued affine expression to be PSD."""
        if expr.dim == 1:
            self.add_inequality(ScalarExpr(expr.coeffs[0, 0, :].real.copy(), expr.const[0, 0].real))
            return
        self._lmis.append(
            MatrixExpr(expr.dim, self._grow(expr.coeffs), expr.const)
        )


def _psd_lmi_for_variable(problem: SdpProblem, var: _MatrixVar) -> MatrixExpr:
    """X >= 0 as an LMI on the packed coordinates (identity map)."""
    expr = problem.matrix_expr(var.dim)
    for i, basis in enumerate(hermitian_basis(var.dim, var.hermitian)):
        expr.coeffs[:, :, var.offset + i] = basis
    return expr


def _canonical_lmi(expr: MatrixExpr, n_total: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (G_block, h_block) in CVXOPT layout for one LMI.

    Real symmetric expressions pass through; genuinely complex Hermitian ones
    are embedded into real symmetric form of doubled dimension.
    """
    coeffs = expr.coeffs
    if coeffs.shape[-1] < n_total:
        pad = n_total - coeffs.shape[-1]
        coeffs = np.concatenate(
            [coeffs, np.zeros(coeffs.shape[:-1] + (pad,), dtype=coeffs.dtype)], axis=-1
        )
    if expr.is_real():
        mats = coeffs.real
        const = expr.const.real
        dim = expr.dim
        # symmetrize coefficient slices defensively
        mats = 0.5 * (mats + mats.transpose(1, 0, 2))
        const = 0.5 * (const + const.T)
    else:
        dim = 2 * expr.dim
        mats = np.empty((dim, dim, n_total))
        for i in range(n_total):
            m = coeffs[:, :, i]
            m = 0.5 * (m + m.conj().T)
            mats[:, :, i] = real_embedding(m)
        const = real_embedding(0.5 * (expr.const + expr.const.conj().T))
    # CVXOPT layout: G columns are -vec(M_i) in column-major order, h is the
    # constant block as a square matrix.
    g = -np.stack([mats[:, :, i].reshape(dim * dim, order="F") for i in range(n_total)], axis=1)
    return g, const.copy()


def solve(problem: SdpProblem, tol: float = DEFAULT_TOL) -> SdpSolution:
    """Solve and certify. Returns a definitive non-optimal status on failure.

    Every matrix variable in an optimal solution is exactly Hermitian by
    construction, PSD to solver tolerance, and the relative duality gap
    reported by the engine is carried through.
    """
    if problem._objective is None:
        raise ValueError("problem has no objective")
    n = problem.n_coordinates
    if n == 0:
        raise ValueError("problem has no variables")
    if n > 2000:
        raise ValueError("problem exceeds the supported desk scale (~2000 real dims)")

    c = cvxmat(problem._objective.coeffs)

    gl_rows, hl_vals = [], []
    for ineq in problem._inequalities:
        gl_rows.append(-ineq.coeffs)
        hl_vals.append(ineq.const)
    gl = cvxmat(np.array(gl_rows)) if gl_rows else None
    hl = cvxmat(np.array(hl_vals)) if hl_vals else None

    lmis = [_psd_lmi_for_variable(problem, v) for v in problem._matrix_vars.values() if v.psd]
    lmis += problem._lmis
    gs, hs = [], []
    for expr in lmis:
        g, h = _canonical_lmi(expr, n)
        gs.append(cvxmat(g))
        hs.append(cvxmat(h))

    a = b = None
    if problem._equalities:
        a = cvxmat(np.array([eq.coeffs for eq, _ in problem._equalities]))
        b = cvxmat(np.array([rhs - eq.const for eq, rhs in problem._equalities]))

    attempts = [
        {"reltol": tol, "abstol": tol * 1e-4, "feastol": max(tol, 1e-9)},
        {"reltol": tol * 100, "abstol": tol * 1e-2, "feastol": max(tol * 10, 1e-8)},
    ]
    sol = None
    for opts in attempts:
        options = {
            "show_progress": False,
            "maxiters": MAX_ITERATIONS,
            "refinement": 2,
            **opts,
        }
        try:
            sol = solvers.sdp(
                c,
                Gl=gl,
                hl=hl,
                Gs=gs if gs else None,
                hs=hs if hs else None,
                A=a,
                b=b,
                options=options,
            )
        except (ValueError, ArithmeticError, ZeroDivisionError) as exc:
            sol = {"status": "error", "_exc": str(exc)}
            continue
        if sol["status"] in ("optimal", "primal infeasible", "dual infeasible"):
            break

    return _interpret(problem, sol, tol)


def _interpret(problem: SdpProblem, sol: dict, tol: float) -> SdpSolution:
    status = sol.get("status", "error")
    if status == "primal infeasible":
        return SdpSolution(
            status=STATUS_INFEASIBLE,
            diagnostic="primal infeasibility certificate returned by the cone engine",
        )
    if status == "dual infeasible":
        return SdpSolution(
            status=STATUS_NUMERICAL_FAILURE,
            diagnostic="dual infeasibility certificate (objective unbounded below)",
        )
    if status == "error" or sol.get("x") is None:
        return SdpSolution(
            status=STATUS_NUMERICAL_FAILURE,
            diagnostic=f"cone engine failed: {sol.get('_exc', 'no iterate returned')}",
        )

    x = np.array(sol["x"]).ravel()
    gap = sol.get("relative gap")
    gap = float(gap) if gap is not None else np.inf
    accepted = status == "optimal" or gap <= max(tol * 100, 1e-7)

    values: dict = {}
    for var in problem._matrix_vars.values():
        values[var.name] = coords_to_matrix(
            x[var.offset : var.offset + var.n_coords], var.dim, var.hermitian
        )
    for var in problem._scalar_vars.values():
        values[var.name] = float(x[var.offset])

    pobj = float(sol["primal objective"]) + problem._objective.const
    dobj_raw = sol.get("dual objective")
    dobj = float(dobj_raw) + problem._objective.const if dobj_raw is not None else None

    if not accepted:
        return SdpSolution(
            status=STATUS_NUMERICAL_FAILURE,
            values=values,
            objective_value=pobj,
            primal_objective=pobj,
            dual_objective=dobj,
            relative_duality_gap=gap,
            iterations=int(sol.get("iterations", 0)),
            diagnostic=f"engine stopped with status {status!r}, relative gap {gap:.2e}",
        )

    # certify PSD-ness of matrix variables to tolerance
    for var in problem._matrix_vars.values():
        if not var.psd:
            continue
        mat = values[var.name]
        eig_min = float(np.linalg.eigvalsh(mat)[0])
        trace = float(np.real(np.trace(mat)))
        if eig_min < -1e-7 * max(trace, 1.0):
            return SdpSolution(
                status=STATUS_NUMERICAL_FAILURE,
                values=values,
                objective_value=pobj,
                primal_objective=pobj,
                dual_objective=dobj,
                relative_duality_gap=gap,
                iterations=int(sol.get("iterations", 0)),
                diagnostic=f"variable {var.name!r} fails the PSD certificate "
                f"(min eigenvalue {eig_min:.2e})",
            )

    return SdpSolution(
        status=STATUS_OPTIMAL,
        values=values,
        objective_value=pobj,
        primal_objective=pobj,
        dual_objective=dobj,
        relative_duality_gap=gap,
        iterations=int(sol.get("iterations", 0)),
    )
