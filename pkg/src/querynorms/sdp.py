"""Small dense semidefinite programs in one canonical form.

A program is

    minimize    <C, X>
    subject to  <A_i, X> = b_i          (i = 1..m)
                X = diag(X_1, ..., X_B) with each block psd, nonneg or free

where psd blocks are real symmetric matrices, and nonneg/free blocks are
vectors. Every norm and adversary SDP in this package is reduced to this
form. The cone solve itself is delegated to Clarabel, an interior-point
conic solver; results are re-verified here independently of the solver
path (constraint residuals, block eigenvalues, duality gap) before a
program is reported optimal.

Complex Hermitian matrix variables are supported through `HermitianVar`,
which realifies X = R + iI as the real PSD block [[R, -I], [I, R]] and
translates complex-linear constraints into pairs of real rows
(`ComplexRow`). Objectives reported to callers are never doubled: entries
of the complex matrix are always read and written through the averaged
embedding, so values match the complex program exactly.

Duals follow the convention

    maximize    b' y
    subject to  Z = C - sum_i y_i A_i,  Z in the dual cone,

so `SdpResult.y` are certificate multipliers for the equality rows and
`SdpResult.Z` the dual slack per block.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import clarabel

BLOCK_KINDS = ("psd", "nonneg", "free")

DEFAULT_GAP_TOL = 1e-7
DEFAULT_FEAS_TOL = 1e-8
DEFAULT_MAX_ITER = 200
DEFAULT_DIM_CAP = 1024


class SdpError(RuntimeError):
    """Structural failure: malformed program or dimension cap exceeded."""


@dataclass(frozen=True)
class Block:
    kind: str
    size: int


@dataclass
class SdpResult:
    status: str  # optimal | infeasible | unbounded | max_iter
    primal_value: float
    dual_value: float
    X: list[np.ndarray]
    y: np.ndarray
    Z: list[np.ndarray | None]
    gap: float
    residual: float
    iterations: int
    solve_time: float
    certificate: np.ndarray | None = None
    solver_status: str = ""


class SdpProgram:
    """Builder/container for a canonical-form program.

    Constraint rows and the objective are stored as linear functionals on
    matrix entries: a term (block, i, j) -> w contributes w * X[i, j]
    (= w * X[j, i], the entry being shared) to the functional. The
    equivalent symmetric constraint matrix has A[i, j] = A[j, i] = w / 2
    off the diagonal.
    """

    def __init__(self, dim_cap: int = DEFAULT_DIM_CAP):
        self.blocks: list[Block] = []
        self.objective: dict[tuple[int, int, int], float] = {}
        self.constraints: list[tuple[dict[tuple[int, int, int], float], float]] = []
        self.dim_cap = dim_cap

    # -- block allocation -------------------------------------------------

    def _add_block(self, kind: str, size: int) -> int:
        if kind not in BLOCK_KINDS:
            raise SdpError(f"unknown block kind {kind!r}")
        if size <= 0:
            raise SdpError("block size must be positive")
        if self.total_dim() + size > self.dim_cap:
            raise SdpError(f"total dimension {self.total_dim() + size} exceeds cap {self.dim_cap}")
        self.blocks.append(Block(kind, size))
        return len(self.blocks) - 1

    def add_psd_block(self, size: int) -> int:
        return self._add_block("psd", size)

    def add_nonneg_block(self, size: int) -> int:
        return self._add_block("nonneg", size)

    def add_free_block(self, size: int) -> int:
        return self._add_block("free", size)

    def total_dim(self) -> int:
        return sum(b.size for b in self.blocks)

    # -- functional accumulation ------------------------------------------

    def _key(self, blk: int, i: int, j: int | None) -> tuple[int, int, int]:
        block = self.blocks[blk]
        if j is None:
            j = i
        if block.kind != "psd":
            if i != j:
                raise SdpError("vector blocks take a single index")
            if not (0 <= i < block.size):
                raise SdpError("index out of range")
            return (blk, i, i)
        if not (0 <= i < block.size and 0 <= j < block.size):
            raise SdpError("index out of range")
        return (blk, min(i, j), max(i, j))

    def add_objective_term(self, blk: int, i: int, j: int | None = None, w: float = 1.0):
        key = self._key(blk, i, j)
        self.objective[key] = self.objective.get(key, 0.0) + float(w)

    def new_row(self) -> "Row":
        return Row(self)

    def add_constraint(self, terms: dict[tuple[int, int, int], float], rhs: float):
        self.constraints.append((dict(terms), float(rhs)))

    # -- evaluation helpers ------------------------------------------------

    def eval_functional(self, terms: dict[tuple[int, int, int], float], X: list[np.ndarray]) -> float:
        total = 0.0
        for (blk, i, j), w in terms.items():
            x = X[blk]
            total += w * float(x[i, j].real if x.ndim == 2 else x[i].real)
        return total

    def constraint_residual(self, X: list[np.ndarray]) -> float:
        """Max relative equality violation of a candidate block solution."""
        if not self.constraints:
            return 0.0
        bscale = 1.0 + max(abs(rhs) for _, rhs in self.constraints)
        worst = 0.0
        for terms, rhs in self.constraints:
            worst = max(worst, abs(self.eval_functional(terms, X) - rhs) / bscale)
        return worst

    def min_block_eigenvalues(self, X: list[np.ndarray]) -> list[float]:
        out = []
        for block, x in zip(self.blocks, X):
            if block.kind == "psd":
                out.append(float(np.min(np.linalg.eigvalsh((x + x.T) / 2))))
            elif block.kind == "nonneg":
                out.append(float(np.min(x)) if x.size else 0.0)
            else:
                out.append(math.inf)
        return out

    # -- debug dump ---------------------------------------------------------

    def dump(self) -> str:
        """Sparse text dump for cross-checking against external solvers.

        Line 1: `blocks <kind:size> ...`. Then one line per nonzero entry:
        `<row> <block> <i> <j> <value>` where row 0 is the objective and row
        k >= 1 is the k-th equality constraint; value is the coefficient of
        the (i, j) == (j, i) entry pair in the functional. Constraint rows
        end with a line `rhs <row> <value>`.
        """
        out = io.StringIO()
        out.write("blocks " + " ".join(f"{b.kind}:{b.size}" for b in self.blocks) + "\n")

        def emit(row_id: int, terms: dict[tuple[int, int, int], float]):
            for (blk, i, j) in sorted(terms):
                out.write(f"{row_id} {blk} {i} {j} {terms[(blk, i, j)]:.17g}\n")

        emit(0, self.objective)
        for k, (terms, rhs) in enumerate(self.constraints, start=1):
            emit(k, terms)
            out.write(f"rhs {k} {rhs:.17g}\n")
        return out.getvalue()


class Row:
    """Accumulator for one real equality row."""

    def __init__(self, prog: SdpProgram):
        self.prog = prog
        self.terms: dict[tuple[int, int, int], float] = {}

    def add(self, blk: int, i: int, j: int | None = None, w: float = 1.0) -> "Row":
        key = self.prog._key(blk, i, j)
        self.terms[key] = self.terms.get(key, 0.0) + float(w)
        return self

    def finalize(self, rhs: float):
        self.prog.add_constraint(self.terms, rhs)


# -- svec helpers (Clarabel PSD triangle convention) ------------------------

_SQRT2 = math.sqrt(2.0)


def _tri_index(size: int) -> list[tuple[int, int]]:
    # upper triangle, column-major: (0,0), (0,1), (1,1), (0,2), ...
    return [(i, j) for j in range(size) for i in range(j + 1)]


def _unsvec(vec: np.ndarray, size: int) -> np.ndarray:
    m = np.zeros((size, size))
    for k, (i, j) in enumerate(_tri_index(size)):
        if i == j:
            m[i, i] = vec[k]
        else:
            m[i, j] = m[j, i] = vec[k] / _SQRT2
    return m


def solve(
    prog: SdpProgram,
    gap_tol: float = DEFAULT_GAP_TOL,
    feas_tol: float = DEFAULT_FEAS_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    verbose: bool = False,
) -> SdpResult:
    """Solve a canonical-form program.

    `status == "optimal"` guarantees, checked independently of the solver:
    relative duality gap <= gap_tol and relative constraint residual
    <= feas_tol (block PSD-ness is reported through `min_block_eigenvalues`
    and asserted by callers as needed). Infeasible/unbounded results carry
    the solver's certificate direction. Anything else degrades to
    "max_iter" with diagnostics intact.
    """
    if prog.total_dim() > prog.dim_cap:
        raise SdpError(f"total dimension {prog.total_dim()} exceeds cap {prog.dim_cap}")

    # variable layout
    offsets: list[int] = []
    nvar = 0
    tri_maps: list[list[tuple[int, int]] | None] = []
    for block in prog.blocks:
        offsets.append(nvar)
        if block.kind == "psd":
            tri = _tri_index(block.size)
            tri_maps.append(tri)
            nvar += len(tri)
        else:
            tri_maps.append(None)
            nvar += block.size

    def var_index(blk: int, i: int, j: int) -> tuple[int, float]:
        """Variable index and the svec scale of the (i, j) entry."""
        block = prog.blocks[blk]
        if block.kind != "psd":
            return offsets[blk] + i, 1.0
        if i == j:
            return offsets[blk] + j * (j + 1) // 2 + i, 1.0
        # svec var holds sqrt(2) * X_ij; functional w * X_ij -> w / sqrt(2)
        return offsets[blk] + j * (j + 1) // 2 + i, 1.0 / _SQRT2

    q = np.zeros(nvar)
    for (blk, i, j), w in prog.objective.items():
        idx, scale = var_index(blk, i, j)
        q[idx] += w * scale

    rows_i: list[int] = []
    cols_i: list[int] = []
    vals: list[float] = []
    b_list: list[float] = []
    nrow = 0

    m_eq = len(prog.constraints)
    for terms, rhs in prog.constraints:
        for (blk, i, j), w in terms.items():
            idx, scale = var_index(blk, i, j)
            rows_i.append(nrow)
            cols_i.append(idx)
            vals.append(w * scale)
        b_list.append(rhs)
        nrow += 1

    cones: list = [clarabel.ZeroConeT(m_eq)] if m_eq else []
    cone_rows: list[tuple[int, int, int]] = []  # (block index, row start, nrows)
    for blk, block in enumerate(prog.blocks):
        if block.kind == "free":
            continue
        if block.kind == "nonneg":
            count = block.size
            cones.append(clarabel.NonnegativeConeT(count))
        else:
            count = len(tri_maps[blk])
            cones.append(clarabel.PSDTriangleConeT(block.size))
        for k in range(count):
            rows_i.append(nrow + k)
            cols_i.append(offsets[blk] + k)
            vals.append(-1.0)
            b_list.append(0.0)
        cone_rows.append((blk, nrow, count))
        nrow += count

    A = sp.csc_matrix((vals, (rows_i, cols_i)), shape=(nrow, nvar))
    b = np.array(b_list)
    P = sp.csc_matrix((nvar, nvar))

    settings = clarabel.DefaultSettings()
    settings.verbose = verbose
    settings.max_iter = max_iter
    settings.tol_gap_rel = gap_tol * 1e-1
    settings.tol_gap_abs = gap_tol * 1e-1
    settings.tol_feas = feas_tol * 1e-1
    solver = clarabel.DefaultSolver(P, q, A, b, cones, settings)
    sol = solver.solve()
    status_raw = str(sol.status)

    x = np.asarray(sol.x)
    z = np.asarray(sol.z)

    def blocks_from(vec: np.ndarray) -> list[np.ndarray]:
        out = []
        for blk, block in enumerate(prog.blocks):
            if block.kind == "psd":
                tri = tri_maps[blk]
                out.append(_unsvec(vec[offsets[blk]:offsets[blk] + len(tri)], block.size))
            else:
                out.append(vec[offsets[blk]:offsets[blk] + block.size].copy())
        return out

    X = blocks_from(x)
    y = -z[:m_eq] if m_eq else np.zeros(0)
    Z: list[np.ndarray | None] = [None] * len(prog.blocks)
    for blk, start, count in cone_rows:
        if prog.blocks[blk].kind == "psd":
            Z[blk] = _unsvec(z[start:start + count], prog.blocks[blk].size)
        else:
            Z[blk] = z[start:start + count].copy()

    primal = float(sol.obj_val)
    dual = float(sol.obj_val_dual)
    gap = abs(primal - dual) / (1.0 + abs(primal))
    residual = prog.constraint_residual(X)

    if sol.status in (clarabel.SolverStatus.Solved, clarabel.SolverStatus.AlmostSolved):
        cone_ok = all(
            mineig >= -feas_tol * (1.0 + float(np.max(np.abs(Xb))) if Xb.size else 1.0)
            for block, Xb, mineig in zip(prog.blocks, X, prog.min_block_eigenvalues(X))
            if block.kind != "free"
        )
        status = "optimal" if (gap <= gap_tol and residual <= feas_tol and cone_ok) else "max_iter"
        cert = None
    elif sol.status in (clarabel.SolverStatus.PrimalInfeasible, clarabel.SolverStatus.AlmostPrimalInfeasible):
        status, cert = "infeasible", z.copy()
    elif sol.status in (clarabel.SolverStatus.DualInfeasible, clarabel.SolverStatus.AlmostDualInfeasible):
        status, cert = "unbounded", x.copy()
    else:
        status, cert = "max_iter", None

    return SdpResult(
        status=status,
        primal_value=primal,
        dual_value=dual,
        X=X,
        y=y,
        Z=Z,
        gap=gap,
        residual=residual,
        iterations=int(sol.iterations),
        solve_time=float(sol.solve_time),
        certificate=cert,
        solver_status=status_raw,
    )


def require_optimal(res: SdpResult, what: str = "SDP") -> SdpResult:
    if res.status != "optimal":
        raise SdpError(f"{what} did not reach optimality: status={res.status} "
                       f"(solver={res.solver_status}, gap={res.gap:.2e}, residual={res.residual:.2e})")
    return res


# -- complex Hermitian matrix variables -------------------------------------


class HermitianVar:
    """Hermitian PSD matrix variable, realified when complex.

    In the complex case the backing block is [[R, -I], [I, R]] of doubled
    size; entries are always read through the symmetrized combinations
    R_ij = (Y[i,j] + Y[d+i,d+j]) / 2 and I_ij = (Y[d+i,j] - Y[i,d+j]) / 2,
    which keeps the embedded program exactly equivalent to the complex one.
    """

    def __init__(self, prog: SdpProgram, size: int, iscomplex: bool = False):
        self.prog = prog
        self.size = size
        self.iscomplex = iscomplex
        self.block = prog.add_psd_block(2 * size if iscomplex else size)

    def entry_terms(self, i: int, j: int, coeff: complex):
        """Ordered contributions of coeff * X[i, j] as (re/im, blk, p, q, w)."""
        d = self.size
        cr, ci = float(np.real(coeff)), float(np.imag(coeff))
        if not self.iscomplex:
            out = []
            if cr:
                out.append(("re", self.block, i, j, cr))
            if ci:
                # real variable with imaginary coefficient feeds the Im row
                out.append(("im", self.block, i, j, ci))
            return out
        a, b = min(i, j), max(i, j)
        s = 1.0 if (i, j) == (a, b) else -1.0  # X_ij = R_ab + i*s*I_ab
        out = []
        # R_ab = (Y[a,b] + Y[d+a,d+b]) / 2
        for (p, q, w) in ((a, b, 0.5), (d + a, d + b, 0.5)):
            if cr:
                out.append(("re", self.block, p, q, cr * w))
            if ci:
                out.append(("im", self.block, p, q, ci * w))
        if a != b:  # I_ab = (Y[d+a,b] - Y[a,d+b]) / 2; identically zero on the diagonal
            for (p, q, w) in ((d + a, b, 0.5), (a, d + b, -0.5)):
                if cr:
                    out.append(("im", self.block, p, q, cr * s * w))
                if ci:
                    out.append(("re", self.block, p, q, -ci * s * w))
        return out

    def diagonal_term(self, i: int):
        """Terms representing the (real) diagonal entry X[i, i]."""
        return self.entry_terms(i, i, 1.0)

    def read(self, X: list[np.ndarray]) -> np.ndarray:
        y = X[self.block]
        if not self.iscomplex:
            return (y + y.T) / 2
        d = self.size
        r = (y[:d, :d] + y[d:, d:]) / 2
        im = (y[d:, :d] - y[:d, d:]) / 2
        return (r + r.T) / 2 + 1j * (im - im.T) / 2

    def min_eigenvalue(self, X: list[np.ndarray]) -> float:
        m = self.read(X)
        return float(np.min(np.linalg.eigvalsh((m + m.conj().T) / 2)))


class ComplexRow:
    """A complex-linear equality; finalizes into one or two real rows."""

    def __init__(self, prog: SdpProgram):
        self.prog = prog
        self.re: dict[tuple[int, int, int], float] = {}
        self.im: dict[tuple[int, int, int], float] = {}

    def _accumulate(self, kind: str, blk: int, p: int, q: int, w: float):
        target = self.re if kind == "re" else self.im
        key = self.prog._key(blk, p, q)
        target[key] = target.get(key, 0.0) + w

    def add(self, var: HermitianVar, i: int, j: int, coeff: complex) -> "ComplexRow":
        for kind, blk, p, q, w in var.entry_terms(i, j, coeff):
            self._accumulate(kind, blk, p, q, w)
        return self

    def add_scalar(self, blk: int, idx: int, coeff: complex) -> "ComplexRow":
        cr, ci = float(np.real(coeff)), float(np.imag(coeff))
        if cr:
            self._accumulate("re", blk, idx, idx, cr)
        if ci:
            self._accumulate("im", blk, idx, idx, ci)
        return self

    def finalize(self, rhs: complex):
        self.prog.add_constraint(self.re, float(np.real(rhs)))
        if self.im or np.imag(rhs) != 0.0:
            self.prog.add_constraint(self.im, float(np.imag(rhs)))
