"""Linear programs: a dense two-phase simplex with dual extraction, a HiGHS
backend for large sparse systems, certificate checks and a text dump format.

Dual convention: ``duals[i]`` is the derivative of the optimal objective with
respect to ``rhs[i]``.  For a minimization this makes duals of ``>=`` rows
nonnegative and duals of ``<=`` rows nonpositive; for a maximization the signs
flip.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

FEAS_TOL = 1e-8
GAP_TOL = 1e-7
PIVOT_TOL = 1e-9
DENSE_LIMIT = 4_000_000  # tableau entries

RELATIONS = ("<=", "=", ">=")


class LPError(RuntimeError):
    pass


class DegenerateLPError(LPError):
    """Simplex failed to make progress or hit a singular basis."""


@dataclass
class LinearProgram:
    objective: np.ndarray
    A: np.ndarray | sp.spmatrix
    relations: Sequence[str]
    rhs: np.ndarray
    sense: str = "min"
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        n = self.objective.size
        if sp.issparse(self.A):
            self.A = sp.csr_matrix(self.A, dtype=float)
        else:
            self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.relations = tuple(self.relations)
        if self.A.shape != (self.rhs.size, n):
            raise ValueError(f"constraint matrix {self.A.shape} does not match {self.rhs.size} rows x {n} columns")
        if len(self.relations) != self.rhs.size or any(r not in RELATIONS for r in self.relations):
            raise ValueError("one relation in {<=, =, >=} per row is required")
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        self.lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float)
        if not (np.all(np.isfinite(self.objective)) and np.all(np.isfinite(self.rhs))):
            raise ValueError("objective and right-hand side must be finite")

    @property
    def n_vars(self) -> int:
        return self.objective.size

    @property
    def n_rows(self) -> int:
        return self.rhs.size

    def dense_A(self) -> np.ndarray:
        return self.A.toarray() if sp.issparse(self.A) else self.A


@dataclass
class LPSolution:
    status: str  # optimal | infeasible | unbounded
    objective: float = math.nan
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    method: str = ""
    iterations: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


# --- certificate arithmetic ----------------------------------------------


def _min_space(lp: LinearProgram, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Objective and duals expressed for the equivalent minimization."""
    if lp.sense == "max":
        return -lp.objective, -np.asarray(y, dtype=float)
    return lp.objective, np.asarray(y, dtype=float)


def reduced_costs(lp: LinearProgram, y: np.ndarray) -> np.ndarray:
    c, ym = _min_space(lp, y)
    return c - lp.A.T @ ym


def primal_infeasibility(lp: LinearProgram, x: np.ndarray) -> float:
    ax = lp.A @ x
    viol = 0.0
    for rel, lhs, b in zip(lp.relations, ax, lp.rhs):
        if rel == "<=":
            viol = max(viol, lhs - b)
        elif rel == ">=":
            viol = max(viol, b - lhs)
        else:
            viol = max(viol, abs(lhs - b))
    viol = max(viol, float(np.max(lp.lower - x, initial=0.0)), float(np.max(x - lp.upper, initial=0.0)))
    return float(viol)


def dual_infeasibility(lp: LinearProgram, y: np.ndarray) -> float:
    _, ym = _min_space(lp, y)
    viol = 0.0
    for rel, yi in zip(lp.relations, ym):
        if rel == "<=":
            viol = max(viol, yi)
        elif rel == ">=":
            viol = max(viol, -yi)
    r = reduced_costs(lp, y)
    free_below = ~np.isfinite(lp.lower)
    free_above = ~np.isfinite(lp.upper)
    if free_below.any():
        viol = max(viol, float(np.max(r[free_below], initial=0.0)))
    if free_above.any():
        viol = max(viol, float(np.max(-r[free_above], initial=0.0)))
    return float(viol)


def dual_objective(lp: LinearProgram, y: np.ndarray) -> float:
    _, ym = _min_space(lp, y)
    r = reduced_costs(lp, y)
    val = float(lp.rhs @ ym)
    lo = np.where(np.isfinite(lp.lower), lp.lower, 0.0)
    hi = np.where(np.isfinite(lp.upper), lp.upper, 0.0)
    val += float(lo @ np.maximum(r, 0.0) + hi @ np.minimum(r, 0.0))
    return -val if lp.sense == "max" else val


def duality_gap(lp: LinearProgram, sol: LPSolution) -> float:
    return abs(sol.objective - dual_objective(lp, sol.duals))


# --- dense simplex -------------------------------------------------------


class _Tableau:
    def __init__(self, T: np.ndarray, basis: list[int]):
        self.T = T
        self.basis = basis
        self.iterations = 0

    def pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row] /= T[row, col]
        col_vals = T[:, col].copy()
        col_vals[row] = 0.0
        nz = np.nonzero(np.abs(col_vals) > 0)[0]
        if nz.size:
            T[nz] -= np.outer(col_vals[nz], T[row])
        self.basis[row] = col
        self.iterations += 1

    def run(self, allowed: np.ndarray, max_iter: int, stall_limit: int = 50) -> str:
        """Minimize the objective row (last row holds reduced costs, with the
        negated objective value in the last column)."""
        T = self.T
        m = T.shape[0] - 1
        bland = False
        stalled = 0
        best = T[-1, -1]
        for _ in range(max_iter):
            costs = T[-1, :-1]
            candidates = np.nonzero(allowed & (costs < -PIVOT_TOL))[0]
            if candidates.size == 0:
                return "optimal"
            if bland:
                col = int(candidates[0])
            else:
                # Dantzig's rule; argmin returns the lowest index on ties
                col = int(candidates[np.argmin(costs[candidates])])
            column = T[:m, col]
            pos = np.nonzero(column > PIVOT_TOL)[0]
            if pos.size == 0:
                return "unbounded"
            ratios = T[pos, -1] / column[pos]
            rmin = ratios.min()
            ties = pos[ratios <= rmin + 1e-12 * max(1.0, abs(rmin))]
            if bland:
                row = int(min(ties, key=lambda r: self.basis[r]))
            else:
                row = int(ties[np.argmax(column[ties])])
            self.pivot(row, col)
            if T[-1, -1] > best + 1e-12:
                best = T[-1, -1]
                stalled = 0
            else:
                stalled += 1
                if stalled >= stall_limit:
                    bland = True
        raise DegenerateLPError(f"simplex did not converge within {max_iter} pivots")


def _to_standard(lp: LinearProgram):
    """Rewrite as min c'z s.t. M z = d, z >= 0.

    Returns (M, d, c', transform, shift, row_sign, n_struct) with
    x = transform @ z[:n_struct] + shift.
    """
    A = lp.dense_A()
    c = lp.objective if lp.sense == "min" else -lp.objective
    n = lp.n_vars
    cols = []  # (original index, coefficient)
    shift = np.zeros(n)
    ub_rows = []
    for j in range(n):
        lo, hi = lp.lower[j], lp.upper[j]
        if np.isfinite(lo):
            shift[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                ub_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            shift[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    n_struct = len(cols)
    transform = np.zeros((n, n_struct))
    for k, (j, s) in enumerate(cols):
        transform[j, k] = s
    A_s = A @ transform
    b_s = lp.rhs - A @ shift
    rels = list(lp.relations)
    if ub_rows:
        extra = np.zeros((len(ub_rows), n_struct))
        for r, (k, cap) in enumerate(ub_rows):
            extra[r, k] = 1.0
        A_s = np.vstack([A_s, extra])
        b_s = np.concatenate([b_s, [cap for _, cap in ub_rows]])
        rels += ["<="] * len(ub_rows)
    m = len(rels)
    n_slack = sum(r != "=" for r in rels)
    M = np.zeros((m, n_struct + n_slack))
    M[:, :n_struct] = A_s
    k = n_struct
    for i, rel in enumerate(rels):
        if rel == "<=":
            M[i, k] = 1.0
            k += 1
        elif rel == ">=":
            M[i, k] = -1.0
            k += 1
    row_sign = np.where(b_s < 0, -1.0, 1.0)
    M *= row_sign[:, None]
    d = b_s * row_sign
    cz = np.zeros(M.shape[1])
    cz[:n_struct] = c @ transform
    return M, d, cz, transform, shift, row_sign, n_struct


def _simplex(lp: LinearProgram, max_iter: int | None = None) -> LPSolution:
    M, d, cz, transform, shift, row_sign, n_struct = _to_standard(lp)
    m, nz = M.shape
    if (m + 1) * (nz + m + 1) > DENSE_LIMIT:
        raise LPError("problem too large for the dense simplex; use method='highs'")
    max_iter = max_iter or 50 * (m + nz) + 1000
    # phase 1: artificial columns nz..nz+m-1
    T = np.zeros((m + 1, nz + m + 1))
    T[:m, :nz] = M
    T[:m, nz:nz + m] = np.eye(m)
    T[:m, -1] = d
    T[-1, :nz] = -M.sum(axis=0)
    T[-1, -1] = -d.sum()
    tab = _Tableau(T, list(range(nz, nz + m)))
    allowed = np.zeros(nz + m, dtype=bool)
    allowed[:nz] = True
    status = tab.run(allowed, max_iter)
    if status != "optimal":
        raise DegenerateLPError("phase 1 reported an unbounded auxiliary problem")
    if -tab.T[-1, -1] > FEAS_TOL * max(1.0, np.abs(d).max(initial=0.0)):
        return LPSolution("infeasible", method="simplex", iterations=tab.iterations)
    # drive remaining artificials out of the basis; drop redundant rows
    keep = np.ones(m, dtype=bool)
    for r in range(m):
        if tab.basis[r] >= nz:
            row = tab.T[r, :nz]
            nzcols = np.nonzero(np.abs(row) > PIVOT_TOL)[0]
            if nzcols.size:
                tab.pivot(r, int(nzcols[0]))
            else:
                keep[r] = False
    # phase 2 on the kept rows with real costs
    rows = np.nonzero(keep)[0]
    T2 = np.zeros((rows.size + 1, nz + 1))
    T2[:-1, :nz] = tab.T[rows, :nz]
    T2[:-1, -1] = tab.T[rows, -1]
    basis = [tab.basis[r] for r in rows]
    T2[-1, :nz] = cz
    for r, b in enumerate(basis):
        if cz[b] != 0.0:
            T2[-1] -= cz[b] * T2[r]
    tab2 = _Tableau(T2, basis)
    status = tab2.run(np.ones(nz, dtype=bool), max_iter)
    iters = tab.iterations + tab2.iterations
    if status == "unbounded":
        return LPSolution("unbounded", method="simplex", iterations=iters)
    z = np.zeros(nz)
    z[basis] = T2[:-1, -1]
    x = transform @ z[:n_struct] + shift
    # duals from the final basis: B^T y = c_B on the kept standard-form rows
    B = M[np.ix_(rows, basis)]
    try:
        y_kept = np.linalg.solve(B.T, cz[basis])
    except np.linalg.LinAlgError as exc:
        raise DegenerateLPError("singular final basis") from exc
    y_std = np.zeros(m)
    y_std[rows] = y_kept
    y_min = (y_std * row_sign)[: lp.n_rows]
    obj_min = float(cz[:n_struct] @ z[:n_struct] + (lp.objective if lp.sense == "min" else -lp.objective) @ shift)
    if lp.sense == "max":
        return LPSolution("optimal", -obj_min, x, -y_min, "simplex", iters)
    return LPSolution("optimal", obj_min, x, y_min, "simplex", iters)


# --- HiGHS backend -------------------------------------------------------


def _highs(lp: LinearProgram) -> LPSolution:
    A = sp.csr_matrix(lp.A) if sp.issparse(lp.A) else sp.csr_matrix(lp.dense_A())
    rels = np.array(lp.relations)
    eq = np.nonzero(rels == "=")[0]
    le = np.nonzero(rels == "<=")[0]
    ge = np.nonzero(rels == ">=")[0]
    ub_rows = np.concatenate([le, ge])
    A_ub = sp.vstack([A[le], -A[ge]]) if ub_rows.size else None
    b_ub = np.concatenate([lp.rhs[le], -lp.rhs[ge]]) if ub_rows.size else None
    c = lp.objective if lp.sense == "min" else -lp.objective
    bounds = [(None if not np.isfinite(lo) else lo, None if not np.isfinite(hi) else hi)
              for lo, hi in zip(lp.lower, lp.upper)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A[eq] if eq.size else None,
                  b_eq=lp.rhs[eq] if eq.size else None, bounds=bounds, method="highs")
    if res.status == 2:
        # presolve may report "infeasible or unbounded"; decide with a zero objective
        probe = linprog(np.zeros_like(c), A_ub=A_ub, b_ub=b_ub, A_eq=A[eq] if eq.size else None,
                        b_eq=lp.rhs[eq] if eq.size else None, bounds=bounds, method="highs")
        if probe.status == 0:
            return LPSolution("unbounded", method="highs")
        return LPSolution("infeasible", method="highs")
    if res.status == 3:
        return LPSolution("unbounded", method="highs")
    if res.status != 0:
        raise LPError(f"HiGHS failed: {res.message}")
    y = np.zeros(lp.n_rows)
    if eq.size:
        y[eq] = res.eqlin.marginals
    if ub_rows.size:
        marg = res.ineqlin.marginals
        y[le] = marg[: le.size]
        y[ge] = -marg[le.size:]
    obj = float(res.fun)
    iters = int(getattr(res, "nit", 0))
    if lp.sense == "max":
        return LPSolution("optimal", -obj, res.x, -y, "highs", iters)
    return LPSolution("optimal", obj, res.x, y, "highs", iters)


def solve_lp(lp: LinearProgram, method: str = "auto", tol_feas: float = FEAS_TOL,
             tol_gap: float = GAP_TOL, check: bool = True) -> LPSolution:
    """Solve ``lp``.  ``method`` is ``simplex`` (dense, self-contained),
    ``highs`` (sparse, via scipy) or ``auto`` (dense unless the problem is large
    or sparse).  Optimal solutions are re-checked for primal/dual feasibility
    and the duality gap."""
    if method == "auto":
        small = lp.n_rows * lp.n_vars <= 250_000
        method = "simplex" if small and not sp.issparse(lp.A) else "highs"
    if method == "simplex":
        sol = _simplex(lp)
    elif method == "highs":
        sol = _highs(lp)
    else:
        raise ValueError(f"unknown LP method {method!r}")
    if sol.optimal:
        sol.extra["primal_infeasibility"] = primal_infeasibility(lp, sol.x)
        sol.extra["dual_infeasibility"] = dual_infeasibility(lp, sol.duals)
        sol.extra["duality_gap"] = duality_gap(lp, sol)
        if check:
            scale = max(1.0, abs(sol.objective))
            if sol.extra["primal_infeasibility"] > tol_feas * scale or sol.extra["dual_infeasibility"] > tol_feas * scale:
                raise LPError(f"solution fails feasibility checks: {sol.extra}")
            if sol.extra["duality_gap"] > tol_gap * scale:
                raise LPError(f"duality gap too large: {sol.extra}")
    return sol


# --- text format ---------------------------------------------------------


def dumps_lp(lp: LinearProgram) -> str:
    """Plain-text dump; floats use the shortest exact round-trip repr."""
    out = io.StringIO()
    out.write("LP 1\n")
    out.write(f"sense {lp.sense}\n")
    out.write(f"vars {lp.n_vars}\n")
    out.write("objective " + " ".join(repr(float(v)) for v in lp.objective) + "\n")
    for j in range(lp.n_vars):
        if lp.lower[j] != 0.0 or lp.upper[j] != np.inf:
            out.write(f"bound {j} {float(lp.lower[j])!r} {float(lp.upper[j])!r}\n")
    A = sp.csr_matrix(lp.A)
    for i in range(lp.n_rows):
        start, stop = A.indptr[i], A.indptr[i + 1]
        entries = " ".join(f"{j}:{float(v)!r}" for j, v in zip(A.indices[start:stop], A.data[start:stop]))
        out.write(f"row {lp.relations[i]} {float(lp.rhs[i])!r} : {entries}\n".replace(" : \n", " :\n"))
    return out.getvalue()


def loads_lp(text: str) -> LinearProgram:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].split() != ["LP", "1"]:
        raise ValueError("not an LP dump")
    sense, n, objective = "min", 0, None
    lower = upper = None
    rows, cols, vals, rels, rhs = [], [], [], [], []
    for ln in lines[1:]:
        head, _, rest = ln.partition(" ")
        if head == "sense":
            sense = rest.strip()
        elif head == "vars":
            n = int(rest)
            lower, upper = np.zeros(n), np.full(n, np.inf)
        elif head == "objective":
            objective = np.array([float(v) for v in rest.split()]) if rest.strip() else np.zeros(0)
        elif head == "bound":
            j, lo, hi = rest.split()
            lower[int(j)], upper[int(j)] = float(lo), float(hi)
        elif head == "row":
            spec, _, entries = rest.partition(":")
            rel, b = spec.split()
            i = len(rels)
            rels.append(rel)
            rhs.append(float(b))
            for item in entries.split():
                j, v = item.split(":")
                rows.append(i)
                cols.append(int(j))
                vals.append(float(v))
        else:
            raise ValueError(f"unknown LP dump line: {ln!r}")
    A = sp.csr_matrix((vals, (rows, cols)), shape=(len(rels), n))
    return LinearProgram(objective, A, rels, np.array(rhs), sense, lower, upper)


def save_lp(lp: LinearProgram, path: str | Path) -> None:
    Path(path).write_text(dumps_lp(lp), encoding="utf-8")


def load_lp(path: str | Path) -> LinearProgram:
    return loads_lp(Path(path).read_text(encoding="utf-8"))
