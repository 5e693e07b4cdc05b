"""Local-deterministic vertices, optimization over the nonsignalling polytope,
and visibility of a behavior against a vertex-described convex set."""
from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

from .lp import LinearProgram, LPError, solve_lp
from .qsim import Behavior, deterministic_behavior
from .witness import Witness, linear_coefficients

VERTEX_CAP = 10**6


def local_deterministic_vertices(n_parties: int, inputs: int | Sequence[int], outputs: int = 2) -> list[Behavior]:
    if outputs != 2:
        raise ValueError("only dichotomic outcomes are supported")
    inputs = (inputs,) * n_parties if isinstance(inputs, int) else tuple(inputs)
    if len(inputs) != n_parties:
        raise ValueError("need one input count per party")
    count = math.prod(outputs**i for i in inputs)
    if count > VERTEX_CAP:
        raise ValueError(f"{count} deterministic strategies exceed the cap of {VERTEX_CAP}")
    per_party = [list(itertools.product(range(outputs), repeat=i)) for i in inputs]
    return [deterministic_behavior(resp) for resp in itertools.product(*per_party)]


def nonsignalling_constraints(inputs: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Equality rows (A, b) on the flattened behavior table enforcing
    per-setting normalization and no-signalling."""
    inputs = tuple(inputs)
    n = len(inputs)
    shape = inputs + (2,) * n
    size = math.prod(shape)
    idx = np.arange(size).reshape(shape)
    rows, rhs = [], []
    for xs in itertools.product(*(range(i) for i in inputs)):
        row = np.zeros(size)
        row[idx[xs].ravel()] = 1.0
        rows.append(row)
        rhs.append(1.0)
    for j in range(n):
        # marginal of everyone but j, at input s of j, equals the one at input 0
        moved = np.moveaxis(idx, (j, n + j), (0, 1))  # [x_j, a_j, rest...]
        rest_shape = moved.shape[2:]
        for s in range(1, inputs[j]):
            for rest in itertools.product(*(range(d) for d in rest_shape)):
                row = np.zeros(size)
                row[moved[(0, slice(None)) + rest]] += 1.0
                row[moved[(s, slice(None)) + rest]] -= 1.0
                rows.append(row)
                rhs.append(0.0)
    return np.array(rows), np.array(rhs)


def extremize_over_nonsignalling(w: Witness, sense: str = "max", return_behavior: bool = False):
    """Exact optimum of a linear witness over the nonsignalling polytope."""
    if w.n_parties > 4 or max(w.inputs) > 3:
        raise ValueError("nonsignalling LP limited to 4 parties")
    A, b = nonsignalling_constraints(w.inputs)
    c = linear_coefficients(w).ravel()
    sol = solve_lp(LinearProgram(c, A, ["="] * len(b), b, sense))
    if not sol.optimal:
        raise LPError(f"nonsignalling LP ended with status {sol.status}")
    value = float(sol.objective)
    if return_behavior:
        return value, Behavior.from_vector(w.inputs, np.clip(sol.x, 0.0, None))
    return value


def polytope_visibility(target: Behavior, vertices: Sequence[Behavior], method: str = "auto") -> float:
    """Largest v such that v*target + (1-v)*noise lies in the hull of
    ``vertices`` for some normalized noise: 1/tau with
    tau = min sum(lam) s.t. sum_i lam_i V_i >= target, lam >= 0."""
    if not vertices:
        raise ValueError("need at least one vertex")
    V = np.array([v.vector() for v in vertices]).T
    if V.shape[0] != target.vector().size:
        raise ValueError("vertices and target belong to different scenarios")
    lp = LinearProgram(np.ones(V.shape[1]), V, [">="] * V.shape[0], target.vector(), "min")
    sol = solve_lp(lp, method=method)
    if not sol.optimal:
        raise LPError(f"visibility LP ended with status {sol.status}")
    return min(1.0, 1.0 / sol.objective)


def hull_maximum(w: Witness, vertices: Sequence[Behavior], method: str = "auto") -> float:
    """max of w over conv(vertices), solved as an LP over mixture weights."""
    c = linear_coefficients(w).ravel()
    V = np.array([v.vector() for v in vertices])
    values = V @ c
    lp = LinearProgram(values, np.ones((1, len(vertices))), ["="], [1.0], "max")
    sol = solve_lp(lp, method=method)
    return float(sol.objective)
