"""Dense simulation of N-qubit GHZ states, dichotomic measurements and the
behaviors (conditional outcome tables) they produce.

Outcome index 0 stands for the +1 eigenvalue and index 1 for -1.  A behavior
table has shape ``inputs + (2,) * n``, i.e. settings first, then outcomes.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGNS = np.array([1.0, -1.0])


class ArityError(ValueError):
    """Party/qubit counts are inconsistent."""


class DegenerateConditionError(ZeroDivisionError):
    """Conditioning event has zero probability."""


@dataclass(frozen=True)
class PureState:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise ArityError(f"expected {2**self.n_qubits} amplitudes, got {amps.shape}")
        if abs(np.vdot(amps, amps).real - 1.0) > 1e-12:
            raise ValueError("state is not normalized")
        object.__setattr__(self, "amplitudes", amps)

    def density(self) -> "MixedState":
        return MixedState(self.n_qubits, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class MixedState:
    n_qubits: int
    density: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.density, dtype=complex)
        dim = 2**self.n_qubits
        if rho.shape != (dim, dim):
            raise ArityError(f"expected a {dim}x{dim} density matrix, got {rho.shape}")
        if np.abs(rho - rho.conj().T).max() > 1e-12:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > 1e-12:
            raise ValueError("density matrix does not have unit trace")
        if np.linalg.eigvalsh(rho).min() < -1e-10:
            raise ValueError("density matrix is not positive semidefinite")
        object.__setattr__(self, "density", rho)


def ghz_state(n: int, phase: str = "+") -> PureState:
    """(|0...0> + |1...1>)/sqrt(2), or the relative minus sign for ``phase='-'``."""
    if n < 2:
        raise ArityError("GHZ states need at least 2 qubits")
    if phase not in ("+", "-"):
        raise ValueError("phase must be '+' or '-'")
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = 1 / np.sqrt(2)
    amps[-1] = (1 if phase == "+" else -1) / np.sqrt(2)
    return PureState(n, amps)


def white_noise(n: int) -> MixedState:
    return MixedState(n, np.eye(2**n, dtype=complex) / 2**n)


def noisy_ghz(n: int, p: float, k: float) -> MixedState:
    """p |GHZ><GHZ| + k(1-p) |GHZ-><GHZ-| + (1-p)(1-k) I/2^n."""
    if not (0.0 <= p <= 1.0 and 0.0 <= k <= 1.0):
        raise ValueError(f"p and k must lie in [0, 1], got p={p}, k={k}")
    plus = ghz_state(n, "+").density().density
    minus = ghz_state(n, "-").density().density
    rho = p * plus + k * (1 - p) * minus + (1 - p) * (1 - k) * np.eye(2**n) / 2**n
    return MixedState(n, rho)


def fidelity_to_ghz(state: MixedState) -> float:
    ghz = ghz_state(state.n_qubits).amplitudes
    return float(np.vdot(ghz, state.density @ ghz).real)


def ghz_fidelity_formula(n: int, p: float, k: float) -> float:
    return p + (1 - p) * (1 - k) / 2**n


@dataclass(frozen=True)
class DichotomicObservable:
    """cos(angle) Z + sin(angle) X, optionally with both outcomes relabelled."""

    angle: float
    flip: bool = False

    def matrix(self) -> np.ndarray:
        op = np.cos(self.angle) * SIGMA_Z + np.sin(self.angle) * SIGMA_X
        return -op if self.flip else op

    def projectors(self) -> np.ndarray:
        """Array of shape (2, 2, 2): [outcome index, row, col]."""
        op = self.matrix()
        eye = np.eye(2)
        return np.stack([(eye + op) / 2, (eye - op) / 2])


Z = DichotomicObservable(0.0)
X = DichotomicObservable(np.pi / 2)
DIAG_PLUS = DichotomicObservable(np.pi / 4)  # (Z + X)/sqrt(2)
DIAG_MINUS = DichotomicObservable(-np.pi / 4)  # (Z - X)/sqrt(2)


@dataclass(frozen=True)
class MeasurementStrategy:
    settings: tuple[tuple[DichotomicObservable, ...], ...]

    def __post_init__(self):
        settings = tuple(tuple(s) for s in self.settings)
        if not settings or any(len(s) == 0 for s in settings):
            raise ArityError("every party needs at least one setting")
        object.__setattr__(self, "settings", settings)

    @property
    def n_parties(self) -> int:
        return len(self.settings)

    @property
    def inputs(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.settings)


@dataclass(frozen=True)
class Behavior:
    """Conditional distribution P(a_1..a_n | x_1..x_n) over +/-1 outcomes."""

    inputs: tuple[int, ...]
    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        inputs = tuple(int(i) for i in self.inputs)
        table = np.asarray(self.table, dtype=float)
        if table.shape != inputs + (2,) * len(inputs):
            raise ArityError(f"table shape {table.shape} does not match inputs {inputs}")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "table", table)

    @property
    def n_parties(self) -> int:
        return len(self.inputs)

    @classmethod
    def from_vector(cls, inputs: Sequence[int], vec: np.ndarray) -> "Behavior":
        inputs = tuple(inputs)
        return cls(inputs, np.asarray(vec, dtype=float).reshape(inputs + (2,) * len(inputs)))

    def vector(self) -> np.ndarray:
        """Flattened table, settings-major."""
        return self.table.ravel()

    def is_normalized(self, tol: float = 1e-10) -> bool:
        n = self.n_parties
        sums = self.table.sum(axis=tuple(range(n, 2 * n)))
        return bool(np.all(np.abs(sums - 1) <= tol) and self.table.min() >= -1e-12)

    def marginal(self, parties: Sequence[int], others_setting: Sequence[int] | None = None) -> np.ndarray:
        """Marginal table over ``parties`` (their settings then their outcomes,
        both in the order given), with the remaining parties' inputs fixed
        (default all 0)."""
        n = self.n_parties
        parties = list(parties)
        rest = [q for q in range(n) if q not in parties]
        fixed = list(others_setting) if others_setting is not None else [0] * len(rest)
        index: list = [slice(None)] * (2 * n)
        for q, s in zip(rest, fixed):
            index[q] = s
        sub = self.table[tuple(index)]
        # remaining axes: settings of `parties` (ascending), then all n outcome axes
        n_keep = len(parties)
        out_axes = tuple(n_keep + q for q in rest)
        sub = sub.sum(axis=out_axes)
        order = np.argsort(parties)
        perm = list(order) + [n_keep + i for i in order]
        inv = np.argsort(perm)
        return np.transpose(sub, inv)

    def is_nonsignalling(self, tol: float = 1e-10) -> bool:
        n = self.n_parties
        for j in range(n):
            if self.inputs[j] < 2:
                continue
            # sum over party j's outcome; result must not depend on party j's input
            summed = self.table.sum(axis=n + j)
            ref = np.take(summed, 0, axis=j)
            for s in range(1, self.inputs[j]):
                if np.abs(np.take(summed, s, axis=j) - ref).max() > tol:
                    return False
        return True

    def correlator(self, parties: dict[int, int], flips: Sequence[int] = (),
                   context: dict[int, int] | None = None) -> float:
        """<prod_i A_i> for ``parties = {party: setting}``.  Unreferenced
        parties are marginalized at the input given in ``context`` (default 0)."""
        n = self.n_parties
        index: list = [0] * n
        for q, s in (context or {}).items():
            index[q] = s
        for q, s in parties.items():
            if not 0 <= q < n or not 0 <= s < self.inputs[q]:
                raise ArityError(f"party {q} setting {s} not in scenario {self.inputs}")
            index[q] = s
        dist = self.table[tuple(index)]
        weights = np.ones((2,) * n)
        for q in parties:
            shape = [1] * n
            shape[q] = 2
            sign = -SIGNS if q in flips else SIGNS
            weights = weights * sign.reshape(shape)
        return float((dist * weights).sum())

    def mix(self, other: "Behavior", weight: float) -> "Behavior":
        """weight * self + (1 - weight) * other."""
        if other.inputs != self.inputs:
            raise ArityError("cannot mix behaviors of different scenarios")
        return Behavior(self.inputs, weight * self.table + (1 - weight) * other.table)


def uniform_behavior(inputs: Sequence[int]) -> Behavior:
    inputs = tuple(inputs)
    n = len(inputs)
    return Behavior(inputs, np.full(inputs + (2,) * n, 1.0 / 2**n))


def deterministic_behavior(responses: Sequence[Sequence[int]]) -> Behavior:
    """``responses[i][x]`` is party i's outcome index for input x."""
    inputs = tuple(len(r) for r in responses)
    n = len(inputs)
    table = np.zeros(inputs + (2,) * n)
    for xs in itertools.product(*(range(i) for i in inputs)):
        outs = tuple(responses[q][xs[q]] for q in range(n))
        table[xs + outs] = 1.0
    return Behavior(inputs, table)


def behavior_from_state(state: MixedState | PureState, strategy: MeasurementStrategy) -> Behavior:
    if isinstance(state, PureState):
        state = state.density()
    n = state.n_qubits
    if strategy.n_parties != n:
        raise ArityError(f"strategy has {strategy.n_parties} parties but the state has {n} qubits")
    # rho as tensor [i1..in, j1..jn]; Tr(rho Pi) = sum rho[i, j] Pi[j, i]
    tensor = state.density.reshape((2,) * (2 * n))
    for q, observables in enumerate(strategy.settings):
        proj = np.stack([o.projectors() for o in observables])  # [x, a, row, col]
        # contract ket axis (always axis 0 after previous contractions) and its bra
        remaining = n - q
        tensor = np.tensordot(tensor, proj, axes=([0, remaining], [3, 2]))
    # axes now: x1, a1, x2, a2, ...
    perm = [2 * q for q in range(n)] + [2 * q + 1 for q in range(n)]
    table = np.transpose(tensor, perm).real
    table = np.where(np.abs(table) < 1e-15, 0.0, table)
    return Behavior(strategy.inputs, table)
