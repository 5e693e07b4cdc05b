"""Linear witnesses of genuine multipartite nonlocality over correlator terms.

A witness is a list of weighted correlators ``coeff * <prod_i A^(i)_{x_i}>``
together with a bound; it is violated when its value exceeds the bound.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .qsim import (
    DIAG_MINUS,
    DIAG_PLUS,
    ArityError,
    Behavior,
    DegenerateConditionError,
    DichotomicObservable,
    MeasurementStrategy,
    X,
    Z,
    behavior_from_state,
    ghz_fidelity_formula,
    ghz_state,
    noisy_ghz,
    uniform_behavior,
)

SQRT2 = math.sqrt(2.0)
BOB_B1 = DichotomicObservable(3 * np.pi / 4)  # (X - Z)/sqrt(2)


class NoCrossingError(ValueError):
    """Target and noise give the same witness value."""


@dataclass(frozen=True)
class Participant:
    party: int
    setting: int
    flip: bool = False


@dataclass(frozen=True)
class Condition:
    """Product of the listed (party, setting) outcomes must equal ``outcome``."""

    parties: tuple[tuple[int, int], ...]
    outcome: int = 1

    def __post_init__(self):
        object.__setattr__(self, "parties", tuple((int(p), int(s)) for p, s in self.parties))
        if self.outcome not in (1, -1):
            raise ValueError("conditioning outcome must be +1 or -1")


@dataclass(frozen=True)
class CorrelatorTerm:
    participants: tuple[Participant, ...]
    coeff: float = 1.0
    condition: Condition | None = None

    def __post_init__(self):
        parts = tuple(p if isinstance(p, Participant) else Participant(*p) for p in self.participants)
        object.__setattr__(self, "participants", parts)
        seen = [p.party for p in parts]
        if self.condition is not None:
            seen += [p for p, _ in self.condition.parties]
        if len(seen) != len(set(seen)):
            raise ValueError(f"a party appears more than once in term {self}")

    @property
    def settings(self) -> dict[int, int]:
        return {p.party: p.setting for p in self.participants}

    @property
    def flips(self) -> tuple[int, ...]:
        return tuple(p.party for p in self.participants if p.flip)


def term(coeff: float, *pairs: tuple[int, int], flips: Sequence[int] = ()) -> CorrelatorTerm:
    """Shorthand: ``term(2, (0, 1), (1, 0))`` is 2<A_1 B_0>."""
    return CorrelatorTerm(tuple(Participant(p, s, p in flips) for p, s in pairs), float(coeff))


@dataclass(frozen=True)
class Witness:
    name: str
    inputs: tuple[int, ...]
    terms: tuple[CorrelatorTerm, ...]
    bound: float

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(int(i) for i in self.inputs))
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            refs = [(p.party, p.setting) for p in t.participants]
            if t.condition is not None:
                refs += list(t.condition.parties)
            for q, s in refs:
                if not (0 <= q < len(self.inputs) and 0 <= s < self.inputs[q]):
                    raise ArityError(f"term references party {q} setting {s} outside {self.inputs}")

    @property
    def n_parties(self) -> int:
        return len(self.inputs)

    @property
    def is_linear(self) -> bool:
        return all(t.condition is None for t in self.terms)


@dataclass(frozen=True)
class ProbabilityFormWitness:
    """sum coeff(x, a) P(a|x) <= bound, with coefficients of behavior-table shape.

    ``shift`` is the constant added to the correlator form: the value here equals
    the original witness value plus ``shift``.
    """

    inputs: tuple[int, ...]
    coefficients: np.ndarray = field(repr=False)
    bound: float
    shift: float = 0.0

    def evaluate(self, behavior: Behavior) -> float:
        if behavior.inputs != self.inputs:
            raise ArityError("scenario mismatch")
        return float((self.coefficients * behavior.table).sum())


# --- evaluation -----------------------------------------------------------


def expectation(behavior: Behavior, t: CorrelatorTerm) -> float:
    """Correlator of a term, without its coefficient.  Conditional terms are
    normalized by the probability of the conditioning event."""
    if t.condition is None:
        return behavior.correlator(t.settings, t.flips)
    cond = dict(t.condition.parties)
    joint = behavior.correlator({**t.settings, **cond}, t.flips)
    p_cond_sign = behavior.correlator(cond, context=t.settings)
    base = behavior.correlator(t.settings, t.flips, context=cond)
    # P(cond) <X>_cond = (<X> + s <X C>)/2 with P(cond) = (1 + s <C>)/2
    s = t.condition.outcome
    prob = (1 + s * p_cond_sign) / 2
    if prob <= 1e-15:
        raise DegenerateConditionError(f"conditioning event {t.condition} has probability 0")
    return (base + s * joint) / 2 / prob


def evaluate(w: Witness, behavior: Behavior) -> float:
    if behavior.inputs != w.inputs:
        raise ArityError(f"witness scenario {w.inputs} does not match behavior {behavior.inputs}")
    return float(sum(t.coeff * expectation(behavior, t) for t in w.terms))


def term_values(w: Witness, behavior: Behavior) -> list[float]:
    return [t.coeff * expectation(behavior, t) for t in w.terms]


def linear_coefficients(w: Witness) -> np.ndarray:
    """Coefficient array c with evaluate(w, P) == sum(c * P.table)."""
    if not w.is_linear:
        raise ValueError("conditional terms are not linear in the behavior")
    n = w.n_parties
    coeffs = np.zeros(w.inputs + (2,) * n)
    signs = np.array([1.0, -1.0])
    for t in w.terms:
        idx = [0] * n
        weights = np.full((2,) * n, t.coeff)
        for p in t.participants:
            idx[p.party] = p.setting
            shape = [1] * n
            shape[p.party] = 2
            weights = weights * (-signs if p.flip else signs).reshape(shape)
        coeffs[tuple(idx)] += weights
    return coeffs


def to_probability_form(w: Witness) -> ProbabilityFormWitness:
    coeffs = linear_coefficients(w)
    n = w.n_parties
    out_axes = tuple(range(n, 2 * n))
    lows = coeffs.min(axis=out_axes, keepdims=True)
    offsets = np.where(lows < 0, -lows, 0.0)
    shift = float(offsets.sum())
    return ProbabilityFormWitness(w.inputs, coeffs + offsets, w.bound + shift, shift)


# --- builders -------------------------------------------------------------


def build_w3() -> Witness:
    A, B, C = 0, 1, 2
    terms = (
        term(1, (A, 0), (B, 0)),
        term(1, (B, 0), (C, 0)),
        term(-1, (A, 0), (B, 1)),
        term(-1, (B, 1), (C, 0)),
        term(4, (A, 0), (C, 0)),
        term(2, (A, 1), (B, 0), (C, 1)),
        term(2, (A, 1), (B, 1), (C, 1)),
    )
    return Witness("W3", (2, 2, 2), terms, 8.0)


def build_w4() -> Witness:
    A, B, C, D = 0, 1, 2, 3
    terms = (
        term(1, (A, 0), (B, 0)),
        term(-1, (A, 0), (B, 1)),
        term(2, (A, 0), (D, 0)),
        term(2, (C, 0), (D, 0)),
        term(1, (A, 1), (B, 0), (C, 1), (D, 1)),
        term(1, (A, 1), (B, 1), (C, 1), (D, 1)),
    )
    return Witness("W4", (2, 2, 2, 2), terms, 6.0)


def build_n_party(n: int) -> Witness:
    """Conditional-CHSH plus equality-chain witness for A, B and n-2 Charlies.

    Bob has three settings; Charlies are parties 2..n-1.  The CHSH part is
    weighted by the probability of the Charlies' joint X-parity, expanded so
    that every term is an unconditional joint correlator.
    """
    if n < 3:
        raise ArityError("the N-party witness needs n >= 3")
    A, B = 0, 1
    charlies = list(range(2, n))
    parity = [(c, 1) for c in charlies]
    terms = [
        term(1, (A, 0), (B, 0)),
        term(1, (A, 0), (B, 1)),
        term(1, (A, 1), (B, 0), *parity),
        term(-1, (A, 1), (B, 1), *parity),
        term(2, (A, 0), (B, 2)),
        term(2, (B, 2), (charlies[0], 0)),
    ]
    for c1, c2 in zip(charlies, charlies[1:]):
        terms.append(term(2, (c1, 0), (c2, 0)))
    return Witness(f"N{n}", (2, 3) + (2,) * (n - 2), tuple(terms), float(2 * n))


def n_party_conditional_parts(n: int) -> tuple[Witness, Witness, Witness]:
    """(I_Bell given parity +1, I_Bell given parity -1, I_same) as separate
    witnesses, used to check the expanded form of :func:`build_n_party`."""
    A, B = 0, 1
    charlies = list(range(2, n))
    inputs = (2, 3) + (2,) * (n - 2)
    parity = tuple((c, 1) for c in charlies)

    def cond_term(coeff, a, b, outcome):
        return CorrelatorTerm((Participant(A, a), Participant(B, b)), coeff, Condition(parity, outcome))

    plus = Witness("I_Bell+", inputs, (cond_term(1, 0, 0, 1), cond_term(1, 0, 1, 1),
                                        cond_term(1, 1, 0, 1), cond_term(-1, 1, 1, 1)), 2.0)
    minus = Witness("I_Bell-", inputs, (cond_term(1, 0, 1, -1), cond_term(1, 0, 0, -1),
                                         cond_term(1, 1, 1, -1), cond_term(-1, 1, 0, -1)), 2.0)
    chain = [term(1, (A, 0), (B, 2)), term(1, (B, 2), (charlies[0], 0))]
    chain += [term(1, (c1, 0), (c2, 0)) for c1, c2 in zip(charlies, charlies[1:])]
    same = Witness("I_same", inputs, tuple(chain), float(n - 1))
    return plus, minus, same


def w3_strategy() -> MeasurementStrategy:
    return MeasurementStrategy(((Z, X), (DIAG_PLUS, BOB_B1), (Z, X)))


def w4_strategy() -> MeasurementStrategy:
    return MeasurementStrategy(((Z, X), (DIAG_PLUS, BOB_B1), (Z, X), (Z, X)))


def n_party_strategy(n: int, bob_second: DichotomicObservable = DIAG_MINUS) -> MeasurementStrategy:
    """Alice (Z, X); Bob ((Z+X)/sqrt2, bob_second, Z); Charlies (Z, X)."""
    if n < 3:
        raise ArityError("the N-party strategy needs n >= 3")
    return MeasurementStrategy(((Z, X), (DIAG_PLUS, bob_second, Z)) + ((Z, X),) * (n - 2))


BUILTINS = {
    "w3": (build_w3, w3_strategy, 3),
    "w4": (build_w4, w4_strategy, 4),
}


def builtin(name: str, n: int | None = None) -> tuple[Witness, MeasurementStrategy]:
    """Witness and its quantum strategy by name: ``w3``, ``w4`` or ``npartite``."""
    key = name.lower()
    if key in BUILTINS:
        build, strat, _ = BUILTINS[key]
        return build(), strat()
    if key in ("npartite", "n-party", "nparty"):
        if n is None:
            raise ValueError("the npartite witness needs n")
        return build_n_party(n), n_party_strategy(n)
    raise KeyError(f"unknown builtin witness {name!r}")


# --- noise thresholds -----------------------------------------------------


def crossing_visibility(target_value: float, noise_value: float, bound: float) -> float:
    """v solving v * target + (1 - v) * noise = bound, clamped to [0, 1]."""
    if target_value == noise_value:
        raise NoCrossingError("target and noise have the same witness value")
    v = (bound - noise_value) / (target_value - noise_value)
    return min(1.0, max(0.0, v))


def visibility_specific(w: Witness, target: Behavior, noise: Behavior) -> float:
    return crossing_visibility(evaluate(w, target), evaluate(w, noise), w.bound)


def white_noise_visibility(w: Witness, strategy: MeasurementStrategy) -> float:
    n = strategy.n_parties
    target = behavior_from_state(ghz_state(n), strategy)
    return visibility_specific(w, target, uniform_behavior(strategy.inputs))


class Threshold(NamedTuple):
    p: float
    fidelity: float


def noisy_value(w: Witness, strategy: MeasurementStrategy, n: int, p: float, k: float) -> float:
    return evaluate(w, behavior_from_state(noisy_ghz(n, p, k), strategy))


def threshold_mixed_noise(w: Witness, strategy: MeasurementStrategy, n: int, k: float) -> Threshold | None:
    """Smallest p at which the noisy GHZ state violates ``w``; ``None`` when
    even p = 1 does not violate it.  The value is affine in p, so the crossing
    is exact."""
    hi = noisy_value(w, strategy, n, 1.0, k)
    if hi <= w.bound:
        return None
    lo = noisy_value(w, strategy, n, 0.0, k)
    if lo > w.bound:
        return Threshold(0.0, ghz_fidelity_formula(n, 0.0, k))
    p = (w.bound - lo) / (hi - lo)
    return Threshold(p, ghz_fidelity_formula(n, p, k))


# --- JSON -----------------------------------------------------------------


def witness_to_dict(w: Witness) -> dict:
    terms = []
    for t in w.terms:
        entry: dict = {
            "parties": [{"party": p.party, "setting": p.setting, "flip": p.flip} for p in t.participants],
            "coeff": t.coeff,
        }
        if t.condition is not None:
            if len(t.condition.parties) == 1:
                (q, s), = t.condition.parties
                entry["condition"] = {"party": q, "setting": s, "outcome": t.condition.outcome}
            else:
                entry["condition"] = {
                    "parties": [{"party": q, "setting": s} for q, s in t.condition.parties],
                    "outcome": t.condition.outcome,
                }
        terms.append(entry)
    return {
        "name": w.name,
        "n_parties": w.n_parties,
        "inputs_per_party": list(w.inputs),
        "terms": terms,
        "bound": w.bound,
    }


def witness_from_dict(data: dict) -> Witness:
    inputs = tuple(data["inputs_per_party"])
    if len(inputs) != data["n_parties"]:
        raise ValueError("n_parties does not match inputs_per_party")
    terms = []
    for entry in data["terms"]:
        parts = tuple(Participant(int(p["party"]), int(p["setting"]), bool(p.get("flip", False)))
                      for p in entry["parties"])
        cond = None
        if "condition" in entry and entry["condition"] is not None:
            c = entry["condition"]
            if "parties" in c:
                pairs = tuple((int(q["party"]), int(q["setting"])) for q in c["parties"])
            else:
                pairs = ((int(c["party"]), int(c["setting"])),)
            cond = Condition(pairs, int(c.get("outcome", 1)))
        terms.append(CorrelatorTerm(parts, float(entry["coeff"]), cond))
    return Witness(str(data["name"]), inputs, tuple(terms), float(data["bound"]))


def dumps_witness(w: Witness) -> str:
    return json.dumps(witness_to_dict(w), indent=2) + "\n"


def loads_witness(text: str) -> Witness:
    return witness_from_dict(json.loads(text))


def load_witness(path: str | Path) -> Witness:
    return loads_witness(Path(path).read_text(encoding="utf-8"))


def probability_form_to_dict(pw: ProbabilityFormWitness) -> dict:
    n = len(pw.inputs)
    events = []
    for idx in itertools.product(*(range(i) for i in pw.inputs), *([range(2)] * n)):
        c = float(pw.coefficients[idx])
        if c != 0.0:
            events.append({
                "settings": list(idx[:n]),
                "outcomes": [1 - 2 * a for a in idx[n:]],
                "coeff": c,
            })
    return {"inputs_per_party": list(pw.inputs), "bound": pw.bound, "shift": pw.shift, "events": events}
