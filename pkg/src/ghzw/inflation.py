"""Nonfanout inflations of the scenario in which every (N-1)-subset of parties
shares a source and all parties additionally share classical randomness.

An inflation distribution ``x`` is a joint conditional table over every party
copy, laid out like a behavior (all copy settings, then all copy outcomes).
The constraint system is

    M1 x  = Pi P     marginals of injectable copy-sets equal observed marginals
    M2 x  = 0        nonsignalling, wiring symmetry, equal marginals of copy-sets
                     whose ancestral wiring is isomorphic
    c . x = 1        mass of the all-zero setting block

Global shared randomness is never copied or broken; since every constraint is
linear, mixtures over it are handled by convexity.
"""
from __future__ import annotations

import itertools
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .lp import FEAS_TOL, LinearProgram, LPError, solve_lp
from .qsim import ArityError, Behavior
from .witness import ProbabilityFormWitness

NNZ_CAP = 10**6
AUTOMORPHISM_SEARCH_CAP = 200_000


class InflationStructureError(ValueError):
    """The inflation graph cannot be used with the scenario."""


@dataclass(frozen=True)
class Scenario:
    n_parties: int
    inputs: tuple[int, ...]
    outputs: int = 2

    def __post_init__(self):
        inputs = tuple(int(i) for i in self.inputs)
        if self.n_parties < 2 or len(inputs) != self.n_parties:
            raise ArityError("need at least two parties and one input count per party")
        if self.outputs != 2:
            raise ValueError("only dichotomic outcomes are supported")
        object.__setattr__(self, "inputs", inputs)

    @classmethod
    def from_behavior(cls, p: Behavior) -> "Scenario":
        return cls(p.n_parties, p.inputs)

    @property
    def source_arity(self) -> int:
        return self.n_parties - 1

    @property
    def sources(self) -> dict[int, tuple[int, ...]]:
        """Source role -> scope.  A source role is named after the party it omits."""
        return {r: tuple(q for q in range(self.n_parties) if q != r) for r in range(self.n_parties)}


@dataclass(frozen=True)
class PartyCopy:
    role: int
    copy: int


@dataclass(frozen=True)
class SourceCopy:
    role: int
    copy: int
    scope: tuple[int, ...]


@dataclass(frozen=True)
class InflationGraph:
    party_copies: tuple[PartyCopy, ...]
    source_copies: tuple[SourceCopy, ...]
    edges: tuple[tuple[int, int], ...]  # (source-copy index, party-copy index)

    def __post_init__(self):
        object.__setattr__(self, "party_copies", tuple(self.party_copies))
        object.__setattr__(self, "source_copies", tuple(
            SourceCopy(s.role, s.copy, tuple(s.scope)) for s in self.source_copies))
        object.__setattr__(self, "edges", tuple((int(a), int(b)) for a, b in self.edges))
        for s, t in self.edges:
            if not (0 <= s < len(self.source_copies) and 0 <= t < len(self.party_copies)):
                raise InflationStructureError(f"edge {(s, t)} refers to a missing copy")

    def feeds(self) -> dict[int, frozenset[int]]:
        """Source-copy index -> party-copy indices it feeds."""
        out: dict[int, set[int]] = {i: set() for i in range(len(self.source_copies))}
        for s, t in self.edges:
            out[s].add(t)
        return {k: frozenset(v) for k, v in out.items()}

    def received(self, party_index: int) -> dict[int, list[int]]:
        """Source role -> source-copy indices feeding the given party copy."""
        out: dict[int, list[int]] = defaultdict(list)
        for s, t in self.edges:
            if t == party_index:
                out[self.source_copies[s].role].append(s)
        return out


def ring_inflation(s: Scenario, order: int, twist: int | None = None) -> InflationGraph:
    """``order`` copies of every party and source.  Source copy (r, i) feeds
    copy i of each party in its scope, except that the ``twist`` source
    (default: the one omitting the last party) feeds copy i+1 of the last
    party in its scope.  The single twist closes the copies into one ring."""
    if int(order) != order or order < 2:
        raise ValueError(f"inflation order must be an integer >= 2, got {order}")
    n = s.n_parties
    twist = n - 1 if twist is None else twist
    if not 0 <= twist < n:
        raise ValueError(f"twist must name a source role in 0..{n - 1}")
    parties = [PartyCopy(q, i) for q in range(n) for i in range(order)]
    pindex = {(p.role, p.copy): k for k, p in enumerate(parties)}
    sources, edges = [], []
    for r, scope in s.sources.items():
        for i in range(order):
            sources.append(SourceCopy(r, i, scope))
            for q in scope:
                offset = 1 if (r == twist and q == scope[-1]) else 0
                edges.append((len(sources) - 1, pindex[(q, (i + offset) % order)]))
    return InflationGraph(tuple(parties), tuple(sources), tuple(edges))


@dataclass
class NonfanoutReport:
    valid: bool
    diagnostics: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.valid


def validate_nonfanout(g: InflationGraph, s: Scenario | None = None) -> NonfanoutReport:
    diags = []
    scopes = {sc.role: sc.scope for sc in g.source_copies}
    if s is not None:
        scopes = {**s.sources, **scopes}
        for sc in g.source_copies:
            if sc.role in s.sources and tuple(sc.scope) != s.sources[sc.role]:
                diags.append(f"source copy ({sc.role},{sc.copy}) has scope {sc.scope}, "
                             f"expected {s.sources[sc.role]}")
        for pc in g.party_copies:
            if not 0 <= pc.role < s.n_parties:
                diags.append(f"party copy ({pc.role},{pc.copy}) has a role outside the scenario")
    for si, targets in g.feeds().items():
        sc = g.source_copies[si]
        roles = Counter(g.party_copies[t].role for t in targets)
        for role, count in sorted(roles.items()):
            if role not in sc.scope:
                diags.append(f"source copy ({sc.role},{sc.copy}) feeds party role {role} outside its scope")
            elif count > 1:
                diags.append(f"source copy ({sc.role},{sc.copy}) feeds {count} copies of party role {role}")
    for pi, pc in enumerate(g.party_copies):
        got = g.received(pi)
        for r, scope in sorted(scopes.items()):
            if pc.role in scope and len(got.get(r, [])) != 1:
                diags.append(f"party copy ({pc.role},{pc.copy}) receives {len(got.get(r, []))} "
                             f"copies of source role {r}")
    return NonfanoutReport(not diags, diags)


# --- JSON ----------------------------------------------------------------


def graph_to_dict(g: InflationGraph) -> dict:
    return {
        "party_copies": [{"role": p.role, "copy": p.copy} for p in g.party_copies],
        "source_copies": [{"role": s.role, "copy": s.copy, "scope": list(s.scope)} for s in g.source_copies],
        "edges": [list(e) for e in g.edges],
    }


def graph_from_dict(data: dict) -> InflationGraph:
    try:
        parties = tuple(PartyCopy(int(p["role"]), int(p["copy"])) for p in data["party_copies"])
        sources = tuple(SourceCopy(int(s["role"]), int(s["copy"]), tuple(int(q) for q in s["scope"]))
                        for s in data["source_copies"])
        edges = tuple((int(a), int(b)) for a, b in data["edges"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InflationStructureError(f"malformed inflation graph: {exc}") from exc
    return InflationGraph(parties, sources, edges)


def dumps_graph(g: InflationGraph) -> str:
    return json.dumps(graph_to_dict(g), indent=2)


def loads_graph(text: str) -> InflationGraph:
    return graph_from_dict(json.loads(text))


def load_graph(path: str | Path) -> InflationGraph:
    return loads_graph(Path(path).read_text())


# --- index helpers ---------------------------------------------------------


def _fibres(inputs: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Flat table indices grouped into marginal events.

    Row r lists the entries of a table over slots with ``inputs`` (settings
    axes then outcome axes) that sum to the r-th event of the ``keep`` slots,
    other slots at setting 0.  Rows run settings-major in ``keep`` order."""
    m = len(inputs)
    idx = np.arange(math.prod(inputs) * 2**m).reshape(tuple(inputs) + (2,) * m)
    keep = list(keep)
    sel = tuple(slice(None) if q in keep else 0 for q in range(m)) + (slice(None),) * m
    sub = idx[sel]
    k = len(keep)
    ranked = sorted(keep)
    order = [ranked.index(q) for q in keep] + [k + q for q in keep] + [k + q for q in range(m) if q not in keep]
    sub = sub.transpose(order)
    n_rows = math.prod(inputs[q] for q in keep) * 2**k
    return sub.reshape(n_rows, -1)


def _slot_permutation(inputs: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Column map induced by moving slot i's values to slot perm[i]."""
    m = len(inputs)
    idx = np.arange(math.prod(inputs) * 2**m).reshape(tuple(inputs) + (2,) * m)
    axes = [perm[j] for j in range(m)] + [m + perm[j] for j in range(m)]
    return idx.transpose(axes).ravel()


def graph_automorphisms(g: InflationGraph) -> list[tuple[int, ...]]:
    """Role-preserving permutations of party copies that map the wiring onto
    itself (source copies permuted accordingly).  Includes the identity."""
    by_role: dict[int, list[int]] = defaultdict(list)
    for i, p in enumerate(g.party_copies):
        by_role[p.role].append(i)
    roles = sorted(by_role)
    size = math.prod(math.factorial(len(by_role[r])) for r in roles)
    if size > AUTOMORPHISM_SEARCH_CAP:
        raise InflationStructureError(f"automorphism search over {size} candidates exceeds the cap")
    feeds = g.feeds()
    signature = Counter((g.source_copies[s].role, t) for s, t in feeds.items())
    found = []
    for choice in itertools.product(*(itertools.permutations(by_role[r]) for r in roles)):
        perm = list(range(len(g.party_copies)))
        for r, image in zip(roles, choice):
            for src, dst in zip(by_role[r], image):
                perm[src] = dst
        mapped = Counter((g.source_copies[s].role, frozenset(perm[t] for t in ts)) for s, ts in feeds.items())
        if mapped == signature:
            found.append(tuple(perm))
    return found


def _generators(perms: list[tuple[int, ...]]) -> list[tuple[int, ...]]:
    """A generating subset of a permutation group given by all its elements."""
    if not perms:
        return []
    ident = tuple(range(len(perms[0])))
    closure = {ident}
    gens = []
    for p in perms:
        if p in closure:
            continue
        gens.append(p)
        frontier = list(closure)
        while frontier:
            q = frontier.pop()
            for h in gens:
                r = tuple(h[i] for i in q)
                if r not in closure:
                    closure.add(r)
                    frontier.append(r)
    return gens


def copy_set_signatures(g: InflationGraph, s: Scenario) -> dict[tuple, list[tuple[int, ...]]]:
    """Group copy-sets (one copy per role, ordered by role, at least two roles)
    by their ancestral wiring.

    Key: (roles, sharing pattern), where the pattern lists for every source role
    the partition of the set's roles by the source copy they receive."""
    by_role: dict[int, list[int]] = defaultdict(list)
    for i, p in enumerate(g.party_copies):
        by_role[p.role].append(i)
    received = {i: {r: v[0] for r, v in g.received(i).items()} for i in range(len(g.party_copies))}
    groups: dict[tuple, list[tuple[int, ...]]] = defaultdict(list)
    for k in range(2, s.n_parties + 1):
        for roles in itertools.combinations(range(s.n_parties), k):
            if any(not by_role[r] for r in roles):
                continue
            for members in itertools.product(*(by_role[r] for r in roles)):
                pattern = []
                for r, scope in sorted(s.sources.items()):
                    blocks: dict[int, list[int]] = defaultdict(list)
                    for role, pc in zip(roles, members):
                        if role in scope:
                            blocks[received[pc][r]].append(role)
                    pattern.append(tuple(sorted(tuple(b) for b in blocks.values())))
                groups[(roles, tuple(pattern))].append(members)
    return groups


def is_injectable_pattern(key: tuple) -> bool:
    _, pattern = key
    return all(len(blocks) <= 1 for blocks in pattern)


# --- constraint system -----------------------------------------------------


@dataclass
class InflationConstraintSystem:
    scenario: Scenario
    graphs: tuple[InflationGraph, ...]
    offsets: tuple[int, ...]  # first column of each graph's block
    n_vars: int
    M1: sp.csr_matrix
    M2: sp.csr_matrix
    c: np.ndarray
    observed_map: sp.csr_matrix  # Pi: behavior vector -> M1 right-hand side
    m1_sets: list[tuple[int, tuple[int, ...]]]  # (graph index, copy-set) per M1 block
    m2_groups: dict[str, int]
    automorphisms: list[list[np.ndarray]]  # per graph: global column maps

    def rhs(self, p: Behavior) -> np.ndarray:
        if p.inputs != self.scenario.inputs:
            raise ArityError(f"behavior inputs {p.inputs} do not match the scenario {self.scenario.inputs}")
        return self.observed_map @ p.vector()


def _rows_from_fibres(plus: np.ndarray, minus: np.ndarray | None, row0: int):
    n_rows, k = plus.shape
    rows = np.repeat(np.arange(row0, row0 + n_rows), k)
    cols, vals = plus.ravel(), np.ones(plus.size)
    if minus is not None:
        rows = np.concatenate([rows, np.repeat(np.arange(row0, row0 + n_rows), minus.shape[1])])
        cols = np.concatenate([cols, minus.ravel()])
        vals = np.concatenate([vals, -np.ones(minus.size)])
    return rows, cols, vals


class _Rows:
    def __init__(self, n_cols: int):
        self.n_cols = n_cols
        self.parts: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
        self.n_rows = 0
        self.nnz = 0

    def add(self, plus: np.ndarray, minus: np.ndarray | None = None) -> int:
        rows, cols, vals = _rows_from_fibres(plus, minus, self.n_rows)
        self.parts.append((rows, cols, vals))
        self.n_rows += plus.shape[0]
        self.nnz += vals.size
        if self.nnz > NNZ_CAP:
            raise InflationStructureError(f"constraint system exceeds {NNZ_CAP} nonzeros")
        return plus.shape[0]

    def matrix(self) -> sp.csr_matrix:
        if not self.parts:
            return sp.csr_matrix((0, self.n_cols))
        rows, cols, vals = (np.concatenate(v) for v in zip(*self.parts))
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.n_rows, self.n_cols))


def build_constraint_system(graphs: InflationGraph | Iterable[InflationGraph], s: Scenario) -> InflationConstraintSystem:
    graphs = (graphs,) if isinstance(graphs, InflationGraph) else tuple(graphs)
    if not graphs:
        raise InflationStructureError("need at least one inflation graph")
    slot_inputs, offsets, total = [], [], 0
    for g in graphs:
        report = validate_nonfanout(g, s)
        if not report:
            raise InflationStructureError("; ".join(report.diagnostics))
        ins = [s.inputs[p.role] for p in g.party_copies]
        slot_inputs.append(ins)
        offsets.append(total)
        total += math.prod(ins) * 2 ** len(ins)
    # rough size check before allocating anything
    if total > NNZ_CAP:
        raise InflationStructureError(f"{total} inflation columns exceed the {NNZ_CAP} nonzero cap")

    m1 = _Rows(total)
    m2 = _Rows(total)
    counts = Counter()
    pi_blocks, m1_sets = [], []
    behavior_fibres = {}
    automorphisms = []
    canonical: dict[tuple, tuple[int, tuple[int, ...]]] = {}

    for gi, (g, ins) in enumerate(zip(graphs, slot_inputs)):
        off = offsets[gi]
        m = len(ins)
        idx = np.arange(math.prod(ins) * 2**m).reshape(tuple(ins) + (2,) * m) + off

        for q in range(m):
            moved = np.moveaxis(idx, (q, m + q), (0, 1))
            for setting in range(1, ins[q]):
                base = moved[0].reshape(2, -1).T
                other = moved[setting].reshape(2, -1).T
                counts["nonsignalling"] += m2.add(base, other)

        perms = graph_automorphisms(g)
        maps = [_slot_permutation(ins, p) + off for p in perms]
        automorphisms.append(maps)
        pairs = set()
        for p in _generators(perms):
            cmap = _slot_permutation(ins, p) + off
            cols = np.arange(off, off + cmap.size)
            moved_cols = cols != cmap
            lo = np.minimum(cols, cmap)[moved_cols]
            hi = np.maximum(cols, cmap)[moved_cols]
            pairs.update(zip(lo.tolist(), hi.tolist()))
        if pairs:
            arr = np.array(sorted(pairs))
            counts["automorphism"] += m2.add(arr[:, :1], arr[:, 1:])

        groups = copy_set_signatures(g, s)
        for key, members in sorted(groups.items()):
            first = members[0]
            f0 = _fibres(ins, first) + off
            for other in members[1:]:
                counts["marginal_equality"] += m2.add(f0, _fibres(ins, other) + off)
            if key in canonical:
                cg, cset = canonical[key]
                ref = _fibres(slot_inputs[cg], cset) + offsets[cg]
                counts["cross_graph"] += m2.add(f0, ref)
            else:
                canonical[key] = (gi, first)

        injectable = [key for key in groups if is_injectable_pattern(key)]
        if not injectable:
            raise InflationStructureError("no injectable copy-set of two or more parties")
        role_sets = [key[0] for key in injectable]
        maximal = [key for key in injectable
                   if not any(set(key[0]) < set(other) for other in role_sets)]
        for key in sorted(maximal):
            roles = key[0]
            members = groups[key][0]
            m1.add(_fibres(ins, members) + off)
            if roles not in behavior_fibres:
                behavior_fibres[roles] = _fibres(s.inputs, roles)
            pi_blocks.append(behavior_fibres[roles])
            m1_sets.append((gi, members))

        if gi > 0:
            zero = idx[(0,) * m].reshape(1, -1)
            ref_ins = slot_inputs[0]
            ref = (np.arange(math.prod(ref_ins) * 2 ** len(ref_ins)).reshape(tuple(ref_ins) + (2,) * len(ref_ins))
                   [(0,) * len(ref_ins)].reshape(1, -1))
            counts["mass"] += m2.add(zero, ref)

    size = math.prod(s.inputs) * 2**s.n_parties
    pi_rows = _Rows(size)
    for block in pi_blocks:
        pi_rows.add(block)

    c = np.zeros(total)
    ins0 = slot_inputs[0]
    first_block = np.arange(math.prod(ins0) * 2 ** len(ins0)).reshape(tuple(ins0) + (2,) * len(ins0))
    c[first_block[(0,) * len(ins0)].ravel()] = 1.0
    return InflationConstraintSystem(
        scenario=s, graphs=graphs, offsets=tuple(offsets), n_vars=total,
        M1=m1.matrix(), M2=m2.matrix(), c=c, observed_map=pi_rows.matrix(),
        m1_sets=m1_sets, m2_groups=dict(counts), automorphisms=automorphisms)


# --- linear programs -------------------------------------------------------


def _stack(cs: InflationConstraintSystem) -> sp.csr_matrix:
    return sp.vstack([cs.M1, cs.M2]).tocsr()


def feasibility_program(cs: InflationConstraintSystem, p: Behavior) -> LinearProgram:
    rels = ["="] * (cs.M1.shape[0] + cs.M2.shape[0])
    rhs = np.concatenate([cs.rhs(p), np.zeros(cs.M2.shape[0])])
    return LinearProgram(np.zeros(cs.n_vars), _stack(cs), rels, rhs, "min")


def visibility_program(cs: InflationConstraintSystem, p: Behavior) -> LinearProgram:
    """tau = min c.x  s.t.  M1 x >= Pi P,  M2 x = 0,  x >= 0."""
    rels = [">="] * cs.M1.shape[0] + ["="] * cs.M2.shape[0]
    rhs = np.concatenate([cs.rhs(p), np.zeros(cs.M2.shape[0])])
    return LinearProgram(cs.c, _stack(cs), rels, rhs, "min")


def fraction_program(cs: InflationConstraintSystem, p: Behavior) -> LinearProgram:
    """max c.x  s.t.  M1 x <= Pi P,  M2 x = 0,  x >= 0."""
    rels = ["<="] * cs.M1.shape[0] + ["="] * cs.M2.shape[0]
    rhs = np.concatenate([cs.rhs(p), np.zeros(cs.M2.shape[0])])
    return LinearProgram(cs.c, _stack(cs), rels, rhs, "max")


def lp_sat_feasible(cs: InflationConstraintSystem, p: Behavior, tol_feas: float = FEAS_TOL) -> bool:
    sol = solve_lp(feasibility_program(cs, p), method="highs", tol_feas=tol_feas)
    if sol.status == "unbounded":
        raise LPError("a zero-objective feasibility program cannot be unbounded")
    return sol.optimal


def _solve_visibility(cs, p, tol_feas, tol_gap):
    sol = solve_lp(visibility_program(cs, p), method="highs", tol_feas=tol_feas, tol_gap=tol_gap)
    if not sol.optimal:
        raise LPError(f"visibility program ended with status {sol.status}")
    if sol.objective <= 0:
        raise LPError("visibility program has a nonpositive optimum")
    return sol


def visibility_general(cs: InflationConstraintSystem, p: Behavior,
                       tol_feas: float = FEAS_TOL, tol_gap: float = 1e-7) -> float:
    """1/tau; at least 1 exactly when p satisfies the inflation constraints."""
    return 1.0 / _solve_visibility(cs, p, tol_feas, tol_gap).objective


@dataclass
class DualCertificate:
    y1: np.ndarray  # over M1 rows
    y2: np.ndarray  # over the rows of [M2; -M2]
    value: float  # y1 . (Pi P)
    primal_value: float

    def witness(self, cs: InflationConstraintSystem) -> ProbabilityFormWitness:
        """The certificate as an inequality sum coeff * P(a|x) <= 1 on behaviors."""
        coeffs = cs.observed_map.T @ self.y1
        inputs = cs.scenario.inputs
        return ProbabilityFormWitness(inputs, coeffs.reshape(inputs + (2,) * len(inputs)), 1.0)


def dual_certificate(cs: InflationConstraintSystem, p: Behavior,
                     tol_feas: float = FEAS_TOL, tol_gap: float = 1e-7) -> DualCertificate:
    sol = _solve_visibility(cs, p, tol_feas, tol_gap)
    k = cs.M1.shape[0]
    y1 = np.maximum(sol.duals[:k], 0.0)
    w = sol.duals[k:]
    y2 = np.concatenate([np.maximum(w, 0.0), np.maximum(-w, 0.0)])
    return DualCertificate(y1, y2, float(y1 @ cs.rhs(p)), float(sol.objective))


@dataclass
class CertificateReport:
    nonnegative_y1: bool
    nonnegative_y2: bool
    dual_feasible: bool
    max_violation: float
    value: float
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.nonnegative_y1 and self.nonnegative_y2 and self.dual_feasible


def verify_certificate(M1, M2, c, cert: DualCertificate, rhs: np.ndarray,
                       tol_sign: float = 1e-10, tol_feas: float = 1e-8) -> CertificateReport:
    """Re-check a certificate from the raw matrices only:
    y1, y2 >= 0 and M1^T y1 + [M2; -M2]^T y2 <= c."""
    failures = []
    y1 = np.asarray(cert.y1, dtype=float)
    y2 = np.asarray(cert.y2, dtype=float)
    neg1 = np.nonzero(y1 < -tol_sign)[0]
    neg2 = np.nonzero(y2 < -tol_sign)[0]
    if neg1.size:
        failures.append(f"y1 negative at index {int(neg1[0])}")
    if neg2.size:
        failures.append(f"y2 negative at index {int(neg2[0])}")
    half = M2.shape[0]
    if y2.size != 2 * half or y1.size != M1.shape[0]:
        failures.append("certificate length does not match the constraint system")
        return CertificateReport(not neg1.size, not neg2.size, False, math.inf, math.nan, failures)
    lhs = M1.T @ y1 + M2.T @ (y2[:half] - y2[half:])
    excess = lhs - np.asarray(c, dtype=float)
    worst = float(excess.max(initial=0.0))
    if worst > tol_feas:
        failures.append(f"dual constraint violated by {worst:.3g} at column {int(np.argmax(excess))}")
    return CertificateReport(not neg1.size, not neg2.size, worst <= tol_feas, worst,
                             float(y1 @ rhs), failures)


def verify_system_certificate(cs: InflationConstraintSystem, cert: DualCertificate, p: Behavior) -> CertificateReport:
    return verify_certificate(cs.M1, cs.M2, cs.c, cert, cs.rhs(p))


def gmf_lower_bound(cs: InflationConstraintSystem, p: Behavior,
                    tol_feas: float = FEAS_TOL, tol_gap: float = 1e-7) -> float:
    """1 - max{c.x : M1 x <= Pi P, M2 x = 0, x >= 0}, clipped to [0, 1]."""
    sol = solve_lp(fraction_program(cs, p), method="highs", tol_feas=tol_feas, tol_gap=tol_gap)
    if not sol.optimal:
        raise LPError(f"fraction program ended with status {sol.status}")
    return float(min(1.0, max(0.0, 1.0 - sol.objective)))
