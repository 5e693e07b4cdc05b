import math

import numpy as np
import pytest

from conftest import pr_box
from ghzw.inflation import (DualCertificate, InflationGraph, InflationStructureError, PartyCopy, Scenario,
                            SourceCopy, build_constraint_system, dual_certificate, dumps_graph,
                            feasibility_program, gmf_lower_bound, graph_automorphisms, load_graph,
                            loads_graph, lp_sat_feasible, ring_inflation, validate_nonfanout,
                            verify_certificate, verify_system_certificate, visibility_general,
                            visibility_program)
from ghzw.lp import loads_lp, dumps_lp, solve_lp
from ghzw.polytope import local_deterministic_vertices, polytope_visibility
from ghzw.qsim import Behavior, behavior_from_state, ghz_state, uniform_behavior
from ghzw.witness import w3_strategy

S3 = Scenario(3, (2, 2, 2))


def ghz3():
    return behavior_from_state(ghz_state(3), w3_strategy())


# --- structure --------------------------------------------------------------


def test_scenario_sources():
    assert S3.source_arity == 2
    assert S3.sources == {0: (1, 2), 1: (0, 2), 2: (0, 1)}


def test_ring_order_two_triangle():
    g = ring_inflation(S3, 2)
    assert len(g.party_copies) == 6 and len(g.source_copies) == 6
    assert validate_nonfanout(g, S3)


def test_ring_is_one_cycle():
    g = ring_inflation(S3, 2)
    adj = {i: set() for i in range(6)}
    for targets in g.feeds().values():
        a, b = sorted(targets)
        adj[a].add(b)
        adj[b].add(a)
    assert all(len(v) == 2 for v in adj.values())
    seen, stack = {0}, [0]
    while stack:
        for nxt in adj[stack.pop()] - seen:
            seen.add(nxt)
            stack.append(nxt)
    assert seen == set(range(6))


def test_ring_four_parties():
    s = Scenario(4, (2, 2, 2, 2))
    g = ring_inflation(s, 2)
    assert len(g.party_copies) == 8 and len(g.source_copies) == 8
    assert validate_nonfanout(g, s)


@pytest.mark.parametrize("order", [1, 0, 2.5])
def test_ring_order_rejected(order):
    with pytest.raises(ValueError):
        ring_inflation(S3, order)


def test_validator_flags_fanout():
    g = ring_inflation(S3, 2)
    # make source copy 0 also feed the second copy of its first party
    first = g.party_copies[g.edges[0][1]]
    other = next(i for i, p in enumerate(g.party_copies) if p.role == first.role and p.copy != first.copy)
    bad = InflationGraph(g.party_copies, g.source_copies, g.edges + ((0, other),))
    report = validate_nonfanout(bad, S3)
    assert not report
    sc = g.source_copies[0]
    assert any(f"source copy ({sc.role},{sc.copy}) feeds 2 copies" in d for d in report.diagnostics)


def test_validator_flags_missing_source():
    g = ring_inflation(S3, 2)
    report = validate_nonfanout(InflationGraph(g.party_copies, g.source_copies, g.edges[1:]), S3)
    assert not report and any("receives 0 copies" in d for d in report.diagnostics)


def test_validator_empty_graph():
    assert validate_nonfanout(InflationGraph((), (), ()))


def test_graph_json_roundtrip(tmp_path):
    g = ring_inflation(S3, 3)
    assert loads_graph(dumps_graph(g)) == g
    path = tmp_path / "g.json"
    path.write_text(dumps_graph(g))
    assert load_graph(path) == g


def test_graph_json_malformed():
    with pytest.raises(InflationStructureError):
        loads_graph('{"party_copies": [{"role": 0}], "source_copies": [], "edges": []}')
    with pytest.raises(InflationStructureError):
        loads_graph('{"party_copies": [], "source_copies": [], "edges": [[0, 0]]}')


def test_automorphisms_include_identity():
    g = ring_inflation(S3, 2)
    autos = graph_automorphisms(g)
    assert tuple(range(6)) in autos
    assert len(autos) == 2


# --- constraint system --------------------------------------------------------


def test_column_count(hexagon):
    assert hexagon.n_vars == 2**6 * 2**6
    assert hexagon.M1.shape[1] == hexagon.M2.shape[1] == hexagon.c.size == 4096


def test_m2_groups_present(hexagon):
    assert set(hexagon.m2_groups) >= {"nonsignalling", "automorphism", "marginal_equality"}
    assert hexagon.M2.shape[0] == sum(hexagon.m2_groups.values())


def test_normalization_vector(hexagon):
    x = np.full(hexagon.n_vars, 1.0 / 2**6)  # uniform outcomes for every setting
    assert hexagon.c @ x == pytest.approx(1.0)
    assert np.abs(hexagon.M2 @ x).max() == pytest.approx(0.0)


def test_m1_rows_single_setting_block(hexagon):
    # within one injectable set, every column feeds at most one M1 row
    start = 0
    for _, members in hexagon.m1_sets:
        n_rows = 2 ** len(members) * 2 ** len(members)
        block = hexagon.M1[start:start + n_rows]
        assert (np.asarray((block != 0).sum(axis=0)) <= 1).all()
        start += n_rows
    assert start == hexagon.M1.shape[0]


def test_m1_marginalizes_product_distribution(hexagon):
    # inflation distribution where every copy answers deterministically
    v = local_deterministic_vertices(3, 2)[37]
    x = np.zeros(hexagon.n_vars)
    g = hexagon.graphs[0]
    ins = [2] * 6
    table = np.zeros(tuple(ins) + (2,) * 6)
    resp = [np.argmax(v.marginal([q]).reshape(2, 2), axis=1) for q in range(3)]
    for xs in np.ndindex(*ins):
        outs = tuple(int(resp[g.party_copies[k].role][xs[k]]) for k in range(6))
        table[xs + outs] = 1.0
    x[:] = table.ravel()
    assert np.allclose(hexagon.M1 @ x, hexagon.rhs(v))
    assert np.abs(hexagon.M2 @ x).max() == 0.0


def test_no_injectable_set_is_structural_error():
    s = Scenario(3, (2, 2, 2))
    parties = tuple(PartyCopy(q, 0) for q in range(3))
    # every party copy receives its own private copy of each source
    sources, edges = [], []
    for q in range(3):
        for r, scope in s.sources.items():
            if q in scope:
                sources.append(SourceCopy(r, len(sources), scope))
                edges.append((len(sources) - 1, q))
    g = InflationGraph(parties, tuple(sources), tuple(edges))
    assert validate_nonfanout(g, s)
    with pytest.raises(InflationStructureError):
        build_constraint_system(g, s)


def test_size_cap():
    s = Scenario(3, (2, 2, 2))
    with pytest.raises(InflationStructureError):
        build_constraint_system(ring_inflation(s, 3), s)


def test_invalid_graph_rejected():
    g = ring_inflation(S3, 2)
    with pytest.raises(InflationStructureError):
        build_constraint_system(InflationGraph(g.party_copies, g.source_copies, g.edges[1:]), S3)


def test_behavior_scenario_mismatch(hexagon):
    with pytest.raises(ValueError):
        hexagon.rhs(uniform_behavior((2, 2)))


# --- feasibility and visibility -----------------------------------------------


def test_white_noise_feasible(hexagon):
    u = uniform_behavior((2, 2, 2))
    assert lp_sat_feasible(hexagon, u)
    assert visibility_general(hexagon, u) >= 1 - 1e-9
    assert gmf_lower_bound(hexagon, u) == pytest.approx(0.0, abs=1e-9)


def test_local_vertices_feasible_sample(hexagon):
    vs = local_deterministic_vertices(3, 2)
    for v in vs[::9]:
        assert lp_sat_feasible(hexagon, v)
        assert gmf_lower_bound(hexagon, v) == pytest.approx(0.0, abs=1e-9)


def test_automorphism_closure(hexagon):
    rng = np.random.default_rng(4)
    vs = local_deterministic_vertices(3, 2)
    weights = rng.dirichlet(np.ones(len(vs)))
    p = Behavior((2, 2, 2), sum(w * v.table for w, v in zip(weights, vs)))
    sol = solve_lp(feasibility_program(hexagon, p), method="highs")
    assert sol.optimal
    for cmap in hexagon.automorphisms[0]:
        y = np.empty_like(sol.x)
        y[cmap] = sol.x
        assert np.abs(hexagon.M1 @ y - hexagon.rhs(p)).max() <= 1e-8
        assert np.abs(hexagon.M2 @ y).max() <= 1e-8


def test_monotone_under_white_mixing(hexagon):
    q = ghz3()
    u = uniform_behavior((2, 2, 2))
    values = [visibility_general(hexagon, q.mix(u, v)) for v in (1.0, 0.75, 0.5)]
    assert values[0] <= values[1] + 1e-9 <= values[2] + 2e-9


def test_ghz3_hexagon_status_is_reported(hexagon):
    # the order-2 ring only constrains pair marginals, which GHZ3 shares with
    # a classical model; it must therefore come out feasible
    assert lp_sat_feasible(hexagon, ghz3())


# --- a scenario where the ring certifies something ----------------------------
# With two parties every source reaches a single party, so the model is local
# hidden variables and the ring enforces monogamy of nonsignalling boxes.


def test_bell_ring_rejects_pr_box(bell_ring):
    assert not lp_sat_feasible(bell_ring, pr_box())


@pytest.mark.parametrize("weight", [1.0, 1 / math.sqrt(2), 0.55])
def test_bell_ring_visibility_at_least_local_visibility(bell_ring, weight):
    p = pr_box().mix(uniform_behavior((2, 2)), weight)
    v_inf = visibility_general(bell_ring, p)
    v_loc = polytope_visibility(p, local_deterministic_vertices(2, 2))
    assert v_inf >= v_loc - 1e-9


def test_strong_duality_and_certificate(bell_ring):
    for p in (pr_box(), pr_box(1, 0, 1).mix(uniform_behavior((2, 2)), 0.8), uniform_behavior((2, 2))):
        v = visibility_general(bell_ring, p)
        cert = dual_certificate(bell_ring, p)
        assert abs(v - 1.0 / cert.value) <= 1e-6
        report = verify_system_certificate(bell_ring, cert, p)
        assert report.passed, report.failures
        assert report.value == pytest.approx(cert.value)


def test_certificate_is_valid_inequality(bell_ring):
    cert = dual_certificate(bell_ring, pr_box())
    pw = cert.witness(bell_ring)
    assert pw.evaluate(pr_box()) == pytest.approx(cert.value) and cert.value > 1
    for v in local_deterministic_vertices(2, 2):
        assert pw.evaluate(v) <= 1 + 1e-9


def test_certificate_white_noise_crossing_below_general_visibility(bell_ring):
    p = pr_box()
    cert = dual_certificate(bell_ring, p)
    pw = cert.witness(bell_ring)
    u_val = pw.evaluate(uniform_behavior((2, 2)))
    v_white = (1 - u_val) / (pw.evaluate(p) - u_val)
    assert visibility_general(bell_ring, p) >= v_white - 1e-9


def test_verify_flags_negative_entry(bell_ring):
    cert = dual_certificate(bell_ring, pr_box())
    y1 = cert.y1.copy()
    idx = int(np.argmax(y1))
    y1[idx] = -y1[idx]
    bad = DualCertificate(y1, cert.y2, cert.value, cert.primal_value)
    report = verify_system_certificate(bell_ring, bad, pr_box())
    assert not report.nonnegative_y1 and f"index {idx}" in report.failures[0]


def test_verify_flags_dual_violation(bell_ring):
    cert = dual_certificate(bell_ring, pr_box())
    bad = DualCertificate(cert.y1 * 3 + 1, cert.y2, cert.value, cert.primal_value)
    report = verify_certificate(bell_ring.M1, bell_ring.M2, bell_ring.c, bad, bell_ring.rhs(pr_box()))
    assert not report.dual_feasible and not report.passed


def test_gmf_consistent_with_mixing(bell_ring):
    assert gmf_lower_bound(bell_ring, pr_box()) == pytest.approx(1.0, abs=1e-9)
    u = uniform_behavior((2, 2))
    for v in (0.9, 0.8, 0.7):
        p = pr_box().mix(u, v)
        g = gmf_lower_bound(bell_ring, p)
        assert 0.0 <= g <= v + 1e-9
        if visibility_general(bell_ring, p) >= 1 - 1e-9:
            assert g == pytest.approx(0.0, abs=1e-9)


def test_multiple_graphs_tie_masses():
    s = Scenario(2, (2, 2))
    cs = build_constraint_system([ring_inflation(s, 2), ring_inflation(s, 2, twist=0)], s)
    assert cs.m2_groups.get("mass") == 1 and cs.m2_groups.get("cross_graph", 0) > 0
    assert not lp_sat_feasible(cs, pr_box())
    assert lp_sat_feasible(cs, uniform_behavior((2, 2)))


def test_lp_export_roundtrip(bell_ring):
    lp = visibility_program(bell_ring, pr_box())
    again = loads_lp(dumps_lp(lp))
    assert solve_lp(again, method="highs").objective == pytest.approx(solve_lp(lp, method="highs").objective)
