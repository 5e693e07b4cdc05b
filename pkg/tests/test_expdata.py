import io
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ghzw.expdata import (TABLE1_LABELS, CountRecord, DatasetError, ExperimentDataset, MissingRowError,
                          bundled_table1, correlator_from_counts, dumps_dataset, eval_w3_from_data,
                          eval_w4_from_data, monte_carlo_sigma, outcome_probabilities, parse_dataset,
                          significance, stabilizer_fidelity, synthetic_dataset, w3_term_values)
from ghzw.qsim import (DegenerateConditionError, MeasurementStrategy, PureState, behavior_from_state,
                       ghz_state)

HEADER = ("basisA,basisB,basisC,basisD,t_seconds,"
          + ",".join("n_" + "".join(t) for t in itertools.product("pm", repeat=4)))
counts16 = st.lists(st.integers(0, 500), min_size=16, max_size=16).filter(lambda c: sum(c) > 0)


def test_bundled_table_shape():
    ds = bundled_table1()
    assert len(ds) == 9
    assert ds.record(("Z", "Z", "Z", "Z")).counts[0] == 8552
    assert ds.record(("Z", "Z", "Z", "X")).t_seconds == 20000
    assert ds.record(("X", "D+", "X", "X")).t_seconds == 4000
    assert [r.label for r in ds.records] == list(TABLE1_LABELS)


def test_roundtrip_is_lossless():
    ds = bundled_table1()
    again = parse_dataset(io.StringIO(dumps_dataset(ds)))
    assert [r.label for r in again.records] == [r.label for r in ds.records]
    assert all(np.array_equal(a.counts, b.counts) and a.t_seconds == b.t_seconds
               for a, b in zip(again.records, ds.records))
    assert dumps_dataset(again) == dumps_dataset(ds)


def test_parse_errors(tmp_path):
    with pytest.raises(DatasetError, match="empty"):
        parse_dataset(io.StringIO(""))
    short = HEADER + "\nZ,Z,Z,Z,1," + ",".join(["1"] * 14) + "\n"
    with pytest.raises(DatasetError, match="row 2"):
        parse_dataset(io.StringIO(short))
    bad_tag = HEADER + "\nZ,Y,Z,Z,1," + ",".join(["1"] * 16) + "\n"
    with pytest.raises(DatasetError, match="unknown basis"):
        parse_dataset(io.StringIO(bad_tag))
    negative = HEADER + "\nZ,Z,Z,Z,1," + ",".join(["1"] * 15 + ["-2"]) + "\n"
    with pytest.raises(DatasetError, match="negative"):
        parse_dataset(io.StringIO(negative))
    non_int = HEADER + "\nZ,Z,Z,Z,1," + ",".join(["1"] * 15 + ["2.5"]) + "\n"
    with pytest.raises(DatasetError):
        parse_dataset(io.StringIO(non_int))
    dup = HEADER + ("\nZ,Z,Z,Z,1," + ",".join(["1"] * 16)) * 2 + "\n"
    with pytest.raises(DatasetError, match="duplicate"):
        parse_dataset(io.StringIO(dup))
    path = tmp_path / "header_only.csv"
    path.write_text(HEADER + "\n")
    with pytest.raises(DatasetError, match="empty"):
        parse_dataset(path)


def test_reference_correlators():
    ds = bundled_table1()
    value, total = correlator_from_counts(ds.record(("X", "X", "X", "X")), range(4))
    assert value == pytest.approx(0.9691, abs=5e-5)
    value, total = correlator_from_counts(ds.record(("X", "D+", "X", "X")), range(4))
    assert value == pytest.approx(2793 / 3965, abs=1e-12) and total == 3965
    value, total = correlator_from_counts(ds.record(("Z", "Z", "Z", "X")), (0, 2), condition=(3, 1))
    assert value == pytest.approx(9645 / 9759, abs=1e-12) and total == 9759
    assert correlator_from_counts(ds.record(("Z", "Z", "Z", "X")), ())[0] == 1.0


def test_flip_negates():
    rec = bundled_table1().record(("Z", "D-", "X", "X"))
    plain, _ = correlator_from_counts(rec, (0, 1))
    flipped, _ = correlator_from_counts(rec, (0, 1), flips=(1,))
    assert flipped == pytest.approx(-plain)


def test_condition_validation():
    rec = bundled_table1().record(("Z", "Z", "Z", "X"))
    with pytest.raises(ValueError):
        correlator_from_counts(rec, (0, 3), condition=(3, 1))
    only_plus = CountRecord(("Z",) * 4, np.array([5] + [0] * 15), 1.0)
    with pytest.raises(DegenerateConditionError):
        correlator_from_counts(only_plus, (0,), condition=(3, -1))


@settings(max_examples=60, deadline=None)
@given(counts16, st.integers(0, 3), st.sets(st.integers(0, 3), max_size=3))
def test_conditioning_identity(counts, cond_party, parties):
    parties = sorted(parties - {cond_party})
    rec = CountRecord(("Z",) * 4, np.array(counts), 1.0)
    total = sum(counts)
    joint, _ = correlator_from_counts(rec, parties)
    acc = 0.0
    for outcome in (1, -1):
        try:
            value, n = correlator_from_counts(rec, parties, condition=(cond_party, outcome))
        except DegenerateConditionError:
            continue
        acc += value * n / total
    assert acc == pytest.approx(joint, abs=1e-12)


def test_reference_witness_values():
    ds = bundled_table1()
    assert eval_w4_from_data(ds) == pytest.approx(6.7154, abs=0.01)
    assert eval_w3_from_data(ds) == pytest.approx(9.5150, abs=0.05)
    assert w3_term_values(ds)[4] == pytest.approx(4 * 9645 / 9759)


def test_missing_rows_named():
    ds = bundled_table1()
    with pytest.raises(MissingRowError, match="Z Z Z Z"):
        eval_w4_from_data(ds.without(("Z", "Z", "Z", "Z")))
    with pytest.raises(MissingRowError, match="X D- Z X"):
        eval_w3_from_data(ds.without(("X", "D-", "Z", "X")))
    with pytest.raises(MissingRowError):
        stabilizer_fidelity(ds.without(("X", "X", "X", "X")))


def test_stabilizer_block():
    res = stabilizer_fidelity(bundled_table1())
    assert res.witness == pytest.approx(-0.9482, abs=0.005)
    assert res.fidelity_bound == pytest.approx((1 - res.witness) / 2)
    assert res.hom_visibility == pytest.approx(0.9691, abs=5e-4)
    assert len(res.pairwise_zz) == 3


def test_monte_carlo_determinism_and_threads(monkeypatch):
    ds = bundled_table1()
    a = monte_carlo_sigma(ds, "w4", 2000, seed=9)
    monkeypatch.setenv("GHZW_THREADS", "3")
    b = monte_carlo_sigma(ds, "w4", 2000, seed=9)
    assert a == b
    assert monte_carlo_sigma(ds, "w4", 2000, seed=10) != a


def test_monte_carlo_constant_evaluator():
    mean, sigma = monte_carlo_sigma(bundled_table1(), lambda counts: 1.5, 1000, seed=0)
    assert mean == 1.5 and sigma == 0.0


def test_monte_carlo_needs_enough_resamples():
    with pytest.raises(ValueError):
        monte_carlo_sigma(bundled_table1(), "w3", 10)


def test_significance():
    assert significance(6.5, 6.0, 0.25) == pytest.approx(2.0)
    assert significance(6.5, 6.0, 0.0) == float("inf")


def test_synthetic_ideal_dataset():
    ds = synthetic_dataset(ghz_state(4), 10**6, seed=1)
    assert eval_w4_from_data(ds) == pytest.approx(4 + 2 * np.sqrt(2), abs=0.01)
    assert eval_w3_from_data(ds) == pytest.approx(4 + 4 * np.sqrt(2), abs=0.01)
    res = stabilizer_fidelity(ds)
    assert res.witness == pytest.approx(-1.0) and res.fidelity_bound == pytest.approx(1.0)


def test_estimator_consistency_random_behaviors():
    rng = np.random.default_rng(8)
    shots = 10**5
    for i in range(100):
        amps = rng.normal(size=16) + 1j * rng.normal(size=16)
        state = PureState(4, amps / np.linalg.norm(amps))
        label = TABLE1_LABELS[i % len(TABLE1_LABELS)]
        ds = synthetic_dataset(state, shots, seed=i, labels=[label])
        parties = sorted(rng.choice(4, size=int(rng.integers(1, 5)), replace=False).tolist())
        est, _ = correlator_from_counts(ds.records[0], parties)
        probs = outcome_probabilities(state, label)
        signs = np.array([np.prod([1 - 2 * o[q] for q in parties])
                          for o in itertools.product(range(2), repeat=4)])
        exact = float(probs @ signs)
        sigma = np.sqrt(max(1 - exact**2, 1e-12) / shots)
        assert abs(est - exact) <= 5 * sigma + 1e-12
