"""Four-photon coincidence tables: parsing, correlator estimates, witness
values, Poisson Monte Carlo error bars and the two-setting fidelity witness.

Counts are held as arrays of shape ``(..., 16)`` in ``++++, +++-, ..., ----``
order so that every estimator also works on a batch of resampled tables.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np

from .qsim import (DIAG_MINUS, DIAG_PLUS, DegenerateConditionError, MeasurementStrategy,
                   MixedState, PureState, X, Z, behavior_from_state)

BASES = {"Z": Z, "X": X, "D+": DIAG_PLUS, "D-": DIAG_MINUS}
N_PARTIES = 4
OUTCOME_TAGS = ["".join(t) for t in itertools.product("pm", repeat=N_PARTIES)]
HEADER = [f"basis{c}" for c in "ABCD"] + ["t_seconds"] + [f"n_{t}" for t in OUTCOME_TAGS]
# +1/-1 value of each party's outcome for each of the 16 columns
_SIGNS = np.array(list(itertools.product([1, -1], repeat=N_PARTIES)), dtype=float)

Label = tuple[str, str, str, str]
CountsByLabel = Mapping[Label, np.ndarray]


class DatasetError(ValueError):
    pass


class MissingRowError(DatasetError):
    pass


@dataclass(frozen=True)
class CountRecord:
    label: Label
    counts: np.ndarray = field(repr=False)
    t_seconds: float

    def __post_init__(self):
        label = tuple(self.label)
        if len(label) != N_PARTIES or any(b not in BASES for b in label):
            raise DatasetError(f"bad setting label {label}")
        counts = np.asarray(self.counts)
        if counts.shape != (16,) or not np.issubdtype(counts.dtype, np.integer):
            raise DatasetError(f"{label}: need 16 integer counts")
        if counts.min() < 0:
            raise DatasetError(f"{label}: negative count")
        if counts.sum() == 0:
            raise DatasetError(f"{label}: all counts are zero")
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "counts", counts.astype(np.int64))


@dataclass(frozen=True)
class ExperimentDataset:
    records: tuple[CountRecord, ...]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        labels = [r.label for r in self.records]
        dupes = {l for l in labels if labels.count(l) > 1}
        if dupes:
            raise DatasetError(f"duplicate setting labels: {sorted(dupes)}")
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self) -> int:
        return len(self.records)

    def record(self, label: Sequence[str]) -> CountRecord:
        label = tuple(label)
        for r in self.records:
            if r.label == label:
                return r
        raise MissingRowError(f"dataset has no {' '.join(label)} row")

    def counts_by_label(self) -> dict[Label, np.ndarray]:
        return {r.label: r.counts for r in self.records}

    def without(self, label: Sequence[str]) -> "ExperimentDataset":
        return ExperimentDataset(tuple(r for r in self.records if r.label != tuple(label)), dict(self.provenance))


def _parse_label(text: str) -> Label:
    return tuple(text.split())


def parse_dataset(source: str | Path | io.TextIOBase) -> ExperimentDataset:
    """Read a counts CSV from a path or an open text stream."""
    if isinstance(source, (str, Path)):
        name = str(source)
        with open(source, newline="", encoding="utf-8") as fh:
            text = fh.read()
    else:
        name = getattr(source, "name", "<stream>")
        text = source.read()
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if any(cell.strip() for cell in row)]
    if not rows:
        raise DatasetError(f"{name}: empty dataset")
    header = [h.strip() for h in rows[0]]
    if header != HEADER:
        raise DatasetError(f"{name}: unexpected header {header}")
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(HEADER):
            raise DatasetError(f"{name} row {lineno}: expected {len(HEADER)} columns, got {len(row)}")
        label = tuple(cell.strip() for cell in row[:4])
        unknown = [b for b in label if b not in BASES]
        if unknown:
            raise DatasetError(f"{name} row {lineno}: unknown basis tag {unknown[0]!r}")
        try:
            t = float(row[4])
            counts = np.array([int(cell) for cell in row[5:]], dtype=np.int64)
        except ValueError as exc:
            raise DatasetError(f"{name} row {lineno}: {exc}") from exc
        try:
            records.append(CountRecord(label, counts, t))
        except DatasetError as exc:
            raise DatasetError(f"{name} row {lineno}: {exc}") from exc
    if not records:
        raise DatasetError(f"{name}: empty dataset")
    return ExperimentDataset(tuple(records), {"source": name})


def dumps_dataset(ds: ExperimentDataset) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(HEADER)
    for r in ds.records:
        t = int(r.t_seconds) if float(r.t_seconds).is_integer() else r.t_seconds
        writer.writerow(list(r.label) + [t] + [int(n) for n in r.counts])
    return out.getvalue()


def bundled_table1() -> ExperimentDataset:
    """The nine-setting reference dataset shipped with the package."""
    text = resources.files("ghzw").joinpath("data/table1.csv").read_text(encoding="utf-8")
    ds = parse_dataset(io.StringIO(text))
    return ExperimentDataset(ds.records, {"source": "bundled:table1.csv"})


# --- estimators ------------------------------------------------------------


def _correlate(counts: np.ndarray, parties: Sequence[int], flips: Sequence[int] = (),
               condition: tuple[int, int] | None = None) -> tuple[np.ndarray, np.ndarray]:
    counts = np.asarray(counts, dtype=float)
    sign = np.ones(16)
    for q in parties:
        sign = sign * _SIGNS[:, q] * (-1.0 if q in flips else 1.0)
    mask = np.ones(16)
    if condition is not None:
        q, outcome = condition
        mask = (_SIGNS[:, q] == outcome).astype(float)
    total = (counts * mask).sum(axis=-1)
    if np.any(total == 0):
        raise DegenerateConditionError("conditioned slice has no counts")
    return (counts * mask * sign).sum(axis=-1) / total, total


def correlator_from_counts(rec: CountRecord, parties: Sequence[int], flips: Sequence[int] = (),
                           condition: tuple[int, int] | None = None) -> tuple[float, int]:
    """Frequency estimate of the product of the listed parties' +/-1 outcomes.

    ``flips`` negates a party's outcome before the product; ``condition`` is
    ``(party, +1 or -1)`` and restricts to counts where that party saw that value.
    Returns ``(value, counts in the slice)``."""
    parties = list(parties)
    if condition is not None:
        if condition[0] in parties:
            raise ValueError("the conditioning party cannot also be correlated")
        if condition[1] not in (1, -1):
            raise ValueError("condition outcome must be +1 or -1")
    value, total = _correlate(rec.counts, parties, flips, condition)
    return float(value), int(total)


def _row(counts: CountsByLabel, tags: str) -> np.ndarray:
    label = tuple(tags.split())
    try:
        return counts[label]
    except KeyError:
        raise MissingRowError(f"dataset has no {tags} row") from None


# (coefficient, row, parties, flips).  B1 = -(D-) is applied as a flip on Bob.
W4_TERMS = (
    (1.0, "Z D+ X X", (0, 1), ()),
    (-1.0, "Z D- X X", (0, 1), (1,)),
    (2.0, "Z Z Z Z", (0, 3), ()),
    (2.0, "Z Z Z Z", (2, 3), ()),
    (1.0, "X D+ X X", (0, 1, 2, 3), ()),
    (1.0, "X D- X X", (0, 1, 2, 3), (1,)),
)
W3_TERMS = (
    (1.0, "Z D+ X X", (0, 1), ()),
    (1.0, "X D+ Z X", (1, 2), ()),
    (-1.0, "Z D- X X", (0, 1), (1,)),
    (-1.0, "X D- Z X", (1, 2), (1,)),
    (4.0, "Z Z Z X", (0, 2), ()),
    (2.0, "X D+ X X", (0, 1, 2), ()),
    (2.0, "X D- X X", (0, 1, 2), (1,)),
)
# three-party data: Dave measured X and found +1
W3_CONDITION = (3, 1)


def _terms(counts: CountsByLabel, table, condition) -> list[np.ndarray]:
    return [coeff * _correlate(_row(counts, tags), parties, flips, condition)[0]
            for coeff, tags, parties, flips in table]


def w4_from_counts(counts: CountsByLabel) -> np.ndarray:
    return sum(_terms(counts, W4_TERMS, None))


def w3_from_counts(counts: CountsByLabel) -> np.ndarray:
    return sum(_terms(counts, W3_TERMS, W3_CONDITION))


def w4_term_values(ds: ExperimentDataset) -> list[float]:
    return [float(v) for v in _terms(ds.counts_by_label(), W4_TERMS, None)]


def w3_term_values(ds: ExperimentDataset) -> list[float]:
    return [float(v) for v in _terms(ds.counts_by_label(), W3_TERMS, W3_CONDITION)]


def eval_w4_from_data(ds: ExperimentDataset) -> float:
    return float(w4_from_counts(ds.counts_by_label()))


def eval_w3_from_data(ds: ExperimentDataset) -> float:
    return float(w3_from_counts(ds.counts_by_label()))


class StabilizerResult(NamedTuple):
    witness: float
    fidelity_bound: float
    hom_visibility: float
    pairwise_zz: tuple[float, ...]


def stabilizer_witness_from_counts(counts: CountsByLabel) -> np.ndarray:
    """3 - 2[(<XXXX> + 1)/2 + <prod_k (1 + Z_{k-1} Z_k)/2>].

    The product of commuting projectors is the projector onto all-equal Z
    outcomes, so its expectation is the all-equal fraction of the ZZZZ row."""
    s1, _ = _correlate(_row(counts, "X X X X"), range(N_PARTIES))
    zz = np.asarray(_row(counts, "Z Z Z Z"), dtype=float)
    same = (zz[..., 0] + zz[..., -1]) / zz.sum(axis=-1)
    return 3.0 - 2.0 * ((s1 + 1) / 2 + same)


def stabilizer_fidelity(ds: ExperimentDataset) -> StabilizerResult:
    counts = ds.counts_by_label()
    w = float(stabilizer_witness_from_counts(counts))
    hom, _ = correlator_from_counts(ds.record(("X",) * 4), range(N_PARTIES))
    zz = ds.record(("Z",) * 4)
    pairwise = tuple(correlator_from_counts(zz, (k - 1, k))[0] for k in range(1, N_PARTIES))
    return StabilizerResult(w, (1 - w) / 2, hom, pairwise)


# --- Monte Carlo -------------------------------------------------------------


EVALUATORS: dict[str, Callable[[CountsByLabel], np.ndarray]] = {
    "w3": w3_from_counts,
    "w4": w4_from_counts,
    "stabilizer": stabilizer_witness_from_counts,
}
CHUNK = 1000


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("GHZW_THREADS", "1")))
    except ValueError:
        return 1


def monte_carlo_sigma(ds: ExperimentDataset, evaluator: str | Callable[[CountsByLabel], np.ndarray],
                      n_resamples: int = 10_000, seed: int = 0) -> tuple[float, float]:
    """Mean and standard deviation of ``evaluator`` over Poisson resamples in
    which every count n is replaced by an independent Poisson(n) draw.

    ``evaluator`` maps label -> counts of shape (batch, 16) to values of shape
    (batch,); a name from :data:`EVALUATORS` is also accepted.  Resamples run in
    fixed chunks with child seeds, so the result does not depend on the number
    of worker threads (``GHZW_THREADS``)."""
    if n_resamples < 1000:
        raise ValueError("use at least 1000 resamples")
    fn = EVALUATORS[evaluator] if isinstance(evaluator, str) else evaluator
    labels = [r.label for r in ds.records]
    means = np.stack([r.counts for r in ds.records]).astype(float)
    sizes = [CHUNK] * (n_resamples // CHUNK) + ([n_resamples % CHUNK] if n_resamples % CHUNK else [])
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))

    def run(i: int) -> np.ndarray:
        rng = np.random.default_rng(seeds[i])
        draws = rng.poisson(means, size=(sizes[i],) + means.shape)
        batch = {label: draws[:, j, :] for j, label in enumerate(labels)}
        return np.broadcast_to(np.asarray(fn(batch), dtype=float), (sizes[i],))

    workers = min(_threads(), len(sizes))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]
    values = np.concatenate(parts)
    return float(values.mean()), float(values.std(ddof=1))


def significance(value: float, bound: float, sigma: float) -> float:
    """Standard deviations above the bound."""
    return math.inf if sigma == 0 else (value - bound) / sigma


# --- synthetic data ----------------------------------------------------------


TABLE1_LABELS: tuple[Label, ...] = tuple(tuple(s.split()) for s in (
    "X D+ X X", "X D- X X", "Z D+ X X", "Z D- X X", "X X X X",
    "Z Z Z Z", "Z Z Z X", "X D+ Z X", "X D- Z X"))


def outcome_probabilities(state: PureState | MixedState, label: Sequence[str]) -> np.ndarray:
    """The 16 outcome probabilities, in column order, for one setting label."""
    strategy = MeasurementStrategy(tuple((BASES[b],) for b in label))
    table = behavior_from_state(state, strategy).table.reshape(16)
    return np.clip(table, 0.0, None) / np.clip(table, 0.0, None).sum()


def synthetic_dataset(state: PureState | MixedState, shots: int, seed: int = 0,
                      labels: Sequence[Label] = TABLE1_LABELS) -> ExperimentDataset:
    """Multinomial samples of ``shots`` events per setting label."""
    rng = np.random.default_rng(seed)
    records = []
    for label in labels:
        counts = rng.multinomial(shots, outcome_probabilities(state, label))
        records.append(CountRecord(tuple(label), counts.astype(np.int64), float(shots)))
    return ExperimentDataset(tuple(records), {"source": "synthetic", "shots": shots, "seed": seed})
