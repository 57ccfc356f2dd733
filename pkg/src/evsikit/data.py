"""Dataset ingestion, simulation-indexed splitting, and a synthetic
planted-signal generator.

Datasets are flat tables of process samples keyed by
(simulation_id, fault_class, sample_index), with fault class 0 meaning
normal operation. The split procedure selects whole simulations per class
by ascending simulation id: the first ``train`` ids go to training, the
NEXT ``val`` ids to validation, so the two never share a simulation; test
rows come from a separate source dataset's first ids.

The generator plants a signal for testing end to end at desk scale: chosen
informative features get a class-dependent mean offset of
fault_class * shift_magnitude while every feature carries Gaussian noise,
so a model that can see an informative feature separates the classes and a
model that cannot is reduced to guessing.

CSV schema: header ``simulation_id,fault_class,sample_index,<feature...>``,
UTF-8, comma-separated, decimal-point reals.

Channel-stats JSON schema:
``{"priors": {"p_fault": r}, "sensors": [{"label": s,
"p_signal_given_fault": r, "p_signal_given_no_fault": r}, ...]}``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .decision import BinarySensorChannel, Priors
from .errors import (
    DuplicateKey,
    InsufficientSimulations,
    InvalidConfig,
    MalformedHeader,
    NonNumericValue,
    ProbabilityOutOfRange,
    SchemaViolation,
)

KEY_COLUMNS = ("simulation_id", "fault_class", "sample_index")


@dataclass(frozen=True)
class SimRecord:
    """One process sample from one simulation run."""

    simulation_id: int
    fault_class: int
    sample_index: int
    values: tuple[float, ...]

    def __post_init__(self):
        if self.fault_class < 0:
            raise ValueError(f"fault_class must be >= 0, got {self.fault_class}")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))


@dataclass(frozen=True)
class SimDataset:
    """Immutable table of samples; feature order is fixed by feature_names."""

    feature_names: tuple[str, ...]
    records: tuple[SimRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "records", tuple(self.records))
        width = len(self.feature_names)
        seen = set()
        for rec in self.records:
            if len(rec.values) != width:
                raise ValueError(
                    f"record has {len(rec.values)} values, expected {width}"
                )
            key = (rec.simulation_id, rec.fault_class, rec.sample_index)
            if key in seen:
                raise DuplicateKey(f"duplicate record key {key}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.records)

    def feature_matrix(self) -> np.ndarray:
        """Row-per-record feature array, shape (n_records, n_features)."""
        if not self.records:
            return np.zeros((0, len(self.feature_names)))
        return np.array([rec.values for rec in self.records], dtype=float)

    def labels(self) -> np.ndarray:
        return np.array([rec.fault_class for rec in self.records], dtype=int)

    def classes(self) -> tuple[int, ...]:
        return tuple(sorted({rec.fault_class for rec in self.records}))

    def simulation_ids(self, fault_class: int) -> tuple[int, ...]:
        """Distinct simulation ids of one class, ascending."""
        return tuple(
            sorted({r.simulation_id for r in self.records if r.fault_class == fault_class})
        )

    def restrict(self, keep: Mapping[int, set[int]]) -> "SimDataset":
        """Subset to records whose (class, simulation id) is in ``keep``."""
        kept = tuple(
            r for r in self.records if r.simulation_id in keep.get(r.fault_class, ())
        )
        return SimDataset(feature_names=self.feature_names, records=kept)


@dataclass(frozen=True)
class SplitSpec:
    """How many whole simulations each split takes per class."""

    train_normal_sims: int = 40
    train_fault_sims: int = 25
    val_normal_sims: int = 20
    val_fault_sims: int = 10
    test_normal_sims: int = 2
    test_fault_sims: int = 10

    def __post_init__(self):
        for name in (
            "train_normal_sims",
            "train_fault_sims",
            "val_normal_sims",
            "val_fault_sims",
            "test_normal_sims",
            "test_fault_sims",
        ):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise InvalidConfig(f"{name} must be a nonnegative integer, got {v!r}")


@dataclass(frozen=True)
class SplitResult:
    train: SimDataset
    validation: SimDataset
    test: SimDataset


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the planted-signal generator.

    ``num_fault_classes`` counts the fault classes proper; the generated
    dataset has that many plus the normal class 0. Features are named
    "X1".."Xn"; the informative subset gets the planted mean shift.
    """

    num_features: int = 6
    num_fault_classes: int = 2
    sims_per_class: int = 8
    samples_per_sim: int = 5
    informative_features: tuple[str, ...] = ("X1",)
    shift_magnitude: float = 3.0
    noise_std: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ("num_features", "num_fault_classes", "sims_per_class", "samples_per_sim"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise InvalidConfig(f"{name} must be a positive integer, got {v!r}")
        if not (float(self.noise_std) > 0):
            raise InvalidConfig(f"noise_std must be positive, got {self.noise_std!r}")
        object.__setattr__(
            self, "informative_features", tuple(self.informative_features)
        )
        names = {f"X{i + 1}" for i in range(self.num_features)}
        unknown = [f for f in self.informative_features if f not in names]
        if unknown:
            raise InvalidConfig(
                f"informative features {unknown} not among generated features"
            )


def synth_generate(config: SynthConfig) -> SimDataset:
    """Generate a planted-signal dataset, fully determined by the seed."""
    rng = np.random.default_rng(config.seed)
    feature_names = tuple(f"X{i + 1}" for i in range(config.num_features))
    informative = np.array(
        [name in config.informative_features for name in feature_names]
    )
    records = []
    for fault_class in range(config.num_fault_classes + 1):
        offset = np.where(informative, fault_class * config.shift_magnitude, 0.0)
        for sim in range(1, config.sims_per_class + 1):
            noise = rng.normal(0.0, config.noise_std, size=(config.samples_per_sim, config.num_features))
            block = offset + noise
            for k in range(config.samples_per_sim):
                records.append(
                    SimRecord(
                        simulation_id=sim,
                        fault_class=fault_class,
                        sample_index=k,
                        values=tuple(block[k]),
                    )
                )
    return SimDataset(feature_names=feature_names, records=tuple(records))


def _select_ids(
    dataset: SimDataset, fault_class: int, skip: int, take: int
) -> tuple[int, ...]:
    """The ``take`` ascending simulation ids of a class after skipping ``skip``."""
    if take == 0:
        return ()
    ids = dataset.simulation_ids(fault_class)
    if len(ids) < skip + take:
        raise InsufficientSimulations(
            fault_class=fault_class, needed=skip + take, available=len(ids)
        )
    return ids[skip : skip + take]


def simulation_split(
    train_source: SimDataset,
    spec: SplitSpec = SplitSpec(),
    test_source: SimDataset | None = None,
) -> SplitResult:
    """Partition whole simulations into train/validation/test splits.

    Per class, the first N ascending simulation ids feed training and the
    next M feed validation, so no simulation straddles the boundary. Test
    rows are drawn from ``test_source``'s first ids; with no test source
    the test split is empty.
    """
    if test_source is not None and test_source.feature_names != train_source.feature_names:
        raise ValueError(
            "test source feature names differ from training source"
        )
    train_keep: dict[int, set[int]] = {}
    val_keep: dict[int, set[int]] = {}
    for fault_class in train_source.classes():
        n_train = spec.train_normal_sims if fault_class == 0 else spec.train_fault_sims
        n_val = spec.val_normal_sims if fault_class == 0 else spec.val_fault_sims
        train_keep[fault_class] = set(_select_ids(train_source, fault_class, 0, n_train))
        val_keep[fault_class] = set(_select_ids(train_source, fault_class, n_train, n_val))

    test_keep: dict[int, set[int]] = {}
    if test_source is not None:
        for fault_class in test_source.classes():
            n_test = spec.test_normal_sims if fault_class == 0 else spec.test_fault_sims
            test_keep[fault_class] = set(_select_ids(test_source, fault_class, 0, n_test))
        test = test_source.restrict(test_keep)
    else:
        test = SimDataset(feature_names=train_source.feature_names, records=())

    return SplitResult(
        train=train_source.restrict(train_keep),
        validation=train_source.restrict(val_keep),
        test=test,
    )


def limit_simulations(dataset: SimDataset, max_sims: Mapping[int, int]) -> SimDataset:
    """Keep only each class's first-k ascending simulation ids.

    Classes absent from ``max_sims`` are kept whole. Shapes generated
    datasets into unbalanced per-class simulation counts.
    """
    keep: dict[int, set[int]] = {}
    for fault_class in dataset.classes():
        ids = dataset.simulation_ids(fault_class)
        if fault_class in max_sims:
            ids = ids[: max_sims[fault_class]]
        keep[fault_class] = set(ids)
    return dataset.restrict(keep)


# ------------------------------------------------------------------ CSV I/O


def save_csv(dataset: SimDataset, path: str | Path) -> None:
    """Write the dataset in the published CSV schema."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(KEY_COLUMNS) + list(dataset.feature_names))
        for rec in dataset.records:
            writer.writerow(
                [rec.simulation_id, rec.fault_class, rec.sample_index]
                + [repr(v) for v in rec.values]
            )


def load_csv(path: str | Path) -> SimDataset:
    """Parse a dataset CSV, validating schema and cell types."""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedHeader("file is empty") from None
        if tuple(header[: len(KEY_COLUMNS)]) != KEY_COLUMNS:
            raise MalformedHeader(
                f"header must start with {','.join(KEY_COLUMNS)}, got {header[:3]}"
            )
        feature_names = tuple(header[len(KEY_COLUMNS) :])
        if not feature_names:
            raise MalformedHeader("header lists no feature columns")
        records = []
        for row_num, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedHeader(
                    f"row {row_num} has {len(row)} cells, header has {len(header)}"
                )
            key_vals = []
            for col, cell in zip(KEY_COLUMNS, row):
                try:
                    key_vals.append(int(cell))
                except ValueError:
                    raise NonNumericValue(row=row_num, column=col, raw=cell) from None
            values = []
            for col, cell in zip(feature_names, row[len(KEY_COLUMNS) :]):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise NonNumericValue(row=row_num, column=col, raw=cell) from None
            records.append(
                SimRecord(
                    simulation_id=key_vals[0],
                    fault_class=key_vals[1],
                    sample_index=key_vals[2],
                    values=tuple(values),
                )
            )
    return SimDataset(feature_names=feature_names, records=tuple(records))


# ------------------------------------------------------- channel-stats JSON


@dataclass(frozen=True)
class ChannelStats:
    """Externally supplied sensor channels plus the fault prior they assume."""

    priors: Priors
    sensors: tuple[BinarySensorChannel, ...]


def _stats_prob(obj: Mapping, key: str, where: str) -> float:
    if key not in obj:
        raise SchemaViolation(f"{where} is missing {key!r}")
    v = obj[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise SchemaViolation(f"{where}.{key} must be a number, got {v!r}")
    if not (0.0 <= float(v) <= 1.0):
        raise ProbabilityOutOfRange(f"{where}.{key} = {v} lies outside [0, 1]")
    return float(v)


def parse_channel_stats(doc: object) -> ChannelStats:
    """Validate a channel-stats document already parsed from JSON."""
    if not isinstance(doc, dict):
        raise SchemaViolation("channel-stats document must be a JSON object")
    if "priors" not in doc or not isinstance(doc["priors"], dict):
        raise SchemaViolation("channel-stats document needs a 'priors' object")
    p_fault = _stats_prob(doc["priors"], "p_fault", "priors")
    sensors_doc = doc.get("sensors")
    if not isinstance(sensors_doc, list):
        raise SchemaViolation("channel-stats document needs a 'sensors' list")
    sensors = []
    labels = set()
    for i, entry in enumerate(sensors_doc):
        where = f"sensors[{i}]"
        if not isinstance(entry, dict):
            raise SchemaViolation(f"{where} must be an object")
        label = entry.get("label")
        if not isinstance(label, str) or not label:
            raise SchemaViolation(f"{where}.label must be a nonempty string")
        if label in labels:
            raise SchemaViolation(f"duplicate sensor label {label!r}")
        labels.add(label)
        sensors.append(
            BinarySensorChannel(
                p_signal_given_fault=_stats_prob(entry, "p_signal_given_fault", where),
                p_signal_given_no_fault=_stats_prob(
                    entry, "p_signal_given_no_fault", where
                ),
                label=label,
            )
        )
    return ChannelStats(priors=Priors(p_fault=p_fault), sensors=tuple(sensors))


def ingest_channel_stats(path: str | Path) -> ChannelStats:
    """Load and validate a channel-stats JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"invalid JSON: {exc}") from None
    return parse_channel_stats(doc)
