"""Dataset ingestion, binary task construction and synthetic weather data."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import truncnorm

from .errors import DomainError, IngestionError

logger = logging.getLogger(__name__)

SCHEMAS = ("iris", "agri", "generic")
AGRI_FEATURES = ("Tmin", "Tmax", "RH", "u2", "Is", "Rs")
AGRI_TARGET = "ETo"
ETO_CLASS_NAMES = {1: "LOW", 2: "MEDIUM", 3: "HIGH"}

# (max, min, mean, sd) per meteorological variable at the reference station
AGRI_TABLE = {
    "Tmin": (30.7, 2.3, 18.71, 7.50),
    "Tmax": (44.4, 9.8, 30.39, 7.10),
    "RH": (100.0, 0.0, 73.30, 17.64),
    "u2": (16.0, 0.0, 3.23, 2.18),
    "Is": (12.2, 0.0, 6.24, 3.53),
    "Rs": (28.2, 4.9, 16.15, 6.14),
    "ETo": (6.0, 0.0, 2.49, 1.48),
}
# sign of each variable's association with evapotranspiration
AGRI_DIRECTION = {"Tmin": 1, "Tmax": 1, "RH": -1, "u2": 1, "Is": 1, "Rs": 1}
# class-mean offset between adjacent ETo classes, in units of the variable's sd
AGRI_CLASS_SHIFT = 0.8
ETO_BIN_EDGES = (2.0, 4.0)
ETO_RANGE = (0.0, 6.0)


@dataclass
class RawDataset:
    feature_names: tuple
    rows: np.ndarray
    labels: np.ndarray
    source: str
    class_names: dict = field(default_factory=dict)
    target: np.ndarray | None = None
    dropped: int = 0
    dropped_lines: list = field(default_factory=list)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.rows.ndim != 2 or len(self.rows) == 0:
            raise DomainError("dataset has no rows")
        if len(self.rows) != len(self.labels):
            raise DomainError("row and label counts differ")
        if self.rows.shape[1] != len(self.feature_names):
            raise DomainError("feature name count does not match the row width")
        if not np.all(np.isfinite(self.rows)):
            raise DomainError("dataset contains non-finite values")

    @property
    def class_ids(self) -> tuple:
        return tuple(sorted(set(int(c) for c in self.labels)))


def bundled_iris_path() -> Path:
    return Path(str(resources.files("mpsqc") / "data" / "iris.csv"))


def bin_eto(eto: float) -> int:
    """ETo class: 1 (LOW) below 2 mm, 2 (MEDIUM) below 4 mm, 3 (HIGH) otherwise."""
    eto = float(eto)
    if not math.isfinite(eto):
        raise DomainError("ETo must be finite")
    lo, hi = ETO_RANGE
    if eto < lo or eto > hi:
        logger.warning("ETo %.3f outside [%g, %g]; clamping", eto, lo, hi)
        eto = min(hi, max(lo, eto))
    if eto < ETO_BIN_EDGES[0]:
        return 1
    if eto < ETO_BIN_EDGES[1]:
        return 2
    return 3


def _parse_float(cell: str, path, line, column):
    try:
        return float(cell)
    except ValueError:
        raise IngestionError(f"non-numeric value {cell!r} in column {column!r}", path, line) from None


def load_csv(path, label_column: str | None = None, schema: str = "generic",
             delimiter: str = ",", features: Sequence[str] | None = None) -> RawDataset:
    """Read a delimited text file with a header row.

    Rows with an empty or missing field are dropped and counted in
    ``dropped``. Class labels become integer ids starting at 1 in order of
    first appearance; for the ``agri`` schema the label is the binned ETo.
    """
    if schema not in SCHEMAS:
        raise DomainError(f"schema must be one of {SCHEMAS}, got {schema!r}")
    if label_column is None:
        label_column = {"iris": "species", "agri": AGRI_TARGET}.get(schema)
        if label_column is None:
            raise DomainError("generic schema needs a label column")
    path = str(path)
    try:
        with open(path, newline="") as fh:
            records = list(csv.reader(fh, delimiter=delimiter))
    except OSError as exc:
        raise IngestionError(f"cannot read file: {exc.strerror}", path) from exc
    except (UnicodeDecodeError, csv.Error) as exc:
        raise IngestionError(f"cannot parse file: {exc}", path) from exc
    if not records:
        raise IngestionError("file is empty", path, 1)
    header = [h.strip() for h in records[0]]
    if label_column not in header:
        raise IngestionError(f"unknown label column {label_column!r}", path, 1)
    if schema == "agri":
        features = tuple(features) if features else AGRI_FEATURES
    elif features is None:
        features = tuple(h for h in header if h != label_column)
    else:
        features = tuple(features)
    missing = [f for f in features if f not in header]
    if missing:
        raise IngestionError(f"missing feature columns {missing}", path, 1)
    if not features:
        raise IngestionError("no feature columns", path, 1)
    fcols = [header.index(f) for f in features]
    lcol = header.index(label_column)
    width = len(header)

    rows, raw_labels, dropped_lines = [], [], []
    for line, rec in enumerate(records[1:], start=2):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) > width:
            raise IngestionError(f"expected {width} fields, found {len(rec)}", path, line)
        cells = [c.strip() for c in rec] + [""] * (width - len(rec))
        if any(cells[i] == "" for i in fcols + [lcol]):
            dropped_lines.append(line)
            continue
        rows.append([_parse_float(cells[i], path, line, header[i]) for i in fcols])
        raw_labels.append(cells[lcol] if schema != "agri" else _parse_float(cells[lcol], path, line, label_column))
    if not rows:
        raise IngestionError("no complete rows", path)
    if dropped_lines:
        logger.info("%s: dropped %d incomplete row(s)", path, len(dropped_lines))

    target = None
    if schema == "agri":
        target = np.array(raw_labels, dtype=float)
        labels = np.array([bin_eto(v) for v in target])
        class_names = dict(ETO_CLASS_NAMES)
    else:
        ids = {}
        for lab in raw_labels:
            ids.setdefault(lab, len(ids) + 1)
        labels = np.array([ids[lab] for lab in raw_labels])
        class_names = {i: name for name, i in ids.items()}
    return RawDataset(
        feature_names=tuple(features),
        rows=np.array(rows, dtype=float),
        labels=labels,
        source=schema,
        class_names=class_names,
        target=target,
        dropped=len(dropped_lines),
        dropped_lines=dropped_lines,
    )


def read_feature_rows(path, names: Sequence[str] | None, n_features: int,
                      delimiter: str = ",") -> np.ndarray:
    """Feature matrix from a CSV with a header; columns picked by name when given."""
    path = str(path)
    try:
        with open(path, newline="") as fh:
            records = list(csv.reader(fh, delimiter=delimiter))
    except OSError as exc:
        raise IngestionError(f"cannot read file: {exc.strerror}", path) from exc
    if not records:
        raise IngestionError("file is empty", path, 1)
    header = [h.strip() for h in records[0]]
    if names:
        missing = [n for n in names if n not in header]
        if missing:
            raise IngestionError(f"missing feature columns {missing}", path, 1)
        cols = [header.index(n) for n in names]
    else:
        cols = list(range(n_features))
    rows = []
    for line, rec in enumerate(records[1:], start=2):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) <= max(cols) or any(rec[i].strip() == "" for i in cols):
            raise IngestionError("missing feature value", path, line)
        rows.append([_parse_float(rec[i].strip(), path, line, header[i]) for i in cols])
    if not rows:
        raise IngestionError("no rows", path)
    return np.array(rows, dtype=float)


def write_csv(data: RawDataset, path) -> None:
    """Write features (plus ETo target or class name) with a header row."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if data.target is not None:
            w.writerow(list(data.feature_names) + [AGRI_TARGET])
            for row, t in zip(data.rows, data.target):
                w.writerow([repr(float(v)) for v in row] + [repr(float(t))])
        else:
            w.writerow(list(data.feature_names) + ["label"])
            for row, lab in zip(data.rows, data.labels):
                w.writerow([repr(float(v)) for v in row] + [data.class_names.get(int(lab), int(lab))])


def synth_agri(n_per_class: int, seed: int = 0, noise_sigma: float = 1.0) -> RawDataset:
    """Synthetic daily weather rows shaped like the reference station statistics.

    Each ETo class gets its own feature means, shifted from the station mean
    by ``AGRI_CLASS_SHIFT`` standard deviations per class step in the
    direction the variable moves with ETo. Features are truncated Gaussians
    with spread ``noise_sigma * sd`` inside the recorded min/max, so adjacent
    classes overlap. ETo is drawn uniformly inside the class bin.
    """
    if int(n_per_class) < 1:
        raise DomainError("n_per_class must be >= 1")
    if not noise_sigma >= 0:
        raise DomainError("noise_sigma must be >= 0")
    rng = np.random.default_rng(seed)
    edges = (ETO_RANGE[0],) + ETO_BIN_EDGES + (ETO_RANGE[1],)
    rows, labels, target = [], [], []
    for cls in (1, 2, 3):
        cols = []
        for name in AGRI_FEATURES:
            hi, lo, mean, sd = AGRI_TABLE[name]
            centre = mean + (cls - 2) * AGRI_CLASS_SHIFT * sd * AGRI_DIRECTION[name]
            centre = min(hi, max(lo, centre))
            if noise_sigma == 0:
                cols.append(np.full(n_per_class, centre))
                continue
            scale = noise_sigma * sd
            a, b = (lo - centre) / scale, (hi - centre) / scale
            cols.append(truncnorm.rvs(a, b, loc=centre, scale=scale, size=n_per_class, random_state=rng))
        rows.append(np.column_stack(cols))
        eto = rng.uniform(edges[cls - 1], edges[cls], n_per_class)
        if cls < 3:
            # keep draws strictly below the upper edge
            eto = np.minimum(eto, np.nextafter(edges[cls], -np.inf))
        target.append(eto)
        labels += [cls] * n_per_class
    return RawDataset(
        feature_names=AGRI_FEATURES,
        rows=np.vstack(rows),
        labels=np.array(labels),
        source="agri",
        class_names=dict(ETO_CLASS_NAMES),
        target=np.concatenate(target),
    )


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(labels, ratio: float, rng: np.random.Generator):
    """Per-class shuffled split; the train size is ``round_half_up(ratio * n)``.

    Per-class train counts start at ``floor(ratio * n_c)``; the remaining
    slots go to the classes with the largest fractional parts.
    """
    labels = np.asarray(labels)
    classes = sorted(set(labels.tolist()))
    n_train = round_half_up(ratio * len(labels))
    members = {c: np.flatnonzero(labels == c) for c in classes}
    ideal = {c: ratio * len(members[c]) for c in classes}
    counts = {c: int(math.floor(ideal[c])) for c in classes}
    spare = n_train - sum(counts.values())
    for c in sorted(classes, key=lambda c: -(ideal[c] - counts[c])):
        if spare <= 0:
            break
        if counts[c] < len(members[c]):
            counts[c] += 1
            spare -= 1
    train, test = [], []
    for c in classes:
        perm = rng.permutation(members[c])
        train.append(perm[:counts[c]])
        test.append(perm[counts[c]:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


@dataclass
class BinaryTask:
    name: str
    class_zero: int
    class_one: int
    source_index: np.ndarray
    rows: np.ndarray
    labels: np.ndarray
    train: np.ndarray
    test: np.ndarray
    seed: int
    ratio: float
    feature_names: tuple = ()
    class_names: dict = field(default_factory=dict)

    def split(self, which: str):
        """``(rows, labels)`` for ``"train"``, ``"test"`` or ``"all"``."""
        if which == "train":
            idx = self.train
        elif which == "test":
            idx = self.test
        elif which == "all":
            idx = np.arange(len(self.labels))
        else:
            raise DomainError(f"unknown split {which!r}")
        return self.rows[idx], self.labels[idx]

    @property
    def class_mapping(self) -> dict:
        """Binary label -> source class id and name."""
        return {
            0: {"id": self.class_zero, "name": str(self.class_names.get(self.class_zero, self.class_zero))},
            1: {"id": self.class_one, "name": str(self.class_names.get(self.class_one, self.class_one))},
        }


_TASK_PREFIX = {"iris": "Iris", "agri": "Agri"}


def make_pairwise_tasks(data: RawDataset, pairs: Sequence[tuple], ratio: float = 0.8,
                        seed: int = 0) -> list:
    """One binary task per ``(first, second)`` class pair; first -> 0, second -> 1."""
    if not 0 < ratio < 1:
        raise DomainError("ratio must be in (0, 1)")
    present = set(data.class_ids)
    prefix = _TASK_PREFIX.get(data.source, "Task")
    tasks = []
    for k, (first, second) in enumerate(pairs, start=1):
        first, second = int(first), int(second)
        for c in (first, second):
            if c not in present:
                raise DomainError(f"class {c} not present (have {sorted(present)})")
        if first == second:
            raise DomainError("a pair needs two different classes")
        idx = np.flatnonzero(np.isin(data.labels, (first, second)))
        labels = (data.labels[idx] == second).astype(int)
        train, test = stratified_split(labels, ratio, np.random.default_rng(seed))
        tasks.append(BinaryTask(
            name=f"{prefix}{k}",
            class_zero=first,
            class_one=second,
            source_index=idx,
            rows=data.rows[idx],
            labels=labels,
            train=train,
            test=test,
            seed=int(seed),
            ratio=float(ratio),
            feature_names=data.feature_names,
            class_names=dict(data.class_names),
        ))
    return tasks


def parse_pairs(text: str) -> list:
    """``"1:2,2:3"`` -> ``[(1, 2), (2, 3)]``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            a, b = part.split(":")
            out.append((int(a), int(b)))
        except ValueError:
            raise DomainError(f"bad class pair {part!r}; expected like 1:2") from None
    if not out:
        raise DomainError("no class pairs given")
    return out


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


MANIFEST_FORMAT = "mpsqc-task/1"


def task_manifest(task: BinaryTask, data_path, schema: str, label_column: str | None,
                  delimiter: str, split_file: str) -> dict:
    return {
        "format": MANIFEST_FORMAT,
        "name": task.name,
        "data": {
            "path": str(data_path),
            "sha256": file_sha256(data_path),
            "schema": schema,
            "label_column": label_column,
            "delimiter": delimiter,
            "features": list(task.feature_names),
        },
        "classes": {"zero": task.class_zero, "one": task.class_one,
                    "names": {str(k): str(v) for k, v in task.class_names.items()}},
        "seed": task.seed,
        "ratio": task.ratio,
        "n_rows": int(len(task.labels)),
        "n_train": int(len(task.train)),
        "n_test": int(len(task.test)),
        "split_file": split_file,
    }


def split_document(task: BinaryTask) -> dict:
    """Train/test membership as row indices of the source file's data rows."""
    return {
        "task": task.name,
        "train": [int(i) for i in task.source_index[task.train]],
        "test": [int(i) for i in task.source_index[task.test]],
    }


def load_task(manifest_path) -> BinaryTask:
    """Rebuild a task from its manifest and split file, checking the data hash."""
    manifest_path = Path(manifest_path)
    try:
        man = json.loads(manifest_path.read_text())
    except OSError as exc:
        raise IngestionError(f"cannot read manifest: {exc.strerror}", str(manifest_path)) from exc
    except json.JSONDecodeError as exc:
        raise IngestionError(f"manifest is not valid JSON: {exc}", str(manifest_path)) from exc
    if man.get("format") != MANIFEST_FORMAT:
        raise IngestionError(f"unsupported manifest format {man.get('format')!r}", str(manifest_path))
    d = man["data"]
    data_path = Path(d["path"])
    if not data_path.is_absolute():
        data_path = manifest_path.parent / data_path
    if file_sha256(data_path) != d["sha256"]:
        raise IngestionError("data file changed since the manifest was written", str(data_path))
    data = load_csv(data_path, d["label_column"], d["schema"], d["delimiter"], d["features"])
    split_path = manifest_path.parent / man["split_file"]
    try:
        split = json.loads(split_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise IngestionError(f"cannot read split file: {exc}", str(split_path)) from exc
    first, second = int(man["classes"]["zero"]), int(man["classes"]["one"])
    idx = np.flatnonzero(np.isin(data.labels, (first, second)))
    position = {int(r): i for i, r in enumerate(idx)}
    try:
        train = np.array(sorted(position[i] for i in split["train"]), dtype=int)
        test = np.array(sorted(position[i] for i in split["test"]), dtype=int)
    except KeyError as exc:
        raise IngestionError(f"split references row {exc} outside the task", str(split_path)) from None
    return BinaryTask(
        name=man["name"],
        class_zero=first,
        class_one=second,
        source_index=idx,
        rows=data.rows[idx],
        labels=(data.labels[idx] == second).astype(int),
        train=train,
        test=test,
        seed=int(man["seed"]),
        ratio=float(man["ratio"]),
        feature_names=data.feature_names,
        class_names=data.class_names,
    )
