"""Series windowing, window features, CSV I/O, synthetic data and splits."""
import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, LabelError, ParseError

N_CLASSES = 9
SERIES_HEADER = ("step", "qber", "skr", "label")
FEATURE_NAMES = ("f1", "f2", "f3", "f4", "f5")
FEATURE_HEADER = FEATURE_NAMES + ("label",)


@dataclass(frozen=True)
class TimeSeriesRecord:
    step: int
    qber: float
    skr: float
    label: int

    def __post_init__(self):
        if not 0.0 <= self.qber <= 1.0:
            raise ValueError(f"qber must lie in [0, 1], got {self.qber}")
        if self.skr < 0:
            raise ValueError(f"skr must be non-negative, got {self.skr}")
        if not 0 <= self.label < N_CLASSES:
            raise LabelError(f"label {self.label} outside 0..{N_CLASSES - 1}")


@dataclass(frozen=True)
class WindowedSample:
    qber: np.ndarray
    skr: np.ndarray
    label: int


@dataclass(frozen=True)
class WindowingResult:
    windows: list
    skipped_segments: int = 0

    def __iter__(self):
        return iter(self.windows)

    def __len__(self):
        return len(self.windows)


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix ``X`` (``M x K``) with integer labels ``y``."""

    X: np.ndarray
    y: np.ndarray
    split: str = ""
    feature_names: tuple = field(default=FEATURE_NAMES)

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise InvalidInputError(f"X {self.X.shape} and y {self.y.shape} do not line up")

    def __len__(self):
        return self.X.shape[0]

    @property
    def class_counts(self):
        return np.bincount(self.y, minlength=N_CLASSES)[:N_CLASSES]


@dataclass(frozen=True)
class Standardizer:
    """Per-feature z-score fitted on a training split."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=np.float64)
        std = X.std(axis=0)
        return cls(X.mean(axis=0), np.where(std > 0, std, 1.0))

    def transform(self, X):
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.std


# -- windowing and features --------------------------------------------------

def window_series(records, n=10, stride=1):
    """Sliding windows of length ``n`` that never cross a label change.

    Records must be sorted by step. Label segments shorter than ``n`` yield no
    windows and are counted in ``skipped_segments``.
    """
    if n < 1 or stride < 1:
        raise InvalidInputError("window length and stride must be >= 1")
    windows = []
    skipped = 0
    segment = []

    def flush():
        nonlocal skipped
        if not segment:
            return
        if len(segment) < n:
            skipped += 1
            return
        qber = np.array([r.qber for r in segment])
        skr = np.array([r.skr for r in segment])
        for lo in range(0, len(segment) - n + 1, stride):
            windows.append(WindowedSample(qber[lo : lo + n], skr[lo : lo + n], segment[0].label))

    prev_step = None
    for rec in records:
        if prev_step is not None and rec.step <= prev_step:
            raise InvalidInputError(f"records are not sorted by step (step {rec.step} after {prev_step})")
        prev_step = rec.step
        if segment and rec.label != segment[-1].label:
            flush()
            segment = []
        segment.append(rec)
    flush()
    return WindowingResult(windows, skipped)


def _slope(values):
    t = np.arange(values.size, dtype=np.float64)
    t -= t.mean()
    denom = np.dot(t, t)
    return float(np.dot(t, values - values.mean()) / denom) if denom else 0.0


def extract_features(window):
    """Five window statistics: qber mean, qber std, skr mean, skr std, qber slope.

    Standard deviations are population (``ddof=0``); the slope is the least
    squares fit of qber against the step index inside the window.
    """
    q = np.asarray(window.qber, dtype=np.float64)
    s = np.asarray(window.skr, dtype=np.float64)
    return np.array([q.mean(), q.std(), s.mean(), s.std(), _slope(q)])


def features_from_windows(windows):
    if not windows:
        return LabeledDataset(np.zeros((0, len(FEATURE_NAMES))), np.zeros(0, dtype=np.int64))
    X = np.vstack([extract_features(w) for w in windows])
    y = np.array([w.label for w in windows], dtype=np.int64)
    return LabeledDataset(X, y)


# -- CSV ---------------------------------------------------------------------

def _number(text, path, line, column, kind=float):
    try:
        value = kind(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", path, line, column) from None
    if kind is float and not math.isfinite(value):
        raise ParseError(f"non-finite value {text!r}", path, line, column)
    return value


def _label(text, path, line, column):
    try:
        value = int(text)
    except ValueError:
        raise ParseError(f"label must be an integer, got {text!r}", path, line, column) from None
    if not 0 <= value < N_CLASSES:
        raise ParseError(f"label {value} outside 0..{N_CLASSES - 1}", path, line, column)
    return value


def _read_rows(path, header):
    path = Path(path)
    if not path.is_file():
        raise ParseError("file not found", path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or tuple(c.strip() for c in first) != header:
            raise ParseError(f"header must be {','.join(header)}", path, 1)
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} columns, got {len(row)}", path, reader.line_num)
            yield reader.line_num, [c.strip() for c in row]


def load_feature_csv(path):
    """Read a ``f1,...,f5,label`` file. Errors name the offending line and column."""
    rows, labels = [], []
    for line, cells in _read_rows(path, FEATURE_HEADER):
        rows.append([_number(c, path, line, col + 1) for col, c in enumerate(cells[:-1])])
        labels.append(_label(cells[-1], path, line, len(cells)))
    X = np.array(rows, dtype=np.float64).reshape(-1, len(FEATURE_NAMES))
    return LabeledDataset(X, np.array(labels, dtype=np.int64))


def format_feature_csv(ds):
    buf = io.StringIO()
    buf.write(",".join(FEATURE_HEADER) + "\n")
    for row, label in zip(ds.X, ds.y):
        buf.write(",".join(repr(float(v)) for v in row) + f",{int(label)}\n")
    return buf.getvalue()


def write_feature_csv(ds, path):
    Path(path).write_text(format_feature_csv(ds), encoding="utf-8", newline="\n")


def load_series_csv(path):
    """Read a ``step,qber,skr,label`` file into :class:`TimeSeriesRecord` objects."""
    out = []
    for line, cells in _read_rows(path, SERIES_HEADER):
        step = _number(cells[0], path, line, 1, int)
        qber = _number(cells[1], path, line, 2)
        skr = _number(cells[2], path, line, 3)
        label = _label(cells[3], path, line, 4)
        if not 0.0 <= qber <= 1.0:
            raise ParseError(f"qber {qber} outside [0, 1]", path, line, 2)
        if skr < 0:
            raise ParseError(f"skr {skr} is negative", path, line, 3)
        out.append(TimeSeriesRecord(step, qber, skr, label))
    return out


def write_series_csv(records, path):
    lines = [",".join(SERIES_HEADER)]
    lines += [f"{r.step},{r.qber!r},{r.skr!r},{r.label}" for r in records]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def sniff_csv_kind(path):
    """``"series"`` or ``"features"`` judged from the header line."""
    path = Path(path)
    if not path.is_file():
        raise ParseError("file not found", path)
    with open(path, encoding="utf-8") as fh:
        header = tuple(c.strip() for c in fh.readline().strip().split(","))
    if header == SERIES_HEADER:
        return "series"
    if header == FEATURE_HEADER:
        return "features"
    raise ParseError(
        f"unrecognised header; expected {','.join(SERIES_HEADER)} or {','.join(FEATURE_HEADER)}", path, 1
    )


# -- synthetic data ----------------------------------------------------------

def synthetic_class_means(separation=2.0):
    """Class centres of the synthetic generator, shape ``(9, 5)``.

    Class ``c`` sits at ``((c % 3) - 1) * s`` and ``((c // 3) - 1) * s`` on the
    first two axes (a 3x3 grid), on a circle of radius ``s`` at angle
    ``2 pi c / 9`` on axes three and four, and at ``+-s/2`` by parity on axis
    five, with ``s = separation``.
    """
    s = separation
    c = np.arange(N_CLASSES)
    ang = 2.0 * np.pi * c / N_CLASSES
    return np.column_stack(
        [(c % 3 - 1) * s, (c // 3 - 1) * s, s * np.cos(ang), s * np.sin(ang), 0.5 * s * (2 * (c % 2) - 1)]
    )


def synthesize_dataset(seed=0, rows_per_class=100, separation=2.0):
    """Nine unit-variance Gaussian clusters in five dimensions around :func:`synthetic_class_means`.

    Rows are grouped by class in ascending order. The same seed always gives
    the same dataset.
    """
    if rows_per_class < 1:
        raise InvalidInputError("rows_per_class must be >= 1")
    rng = np.random.default_rng(seed)
    means = synthetic_class_means(separation)
    X = np.vstack([m + rng.standard_normal((rows_per_class, means.shape[1])) for m in means])
    y = np.repeat(np.arange(N_CLASSES), rows_per_class)
    return LabeledDataset(X, y)


def synthesize_series(seed=0, steps_per_class=200):
    """Raw qber/skr series with one contiguous segment per class, for exercising the windowing path."""
    rng = np.random.default_rng(seed)
    records = []
    step = 0
    for c in range(N_CLASSES):
        base_q = 0.02 + 0.004 * c
        base_s = 1200.0 - 90.0 * c
        drift = (c % 3 - 1) * 2e-5
        for t in range(steps_per_class):
            q = min(max(base_q + drift * t + rng.normal(0, 0.002 * (1 + c % 2)), 0.0), 1.0)
            s = max(base_s + rng.normal(0, 25.0 * (1 + c // 3)), 0.0)
            records.append(TimeSeriesRecord(step, float(q), float(s), c))
            step += 1
    return records


# -- splitting ---------------------------------------------------------------

def split_dataset(ds, fraction=0.8, seed=0):
    """Stratified shuffle split; ``round(fraction * n_c)`` rows of each class go to train."""
    if not 0.0 < fraction < 1.0:
        raise InvalidInputError(f"fraction must lie strictly between 0 and 1, got {fraction}")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in range(N_CLASSES):
        idx = np.flatnonzero(ds.y == c)
        if idx.size == 0:
            continue
        if idx.size < 2:
            raise InvalidInputError(f"class {c} has {idx.size} row; stratification needs at least 2")
        idx = rng.permutation(idx)
        k = min(max(int(round(fraction * idx.size)), 1), idx.size - 1)
        train_idx.append(idx[:k])
        test_idx.append(idx[k:])
    train_idx = np.sort(np.concatenate(train_idx)) if train_idx else np.zeros(0, dtype=np.int64)
    test_idx = np.sort(np.concatenate(test_idx)) if test_idx else np.zeros(0, dtype=np.int64)
    return (
        LabeledDataset(ds.X[train_idx], ds.y[train_idx], "train", ds.feature_names),
        LabeledDataset(ds.X[test_idx], ds.y[test_idx], "test", ds.feature_names),
    )
