"""Kernel multiclass perceptron in dual form with underflow-safe scoring.

The feature space is one Gaussian-kernel copy of the input space per class
("channels"). Inner products between channeled features vanish unless the
channels match, so a weight vector is fully described by its update records:
each update adds the feature of a point on its true-class channel and
subtracts it on one other channel. Scores are therefore signed sums of
Gaussian kernel values per class.

Numerics policy: raw kernel values exp(-||x - x'||^2 / (2 sigma^2)) underflow
to zero for small sigma, which would erase the very comparisons that matter.
Ranking is computed in an exponent-shifted form instead: the largest
log-kernel value over the records is factored out, so the surviving ratios
are exact in [0, 1] with at least one equal to 1. Shifting rescales every
class score by the same positive factor and leaves the argmax unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import Dataset
from .nn_rule import PrototypeSet, sq_dists_to


class PassBudgetError(Exception):
    """Training exceeded its pass budget; partial results are attached."""

    def __init__(self, message: str, trace, weights):
        super().__init__(message)
        self.trace = trace
        self.weights = weights


@dataclass(frozen=True)
class KernelConfig:
    """Bandwidth of the Gaussian channel kernel."""

    sigma: float

    def __post_init__(self) -> None:
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma!r}")


def log_kernel_row(coords: np.ndarray, x: np.ndarray, sigma: float) -> np.ndarray:
    """Log kernel value from each row of `coords` to `x`. Always finite."""
    return -sq_dists_to(coords, x) / (2.0 * sigma * sigma)


def kernel_log_eval(cfg: KernelConfig, x, y) -> float:
    """log k(x, y); finite even where k itself underflows."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    diff = a - b
    return float(-np.sum(diff * diff) / (2.0 * cfg.sigma * cfg.sigma))


def kernel_eval(cfg: KernelConfig, x, y) -> float:
    """Gaussian kernel value in (0, 1]; may underflow to 0.0 in float64."""
    return math.exp(kernel_log_eval(cfg, x, y))


@dataclass(frozen=True)
class UpdateRecord:
    """One perceptron update: +1 on channel `c`, -1 on channel `y` at `x`.

    `index` is the source row of `x` when it came from a dataset. `y` is None
    only when the alphabet has a single class and there is nothing to
    subtract.
    """

    index: int | None
    x: tuple[float, ...]
    c: str
    y: str | None


class DualWeightVector:
    """Weight vector represented by its update records.

    Materializing the feature space is never needed: scores against any query
    are kernel sums over the records. Internally keeps growing arrays so the
    per-query scan stays vectorized.
    """

    def __init__(self, kernel: KernelConfig, classes: Sequence[str], dim: int):
        if not classes:
            raise ValueError("the class alphabet cannot be empty")
        self.kernel = kernel
        self.classes = tuple(str(c) for c in classes)
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("duplicate labels in the class alphabet")
        self.dim = int(dim)
        self._code = {c: k for k, c in enumerate(self.classes)}
        self._records: list[UpdateRecord] = []
        self._cap = 8
        self._coords = np.empty((self._cap, self.dim), dtype=np.float64)
        self._c_codes = np.empty(self._cap, dtype=np.int64)
        self._y_codes = np.empty(self._cap, dtype=np.int64)

    @property
    def records(self) -> tuple[UpdateRecord, ...]:
        return tuple(self._records)

    @property
    def coords(self) -> np.ndarray:
        return self._coords[: len(self._records)]

    @property
    def c_codes(self) -> np.ndarray:
        return self._c_codes[: len(self._records)]

    @property
    def y_codes(self) -> np.ndarray:
        """Subtracted-channel codes; -1 stands for no subtraction."""
        return self._y_codes[: len(self._records)]

    def append(self, index: int | None, x, c: str, y: str | None) -> None:
        if c not in self._code:
            raise ValueError(f"unknown class {c!r}")
        if y is not None and y not in self._code:
            raise ValueError(f"unknown class {y!r}")
        if y == c:
            raise ValueError("the subtracted channel must differ from the true class")
        coords = tuple(float(v) for v in x)
        if len(coords) != self.dim:
            raise ValueError(f"point has dimension {len(coords)}, expected {self.dim}")
        n = len(self._records)
        if n == self._cap:
            self._cap *= 2
            for name in ("_coords", "_c_codes", "_y_codes"):
                old = getattr(self, name)
                grown = np.empty((self._cap,) + old.shape[1:], dtype=old.dtype)
                grown[:n] = old[:n]
                setattr(self, name, grown)
        self._coords[n] = coords
        self._c_codes[n] = self._code[c]
        self._y_codes[n] = -1 if y is None else self._code[y]
        self._records.append(UpdateRecord(index, coords, c, y))

    def __len__(self) -> int:
        return len(self._records)

    def to_json_dict(self) -> dict:
        return {
            "sigma": self.kernel.sigma,
            "classes": list(self.classes),
            "records": [
                {"index": r.index, "x": list(r.x), "c": r.c, "y": r.y}
                for r in self._records
            ],
        }


def score(w: DualWeightVector, x, y: str) -> float:
    """Inner product of w with the query's class-y feature, in linear domain.

    Positive and negative contributions are summed separately before the
    final subtraction. Underflows to 0.0 at tiny sigma; use the shifted path
    for ranking.
    """
    if y not in w.classes:
        raise ValueError(f"unknown class {y!r}")
    if len(w) == 0:
        return 0.0
    q = np.asarray(x, dtype=np.float64)
    k = np.exp(log_kernel_row(w.coords, q, w.kernel.sigma))
    code = w.classes.index(y)
    pos = float(np.sum(k[w.c_codes == code]))
    neg = float(np.sum(k[w.y_codes == code]))
    return pos - neg


def _scores_from_ratios(
    ratios: np.ndarray,
    c_codes: np.ndarray,
    y_codes: np.ndarray,
    n_classes: int,
) -> np.ndarray:
    """Per-class signed sums of shifted kernel ratios."""
    pos = np.bincount(c_codes, weights=ratios, minlength=n_classes)
    mask = y_codes >= 0
    neg = np.bincount(y_codes[mask], weights=ratios[mask], minlength=n_classes)
    return pos - neg


def _argmax_code(scores: np.ndarray) -> tuple[int, bool]:
    """First maximal position and whether the maximum is tied."""
    top = scores.max()
    degenerate = int(np.sum(scores == top)) > 1
    return int(np.argmax(scores)), degenerate


def shifted_class_scores(w: DualWeightVector, x) -> np.ndarray:
    """Exponent-shifted class scores: every true score divided by the largest
    kernel value over the records. Safe down to arbitrarily small sigma."""
    if len(w) == 0:
        return np.zeros(len(w.classes), dtype=np.float64)
    q = np.asarray(x, dtype=np.float64)
    logk = log_kernel_row(w.coords, q, w.kernel.sigma)
    ratios = np.exp(logk - logk.max())
    return _scores_from_ratios(ratios, w.c_codes, w.y_codes, len(w.classes))


def argmax_class(w: DualWeightVector, x) -> tuple[str, bool]:
    """Highest-scoring class for the query, plus a degeneracy flag.

    The flag is set when the maximum is not unique, including the all-zero
    scores of an empty weight vector. A degenerate maximum resolves to the
    earliest class in the alphabet so callers stay deterministic, but they
    should treat the answer as a non-prediction.
    """
    if len(w) == 0:
        return w.classes[0], True
    scores = shifted_class_scores(w, x)
    code, degenerate = _argmax_code(scores)
    return w.classes[code], degenerate


def _first_other_class(classes: Sequence[str], c: str) -> str | None:
    for candidate in classes:
        if candidate != c:
            return candidate
    return None


DEFAULT_MAX_PASSES = 1000


def run_mp(
    dataset: Dataset,
    cfg: KernelConfig,
    max_passes: int = DEFAULT_MAX_PASSES,
) -> tuple["UpdateTrace", DualWeightVector]:
    """Multiclass perceptron: sweep until a full pass makes no update.

    A degenerate argmax counts as a mistake, so the first point always
    triggers an update. When the degenerate resolution happens to name the
    true class, the update subtracts the earliest other class instead (with a
    single-class alphabet there is nothing to subtract). Each update is also
    logged as a prototype addition, so the returned trace has the same shape
    as the condensation trace.

    Termination is not guaranteed for arbitrary bandwidths; `max_passes`
    bounds the loop and the raised error carries the partial trace.
    """
    from .cnn import UpdateEvent, UpdateTrace  # local import to avoid a cycle

    w = DualWeightVector(cfg, dataset.classes, dataset.dim)
    prototypes = PrototypeSet(dataset)
    events: list[UpdateEvent] = []
    pass_no = 0
    while True:
        if pass_no >= max_passes:
            raise PassBudgetError(
                f"no stable pass within {max_passes} passes",
                UpdateTrace(events, prototypes, pass_no),
                w,
            )
        pass_no += 1
        updated = False
        for i, point in enumerate(dataset):
            was_empty = len(w) == 0
            predicted, degenerate = argmax_class(w, dataset.coords[i])
            if predicted == point.label and not degenerate:
                continue
            subtracted = (
                predicted
                if predicted != point.label
                else _first_other_class(w.classes, point.label)
            )
            w.append(i, point.coords, point.label, subtracted)
            if i not in prototypes:  # set union: repeat updates cannot re-add
                prototypes.add(i)
            events.append(
                UpdateEvent(pass_no, i, point.label, None if was_empty else predicted)
            )
            updated = True
        if not updated:
            break
    return UpdateTrace(events, prototypes, pass_no), w
