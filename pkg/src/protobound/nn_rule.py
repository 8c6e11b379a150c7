"""The 1-nearest-neighbor rule over a prototype subset of a dataset.

Distances are compared as squared Euclidean values; no square roots are
taken. Ties go to the prototype with the smallest source index, which makes
every consumer of the rule deterministic.
"""

from __future__ import annotations

import numpy as np

from .dataset import Dataset, LabeledPoint


class EmptyPrototypeSetError(Exception):
    """The nearest-neighbor map does not exist for an empty prototype set."""


def sq_dists_to(coords: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Squared Euclidean distance from each row of `coords` to `x`.

    This is the single distance kernel for the whole package; everything that
    must agree bit-for-bit on distances routes through it.
    """
    diff = coords - x
    return np.sum(diff * diff, axis=1)


class PrototypeSet:
    """An insertion-ordered subset of a dataset's points.

    Members are stored as source indices into the parent dataset. The class
    keeps a growing coordinate matrix so nearest-neighbor scans stay
    vectorized while condensation algorithms append one point at a time.
    """

    def __init__(self, parent: Dataset, indices: list[int] | None = None):
        self._parent = parent
        self._indices: list[int] = []
        self._index_set: set[int] = set()
        self._cap = 8
        self._coords = np.empty((self._cap, parent.dim), dtype=np.float64)
        self._codes = np.empty(self._cap, dtype=np.int64)
        self._idx_arr = np.empty(self._cap, dtype=np.int64)
        for i in indices or ():
            self.add(i)

    @classmethod
    def full(cls, parent: Dataset) -> "PrototypeSet":
        return cls(parent, list(range(len(parent))))

    @property
    def parent(self) -> Dataset:
        return self._parent

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(self._indices)

    @property
    def coords(self) -> np.ndarray:
        return self._coords[: len(self._indices)]

    @property
    def codes(self) -> np.ndarray:
        return self._codes[: len(self._indices)]

    @property
    def index_array(self) -> np.ndarray:
        return self._idx_arr[: len(self._indices)]

    def add(self, source_index: int) -> None:
        if not 0 <= source_index < len(self._parent):
            raise IndexError(f"source index {source_index} out of range")
        if source_index in self._index_set:
            raise ValueError(f"source index {source_index} already a member")
        n = len(self._indices)
        if n == self._cap:
            self._cap *= 2
            for name in ("_coords", "_codes", "_idx_arr"):
                old = getattr(self, name)
                new_shape = (self._cap,) + old.shape[1:]
                grown = np.empty(new_shape, dtype=old.dtype)
                grown[:n] = old[:n]
                setattr(self, name, grown)
        self._coords[n] = self._parent.coords[source_index]
        self._codes[n] = self._parent.label_codes[source_index]
        self._idx_arr[n] = source_index
        self._indices.append(source_index)
        self._index_set.add(source_index)

    def members(self) -> list[tuple[int, LabeledPoint]]:
        return [(i, self._parent[i]) for i in self._indices]

    def __contains__(self, source_index: int) -> bool:
        return source_index in self._index_set

    def __len__(self) -> int:
        return len(self._indices)

    def __repr__(self) -> str:
        return f"PrototypeSet(indices={self._indices!r})"


def _nearest_position(d2: np.ndarray, source_indices: np.ndarray) -> int:
    """Position of the minimum of `d2`, ties broken by smallest source index."""
    m = d2.min()
    candidates = np.nonzero(d2 == m)[0]
    if len(candidates) == 1:
        return int(candidates[0])
    return int(candidates[np.argmin(source_indices[candidates])])


def nearest(prototypes: PrototypeSet, x) -> tuple[LabeledPoint, int]:
    """Nearest member of the prototype set to `x`, with its source index."""
    if len(prototypes) == 0:
        raise EmptyPrototypeSetError("nearest neighbor of an empty set")
    q = np.asarray(x, dtype=np.float64)
    if q.shape != (prototypes.parent.dim,):
        raise ValueError(
            f"query has shape {q.shape}, expected ({prototypes.parent.dim},)"
        )
    d2 = sq_dists_to(prototypes.coords, q)
    pos = _nearest_position(d2, prototypes.index_array)
    idx = int(prototypes.index_array[pos])
    return prototypes.parent[idx], idx


def classify(prototypes: PrototypeSet, x) -> str:
    """Label of the nearest prototype."""
    return nearest(prototypes, x)[0].label


def is_consistent(prototypes: PrototypeSet, dataset: Dataset) -> bool:
    """True when every point of `dataset` gets its own label back.

    `prototypes` must have been drawn from `dataset`.
    """
    if prototypes.parent is not dataset:
        raise ValueError("prototype set was not drawn from this dataset")
    if len(prototypes) == 0:
        raise EmptyPrototypeSetError("an empty set classifies nothing")
    for i, p in enumerate(dataset):
        if classify(prototypes, dataset.coords[i]) != p.label:
            return False
    return True
