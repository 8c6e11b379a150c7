"""Bandwidth certificates for agreement between kernel scores and the NN rule.

A bandwidth sigma is *neighborly* for a training set T when, for every
nonempty subset P of T, every dual weight vector with exactly one record per
member of P (true class added, any single other class subtracted), and every
query taken from T, the kernel argmax names the same class as the 1-NN rule
over P.

The analytic certificate works by domination. Fix a query x' and a subset P
with nearest member N. After dividing every kernel value by k(N, x'), the
record of N contributes exactly 1 to its true class and at most 0 elsewhere,
while each other record contributes at most exp(-(d2 - d2_min) / (2 sigma^2))
in absolute value, where d2 ranges over squared distances from x' to members
of P. With gamma the smallest positive gap between squared distances from any
query in T to any two points of T, each of those at most |T| - 1 terms is
bounded by exp(-gamma / (2 sigma^2)). Requiring

    (|T| - 1) * exp(-gamma / (2 sigma^2)) < 1/2

keeps the nearest record's vote decisive for every P, assignment, and query
simultaneously, and solving for sigma gives the threshold

    sigma* = sqrt(gamma / (2 ln(2 (|T| - 1)))).

Every sigma strictly below sigma* is certified. If some query is exactly
equidistant from two points (gamma = 0) the construction collapses and no
analytic certificate exists; `bisect_sigma` can still search for an
empirically verified bandwidth on small sets.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .kernel_machine import (
    DualWeightVector,
    KernelConfig,
    argmax_class,
    log_kernel_row,
)
from .nn_rule import PrototypeSet, _nearest_position, classify, sq_dists_to

DEFAULT_EXHAUSTIVE_CAP = 8
DEFAULT_SAMPLED_TRIALS = 2000


class GammaDegenerateError(Exception):
    """Some query is exactly equidistant from two dataset points.

    No analytic certificate exists: the domination argument needs a positive
    gap. Perturb the data or search empirically with `bisect_sigma`.
    """

    def __init__(self, message: str, query_index: int, first: int, second: int):
        super().__init__(message)
        self.query_index = query_index
        self.first = first
        self.second = second


class ExhaustiveCapError(Exception):
    """The set is too large to enumerate; use sampled mode instead."""


@dataclass(frozen=True)
class SigmaCertificate:
    """A certified-neighborly bandwidth statement.

    Analytic certificates cover every sigma strictly below `sigma_star`.
    Empirical certificates cover exactly the bandwidth that passed
    verification; neighborliness is not monotone in sigma in general, so
    nothing else can be inferred from them.
    """

    sigma_star: float
    gamma: float
    method: str
    verified: bool

    def covers(self, sigma: float) -> bool:
        if self.method == "analytic-sufficient":
            return 0.0 < sigma < self.sigma_star
        return self.verified and sigma == self.sigma_star

    def to_json_dict(self) -> dict:
        return {
            "sigma_star": self.sigma_star,
            "gamma": self.gamma,
            "method": self.method,
            "verified": self.verified,
        }


def _squared_distance_matrix(dataset: Dataset) -> np.ndarray:
    coords = dataset.coords
    return np.stack(
        [sq_dists_to(coords, coords[q]) for q in range(len(dataset))]
    )


def min_squared_gap(dataset: Dataset) -> float:
    """Smallest positive gap between squared distances from any query in the
    set to any two of its points (the query's zero self-distance included).

    Raises GammaDegenerateError on an exact tie.
    """
    n = len(dataset)
    if n < 2:
        raise ValueError("need at least two points")
    gamma = math.inf
    coords = dataset.coords
    for q in range(n):
        d2 = sq_dists_to(coords, coords[q])
        order = np.argsort(d2, kind="stable")
        diffs = np.diff(d2[order])
        tied = np.nonzero(diffs == 0.0)[0]
        if tied.size:
            t = int(tied[0])
            raise GammaDegenerateError(
                f"query {q} is equidistant from points {int(order[t])} "
                f"and {int(order[t + 1])}",
                q,
                int(order[t]),
                int(order[t + 1]),
            )
        gamma = min(gamma, float(diffs.min()))
    return gamma


def sufficient_sigma(dataset: Dataset) -> SigmaCertificate:
    """Analytic bandwidth threshold sigma* for the dataset.

    Every sigma < sigma* makes kernel scoring reproduce the 1-NN rule for
    all subsets, assignments, and training queries.
    """
    gamma = min_squared_gap(dataset)
    n = len(dataset)
    sigma_star = math.sqrt(gamma / (2.0 * math.log(2.0 * (n - 1))))
    return SigmaCertificate(sigma_star, gamma, "analytic-sufficient", False)


@dataclass(frozen=True)
class Violation:
    """A witness that a bandwidth is not neighborly.

    Replaying the subset, assignment, and query through the kernel machine
    reproduces the mismatch (or the degenerate tie) exactly.
    """

    subset: tuple[int, ...]
    assignment: dict[int, str]
    query_index: int
    argmax_label: str
    nn_label: str
    degenerate: bool

    def describe(self) -> str:
        o = ", ".join(f"{i}->{c}" for i, c in self.assignment.items())
        kind = "degenerate argmax" if self.degenerate else "argmax mismatch"
        return (
            f"{kind}: P={list(self.subset)}, o=({o}), query={self.query_index}, "
            f"argmax={self.argmax_label!r}, nn={self.nn_label!r}"
        )


def replay_violation(
    dataset: Dataset, cfg: KernelConfig, violation: Violation
) -> tuple[str, bool, str]:
    """Recompute both sides of a reported violation through the public API.

    Returns (argmax label, degeneracy flag, nn label).
    """
    w = DualWeightVector(cfg, dataset.classes, dataset.dim)
    for i in violation.subset:
        w.append(i, dataset[i].coords, dataset[i].label, violation.assignment[i])
    prototypes = PrototypeSet(dataset, list(violation.subset))
    label, degenerate = argmax_class(w, dataset.coords[violation.query_index])
    nn_label = classify(prototypes, dataset.coords[violation.query_index])
    return label, degenerate, nn_label


def _wrong_code_lists(dataset: Dataset) -> list[list[int]]:
    n_classes = len(dataset.classes)
    out = []
    for code in range(n_classes):
        out.append([c for c in range(n_classes) if c != code])
    return [out[int(c)] for c in dataset.label_codes]


def _verify_exhaustive(
    dataset: Dataset, cfg: KernelConfig, cap: int
) -> Violation | None:
    n = len(dataset)
    if n > cap:
        raise ExhaustiveCapError(
            f"{n} points exceed the exhaustive cap of {cap}; "
            f"use mode='sampled' or raise the cap"
        )
    n_classes = len(dataset.classes)
    coords = dataset.coords
    label_codes = dataset.label_codes
    d2_rows = _squared_distance_matrix(dataset)
    logk_rows = [log_kernel_row(coords, coords[q], cfg.sigma) for q in range(n)]
    wrong = _wrong_code_lists(dataset)

    # Subsets ascend as bitmasks, assignments ascend lexicographically by
    # member order, queries ascend by index: the first violation reported is
    # the first in (P, o, query) order.
    for mask in range(1, 2**n):
        members = [i for i in range(n) if mask >> i & 1]
        choice_lists = [wrong[i] for i in members]
        if any(not ch for ch in choice_lists):
            continue  # single-class alphabet: no restricted vector exists
        assignments = np.array(
            list(itertools.product(*choice_lists)), dtype=np.int64
        )
        n_assign = len(assignments)
        members_arr = np.array(members, dtype=np.int64)
        member_codes = label_codes[members_arr]
        rows = np.arange(n_assign)

        hit: tuple[int, int] | None = None  # (assignment rank, query)
        for q in range(n):
            logk = logk_rows[q][members_arr]
            ratios = np.exp(logk - logk.max())
            pos = np.bincount(member_codes, weights=ratios, minlength=n_classes)
            neg = np.zeros((n_assign, n_classes), dtype=np.float64)
            for j in range(len(members)):
                neg[rows, assignments[:, j]] += ratios[j]
            scores = pos[None, :] - neg
            tops = scores.max(axis=1)
            degenerate = (scores == tops[:, None]).sum(axis=1) > 1
            argmaxes = scores.argmax(axis=1)

            nn_pos = _nearest_position(d2_rows[q][members_arr], members_arr)
            nn_code = int(label_codes[members_arr[nn_pos]])
            bad = degenerate | (argmaxes != nn_code)
            if bad.any():
                rank = int(np.argmax(bad))
                if hit is None or (rank, q) < hit:
                    hit = (rank, q)
        if hit is not None:
            rank, q = hit
            assignment = {
                m: dataset.classes[int(assignments[rank, j])]
                for j, m in enumerate(members)
            }
            nn_pos = _nearest_position(d2_rows[q][members_arr], members_arr)
            nn_label = dataset[int(members_arr[nn_pos])].label
            candidate = Violation(
                tuple(members),
                assignment,
                q,
                dataset.classes[int(argmaxes[rank])],
                nn_label,
                bool(degenerate[rank]),
            )
            label, degen, nn = replay_violation(dataset, cfg, candidate)
            if not degen and label == nn:  # pragma: no cover - internal check
                raise RuntimeError(
                    "enumerated violation did not replay; scoring paths diverged"
                )
            return Violation(
                candidate.subset, candidate.assignment, q, label, nn, degen
            )
    return None


def _verify_sampled(
    dataset: Dataset, cfg: KernelConfig, seed: int, trials: int
) -> Violation | None:
    n = len(dataset)
    n_classes = len(dataset.classes)
    if n_classes < 2:
        return None  # no restricted vector exists
    rng = np.random.default_rng(seed)
    wrong_labels = [
        [c for c in dataset.classes if c != dataset[i].label] for i in range(n)
    ]
    for _ in range(trials):
        while True:
            take = rng.random(n) < 0.5
            if take.any():
                break
        members = [i for i in range(n) if take[i]]
        assignment = {
            i: wrong_labels[i][int(rng.integers(len(wrong_labels[i])))]
            for i in members
        }
        q = int(rng.integers(n))
        candidate = Violation(tuple(members), assignment, q, "", "", False)
        label, degen, nn = replay_violation(dataset, cfg, candidate)
        if degen or label != nn:
            return Violation(tuple(members), assignment, q, label, nn, degen)
    return None


def verify_neighborly(
    dataset: Dataset,
    cfg: KernelConfig,
    mode: str = "exhaustive",
    cap: int = DEFAULT_EXHAUSTIVE_CAP,
    seed: int = 0,
    trials: int = DEFAULT_SAMPLED_TRIALS,
) -> Violation | None:
    """Check the neighborly property empirically at one bandwidth.

    Exhaustive mode enumerates every nonempty subset, assignment of a wrong
    class to each member, and training query; it refuses sets larger than
    `cap`. Sampled mode draws `trials` random triples (membership by fair
    coin, assignments and query uniform) from `seed`. Returns None on a pass
    or the first violation found; a degenerate (tied) argmax counts as a
    violation even when its resolution happens to match the NN label.
    """
    if mode == "exhaustive":
        return _verify_exhaustive(dataset, cfg, cap)
    if mode == "sampled":
        return _verify_sampled(dataset, cfg, seed, trials)
    raise ValueError(f"unknown mode {mode!r}")


def bisect_sigma(
    dataset: Dataset,
    cap: int = DEFAULT_EXHAUSTIVE_CAP,
    start_sigma: float | None = None,
    max_halvings: int = 60,
    refine_rounds: int = 12,
) -> SigmaCertificate:
    """Search for an exhaustively verified bandwidth when no analytic
    certificate exists (gamma = 0 on ties).

    Halves sigma from the data diameter until verification passes, then
    bisects geometrically toward the largest passing bandwidth found. The
    returned certificate covers exactly its own sigma.
    """
    if len(dataset) > cap:
        raise ExhaustiveCapError(
            f"{len(dataset)} points exceed the exhaustive cap of {cap}"
        )
    sigma = start_sigma if start_sigma is not None else max(dataset.diameter(), 1.0)
    if not (sigma > 0 and math.isfinite(sigma)):
        raise ValueError(f"invalid starting sigma {sigma!r}")
    lo = None
    for _ in range(max_halvings):
        if verify_neighborly(dataset, KernelConfig(sigma), "exhaustive", cap) is None:
            lo = sigma
            break
        sigma /= 2.0
    if lo is None:
        raise ValueError(
            f"no neighborly bandwidth found down to {sigma}; "
            f"the set may admit none (cross-class distance ties)"
        )
    hi = lo * 2.0
    if start_sigma is None and lo == max(dataset.diameter(), 1.0):
        hi = lo  # passed at the start; nothing to refine against
    for _ in range(refine_rounds if hi > lo else 0):
        mid = math.sqrt(lo * hi)
        if verify_neighborly(dataset, KernelConfig(mid), "exhaustive", cap) is None:
            lo = mid
        else:
            hi = mid
    return SigmaCertificate(lo, 0.0, "empirical-bisection", True)
