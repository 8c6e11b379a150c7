"""Bandwidth certificates and empirical verification of NN/argmax agreement."""

import itertools
import math

import numpy as np
import pytest

import protobound as pb


def tie_set():
    # point 1 sits exactly between two same-label points: gamma degenerates
    # but the tie is benign for classification
    return pb.Dataset([((-1.0,), "A"), ((0.0,), "B"), ((1.0,), "A")])


class TestMinSquaredGap:
    def test_line_oracle(self, line3):
        # query 10 sees squared distances {0, 1, 100}: the smallest gap is 1
        assert pb.min_squared_gap(line3) == 1.0

    def test_two_points(self):
        ds = pb.Dataset([((0.0,), "A"), ((3.0,), "B")])
        assert pb.min_squared_gap(ds) == 9.0

    def test_exact_tie_raises_with_witnesses(self):
        with pytest.raises(pb.GammaDegenerateError) as exc:
            pb.min_squared_gap(tie_set())
        assert exc.value.query_index == 1
        assert {exc.value.first, exc.value.second} == {0, 2}

    def test_single_point_rejected(self):
        with pytest.raises(ValueError):
            pb.min_squared_gap(pb.Dataset([((0.0,), "A")]))


class TestSufficientSigma:
    def test_line_oracle(self, line3):
        cert = pb.sufficient_sigma(line3)
        assert cert.gamma == 1.0
        assert cert.sigma_star == pytest.approx(0.6005612043932249, abs=1e-15)
        assert cert.method == "analytic-sufficient"
        assert not cert.verified

    def test_threshold_solves_the_half_equation(self):
        for seed in range(10):
            ds = pb.fuzz_dataset(seed, max_n=10)
            cert = pb.sufficient_sigma(ds)
            lhs = (len(ds) - 1) * math.exp(
                -cert.gamma / (2.0 * cert.sigma_star**2)
            )
            assert lhs == pytest.approx(0.5, rel=1e-12)

    def test_covers_is_strict(self, line3):
        cert = pb.sufficient_sigma(line3)
        assert cert.covers(cert.sigma_star / 2)
        assert cert.covers(cert.sigma_star * 0.999)
        assert not cert.covers(cert.sigma_star)
        assert not cert.covers(cert.sigma_star * 1.001)
        assert not cert.covers(0.0)

    def test_json_dict(self, line3):
        d = pb.sufficient_sigma(line3).to_json_dict()
        assert set(d) == {"sigma_star", "gamma", "method", "verified"}

    def test_interference_chain_below_threshold(self):
        # the certificate rests on: for every query and subset, the summed
        # kernel ratios of non-nearest members stay below 1/2 because each
        # ratio is at most exp(-gamma / (2 sigma^2)) and there are at most
        # n - 1 of them
        for seed in range(20):
            ds = pb.fuzz_dataset(seed, max_n=7, max_dim=3, max_classes=3)
            cert = pb.sufficient_sigma(ds)
            n = len(ds)
            for sigma in (cert.sigma_star / 2, 0.99 * cert.sigma_star):
                per_term_cap = math.exp(-cert.gamma / (2 * sigma * sigma))
                assert (n - 1) * per_term_cap < 0.5
                for q in range(n):
                    d2 = pb.sq_dists_to(ds.coords, ds.coords[q])
                    for size in range(1, n + 1):
                        for subset in itertools.combinations(range(n), size):
                            sub = np.array(subset)
                            dmin = d2[sub].min()
                            ratios = np.exp(
                                (dmin - d2[sub]) / (2 * sigma * sigma)
                            )
                            interference = ratios.sum() - 1.0  # drop the nearest
                            # 1e-12 relative slack: exp is evaluated along two
                            # float paths that may differ in the last ulp
                            cap = (size - 1) * per_term_cap
                            assert interference <= cap * (1 + 1e-12)
                            assert interference < 0.5


class TestVerifyNeighborly:
    def test_passes_below_threshold(self, line3):
        sigma = pb.sufficient_sigma(line3).sigma_star / 2
        assert pb.verify_neighborly(line3, pb.KernelConfig(sigma)) is None

    def test_finds_first_violation_at_large_sigma(self, line3):
        violation = pb.verify_neighborly(line3, pb.KernelConfig(15.0))
        assert violation is not None
        assert violation.subset == (0, 1, 2)
        assert violation.assignment == {0: "B", 1: "A", 2: "A"}
        assert violation.query_index == 0
        assert (violation.argmax_label, violation.nn_label) == ("B", "A")
        assert not violation.degenerate
        assert violation.describe() == (
            "argmax mismatch: P=[0, 1, 2], o=(0->B, 1->A, 2->A), "
            "query=0, argmax='B', nn='A'"
        )

    def test_violation_replays_through_public_api(self, line3):
        cfg = pb.KernelConfig(15.0)
        violation = pb.verify_neighborly(line3, cfg)
        label, degenerate, nn = pb.replay_violation(line3, cfg, violation)
        assert degenerate or label != nn
        assert (label, nn) == (violation.argmax_label, violation.nn_label)

    def test_sampled_mode_finds_the_same_witness(self, line3):
        violation = pb.verify_neighborly(
            line3, pb.KernelConfig(15.0), mode="sampled", seed=7, trials=500
        )
        assert violation is not None
        # only one violating triple exists for this set and bandwidth
        assert violation.subset == (0, 1, 2)
        assert violation.query_index == 0

    def test_sampled_mode_passes_below_threshold(self, line3):
        sigma = pb.sufficient_sigma(line3).sigma_star / 2
        assert (
            pb.verify_neighborly(
                line3, pb.KernelConfig(sigma), mode="sampled", trials=300
            )
            is None
        )

    def test_single_class_has_no_restricted_vectors(self):
        ds = pb.Dataset([((0.0,), "A"), ((5.0,), "A")])
        assert pb.verify_neighborly(ds, pb.KernelConfig(100.0)) is None
        assert (
            pb.verify_neighborly(ds, pb.KernelConfig(100.0), mode="sampled")
            is None
        )

    def test_cap_refuses_large_sets(self):
        ds = pb.random_dataset(0, n_points=9, dim=2, n_classes=2)
        with pytest.raises(pb.ExhaustiveCapError, match="sampled"):
            pb.verify_neighborly(ds, pb.KernelConfig(1.0), cap=8)
        assert (
            pb.verify_neighborly(
                ds, pb.KernelConfig(0.01), mode="sampled", trials=50
            )
            is None
        )

    def test_unknown_mode(self, line3):
        with pytest.raises(ValueError, match="mode"):
            pb.verify_neighborly(line3, pb.KernelConfig(1.0), mode="all")


def naive_verify(dataset, sigma):
    """Reference enumerator: plain python, raw kernels, same search order."""
    n = len(dataset)
    classes = dataset.classes
    coords = [p.coords for p in dataset]
    labels = [p.label for p in dataset]
    wrong = [[c for c in classes if c != lab] for lab in labels]
    for mask in range(1, 2**n):
        members = [i for i in range(n) if mask >> i & 1]
        if any(not wrong[i] for i in members):
            continue
        for assignment in itertools.product(*(wrong[i] for i in members)):
            for q in range(n):
                d2 = [
                    sum((a - b) ** 2 for a, b in zip(coords[i], coords[q]))
                    for i in members
                ]
                nn_label = labels[members[d2.index(min(d2))]]
                scores = {}
                for cls in classes:
                    total = 0.0
                    for pos, i in enumerate(members):
                        k = math.exp(-d2[pos] / (2.0 * sigma * sigma))
                        if labels[i] == cls:
                            total += k
                        if assignment[pos] == cls:
                            total -= k
                    scores[cls] = total
                top = max(scores.values())
                winners = [c for c in classes if scores[c] == top]
                if len(winners) > 1 or winners[0] != nn_label:
                    return (
                        tuple(members),
                        dict(zip(members, assignment)),
                        q,
                    )
    return None


class TestAgainstNaiveEnumerator:
    def test_line_at_both_regimes(self, line3):
        assert naive_verify(line3, 0.3) is None
        first = naive_verify(line3, 15.0)
        violation = pb.verify_neighborly(line3, pb.KernelConfig(15.0))
        assert first == (
            violation.subset,
            violation.assignment,
            violation.query_index,
        )

    def test_fuzzed_sets_at_moderate_bandwidths(self):
        # kernels stay far from underflow here, so the raw-domain reference
        # and the shifted implementation must agree exactly
        for seed in range(10):
            ds = pb.fuzz_dataset(seed, max_n=6, max_dim=2, max_classes=3)
            for factor in (0.4, 1.2):
                sigma = factor * ds.diameter()
                got = pb.verify_neighborly(ds, pb.KernelConfig(sigma))
                want = naive_verify(ds, sigma)
                if want is None:
                    assert got is None
                else:
                    assert got is not None
                    assert want == (got.subset, got.assignment, got.query_index)


class TestBisectSigma:
    def test_finds_verified_bandwidth_despite_ties(self):
        ds = tie_set()
        with pytest.raises(pb.GammaDegenerateError):
            pb.sufficient_sigma(ds)
        cert = pb.bisect_sigma(ds)
        assert cert.method == "empirical-bisection"
        assert cert.verified
        assert (
            pb.verify_neighborly(ds, pb.KernelConfig(cert.sigma_star)) is None
        )
        assert cert.covers(cert.sigma_star)
        assert not cert.covers(cert.sigma_star * 0.9)
        assert not cert.covers(cert.sigma_star * 1.1)

    def test_respects_cap(self):
        ds = pb.random_dataset(1, n_points=9, dim=2, n_classes=2)
        with pytest.raises(pb.ExhaustiveCapError):
            pb.bisect_sigma(ds, cap=8)

    def test_gives_up_when_nothing_verifies(self):
        # cross-class exact tie: queries between the two classes can never
        # be resolved consistently, so no bandwidth passes
        ds = pb.Dataset([((0.0,), "A"), ((2.0,), "B"), ((1.0,), "C")])
        with pytest.raises(ValueError, match="no neighborly bandwidth"):
            pb.bisect_sigma(ds, max_halvings=8)
