import dataclasses
import math

import numpy as np
import pytest

from rfiqa.errors import DegenerateInput, LengthMismatch
from rfiqa.evaluation import (
    EvalReport,
    fit_logistic5,
    logistic5,
    per_distortion_breakdown,
    per_type_srocc,
    plcc,
    rmse,
    run_protocol,
    srocc,
)
from rfiqa.planted import make_planted_store
from rfiqa.prediction import Aggregation
from rfiqa.retrieval import RetrievalConfig
from rfiqa.store import FeatureRecord, build_store

from oracles import (
    pearson_two_pass,
    rmse_naive,
    srocc_average_rank,
    srocc_rank_difference,
)


class TestSrocc:
    def test_identical_rankings(self):
        assert srocc([1, 2, 3, 4], [1, 2, 3, 4]) == pytest.approx(1.0)

    def test_reversed(self):
        assert srocc([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)

    def test_matches_rank_difference_formula_tie_free(self, rng):
        for _ in range(50):
            pred = rng.permutation(50) + rng.uniform(0, 0.4, 50)
            gt = rng.permutation(50) + rng.uniform(0, 0.4, 50)
            assert srocc(pred, gt) == pytest.approx(
                srocc_rank_difference(pred.tolist(), gt.tolist()), abs=1e-12
            )

    def test_tie_handling_matches_bruteforce(self, rng):
        for _ in range(50):
            pred = rng.integers(0, 6, 30).astype(float)
            gt = rng.integers(0, 6, 30).astype(float)
            if len(set(pred)) < 2 or len(set(gt)) < 2:
                continue
            assert srocc(pred, gt) == pytest.approx(
                srocc_average_rank(pred.tolist(), gt.tolist()), abs=1e-12
            )

    def test_monotone_transform_invariance(self, rng):
        pred = rng.normal(0, 1, 80)
        gt = rng.normal(0, 1, 80)
        base = srocc(pred, gt)
        assert abs(srocc(np.exp(pred), gt) - base) < 1e-12
        assert abs(srocc(2 * pred + 7, gt) - base) < 1e-12

    def test_symmetry(self, rng):
        pred, gt = rng.normal(0, 1, 40), rng.normal(0, 1, 40)
        assert srocc(pred, gt) == pytest.approx(srocc(gt, pred), abs=1e-15)

    def test_degenerate(self):
        with pytest.raises(DegenerateInput):
            srocc([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            srocc([1, 2], [1, 2, 3])
        with pytest.raises(LengthMismatch):
            srocc([1], [1])


class TestPlcc:
    def test_positive_affine(self):
        gt = np.array([0.5, 1.5, 2.0, 9.0])
        assert plcc(2 * gt + 3, gt) == pytest.approx(1.0)

    def test_negation(self):
        gt = np.array([0.5, 1.5, 2.0, 9.0])
        assert plcc(-gt, gt) == pytest.approx(-1.0)

    def test_matches_two_pass_oracle(self, rng):
        for _ in range(50):
            pred = rng.normal(0, 2, 64)
            gt = rng.normal(0, 2, 64)
            assert plcc(pred, gt) == pytest.approx(
                pearson_two_pass(pred.tolist(), gt.tolist()), abs=1e-12
            )

    def test_affine_equivariance(self, rng):
        pred, gt = rng.normal(0, 1, 60), rng.normal(0, 1, 60)
        base = plcc(pred, gt)
        assert plcc(3.5 * pred + 1, gt) == pytest.approx(base, abs=1e-12)
        assert plcc(-2 * pred + 5, gt) == pytest.approx(-base, abs=1e-12)

    def test_symmetry(self, rng):
        pred, gt = rng.normal(0, 1, 40), rng.normal(0, 1, 40)
        assert plcc(pred, gt) == pytest.approx(plcc(gt, pred), abs=1e-15)

    def test_degenerate(self):
        with pytest.raises(DegenerateInput):
            plcc([2.0, 2.0], [1.0, 3.0])


class TestRmse:
    def test_zero_at_identity(self, rng):
        x = rng.normal(0, 1, 10)
        assert rmse(x, x) == 0.0

    def test_direct_evaluation(self):
        # diffs [3, -4], K = 2 -> sqrt(25/2)
        assert rmse([3.0, 0.0], [0.0, 4.0]) == pytest.approx(math.sqrt(12.5), abs=1e-12)

    def test_matches_naive_oracle(self, rng):
        for _ in range(50):
            pred = rng.normal(0, 2, 33)
            gt = rng.normal(0, 2, 33)
            assert rmse(pred, gt) == pytest.approx(
                rmse_naive(pred.tolist(), gt.tolist()), abs=1e-12
            )


class TestLogisticFit:
    def test_affine_ground_truth_recovered(self, rng):
        pred = rng.uniform(-2, 2, 100)
        gt = 1.7 * pred - 0.3
        _, mapped = fit_logistic5(pred, gt)
        assert rmse(mapped, gt) < 1e-6

    def test_planted_logistic_recovered(self, rng):
        beta = np.array([2.0, 1.5, 0.0, 0.1, 1.0])
        pred = rng.uniform(-4, 4, 200)
        gt = logistic5(pred, beta)
        _, mapped = fit_logistic5(pred, gt)
        assert rmse(mapped, gt) < 1e-4

    def test_nested_model_never_hurts_plcc(self, rng):
        for trial in range(10):
            pred = np.sort(rng.uniform(-3, 3, 120))
            gt = np.tanh(pred) + rng.normal(0, 0.05, 120)
            _, mapped = fit_logistic5(pred, gt)
            assert plcc(mapped, gt) >= plcc(pred, gt) - 1e-9

    def test_mapped_sse_not_worse_than_linear(self, rng):
        for trial in range(20):
            pred = rng.normal(0, 1, 40)
            gt = rng.normal(0, 1, 40)
            _, mapped = fit_logistic5(pred, gt)
            slope, icept = np.polyfit(pred, gt, 1)
            lin_sse = float(np.sum((slope * pred + icept - gt) ** 2))
            assert float(np.sum((mapped - gt) ** 2)) <= lin_sse + 1e-9

    def test_parameters_finite(self, rng):
        pred = rng.uniform(0, 100, 50)
        gt = rng.uniform(0, 100, 50)
        params, _ = fit_logistic5(pred, gt)
        assert all(math.isfinite(v) for v in params.as_array())

    def test_constant_predictions_rejected(self):
        with pytest.raises(DegenerateInput):
            fit_logistic5([1.0] * 10, list(range(10)))


@pytest.fixture(scope="module")
def protocol_store():
    return make_planted_store(n_groups=20, n_archetypes=4, semantic_dim=320,
                              distortion_dim=512, seed=3)


class TestProtocol:
    @pytest.fixture
    def store(self, protocol_store):
        return protocol_store

    def test_planted_quality_recovered(self, store):
        report = run_protocol(
            store, RetrievalConfig(k_prime=4), Aggregation.WEIGHTED, base_seed=5
        )
        assert report.median_srocc >= 0.9
        assert len(report.repeats) == 15

    def test_deterministic(self, store):
        a = run_protocol(store, RetrievalConfig(k_prime=2), Aggregation.SIMPLE,
                         n_repeats=3, base_seed=9)
        b = run_protocol(store, RetrievalConfig(k_prime=2), Aggregation.SIMPLE,
                         n_repeats=3, base_seed=9)
        assert a == b

    def test_zero_noise_perfect_retrievability(self):
        store = make_planted_store(
            n_groups=20, n_archetypes=4, semantic_dim=320, distortion_dim=512,
            noise_frac=0.0, seed=1
        )
        # k'=1: the nearest group is always same-archetype, whose score table
        # is identical under zero noise, so every prediction is exact
        report = run_protocol(
            store, RetrievalConfig(k_prime=1), Aggregation.WEIGHTED,
            n_repeats=3, base_seed=2
        )
        assert report.median_srocc == pytest.approx(1.0, abs=1e-12)

    def test_seeds_are_base_plus_index(self, store):
        report = run_protocol(store, RetrievalConfig(k_prime=2), Aggregation.SIMPLE,
                              n_repeats=4, base_seed=100)
        assert [r.seed for r in report.repeats] == [100, 101, 102, 103]

    def test_median_is_exact(self, store):
        report = run_protocol(store, RetrievalConfig(k_prime=2), Aggregation.SIMPLE,
                              n_repeats=4, base_seed=0)
        values = sorted(r.srocc for r in report.repeats)
        assert report.median_srocc == pytest.approx(
            0.5 * (values[1] + values[2]), abs=1e-15
        )

    def test_all_degenerate_raises(self, rng):
        from conftest import manifest

        records = []
        for g in range(6):
            gid = f"g{g}"
            records.append(FeatureRecord(f"{gid}_p", gid, "pristine", rng.normal(0, 1, 4)))
            for j in range(3):
                records.append(
                    FeatureRecord(
                        f"{gid}_d{j}", gid, "distorted",
                        rng.normal(0, 1, 4), rng.normal(0, 1, 3), mos=5.0,
                    )
                )
        flat_mos = build_store(records, manifest())
        with pytest.raises(DegenerateInput):
            run_protocol(flat_mos, RetrievalConfig(k_prime=2), Aggregation.SIMPLE,
                         n_repeats=2, base_seed=0)

    def test_parallel_workers_identical(self, store, monkeypatch):
        base = run_protocol(store, RetrievalConfig(k_prime=3), Aggregation.WEIGHTED,
                            n_repeats=6, base_seed=4)
        monkeypatch.setenv("RFIQA_WORKERS", "8")
        parallel = run_protocol(store, RetrievalConfig(k_prime=3), Aggregation.WEIGHTED,
                                n_repeats=6, base_seed=4)
        assert base == parallel

    def test_fit_logistic_columns(self, store):
        report = run_protocol(store, RetrievalConfig(k_prime=3), Aggregation.WEIGHTED,
                              n_repeats=3, base_seed=1, fit_logistic=True)
        assert report.median_plcc_fitted is not None
        for rep in report.repeats:
            assert rep.plcc_fitted is not None
            assert rep.plcc_fitted >= rep.plcc - 1e-9

    def test_record_order_does_not_change_reports(self, rng):
        # tie-free random features: shuffling the store's record order must
        # leave the whole report unchanged
        store = make_planted_store(n_groups=12, n_archetypes=3, semantic_dim=320,
                                   distortion_dim=512, seed=21)
        perm = rng.permutation(len(store.records))
        shuffled = build_store([store.records[i] for i in perm], store.manifest)
        cfg = RetrievalConfig(k_prime=3)
        a = run_protocol(store, cfg, Aggregation.WEIGHTED, n_repeats=4, base_seed=6)
        b = run_protocol(shuffled, cfg, Aggregation.WEIGHTED, n_repeats=4, base_seed=6)
        assert a == b


class TestPoolSubsampling:
    def test_group_wise_no_partial_groups(self, rng):
        from rfiqa.evaluation import subsample_pool
        from rfiqa.store import split_dataset

        store = make_planted_store(n_groups=20, n_archetypes=4, semantic_dim=320, seed=2)
        train, _ = split_dataset(store, 0.8, 0)
        sub = subsample_pool(store, train, 0.5, seed=0)
        full_groups = {store.record(r).group_id for r in train}
        kept_groups = {store.record(r).group_id for r in sub}
        assert len(kept_groups) == 8  # round(0.5 * 16)
        for gid in kept_groups:
            members = [r for r in train if store.record(r).group_id == gid]
            assert set(members) <= set(sub)
        assert kept_groups <= full_groups

    def test_deterministic_and_distinct_from_split_stream(self):
        from rfiqa.evaluation import subsample_pool
        from rfiqa.store import split_dataset

        store = make_planted_store(n_groups=20, n_archetypes=4, semantic_dim=320, seed=2)
        train, _ = split_dataset(store, 0.8, 5)
        assert subsample_pool(store, train, 0.4, 5) == subsample_pool(store, train, 0.4, 5)
        assert subsample_pool(store, train, 0.4, 5) != subsample_pool(store, train, 0.4, 6)

    def test_smaller_pool_never_helps(self):
        store = make_planted_store(n_groups=30, n_archetypes=5, seed=13)
        cfg = RetrievalConfig(k_prime=4)
        full = run_protocol(store, cfg, Aggregation.WEIGHTED, n_repeats=5, base_seed=1)
        fifth = run_protocol(store, cfg, Aggregation.WEIGHTED, n_repeats=5, base_seed=1,
                             pool_fraction=0.2)
        assert fifth.median_srocc <= full.median_srocc + 0.005
        assert fifth.protocol["pool_fraction"] == 0.2
        assert fifth.protocol["pool_subsampling"] == "group-wise"


class TestPerDistortion:
    def test_subset_isolation(self):
        types = ["A", "A", "A", "B", "B", "B"]
        gts = [1.0, 2.0, 3.0, 1.0, 2.0, 3.0]
        preds = [1.0, 2.0, 3.0, 3.0, 2.0, 1.0]  # perfect on A, reversed on B
        out = per_type_srocc(types, preds, gts)
        assert out == {"A": pytest.approx(1.0), "B": pytest.approx(-1.0)}

    def test_singleton_type_absent(self):
        out = per_type_srocc(["A", "A", "B"], [1.0, 2.0, 9.0], [1.0, 2.0, 9.0])
        assert "B" not in out
        assert "A" in out

    def test_untagged_records_ignored(self):
        out = per_type_srocc([None, "A", "A"], [5.0, 1.0, 2.0], [5.0, 1.0, 2.0])
        assert set(out) == {"A"}

    def test_noisy_type_scores_lowest(self):
        rng = np.random.Generator(np.random.Philox(8))
        store = make_planted_store(n_groups=25, n_archetypes=5, seed=8)
        records = []
        for rec in store.records:
            if rec.distortion_type == "jpeg":
                rec = dataclasses.replace(rec, mos=rec.mos + float(rng.normal(0, 4.0)))
            records.append(rec)
        noisy = build_store(records, store.manifest)
        out = per_distortion_breakdown(
            noisy, RetrievalConfig(k_prime=4), Aggregation.WEIGHTED, seed=3
        )
        assert set(out) == {
            "gauss_blur", "white_noise", "jpeg", "contrast_shift", "color_quantize"
        }
        worst = min(out, key=out.get)
        assert worst == "jpeg"

    def test_full_breakdown_on_planted_store(self):
        store = make_planted_store(n_groups=20, n_archetypes=4, semantic_dim=320, seed=5)
        out = per_distortion_breakdown(
            store, RetrievalConfig(k_prime=4), Aggregation.WEIGHTED, seed=11
        )
        assert len(out) == 5
        assert all(v > 0.5 for v in out.values())
