import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qfs.analytics import (
    bhattacharyya,
    class_distributions,
    correlation_matrix,
    fit_j_distribution,
    heatmap,
)
from qfs.archive import FeatureRecord
from qfs.qubo import ImportanceVector
from qfs.selection import SelectionResult


def sel(class_label, indices, image_id="x"):
    return SelectionResult(
        image_id=image_id,
        class_label=class_label,
        bitstring="",
        selected_fm_indices=indices,
        energy=0.0,
        method="exact",
    )


class TestClassDistributions:
    def test_single_image(self):
        dists = class_distributions([sel(0, [0, 1])], 1, 4)
        assert dists[0].p == pytest.approx([0.5, 0.5, 0, 0])

    def test_two_images(self):
        dists = class_distributions([sel(0, [0]), sel(0, [1])], 1, 4)
        assert dists[0].p == pytest.approx([0.5, 0.5, 0, 0])

    def test_empty_class_flagged(self):
        dists = class_distributions([sel(0, [2])], 2, 4)
        assert not dists[0].empty
        assert dists[1].empty

    def test_out_of_range_index(self):
        with pytest.raises(ValueError):
            class_distributions([sel(0, [7])], 1, 4)


class TestBhattacharyya:
    def test_identical(self):
        p = np.array([0.2, 0.3, 0.5])
        assert bhattacharyya(p, p) == pytest.approx(1.0)

    def test_disjoint(self):
        assert bhattacharyya(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_half_overlap(self):
        p = np.array([0.5, 0.5, 0.0])
        q = np.array([0.0, 0.5, 0.5])
        assert bhattacharyya(p, q) == pytest.approx(0.5)

    @settings(max_examples=200, deadline=None)
    @given(
        arrays(np.float64, 6, elements=st.floats(0.001, 1.0)),
        arrays(np.float64, 6, elements=st.floats(0.001, 1.0)),
    )
    def test_properties(self, p, q):
        p = p / p.sum()
        q = q / q.sum()
        bc = bhattacharyya(p, q)
        assert 0.0 <= bc <= 1.0
        assert bc == pytest.approx(bhattacharyya(q, p))
        if np.allclose(p, q):
            assert bc == pytest.approx(1.0)
        else:
            assert bc < 1.0 + 1e-12


class TestCorrelationMatrix:
    def test_identical_distributions(self):
        sels = [sel(c, [0, 1]) for c in range(3)]
        corr = correlation_matrix(class_distributions(sels, 3, 4))
        assert corr.bc == pytest.approx(np.ones((3, 3)))

    def test_disjoint_signatures(self):
        sels = [sel(0, [0, 1]), sel(1, [2, 3])]
        corr = correlation_matrix(class_distributions(sels, 2, 4))
        assert corr.displayed() == pytest.approx(np.eye(2))

    def test_threshold_stored_vs_displayed(self):
        # raw values below 0.10 are kept but rendered as 0
        from qfs.analytics import ClassDistribution

        p = np.zeros(200)
        p[0] = 0.0049
        p[1:100] = (1 - 0.0049) / 99
        q = np.zeros(200)
        q[0] = 0.0049
        q[100:199] = (1 - 0.0049) / 99
        corr = correlation_matrix(
            [ClassDistribution(0, p, 1), ClassDistribution(1, q, 1)]
        )
        assert corr.bc[0, 1] == pytest.approx(0.0049, abs=1e-3)
        assert corr.displayed()[0, 1] == 0.0

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(0)
        sels = []
        for c in range(4):
            for _ in range(5):
                sels.append(sel(c, list(rng.choice(8, size=3, replace=False))))
        corr = correlation_matrix(class_distributions(sels, 4, 8))
        relabel = np.array([2, 0, 3, 1])  # old class c becomes relabel[c]
        permuted_sels = [sel(int(relabel[s.class_label]), s.selected_fm_indices) for s in sels]
        corr_p = correlation_matrix(class_distributions(permuted_sels, 4, 8))
        for i in range(4):
            for j in range(4):
                assert corr_p.bc[relabel[i], relabel[j]] == pytest.approx(corr.bc[i, j])


class TestJDistribution:
    def test_gaussian_recovery(self):
        rng = np.random.default_rng(1)
        samples = rng.normal(0.4, 0.1, size=100_000)
        mu, sigma, _ = fit_j_distribution(samples)
        assert mu == pytest.approx(0.4, rel=0.01)
        assert sigma == pytest.approx(0.1, rel=0.01)

    def test_constant_samples(self):
        mu, sigma, (edges, counts) = fit_j_distribution(np.full(100, 0.3))
        assert sigma == 0.0
        assert counts.sum() == 100

    def test_insufficient(self):
        with pytest.raises(ValueError):
            fit_j_distribution(np.ones(10))


def make_record(acts):
    acts = np.asarray(acts, dtype=np.float32)
    return FeatureRecord("img", 0, 1.0, acts, np.ones_like(acts))


def make_importance(alpha):
    alpha = np.asarray(alpha, dtype=float)
    keep = np.flatnonzero(alpha > 0)
    af = alpha[keep]
    return ImportanceVector(alpha=alpha, filtered_indices=keep, alpha_filtered=af, h=af / af.max())


class TestHeatmap:
    def test_single_map(self):
        rec = make_record([[[1.0, 2.0], [3.0, 4.0]]])
        emap = heatmap(rec, make_importance([1.0]), sel(0, [0], "img"))
        assert emap.heat == pytest.approx(rec.activations[0] / 4.0)
        assert not emap.all_zero

    def test_empty_selection(self):
        rec = make_record([[[1.0, 2.0], [3.0, 4.0]]])
        emap = heatmap(rec, make_importance([1.0]), sel(0, [], "img"))
        assert emap.all_zero
        assert emap.heat == pytest.approx(np.zeros((2, 2)))

    def test_weighted_sum(self):
        rec = make_record([[[1.0, 0.0]], [[0.0, 1.0]]])
        emap = heatmap(rec, make_importance([1.0, 1.0]), sel(0, [0, 1], "img"))
        assert emap.heat == pytest.approx(np.array([[1.0, 1.0]]))

    def test_alpha_scaling_invariance(self):
        rng = np.random.default_rng(2)
        acts = np.abs(rng.normal(size=(3, 4, 4)))
        rec = make_record(acts)
        alpha = np.array([0.5, 1.5, 0.2])
        a = heatmap(rec, make_importance(alpha), sel(0, [0, 1, 2], "img"))
        b = heatmap(rec, make_importance(alpha * 9.0), sel(0, [0, 1, 2], "img"))
        assert a.heat == pytest.approx(b.heat)

    def test_upsample(self):
        rec = make_record([[[0.0, 1.0], [1.0, 0.0]]])
        emap = heatmap(rec, make_importance([1.0]), sel(0, [0], "img"), upsample_to=(4, 4))
        assert emap.upsampled.shape == (4, 4)
        assert np.all((emap.upsampled >= 0) & (emap.upsampled <= 1))
        assert emap.upsampled[0, 3] == pytest.approx(1.0)
