import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sigimage.classify import (ClassifierError, EvalReport, class_centroids, featurize,
                               knn_predict, nearest_centroid)


class TestFeaturize:
    def test_black_and_white(self):
        assert not featurize(np.zeros((64, 64, 3), np.uint8)).any()
        np.testing.assert_allclose(featurize(np.full((50, 70, 3), 255, np.uint8), 8), 1.0)

    def test_single_red_pixel_upsampled(self):
        img = np.array([[[255, 0, 0]]], np.uint8)
        np.testing.assert_allclose(featurize(img, 2), [0.299] * 4)

    def test_exact_block_average(self):
        img = np.zeros((4, 4, 3), np.uint8)
        img[0, 0] = 255
        f = featurize(img, 2).reshape(2, 2)
        assert f[0, 0] == pytest.approx(0.25) and f[1, 1] == 0

    def test_fractional_overlap(self):
        # 3 -> 2 columns: output pixel 0 covers input 0 fully and half of input 1
        img = np.zeros((2, 3, 3), np.uint8)
        img[:, 1] = 255
        f = featurize(img, 2).reshape(2, 2)
        np.testing.assert_allclose(f, [[1 / 3, 1 / 3]] * 2)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 40), st.integers(2, 40), st.integers(2, 16), st.integers(0, 2**31))
    def test_range_and_mean(self, h, w, side, seed):
        img = np.random.default_rng(seed).integers(0, 256, (h, w, 3), dtype=np.uint8)
        f = featurize(img, side)
        assert f.shape == (side * side,) and f.min() >= 0 and f.max() <= 1
        gray = img.astype(float) @ [0.299, 0.587, 0.114] / 255
        # area weighting preserves the mean
        assert f.mean() == pytest.approx(gray.mean(), abs=1e-9)

    def test_side_too_small(self):
        with pytest.raises(ValueError):
            featurize(np.zeros((4, 4, 3), np.uint8), 1)


class TestKnn:
    X = np.array([[0.0, 0], [0, 1], [1, 0], [5, 5], [5, 6], [6, 5]])
    Y = np.array([0, 0, 0, 1, 1, 1])

    def test_identical_query(self):
        for x, y in zip(self.X, self.Y):
            assert knn_predict(self.X, self.Y, x, k=1) == y
            assert knn_predict(self.X, self.Y, x, k=3) == y

    @given(st.permutations(range(6)), st.sampled_from([1, 3, 5]))
    def test_order_invariant(self, perm, k):
        perm = list(perm)
        q = np.array([2.6, 2.4])
        assert knn_predict(self.X[perm], self.Y[perm], q, k) == knn_predict(self.X, self.Y, q, k)

    def test_equidistant_neighbours_ordered_by_label(self):
        x = np.array([[1.0], [-1.0]])
        assert knn_predict(x, [1, 0], [0.0], k=1) == 0
        assert knn_predict(x[::-1], [0, 1], [0.0], k=1) == 0

    def test_vote_tie_breaks_on_summed_distance(self):
        # k=3 with three labels, one vote each: the closest total wins
        x = np.array([[3.0], [1.0], [2.0]])
        assert knn_predict(x, [0, 1, 2], [0.0], k=3) == 1

    def test_vote_tie_breaks_on_label_last(self):
        x = np.array([[1.0], [-1.0], [2.0], [-2.0], [9.0]])
        # k=5: labels 0 and 1 each get two votes at total distance 3; label 2 gets one
        assert knn_predict(x, [1, 0, 1, 0, 2], [0.0], k=5) == 0
        assert knn_predict(x, [0, 1, 0, 1, 2], [0.0], k=5) == 0

    @pytest.mark.parametrize("k", [0, 2, -1, 7])
    def test_bad_k(self, k):
        with pytest.raises(ClassifierError):
            knn_predict(self.X, self.Y, [0, 0], k)

    def test_empty(self):
        with pytest.raises(ClassifierError):
            knn_predict(np.zeros((0, 2)), [], [0, 0], 1)


class TestCentroid:
    def test_centroids_are_means(self):
        x = np.array([[0.0, 0], [2, 0], [10, 10], [12, 14]])
        np.testing.assert_allclose(class_centroids(x, [0, 0, 1, 1], 2), [[1, 0], [11, 12]])

    def test_prediction(self):
        x = np.array([[0.0], [2], [10], [12]])
        assert nearest_centroid(x, [0, 0, 1, 1], [4.0]) == 0
        assert nearest_centroid(x, [0, 0, 1, 1], [7.0]) == 1

    def test_midpoint_goes_to_lower_label(self):
        x = np.array([[0.0], [2], [10], [12]])
        assert nearest_centroid(x, [1, 1, 0, 0], [6.0]) == 0
        assert nearest_centroid(x, [0, 0, 1, 1], [6.0]) == 0

    def test_missing_class(self):
        with pytest.raises(ClassifierError, match=r"\[1\]"):
            nearest_centroid(np.zeros((2, 1)), [0, 2], [0.0], n_classes=3)


class TestReport:
    def test_arithmetic(self):
        r = EvalReport.from_predictions(["a", "b", "c"], [0, 0, 1, 1, 2, 2], [0, 1, 1, 1, 0, 2], 10)
        assert r.confusion.tolist() == [[1, 1, 0], [0, 2, 0], [1, 0, 1]]
        assert r.accuracy == pytest.approx(4 / 6)
        assert r.per_class_accuracy == {"a": 0.5, "b": 1.0, "c": 0.5}
        assert r.n_test == 6 and r.n_train == 10

    def test_absent_class(self):
        r = EvalReport.from_predictions(["a", "b"], [0, 0], [0, 1], 4)
        assert r.per_class_accuracy["b"] is None
        assert "n/a" in r.table()

    @given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=60))
    def test_confusion_sums(self, pairs):
        yt, yp = zip(*pairs)
        r = EvalReport.from_predictions(list("wxyz"), yt, yp, 1)
        assert r.confusion.sum() == len(pairs)
        assert r.confusion.sum(axis=1).tolist() == np.bincount(yt, minlength=4).tolist()
        assert r.accuracy == pytest.approx(np.mean(np.array(yt) == np.array(yp)))

    def test_serialization(self):
        r = EvalReport.from_predictions(["a", "b"], [0, 1, 1], [0, 1, 0], 7)
        d = json.loads(r.to_json())
        assert set(d) == {"accuracy", "per_class_accuracy", "confusion_matrix", "label_names",
                          "n_train", "n_test"}
        assert d["confusion_matrix"] == [[1, 0], [1, 1]]
        assert r.confusion_csv() == "true\\pred,a,b\na,1,0\nb,1,1\n"
        assert r.table().startswith("accuracy: 66.67%")
