"""fit/predict front end: parameter handling, fitted state, clones."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from noisescale import data, gns
from noisescale.estimators import GradientNoiseScale, MlpClassifier, TransformGrouper


def _blobs(n=512, dim=8, classes=2, seed=0):
    made = data.make_blobs_dataset(n, dim, classes, separation=3.0, seed=seed)
    return made.features, made.labels


class TestMlpClassifier:
    def test_params_round_trip_and_clone(self):
        clf = MlpClassifier(hidden_layer_sizes=(8,), learning_rate=0.25, max_steps=7)
        params = clf.get_params()
        assert params["hidden_layer_sizes"] == (8,)
        assert params["learning_rate"] == 0.25
        twin = clone(clf)
        assert twin.get_params() == params
        clf.set_params(max_steps=9)
        assert clf.get_params()["max_steps"] == 9

    def test_not_fitted_errors(self):
        clf = MlpClassifier()
        with pytest.raises(NotFittedError):
            clf.predict(np.zeros((2, 3)))
        with pytest.raises(NotFittedError):
            clf.predict_proba(np.zeros((2, 3)))

    def test_fit_predict_on_blobs(self):
        X, y = _blobs()
        clf = MlpClassifier(
            hidden_layer_sizes=(16,), optimizer="sgd", learning_rate=0.1, max_steps=400
        )
        assert clf.fit(X, y) is clf
        assert np.array_equal(clf.classes_, [0, 1])
        assert clf.n_steps_ == 400
        assert len(clf.loss_curve_) >= 1
        assert (clf.predict(X) == y).mean() > 0.95
        proba = clf.predict_proba(X)
        assert proba.shape == (X.shape[0], 2)
        np.testing.assert_allclose(proba.sum(axis=1), 1.0, rtol=1e-12)

    def test_fit_is_deterministic_in_random_state(self):
        X, y = _blobs(n=128)
        a = MlpClassifier(max_steps=40, random_state=5).fit(X, y)
        b = MlpClassifier(max_steps=40, random_state=5).fit(X, y)
        assert np.array_equal(a.theta_.values, b.theta_.values)

    def test_explicit_n_classes_widens_the_head(self):
        X, y = _blobs(n=64)
        clf = MlpClassifier(max_steps=5, n_classes=4).fit(X, y)
        assert clf.predict_proba(X).shape[1] == 4
        assert np.array_equal(clf.classes_, [0, 1, 2, 3])


class TestGradientNoiseScale:
    def test_fitted_attributes_and_recommendation(self):
        X, y = _blobs(n=1024, dim=16, classes=3)
        est = GradientNoiseScale(b_small=8, b_big=32, max_steps=300)
        assert est.fit(X, y) is est
        assert est.pair_ == gns.PairedBatchConfig(b_small=8, b_big=32)
        assert est.steps_used_ == 300
        assert np.isfinite(est.b_noise_hat_) and est.b_noise_hat_ > 0
        rec = est.recommendation_
        assert rec >= 1 and rec & (rec - 1) == 0  # a power of two
        assert rec <= est.get_params()["hardware_cap"]

    def test_b_small_defaults_to_quarter(self):
        X, y = _blobs(n=256)
        est = GradientNoiseScale(b_big=32, max_steps=60).fit(X, y)
        assert est.pair_.b_small == 8

    def test_tradeoff_and_eps_opt_need_fit(self):
        est = GradientNoiseScale()
        with pytest.raises(NotFittedError):
            est.tradeoff_curve([8, 16])
        with pytest.raises(NotFittedError):
            est.eps_opt(32)

    def test_tradeoff_curve_matches_functional_core(self):
        X, y = _blobs(n=512)
        est = GradientNoiseScale(b_small=8, b_big=32, max_steps=200, eps_max=0.5)
        est.fit(X, y)
        curve = est.tradeoff_curve((8, 32, 128))
        direct = gns.tradeoff_curve(est.b_noise_hat_, (8, 32, 128), eps_max=0.5)
        assert curve == direct
        assert est.eps_opt(32) == gns.eps_opt(0.5, est.b_noise_hat_, 32)

    def test_clone_forgets_fitted_state(self):
        X, y = _blobs(n=256)
        est = GradientNoiseScale(b_big=32, max_steps=60).fit(X, y)
        twin = clone(est)
        assert not hasattr(twin, "estimate_")
        assert twin.get_params() == est.get_params()


class TestTransformGrouper:
    @staticmethod
    def _images(n=60, side=6, seed=3):
        rng = np.random.Generator(np.random.PCG64(seed))
        return np.clip(rng.normal(0.45, 0.2, size=(n, side * side)), 0.0, 1.0)

    def test_fit_builds_groups_and_report(self):
        X = self._images()
        grouper = TransformGrouper(n_groups=4, embed_dim=8, embed_hidden=16)
        assert grouper.fit(X) is grouper
        assert len(grouper.tuples_) == len(grouper.distances_)
        assert 1 <= len(grouper.groups_) <= 4
        payload = grouper.report()
        assert payload["requested_groups"] == 4
        members = sorted(i for g in payload["groups"] for i in g["members"])
        assert members == list(range(len(grouper.tuples_)))

    def test_report_needs_fit(self):
        with pytest.raises(NotFittedError):
            TransformGrouper().report()

    def test_transform_selection_narrows_the_grid(self):
        X = self._images()
        grouper = TransformGrouper(
            transforms=("brightness",),
            magnitudes=(0.0, 0.5, 1.0),
            n_groups=2,
            embed_dim=8,
            embed_hidden=16,
        ).fit(X)
        assert len(grouper.tuples_) == 3
        assert all(t.transform == "brightness" for t in grouper.tuples_)

    def test_deterministic_in_random_state(self):
        X = self._images()
        a = TransformGrouper(embed_dim=8, embed_hidden=16, random_state=2).fit(X)
        b = TransformGrouper(embed_dim=8, embed_hidden=16, random_state=2).fit(X)
        assert np.array_equal(a.distances_, b.distances_)
        assert a.report() == b.report()
