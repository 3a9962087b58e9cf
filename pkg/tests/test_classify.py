import numpy as np
import pytest

from specgp.classify import (
    centroids_from_projections, confidence_scores, confusion, fit_logistic, ncc_fit,
    ncc_predict, predict_projections,
)
from specgp.engine import DatasetError, PixelDataset
from specgp.expr import Band, Binary, Const, random_tree
from specgp.indices import LANDSAT
from specgp.synthetic import planted_ratio_pixels


def one_band(values, labels):
    X = np.zeros((len(values), LANDSAT.arity))
    X[:, 0] = values
    return PixelDataset(X, labels, LANDSAT)


class TestNCC:
    def test_fit(self):
        c = ncc_fit(one_band([1, 3, 9, 11], [0, 0, 1, 1]), Band(0))
        assert c.values == (2.0, 10.0)
        assert ncc_fit(one_band([4, 7], [0, 1]), Band(0)).values == (4.0, 7.0)
        assert ncc_fit(one_band([5, 5, 1], [0, 0, 1]), Band(0))[0] == 5.0

    def test_single_class(self):
        with pytest.raises(DatasetError):
            ncc_fit(one_band([1, 2], [0, 0]), Band(0))

    def test_predict_and_tie(self):
        c = centroids_from_projections([1, 3, 9, 11], [0, 0, 1, 1])
        assert predict_projections(c, [3, 6, 6.0001, 100]).tolist() == [0, 0, 1, 1]
        X = np.zeros((2, 6))
        X[:, 0] = [3, 6]
        assert ncc_predict(c, Band(0), X).tolist() == [0, 0]

    @pytest.mark.parametrize("sign", [1, -1])
    def test_affine_invariance(self, rng, sign):
        for _ in range(30):
            d = planted_ratio_pixels(rng, 50)
            t = random_tree(rng, LANDSAT, 4, "grow")
            a = sign * float(rng.uniform(0.5, 5))
            b = float(rng.uniform(-10, 10))
            t2 = Binary("add", Binary("mul", Const(abs(a)), t), Const(b))
            if sign < 0:
                t2 = Binary("sub", Const(b), Binary("mul", Const(abs(a)), t))
            p1 = ncc_predict(ncc_fit(d, t), t, d.X)
            p2 = ncc_predict(ncc_fit(d, t2), t2, d.X)
            proj = ncc_fit(d, t)
            # skip cases where a projection sits on the decision midpoint
            from specgp.expr import evaluate_batch
            v = evaluate_batch(t, d.X)
            mid = (proj[0] + proj[1]) / 2
            if np.any(np.abs(v - mid) < 1e-9 * (1 + abs(mid))):
                continue
            np.testing.assert_array_equal(p1, p2)


class TestLogistic:
    def test_symmetric(self):
        r = confidence_scores([-1, -1, 1, 1, -0.5, 0.5], [0, 0, 1, 1, 1, 0], [0.0])
        assert r.probabilities[0] == pytest.approx(0.5, abs=1e-9)
        assert r.confidence[0] == pytest.approx(0.5, abs=1e-9)

    def test_separable_saturates(self):
        r = confidence_scores([-2, -1, 1, 2], [0, 0, 1, 1], [50.0, -50.0])
        assert r.separated
        assert r.probabilities[0] > 0.99 and r.probabilities[1] < 0.01
        assert np.all((r.probabilities > 0) & (r.probabilities < 1))
        assert abs(r.model.slope) <= 30 and abs(r.model.intercept) <= 30

    def test_slope_sign(self, rng):
        for _ in range(50):
            mu0, mu1 = rng.normal(0, 3, size=2)
            x = np.r_[rng.normal(mu0, 1, 40), rng.normal(mu1, 1, 40)]
            y = np.repeat([0, 1], 40)
            m = fit_logistic(x, y)
            assert np.sign(m.slope) == np.sign(x[y == 1].mean() - x[y == 0].mean())

    def test_class_swap(self, rng):
        x = np.r_[rng.normal(0, 1, 60), rng.normal(1, 1, 60)]
        y = np.repeat([0, 1], 60)
        m1, m2 = fit_logistic(x, y), fit_logistic(x, 1 - y)
        assert m1.converged
        assert m2.slope == pytest.approx(-m1.slope, abs=1e-6)
        grid = np.linspace(-3, 4, 20)
        np.testing.assert_allclose(m2.predict_proba(grid), 1 - m1.predict_proba(grid), atol=1e-6)

    def test_matches_unpenalized_mle(self, rng):
        # Independent check: gradient of the log-likelihood vanishes at the fit.
        x = rng.normal(0, 2, 200) + 100.0
        y = (rng.random(200) < 1 / (1 + np.exp(-(x - 100)))).astype(int)
        m = fit_logistic(x, y)
        p = m.predict_proba(x)
        assert abs(np.sum(y - p)) < 1e-6
        assert abs(np.sum((y - p) * x)) < 1e-4

    def test_raw_coefficients(self, rng):
        x = rng.normal(5, 3, 100)
        y = (x + rng.normal(0, 2, 100) > 5).astype(int)
        m = fit_logistic(x, y)
        from scipy.special import expit
        np.testing.assert_allclose(expit(m.raw_intercept + m.raw_slope * x),
                                   m.predict_proba(x), atol=1e-12)

    def test_needs_both_classes(self):
        with pytest.raises(DatasetError):
            fit_logistic([1, 2, 3], [1, 1, 1])


class TestConfusion:
    def test_perfect(self):
        s = confusion([0, 1, 1, 0], [0, 1, 1, 0])
        assert s.producer == (1.0, 1.0) and s.user == (1.0, 1.0) and s.normalized == 1.0

    def test_hand_table(self):
        s = confusion([0, 1, 1, 1], [0, 0, 1, 1])
        assert s.counts.tolist() == [[1, 1], [0, 2]]
        assert s.producer == (0.5, 1.0)
        assert s.user[0] == 1.0 and s.user[1] == pytest.approx(2 / 3)
        assert s.normalized == 0.75

    def test_all_one_class(self):
        s = confusion([1, 1, 1, 1], [0, 0, 1, 1])
        assert s.normalized == 0.5
        assert np.isnan(s.user[0])

    def test_absent_truth_class(self):
        s = confusion([0, 1, 1], [1, 1, 1])
        assert np.isnan(s.producer[0])
        assert s.normalized == pytest.approx(2 / 3)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            confusion([0, 1], [0])

    def test_random_tables(self, rng):
        for _ in range(200):
            n = int(rng.integers(4, 50))
            t = np.r_[0, 1, rng.integers(0, 2, n - 2)]
            p = rng.integers(0, 2, n)
            s = confusion(p, t)
            assert s.total == n
            assert s.normalized == pytest.approx(np.mean(s.producer))
            for c in (0, 1):
                assert s.producer[c] == pytest.approx(np.mean(p[t == c] == c))
