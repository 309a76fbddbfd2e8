import numpy as np
import pytest

from skewbm import montecarlo as mc
from skewbm.errors import DomainError
from skewbm.first_passage import cdf_function
from skewbm.kernels import bm_fpt_cdf


class ConstantRng:
    def __init__(self, value):
        self.value = value

    def random(self, size=None):
        return np.full(size, self.value)


def toy_path():
    pos = np.array([0.0, 0.5, 1.2, 0.3, -0.4, -0.9, -0.2, 0.6, 0.1])
    return mc.PathSample(np.arange(len(pos)) * 0.1, pos)


def test_path_streams_are_reproducible_and_distinct():
    a = mc.path_rng(7, 3).random(5)
    assert np.array_equal(a, mc.path_rng(7, 3).random(5))
    assert not np.array_equal(a, mc.path_rng(7, 4).random(5))
    assert not np.array_equal(a, mc.path_rng(7, 3, stream=1).random(5))
    assert not np.array_equal(a, mc.path_rng(8, 3).random(5))


def test_default_workers_env(monkeypatch):
    monkeypatch.delenv("SKEWBM_THREADS", raising=False)
    assert mc.default_workers() == 1
    monkeypatch.setenv("SKEWBM_THREADS", "3")
    assert mc.default_workers() == 3


def test_config_validation():
    with pytest.raises(DomainError):
        mc.McConfig("euler", 0.01, 1.0, 10)
    with pytest.raises(DomainError):
        mc.McConfig("skew-walk", 0.0, 1.0, 10)
    with pytest.raises(DomainError):
        mc.McConfig("skew-walk", 0.01, 1.0, 0)


def test_bm_path_grid():
    path = mc.sample_bm_path(0.01, 1.0, mc.path_rng(1, 0), start=0.5)
    assert len(path.times) == 101
    assert path.positions[0] == 0.5
    assert path.times[-1] == pytest.approx(1.0)


def test_decomposition_of_toy_path():
    dec = mc.decompose_excursions(toy_path())
    assert dec.intervals == [(0, 4), (4, 7), (7, 9)]
    assert dec.signs.tolist() == [1, -1, 1]
    assert dec.heights.tolist() == [1.2, 0.0, 0.6]


def test_flip_with_stub_generator():
    path = toy_path()
    up = mc.flip_excursions(path, 0.3, ConstantRng(0.0))
    assert np.array_equal(up.positions, np.abs(path.positions))
    down = mc.flip_excursions(path, 0.3, ConstantRng(0.99))
    assert np.array_equal(down.positions, -np.abs(path.positions))


def test_coupled_flip_nesting():
    path = mc.sample_bm_path(1e-3, 1.0, mc.path_rng(2, 0))
    pa, pb = mc.coupled_flip(path, 0.3, 0.6, mc.path_rng(2, 0, 1))
    assert np.array_equal(np.abs(pa.positions), np.abs(pb.positions))
    assert not np.any((pa.positions > 0) & (pb.positions <= 0))
    with pytest.raises(DomainError):
        mc.coupled_flip(path, 0.6, 0.3, mc.path_rng(2, 0, 1))


def test_ranked_heights_toy():
    assert mc.ranked_heights(toy_path(), 0.8, 4).tolist() == [1.2, 0.6, 0.0, 0.0]
    # restricted to [0, 0.5] the last positive run is cut off
    assert mc.ranked_heights(toy_path(), 0.5, 2).tolist() == [1.2, 0.0]
    with pytest.raises(DomainError):
        mc.ranked_heights(toy_path(), 5.0, 2)


def test_ranked_heights_sample_shape_and_order():
    h = mc.ranked_heights_sample(0.3, 1.0, 1e-3, 50, j_max=3, seed=5)
    assert h.shape == (50, 3)
    assert np.all(np.diff(h, axis=1) <= 0)
    assert np.array_equal(h, mc.ranked_heights_sample(0.3, 1.0, 1e-3, 50, j_max=3, seed=5))


def test_skew_walk_stays_on_lattice():
    path = mc.sample_skew_walk(0.3, 0.0, 0.1, 2.0, mc.path_rng(3, 0))
    k = path.positions / 0.1
    assert np.allclose(k, np.round(k))
    assert np.allclose(np.abs(np.diff(path.positions)), 0.1)
    with pytest.raises(DomainError):
        mc.sample_skew_walk(0.3, 0.05, 0.1, 1.0, mc.path_rng(3, 0))


def test_first_passage_sample_is_deterministic_across_workers():
    cfg1 = mc.McConfig("skew-walk", 0.05, 10.0, 400, seed=11, workers=1)
    cfg3 = mc.McConfig("skew-walk", 0.05, 10.0, 400, seed=11, workers=3)
    a = mc.first_passage_sample(cfg1, 0.3, 0.0, 1.0)
    b = mc.first_passage_sample(cfg3, 0.3, 0.0, 1.0)
    assert np.array_equal(a.samples, b.samples)
    assert a.n_censored == b.n_censored
    c = mc.first_passage_sample(mc.McConfig("skew-walk", 0.05, 10.0, 400, seed=12), 0.3, 0.0, 1.0)
    assert not np.array_equal(a.samples, c.samples)


def test_brownian_walk_matches_reflection_law():
    cfg = mc.McConfig("skew-walk", 0.05, 20.0, 4000, seed=3)
    emp = mc.first_passage_sample(cfg, 0.5, 0.0, 1.0)
    d = mc.ks_distance(emp, lambda t: bm_fpt_cdf(0.0, 1.0, np.asarray(t)))
    assert d <= mc.ks_critical(len(emp.samples)) + 0.01


def test_flip_sampler_matches_analytic_cdf():
    cfg = mc.McConfig("excursion-flip", 1e-3, 20.0, 3000, seed=4)
    emp = mc.first_passage_sample(cfg, 0.3, -0.5, 1.0)
    d = mc.ks_distance(emp, cdf_function(0.3, -0.5, 1.0, 20.0))
    assert d <= mc.ks_critical(len(emp.samples)) + 0.02


def test_flip_discretisation_consistency():
    coarse = mc.first_passage_sample(mc.McConfig("excursion-flip", 0.04, 20.0, 3000, seed=6), 0.3, 0.0, 1.0)
    fine = mc.first_passage_sample(mc.McConfig("excursion-flip", 0.01, 20.0, 3000, seed=6), 0.3, 0.0, 1.0)
    assert mc.ks_two_sample(coarse, fine) <= mc.ks_critical(len(coarse.samples), len(fine.samples)) + 0.03


def test_ks_distance_exact_quantiles():
    n = 1000
    samples = mc.EmpiricalDistribution((np.arange(n) + 0.5) / n)
    assert mc.ks_distance(samples, lambda t: np.clip(t, 0, 1)) == pytest.approx(0.5 / n)


def test_ks_distance_conditions_on_horizon():
    # uniform on [0, 2] observed up to 1: conditional law is uniform on [0, 1]
    n = 1000
    samples = mc.EmpiricalDistribution((np.arange(n) + 0.5) / n, n_censored=n, horizon=1.0)
    assert mc.ks_distance(samples, lambda t: np.clip(np.asarray(t) / 2, 0, 1)) == pytest.approx(0.5 / n)
    with pytest.raises(DomainError):
        mc.ks_distance(mc.EmpiricalDistribution([0.1], n_censored=1), lambda t: t)


def test_ks_critical_value():
    assert mc.ks_critical(100) == pytest.approx(1.6276 / 10, abs=1e-4)
    assert mc.ks_critical(100, 100) == pytest.approx(1.6276 / np.sqrt(50), abs=1e-4)
