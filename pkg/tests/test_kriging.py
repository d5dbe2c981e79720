import math

import numpy as np
import pytest

from dbpsense.errors import SingularSystemError
from dbpsense.kriging import Variogram, default_variogram, krige, kriging_weights
from oracles import kriging_dense

V_UNIT = Variogram(nugget=0.0, sill=1.0, range=1.0)


def test_exact_at_sample_location():
    samples = [((0.0, 0.0), 3.5), ((1.0, 0.0), -1.0), ((0.0, 1.0), 7.25)]
    for coord, value in samples:
        (est,) = krige(samples, [coord], V_UNIT)
        assert est.value == pytest.approx(value, abs=1e-10)


def test_two_equidistant_samples_average():
    samples = [((0.0, 0.0), 10.0), ((2.0, 0.0), 20.0)]
    (est,) = krige(samples, [(1.0, 0.0)], V_UNIT)
    assert est.weights == pytest.approx((0.5, 0.5), abs=1e-12)
    assert est.value == pytest.approx(15.0, abs=1e-10)


def test_unit_square_center_matches_dense_solve():
    coords = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    values = [1.0, 2.0, 4.0, 8.0]
    (est,) = krige(list(zip(coords, values)), [(0.5, 0.5)], V_UNIT)
    ref_value, ref_w = kriging_dense(coords, values, (0.5, 0.5), V_UNIT.gamma)
    assert est.value == pytest.approx(ref_value, abs=1e-10)
    assert est.weights == pytest.approx(tuple(ref_w), abs=1e-10)


def test_weights_sum_to_one_randomized():
    rng = np.random.default_rng(7)
    for _ in range(25):
        k = int(rng.integers(2, 9))
        coords = [tuple(rng.uniform(0, 10, 2)) for _ in range(k)]
        if len(set(coords)) < k:
            continue
        targets = [tuple(rng.uniform(0, 10, 2)) for _ in range(4)]
        v = Variogram(nugget=float(rng.uniform(0, 0.3)), sill=1.0,
                      range=float(rng.uniform(0.5, 20)))
        W, _ = kriging_weights(coords, targets, v)
        assert np.max(np.abs(W.sum(axis=1) - 1.0)) <= 1e-12


def test_duplicate_sample_coordinates_rejected():
    samples = [((0.0, 0.0), 1.0), ((0.0, 0.0), 2.0), ((1.0, 1.0), 3.0)]
    with pytest.raises(SingularSystemError) as ei:
        krige(samples, [(0.5, 0.5)], V_UNIT)
    assert "(0.0, 0.0)" in str(ei.value)


def test_fewer_than_two_samples_rejected():
    with pytest.raises(SingularSystemError):
        krige([((0.0, 0.0), 1.0)], [(1.0, 1.0)], V_UNIT)


def test_negative_weights_flagged_not_clamped():
    # screening configuration: one sample sits in another's shadow
    coords = [(1.652, 3.272), (2.506, 3.836), (1.478, 2.21), (2.376, 3.393)]
    values = [4.0, 7.0, 1.0, 9.0]
    target = (0.582, 1.626)
    v = Variogram(nugget=0.0, sill=1.0, range=7.3)
    (est,) = krige(list(zip(coords, values)), [target], v)
    assert est.flagged
    assert min(est.weights) < -1e-3
    ref_value, ref_w = kriging_dense(coords, values, target, v.gamma)
    assert est.value == pytest.approx(ref_value, abs=1e-10)
    assert min(ref_w) < -1e-3  # the oracle agrees the geometry screens


def test_convex_configuration_not_flagged():
    coords = [(0.0, 0.0), (4.0, 0.0), (0.0, 4.0), (4.0, 4.0)]
    values = [1.0, 2.0, 3.0, 4.0]
    (est,) = krige(list(zip(coords, values)), [(2.0, 2.0)], V_UNIT)
    assert not est.flagged
    assert min(values) <= est.value <= max(values)


def test_estimate_matches_dense_solve_many_targets():
    rng = np.random.default_rng(3)
    coords = [tuple(rng.uniform(0, 5, 2)) for _ in range(6)]
    values = list(rng.uniform(-3, 9, 6))
    targets = [tuple(rng.uniform(0, 5, 2)) for _ in range(10)]
    v = Variogram(nugget=0.1, sill=2.0, range=4.0)
    got = krige(list(zip(coords, values)), targets, v)
    for t, est in zip(targets, got):
        ref_value, _ = kriging_dense(coords, values, t, v.gamma)
        assert est.value == pytest.approx(ref_value, abs=1e-10)


def test_gamma_zero_at_origin_despite_nugget():
    v = Variogram(nugget=0.3, sill=1.0, range=2.0)
    assert float(v.gamma(0.0)) == 0.0
    assert float(v.gamma(1e-9)) > 0.29  # nugget applies to any positive lag


def test_gamma_approaches_sill_at_effective_range():
    v = Variogram(nugget=0.0, sill=2.0, range=5.0)
    assert float(v.gamma(5.0)) == pytest.approx(2.0 * (1 - math.exp(-3)), rel=1e-12)


def test_default_variogram_from_data():
    coords = [(0.0, 0.0), (3.0, 4.0)]
    values = np.array([1.0, 5.0])
    v = default_variogram(values, coords)
    assert v.sill == pytest.approx(np.var(values))
    assert v.range == pytest.approx(5.0 / 3.0)
    assert v.nugget == 0.0


def test_invalid_variogram_rejected():
    with pytest.raises(ValueError):
        Variogram(nugget=0.5, sill=0.4, range=1.0)
    with pytest.raises(ValueError):
        Variogram(nugget=0.0, sill=1.0, range=0.0)
    with pytest.raises(ValueError):
        Variogram(model="gaussian")
