import math

import numpy as np
import pytest

from mwrelay.channel import (
    DownlinkSpec,
    UplinkSpec,
    entropy,
    identity_downlink,
    mutual_info,
    sample_downlink,
    sample_uplink_noise,
    uplink_bound,
)
from mwrelay.gf import Field
from mwrelay.rng import stream


def h2(q: float) -> float:
    return -q * math.log2(q) - (1 - q) * math.log2(1 - q)


def test_entropy_examples():
    assert entropy(np.array([0.5, 0.5, 0.0, 0.0])) == 1.0
    assert entropy(np.array([1.0, 0.0, 0.0])) == 0.0
    assert entropy(np.full(4, 0.25)) == 2.0


def test_entropy_rejects_bad_pmf():
    with pytest.raises(ValueError):
        entropy(np.array([0.6, 0.6]))
    with pytest.raises(ValueError):
        entropy(np.array([-0.1, 1.1]))


def test_entropy_bounds_and_uniform_max():
    rng = stream(5, "ent")
    for _ in range(50):
        n = int(rng.integers(2, 9))
        p = rng.random(n)
        p /= p.sum()
        h = entropy(p)
        assert -1e-12 <= h <= math.log2(n) + 1e-12
    assert entropy(np.full(8, 1 / 8)) == pytest.approx(3.0, abs=1e-12)


def test_uplink_bound_examples():
    f4 = Field(4)
    up = UplinkSpec(f4, np.array([0.5, 0.5, 0.0, 0.0]))
    assert uplink_bound(up) == 1.0
    f2 = Field(2)
    assert uplink_bound(UplinkSpec(f2, np.array([1.0, 0.0]))) == 1.0
    assert uplink_bound(UplinkSpec(f2, np.array([0.5, 0.5]))) == 0.0


def test_uplink_bound_cap():
    rng = stream(5, "bound")
    for order in (2, 4, 8):
        f = Field(order)
        for _ in range(20):
            p = rng.random(order)
            p /= p.sum()
            b = uplink_bound(UplinkSpec(f, p))
            # random noise is non-degenerate, so the cap is strict
            assert b < math.log2(order)
        point = np.zeros(order)
        point[1] = 1.0
        assert uplink_bound(UplinkSpec(f, point)) == math.log2(order)


def test_mutual_info_examples():
    ident = np.eye(2)
    assert mutual_info(np.array([0.5, 0.5]), ident) == pytest.approx(1.0, abs=1e-12)
    for q in (0.1, 0.25):
        bsc = np.array([[1 - q, q], [q, 1 - q]])
        assert mutual_info(np.array([0.5, 0.5]), bsc) == pytest.approx(1 - h2(q), abs=1e-9)
    point = np.array([1.0, 0.0])
    assert mutual_info(point, np.array([[0.3, 0.7], [0.6, 0.4]])) == pytest.approx(0.0, abs=1e-12)


def test_mutual_info_nonneg_and_product_channel():
    rng = stream(5, "mi")
    for _ in range(30):
        nx, ny = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        w = rng.random((nx, ny))
        w /= w.sum(axis=1, keepdims=True)
        d = rng.random(nx)
        d /= d.sum()
        assert mutual_info(d, w) >= -1e-12
    same_rows = np.tile(np.array([0.2, 0.3, 0.5]), (3, 1))
    d = np.array([0.1, 0.4, 0.5])
    assert mutual_info(d, same_rows) == pytest.approx(0.0, abs=1e-12)


def test_mutual_info_concavity_in_input():
    rng = stream(5, "concave")
    for _ in range(30):
        nx, ny = int(rng.integers(2, 5)), int(rng.integers(2, 6))
        w = rng.random((nx, ny))
        w /= w.sum(axis=1, keepdims=True)
        d1 = rng.random(nx)
        d1 /= d1.sum()
        d2 = rng.random(nx)
        d2 /= d2.sum()
        mid = mutual_info((d1 + d2) / 2, w)
        assert mid >= (mutual_info(d1, w) + mutual_info(d2, w)) / 2 - 1e-9


def test_mutual_info_dimension_mismatch():
    with pytest.raises(ValueError):
        mutual_info(np.array([0.5, 0.5]), np.eye(3))


def test_sampling_deterministic_and_degenerate():
    f4 = Field(4)
    up = UplinkSpec(f4, np.array([1.0, 0.0, 0.0, 0.0]))
    assert np.array_equal(sample_uplink_noise(up, 100, stream(1, "n")), np.zeros(100))

    up = UplinkSpec(f4, np.array([0.5, 0.5, 0.0, 0.0]))
    a = sample_uplink_noise(up, 64, stream(1, "n"))
    b = sample_uplink_noise(up, 64, stream(1, "n"))
    assert np.array_equal(a, b)

    down = identity_downlink(2, 2)
    x0 = stream(1, "x").integers(0, 2, size=50)
    y = sample_downlink(down, 1, x0, stream(1, "d"))
    assert np.array_equal(y, x0)


def test_sampling_frequencies_multinomial():
    f4 = Field(4)
    pmf = np.array([0.5, 0.3, 0.2, 0.0])
    up = UplinkSpec(f4, pmf)
    draws = sample_uplink_noise(up, 100_000, stream(2, "freq"))
    counts = np.bincount(draws, minlength=4)
    for s in range(4):
        expect = draws.size * pmf[s]
        sigma = math.sqrt(draws.size * pmf[s] * (1 - pmf[s])) if pmf[s] else 0.0
        assert abs(counts[s] - expect) <= 4 * sigma


def test_downlink_spec_validation():
    with pytest.raises(ValueError):
        DownlinkSpec(2, (np.array([[0.5, 0.4], [0.5, 0.5]]),))
    with pytest.raises(ValueError):
        DownlinkSpec(2, (np.array([[1.1, -0.1], [0.5, 0.5]]),))
    with pytest.raises(ValueError):
        DownlinkSpec(3, (np.eye(2),))
    spec = identity_downlink(3, 2)
    with pytest.raises(ValueError):
        spec.channel(4)
