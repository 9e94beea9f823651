import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asqgsk.channel import awgn, draw_block, draw_blocks, node_streams, snr_to_sigma2
from asqgsk.errors import DomainError

N = 100_000


@pytest.fixture(scope="module")
def blocks():
    return draw_blocks(N, 20.0, seed=11)


def test_gain_variances(blocks):
    for h in (blocks.h12, blocks.h13, blocks.h23):
        assert np.mean(np.abs(h) ** 2) == pytest.approx(1.0, abs=0.02)


def test_gains_uncorrelated(blocks):
    gains = [blocks.h12, blocks.h13, blocks.h23]
    for i in range(3):
        for j in range(i + 1, 3):
            r = np.mean(gains[i] * np.conj(gains[j])) / np.sqrt(
                np.mean(np.abs(gains[i]) ** 2) * np.mean(np.abs(gains[j]) ** 2))
            assert abs(r) < 0.02


def test_estimation_error_variance(blocks):
    err = blocks.est1_12 - blocks.h12
    assert np.mean(np.abs(err) ** 2) == pytest.approx(blocks.gamma, rel=0.02)
    # node 1 and node 2 errors are independent
    e2 = blocks.est2_12 - blocks.h12
    assert abs(np.mean(err * np.conj(e2))) < 3 * blocks.gamma / np.sqrt(N)


def test_default_gamma_tied():
    b = draw_block(15.0)
    assert b.gamma == b.sigma2 == pytest.approx(10 ** -1.5)


def test_zero_gamma_identical_estimates():
    b = draw_blocks(100, 10.0, gamma=0.0, seed=3)
    assert np.array_equal(b.est1_12, b.est2_12)
    assert np.array_equal(b.est1_13, b.est3_13)
    assert np.array_equal(b.est2_23, b.est3_23)


def test_reciprocity_sharpens_as_gamma_falls():
    corr = []
    for g in (1.0, 0.1, 0.001):
        b = draw_blocks(20_000, 20.0, gamma=g, seed=5)
        corr.append(abs(np.corrcoef(b.est1_12, b.est2_12)[0, 1]))
    assert corr[0] < corr[1] < corr[2]
    assert corr[2] > 0.99


def test_deterministic():
    a, b = draw_blocks(50, 10.0, seed=7), draw_blocks(50, 10.0, seed=7)
    for name in ("h12", "h13", "h23", "est1_12", "est3_23", "noise2", "noise3"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    ss = np.random.SeedSequence(9)
    assert np.array_equal(draw_blocks(5, 10.0, seed=ss).h12, draw_blocks(5, 10.0, seed=ss).h12)
    assert not np.array_equal(draw_blocks(5, 10.0, seed=8).h12, a.h12[:5])


def test_node_streams_independent():
    rs = node_streams(1)
    draws = [r.standard_normal(4) for r in rs]
    assert len({d.tobytes() for d in draws}) == 4


def test_errors():
    with pytest.raises(DomainError):
        draw_block(10.0, gamma=-0.1)
    with pytest.raises(DomainError):
        draw_block(float("inf"))
    with pytest.raises(DomainError):
        awgn(1.0, -1.0, np.random.default_rng())


def test_indexing_keeps_batch():
    b = draw_blocks(10, 10.0, seed=0)
    one = b[3]
    assert len(one) == 1 and one.h12[0] == b.h12[3]
    assert len(b[2:5]) == 3


class TestAwgn:
    def test_zero_noise_identity(self):
        x = np.array([1 + 1j, -3 + 0.5j])
        assert np.array_equal(awgn(x, 0.0, np.random.default_rng(0)), x)

    @pytest.mark.parametrize("snr", [0.0, 10.0, 30.0])
    def test_moments(self, snr):
        s2 = snr_to_sigma2(snr)
        n = awgn(np.zeros(N), s2, np.random.default_rng(2))
        assert np.mean(np.abs(n) ** 2) == pytest.approx(s2, rel=0.02)
        bound = 3 * np.sqrt(s2 / N)
        assert abs(n.mean().real) < bound and abs(n.mean().imag) < bound

    @settings(max_examples=25)
    @given(st.floats(-60, 60))
    def test_snr_conversion(self, db):
        assert 10 * np.log10(1 / snr_to_sigma2(db)) == pytest.approx(db, abs=1e-9)
