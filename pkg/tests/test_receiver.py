import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hallmimo.channel import ChannelMatrix, DimensionMismatch
from hallmimo.receiver import (
    Combiner,
    RankDeficient,
    ZeroCombinerColumn,
    decode,
    mmse_combiner,
    mrc_combiner,
    sinr_per_user,
    zf_combiner,
)


def rng(seed=0):
    return np.random.default_rng(seed)


def random_channel(m, k, seed=0, scale=1.0):
    g = rng(seed)
    mat = (g.standard_normal((m, k)) + 1j * g.standard_normal((m, k))) / math.sqrt(2)
    return ChannelMatrix(g=scale * mat)


class TestMmse:
    def test_scalar_closed_form(self):
        g = ChannelMatrix(g=np.array([[2.0 + 1.0j]]))
        v = mmse_combiner(g, noise_w=0.5, tx_power_w=1.0)
        expected = (2.0 + 1.0j) / (abs(2.0 + 1.0j) ** 2 + 0.5)
        assert v.v[0, 0] == pytest.approx(expected, rel=1e-12)

    def test_huge_regularizer_tends_to_scaled_mrc(self):
        g = random_channel(8, 4, seed=1)
        reg = 1e9
        v = mmse_combiner(g, noise_w=reg, tx_power_w=1.0)
        np.testing.assert_allclose(v.v * reg, g.g, rtol=1e-6)

    def test_dominates_zf_and_mrc(self):
        for seed in range(50):
            g = random_channel(8, 4, seed=seed)
            s_mmse = sinr_per_user(mmse_combiner(g, 1.0, 1.0), g, 1.0, 1.0)
            s_zf = sinr_per_user(zf_combiner(g), g, 1.0, 1.0)
            s_mrc = sinr_per_user(mrc_combiner(g), g, 1.0, 1.0)
            assert (s_mmse >= s_zf - 1e-9).all()
            assert (s_mmse >= s_mrc - 1e-9).all()


class TestZf:
    def test_inverts_channel(self):
        for m, k in ((8, 4), (16, 8), (64, 16)):
            g = random_channel(m, k, seed=m + k)
            v = zf_combiner(g)
            residual = v.v.conj().T @ g.g - np.eye(k)
            assert np.abs(residual).max() < 1e-9

    def test_single_user_is_scaled_mrc(self):
        g = random_channel(6, 1, seed=2)
        v = zf_combiner(g).v[:, 0]
        col = g.g[:, 0]
        # collinear with positive real scale
        inner = np.vdot(v, col)
        assert abs(inner) == pytest.approx(
            np.linalg.norm(v) * np.linalg.norm(col), rel=1e-12
        )
        assert inner.real > 0 and abs(inner.imag) < 1e-12 * abs(inner)

    def test_orthogonal_columns_reduce_to_scaled_mrc(self):
        q, _ = np.linalg.qr(
            rng(3).standard_normal((8, 3)) + 1j * rng(4).standard_normal((8, 3))
        )
        scales = np.array([0.5, 2.0, 7.0])
        g = ChannelMatrix(g=q * scales)
        v = zf_combiner(g).v
        for k in range(3):
            inner = np.vdot(v[:, k], g.g[:, k])
            assert abs(inner) == pytest.approx(
                np.linalg.norm(v[:, k]) * np.linalg.norm(g.g[:, k]), rel=1e-12
            )

    def test_repeated_column_rejected(self):
        col = rng(5).standard_normal((6, 1)) + 1j * rng(6).standard_normal((6, 1))
        g = ChannelMatrix(g=np.hstack([col, col]))
        with pytest.raises(RankDeficient):
            zf_combiner(g)

    def test_wide_channel_rejected(self):
        with pytest.raises(RankDeficient):
            zf_combiner(random_channel(3, 5))

    def test_interference_nulled_relative_to_signal(self):
        g = random_channel(64, 16, seed=11, scale=1e-5)
        v = zf_combiner(g)
        cross = np.abs(v.v.conj().T @ g.g) ** 2
        signal = np.diag(cross).copy()
        np.fill_diagonal(cross, 0.0)
        assert (cross.sum(axis=1) < 1e-12 * signal).all()


class TestMrc:
    def test_identity(self):
        g = random_channel(5, 3, seed=7)
        assert np.array_equal(mrc_combiner(g).v, g.g)

    def test_single_user_matched_filter_snr(self):
        g = random_channel(16, 1, seed=8)
        p, n = 2.0, 0.25
        s = sinr_per_user(mrc_combiner(g), g, p, n)
        expected = p * np.linalg.norm(g.g[:, 0]) ** 2 / n
        assert s[0] == pytest.approx(expected, rel=1e-12)

    def test_noise_monotonicity(self):
        g = random_channel(8, 4, seed=9)
        v = mrc_combiner(g)
        lo = sinr_per_user(v, g, 1.0, 0.5)
        hi = sinr_per_user(v, g, 1.0, 1.0)
        assert (hi < lo).all()


class TestSinr:
    def test_brute_force_oracle_2x2(self):
        # independent oracle: scalar arithmetic, no linear algebra
        mat = np.array(
            [[0.3 - 0.8j, -1.1 + 0.2j], [0.9 + 0.4j, 0.5 - 0.6j]], dtype=complex
        )
        g = ChannelMatrix(g=mat)
        p, n = 1.7, 0.9
        v = mmse_combiner(g, n, p)
        got = sinr_per_user(v, g, p, n)
        for k in range(2):
            sig = p * abs(sum(v.v[m, k].conjugate() * mat[m, k] for m in range(2))) ** 2
            interf = 0.0
            for kk in range(2):
                if kk != k:
                    interf += (
                        p * abs(sum(v.v[m, k].conjugate() * mat[m, kk] for m in range(2))) ** 2
                    )
            noise = n * sum(abs(v.v[m, k]) ** 2 for m in range(2))
            assert got[k] == pytest.approx(sig / (interf + noise), rel=1e-12)

    def test_scalar_case_scale_cancels(self):
        mat = np.array([[1.5 - 2.0j]])
        g = ChannelMatrix(g=mat)
        p, n = 0.7, 0.2
        for v_scale in (0.1, 1.0, -3.0 + 2.0j):
            v = Combiner(v=v_scale * mat, kind="mrc")
            s = sinr_per_user(v, g, p, n)
            assert s[0] == pytest.approx(p * abs(mat[0, 0]) ** 2 / n, rel=1e-12)

    @given(
        re=st.floats(min_value=-1e3, max_value=1e3),
        im=st.floats(min_value=-1e3, max_value=1e3),
    )
    def test_column_scale_invariance(self, re, im):
        c = complex(re, im)
        if abs(c) < 1e-6:
            return
        g = random_channel(8, 4, seed=13)
        v = mmse_combiner(g, 0.3, 1.0)
        base = sinr_per_user(v, g, 1.0, 0.3)
        scaled = v.v.copy()
        scaled[:, 2] *= c
        got = sinr_per_user(Combiner(v=scaled, kind="mmse"), g, 1.0, 0.3)
        np.testing.assert_allclose(got, base, rtol=1e-9)

    def test_zero_column_rejected(self):
        g = random_channel(4, 2, seed=14)
        v = mrc_combiner(g).v.copy()
        v[:, 1] = 0.0
        with pytest.raises(ZeroCombinerColumn):
            sinr_per_user(Combiner(v=v, kind="mrc"), g, 1.0, 1.0)

    def test_shape_mismatch_rejected(self):
        g = random_channel(4, 2, seed=15)
        v = Combiner(v=np.ones((4, 3), dtype=complex), kind="mrc")
        with pytest.raises(DimensionMismatch):
            sinr_per_user(v, g, 1.0, 1.0)


class TestDecode:
    def test_unit_rate_threshold(self):
        report = decode(np.array([0.999, 1.0, 1.001]), 1.0)
        assert report.decoded.tolist() == [False, True, True]
        assert report.decoded_count == 2

    def test_saturation(self):
        report = decode(np.full(7, 1e12), 1.0)
        assert report.decoded_count == 7

    def test_rate_positive(self):
        with pytest.raises(ValueError):
            decode(np.array([1.0]), 0.0)

    @given(st.lists(st.floats(min_value=0, max_value=1e6), min_size=1, max_size=32))
    def test_count_matches_flags(self, sinrs):
        report = decode(np.array(sinrs), 1.0)
        assert report.decoded_count == int(report.decoded.sum())
        assert ((report.sinr >= 1.0) == report.decoded).all()
