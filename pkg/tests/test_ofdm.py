"""Tests for constellations, tone layout, modulation and metrics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pncomp import numerics as nx
from pncomp.ofdm import (Constellation, FreqSymbol, ToneLayout, default_layout,
                         demodulate, evm_db, evm_linear, hard_decide,
                         make_symbol, modulate, ratio_to_db,
                         symbol_error_rate, EVM_FLOOR_DB)


@pytest.fixture(scope="module")
def layout():
    return default_layout()


@pytest.fixture(scope="module")
def qam256():
    return Constellation.qam(256)


class TestToneLayout:
    def test_default_counts(self, layout):
        assert layout.n == 64
        assert layout.n_pilot == 16
        assert len(layout.data_idx) == 48
        assert layout.null_idx == ()

    def test_default_pilot_positions(self, layout):
        assert layout.pilot_idx == tuple(range(7)) + (20, 42) + tuple(range(57, 64))

    def test_partition(self, layout):
        everything = (set(layout.pilot_idx) | set(layout.null_idx)
                      | set(layout.data_idx))
        assert everything == set(range(64))

    def test_rejects_overlap(self):
        with pytest.raises(ValueError):
            ToneLayout(n=8, pilot_idx=(1, 2), null_idx=(2, 3))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            ToneLayout(n=8, pilot_idx=(8,))


class TestConstellation:
    @pytest.mark.parametrize("order", [4, 16, 64, 256])
    def test_unit_energy(self, order):
        c = Constellation.qam(order)
        assert len(c.points) == order
        assert abs(np.mean(np.abs(c.points) ** 2) - 1.0) <= 1e-12

    @pytest.mark.parametrize("order", [4, 16, 64, 256])
    def test_closed_under_negation_and_conjugation(self, order):
        pts = set(np.round(Constellation.qam(order).points, 12))
        assert all(np.round(-p, 12) in pts for p in pts)
        assert all(np.round(np.conj(p), 12) in pts for p in pts)

    @pytest.mark.parametrize("order", [4, 16, 64, 256])
    def test_points_distinct(self, order):
        pts = Constellation.qam(order).points
        assert len(set(np.round(pts, 12))) == order

    def test_gray_labeling_adjacent_points(self):
        # horizontally/vertically adjacent points differ in exactly one bit
        c = Constellation.qam(16)
        step = np.min(np.abs(c.points[1:] - c.points[0])[
            np.abs(c.points[1:] - c.points[0]) > 1e-12])
        for i, p in enumerate(c.points):
            for j, q in enumerate(c.points):
                if abs(abs(p - q) - step) < 1e-9:
                    assert bin(i ^ j).count("1") == 1

    def test_rejects_unsupported_order(self):
        with pytest.raises(ValueError):
            Constellation.qam(32)


class TestMakeSymbol:
    def test_all_null_layout(self):
        lay = ToneLayout(n=8, pilot_idx=(), null_idx=tuple(range(8)))
        sym = make_symbol(lay, Constellation.qam(4), rng_seed=1)
        np.testing.assert_array_equal(sym.s, np.zeros(8))

    def test_deterministic(self, layout, qam256):
        a = make_symbol(layout, qam256, rng_seed=7)
        b = make_symbol(layout, qam256, rng_seed=7)
        np.testing.assert_array_equal(a.s, b.s)

    def test_different_seeds_differ(self, layout, qam256):
        a = make_symbol(layout, qam256, rng_seed=7)
        b = make_symbol(layout, qam256, rng_seed=8)
        assert np.any(a.s != b.s)

    def test_per_tone_mean_power(self, layout, qam256):
        # Monte-Carlo check of the unit constellation energy per tone
        acc = np.zeros(64)
        n_sym = 10_000
        for i in range(n_sym):
            acc += np.abs(make_symbol(layout, qam256, rng_seed=i).s) ** 2
        acc /= n_sym
        active = list(layout.pilot_idx) + list(layout.data_idx)
        assert np.all(np.abs(acc[active] - 1.0) <= 0.05)

    def test_points_from_constellation(self, layout, qam256):
        sym = make_symbol(layout, qam256, rng_seed=3)
        pts = set(np.round(qam256.points, 12))
        active = list(layout.pilot_idx) + list(layout.data_idx)
        assert all(np.round(v, 12) in pts for v in sym.s[active])


class TestModulate:
    def test_delta_tone_zero(self, layout):
        s = np.zeros(64, dtype=complex)
        s[0] = 1.0
        x = modulate(FreqSymbol(s=s, layout=layout))
        np.testing.assert_allclose(x, np.full(64, 1 / 8.0), atol=1e-14)

    def test_zero_symbol(self, layout):
        x = modulate(FreqSymbol(s=np.zeros(64), layout=layout))
        np.testing.assert_array_equal(x, np.zeros(64))

    def test_round_trip(self, layout, qam256):
        sym = make_symbol(layout, qam256, rng_seed=11)
        back = demodulate(modulate(sym), layout)
        assert np.max(np.abs(back.s - sym.s)) <= 1e-12

    def test_energy_preserved(self, layout, qam256):
        sym = make_symbol(layout, qam256, rng_seed=12)
        assert abs(np.linalg.norm(modulate(sym)) - np.linalg.norm(sym.s)) <= 1e-12


class TestEvm:
    def test_exact_is_floor(self, layout, qam256):
        sym = make_symbol(layout, qam256, rng_seed=1)
        assert evm_db(sym, sym) <= EVM_FLOOR_DB

    def test_one_percent_error(self, layout, qam256):
        ref = make_symbol(layout, qam256, rng_seed=2)
        est = FreqSymbol(s=ref.s * 1.01, layout=layout)
        assert abs(evm_db(est, ref) - (-40.0)) <= 0.01

    def test_white_error_monte_carlo(self, layout, qam256):
        # error power 1e-3 of signal power -> -30 dB over 100 symbols
        rng = np.random.default_rng(0)
        err_acc = ref_acc = 0.0
        for i in range(100):
            ref = make_symbol(layout, qam256, rng_seed=1000 + i)
            noise = np.sqrt(1e-3 / 2) * (rng.standard_normal(64)
                                         + 1j * rng.standard_normal(64))
            est = FreqSymbol(s=ref.s + noise, layout=layout)
            e, r = evm_linear(est, ref)
            err_acc += e
            ref_acc += r
        assert abs(ratio_to_db(err_acc, ref_acc) - (-30.0)) <= 0.3

    def test_scope_all_active(self, layout, qam256):
        ref = make_symbol(layout, qam256, rng_seed=4)
        est = FreqSymbol(s=ref.s.copy(), layout=layout)
        est.s[layout.pilot_idx[0]] += 0.1  # pilot-only error
        assert evm_db(est, ref, scope="data_only") <= EVM_FLOOR_DB
        assert evm_db(est, ref, scope="all_active") > -40

    def test_rejects_mismatched_layouts(self, layout, qam256):
        other = ToneLayout(n=64, pilot_idx=(0, 1))
        ref = make_symbol(layout, qam256, rng_seed=5)
        est = FreqSymbol(s=ref.s, layout=other)
        with pytest.raises(ValueError):
            evm_db(est, ref)


class TestHardDecide:
    def test_exact_points_unchanged(self, layout, qam256):
        sym = make_symbol(layout, qam256, rng_seed=6)
        out = hard_decide(sym, qam256)
        np.testing.assert_allclose(out.s, sym.s, atol=1e-14)

    def test_small_perturbation_recovered(self, layout, qam256):
        sym = make_symbol(layout, qam256, rng_seed=7)
        dmin = 2.0 / np.sqrt(2 * 255 / 3)  # adjacent-point spacing, 256-QAM
        est = FreqSymbol(s=sym.s + 0.3 * dmin * np.exp(0.7j), layout=layout)
        out = hard_decide(est, qam256)
        np.testing.assert_allclose(out.s, sym.s, atol=1e-12)

    def test_output_in_constellation_random_inputs(self, layout, qam256):
        rng = np.random.default_rng(8)
        lim = np.max(np.abs(qam256.points.real))
        raw = rng.uniform(-lim, lim, (64, 2)) @ np.array([1, 1j])
        est = FreqSymbol(s=raw, layout=layout)
        out = hard_decide(est, qam256)
        pts = qam256.points
        for k in list(layout.pilot_idx) + list(layout.data_idx):
            # independent nearest-neighbor oracle
            best = pts[int(np.argmin(np.abs(raw[k] - pts)))]
            assert out.s[k] == best

    def test_idempotent(self, layout, qam256):
        rng = np.random.default_rng(9)
        raw = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        once = hard_decide(FreqSymbol(s=raw, layout=layout), qam256)
        twice = hard_decide(once, qam256)
        np.testing.assert_array_equal(once.s, twice.s)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_idempotent_property(self, seed):
        layout = default_layout()
        qam = Constellation.qam(16)
        rng = np.random.default_rng(seed)
        raw = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        once = hard_decide(FreqSymbol(s=raw, layout=layout), qam)
        np.testing.assert_array_equal(hard_decide(once, qam).s, once.s)


class TestSer:
    def test_zero_errors(self, layout, qam256):
        sym = make_symbol(layout, qam256, rng_seed=10)
        assert symbol_error_rate(sym, sym, qam256) == 0.0

    def test_all_errors(self, layout, qam256):
        ref = make_symbol(layout, qam256, rng_seed=11)
        est = FreqSymbol(s=-ref.s, layout=layout)  # negation is a valid point
        assert symbol_error_rate(est, ref, qam256) == pytest.approx(
            np.mean(np.abs(ref.s[list(layout.data_idx)]) > 1e-12))
