"""
Tests for the Fourier-lattice field layer.
"""

import math
import os
import sys
import tempfile
import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from exceptions import LatticeError, PaddingError
from fourier_core import (
    FourierField, LatticeSpec, NormParams, apply_multiplier, direct_convolution, field_from_json,
    field_to_json, from_grid, halfwave, inner_l2, jjap, laplacian, load_field, make_field,
    monomial, multiply, norm, power_nonlinearity, project, random_field, save_field, to_grid,
    weighted_norm
)


class TestLatticeSpec(unittest.TestCase):
    """Test the LatticeSpec class."""

    def test_grid_size_is_odd_and_large_enough(self):
        """Test the synthesis grid covers the padded extent."""
        spec = LatticeSpec(1, 8, 4)
        self.assertEqual(spec.pad_extent, 32)
        self.assertEqual(spec.grid_size % 2, 1)
        self.assertGreaterEqual(spec.grid_size, 2 * spec.pad_extent + 1)

    def test_rejects_bad_parameters(self):
        """Test invalid dimensions, cutoffs and pad factors."""
        with self.assertRaises(LatticeError):
            LatticeSpec(0, 8)
        with self.assertRaises(LatticeError):
            LatticeSpec(1, 0)
        with self.assertRaises(LatticeError):
            LatticeSpec(1, 8, 1)

    def test_norm_params_validation(self):
        """Test the weight floor must exceed one."""
        with self.assertRaises(ValueError):
            NormParams(1.0, 1.0)
        with self.assertRaises(ValueError):
            NormParams(-1.0, 2.0)
        self.assertEqual(NormParams(1.0, 2.0).with_s(3.0).s, 3.0)


class TestFourierField(unittest.TestCase):
    """Test the FourierField class."""

    def setUp(self):
        """Set up test fixtures."""
        self.spec = LatticeSpec(1, 8, 4)
        self.spec2 = LatticeSpec(2, 4, 4)
        self.rng = np.random.default_rng(7)

    def test_make_field_and_coefficient(self):
        """Test sparse construction and coefficient lookup."""
        u = make_field(self.spec, {3: 1.5, -2: 2j})
        self.assertEqual(u.coefficient(3), 1.5)
        self.assertEqual(u.coefficient(-2), 2j)
        self.assertEqual(u.coefficient(100), 0j)
        v = make_field(self.spec2, {(1, -1): 1.0})
        self.assertEqual(v.coefficient((1, -1)), 1.0)
        with self.assertRaises(LatticeError):
            make_field(self.spec, {9: 1.0})

    def test_coefficients_are_immutable(self):
        """Test the coefficient array cannot be written."""
        u = make_field(self.spec, {1: 1.0})
        with self.assertRaises(ValueError):
            u.coeffs[0] = 1.0

    def test_real_valued_flag_is_checked(self):
        """Test a field flagged real must be conjugate symmetric."""
        with self.assertRaises(LatticeError):
            make_field(self.spec, {1: 1.0}, real_valued=True)
        u = make_field(self.spec, {1: 1.0, -1: 1.0}, real_valued=True)
        self.assertTrue(u.real_valued)

    def test_conj_reflects_frequencies(self):
        """Test conj(u) has coefficients conj(u_hat(-j))."""
        u = make_field(self.spec, {2: 1 + 1j})
        self.assertEqual(u.conj().coefficient(-2), 1 - 1j)
        self.assertEqual(u.conj().coefficient(2), 0j)

    def test_resize_round_trip(self):
        """Test padding then truncating restores the field."""
        u = random_field(self.spec, self.rng)
        back = u.resize(20).resize(self.spec.K)
        np.testing.assert_allclose(back.coeffs, u.coeffs)
        self.assertEqual(u.resize(20).extent, 20)

    def test_truncation_loss(self):
        """Test the discarded L2 mass is reported."""
        u = make_field(self.spec, {1: 3.0, 6: 4.0})
        self.assertAlmostEqual(u.truncation_loss(5), 4.0)
        self.assertEqual(u.truncation_loss(8), 0.0)

    def test_arithmetic(self):
        """Test linear combinations across extents."""
        u = make_field(self.spec, {1: 1.0})
        v = make_field(self.spec, {1: 2.0}).resize(12)
        w = 2 * u - v / 2 + (-u)
        self.assertEqual(w.extent, 12)
        self.assertAlmostEqual(w.coefficient(1), 0.0)
        with self.assertRaises(LatticeError):
            u + make_field(LatticeSpec(1, 9), {1: 1.0})

    def test_grid_round_trip(self):
        """Test synthesis and analysis are inverse on the base lattice."""
        u = random_field(self.spec2, self.rng, decay=1.0)
        back = from_grid(to_grid(u), self.spec2, self.spec2.K)
        np.testing.assert_allclose(back.coeffs, u.coeffs, atol=1e-12)

    def test_plane_wave_synthesis(self):
        """Test a single mode synthesizes to e^{ijx}."""
        n = self.spec.grid_size
        u = make_field(self.spec, {3: 1.0})
        x = 2 * np.pi * np.arange(n) / n
        np.testing.assert_allclose(to_grid(u), np.exp(3j * x), atol=1e-12)


class TestProducts(unittest.TestCase):
    """Test the exact product helpers."""

    def setUp(self):
        """Set up test fixtures."""
        self.spec = LatticeSpec(1, 6, 4)
        self.spec2 = LatticeSpec(2, 3, 4)
        self.rng = np.random.default_rng(11)

    def test_multiply_matches_direct_convolution(self):
        """Test the padded transform reproduces the convolution."""
        for spec in (self.spec, self.spec2):
            u = random_field(spec, self.rng)
            v = random_field(spec, self.rng)
            fast = multiply(u, v)
            slow = direct_convolution(u, v)
            self.assertEqual(fast.extent, 2 * spec.K)
            np.testing.assert_allclose(fast.coeffs, slow.coeffs, atol=1e-11)

    def test_multiply_refuses_to_alias(self):
        """Test supports beyond the padded extent raise PaddingError."""
        u = random_field(self.spec, self.rng).resize(20)
        with self.assertRaises(PaddingError) as ctx:
            multiply(u, u)
        self.assertEqual(ctx.exception.required_pad_factor, math.ceil(40 / self.spec.K))

    def test_power_nonlinearity_of_plane_wave(self):
        """Test |u|^2 u of a plane wave is a scaled plane wave."""
        u = make_field(self.spec, {2: 0.5})
        out = power_nonlinearity(u, 1, sign=-1)
        self.assertAlmostEqual(out.coefficient(2), -0.125)
        self.assertAlmostEqual(norm(out, 'L2'), 0.125)

    def test_power_nonlinearity_padding(self):
        """Test the power needs pad factor 2p+1."""
        u = random_field(LatticeSpec(1, 6, 2), self.rng)
        with self.assertRaises(PaddingError):
            power_nonlinearity(u, 1)
        with self.assertRaises(ValueError):
            power_nonlinearity(make_field(self.spec, {1: 1.0}), 0)

    def test_monomial_support(self):
        """Test u^q1 conj(u)^q2 of a plane wave sits at (q1-q2)j."""
        u = make_field(self.spec, {1: 1.0})
        out = monomial(u, 2, 1)
        self.assertAlmostEqual(out.coefficient(1), 1.0)
        self.assertAlmostEqual(norm(out, 'L2'), 1.0)


class TestMultipliersAndNorms(unittest.TestCase):
    """Test Fourier multipliers, projectors and norms."""

    def setUp(self):
        """Set up test fixtures."""
        self.spec = LatticeSpec(2, 6, 4)
        self.rng = np.random.default_rng(3)

    def test_laplacian_symbol(self):
        """Test the Laplacian multiplies by -|j|^2."""
        u = make_field(self.spec, {(1, 2): 1.0})
        self.assertAlmostEqual(apply_multiplier(u, laplacian()).coefficient((1, 2)), -5.0)

    def test_halfwave_kills_zero_mode(self):
        """Test |j|^s vanishes at the origin for s > 0."""
        u = make_field(self.spec, {(0, 0): 1.0, (3, 4): 1.0})
        out = apply_multiplier(u, halfwave(1.0))
        self.assertEqual(out.coefficient((0, 0)), 0j)
        self.assertAlmostEqual(out.coefficient((3, 4)), 5.0)

    def test_projector_split(self):
        """Test low and high projections partition the field."""
        u = random_field(self.spec, self.rng)
        low, high = project(u, 3, 'low'), project(u, 3, 'high')
        np.testing.assert_allclose((low + high).coeffs, u.coeffs)
        self.assertAlmostEqual(inner_l2(low, high), 0j)
        edge = make_field(self.spec, {(3, 0): 1.0})
        self.assertEqual(project(edge, 3, 'low').coefficient((3, 0)), 1.0)
        with self.assertRaises(ValueError):
            project(u, 3, 'middle')

    def test_weighted_norm_plane_wave(self):
        """Test |e^{ijx}|_{s,R} = max{R,|j|}^s."""
        u = make_field(self.spec, {(1, 0): 1.0})
        self.assertAlmostEqual(weighted_norm(u, 2.0, 4.0), 16.0)
        v = make_field(self.spec, {(5, 0): 1.0})
        self.assertAlmostEqual(weighted_norm(v, 2.0, 4.0), 25.0)

    def test_sobolev_sum_norm(self):
        """Test the classical norm is L2 plus the homogeneous part."""
        u = make_field(self.spec, {(0, 0): 3.0, (0, 2): 4.0})
        self.assertAlmostEqual(norm(u, 'L2'), 5.0)
        self.assertAlmostEqual(norm(u, 'Hs_sum', NormParams(1.0, 2.0)), 5.0 + 8.0)
        with self.assertRaises(ValueError):
            norm(u, 'weighted')

    def test_weight_equivalence(self):
        """Test classical and weighted norms agree up to the factor 3 R^s."""
        u = random_field(self.spec, self.rng, decay=1.0)
        params = NormParams(2.0, 3.0)
        classic = norm(u, 'Hs_sum', params) + params.R ** params.s * norm(u, 'L2')
        weighted = norm(u, 'weighted', params)
        self.assertLessEqual(weighted, classic * (1 + 1e-12))
        self.assertLessEqual(classic, 3 * weighted * (1 + 1e-12))

    def test_jjap_floor(self):
        """Test the weight symbol is constant below R."""
        symbol = jjap(1.0, 4.0)
        values = symbol(np.array([[0.0, 0.0], [1.0, 1.0], [5.0, 0.0]]))
        np.testing.assert_allclose(values, [4.0, 4.0, 5.0])


class TestSerialization(unittest.TestCase):
    """Test field persistence."""

    def setUp(self):
        """Set up test fixtures."""
        self.spec = LatticeSpec(1, 5, 3)
        self.u = random_field(self.spec, np.random.default_rng(5), real_valued=True)

    def test_json_text(self):
        """Test the JSON encoding keeps spec and modes."""
        back = field_from_json(field_to_json(self.u))
        self.assertEqual(back.spec, self.spec)
        self.assertTrue(back.real_valued)
        np.testing.assert_allclose(back.coeffs, self.u.coeffs)

    def test_save_and_load(self):
        """Test .npz and JSON files."""
        with tempfile.TemporaryDirectory() as tmp:
            for name in ('field.npz', 'field.json'):
                path = os.path.join(tmp, name)
                save_field(self.u, path)
                back = load_field(path)
                np.testing.assert_allclose(back.coeffs, self.u.coeffs)


class TestFieldProperties(unittest.TestCase):
    """Property checks on random fields."""

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2 ** 31 - 1), K=st.integers(2, 8))
    def test_product_is_commutative_and_exact(self, seed, K):
        """Test u*v = v*u = direct convolution."""
        spec = LatticeSpec(1, K, 4)
        rng = np.random.default_rng(seed)
        u, v = random_field(spec, rng), random_field(spec, rng)
        np.testing.assert_allclose(multiply(u, v).coeffs, multiply(v, u).coeffs, atol=1e-10)
        np.testing.assert_allclose(multiply(u, v).coeffs, direct_convolution(u, v).coeffs,
                                   atol=1e-10)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2 ** 31 - 1), s=st.floats(0.0, 4.0), R=st.floats(1.5, 8.0))
    def test_weighted_norm_monotone_in_s(self, seed, s, R):
        """Test the weighted norm grows with s since every weight is >= R > 1."""
        spec = LatticeSpec(1, 6, 4)
        u = random_field(spec, np.random.default_rng(seed))
        self.assertLessEqual(weighted_norm(u, s, R), weighted_norm(u, s + 0.5, R) * (1 + 1e-12))
        self.assertGreaterEqual(weighted_norm(u, s, R), R ** s * norm(u, 'L2') * (1 - 1e-12))

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2 ** 31 - 1))
    def test_real_fields_have_real_grid_values(self, seed):
        """Test conjugate-symmetric coefficients synthesize to real values."""
        spec = LatticeSpec(1, 5, 3)
        u = random_field(spec, np.random.default_rng(seed), real_valued=True)
        self.assertLess(float(np.max(np.abs(to_grid(u).imag))), 1e-10)


if __name__ == '__main__':
    unittest.main()
