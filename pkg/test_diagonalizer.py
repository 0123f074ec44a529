"""
Tests for the diagonalizing change of variables.
"""

import os
import sys
import unittest

import numpy as np

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from diagonalizer import (
    Diagonalizer, DiagonalizerParams, PairField, cancellation_residual, gmap_apply,
    modified_energy, phi_apply, phi_inverse_apply, w_equation_residual, w_transform
)
from exceptions import ContractionError
from fourier_core import LatticeSpec, NormParams, make_field, norm, random_field, weighted_norm
from lab import nested_field
from nls_solver import strang_step
from paradiff import CutoffSpec


class TestDiagonalizerParams(unittest.TestCase):
    """Test the DiagonalizerParams class."""

    def test_threshold_above_floor(self):
        """Test N must exceed the weight floor R."""
        with self.assertRaises(ValueError):
            DiagonalizerParams(N=2.0, norm=NormParams(1.0, 2.0))
        with self.assertRaises(ValueError):
            DiagonalizerParams(N=4.0, neumann_tol=0.0)
        with self.assertRaises(ValueError):
            DiagonalizerParams(N=4.0, neumann_max_terms=0)
        self.assertEqual(DiagonalizerParams(N=4.0).norm.R, 2.0)


class TestPairField(unittest.TestCase):
    """Test the PairField class."""

    def setUp(self):
        """Set up test fixtures."""
        self.spec = LatticeSpec(1, 6, 4)
        self.u = random_field(self.spec, np.random.default_rng(9))

    def test_real_to_real(self):
        """Test (u, conj u) is recognized as a real-to-real pair."""
        self.assertTrue(PairField.from_field(self.u).is_real_to_real())
        self.assertFalse(PairField(self.u, self.u).is_real_to_real())

    def test_norm_and_arithmetic(self):
        """Test the pair norm combines both components."""
        params = NormParams(1.0, 2.0)
        pair = PairField.from_field(self.u)
        single = weighted_norm(self.u, 1.0, 2.0)
        self.assertAlmostEqual(pair.norm(params), np.sqrt(2.0) * single)
        self.assertAlmostEqual((pair - pair).norm(params), 0.0)
        self.assertAlmostEqual((2 * pair).norm(params), 2 * pair.norm(params))
        self.assertAlmostEqual((-pair + pair * 3).norm(params), 2 * pair.norm(params))


class TestDiagonalizer(unittest.TestCase):
    """Test the Diagonalizer class."""

    def setUp(self):
        """Set up test fixtures."""
        self.spec = LatticeSpec(1, 8, 4)
        # constant state: c = u^2/2 = 18 and every operator is a Fourier multiplier
        self.u = make_field(self.spec, {0: 6.0})
        self.cutoff = CutoffSpec(0.1)
        self.safe = DiagonalizerParams(N=6.0, cutoff=self.cutoff, norm=NormParams(1.0, 2.0))
        self.unsafe = DiagonalizerParams(N=3.0, cutoff=self.cutoff, norm=NormParams(1.0, 2.0))

    def test_symbol_c(self):
        """Test c(u) is half of u^2."""
        diag = Diagonalizer(self.u, 1, self.safe)
        self.assertAlmostEqual(diag.c.coefficient(0), 18.0)
        self.assertAlmostEqual(diag.c_bar.coefficient(0), 18.0)

    def test_gmap_on_high_mode(self):
        """Test G swaps components and damps by c <j>^{-2} above N."""
        diag = Diagonalizer(self.u, 1, self.safe)
        V = PairField(make_field(self.spec, {7: 1.0}), make_field(self.spec, {3: 1.0}))
        image = diag.gmap_apply(V)
        self.assertAlmostEqual(image.minus.coefficient(7), 18.0 / 50.0)
        self.assertAlmostEqual(norm(image.plus, 'L2'), 0.0)

    def test_q_is_minus_g_squared(self):
        """Test Q = Gamma Phi - I on a high mode."""
        diag = Diagonalizer(self.u, 1, self.safe)
        V = PairField(make_field(self.spec, {7: 1.0}), make_field(self.spec, {}))
        q = diag.q_apply(V)
        self.assertAlmostEqual(q.plus.coefficient(7), -(18.0 / 50.0) ** 2)
        gamma_phi = diag.phi_apply(diag.phi_apply(V), 'gamma')
        direct = gamma_phi - V
        self.assertAlmostEqual(direct.plus.coefficient(7), q.plus.coefficient(7))
        with self.assertRaises(ValueError):
            diag.phi_apply(V, 'backward')

    def test_inverse_inverts_phi(self):
        """Test Phi(Phi^{-1} V) = V when Q contracts."""
        diag = Diagonalizer(self.u, 1, self.safe)
        rng = np.random.default_rng(1)
        V = PairField(random_field(self.spec, rng), random_field(self.spec, rng))
        Y = diag.phi_inverse_apply(V)
        back = diag.phi_apply(Y).resize(self.spec.K, self.spec.K)
        scale = V.norm(self.safe.norm)
        self.assertLess((back - V).norm(self.safe.norm), 1e-9 * scale)

    def test_contraction_estimate(self):
        """Test the estimated factor of Q brackets the exact multiplier."""
        safe = Diagonalizer(self.u, 1, self.safe).contraction_estimate((8, 8))
        self.assertLess(safe, 1.0)
        self.assertLessEqual(safe, (18.0 / 50.0) ** 2 + 1e-12)
        unsafe = Diagonalizer(self.u, 1, self.unsafe).contraction_estimate((8, 8))
        self.assertGreater(unsafe, 1.0)

    def test_guard_raises_contraction_error(self):
        """Test a large state with a low threshold is refused."""
        V = PairField.from_field(random_field(self.spec, np.random.default_rng(2)))
        with self.assertRaises(ContractionError) as ctx:
            phi_inverse_apply(self.u, V, 1, self.unsafe)
        self.assertGreaterEqual(ctx.exception.factor, 1.0)
        with self.assertRaises(ArithmeticError):
            phi_inverse_apply(self.u, V, 1, self.unsafe)

    def test_cancellation_operator(self):
        """Test (T_b + G(u)) leaves 2c/<j>^2 above N and 2c below."""
        high = make_field(self.spec, {7: 1.0})
        low = make_field(self.spec, {3: 1.0})
        self.assertAlmostEqual(cancellation_residual(self.u, high, 1, self.safe).coefficient(7),
                               36.0 / 50.0)
        self.assertAlmostEqual(cancellation_residual(self.u, low, 1, self.safe).coefficient(3), 36.0)

    def test_cancellation_operator_quintic(self):
        """Test the p = 2 operator uses b = 2|u|^2u^2 and c = b/2."""
        spec = LatticeSpec(1, 8, 5)
        u = make_field(spec, {0: 2.0})
        diag = Diagonalizer(u, 2, self.safe)
        self.assertAlmostEqual(diag.c.coefficient(0), 16.0)
        high = make_field(spec, {7: 1.0})
        low = make_field(spec, {3: 1.0})
        self.assertAlmostEqual(cancellation_residual(u, high, 2, self.safe).coefficient(7),
                               32.0 / 50.0)
        self.assertAlmostEqual(cancellation_residual(u, low, 2, self.safe).coefficient(3), 32.0)

    def test_module_wrappers(self):
        """Test the functional wrappers match the class methods."""
        V = PairField(make_field(self.spec, {7: 1.0}), make_field(self.spec, {-8: 2.0}))
        diag = Diagonalizer(self.u, 1, self.safe)
        np.testing.assert_allclose(gmap_apply(self.u, V, 1, self.safe).minus.coeffs,
                                   diag.gmap_apply(V).minus.coeffs)
        np.testing.assert_allclose(phi_apply(self.u, V, 1, self.safe, 'gamma').plus.coeffs,
                                   diag.phi_apply(V, 'gamma').plus.coeffs)


class TestWVariable(unittest.TestCase):
    """Test the w-transform and the modified energy."""

    def setUp(self):
        """Set up test fixtures."""
        self.spec = LatticeSpec(1, 8, 4)
        self.u = 0.01 * random_field(self.spec, np.random.default_rng(3), decay=2.0)

    def test_low_frequency_state_is_unchanged(self):
        """Test w = u when every mode of u lies below N."""
        params = DiagonalizerParams(N=20.0)
        w = w_transform(self.u, 1, params)
        np.testing.assert_allclose(w.resize(self.spec.K).coeffs, self.u.coeffs, atol=1e-15)
        energy = modified_energy(self.u, 1, params, s=2.0)
        self.assertAlmostEqual(energy, weighted_norm(self.u, 2.0, 2.0) ** 2)

    def test_small_state_gives_close_energy(self):
        """Test E_s is close to |u|_s^2 for small data above the threshold."""
        params = DiagonalizerParams(N=3.0, norm=NormParams(2.0, 2.0))
        energy = modified_energy(self.u, 1, params)
        plain = weighted_norm(self.u, 2.0, 2.0) ** 2
        self.assertLess(abs(energy - plain), 1e-2 * plain)

    def test_w_equation_residual_checks_step(self):
        """Test a nonpositive step is rejected."""
        params = DiagonalizerParams(N=4.0)
        with self.assertRaises(ValueError):
            w_equation_residual(self.u, self.u, self.u, 0.0, 1, 1, params)

    def test_w_equation_residual_of_static_low_state(self):
        """Test the residual of a constant-in-time zero-mode state is its flow term."""
        spec = LatticeSpec(1, 4, 4)
        u = make_field(spec, {0: 0.1})
        params = DiagonalizerParams(N=4.0)
        residual = w_equation_residual(u, u, u, 1e-3, 1, 1, params)
        # D_t w = 0, so the residual is -(i T_a w) with a = 2|u|^2
        self.assertAlmostEqual(residual.coefficient(0), -1j * 2 * 0.01 * 0.1)

    def test_w_equation_residual_of_zero(self):
        """Test u = 0 has zero residual."""
        zero = make_field(LatticeSpec(1, 8, 4), {})
        residual = w_equation_residual(zero, zero, zero, 1e-3, 1, 1, DiagonalizerParams(N=4.0))
        self.assertEqual(norm(residual, 'L2'), 0.0)

    def test_w_equation_residual_of_plane_wave(self):
        """Test the plane-wave residual converges like dt^2 to the remainder -i|A|^2 A."""
        spec = LatticeSpec(1, 8, 4)
        amp, k = 0.3, 2
        omega = k * k + amp ** 2
        params = DiagonalizerParams(N=4.0)

        def residual(dt):
            states = [make_field(spec, {k: amp * np.exp(1j * omega * t)}) for t in (-dt, 0.0, dt)]
            return w_equation_residual(*states, dt, 1, 1, params).coefficient(k)

        r1, r2, r3 = residual(0.02), residual(0.01), residual(0.005)
        self.assertAlmostEqual(abs((r1 - r2) / (r2 - r3)), 4.0, delta=0.05)
        limit = (4.0 * r3 - r2) / 3.0
        self.assertAlmostEqual(limit, -1j * amp ** 3, places=7)

    def test_w_equation_residual_is_stable_in_K(self):
        """Test nested states give nearly the same residual on every lattice."""
        params = DiagonalizerParams(N=4.0)
        dt = 1e-4
        sizes = []
        for K in (8, 16, 32):
            spec = LatticeSpec(1, K, 4)
            u = nested_field(spec, np.random.default_rng(12), 32, decay=4.0, amplitude=0.1)
            u_now = strang_step(u, dt, 1, 1)
            u_next = strang_step(u_now, dt, 1, 1)
            sizes.append(norm(w_equation_residual(u, u_now, u_next, dt, 1, 1, params), 'L2'))
        self.assertGreater(min(sizes), 0.0)
        self.assertLess(max(sizes) / min(sizes), 1.2)


if __name__ == '__main__':
    unittest.main()
