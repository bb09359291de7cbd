import numpy as np
import pytest

from freqwin import (Signal, WindowSpec, apply_window, fft_spectrum,
                     fourier_coeffs, lowpass_filter, spectral_derivative,
                     window_table, window_value)

T = 1.0


def tone(freq, n, length=T, amp=1.0):
    t = np.arange(n) * length / n
    return Signal(length=length, values=amp * np.exp(2j * np.pi * freq * t))


class TestFourierCoeffs:
    def test_constant_signal(self):
        sig = Signal(length=2.0, values=np.full(64, 3.0 - 1.0j))
        spec = fourier_coeffs(sig, 10)
        assert spec.coeffs[0, 0] == pytest.approx((3.0 - 1.0j) * 2.0)
        assert np.abs(spec.coeffs[0, 1:]).max() < 1e-13

    def test_grid_tone_orthogonality(self):
        sig = tone(5.0, 128)
        spec = fourier_coeffs(sig, 30)
        assert spec.coeffs[0, 5] == pytest.approx(T, abs=1e-12)
        others = np.delete(spec.coeffs[0], 5)
        assert np.abs(others).max() < 1e-12

    def test_hann_window_signal_coefficients(self):
        # the sin^2 window is its own test signal: exact series T*[1/2,-1/4,0..]
        n = 1024
        t = np.arange(n) * T / n
        sig = Signal(length=T, values=np.sin(np.pi * t) ** 2)
        spec = fourier_coeffs(sig, 8)
        expect = np.zeros(9, dtype=complex)
        expect[0] = 0.5 * T
        expect[1] = -0.25 * T
        np.testing.assert_allclose(spec.coeffs[0], expect, atol=1e-12)

    def test_k_max_bound(self):
        with pytest.raises(ValueError):
            fourier_coeffs(tone(1.0, 64), 33)

    def test_linearity(self):
        rng = np.random.default_rng(0)
        a = Signal(length=T, values=rng.standard_normal(64) + 1j * rng.standard_normal(64))
        b = Signal(length=T, values=rng.standard_normal(64) + 1j * rng.standard_normal(64))
        combo = Signal(length=T, values=2.0 * a.values - 1.5j * b.values)
        lhs = fourier_coeffs(combo, 20).coeffs
        rhs = 2.0 * fourier_coeffs(a, 20).coeffs - 1.5j * fourier_coeffs(b, 20).coeffs
        np.testing.assert_allclose(lhs, rhs, atol=1e-13)

    def test_endpoint_average_uses_terminal(self):
        n = 64
        t = np.arange(n + 1) * T / n
        vals = np.exp(2j * np.pi * 2.7 * t)  # off-grid: s(0) != s(T)
        sig = Signal(length=T, values=vals[:n], terminal=vals[n:])
        plain = fourier_coeffs(sig, 10).coeffs
        avg = fourier_coeffs(sig, 10, endpoint_average=True).coeffs
        assert not np.allclose(plain, avg)
        sig_bare = Signal(length=T, values=vals[:n])
        with pytest.raises(ValueError):
            fourier_coeffs(sig_bare, 10, endpoint_average=True)


class TestParseval:
    def test_band_limited_energy(self):
        rng = np.random.default_rng(3)
        n = 256
        t = np.arange(n) * T / n
        freqs = np.array([2, 5, 11, 30])
        amps = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        vals = (amps[None, :] @ np.exp(2j * np.pi * np.outer(freqs, t))).ravel()
        sig = Signal(length=T, values=vals)
        spec = fft_spectrum(sig)
        time_energy = (np.abs(vals) ** 2).sum() * (T / n)
        coeff_energy = (np.abs(spec.coeffs) ** 2).sum() / T
        assert coeff_energy == pytest.approx(time_energy, rel=1e-10)


class TestSpectralDerivative:
    def test_identity_at_zero_order(self):
        spec = fourier_coeffs(tone(3.0, 64), 20)
        out = spectral_derivative(spec, 0)
        assert out is spec

    def test_tone_derivative(self):
        spec = fourier_coeffs(tone(1.0, 64), 10)
        dspec = spectral_derivative(spec, 1)
        assert dspec.coeffs[0, 1] == pytest.approx(2j * np.pi / T * T, abs=1e-12)

    def test_two_sided_sign(self):
        # negative-frequency bin of conj tone gets the negative multiplier
        n = 64
        t = np.arange(n) * T / n
        sig = Signal(length=T, values=np.exp(-2j * np.pi * 3 * t))
        dspec = spectral_derivative(fft_spectrum(sig), 1)
        k = np.where(np.isclose(dspec.freqs, -3.0))[0][0]
        assert dspec.coeffs[0, k] == pytest.approx(-6j * np.pi, abs=1e-10)

    def test_product_rule_oracle_convergence(self):
        # F((w x)') computed two ways: spectral derivative of F(wx) versus
        # the transform of the analytically differentiated product; the
        # mismatch is pure aliasing and collapses to roundoff with sampling
        spec = WindowSpec(family="cinf", order=1.0, length=T)
        f0 = 9.0
        errs = []
        for n in (32, 64, 128, 256):
            t = np.arange(n) * T / n
            x = np.exp(2j * np.pi * f0 * t)
            w0 = window_value(spec, 0, t)
            w1 = window_value(spec, 1, t)
            wx = Signal(length=T, values=w0 * x)
            lhs = spectral_derivative(fourier_coeffs(wx, n // 4), 1).coeffs
            dprod = Signal(length=T, values=w1 * x + w0 * 2j * np.pi * f0 * x)
            rhs = fourier_coeffs(dprod, n // 4).coeffs
            errs.append(np.abs(lhs - rhs).max() / np.abs(rhs).max())
        assert errs[-1] < 1e-4 * errs[0]
        assert errs[-1] < 1e-12


class TestTruncationConvergence:
    @pytest.mark.parametrize("order", [1, 2, 3, 4])
    def test_coefficient_error_decay(self, order):
        # |a_k - a_{k,N}| at fixed k falls with slope <= -order + 0.5
        spec = WindowSpec(family="sin", order=order, length=T)
        f0 = 3.37  # off the bin grid
        k = 3
        n_ref = 2**16
        t_ref = np.arange(n_ref) * T / n_ref
        ref_sig = Signal(length=T,
                         values=window_value(spec, 0, t_ref) * np.exp(2j * np.pi * f0 * t_ref))
        ref = fourier_coeffs(ref_sig, k).coeffs[0, k]
        sizes = np.array([64, 128, 256, 512, 1024, 2048, 4096])
        errs = []
        for n in sizes:
            t = np.arange(n) * T / n
            sig = Signal(length=T,
                         values=window_value(spec, 0, t) * np.exp(2j * np.pi * f0 * t))
            errs.append(abs(fourier_coeffs(sig, k).coeffs[0, k] - ref))
        errs = np.array(errs)
        # smooth windows reach the roundoff floor early; fit above it
        live = errs > 1e-15 * abs(ref)
        assert live.sum() >= 3
        slope = np.polyfit(np.log(sizes[live]), np.log(errs[live]), 1)[0]
        assert slope <= -order + 0.5


class TestApplyWindow:
    def test_rectangular_identity(self):
        sig = tone(2.0, 64)
        table = window_table(WindowSpec(family="rectangular", length=T), 64, 0)
        out = apply_window(sig, table, 0)
        np.testing.assert_array_equal(out.values, sig.values)

    def test_cinf_endpoints_vanish(self):
        sig = Signal(length=T, values=np.ones(128))
        table = window_table(WindowSpec(family="cinf", order=1.0, length=T), 128, 0)
        out = apply_window(sig, table, 0)
        assert out.values[0, 0] == 0.0

    def test_energy_matches_quadrature(self):
        from scipy import integrate

        spec = WindowSpec(family="sin", order=2, length=T)
        f0 = 4.0
        n = 4096
        sig = tone(f0, n)
        table = window_table(spec, n, 0)
        out = apply_window(sig, table, 0)
        energy = (np.abs(out.values) ** 2).sum() * (T / n)
        expect, _ = integrate.quad(lambda t: np.sin(np.pi * t) ** 4, 0.0, 1.0)
        assert energy == pytest.approx(expect, rel=1e-8)

    def test_grid_mismatch_rejected(self):
        sig = tone(1.0, 64)
        table = window_table(WindowSpec(family="sin", order=1, length=T), 65, 0)
        with pytest.raises(ValueError):
            apply_window(sig, table, 0)
        table2 = window_table(WindowSpec(family="sin", order=1, length=2.0), 64, 0)
        with pytest.raises(ValueError):
            apply_window(sig, table2, 0)


class TestLowpass:
    def test_band_limited_unchanged(self):
        sig = tone(3.0, 128)
        out = lowpass_filter(sig, 10.0)
        assert np.abs(out.values - sig.values).max() < 1e-12

    def test_high_tone_removed(self):
        sig = tone(40.0, 128)
        out = lowpass_filter(sig, 10.0)
        assert np.abs(out.values).max() < 1e-12

    def test_two_tone_split(self):
        n = 128
        t = np.arange(n) * T / n
        low = np.exp(2j * np.pi * 4 * t)
        high = np.exp(2j * np.pi * 50 * t)
        sig = Signal(length=T, values=low + high)
        out = lowpass_filter(sig, 20.0)
        assert np.abs(out.values[0] - low).max() < 1e-12

    def test_cutoff_validation(self):
        with pytest.raises(ValueError):
            lowpass_filter(tone(1.0, 64), 32.0)


class TestSignalValidation:
    def test_rejects_nan(self):
        vals = np.ones(16, dtype=complex)
        vals[3] = np.nan
        with pytest.raises(ValueError):
            Signal(length=1.0, values=vals)

    def test_rejects_short(self):
        with pytest.raises(ValueError):
            Signal(length=1.0, values=np.array([1.0]))

    def test_properties(self):
        sig = tone(1.0, 64, length=2.0)
        assert sig.sample_rate == pytest.approx(32.0)
        assert sig.nyquist == pytest.approx(16.0)
        assert sig.times[1] == pytest.approx(2.0 / 64)
