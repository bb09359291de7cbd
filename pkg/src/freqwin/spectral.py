"""Sampled signals, Fourier-coefficient estimation and spectral operations.

Spectra use the transform-integral convention: coefficient k estimates
``int_0^T s(t) exp(-2 pi i f_k t) dt`` on the grid f_k = k/T, i.e. the DFT
scaled by T/N.  Dividing by T gives the Fourier-series coefficients of the
record's periodic extension.  Differentiation in this convention multiplies
by D(f) = +2 pi i f, and that sign is used consistently across the package
(corrections, regression polynomials); the simulated-system recovery tests
pin it down empirically.

Signals may be genuinely complex (the benchmark forcing is a complex
multisine), so no conjugate-symmetry compression is applied, and spectra can
be built either on the non-negative grid k = 0..k_max or on the full
two-sided DFT grid; a Spectrum carries its frequency values explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Signal:
    """Uniformly sampled multichannel complex time record on [0, T).

    ``values`` has shape (n_channels, N) with sample times t_j = j T / N.
    ``terminal`` optionally carries the extra sample s(T) needed by the
    endpoint-averaging option.
    """

    length: float
    values: np.ndarray
    terminal: np.ndarray | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.ndim == 1:
            vals = vals[np.newaxis, :]
        if vals.shape[1] < 2:
            raise ValueError("need at least 2 samples")
        if not np.isfinite(vals).all():
            raise ValueError("signal contains non-finite values")
        if self.length <= 0:
            raise ValueError("record length must be positive")
        object.__setattr__(self, "values", vals)
        if self.terminal is not None:
            term = np.asarray(self.terminal, dtype=complex).reshape(vals.shape[0])
            object.__setattr__(self, "terminal", term)

    @property
    def num_samples(self) -> int:
        return self.values.shape[1]

    @property
    def num_channels(self) -> int:
        return self.values.shape[0]

    @property
    def sample_rate(self) -> float:
        return self.num_samples / self.length

    @property
    def nyquist(self) -> float:
        return self.num_samples / (2.0 * self.length)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.num_samples) * (self.length / self.num_samples)


@dataclass(frozen=True)
class Spectrum:
    """Per-frequency complex coefficient vectors.

    ``coeffs`` has shape (n_channels, n_bins); ``freqs`` holds the bin
    frequencies, either k/T for k = 0..k_max or the full two-sided DFT grid.
    """

    length: float
    coeffs: np.ndarray
    freqs: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.ndim == 1:
            coeffs = coeffs[np.newaxis, :]
        object.__setattr__(self, "coeffs", coeffs)
        if self.freqs is None:
            freqs = np.arange(coeffs.shape[1]) / self.length
        else:
            freqs = np.asarray(self.freqs, dtype=float)
            if freqs.shape != (coeffs.shape[1],):
                raise ValueError("freqs must match the coefficient bins")
        object.__setattr__(self, "freqs", freqs)

    @property
    def num_channels(self) -> int:
        return self.coeffs.shape[0]

    @property
    def num_bins(self) -> int:
        return self.coeffs.shape[1]


def _wrap_endpoint(signal: Signal) -> np.ndarray:
    if signal.terminal is None:
        raise ValueError("endpoint averaging needs the terminal sample s(T)")
    vals = signal.values.copy()
    vals[:, 0] = 0.5 * (vals[:, 0] + signal.terminal)
    return vals


def fourier_coeffs(signal: Signal, k_max: int, endpoint_average: bool = False) -> Spectrum:
    """Transform-integral estimates on the non-negative grid k = 0..k_max.

    coeff_k = (T/N) sum_j s_j exp(-2 pi i k j / N), the trapezoid/DFT
    estimate of the windowed transform.  With ``endpoint_average`` the first
    sample is replaced by (s(0) + s(T))/2, turning the estimate into the
    exact trapezoid rule for records whose endpoint values differ.
    """
    N = signal.num_samples
    if k_max > N // 2:
        raise ValueError("k_max must not exceed N/2")
    vals = _wrap_endpoint(signal) if endpoint_average else signal.values
    coeffs = np.fft.fft(vals, axis=-1)[:, : k_max + 1] * (signal.length / N)
    return Spectrum(length=signal.length, coeffs=coeffs)


def fft_spectrum(signal: Signal, endpoint_average: bool = False) -> Spectrum:
    """Transform estimates on the full two-sided DFT grid (fftfreq order).

    Bins above N/2 represent negative frequencies; for complex records these
    carry information independent of the non-negative bins, and the
    identification pipeline fits over all of them.
    """
    N = signal.num_samples
    vals = _wrap_endpoint(signal) if endpoint_average else signal.values
    coeffs = np.fft.fft(vals, axis=-1) * (signal.length / N)
    freqs = np.fft.fftfreq(N, d=signal.length / N)
    return Spectrum(length=signal.length, coeffs=coeffs, freqs=freqs)


def spectral_derivative(spectrum: Spectrum, m: int) -> Spectrum:
    """Multiply by D(f)^m with D(f) = 2 pi i f (differentiation)."""
    if m < 0:
        raise ValueError("derivative order must be >= 0")
    if m == 0:
        return spectrum
    mult = (2j * np.pi * spectrum.freqs) ** m
    return Spectrum(length=spectrum.length, coeffs=spectrum.coeffs * mult,
                    freqs=spectrum.freqs)


def apply_window(signal: Signal, table, k: int = 0) -> Signal:
    """Pointwise product of every channel with window-derivative row k."""
    if table.num_samples != signal.num_samples:
        raise ValueError(
            f"window table has {table.num_samples} samples, signal has "
            f"{signal.num_samples}"
        )
    if abs(table.spec.length - signal.length) > 1e-12 * signal.length:
        raise ValueError("window and signal record lengths differ")
    if k > table.max_deriv:
        raise ValueError(f"table holds derivatives up to {table.max_deriv}")
    out = signal.values * table.samples[k]
    term = None
    if signal.terminal is not None:
        from .windows import window_value

        term = signal.terminal * window_value(table.spec, k, signal.length)
    return Signal(length=signal.length, values=out, terminal=term)


def lowpass_filter(signal: Signal, cutoff: float) -> Signal:
    """Zero-phase spectral truncation: FFT, zero bins with |f| > cutoff, inverse.

    Filtering commutes with the system equations, so identification may be
    run on filtered records to suppress fold-back of true signal content
    above the Nyquist frequency.
    """
    if cutoff >= signal.nyquist:
        raise ValueError("cutoff must be below the Nyquist frequency")
    N = signal.num_samples
    freqs = np.fft.fftfreq(N, d=signal.length / N)
    spec = np.fft.fft(signal.values, axis=-1)
    spec[:, np.abs(freqs) > cutoff] = 0.0
    return Signal(length=signal.length, values=np.fft.ifft(spec, axis=-1))
