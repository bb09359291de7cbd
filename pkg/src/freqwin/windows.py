"""Window families with analytic derivatives and spectral diagnostics.

Two families are the workhorses: powers of a half-period sine,
``sin_n(t) = sin^n(pi t / T)``, and an infinitely smooth bump,
``cinf_n(t) = exp(4n - n T^2 / (t (T - t)))``, both supported on (0, T) and
equal to 1 at T/2.  The sine family is C^(n-1) across the window edges (its
first n-1 derivatives vanish there); the bump family vanishes with all its
derivatives.  A rectangular window is provided so the polynomial-transient
baseline shares the same pipeline, and a flat reference polynomial window
``poly_ref`` exists only for the overlap-variance figures.

Derivatives are exact: the sine windows are finite trigonometric sums which
are differentiated term by term, and the bump-family derivatives are built
once per (order, k) as rational-function factors by symbolic differentiation
of the exponent, then evaluated numerically against the window itself.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from math import comb

import numpy as np

FAMILIES = ("rectangular", "sin", "cinf", "poly_ref")

# exp() underflows to 0 below this; the rational prefactors of the bump
# window stay finite well past it, so the product is exactly 0 there.
_EXP_FLOOR = -700.0


@dataclass(frozen=True)
class WindowSpec:
    """Window family, smoothness order and support length.

    ``order`` must be a positive integer for ``sin`` and ``poly_ref``; the
    ``cinf`` family accepts any real order > 0 (e.g. 0.25).  It is ignored
    for ``rectangular``.
    """

    family: str
    order: float = 1.0
    length: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown window family {self.family!r}")
        if self.length <= 0:
            raise ValueError("window length must be positive")
        if self.family in ("sin", "poly_ref"):
            if self.order < 1 or self.order != int(self.order):
                raise ValueError(f"{self.family} order must be a positive integer")
        elif self.family == "cinf":
            if self.order <= 0:
                raise ValueError("cinf order must be > 0")

    @property
    def label(self) -> str:
        if self.family == "rectangular":
            return "rect"
        o = int(self.order) if self.order == int(self.order) else self.order
        return f"{self.family}_{o}"


@dataclass(frozen=True)
class WindowTable:
    """Sampled window derivative rows d^k w/dt^k on t_j = j T / N.

    Row k holds the k-th derivative.  Endpoint samples store the one-sided
    limits from inside the support (0 for both proposed families at k = 0).
    """

    spec: WindowSpec
    samples: np.ndarray  # (max_deriv + 1, N), float64

    @property
    def max_deriv(self) -> int:
        return self.samples.shape[0] - 1

    @property
    def num_samples(self) -> int:
        return self.samples.shape[1]


@functools.lru_cache(maxsize=None)
def _cinf_rational(order: float, k: int):
    """Rational prefactor R_k(s) with d^k/ds^k w = R_k(s) w(s), s = t/T.

    Built by the exact recurrence R_1 = g', R_{k+1} = R_k' + R_k g' on the
    exponent g = -n/(s(1-s)); every step stays inside the rational functions
    so no exponential ever appears.  Kept factored: the expanded denominator
    suffers catastrophic cancellation near s = 1.
    """
    import sympy as sp

    s = sp.symbols("s")
    n = sp.Rational(order)
    gprime = sp.cancel(sp.diff(-n / (s * (1 - s)), s))
    rk = gprime
    for _ in range(k - 1):
        rk = sp.cancel(sp.diff(rk, s) + rk * gprime)
    return sp.lambdify(s, sp.factor(rk), "numpy")


def _cinf_values(order: float, k: int, s: np.ndarray, length: float) -> np.ndarray:
    out = np.zeros(s.shape, dtype=float)
    inside = (s > 0.0) & (s < 1.0)
    expo = np.full(s.shape, -np.inf)
    expo[inside] = 4.0 * order - order / (s[inside] * (1.0 - s[inside]))
    live = inside & (expo > _EXP_FLOOR)
    if not live.any():
        return out
    if k == 0:
        pref = 1.0
    else:
        pref = np.asarray(_cinf_rational(float(order), k)(s[live]), dtype=float)
        pref = pref / length**k
    out[live] = pref * np.exp(expo[live])
    return out


def _sin_values(order: int, k: int, t: np.ndarray, length: float) -> np.ndarray:
    # sin^n(pi t/T) expanded over complex exponentials; exact k-th derivative
    acc = np.zeros(t.shape, dtype=complex)
    for m in range(order + 1):
        c = comb(order, m) * (-1) ** (order - m) / (2j) ** order
        om = 1j * np.pi * (2 * m - order) / length
        acc += c * om**k * np.exp(om * t)
    return acc.real


def _poly_ref_values(order: int, k: int, s: np.ndarray, length: float) -> np.ndarray:
    # w = 1 - (s - 1/2)^n on the unit interval, s = t/T
    n = int(order)
    out = np.zeros(s.shape, dtype=float)
    if k == 0:
        out[:] = 1.0 - (s - 0.5) ** n
    elif k <= n:
        fall = 1.0
        for i in range(k):
            fall *= n - i
        out[:] = -fall * (s - 0.5) ** (n - k) / length**k
    return out


def window_value(spec: WindowSpec, k: int, t) -> np.ndarray | float:
    """Evaluate d^k w/dt^k at time(s) t.

    Returns 0 strictly outside [0, T]; at t = 0 and t = T the one-sided
    limit from inside the support is returned, so tables sampled from here
    carry the right-limit at the first sample.
    """
    if k < 0:
        raise ValueError("derivative order must be >= 0")
    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    t_arr = np.atleast_1d(t_arr)
    T = spec.length
    s = t_arr / T
    if spec.family == "rectangular":
        if k >= 1:
            raise ValueError(
                "rectangular window has no pointwise derivatives; "
                "it participates only in the polynomial-transient baseline"
            )
        out = np.where((s >= 0.0) & (s <= 1.0), 1.0, 0.0)
    elif spec.family == "sin":
        out = np.where(
            (s >= 0.0) & (s <= 1.0),
            _sin_values(int(spec.order), k, t_arr, T),
            0.0,
        )
    elif spec.family == "cinf":
        out = _cinf_values(spec.order, k, s, T)
    else:  # poly_ref
        out = np.where(
            (s >= 0.0) & (s <= 1.0),
            _poly_ref_values(int(spec.order), k, s, T),
            0.0,
        )
    return float(out[0]) if scalar else out


def window_table(spec: WindowSpec, num_samples: int, max_deriv: int) -> WindowTable:
    """Sample the window and its derivatives on the uniform grid t_j = j T / N."""
    if num_samples < 2:
        raise ValueError("need at least 2 samples")
    if max_deriv < 0:
        raise ValueError("max_deriv must be >= 0")
    t = np.arange(num_samples) * (spec.length / num_samples)
    rows = np.empty((max_deriv + 1, num_samples), dtype=float)
    for k in range(max_deriv + 1):
        rows[k] = window_value(spec, k, t)
    return WindowTable(spec=spec, samples=rows)


def window_area(spec: WindowSpec) -> float:
    """Area under the base window, used to normalize spectral envelopes."""
    T = spec.length
    if spec.family == "rectangular":
        return T
    if spec.family == "sin":
        # int_0^T sin^n(pi t/T) dt via the same exponential expansion
        n = int(spec.order)
        total = 0.0 + 0.0j
        for m in range(n + 1):
            c = comb(n, m) * (-1) ** (n - m) / (2j) ** n
            h = 2 * m - n
            if h == 0:
                total += c * T
            else:
                om = 1j * np.pi * h / T
                total += c * (np.exp(om * T) - 1.0) / om
        return float(total.real)
    # no closed form needed elsewhere: high-order quadrature on the analytics
    nodes, weights = np.polynomial.legendre.leggauss(200)
    tq = 0.5 * T * (nodes + 1.0)
    return float(0.5 * T * np.sum(weights * window_value(spec, 0, tq)))


@functools.lru_cache(maxsize=8)
def _spectrum_samples(spec: WindowSpec, k: int, f_max: float, oversample: int,
                      refine: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """High-rate DFT of d^k w/dt^k on the grid j / (refine * T).

    The sampling rate is chosen so the diagnostic's own aliasing stays below
    1e-14 of the spectral peak for the smooth families; the slowest-decaying
    case (sin_1 and window derivatives, 1/f^2 tails) ends up below 1e-11
    relative at the default search bound, far under every tabulated level.
    """
    T = spec.length
    n_needed = max(16384, int(16 * f_max * T), int(2 * oversample * f_max * T))
    n_hi = 1 << max(14, int(np.ceil(np.log2(n_needed))))
    t = np.arange(n_hi) * (T / n_hi)
    vals = window_value(spec, k, t).astype(float)
    # wrap sample as the average of both one-sided limits: the DFT then
    # matches the trapezoid estimate of the transform integral
    left = window_value(spec, k, 0.0)
    right = window_value(spec, k, T)
    vals[0] = 0.5 * (left + right)
    if refine > 1:
        padded = np.zeros(refine * n_hi)
        padded[:n_hi] = vals
        vals = padded
    coeffs = np.fft.rfft(vals) * (T / n_hi)
    freqs = np.arange(coeffs.size) / (refine * T)
    keep = int(round(f_max * refine * T))
    return freqs[: keep + 1], coeffs[: keep + 1]


def window_spectrum(spec: WindowSpec, k: int, oversample: int = 16,
                    f_max: float | None = None):
    """Transform of d^k w/dt^k on the grid f = j/T up to f_max.

    Exact trig-polynomial windows (even-order sine) have identically zero
    coefficients on this grid beyond their harmonic content; use f_err for
    leakage envelopes, which refines the grid internally.
    """
    from .spectral import Spectrum

    if oversample < 1:
        raise ValueError("oversample must be >= 1")
    T = spec.length
    if f_max is None:
        f_max = 128.0 / T
    m = f_max * T
    if abs(m - round(m)) > 1e-9:
        raise ValueError("f_max must be a multiple of 1/T")
    freqs, coeffs = _spectrum_samples(spec, k, f_max, oversample, refine=1)
    return Spectrum(length=T, coeffs=coeffs[np.newaxis, :], freqs=freqs)


def f_err(spec: WindowSpec, k: int, p: float, f_search_max: float | None = None) -> float:
    """Smallest f = m/T with sup_{|f'| >= f} |w_k(f')| / S < p.

    S is the base window's area for every derivative order.  The envelope is
    evaluated on a 16x refined frequency grid (leakage between the 1/T bins
    is what aliases in practice; even-order sine windows have exactly zero
    coefficients ON the 1/T grid) and the result is reported on the 1/T
    grid.  Returns inf when the threshold is not met below f_search_max.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("threshold p must be in (0, 1)")
    if spec.family == "rectangular" and k >= 1:
        raise ValueError("rectangular window has no derivative spectra")
    T = spec.length
    if f_search_max is None:
        f_search_max = 10000.0 / T
    refine = 16
    # small slack above the bound so the sup is taken over a full tail
    freqs, coeffs = _spectrum_samples(spec, k, f_search_max * 1.02 + 4.0 / T,
                                      oversample=16, refine=refine)
    S = window_area(spec)
    mag = np.abs(coeffs) / S
    env = np.maximum.accumulate(mag[::-1])[::-1]
    m_max = int(np.floor(f_search_max * T))
    for m in range(1, m_max + 1):
        if env[m * refine] < p:
            return m / T
    return np.inf


def overlap_variance(spec: WindowSpec, tau: float, num_windows: int) -> float:
    """Normalized periodogram variance for K overlapped windows.

    Implements (1 + 2 sum_{j>=1} ((K-j)/K) rho_j) / K with
    rho_j = (int w(t) w(t - j T (1-tau)) dt / int w^2)^2, the overlap
    integrals evaluated by Gauss-Legendre quadrature on the analytic window.
    """
    if not 0.0 <= tau < 1.0:
        raise ValueError("overlap fraction must be in [0, 1)")
    if num_windows < 1:
        raise ValueError("need at least one window")
    T = spec.length
    K = num_windows
    nodes, weights = np.polynomial.legendre.leggauss(400)

    def overlap_integral(shift: float) -> float:
        lo, hi = shift, T
        if hi <= lo:
            return 0.0
        tq = 0.5 * (hi - lo) * (nodes + 1.0) + lo
        wq = window_value(spec, 0, tq) * window_value(spec, 0, tq - shift)
        return float(0.5 * (hi - lo) * np.sum(weights * wq))

    norm = overlap_integral(0.0)
    acc = 1.0
    for j in range(1, K):
        shift = j * T * (1.0 - tau)
        if shift >= T:
            break
        rho = (overlap_integral(shift) / norm) ** 2
        acc += 2.0 * ((K - j) / K) * rho
    return acc / K
