"""Frequency-domain least-squares identification of the ODE coefficients.

The corrected regression stacks, per frequency bin f,

    L_i(f) = D(f)^i x_w(f) - x^{i}(f)      (state rows)
    R_k(f) = D(f)^k u_w(f) - u^{k}(f)      (input rows, negated)

into a matrix M whose top n_x rows belong to the fixed A_{n_a} = I block;
the remaining parameters solve theta_2 M_2 = -M_1 by Moore-Penrose
pseudo-inverse.  The polynomial-transient baseline replaces the corrections
with per-output polynomial nuisance terms in f (the rectangular-window
route); the mixed method carries both.

Parameters are real; the regression is complex.  The solve stays complex
and the real part is taken at the end, with the imaginary norm reported as
an inconsistency diagnostic.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .corrections import CorrectionSet, correction_spectra
from .spectral import Signal, Spectrum, apply_window, fft_spectrum
from .windows import WindowSpec, window_table

RANK_RTOL = 1e-12

METHODS = ("corrected", "ps", "mixed", "naive")


class RankDeficiencyError(RuntimeError):
    """Regression matrix rank fell below the parameter count."""


@dataclass(frozen=True)
class ModelStructure:
    n_x: int
    n_u: int
    n_a: int
    n_b: int

    def __post_init__(self):
        if self.n_x < 1 or self.n_u < 1:
            raise ValueError("state and input dimensions must be >= 1")
        if self.n_u > self.n_x:
            raise ValueError("n_u must not exceed n_x")
        if self.n_a < 1:
            raise ValueError("n_a must be >= 1")
        if self.n_b < 0:
            raise ValueError("n_b must be >= 0")

    @property
    def free_parameter_count(self) -> int:
        return self.n_x * (self.n_x * self.n_a + self.n_u * (self.n_b + 1))


@dataclass(frozen=True)
class ModelParams:
    """Coefficient matrices A_0..A_{n_a} (n_x x n_x) and B_0..B_{n_b} (n_x x n_u)."""

    structure: ModelStructure
    A: tuple[np.ndarray, ...]
    B: tuple[np.ndarray, ...]

    def __post_init__(self):
        s = self.structure
        A = tuple(np.asarray(m, dtype=float) for m in self.A)
        B = tuple(np.asarray(m, dtype=float) for m in self.B)
        if len(A) != s.n_a + 1 or any(m.shape != (s.n_x, s.n_x) for m in A):
            raise ValueError("A must hold n_a + 1 matrices of shape (n_x, n_x)")
        if len(B) != s.n_b + 1 or any(m.shape != (s.n_x, s.n_u) for m in B):
            raise ValueError("B must hold n_b + 1 matrices of shape (n_x, n_u)")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    def free_stack(self) -> np.ndarray:
        """Free parameters (A_{n_a} excluded) as one flat vector."""
        return np.concatenate(
            [m.ravel() for m in self.A[: self.structure.n_a]]
            + [m.ravel() for m in self.B]
        )


@dataclass(frozen=True)
class RegressionSystem:
    """Stacked per-frequency regression blocks.

    ``m1`` holds the fixed A_{n_a} block (n_x rows), ``m2`` everything else
    with any polynomial nuisance rows last; one column per frequency bin in
    ``band``.  ``freqs`` are the band's frequency values.
    """

    m1: np.ndarray
    m2: np.ndarray
    freqs: np.ndarray
    band: np.ndarray
    structure: ModelStructure
    length: float
    n_poly: int = 0

    @property
    def model_rows(self) -> np.ndarray:
        rows = self.m2.shape[0] - self.n_poly
        return np.vstack([self.m1, self.m2[:rows]])


@dataclass(frozen=True)
class EstimateReport:
    theta_hat: ModelParams
    residual_l2: float
    per_frequency_residual: Spectrum
    wall_time: float
    method: str
    imag_norm: float = 0.0
    poly_coeffs: np.ndarray | None = None
    band: np.ndarray | None = None


def _model_blocks(x_spec: Spectrum, u_spec: Spectrum,
                  x_corr: CorrectionSet | None, u_corr: CorrectionSet | None,
                  structure: ModelStructure, band: np.ndarray) -> list[np.ndarray]:
    """Rows [L_{n_a}; ..; L_0; -R_{n_b}; ..; -R_0] restricted to the band.

    ``None`` corrections mean the uncorrected (rectangular / polynomial
    baseline) route; a provided set must cover every required order.
    """
    freqs = x_spec.freqs[band]
    D = 2j * np.pi * freqs
    xw = x_spec.coeffs[:, band]
    uw = u_spec.coeffs[:, band]
    blocks = []
    for i in range(structure.n_a, -1, -1):
        block = (D**i) * xw if i > 0 else xw.copy()
        if i >= 1 and x_corr is not None:
            if i not in x_corr.orders:
                raise ValueError(f"missing state correction of order {i}")
            block = block - x_corr.spectrum(i).coeffs[:, band]
        blocks.append(block)
    for k in range(structure.n_b, -1, -1):
        block = (D**k) * uw if k > 0 else uw.copy()
        if k >= 1 and u_corr is not None:
            if k not in u_corr.orders:
                raise ValueError(f"missing input correction of order {k}")
            block = block - u_corr.spectrum(k).coeffs[:, band]
        blocks.append(-block)
    return blocks


def _poly_rows(freqs: np.ndarray, n_p: int) -> np.ndarray:
    """Chebyshev rows spanning polynomials of degree < n_p over the band.

    Same span as monomials in D(f) with complex coefficients, but the
    Chebyshev parametrization stays numerically full-rank at n_p = 50 where
    scaled monomials fall below the rank tolerance.
    """
    scale = np.abs(freqs).max()
    xi = freqs / scale if scale > 0 else freqs
    rows = np.polynomial.chebyshev.chebvander(xi, n_p - 1).T
    return -rows.astype(complex)


def _check_band(band, n_bins: int) -> np.ndarray:
    if band is None:
        return np.arange(n_bins)
    band = np.asarray(band, dtype=int)
    if band.size == 0:
        raise ValueError("empty frequency band")
    if band.min() < 0 or band.max() >= n_bins:
        raise ValueError("band indices outside the spectrum")
    return band


def assemble_regression(x_spec: Spectrum, u_spec: Spectrum,
                        x_corr: CorrectionSet | None, u_corr: CorrectionSet | None,
                        structure: ModelStructure,
                        band=None) -> RegressionSystem:
    """Stack the corrected regression; M1 is the fixed highest-order block."""
    band = _check_band(band, x_spec.num_bins)
    if u_spec.num_bins != x_spec.num_bins:
        raise ValueError("state and input spectra live on different grids")
    if structure.n_a >= 1 and x_corr is None:
        raise ValueError("missing state corrections (use zero_corrections for "
                         "the deliberately uncorrected route)")
    if structure.n_b >= 1 and u_corr is None:
        raise ValueError("missing input corrections")
    blocks = _model_blocks(x_spec, u_spec, x_corr, u_corr, structure, band)
    M = np.vstack(blocks)
    n_x = structure.n_x
    return RegressionSystem(m1=M[:n_x], m2=M[n_x:], freqs=x_spec.freqs[band],
                            band=band, structure=structure,
                            length=x_spec.length, n_poly=0)


def residual_spectrum(theta: ModelParams, reg: RegressionSystem) -> Spectrum:
    """Equation residual e(f) = sum_j A_j L_j(f) - sum_k B_k R_k(f)."""
    s = theta.structure
    wide = np.hstack(
        [theta.A[i] for i in range(s.n_a, -1, -1)]
        + [theta.B[k] for k in range(s.n_b, -1, -1)]
    )
    resid = wide @ reg.model_rows
    return Spectrum(length=reg.length, coeffs=resid, freqs=reg.freqs)


def _split_theta(theta2: np.ndarray, structure: ModelStructure, n_poly: int):
    s = structure
    A = []
    pos = 0
    for _ in range(s.n_a):  # blocks A_{n_a-1} .. A_0
        A.append(theta2[:, pos: pos + s.n_x])
        pos += s.n_x
    B = []
    for _ in range(s.n_b + 1):  # blocks B_{n_b} .. B_0
        B.append(theta2[:, pos: pos + s.n_u])
        pos += s.n_u
    poly = theta2[:, pos: pos + n_poly] if n_poly else None
    A_natural = tuple(reversed(A)) + (np.eye(s.n_x),)
    B_natural = tuple(reversed(B))
    return A_natural, B_natural, poly


def solve_ls(reg: RegressionSystem, method: str = "corrected") -> EstimateReport:
    """Least-squares estimate theta_2 = -M1 M2^+ with rank diagnostics."""
    rows, cols = reg.m2.shape
    if cols < rows:
        raise ValueError(
            f"M2 has {cols} frequency columns for {rows} parameter rows; "
            "the regression is underdetermined"
        )
    t0 = time.perf_counter()
    u, s, vh = np.linalg.svd(reg.m2, full_matrices=False)
    rank = 0 if s[0] == 0.0 else int(np.sum(s > RANK_RTOL * s[0]))
    if rank < rows:
        ratio = s[-1] / s[0] if s[0] > 0 else 0.0
        raise RankDeficiencyError(
            f"numerical rank {rank} below parameter row count {rows} "
            f"(smallest singular value ratio {ratio:.2e})"
        )
    pinv = (vh.conj().T / s) @ u.conj().T
    theta2 = -reg.m1 @ pinv
    wall = time.perf_counter() - t0
    A, B, poly = _split_theta(theta2, reg.structure, reg.n_poly)
    imag_norm = float(
        np.sqrt(sum(np.linalg.norm(m.imag) ** 2 for m in A[:-1])
                + sum(np.linalg.norm(m.imag) ** 2 for m in B))
    )
    theta_hat = ModelParams(
        structure=reg.structure,
        A=tuple(m.real if np.iscomplexobj(m) else m for m in A),
        B=tuple(m.real for m in B),
    )
    fit_resid = theta2 @ reg.m2 + reg.m1
    norms = np.sqrt((np.abs(fit_resid) ** 2).sum(axis=0))
    resid_l2 = float(np.sqrt((norms**2).sum() / reg.length))
    per_freq = Spectrum(length=reg.length, coeffs=norms.astype(complex),
                        freqs=reg.freqs)
    return EstimateReport(
        theta_hat=theta_hat, residual_l2=resid_l2,
        per_frequency_residual=per_freq, wall_time=wall, method=method,
        imag_norm=imag_norm,
        poly_coeffs=None if poly is None else np.asarray(poly),
        band=reg.band,
    )


def ps_baseline(x_spec_rect: Spectrum, u_spec_rect: Spectrum,
                structure: ModelStructure, n_p: int,
                band=None) -> EstimateReport:
    """Rectangular-window estimation with n_p polynomial transient terms.

    Each output gets its own coefficient per polynomial row, so n_p rows add
    n_p * n_x estimated nuisance parameters (order 50 on the benchmark adds
    250).  n_p = 0 is the naive estimator that ignores the spurious inputs.
    """
    if n_p < 0:
        raise ValueError("polynomial order must be >= 0")
    band = _check_band(band, x_spec_rect.num_bins)
    blocks = _model_blocks(x_spec_rect, u_spec_rect, None, None, structure, band)
    if n_p > 0:
        blocks.append(_poly_rows(x_spec_rect.freqs[band], n_p))
    M = np.vstack(blocks)
    n_x = structure.n_x
    reg = RegressionSystem(m1=M[:n_x], m2=M[n_x:], freqs=x_spec_rect.freqs[band],
                           band=band, structure=structure,
                           length=x_spec_rect.length, n_poly=n_p)
    return solve_ls(reg, method="ps" if n_p > 0 else "naive")


def mixed_identify(x_spec: Spectrum, u_spec: Spectrum,
                   x_corr: CorrectionSet | None, u_corr: CorrectionSet | None,
                   structure: ModelStructure, n_p: int,
                   band=None) -> EstimateReport:
    """Corrected regression augmented with polynomial terms (n_p = 0 reduces
    exactly to the corrected method)."""
    band = _check_band(band, x_spec.num_bins)
    blocks = _model_blocks(x_spec, u_spec, x_corr, u_corr, structure, band)
    if n_p > 0:
        blocks.append(_poly_rows(x_spec.freqs[band], n_p))
    M = np.vstack(blocks)
    n_x = structure.n_x
    reg = RegressionSystem(m1=M[:n_x], m2=M[n_x:], freqs=x_spec.freqs[band],
                           band=band, structure=structure,
                           length=x_spec.length, n_poly=n_p)
    return solve_ls(reg, method="mixed")


def identify_from_signals(x_sig: Signal, u_sig: Signal, structure: ModelStructure,
                          method: str = "corrected",
                          window_spec: WindowSpec | None = None,
                          n_p: int = 0, band=None,
                          endpoint_average: bool = False,
                          table=None) -> EstimateReport:
    """One-shot estimation from sampled records.

    Times the whole per-dataset pipeline (windowing, transforms, correction
    recurrence, assembly, solve).  Window-derivative tables count as
    precomputed design artifacts and may be passed in; building one here is
    excluded from the reported wall time.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if method in ("corrected", "mixed"):
        if window_spec is None and table is None:
            raise ValueError(f"method {method!r} needs a window")
        if table is None:
            table = window_table(window_spec, x_sig.num_samples,
                                 max(structure.n_a, structure.n_b))
        t0 = time.perf_counter()
        xw = fft_spectrum(apply_window(x_sig, table, 0),
                          endpoint_average=endpoint_average)
        uw = fft_spectrum(apply_window(u_sig, table, 0),
                          endpoint_average=endpoint_average)
        x_corr = correction_spectra(x_sig, table, structure.n_a, two_sided=True,
                                    endpoint_average=endpoint_average,
                                    source="state")
        u_corr = correction_spectra(u_sig, table, structure.n_b, two_sided=True,
                                    endpoint_average=endpoint_average,
                                    source="input")
        if method == "corrected":
            reg = assemble_regression(xw, uw, x_corr, u_corr, structure, band)
            report = solve_ls(reg, method="corrected")
        else:
            report = mixed_identify(xw, uw, x_corr, u_corr, structure, n_p, band)
    else:  # ps / naive: rectangular window, no corrections
        if method == "naive":
            n_p = 0
        t0 = time.perf_counter()
        xw = fft_spectrum(x_sig, endpoint_average=endpoint_average)
        uw = fft_spectrum(u_sig, endpoint_average=endpoint_average)
        report = ps_baseline(xw, uw, structure, n_p, band)
    return replace(report, wall_time=time.perf_counter() - t0)
