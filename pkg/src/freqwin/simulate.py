"""Synthetic benchmark generation: random systems, multisine forcing, RK4.

All randomness flows through the counter-based Philox (4x64-10) bit
generator so streams are reproducible across platforms; sub-streams are
keyed as ``root_seed * 2^32 + component`` with documented component ids.

The integrator is classical fixed-step RK4 specialized to the linear system
dz/dt = A z + c(t): the per-step stage combination collapses to constant
matrices applied to the state and to the forcing at the step endpoints and
midpoint.  Those matrices and the state recurrence are carried in extended
precision (complex long double where the platform has one) because over
~1e5 sequential steps plain double rounding otherwise leaves a systematic
1e-11-level error floor that masks the windowing behavior under study.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .identify import ModelParams, ModelStructure
from .spectral import Signal

COMPONENT_SYSTEM = 1
COMPONENT_FORCING = 2
COMPONENT_INIT = 3
COMPONENT_NOISE = 1000  # plus trial index

# spectral-abscissa window for accepted random dynamics (see random_system)
EIG_REAL_MIN = -25.0
EIG_REAL_MAX = 5.0

_LONG = np.complex256 if hasattr(np, "complex256") else np.complex128


def rng_for(root_seed: int, component: int) -> np.random.Generator:
    """Philox generator for a documented (root seed, component) pair."""
    return np.random.Generator(np.random.Philox(key=root_seed * 2**32 + component))


@dataclass(frozen=True)
class ForcingSpec:
    """Complex multisine u(t) = sum_j a_j exp(2 pi i f_j t) per channel."""

    amplitudes: np.ndarray  # (n_channels, n_tones)
    freqs: np.ndarray  # strictly increasing, Hz
    seed: int | None = None

    def __post_init__(self):
        amps = np.atleast_2d(np.asarray(self.amplitudes, dtype=complex))
        freqs = np.asarray(self.freqs, dtype=float)
        if freqs.ndim != 1 or freqs.size < 1:
            raise ValueError("need at least one tone")
        if np.any(np.diff(freqs) <= 0):
            raise ValueError("tone frequencies must be strictly increasing")
        if amps.shape[1] != freqs.size:
            raise ValueError("one amplitude per channel per tone required")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "freqs", freqs)

    @property
    def num_tones(self) -> int:
        return self.freqs.size

    @property
    def num_channels(self) -> int:
        return self.amplitudes.shape[0]

    def evaluate(self, t, deriv: int = 0) -> np.ndarray:
        """u^(deriv)(t), analytic; shape (n_channels, len(t))."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        om = 2j * np.pi * self.freqs
        phases = np.exp(np.outer(om, t))
        return (self.amplitudes * om[np.newaxis, :] ** deriv) @ phases


def multisine(n_f: int, f_min: float, f_max: float, seed: int,
              n_channels: int = 1) -> ForcingSpec:
    """Uniformly spaced tones on [f_min, f_max] with seeded complex amplitudes
    (real and imaginary parts standard normal)."""
    if n_f < 1:
        raise ValueError("need at least one tone")
    if n_f == 1:
        freqs = np.array([float(f_min)])
        if f_max != f_min:
            raise ValueError("a single tone needs f_min == f_max")
    else:
        freqs = np.linspace(f_min, f_max, n_f)
    rng = rng_for(seed, COMPONENT_FORCING)
    amps = rng.standard_normal((n_channels, n_f)) + 1j * rng.standard_normal((n_channels, n_f))
    return ForcingSpec(amplitudes=amps, freqs=freqs, seed=seed)


@dataclass(frozen=True)
class SimConfig:
    """Integration setup: step dt over [0, T], decimated to n_out samples."""

    structure: ModelStructure
    dt: float
    length: float
    seed: int = 0
    x0: np.ndarray | None = None
    sigma: float = 0.0
    n_out: int | None = None

    def __post_init__(self):
        if self.dt <= 0 or self.length <= 0:
            raise ValueError("dt and length must be positive")
        steps = self.length / self.dt
        if abs(steps - round(steps)) > 1e-9 * steps:
            raise ValueError("dt must divide the record length")
        if self.n_out is not None:
            stride = round(steps) / self.n_out
            if abs(stride - round(stride)) > 1e-9:
                raise ValueError("dt is not commensurate with the output grid")

    @property
    def num_steps(self) -> int:
        return int(round(self.length / self.dt))


def random_system(structure: ModelStructure, seed: int) -> ModelParams:
    """Standard-normal coefficient matrices with A_{n_a} fixed to identity.

    The companion dynamics matrix is redrawn until every eigenvalue real
    part lies in [EIG_REAL_MIN, EIG_REAL_MAX], keeping records representable
    over O(1) horizons without biasing the typical draw (rejections are rare
    for the benchmark sizes).
    """
    rng = rng_for(seed, COMPONENT_SYSTEM)
    s = structure
    B = tuple(rng.standard_normal((s.n_x, s.n_u)) for _ in range(s.n_b + 1))
    while True:
        A_low = [rng.standard_normal((s.n_x, s.n_x)) for _ in range(s.n_a)]
        comp = _companion_matrix(A_low, s)
        ev = np.linalg.eigvals(comp)
        if EIG_REAL_MIN <= ev.real.min() and ev.real.max() <= EIG_REAL_MAX:
            break
    A = tuple(A_low) + (np.eye(s.n_x),)
    return ModelParams(structure=s, A=A, B=B)


def _companion_matrix(A_low, structure: ModelStructure) -> np.ndarray:
    """First-order dynamics matrix for z = [x, x', .., x^(n_a - 1)]."""
    n_x, n_a = structure.n_x, structure.n_a
    comp = np.zeros((n_a * n_x, n_a * n_x))
    for i in range(n_a - 1):
        comp[i * n_x: (i + 1) * n_x, (i + 1) * n_x: (i + 2) * n_x] = np.eye(n_x)
    for j, Aj in enumerate(A_low):
        comp[(n_a - 1) * n_x:, j * n_x: (j + 1) * n_x] = -Aj
    return comp


def integrate_rk4(theta: ModelParams, forcing: ForcingSpec,
                  config: SimConfig) -> Signal:
    """Classical fixed-step RK4 state record of the forced linear ODE.

    Systems of derivative order n_a > 1 integrate in companion form (valid
    because A_{n_a} = I); input-derivative terms use the multisine's
    analytic derivatives.  The returned Signal carries the terminal sample
    x(T) so endpoint averaging stays available downstream.
    """
    s = theta.structure
    if forcing.num_channels != s.n_u:
        raise ValueError("forcing channel count must match the input dimension")
    if not np.allclose(theta.A[s.n_a], np.eye(s.n_x)):
        raise ValueError("integration assumes the normalization A_{n_a} = I")
    n_steps = config.num_steps
    h = np.longdouble(config.length) / np.longdouble(n_steps)
    dim = s.n_a * s.n_x

    A = _companion_matrix(list(theta.A[: s.n_a]), s).astype(_LONG)
    # forcing enters the top-derivative block: sum_k B_k u^(k)(t)
    t_half = np.arange(2 * n_steps + 1) * (config.length / (2 * n_steps))
    drive = np.zeros((s.n_x, t_half.size), dtype=complex)
    for k in range(s.n_b + 1):
        drive += theta.B[k] @ forcing.evaluate(t_half, deriv=k)
    C = np.zeros((dim, t_half.size), dtype=complex)
    C[(s.n_a - 1) * s.n_x:, :] = drive

    A2 = A @ A
    A3 = A2 @ A
    A4 = A3 @ A
    eye = np.eye(dim, dtype=_LONG)
    phi = eye + h * A + h**2 / 2 * A2 + h**3 / 6 * A3 + h**4 / 24 * A4
    psi_start = h / 6 * eye + h**2 / 6 * A + h**3 / 12 * A2 + h**4 / 24 * A3
    psi_mid = 2 * h / 3 * eye + h**2 / 3 * A + h**3 / 12 * A2
    psi_end = h / 6 * eye

    G = (psi_start @ C[:, 0:-2:2].astype(_LONG)
         + psi_mid @ C[:, 1:-1:2].astype(_LONG)
         + psi_end @ C[:, 2::2].astype(_LONG))

    if config.x0 is None:
        rng = rng_for(config.seed, COMPONENT_INIT)
        x0 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    else:
        x0 = np.asarray(config.x0, dtype=complex)
        if x0.shape == (s.n_x,) and dim != s.n_x:
            full = np.zeros(dim, dtype=complex)
            full[: s.n_x] = x0
            x0 = full
        if x0.shape != (dim,):
            raise ValueError(f"x0 must have companion dimension {dim}")

    states = np.empty((dim, n_steps + 1), dtype=complex)
    states[:, 0] = x0
    z = x0.astype(_LONG)
    check_every = 4096
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(n_steps):
            z = phi @ z + G[:, n]
            states[:, n + 1] = z.astype(np.complex128)
            if (n + 1) % check_every == 0 and not np.isfinite(states[:, n + 1]).all():
                raise RuntimeError(
                    f"state blew up near t = {(n + 1) * float(h):.6g}")
    if not np.isfinite(states).all():
        bad = np.argwhere(~np.isfinite(states).all(axis=0))[0, 0]
        raise RuntimeError(f"state blew up near t = {bad * float(h):.6g}")

    x = states[: s.n_x]
    out = Signal(length=config.length, values=x[:, :n_steps], terminal=x[:, n_steps])
    if config.n_out is not None and config.n_out != n_steps:
        out = resample(out, config.n_out)
    return out


def sample_forcing(forcing: ForcingSpec, length: float, num_samples: int) -> Signal:
    """Forcing record on the uniform grid, terminal sample included."""
    t = np.arange(num_samples + 1) * (length / num_samples)
    vals = forcing.evaluate(t)
    return Signal(length=length, values=vals[:, :num_samples],
                  terminal=vals[:, num_samples])


def add_noise(signal: Signal, sigma: float, seed: int, trial: int = 0) -> Signal:
    """White Gaussian noise, standard deviation sigma per real/imag part."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0.0:
        return signal
    rng = rng_for(seed, COMPONENT_NOISE + trial)
    shape = signal.values.shape
    noise = sigma * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    term = None
    if signal.terminal is not None:
        nt = sigma * (rng.standard_normal(signal.num_channels)
                      + 1j * rng.standard_normal(signal.num_channels))
        term = signal.terminal + nt
    return Signal(length=signal.length, values=signal.values + noise, terminal=term)


def resample(signal: Signal, target_num: int) -> Signal:
    """Exact decimation by an integer stride."""
    if target_num < 2:
        raise ValueError("target sample count must be >= 2")
    stride, rem = divmod(signal.num_samples, target_num)
    if rem != 0:
        raise ValueError(
            f"cannot decimate {signal.num_samples} samples to {target_num}: "
            "non-integer stride"
        )
    return Signal(length=signal.length, values=signal.values[:, ::stride],
                  terminal=signal.terminal)
