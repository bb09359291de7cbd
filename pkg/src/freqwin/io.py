"""CSV and JSON formats shared by the CLI and tests.

Signal CSV: header ``t,ch0_re,ch0_im,ch1_re,...`` one row per sample.
Spectrum CSV: header ``f,ch0_re,ch0_im,...`` one row per bin.
All floats are written with 17 significant digits so downstream slope fits
are not quantization-limited.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .identify import EstimateReport, ModelParams, ModelStructure
from .spectral import Signal, Spectrum

FMT = "%.17g"


def write_signal_csv(path, signal: Signal) -> None:
    n_c = signal.num_channels
    header = "t," + ",".join(f"ch{c}_re,ch{c}_im" for c in range(n_c))
    cols = [signal.times]
    for c in range(n_c):
        cols.append(signal.values[c].real)
        cols.append(signal.values[c].imag)
    np.savetxt(path, np.column_stack(cols), delimiter=",", header=header,
               comments="", fmt=FMT)


def read_signal_csv(path, length: float | None = None) -> Signal:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = data[:, 0]
    n_c = (data.shape[1] - 1) // 2
    values = np.empty((n_c, data.shape[0]), dtype=complex)
    for c in range(n_c):
        values[c] = data[:, 1 + 2 * c] + 1j * data[:, 2 + 2 * c]
    if length is None:
        # uniform grid t_j = j T / N implies T = N * dt
        dt = t[1] - t[0]
        length = dt * data.shape[0]
    return Signal(length=length, values=values)


def write_spectrum_csv(path, spectrum: Spectrum) -> None:
    n_c = spectrum.num_channels
    header = "f," + ",".join(f"ch{c}_re,ch{c}_im" for c in range(n_c))
    cols = [spectrum.freqs]
    for c in range(n_c):
        cols.append(spectrum.coeffs[c].real)
        cols.append(spectrum.coeffs[c].imag)
    np.savetxt(path, np.column_stack(cols), delimiter=",", header=header,
               comments="", fmt=FMT)


def _params_payload(theta: ModelParams) -> dict:
    return {
        "structure": {
            "n_x": theta.structure.n_x,
            "n_u": theta.structure.n_u,
            "n_a": theta.structure.n_a,
            "n_b": theta.structure.n_b,
        },
        "A": [{"shape": list(m.shape), "data": m.ravel().tolist()} for m in theta.A],
        "B": [{"shape": list(m.shape), "data": m.ravel().tolist()} for m in theta.B],
    }


def params_from_payload(payload: dict) -> ModelParams:
    s = ModelStructure(**payload["structure"])
    A = tuple(np.array(m["data"]).reshape(m["shape"]) for m in payload["A"])
    B = tuple(np.array(m["data"]).reshape(m["shape"]) for m in payload["B"])
    return ModelParams(structure=s, A=A, B=B)


def write_report_json(path, report: EstimateReport, window: str | None = None,
                      seeds: dict | None = None, extra: dict | None = None) -> None:
    payload = {
        "method": report.method,
        "theta_hat": _params_payload(report.theta_hat),
        "residual_l2": report.residual_l2,
        "imag_norm": report.imag_norm,
        "wall_time": report.wall_time,
        "band": None if report.band is None else np.asarray(report.band).tolist(),
        "window": window,
        "seeds": seeds or {},
    }
    if report.poly_coeffs is not None:
        payload["poly_coeffs"] = {
            "shape": list(report.poly_coeffs.shape),
            "re": report.poly_coeffs.real.ravel().tolist(),
            "im": report.poly_coeffs.imag.ravel().tolist(),
        }
    if extra:
        payload.update(extra)
    Path(path).write_text(json.dumps(payload, indent=2))


def write_truth_json(path, theta: ModelParams, forcing, seeds: dict) -> None:
    payload = {
        "theta": _params_payload(theta),
        "forcing": {
            "freqs": forcing.freqs.tolist(),
            "amplitudes_re": forcing.amplitudes.real.ravel().tolist(),
            "amplitudes_im": forcing.amplitudes.imag.ravel().tolist(),
            "n_channels": forcing.num_channels,
        },
        "seeds": seeds,
    }
    Path(path).write_text(json.dumps(payload, indent=2))


def read_truth_json(path) -> ModelParams:
    payload = json.loads(Path(path).read_text())
    return params_from_payload(payload["theta"])


def write_resolved_config(path, config: dict) -> None:
    """Flat key = value text file, one entry per line."""
    lines = [f"{k} = {config[k]}" for k in sorted(config)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_config_file(path) -> dict:
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line: {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out
