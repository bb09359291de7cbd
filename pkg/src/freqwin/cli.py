"""Command-line front end.

Subcommands: simulate | identify | window | sweep | montecarlo | overlap.
Every run writes its fully resolved configuration next to its outputs so
results are reproducible from the saved file alone.  A flat key = value
config file can seed any subcommand's defaults; explicit flags win.

Exit codes: 0 success, 2 configuration/usage errors, 3 numeric failures.
Worker count for sweep/montecarlo fan-out comes from FREQWIN_WORKERS.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import bench, io, metrics
from .identify import RankDeficiencyError
from .simulate import add_noise
from .windows import f_err, overlap_variance, window_spectrum, window_table

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

FMT = "%.17g"


class ConfigError(Exception):
    pass


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("FREQWIN_WORKERS", "1")))
    except ValueError:
        return 1


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_config(out: Path, name: str, args, fields) -> None:
    resolved = {k: getattr(args, k) for k in fields}
    resolved["command"] = name
    io.write_resolved_config(out / "run_config.txt", resolved)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


def _merge_config_file(args, argv) -> None:
    """Overlay config-file values onto parsed args; explicit flags win."""
    if not getattr(args, "config", None):
        return
    try:
        values = io.read_config_file(args.config)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    given = {tok.split("=", 1)[0] for tok in argv if tok.startswith("--")}
    for key, value in values.items():
        flag = "--" + key.replace("_", "-")
        if flag in given or not hasattr(args, key):
            continue
        setattr(args, key, value)


def _parse_fs_list(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v]


def _dataset_from_args(args) -> bench.Dataset:
    return bench.reference_dataset(seed=int(args.seed),
                                   length=float(args.length),
                                   fine_rate=int(args.fine_rate))


def cmd_simulate(args) -> int:
    out = _out_dir(args)
    dataset = _dataset_from_args(args)
    f_s = float(args.fs)
    x, u = dataset.decimated(f_s)
    sigma = float(args.sigma)
    if sigma > 0:
        x = add_noise(x, sigma, dataset.seed, trial=0)
        u = add_noise(u, sigma, dataset.seed, trial=500000)
    io.write_signal_csv(out / "x.csv", x)
    io.write_signal_csv(out / "u.csv", u)
    io.write_truth_json(out / "truth.json", dataset.theta_true, dataset.forcing,
                        seeds={"root": dataset.seed})
    _write_config(out, "simulate", args,
                  ["seed", "fs", "sigma", "length", "fine_rate"])
    print(f"wrote x.csv, u.csv, truth.json to {out}")
    return EXIT_OK


def cmd_identify(args) -> int:
    out = _out_dir(args)
    x = io.read_signal_csv(args.x, length=float(args.length))
    u = io.read_signal_csv(args.u, length=float(args.length))
    window = bench.parse_window(args.window) if args.window else None
    from .identify import ModelStructure

    structure = ModelStructure(n_x=x.num_channels, n_u=u.num_channels,
                               n_a=int(args.na), n_b=int(args.nb))
    band = None
    if args.f_min is not None or args.f_max is not None:
        from .spectral import fft_spectrum

        freqs = fft_spectrum(x).freqs
        lo = float(args.f_min) if args.f_min is not None else -np.inf
        hi = float(args.f_max) if args.f_max is not None else np.inf
        band = np.where((np.abs(freqs) >= lo) & (np.abs(freqs) <= hi))[0]
    from .identify import identify_from_signals

    report = identify_from_signals(
        x, u, structure, method=args.method, window_spec=window,
        n_p=int(args.np), band=band,
        endpoint_average=bool(args.endpoint_average))
    io.write_report_json(out / "report.json", report,
                         window=args.window, seeds={})
    res = report.per_frequency_residual
    _write_csv(out / "residual.csv", ["f", "residual_norm"],
               list(zip(res.freqs.tolist(), np.abs(res.coeffs[0]).tolist())))
    if args.truth:
        theta_true = io.read_truth_json(args.truth)
        err = metrics.param_error(theta_true, report.theta_hat)
        print(f"parameter error vs truth: {err:.6e}")
    _write_config(out, "identify", args,
                  ["x", "u", "method", "window", "np", "na", "nb", "length",
                   "endpoint_average"])
    print(f"method={report.method} residual_l2={report.residual_l2:.6e} "
          f"wall_time={report.wall_time:.4f}s -> {out}")
    return EXIT_OK


def cmd_window(args) -> int:
    out = _out_dir(args)
    spec = bench.parse_window(args.window)
    n = int(args.samples)
    max_deriv = 0 if spec.family == "rectangular" else int(args.max_deriv)
    table = window_table(spec, n, max_deriv)
    t = np.arange(n) * spec.length / n
    header = ["t"] + [f"d{k}" for k in range(max_deriv + 1)]
    _write_csv(out / "window.csv", header,
               [[t[j]] + table.samples[:, j].tolist() for j in range(n)])
    spectrum = window_spectrum(spec, 0, f_max=float(args.f_max) / spec.length)
    io.write_spectrum_csv(out / "spectrum.csv", spectrum)
    rows = []
    for k in range(max_deriv + 1):
        for p in (1e-3, 1e-6, 1e-12):
            val = f_err(spec, k, p)
            rows.append([k, p, (">10000" if not np.isfinite(val)
                                else val * spec.length)])
    with open(out / "ferr.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["deriv", "p", "f_err_over_T"])
        writer.writerows(rows)
    _write_config(out, "window", args, ["window", "samples", "max_deriv", "f_max"])
    print(f"wrote window.csv, spectrum.csv, ferr.csv to {out}")
    return EXIT_OK


# Fan-out state: the simulated dataset is installed once per worker process
# (or once in-process for serial runs) instead of travelling with every job.
_POOL_DATASET = None


def _init_pool(dataset) -> None:
    global _POOL_DATASET
    _POOL_DATASET = dataset


def _sweep_one(payload):
    f_s, method, window_text, n_p, probe = payload
    window = bench.parse_window(window_text) if window_text else None
    return bench.sweep_rates(_POOL_DATASET, [f_s], method, window, n_p=n_p,
                             probe_freq=probe)[0]


def cmd_sweep(args) -> int:
    out = _out_dir(args)
    dataset = _dataset_from_args(args)
    rates = _parse_fs_list(args.fs_list)
    windows = [w for w in str(args.windows).split(",") if w]
    n_p = int(args.np)
    jobs = [(f_s, args.method, w, n_p, float(args.probe_freq))
            for w in windows for f_s in rates]
    workers = _workers()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_pool,
                                 initargs=(dataset,)) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        _init_pool(dataset)
        results = [_sweep_one(j) for j in jobs]
    _write_csv(out / "sweep.csv",
               ["fs", "method", "window", "residual_probe", "residual_l2",
                "param_error", "wall_time"],
               [[r.swept_value, r.method, r.window, r.residual_probe,
                 r.residual_l2, r.param_error, r.wall_time] for r in results])
    _write_config(out, "sweep", args,
                  ["seed", "fs_list", "windows", "method", "np", "probe_freq",
                   "length", "fine_rate"])
    print(f"wrote sweep.csv ({len(results)} rows) to {out}")
    return EXIT_OK


def _mc_one(payload):
    f_s, sigma, trial, method, window_text, n_p = payload
    window = bench.parse_window(window_text) if window_text else None
    report = bench.estimate(_POOL_DATASET, f_s, method, window, n_p=n_p,
                            sigma=sigma, noise_trial=trial)
    return trial, report


def cmd_montecarlo(args) -> int:
    out = _out_dir(args)
    dataset = _dataset_from_args(args)
    f_s = float(args.fs)
    sigma = float(args.sigma)
    trials = int(args.trials)
    windows = [w for w in str(args.windows).split(",") if w]
    rows = []
    for window_text in windows:
        jobs = [(f_s, sigma, k, args.method, window_text, int(args.np))
                for k in range(trials)]
        workers = _workers()
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers, initializer=_init_pool,
                                     initargs=(dataset,)) as pool:
                reports = [r for _, r in sorted(pool.map(_mc_one, jobs),
                                                key=lambda kr: kr[0])]
        else:
            _init_pool(dataset)
            reports = [r for _, r in map(_mc_one, jobs)]
        err_curve, std_curve = metrics.ensemble_stats(reports, dataset.theta_true)
        for k in range(trials):
            rows.append([window_text, k + 1, err_curve[k], std_curve[k],
                         metrics.param_error(dataset.theta_true,
                                             reports[k].theta_hat)])
    _write_csv(out / "ensemble.csv",
               ["window", "k", "cummean_error", "param_std", "trial_error"],
               rows)
    _write_config(out, "montecarlo", args,
                  ["seed", "fs", "sigma", "trials", "windows", "method", "np",
                   "length", "fine_rate"])
    print(f"wrote ensemble.csv ({len(rows)} rows) to {out}")
    return EXIT_OK


def cmd_overlap(args) -> int:
    out = _out_dir(args)
    windows = [w for w in str(args.windows).split(",") if w]
    taus = np.arange(float(args.tau_min), float(args.tau_max) + 1e-12,
                     float(args.tau_step))
    base_windows = int(args.num_windows)  # windows at zero overlap = L / T
    rows = []
    for text in windows:
        spec = bench.parse_window(text)
        for tau in taus:
            # fixed data length L = base_windows * T; windows that fit
            k = int(np.floor((base_windows - 1) / (1.0 - tau))) + 1
            var = overlap_variance(spec, float(tau), k)
            var0 = overlap_variance(spec, 0.0, base_windows)
            rows.append([text, float(tau), k, var, var / var0])
    _write_csv(out / "overlap.csv",
               ["window", "tau", "num_windows", "variance", "normalized"],
               rows)
    _write_config(out, "overlap", args,
                  ["windows", "tau_min", "tau_max", "tau_step", "num_windows"])
    print(f"wrote overlap.csv ({len(rows)} rows) to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freqwin",
        description="Frequency-domain ODE identification with windowing corrections")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--out", default="out", help="output directory")

    p = sub.add_parser("simulate", help="generate the benchmark dataset")
    common(p)
    p.add_argument("--preset", default="paper", choices=["paper"])
    p.add_argument("--seed", default=bench.REF_SEED)
    p.add_argument("--fs", default=bench.REF_FS)
    p.add_argument("--sigma", default=0.0)
    p.add_argument("--length", default=bench.REF_LENGTH)
    p.add_argument("--fine-rate", dest="fine_rate", default=bench.REF_FINE_RATE)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("identify", help="estimate parameters from CSV records")
    common(p)
    p.add_argument("--x", required=True)
    p.add_argument("--u", required=True)
    p.add_argument("--truth")
    p.add_argument("--method", default="corrected",
                   choices=["corrected", "ps", "mixed", "naive"])
    p.add_argument("--window", default="cinf:4")
    p.add_argument("--np", default=0, help="polynomial transient order")
    p.add_argument("--na", default=1, help="highest state-derivative order")
    p.add_argument("--nb", default=0, help="highest input-derivative order")
    p.add_argument("--length", default=bench.REF_LENGTH)
    p.add_argument("--f-min", dest="f_min", default=None)
    p.add_argument("--f-max", dest="f_max", default=None)
    p.add_argument("--endpoint-average", dest="endpoint_average",
                   action="store_true")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("window", help="window samples, spectrum, f_err table")
    common(p)
    p.add_argument("--window", required=True)
    p.add_argument("--samples", default=4096)
    p.add_argument("--max-deriv", dest="max_deriv", default=3)
    p.add_argument("--f-max", dest="f_max", default=128)
    p.set_defaults(func=cmd_window)

    p = sub.add_parser("sweep", help="sampling-rate sweep")
    common(p)
    p.add_argument("--seed", default=bench.REF_SEED)
    p.add_argument("--fs-list", dest="fs_list",
                   default="128,192,256,384,512,768")
    p.add_argument("--windows", default="sin:1,sin:2,sin:3,sin:4")
    p.add_argument("--method", default="corrected",
                   choices=["corrected", "ps", "mixed", "naive"])
    p.add_argument("--np", default=0)
    p.add_argument("--probe-freq", dest="probe_freq", default=2.0)
    p.add_argument("--length", default=bench.REF_LENGTH)
    p.add_argument("--fine-rate", dest="fine_rate", default=bench.REF_FINE_RATE)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("montecarlo", help="noise ensemble at fixed rate")
    common(p)
    p.add_argument("--seed", default=bench.REF_SEED)
    p.add_argument("--fs", default=bench.REF_FS)
    p.add_argument("--sigma", default=1e-2)
    p.add_argument("--trials", default=100)
    p.add_argument("--windows", default="sin:1,cinf:4")
    p.add_argument("--method", default="corrected",
                   choices=["corrected", "ps", "mixed", "naive"])
    p.add_argument("--np", default=0)
    p.add_argument("--length", default=bench.REF_LENGTH)
    p.add_argument("--fine-rate", dest="fine_rate", default=bench.REF_FINE_RATE)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("overlap", help="overlap-variance curves")
    common(p)
    p.add_argument("--windows", default="rect,sin:1,sin:2,sin:3,sin:4,poly:6")
    p.add_argument("--tau-min", dest="tau_min", default=0.0)
    p.add_argument("--tau-max", dest="tau_max", default=0.95)
    p.add_argument("--tau-step", dest="tau_step", default=0.05)
    p.add_argument("--num-windows", dest="num_windows", default=20)
    p.set_defaults(func=cmd_overlap)

    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _merge_config_file(args, argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RankDeficiencyError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
