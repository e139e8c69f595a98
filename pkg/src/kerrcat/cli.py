"""Command-line front end: params, qsurface, evolve, validate, sweep.

Configuration is a single JSON document (schema below); every output file
embeds the artifact version and a digest of the resolved configuration so
repeated runs are byte-identical. Exit codes: 0 success, 2 configuration
error, 3 numerical failure (cutoff leak, divergence, failed check),
4 series-convergence failure.

Config schema (schema_version 1)::

    {
      "schema_version": 1,
      "mode": "dimensionless" | "physical",
      "dimensionless": {"alpha0": [re, im] | number,
                        "gamma_over_mu": number,
                        "detuning_over_mu": number (optional)},
      "physical": {"b_field": tesla, "v0": volt, "d": meter,
                   "temperature": kelvin, "drive_amplitude": volt/meter,
                   "drive_duration": second,
                   "pump_frequency": rad/s | null,
                   "detuning": rad/s | null,
                   "gamma": 1/s, "alpha0_override": [re, im] | null},
      "grid": {"center": [re, im] | number, "half_extent": number,
               "resolution": odd int},
      "cutoff": int | null,
      "output_dir": str | null,
      "seed": int
    }

In dimensionless mode mu = 1 and all times are in units of 1/mu.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys as _sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, analysis, fock, lindblad, trap_params
from .analytic_q import KerrSystem, PhaseGrid, q_surface, grid_normalization
from .errors import (
    ConfigError,
    CutoffLeak,
    CutoffTooSmall,
    InsufficientDecay,
    KerrcatError,
    SeriesNotConverged,
    StepSizeUnstable,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_CONVERGENCE = 4

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration shared by all subcommands."""

    mode: str
    sys: KerrSystem
    derived: trap_params.DerivedParams | None
    grid: PhaseGrid
    cutoff: int
    output_dir: Path
    seed: int
    digest: str
    gamma_over_mu: float


def _as_complex_field(value, name: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"{name} must be a number or [re, im] pair, got {value!r}")


def load_config(path: str, overrides: argparse.Namespace | None = None) -> RunConfig:
    """Parse and validate the JSON config, applying CLI overrides."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema_version {raw.get('schema_version')!r}; expected {SCHEMA_VERSION}"
        )
    mode = raw.get("mode")
    if mode not in ("dimensionless", "physical"):
        raise ConfigError(f"mode must be 'dimensionless' or 'physical', got {mode!r}")
    if mode == "dimensionless" and "physical" in raw:
        raise ConfigError("dimensionless mode must not carry a 'physical' section")
    if mode == "physical" and "dimensionless" in raw:
        raise ConfigError("physical mode must not carry a 'dimensionless' section")

    derived = None
    if mode == "dimensionless":
        sec = raw.get("dimensionless")
        if not isinstance(sec, dict):
            raise ConfigError("dimensionless mode requires a 'dimensionless' section")
        alpha0 = _as_complex_field(sec.get("alpha0", 2.0), "alpha0")
        gamma_over_mu = float(sec.get("gamma_over_mu", 0.0))
        if gamma_over_mu < 0:
            raise ConfigError("gamma_over_mu must be non-negative")
        detuning = float(sec.get("detuning_over_mu", 0.0))
        sys_ = KerrSystem(alpha0=alpha0, mu=1.0, gamma=gamma_over_mu, detuning=detuning)
    else:
        sec = raw.get("physical")
        if not isinstance(sec, dict):
            raise ConfigError("physical mode requires a 'physical' section")
        try:
            trap = trap_params.TrapConfig(
                b_field=float(sec["b_field"]),
                v0=float(sec["v0"]),
                d=float(sec["d"]),
                temperature=float(sec.get("temperature", 4.0)),
                drive_amplitude=float(sec.get("drive_amplitude", 0.0)),
                drive_duration=float(sec.get("drive_duration", 0.0)),
                pump_frequency=(
                    float(sec["pump_frequency"])
                    if sec.get("pump_frequency") is not None
                    else None
                ),
                detuning=(
                    float(sec["detuning"]) if sec.get("detuning") is not None else None
                ),
                gamma=float(sec.get("gamma", 1.0)),
                alpha0_override=(
                    _as_complex_field(sec["alpha0_override"], "alpha0_override")
                    if sec.get("alpha0_override") is not None
                    else None
                ),
            )
        except KeyError as exc:
            raise ConfigError(f"physical section missing field {exc}") from exc
        except KerrcatError as exc:
            raise ConfigError(str(exc)) from exc
        derived = trap_params.derive(trap)
        sys_ = KerrSystem(
            alpha0=derived.alpha0,
            mu=derived.mu,
            gamma=trap.gamma,
            detuning=derived.detuning,
        )
        gamma_over_mu = trap.gamma / derived.mu

    gsec = raw.get("grid") or {}
    half_extent = float(gsec.get("half_extent", abs(sys_.alpha0) + 5.0))
    resolution = int(gsec.get("resolution", 101))
    center = _as_complex_field(gsec.get("center", 0.0), "grid.center")
    if overrides is not None:
        if getattr(overrides, "grid_extent", None) is not None:
            half_extent = overrides.grid_extent
        if getattr(overrides, "grid_res", None) is not None:
            resolution = overrides.grid_res
    try:
        grid = PhaseGrid(center=center, half_extent=half_extent, resolution=resolution)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    cutoff = raw.get("cutoff")
    if overrides is not None and getattr(overrides, "cutoff", None) is not None:
        cutoff = overrides.cutoff
    if cutoff is not None:
        cutoff = int(cutoff)
    else:
        # ten levels of headroom over the state-validity rule so far grid
        # probes reach machine precision, not just the 1e-12 state tolerance
        cutoff = fock.default_cutoff(sys_.alpha0) + 10
    if cutoff < 1:
        raise ConfigError(f"cutoff must be positive, got {cutoff}")

    out = raw.get("output_dir") or "."
    if overrides is not None and getattr(overrides, "out", None) is not None:
        out = overrides.out
    seed = int(raw.get("seed", 0))

    digest_src = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(digest_src.encode()).hexdigest()[:16]
    return RunConfig(
        mode=mode,
        sys=sys_,
        derived=derived,
        grid=grid,
        cutoff=cutoff,
        output_dir=Path(out),
        seed=seed,
        digest=digest,
        gamma_over_mu=gamma_over_mu,
    )


def _fmt(x: float) -> str:
    """Shortest round-trip decimal, capped at 17 significant digits."""
    return repr(float(x))


def _json_ready(value):
    """Map floats/complex to JSON-safe values; inf becomes the string 'inf'."""
    if isinstance(value, complex):
        return [_json_ready(value.real), _json_ready(value.imag)]
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return value
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    return value


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _csv_header(config: RunConfig) -> str:
    return f"# kerrcat {__version__} config={config.digest}\n"


def _initial_density(config: RunConfig) -> fock.DensityOperator:
    return fock.density_from_pure(fock.coherent_state(config.sys.alpha0, config.cutoff))


def _evolved(config: RunConfig, sample_times: tuple) -> list[lindblad.EvolutionRecord]:
    rho0 = _initial_density(config)
    spec = lindblad.EvolutionSpec(
        sys=config.sys,
        cutoff=config.cutoff,
        t_final=sample_times[-1] if sample_times else 0.0,
        sample_times=sample_times,
    )
    return lindblad.evolve(spec, rho0)


def cmd_params(config: RunConfig) -> dict:
    """DerivedParams (physical) or the dimensionless parameter set, as a dict."""
    if config.mode == "dimensionless":
        params = {
            "alpha0": config.sys.alpha0,
            "gamma_over_mu": config.gamma_over_mu,
            "t_cat_mu": math.pi / 2.0,
        }
    else:
        d = config.derived
        params = {
            "omega_c": d.omega_c,
            "cyclotron_frequency_hz": d.omega_c / (2.0 * math.pi),
            "omega_z": d.omega_z,
            "axial_frequency_hz": d.omega_z / (2.0 * math.pi),
            "omega_m": d.omega_m,
            "mu": d.mu,
            "k": d.k,
            "alpha0": d.alpha0,
            "detuning": d.detuning,
            "t_cat": d.t_cat,
            "t_revival": d.t_revival,
            "t_dec": d.t_dec,
            "ratio": d.ratio,
        }
    return {
        "version": __version__,
        "config_digest": config.digest,
        "constants": trap_params.CONSTANTS_VERSION,
        "mode": config.mode,
        "params": params,
    }


def cmd_qsurface(config: RunConfig, t: float, backend: str) -> str:
    """CSV text of Q over the configured grid at time ``t``."""
    if backend == "analytic":
        surface = q_surface(config.grid, t, config.sys)
    elif backend == "numeric":
        if t > 0:
            rho = _evolved(config, (t,))[-1].rho
        else:
            rho = _initial_density(config)
        surface = lindblad.q_from_rho(rho, config.grid, t)
    else:
        raise ConfigError(f"backend must be 'analytic' or 'numeric', got {backend!r}")
    lines = [_csv_header(config), "re_alpha,im_alpha,q\n"]
    re_ax = surface.grid.re_axis()
    im_ax = surface.grid.im_axis()
    for i, im in enumerate(im_ax):
        for j, re in enumerate(re_ax):
            lines.append(f"{_fmt(re)},{_fmt(im)},{_fmt(surface.values[i, j])}\n")
    return "".join(lines)


def cmd_evolve(config: RunConfig, t_final: float, samples: int) -> str:
    """CSV timeseries of the numeric observables."""
    if samples < 1:
        raise ConfigError(f"samples must be at least 1, got {samples}")
    if t_final == 0.0:
        times = (0.0,)
    else:
        times = tuple(float(t) for t in np.linspace(0.0, t_final, samples))
    records = _evolved(config, times)
    lines = [_csv_header(config), "t,mean_n,purity,trace_err,cat_fidelity,coherence\n"]
    for r in records:
        lines.append(
            f"{_fmt(r.time)},{_fmt(r.mean_n)},{_fmt(r.purity)},"
            f"{_fmt(r.trace_error)},{_fmt(r.cat_fidelity)},{_fmt(r.coherence)}\n"
        )
    return "".join(lines)


def _check(name: str, measured: float, tolerance: float) -> dict:
    return {
        "name": name,
        "tolerance": tolerance,
        "measured": measured,
        "pass": bool(measured <= tolerance),
    }


def cmd_validate(config: RunConfig) -> dict:
    """Dual-path and invariant suite. The report lists every check."""
    sys_ = config.sys
    checks = []
    t_cat = math.pi / (2.0 * sys_.mu) if sys_.mu > 0 else 1.0
    pts = config.grid.points()
    gaussian = np.exp(-np.abs(pts - sys_.alpha0) ** 2)

    surf0 = q_surface(config.grid, 0.0, sys_)
    checks.append(
        _check("initial_condition_analytic", float(np.max(np.abs(surf0.values - gaussian))), 1e-10)
    )
    rho0 = _initial_density(config)
    surf0n = lindblad.q_from_rho(rho0, config.grid, 0.0)
    checks.append(
        _check("initial_condition_numeric", float(np.max(np.abs(surf0n.values - gaussian))), 1e-10)
    )

    sample_times = (0.5 * t_cat, t_cat)
    records = _evolved(config, sample_times)
    for label, rec in zip(("t_cat_half", "t_cat"), records):
        ana = q_surface(config.grid, rec.time, sys_)
        num = lindblad.q_from_rho(rec.rho, config.grid, rec.time)
        checks.append(
            _check(f"dual_path_{label}", float(np.max(np.abs(ana.values - num.values))), 1e-6)
        )

    decay_err = max(
        abs(r.mean_n - abs(sys_.alpha0) ** 2 * math.exp(-sys_.gamma * r.time))
        for r in records
    )
    checks.append(_check("energy_decay", float(decay_err), 1e-8))
    checks.append(
        _check("trace_conservation", float(max(r.trace_error for r in records)), 1e-8)
    )
    herm = max(
        float(np.max(np.abs(r.rho.elements - r.rho.elements.conj().T))) for r in records
    )
    checks.append(_check("hermiticity", herm, 1e-10))
    neg = max(
        -float(np.linalg.eigvalsh(r.rho.elements).min()) for r in records
    )
    checks.append(_check("positivity", neg, 1e-9))

    final = records[-1]
    q_min = min(float(surf0.values.min()), float(surf0n.values.min()))
    q_max = max(float(surf0.values.max()), float(surf0n.values.max()))
    checks.append(_check("q_range_low", -q_min, 1e-9))
    checks.append(_check("q_range_high", q_max - 1.0, 1e-9))

    norm_grid = PhaseGrid(
        center=0j, half_extent=abs(sys_.alpha0) + 5.0, resolution=201
    )
    norm = grid_normalization(q_surface(norm_grid, t_cat, sys_))
    checks.append(_check("q_normalization", abs(norm - 1.0), 1e-3))

    w_extent = abs(sys_.alpha0) + 3.0
    w_vals = [w for _, w in analysis.wigner_slice(final.rho, "imaginary", w_extent, 41)]
    w_vals += [w for _, w in analysis.wigner_slice(final.rho, "real", w_extent, 41)]
    checks.append(
        _check("wigner_bound", max(abs(w) for w in w_vals) - 2.0 / math.pi, 1e-9)
    )

    rng = np.random.default_rng(config.seed)
    n_small = 8
    raw = rng.normal(size=(n_small, n_small)) + 1j * rng.normal(size=(n_small, n_small))
    on_band = np.eye(n_small, k=2, dtype=bool)  # single anti-diagonal m - n = -2
    masked = np.where(on_band, raw, 0.0)
    stepped = lindblad.integrate_matrix(
        masked, KerrSystem(alpha0=0.0, mu=sys_.mu, gamma=max(sys_.gamma, 0.1)), 0.1
    )
    off_band = np.where(on_band, 0.0, stepped)
    checks.append(
        _check("band_structure_preserved", float(np.max(np.abs(off_band))), 0.0)
    )

    if sys_.gamma == 0:
        t_rev = 2.0 * math.pi / sys_.mu
        rev = q_surface(config.grid, t_rev, sys_)
        checks.append(
            _check("revival", float(np.max(np.abs(rev.values - surf0.values))), 1e-8)
        )
        half = q_surface(config.grid, math.pi / sys_.mu, sys_)
        mirrored = surf0.values[::-1, ::-1]
        checks.append(
            _check("parity", float(np.max(np.abs(half.values - mirrored))), 1e-8)
        )

    return {
        "version": __version__,
        "config_digest": config.digest,
        "pass": all(c["pass"] for c in checks),
        "checks": checks,
    }


def cmd_sweep(config: RunConfig, alpha0_values, gamma_values) -> str:
    """Cat reports for every (alpha0, gamma) pair, alpha0 outer, gamma inner."""
    lines = [
        _csv_header(config),
        "alpha0,gamma,t_cat,fidelity_at_tcat,wigner_origin,coherence,"
        "t_dec_fitted,t_dec_formula,fit_status\n",
    ]
    for a0 in alpha0_values:
        for g in gamma_values:
            report, status = _one_cat_report(float(a0), float(g))
            lines.append(
                f"{_fmt(abs(report.alpha0))},{_fmt(g)},{_fmt(report.t_cat)},"
                f"{_fmt(report.fidelity_at_tcat)},{_fmt(report.wigner_origin)},"
                f"{_fmt(report.coherence)},{_fmt(report.t_dec_fitted)},"
                f"{_fmt(report.t_dec_formula)},{status}\n"
            )
    return "".join(lines)


def _one_cat_report(a0: float, gamma: float) -> tuple[analysis.CatReport, str]:
    """Kerr run to t_cat plus a damping-only decoherence fit (mu = 1 units)."""
    cutoff = fock.default_cutoff(a0)
    t_cat = math.pi / 2.0
    sys_kerr = KerrSystem(alpha0=a0, mu=1.0, gamma=gamma)
    rec = lindblad.evolve(
        lindblad.EvolutionSpec(
            sys=sys_kerr, cutoff=cutoff, t_final=t_cat, sample_times=(t_cat,)
        ),
        fock.density_from_pure(fock.coherent_state(a0, cutoff)),
    )[-1]

    t_dec_formula = 1.0 / (gamma * a0**2) if gamma > 0 and a0 != 0 else math.inf
    if gamma > 0:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # mu = 0 on purpose: damping only
            sys_damp = KerrSystem(alpha0=a0, mu=0.0, gamma=gamma)
        t_fin = 2.0 * analysis.WINDOW_DEPTH / (a0**2 * gamma)
        times = tuple(float(t) for t in np.linspace(0.0, t_fin, 161))
        damp_records = lindblad.evolve(
            lindblad.EvolutionSpec(
                sys=sys_damp, cutoff=cutoff, t_final=t_fin, sample_times=times
            ),
            fock.density_from_pure(fock.cat_state(a0, cutoff)),
        )
        try:
            t_dec_fitted = analysis.fit_decoherence_time(damp_records)
            status = "ok"
        except InsufficientDecay as exc:
            t_dec_fitted = exc.lower_bound if exc.lower_bound is not None else math.inf
            status = "lower_bound"
    else:
        t_dec_fitted = math.inf
        status = "no_damping"

    report = analysis.CatReport(
        alpha0=complex(a0),
        t_cat=t_cat,
        fidelity_at_tcat=rec.cat_fidelity,
        wigner_origin=fock.wigner(rec.rho, 0.0),
        coherence=rec.coherence,
        t_dec_fitted=t_dec_fitted,
        t_dec_formula=t_dec_formula,
    )
    return report, status


_GNUPLOT_TEMPLATES = {
    "qsurface": (
        "set datafile separator ','\n"
        "set view map\n"
        "set xlabel 're alpha'\n"
        "set ylabel 'im alpha'\n"
        "splot '{csv}' every ::1 using 1:2:3 with points pt 5 ps 0.5 palette\n"
    ),
    "evolve": (
        "set datafile separator ','\n"
        "set xlabel 't'\n"
        "plot '{csv}' every ::1 using 1:2 with lines title 'mean n', \\\n"
        "     '{csv}' every ::1 using 1:6 with lines title 'coherence'\n"
    ),
    "sweep": (
        "set datafile separator ','\n"
        "set logscale xy\n"
        "set xlabel '|alpha0|^2'\n"
        "set ylabel 'decoherence time'\n"
        "plot '{csv}' every ::1 using ($1*$1):7 with points title 'fitted', \\\n"
        "     '{csv}' every ::1 using ($1*$1):8 with lines title 'formula'\n"
    ),
}


def _emit_gnuplot(kind: str, out_dir: Path, csv_name: str) -> None:
    script = _GNUPLOT_TEMPLATES[kind].format(csv=csv_name)
    _write_text(out_dir / f"{kind}.gp", script)


def _parse_float_list(text: str) -> list[float]:
    if text.strip() == "":
        return []
    try:
        return [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"cannot parse float list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kerrcat",
        description="Damped Kerr dynamics of a trapped electron's cyclotron mode",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to the JSON config")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--grid-extent", type=float, default=None)
    common.add_argument("--grid-res", type=int, default=None)
    common.add_argument("--cutoff", type=int, default=None)
    common.add_argument("--gnuplot", action="store_true", help="also emit a gnuplot script")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("params", parents=[common], help="print derived parameters as JSON")
    p_q = sub.add_parser("qsurface", parents=[common], help="export a Q surface as CSV")
    p_q.add_argument("--time", type=float, default=0.0)
    p_q.add_argument("--backend", choices=("analytic", "numeric"), default="analytic")
    p_e = sub.add_parser("evolve", parents=[common], help="export an observable timeseries")
    p_e.add_argument("--t-final", type=float, required=True)
    p_e.add_argument("--samples", type=int, default=51)
    sub.add_parser("validate", parents=[common], help="run the dual-path check suite")
    p_s = sub.add_parser("sweep", parents=[common], help="cat reports over parameter lists")
    p_s.add_argument("--alpha0", default="", help="comma-separated kick amplitudes")
    p_s.add_argument("--gamma", default="", help="comma-separated damping rates (units of mu)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, overrides=args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG

    out = config.output_dir
    try:
        if args.command == "params":
            doc = cmd_params(config)
            text = json.dumps(_json_ready(doc), sort_keys=True, indent=2) + "\n"
            _write_text(out / "params.json", text)
            print(text, end="")
        elif args.command == "qsurface":
            text = cmd_qsurface(config, args.time, args.backend)
            _write_text(out / "qsurface.csv", text)
            if args.gnuplot:
                _emit_gnuplot("qsurface", out, "qsurface.csv")
        elif args.command == "evolve":
            text = cmd_evolve(config, args.t_final, args.samples)
            _write_text(out / "evolve.csv", text)
            if args.gnuplot:
                _emit_gnuplot("evolve", out, "evolve.csv")
        elif args.command == "validate":
            report = cmd_validate(config)
            text = json.dumps(_json_ready(report), sort_keys=True, indent=2) + "\n"
            _write_text(out / "validate.json", text)
            print(text, end="")
            if not report["pass"]:
                return EXIT_NUMERICAL
        elif args.command == "sweep":
            text = cmd_sweep(
                config, _parse_float_list(args.alpha0), _parse_float_list(args.gamma)
            )
            _write_text(out / "sweep.csv", text)
            if args.gnuplot:
                _emit_gnuplot("sweep", out, "sweep.csv")
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except SeriesNotConverged as exc:
        print(f"convergence failure: {exc}", file=_sys.stderr)
        return EXIT_CONVERGENCE
    except (CutoffLeak, CutoffTooSmall, StepSizeUnstable) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=_sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
