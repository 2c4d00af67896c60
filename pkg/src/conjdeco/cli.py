"""Configuration-driven experiment runner.

Config files are flat ``key = value`` lines with dotted sections, ``#``
comments, and comma-separated lists, e.g.::

    model.sigma = 1.0
    model.eta1 = 1.0
    model.eta2 = 1.0
    model.mass = infinite
    grid.position.n = 256
    grid.position.half_width = 88
    grid.momentum.n = 256
    grid.momentum.half_width = 44
    times = 0, 1, 2, 5, 10
    outputs = matrices, diagonals, metrics, heatmaps, scaling_fits
    heatmap.n = 121
    heatmap.half_width = 10
    oracle.grid_n = 48
    oracle.times = 1, 2
    output_dir = out

Subcommands: ``run``, ``validate``, ``oracle``. Exit codes: 0 success,
1 validation failure, 2 invariant violation, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import evolution, metrics
from .errors import ConfigurationError, InvariantViolation
from .evolution import (
    DensityMatrix,
    ModelParams,
    brute_force_reduced,
    default_oracle_grids,
    kernel_values,
    long_time_diagonal,
    momentum_kernel,
    position_kernel,
    required_momentum_half_width,
    required_position_half_width,
)
from .wavepacket import MOMENTUM, POSITION, GaussianSpec, Grid

KNOWN_OUTPUTS = {"matrices", "diagonals", "metrics", "heatmaps", "scaling_fits"}

KNOWN_KEYS = {
    "model.sigma", "model.eta1", "model.eta2", "model.mass",
    "grid.position.n", "grid.position.half_width",
    "grid.momentum.n", "grid.momentum.half_width",
    "times", "outputs",
    "heatmap.n", "heatmap.half_width",
    "flatness.half_width",
    "oracle.grid_n", "oracle.times",
    "output_dir",
}

# PSD eigenvalues in [-PSD_TOL, -PSD_WARN) are warnings by default and
# errors under --strict.
PSD_WARN = 1e-12


@dataclass(frozen=True)
class ExperimentConfig:
    sigma: float
    eta1: float
    eta2: float
    mass: float  # inf for the interaction-dominated regime
    position_n: int
    position_half_width: float
    momentum_n: int
    momentum_half_width: float
    times: tuple[float, ...]
    outputs: frozenset[str]
    heatmap_n: int = 121
    heatmap_half_width: float = 10.0
    flatness_half_width: float | None = None
    oracle_grid_n: int = 48
    oracle_times: tuple[float, ...] = ()
    output_dir: str = "out"

    def params_at(self, t: float) -> ModelParams:
        g = GaussianSpec(0.0, self.sigma)
        return ModelParams(g, GaussianSpec(0.0, self.eta1),
                           GaussianSpec(0.0, self.eta2), t, mass=self.mass)

    def flatness_window(self) -> float:
        if self.flatness_half_width is not None:
            return self.flatness_half_width
        return 5.0 * self.sigma

    def echo(self) -> dict:
        d = {
            "model": {"sigma": self.sigma, "eta1": self.eta1,
                      "eta2": self.eta2,
                      "mass": "infinite" if math.isinf(self.mass) else self.mass},
            "grid": {"position": {"n": self.position_n,
                                  "half_width": self.position_half_width},
                     "momentum": {"n": self.momentum_n,
                                  "half_width": self.momentum_half_width}},
            "times": list(self.times),
            "outputs": sorted(self.outputs),
            "heatmap": {"n": self.heatmap_n,
                        "half_width": self.heatmap_half_width},
            "flatness_half_width": self.flatness_window(),
            "oracle": {"grid_n": self.oracle_grid_n,
                       "times": list(self.oracle_times)},
            "output_dir": self.output_dir,
        }
        return d


def _parse_pairs(text: str):
    pairs = {}
    errors = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value', got {raw!r}")
            continue
        key, value = line.split("=", 1)
        key = key.strip()
        if key in pairs:
            errors.append(f"line {lineno}: duplicate key {key!r}")
            continue
        pairs[key] = value.strip()
    return pairs, errors


def validate(config_text: str) -> ExperimentConfig:
    """Parse and fully validate a config; raises ConfigurationError listing
    every violated constraint at once."""
    pairs, errors = _parse_pairs(config_text)

    for key in sorted(set(pairs) - KNOWN_KEYS):
        errors.append(f"unknown key {key!r}")

    def take_float(key, default=None, positive=False):
        if key not in pairs:
            if default is None:
                errors.append(f"missing required key {key!r}")
                return math.nan
            return default
        try:
            v = float(pairs[key])
        except ValueError:
            errors.append(f"{key}: not a number: {pairs[key]!r}")
            return math.nan
        if positive and not v > 0:
            errors.append(f"{key}: must be positive, got {v}")
        return v

    def take_int(key, default=None):
        if key not in pairs:
            if default is None:
                errors.append(f"missing required key {key!r}")
                return 0
            return default
        try:
            return int(pairs[key])
        except ValueError:
            errors.append(f"{key}: not an integer: {pairs[key]!r}")
            return 0

    def take_floats(key):
        if key not in pairs:
            return None
        try:
            return tuple(float(v) for v in pairs[key].split(",") if v.strip())
        except ValueError:
            errors.append(f"{key}: not a comma-separated number list")
            return ()

    sigma = take_float("model.sigma", positive=True)
    eta1 = take_float("model.eta1", positive=True)
    eta2 = take_float("model.eta2", positive=True)
    if pairs.get("model.mass", "infinite") == "infinite":
        mass = math.inf
    else:
        mass = take_float("model.mass", positive=True)

    pos_n = take_int("grid.position.n")
    pos_hw = take_float("grid.position.half_width", positive=True)
    mom_n = take_int("grid.momentum.n")
    mom_hw = take_float("grid.momentum.half_width", positive=True)

    times = take_floats("times")
    if times is None:
        errors.append("missing required key 'times'")
        times = ()
    elif not times:
        errors.append("times must be non-empty")
    else:
        if any(t < 0 for t in times):
            errors.append("times must all be >= 0")
        if any(b <= a for a, b in zip(times, times[1:])):
            errors.append("times must be strictly increasing")

    outputs = frozenset(
        v.strip() for v in pairs.get("outputs", "metrics").split(",") if v.strip()
    )
    for out in sorted(outputs - KNOWN_OUTPUTS):
        errors.append(f"unknown output {out!r} (known: {sorted(KNOWN_OUTPUTS)})")

    heat_n = take_int("heatmap.n", default=121)
    heat_hw = take_float("heatmap.half_width", default=10.0, positive=True)
    if heat_n < 9:
        errors.append("heatmap.n must be at least 9")

    flat_hw = take_float("flatness.half_width", default=-1.0)
    flatness = None if flat_hw <= 0 else flat_hw

    oracle_n = take_int("oracle.grid_n", default=48)
    if oracle_n > evolution.ORACLE_AXIS_CAP:
        errors.append(
            f"oracle.grid_n {oracle_n} exceeds cap {evolution.ORACLE_AXIS_CAP}"
        )
    oracle_times = take_floats("oracle.times") or ()
    if times and set(oracle_times) - set(times):
        errors.append("oracle.times must be a subset of times")

    # sizing rule at the latest time, validated before any computation
    if times and not any(math.isnan(v) for v in (sigma, eta1, eta2, pos_hw, mom_hw)):
        g = GaussianSpec(0.0, sigma) if sigma > 0 else None
        if g is not None and eta1 > 0 and eta2 > 0:
            probe = ModelParams(g, GaussianSpec(0.0, eta1),
                                GaussianSpec(0.0, eta2), max(times))
            need_pos = required_position_half_width(probe)
            if pos_hw < need_pos:
                errors.append(
                    f"grid.position.half_width {pos_hw:g} violates the sizing "
                    f"rule at t={max(times):g}: need >= {need_pos:g}"
                )
            need_mom = required_momentum_half_width(probe)
            if mom_hw < need_mom:
                errors.append(
                    f"grid.momentum.half_width {mom_hw:g} violates the sizing "
                    f"rule at t={max(times):g}: need >= {need_mom:g}"
                )

    if errors:
        raise ConfigurationError(
            "invalid configuration:\n  " + "\n  ".join(errors)
        )

    return ExperimentConfig(
        sigma=sigma, eta1=eta1, eta2=eta2, mass=mass,
        position_n=pos_n, position_half_width=pos_hw,
        momentum_n=mom_n, momentum_half_width=mom_hw,
        times=times, outputs=outputs,
        heatmap_n=heat_n, heatmap_half_width=heat_hw,
        flatness_half_width=flatness,
        oracle_grid_n=oracle_n, oracle_times=tuple(oracle_times),
        output_dir=pairs.get("output_dir", "out"),
    )


# ---------------------------------------------------------------------------
# output writers (fixed formatting for byte-identical reruns)

def _fmt(x: float) -> str:
    return format(x, ".17g")


def _tslug(t: float) -> str:
    return format(t, "g").replace(".", "p").replace("-", "m")


def _write_matrix(path: Path, rho: DensityMatrix, t: float) -> None:
    with path.open("w") as fh:
        fh.write("row,col,re,im\n")
        for j in range(rho.grid.n):
            row = rho.elems[j]
            for k in range(rho.grid.n):
                fh.write(f"{j},{k},{_fmt(row[k].real)},{_fmt(row[k].imag)}\n")
    meta = {
        "basis": rho.basis, "t": t, "n": rho.grid.n,
        "x_min": rho.grid.x_min, "x_max": rho.grid.x_max,
        "dx": rho.grid.dx, "pre_trace": rho.pre_trace,
        "measure": "elements carry the grid spacing; trace is the diagonal sum",
    }
    path.with_suffix(".meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _write_heatmap(path: Path, axis: np.ndarray, mags: np.ndarray,
                   basis: str, t: float) -> None:
    with path.open("w") as fh:
        for row in mags:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    meta = {"basis": basis, "t": t, "n": len(axis),
            "axis_min": float(axis[0]), "axis_max": float(axis[-1]),
            "normalization": "peak magnitude = 1",
            "layout": "row index = first argument, column index = second"}
    path.with_suffix(".meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _write_diagonal(path: Path, dist) -> None:
    with path.open("w") as fh:
        fh.write("index,coord,prob\n")
        pts = dist.grid.points
        for j, (x, p) in enumerate(zip(pts, dist.probs)):
            fh.write(f"{j},{_fmt(x)},{_fmt(p)}\n")


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# run stages

def _check_matrix(rho: DensityMatrix, strict: bool, label: str,
                  warnings: list[str]) -> None:
    rho.assert_valid(check_psd=False)
    lam = rho.min_eigenvalue()
    if lam < -evolution.PSD_TOL:
        raise InvariantViolation(f"{label}: min eigenvalue {lam:.3g}")
    if lam < -PSD_WARN:
        msg = f"{label}: min eigenvalue {lam:.3g} within tolerance but negative"
        if strict:
            raise InvariantViolation(msg)
        warnings.append(msg)


def _compute_time_point(config: ExperimentConfig, t: float, strict: bool):
    params = config.params_at(t)
    gx = Grid.symmetric(config.position_n, config.position_half_width)
    gp = Grid.symmetric(config.momentum_n, config.momentum_half_width)
    warnings: list[str] = []
    if math.isinf(config.mass):
        rx = position_kernel(params, gx)
        rp = momentum_kernel(params, gp)
    else:
        rx = None
        rp = evolution.free_particle_momentum_kernel(params, gp)
    out = {"t": t, "warnings": warnings, "matrices": {}}
    if rx is not None:
        _check_matrix(rx, strict, f"t={t:g} position", warnings)
        out["matrices"][POSITION] = rx
    _check_matrix(rp, strict, f"t={t:g} momentum", warnings)
    out["matrices"][MOMENTUM] = rp
    if t > 0:
        out["diagonals"] = {
            POSITION: long_time_diagonal(params, POSITION, gx),
            MOMENTUM: long_time_diagonal(params, MOMENTUM, gp),
        }
    return out


def _heatmap(config: ExperimentConfig, t: float, basis: str):
    params = config.params_at(t)
    axis = np.linspace(-config.heatmap_half_width, config.heatmap_half_width,
                       config.heatmap_n)
    vals = kernel_values(params, basis, axis[:, None], axis[None, :])
    mags = np.abs(vals)
    peak = mags.max()
    return axis, mags / peak if peak > 0 else mags


def _oracle_residuals(config: ExperimentConfig):
    rows = []
    for t in config.oracle_times:
        params = config.params_at(t)
        for basis in (POSITION, MOMENTUM):
            if basis == POSITION and math.isfinite(config.mass):
                continue
            grids = default_oracle_grids(params, basis, n=config.oracle_grid_n)
            bf = brute_force_reduced(params, basis, grids)
            if basis == POSITION:
                fac = position_kernel(params, bf.grid, check_support=False)
            elif math.isinf(config.mass):
                fac = momentum_kernel(params, bf.grid, check_support=False)
            else:
                fac = evolution.free_particle_momentum_kernel(
                    params, bf.grid, check_support=False)
            rows.append({
                "t": t, "basis": basis,
                "max_abs_residual": float(np.abs(bf.elems - fac.elems).max()),
                "oracle_pre_trace": bf.pre_trace,
                "grid_n": config.oracle_grid_n,
            })
    return rows


def run(config: ExperimentConfig, workers: int = 1, strict: bool = False,
        output_dir: str | None = None) -> dict:
    """Execute the experiment; returns the run report (also written as JSON)."""
    outdir = Path(output_dir or config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    report: dict = {"config": config.echo(), "warnings": [], "files": {},
                    "stage_seconds": {}, "metric_rows": [],
                    "pre_normalization_traces": {}}

    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(
            lambda t: _compute_time_point(config, t, strict), config.times))
    report["stage_seconds"]["kernels"] = time.perf_counter() - t0

    flat_hw = config.flatness_window()
    rows = []
    t0 = time.perf_counter()
    for res in results:
        t = res["t"]
        report["warnings"].extend(res["warnings"])
        for basis, rho in res["matrices"].items():
            report["pre_normalization_traces"][f"{basis}_t{_tslug(t)}"] = rho.pre_trace
            if "metrics" in config.outputs:
                rep = metrics.analyze(rho, t=t, flatness_halfwidth=flat_hw)
                rows.append(rep)
    report["stage_seconds"]["metrics"] = time.perf_counter() - t0

    written: list[Path] = []
    t0 = time.perf_counter()
    for res in results:
        t = res["t"]
        slug = _tslug(t)
        if "matrices" in config.outputs:
            for basis, rho in res["matrices"].items():
                p = outdir / f"rho_{basis}_t{slug}.csv"
                _write_matrix(p, rho, t)
                written += [p, p.with_suffix(".meta.json")]
        if "diagonals" in config.outputs and "diagonals" in res:
            for basis, dist in res["diagonals"].items():
                p = outdir / f"diagonal_{basis}_t{slug}.csv"
                _write_diagonal(p, dist)
                written.append(p)
        if "heatmaps" in config.outputs:
            bases = [MOMENTUM] if math.isfinite(config.mass) else [POSITION, MOMENTUM]
            for basis in bases:
                axis, mags = _heatmap(config, t, basis)
                p = outdir / f"heatmap_{basis}_t{slug}.csv"
                _write_heatmap(p, axis, mags, basis, t)
                written += [p, p.with_suffix(".meta.json")]
    report["stage_seconds"]["artifacts"] = time.perf_counter() - t0

    if "metrics" in config.outputs:
        p = outdir / "metrics.csv"
        with p.open("w") as fh:
            fh.write("t,basis,purity,entropy,l1_coherence,"
                     "offdiag_width,diag_width,flatness_cv\n")
            for rep in rows:
                fh.write(",".join([
                    _fmt(rep.t), rep.basis, _fmt(rep.purity), _fmt(rep.entropy),
                    _fmt(rep.l1_coherence), _fmt(rep.offdiag_width),
                    _fmt(rep.diag_width), _fmt(rep.flatness_cv)]) + "\n")
        written.append(p)
        report["metric_rows"] = [
            {"t": r.t, "basis": r.basis, "purity": r.purity,
             "entropy": r.entropy, "l1_coherence": r.l1_coherence,
             "offdiag_width": r.offdiag_width, "diag_width": r.diag_width,
             "flatness_cv": r.flatness_cv} for r in rows]

    if "scaling_fits" in config.outputs:
        fits = {}
        for basis in {r.basis for r in rows}:
            sel = sorted((r for r in rows
                          if r.basis == basis and r.t >= 5.0
                          and math.isfinite(r.offdiag_width)
                          and math.isfinite(r.diag_width)),
                         key=lambda r: r.t)
            for fieldname in ("offdiag_width", "diag_width"):
                key = f"{basis}.{fieldname}"
                if len(sel) >= 5:
                    fit = metrics.fit_scaling(sel, fieldname)
                    fits[key] = {"exponent": fit.exponent,
                                 "prefactor": fit.prefactor,
                                 "r_squared": fit.r_squared,
                                 "t_range": list(fit.t_range)}
                else:
                    fits[key] = {"skipped": "need >= 5 resolved widths at t >= 5"}
        report["scaling_fits"] = fits

    if config.oracle_times:
        t0 = time.perf_counter()
        report["oracle_residuals"] = _oracle_residuals(config)
        report["stage_seconds"]["oracle"] = time.perf_counter() - t0

    for p in written:
        report["files"][p.name] = _digest(p)
    report_path = outdir / "report.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


def oracle_only(config: ExperimentConfig, output_dir: str | None = None) -> dict:
    if not config.oracle_times:
        raise ConfigurationError("oracle mode needs oracle.times in the config")
    outdir = Path(output_dir or config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    report = {"config": config.echo(),
              "oracle_residuals": _oracle_residuals(config)}
    (outdir / "oracle_report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


# ---------------------------------------------------------------------------
# entry point

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="conjdeco",
        description="Conjugate-observable decoherence experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "validate", "oracle"):
        p = sub.add_parser(name)
        p.add_argument("config", help="path to the experiment config file")
        if name != "validate":
            p.add_argument("--output-dir", default=None,
                           help="override config output_dir")
        if name == "run":
            p.add_argument("--workers", type=int, default=1,
                           help="concurrent time points")
            p.add_argument("--strict", action="store_true",
                           help="promote PSD warnings to errors")
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 3
    try:
        config = validate(text)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.command == "validate":
        print(json.dumps(config.echo(), indent=2, sort_keys=True))
        return 0

    try:
        if args.command == "run":
            report = run(config, workers=args.workers, strict=args.strict,
                         output_dir=args.output_dir)
            for w in report["warnings"]:
                print(f"warning: {w}", file=sys.stderr)
            print(f"wrote {len(report['files']) + 1} files to "
                  f"{args.output_dir or config.output_dir}")
        else:
            report = oracle_only(config, output_dir=args.output_dir)
            for row in report["oracle_residuals"]:
                print(f"t={row['t']:g} {row['basis']}: "
                      f"max|residual| = {row['max_abs_residual']:.3e}")
        return 0
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
