"""Command-line front end.

Subcommands ``mgf``, ``moments``, ``dist``, ``sample`` and ``selftest`` write
CSV tables plus a JSON manifest into ``--out``.

Configuration is an INI file with sections ``[model]`` (b, alpha, rho1, rho2),
``[grid]`` (m, t, u as comma lists) and ``[run]`` (n_list, seed, threads,
num_samples, sample_output, tolerance_scale). Values are resolved in the order
defaults < config file < environment < command-line flags. The environment
override for key ``KEY`` of section ``SECTION`` is ``HARDWALL_SECTION_KEY``,
for example ``HARDWALL_MODEL_RHO1=0.55`` or ``HARDWALL_RUN_N_LIST=100,200``.

A manifest written by any command can be passed back as ``--config`` to
replay the run.

Exit codes: 0 success, 1 numeric failure, 2 configuration error,
3 selftest failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import datetime as _dt
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .asymptotic import (
    _theta_terms,
    constants,
    covariance_asymptotics,
    covariance_coefficients,
    expansion_derivative,
    expectation_asymptotics,
    expectation_coefficients,
)
from .errors import ConfigError, HardWallError
from .exact import (
    counting_pmf,
    discrete_gaussian_pmf,
    exact_moments,
    log_mgf_exact,
    log_mgf_mixture,
    mode_probabilities,
    total_variation,
)
from .model import ModelParams, ObservableGrid, balayage_radial, equilibrium
from .sampler import export_point_cloud, sample_counts
from .specialfn import (
    ThetaParams,
    erfc_integral_constants,
    jacobi_theta_modular,
    jacobi_theta_product,
    jacobi_theta_series,
    theta_log_derivatives,
    weierstrass_c,
    weierstrass_p,
)

__all__ = ["RunConfig", "load_config", "main"]

SCHEMA_VERSION = 1
ENV_PREFIX = "HARDWALL_"

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_CONFIG = 2
EXIT_SELFTEST = 3

_DEFAULTS = {
    "model": {"b": "1.0", "alpha": "0.0", "rho1": "0.6", "rho2": "0.8"},
    "grid": {"m": "1", "t": "1,1", "u": "0.5,-0.3"},
    "run": {
        "n_list": "200,400,800,1600,3200,6400,12800",
        "seed": "0",
        "threads": "1",
        "num_samples": "1000",
        "sample_output": "both",
        "tolerance_scale": "1.0",
    },
}

MGF_COLUMNS = ("n", "ln_mgf_exact", "ln_mgf_asymptotic", "abs_err", "abs_err_times_n_3_5")
MOMENT_COLUMNS = ("n", "quantity", "ell", "k", "exact", "asymptotic", "oscillatory", "residual")
DIST_COLUMNS = ("n", "x", "count", "pmf_exact", "pmf_discrete_gaussian", "tv")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved inputs of one run."""

    model: ModelParams
    grid: ObservableGrid
    n_list: tuple
    seed: int = 0
    threads: int = 1
    num_samples: int = 1000
    sample_output: str = "both"
    tolerance_scale: float = 1.0
    raw: dict = field(default_factory=dict, compare=False)

    def echo(self) -> dict:
        """Config echo for the manifest; floats keep full round-trip precision."""
        return {
            "model": {"b": self.model.b, "alpha": self.model.alpha,
                      "rho1": self.model.rho1, "rho2": self.model.rho2},
            "grid": {"m": self.grid.m, "t": list(self.grid.t), "u": list(self.grid.u)},
            "run": {"n_list": list(self.n_list), "seed": self.seed, "threads": self.threads,
                    "num_samples": self.num_samples, "sample_output": self.sample_output,
                    "tolerance_scale": self.tolerance_scale},
        }


def _read_sources(path: str | None) -> dict:
    values = {s: dict(kv) for s, kv in _DEFAULTS.items()}
    if path is None:
        return values
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    if p.suffix == ".json":
        try:
            echo = json.loads(p.read_text())["config"]
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"{path}: not a run manifest ({exc})") from None
        for section, kv in echo.items():
            for key, val in kv.items():
                text = ",".join(repr(v) for v in val) if isinstance(val, list) else repr(val)
                values.setdefault(section, {})[key] = text.strip("'")
        return values
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(p)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for section in parser.sections():
        if section not in _DEFAULTS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, val in parser.items(section):
            if key not in _DEFAULTS[section]:
                raise ConfigError(f"{path}: unknown key '{key}' in [{section}]")
            values[section][key] = val
    return values


def _apply_env(values: dict, env) -> None:
    for section, kv in _DEFAULTS.items():
        for key in kv:
            name = f"{ENV_PREFIX}{section.upper()}_{key.upper()}"
            if name in env:
                values[section][key] = env[name]


def _parse(kind: Callable, section: str, key: str, text: str):
    try:
        return kind(text.strip())
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key} = {text!r}: {exc}") from None


def _float_list(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _int_list(text):
    out = []
    for v in text.split(","):
        if v.strip():
            f = float(v)
            if f != int(f):
                raise ValueError(f"{v!r} is not an integer")
            out.append(int(f))
    return tuple(out)


def load_config(path: str | None = None, overrides: dict | None = None, env=None) -> RunConfig:
    """Resolve a :class:`RunConfig` from defaults, a file, the environment and overrides.

    Raises
    ------
    ConfigError
        With the offending section and key in the message.
    """
    values = _read_sources(path)
    _apply_env(values, os.environ if env is None else env)
    for (section, key), val in (overrides or {}).items():
        if val is not None:
            values[section][key] = str(val)
    m = values["model"]
    g = values["grid"]
    r = values["run"]
    b = _parse(float, "model", "b", m["b"])
    alpha = _parse(float, "model", "alpha", m["alpha"])
    rho1 = _parse(float, "model", "rho1", m["rho1"])
    rho2 = _parse(float, "model", "rho2", m["rho2"])
    try:
        model = ModelParams(b, alpha, rho1, rho2)
    except ValueError as exc:
        raise ConfigError(f"[model] {exc}") from None
    mm = _parse(int, "grid", "m", g["m"])
    t = _parse(_float_list, "grid", "t", g["t"])
    u = _parse(_float_list, "grid", "u", g["u"])
    try:
        grid = ObservableGrid(mm, t, u)
    except ValueError as exc:
        raise ConfigError(f"[grid] {exc}") from None
    n_list = _parse(_int_list, "run", "n_list", r["n_list"])
    if not n_list or any(n < 1 for n in n_list) or any(b2 <= a2 for a2, b2 in zip(n_list, n_list[1:])):
        raise ConfigError("[run] n_list must be nonempty, positive and strictly increasing")
    seed = _parse(int, "run", "seed", r["seed"])
    if not 0 <= seed < 2**64:
        raise ConfigError("[run] seed must lie in [0, 2**64)")
    threads = _parse(int, "run", "threads", r["threads"])
    if threads < 1:
        raise ConfigError("[run] threads must be >= 1")
    num_samples = _parse(int, "run", "num_samples", r["num_samples"])
    if num_samples < 1:
        raise ConfigError("[run] num_samples must be >= 1")
    sample_output = r["sample_output"].strip()
    if sample_output not in ("counts", "points", "both"):
        raise ConfigError("[run] sample_output must be counts, points or both")
    scale = _parse(float, "run", "tolerance_scale", r["tolerance_scale"])
    if not scale >= 0:
        raise ConfigError("[run] tolerance_scale must be >= 0")
    return RunConfig(model, grid, n_list, seed, threads, num_samples, sample_output, scale, values)


# ---------------------------------------------------------------------------
# output


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, columns: Sequence[str], rows) -> str:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out: Path, command: str, cfg: RunConfig, started: float,
                    outputs: dict, records: list, extra: dict | None = None) -> Path:
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "version": __version__,
        "created_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "wall_clock_seconds": time.perf_counter() - started,
        "config": cfg.echo(),
        "outputs": outputs,
        "records": records,
    }
    if extra:
        manifest.update(extra)
    path = out / f"{command}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------------------
# commands


def cmd_mgf(cfg: RunConfig, out: Path) -> int:
    started = time.perf_counter()
    eq = equilibrium(cfg.model)
    ex = constants(cfg.model, cfg.grid, eq)
    rows, records = [], []
    for n in cfg.n_list:
        t0 = time.perf_counter()
        exact = log_mgf_exact(cfg.model, cfg.grid, n, threads=cfg.threads)
        asym = ex.log_mgf(n)
        err = abs(exact - asym)
        rows.append((n, exact, asym, err, err * n**0.6))
        records.append({"n": n, "seconds": time.perf_counter() - t0})
    digest = _write_csv(out / "mgf.csv", MGF_COLUMNS, rows)
    extra = {"constants": {"C1": ex.C1, "C2": ex.C2, "C3": ex.C3, "C4": ex.C4, "ln_Q": ex.log_Q}}
    _write_manifest(out, "mgf", cfg, started, {"mgf.csv": digest}, records, extra)
    return EXIT_OK


def cmd_moments(cfg: RunConfig, out: Path) -> int:
    started = time.perf_counter()
    p, g = cfg.model, cfg.grid.with_u([0.0] * (2 * cfg.grid.m))
    eq = equilibrium(p)
    L = p.log_ratio
    k2 = 2 * g.m
    e_co = [expectation_coefficients(p, g, i, eq) for i in range(1, k2 + 1)]
    c_co = {(i, j): covariance_coefficients(p, g, i, j, eq)
            for i in range(1, k2 + 1) for j in range(i, k2 + 1)}
    rows, records = [], []
    for n in cfg.n_list:
        t0 = time.perf_counter()
        mean, cov = exact_moments(mode_probabilities(p, g, n, threads=cfg.threads), g)
        dlog, wpc = _theta_terms(p, n, eq)
        for i in range(1, k2 + 1):
            asym = expectation_asymptotics(p, g, i, n, eq)
            osc = e_co[i - 1].f1_weight * dlog / (2.0 * L)
            rows.append((n, "mean", i, "", mean[i - 1], asym, osc, mean[i - 1] - asym))
        for (i, j), co in c_co.items():
            asym = covariance_asymptotics(p, g, i, j, n, eq)
            osc = -co.wp_weight * wpc / (4.0 * L * L) + co.dlog_weight * dlog / (2.0 * L)
            ex = cov[i - 1, j - 1]
            rows.append((n, "cov", i, j, ex, asym, osc, ex - asym))
        records.append({"n": n, "seconds": time.perf_counter() - t0})
    digest = _write_csv(out / "moments.csv", MOMENT_COLUMNS, rows)
    _write_manifest(out, "moments", cfg, started, {"moments.csv": digest}, records)
    return EXIT_OK


def dist_rows(params: ModelParams, n: int, threads: int = 1):
    """Rows ``(n, x, count, pmf_exact, pmf_dg, tv)`` for ``N(rho1)`` recentred at ``floor(Lambda_n)``."""
    grid = ObservableGrid(1, (0.0, 0.0), (0.0, 0.0))
    dist = counting_pmf(mode_probabilities(params, grid, n, threads=threads), 1)
    dg = discrete_gaussian_pmf(params, n)
    tv = total_variation(dist, dg)
    base = dg.floor
    exact = {int(c): float(v) for c, v in zip(dist.support, dist.pmf)}
    gauss = {base + int(x): float(v) for x, v in zip(dg.x, dg.pmf)}
    rows = []
    for c in sorted(set(exact) | set(gauss)):
        pe, pg = exact.get(c, 0.0), gauss.get(c, 0.0)
        if max(pe, pg) > 1e-16:
            rows.append((n, c - base, c, pe, pg, tv))
    return rows, tv


def cmd_dist(cfg: RunConfig, out: Path) -> int:
    started = time.perf_counter()
    rows, records = [], []
    for n in cfg.n_list:
        t0 = time.perf_counter()
        r, tv = dist_rows(cfg.model, n, cfg.threads)
        rows.extend(r)
        records.append({"n": n, "tv": tv, "seconds": time.perf_counter() - t0})
    digest = _write_csv(out / "dist.csv", DIST_COLUMNS, rows)
    _write_manifest(out, "dist", cfg, started, {"dist.csv": digest}, records)
    return EXIT_OK


def cmd_sample(cfg: RunConfig, out: Path) -> int:
    started = time.perf_counter()
    outputs, records = {}, []
    k2 = 2 * cfg.grid.m
    for n in cfg.n_list:
        t0 = time.perf_counter()
        rec = {"n": n}
        if cfg.sample_output in ("counts", "both"):
            batch = sample_counts(cfg.model, cfg.grid, n, cfg.num_samples, cfg.seed,
                                  threads=cfg.threads)
            name = f"counts_n{n}.csv"
            outputs[name] = _write_csv(out / name, [f"N_{i}" for i in range(1, k2 + 1)],
                                       batch.counts.tolist())
            rec["mean_counts"] = batch.counts.mean(axis=0).tolist()
        if cfg.sample_output in ("points", "both"):
            pts = export_point_cloud(cfg.model, n, cfg.seed)
            name = f"points_n{n}.csv"
            outputs[name] = _write_csv(out / name, ("x", "y"), pts.tolist())
            r = np.hypot(pts[:, 0], pts[:, 1])
            rec["points_in_gap"] = int(np.sum((r > cfg.model.rho1) & (r < cfg.model.rho2)))
        rec["seconds"] = time.perf_counter() - t0
        records.append(rec)
    _write_manifest(out, "sample", cfg, started, outputs, records)
    return EXIT_OK


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.tolerance > 0 and self.residual <= self.tolerance)


def _selftest_checks(cfg: RunConfig) -> list:
    checks = []
    c = erfc_integral_constants()
    checks.append(("I_constant", abs(c.I - (-0.81367)), 5e-6))
    checks.append(("I3_equals_I", abs(c.I3 - c.I), 1e-8))
    checks.append(("I2_minus_I4_equals_I", abs(c.I2 - c.I4 - c.I), 1e-8))

    theta = ThetaParams.from_radii(cfg.model.rho1, cfg.model.rho2)
    zs = np.linspace(-0.9, 0.9, 13)
    s, mo, pr = (jacobi_theta_series(zs, theta), jacobi_theta_modular(zs, theta),
                 jacobi_theta_product(zs, theta))
    checks.append(("theta_series_vs_modular", float(np.max(np.abs(s / mo - 1))), 1e-10))
    checks.append(("theta_series_vs_product", float(np.max(np.abs(s / pr - 1))), 1e-10))
    cc = weierstrass_c(theta)
    res = 0.0
    for z in zs:
        d2 = theta_log_derivatives(z, theta)[2]
        wp = weierstrass_p(complex(z - 0.5, theta.tau_im / 2.0), theta).real
        res = max(res, abs(wp - cc + d2) / max(1.0, abs(d2)))
    checks.append(("wp_vs_log_theta", res, 1e-9))

    res = 0.0
    for b in (0.5, 1.0, 2.0):
        p = ModelParams(b, cfg.model.alpha, cfg.model.rho1, cfg.model.rho2)
        eq = equilibrium(p)
        s1, s2 = balayage_radial(p)
        res = max(res, abs(s1 - eq.sigma1), abs(s2 - eq.sigma2))
    checks.append(("balayage_closed_form", res, 1e-10))

    n = cfg.n_list[0]
    a = log_mgf_exact(cfg.model, cfg.grid, n)
    b_ = log_mgf_mixture(cfg.model, cfg.grid, n)
    checks.append(("two_path_mgf", abs(a - b_) / max(1.0, abs(a)), 1e-10))

    ex = constants(cfg.model, cfg.grid)
    checks.append(("theta_vs_discrete_gaussian", abs(ex.F_n(n) - ex.F_n_discrete_gaussian(n)), 1e-12))

    g0 = cfg.grid.with_u([0.0] * (2 * cfg.grid.m))
    res = 0.0
    for ell in range(1, 2 * g0.m + 1):
        j = [0] * (2 * g0.m)
        j[ell - 1] = 1
        d = expansion_derivative(cfg.model, g0, j)
        co = expectation_coefficients(cfg.model, g0, ell)
        res = max(res, abs(d["C1"] - co.b1), abs(d["C2"] - co.c1),
                  abs(d["C3"] - co.d1), abs(d["C4"] - co.e1))
    checks.append(("derivative_consistency", res, 1e-6))
    return [CheckResult(name, float(r), tol * cfg.tolerance_scale) for name, r, tol in checks]


def cmd_selftest(cfg: RunConfig, out: Path | None) -> int:
    started = time.perf_counter()
    results = _selftest_checks(cfg)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name:28s} residual={r.residual:.3e} tolerance={r.tolerance:.3e}")
    ok = all(r.passed for r in results)
    print(f"selftest: {sum(r.passed for r in results)}/{len(results)} passed")
    if out is not None:
        records = [{"name": r.name, "residual": r.residual, "tolerance": r.tolerance,
                    "passed": r.passed} for r in results]
        _write_manifest(out, "selftest", cfg, started, {}, records)
    return EXIT_OK if ok else EXIT_SELFTEST


_COMMANDS = {
    "mgf": cmd_mgf,
    "moments": cmd_moments,
    "dist": cmd_dist,
    "sample": cmd_sample,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hardwall",
        description="Counting statistics of the hard-wall Mittag-Leffler ensemble.",
        epilog=f"Environment overrides use the prefix {ENV_PREFIX}<SECTION>_<KEY>.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("mgf", "moments", "dist", "sample", "selftest"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", metavar="PATH", help="INI config or a manifest to replay")
        sp.add_argument("--out", metavar="DIR", default=None if name == "selftest" else ".",
                        help="output directory")
        sp.add_argument("--seed", type=int, metavar="INT")
        sp.add_argument("--n-list", metavar="a,b,c")
        sp.add_argument("--threads", type=int, metavar="INT")
        if name == "sample":
            sp.add_argument("--num-samples", type=int, metavar="INT")
        if name == "selftest":
            sp.add_argument("--tolerance-scale", type=float, metavar="X",
                            help="multiply every tolerance (0 forces failures)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        ("run", "seed"): args.seed,
        ("run", "n_list"): args.n_list,
        ("run", "threads"): args.threads,
        ("run", "num_samples"): getattr(args, "num_samples", None),
        ("run", "tolerance_scale"): getattr(args, "tolerance_scale", None),
    }
    try:
        cfg = load_config(args.config, overrides)
        out = Path(args.out) if args.out is not None else None
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            if not os.access(out, os.W_OK):
                raise ConfigError(f"output directory not writable: {out}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "selftest":
            return cmd_selftest(cfg, out)
        return _COMMANDS[args.command](cfg, out)
    except (HardWallError, ArithmeticError, ValueError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
