"""``isk`` command-line experiment runner.

    isk SUBCOMMAND --config FILE [--seed U64] [--workers N] [--out DIR] [--print-config]

Config files hold ``key = value`` lines.  Keys before any ``[section]``
header apply to every subcommand; keys inside ``[name]`` apply only when
running subcommand ``name`` and override the global ones.  Command-line
flags override both, and ``ISK_OUT`` overrides the configured output
directory (``--out`` still wins).

Every run writes ``summary.json`` (named results with error bars),
``detail.csv`` (per-sample or per-point rows) and plot-ready text files.
These depend only on the effective config: the worker count changes wall
time, never bytes.  Run metadata that does vary (timestamps, wall time)
goes to ``run.json``.

Exit status: 0 success, 1 invalid input, 2 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import exact, fluctuations, mc, rs
from .disorder import sample_disorder
from .errors import ConvergenceError, DegenerateError
from .hamiltonians import ModelParams, interpolating_model
from .lattice import BoxGeometry, correlation_length, load_kernel, uniqueness_check

__all__ = ["ConfigError", "ExperimentConfig", "ResultRecord", "load_config", "run",
           "emit_plot_data", "main", "SUBCOMMANDS", "PLOT_KINDS"]

SUBCOMMANDS = ("pressure", "rs-solve", "interpolate-check", "dobrushin", "fluctuations",
               "gamma", "mc-validate")
OUT_ENV = "ISK_OUT"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    subcommand: str
    d: int = 1
    N: int = 8
    lengths: tuple = ()
    kernel: str = "nn"
    kappa: float = 0.0
    beta: float = 0.0
    h: float = 0.0
    gamma: float = 0.0
    t: float = 1.0
    q: float = 0.0
    lam: float = 0.0
    mu: float = 0.0
    sk_diagonal: bool = True
    seed: int = 0
    n_samples: int = 100
    engine: str = "auto"
    system: str = "isk"
    sizes: tuple = ()
    t_grid: tuple = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    grid_step: float = 0.01
    chain_length: int = 1000
    buffer: int = 8
    n_outer: int = 200
    n_inner: int = 200
    burn_in: int = 1000
    n_sweeps: int = 10_000
    bins: int = 40
    workers: int = field(default=1, compare=False)
    out: str = field(default="isk-out", compare=False)

    # keys that never change results and are left out of the hash
    RUNTIME_KEYS = ("workers", "out")

    def geometry(self, size: int | None = None) -> BoxGeometry:
        if size is not None:
            return BoxGeometry(self.d, size)
        if self.lengths:
            return BoxGeometry(self.d, lengths=tuple(self.lengths))
        return BoxGeometry(self.d, self.N)

    def params(self) -> ModelParams:
        return ModelParams(self.kappa, self.beta, self.h, self.gamma, self.t, self.q, self.lam,
                           self.mu, self.sk_diagonal)

    def canonical(self) -> dict:
        return {f.name: _plain(getattr(self, f.name)) for f in fields(self)
                if f.name not in self.RUNTIME_KEYS}

    def config_hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def dumps(self) -> str:
        """Canonical effective config in the input file format."""
        lines = [f"[{self.subcommand}]"]
        for f in fields(self):
            if f.name == "subcommand":
                continue
            v = getattr(self, f.name)
            key = "lambda" if f.name == "lam" else f.name
            text = ", ".join(repr(x) for x in v) if isinstance(v, tuple) else (
                str(v).lower() if isinstance(v, bool) else repr(v) if isinstance(v, float) else str(v))
            lines.append(f"{key} = {text}")
        return "\n".join(lines) + "\n"


def _plain(v):
    return list(v) if isinstance(v, tuple) else v


_ALIASES = {"lambda": "lam", "master_seed": "seed", "L": "N"}
_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _convert(name, raw):
    ftype = _FIELD_TYPES[name]
    if ftype == "bool":
        low = raw.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"expected a boolean, got {raw!r}")
        return low in ("true", "1", "yes")
    if ftype == "int":
        return int(raw)
    if ftype == "float":
        return float(raw)
    if ftype == "tuple":
        items = [x for x in raw.replace(",", " ").split() if x]
        conv = int if name in ("lengths", "sizes") else float
        return tuple(conv(x) for x in items)
    return raw


def parse_config_text(text: str, subcommand: str, source: str = "<config>") -> dict:
    """Effective ``{field: value}`` mapping for ``subcommand``."""
    common, specific = {}, {}
    section = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SUBCOMMANDS:
                raise ConfigError(f"{source}:{lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        name = _ALIASES.get(key, key)
        if name not in _FIELD_TYPES or name == "subcommand":
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            value = _convert(name, raw)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: field {key!r}: {exc}") from None
        target = common if section is None else specific if section == subcommand else None
        if target is not None:
            target[name] = value
    return {**common, **specific}


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Reject any config that cannot run, naming the offending field."""
    def bad(name, msg):
        raise ConfigError(f"field {name!r}: {msg}")

    if cfg.subcommand not in SUBCOMMANDS:
        bad("subcommand", f"must be one of {', '.join(SUBCOMMANDS)}")
    if cfg.d < 1:
        bad("d", "must be at least 1")
    if cfg.lengths and len(cfg.lengths) != cfg.d:
        bad("lengths", f"needs {cfg.d} entries")
    if (not cfg.lengths and cfg.N < 1) or any(x < 1 for x in cfg.lengths):
        bad("N", "box sides must be positive")
    for name in ("kappa", "beta", "gamma", "lam"):
        if getattr(cfg, name) < 0:
            bad(name, "must be non-negative")
    for name in ("t", "q"):
        if not 0.0 <= getattr(cfg, name) <= 1.0:
            bad(name, "must lie in [0, 1]")
    if cfg.n_samples < 2:
        bad("n_samples", "must be at least 2")
    if cfg.engine not in ("auto", "exact", "mc", "enumeration", "transfer", "factorized"):
        bad("engine", "unknown engine")
    if cfg.system not in ("isk", "rfim"):
        bad("system", "must be isk or rfim")
    if cfg.workers < 1:
        bad("workers", "must be at least 1")
    if not 0.0 < cfg.grid_step <= 0.5:
        bad("grid_step", "must lie in (0, 0.5]")
    if cfg.seed < 0 or cfg.seed >= 2**64:
        bad("seed", "must be an unsigned 64-bit integer")
    for name in ("chain_length", "buffer", "n_outer", "n_inner", "n_sweeps", "bins"):
        if getattr(cfg, name) < 1:
            bad(name, "must be positive")
    if cfg.burn_in < 0:
        bad("burn_in", "must be non-negative")
    if any(not 0.0 < x < 1.0 for x in cfg.t_grid):
        bad("t_grid", "points must lie strictly inside (0, 1)")
    try:
        load_kernel(cfg.kernel, cfg.d)
    except (ValueError, OSError) as exc:
        bad("kernel", str(exc))
    return cfg


def load_config(path, subcommand: str, **overrides) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    values = parse_config_text(text, subcommand, str(path))
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        cfg = ExperimentConfig(subcommand=subcommand, **values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return validate(cfg)


@dataclass(frozen=True)
class ResultRecord:
    run_id: str
    config_hash: str
    quantity: str
    value: float | bool | str
    error: float | None = None
    units: str = "nat"
    timestamp: float = field(default=0.0, compare=False)

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("timestamp")
        d.pop("run_id")
        d.pop("config_hash")
        return d


PLOT_KINDS = {
    "F-curve": ("q", "F", "stderr"),
    "t-derivative": ("t", "mean_lhs", "mean_rhs", "residual", "residual_stderr", "max_rel_error"),
    "histogram": ("left", "right", "count"),
    "qq": ("normal_quantile", "standardized_value"),
    "variance-scaling": ("volume", "variance", "stderr"),
    "fixed-point": ("iteration", "q"),
    "ti-trace": ("s", "mean_minus_H_per_site", "stderr"),
}


def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def emit_plot_data(rows, kind: str, out_dir, config_hash: str) -> Path | None:
    """Write ``rows`` as whitespace-separated columns under a ``#`` header.

    Returns the file path, or None (with a warning) for empty input.
    """
    if kind not in PLOT_KINDS:
        raise ConfigError(f"unknown plot kind {kind!r}")
    rows = list(rows)
    if not rows:
        warnings.warn(f"no rows for plot {kind!r}; nothing written", RuntimeWarning, stacklevel=2)
        return None
    path = Path(out_dir) / f"{kind}.dat"
    with open(path, "w") as fh:
        fh.write(f"# kind: {kind}\n# config_hash: {config_hash}\n# " + " ".join(PLOT_KINDS[kind]) + "\n")
        for row in rows:
            fh.write(" ".join(_fmt(x) for x in row) + "\n")
    return path


class _Run:
    """Collects results for one subcommand invocation."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.hash = cfg.config_hash()
        self.run_id = self.hash[:12]
        self.records: list[ResultRecord] = []
        self.detail_header: list[str] = []
        self.detail_rows: list = []
        self.plots: list = []
        self.kernel = load_kernel(cfg.kernel, cfg.d)
        self._pool = None

    def add(self, quantity, value, error=None, units="nat"):
        if isinstance(value, (np.floating, np.integer)):
            value = value.item()
        if isinstance(value, np.bool_):
            value = bool(value)
        if error is not None:
            error = float(error)
        self.records.append(ResultRecord(self.run_id, self.hash, quantity, value, error, units,
                                         time.time()))

    def detail(self, header, rows):
        self.detail_header, self.detail_rows = list(header), list(rows)

    def plot(self, kind, rows):
        self.plots.append((kind, list(rows)))

    @property
    def mapper(self):
        if self.cfg.workers == 1:
            return map
        if self._pool is None:
            self._pool = ProcessPoolExecutor(self.cfg.workers)
        return lambda f, it: self._pool.map(f, it, chunksize=8)

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()

    def write(self, out_dir: Path, started: float):
        out_dir.mkdir(parents=True, exist_ok=True)
        summary = {"config_hash": self.hash, "run_id": self.run_id,
                   "subcommand": self.cfg.subcommand, "config": self.cfg.canonical(),
                   "results": [r.as_dict() for r in self.records]}
        (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        with open(out_dir / "detail.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.detail_header)
            for row in self.detail_rows:
                writer.writerow([_fmt(x) for x in row])
        for kind, rows in self.plots:
            emit_plot_data(rows, kind, out_dir, self.hash)
        meta = {"run_id": self.run_id, "config_hash": self.hash, "started": started,
                "wall_seconds": time.time() - started, "workers": self.cfg.workers,
                "record_timestamps": {r.quantity: r.timestamp for r in self.records}}
        (out_dir / "run.json").write_text(json.dumps(meta, indent=2) + "\n")


# ---------------------------------------------------------------- subcommands

def _ensemble_engine(cfg, geometry):
    if cfg.engine in ("exact", "mc"):
        return cfg.engine
    return "exact" if geometry.volume <= exact.SINGLE_CAP else "mc"


def _mc_options(cfg):
    return {"burn_in": cfg.burn_in, "n_sweeps": cfg.n_sweeps}


def _do_pressure(run: _Run):
    cfg = run.cfg
    geometry = cfg.geometry()
    engine = _ensemble_engine(cfg, geometry)
    ens = fluctuations.ensemble_pressures(geometry, cfg.params(), cfg.n_samples, engine,
                                          run.kernel, cfg.seed, cfg.system, run.mapper,
                                          _mc_options(cfg))
    run.add("mean_pressure", ens.mean, math.sqrt(ens.variance / len(ens.values)))
    run.add("variance", ens.variance, ens.variance_stderr, "nat^2")
    run.add("rescaled_variance", ens.rescaled_variance, geometry.volume * ens.variance_stderr, "nat^2")
    run.add("volume", geometry.volume, None, "sites")
    run.add("engine", engine, None, "")
    run.detail(("sample_index", "pressure"), ens.entries)


def _estimator_config(cfg, kernel):
    if cfg.d == 1 and kernel.is_nearest_neighbor_chain():
        geometry = BoxGeometry.chain(cfg.chain_length)
    else:
        geometry = cfg.geometry()
    engine = {"exact": "auto"}.get(cfg.engine, cfg.engine)
    return rs.EstimatorConfig(geometry, kernel, cfg.n_samples, cfg.seed, engine,
                              burn_in=cfg.burn_in, n_sweeps=cfg.n_sweeps)


def _do_rs_solve(run: _Run):
    cfg = run.cfg
    est = _estimator_config(cfg, run.kernel)
    run.add("estimator_volume", est.geometry.volume, None, "sites")
    if cfg.beta == 0.0:
        point = rs.evaluate_F(0.0, cfg.kappa, 0.0, cfg.h, est)
        run.add("degenerate", True, None, "")
        run.add("inf_F", point.F_value, point.stderr)
        run.detail(("q", "F", "stderr"), [(0.0, point.F_value, point.stderr)])
        return
    sol = rs.minimize_F(cfg.kappa, cfg.beta, cfg.h, est, cfg.grid_step)
    fp = rs.fixed_point_qbar(cfg.kappa, cfg.beta, cfg.h, est)
    run.add("degenerate", False, None, "")
    run.add("qbar_minimizer", sol.qbar, None, "")
    run.add("inf_F", sol.F_min, sol.F_stderr)
    run.add("qbar_fixed_point", fp.q, None, "")
    run.add("agreement_gap", abs(sol.qbar - fp.q), None, "")
    run.add("unique_minimizer", sol.unique, None, "")
    curv = rs.curvature_check(cfg.kappa, cfg.beta, cfg.h, sol.qbar, est)
    run.add("curvature", curv.value, curv.stderr)
    run.add("curvature_at_boundary", curv.at_boundary, None, "")
    run.add("curvature_degenerate", curv.degenerate, None, "")
    if cfg.kappa == 0.0:
        q_ref, p_ref = rs.sk_rs_reference(cfg.beta, cfg.h)
        run.add("reference_qbar", q_ref, None, "")
        run.add("reference_pressure", p_ref)
    run.detail(("q", "F", "stderr"), sol.curve_rows())
    run.plot("F-curve", sol.curve_rows())
    run.plot("fixed-point", list(enumerate(fp.trajectory)))


def _do_interpolate_check(run: _Run):
    cfg = run.cfg
    geometry = cfg.geometry()
    samples = [sample_disorder(geometry, cfg.seed, k) for k in range(cfg.n_samples)]
    chk = exact.interpolation_derivative_check(cfg.t_grid, cfg.q, geometry, cfg.params(),
                                               samples, run.kernel)
    run.add("max_rel_error", float(chk.max_rel_error.max()), None, "")
    run.add("max_normwise_rel_error", float(chk.normwise_rel_error.max()), None, "")
    run.add("max_abs_z", float(np.max(np.abs(chk.z_scores))), None, "")
    rows = list(zip(chk.t, chk.mean_lhs, chk.mean_rhs, chk.residual, chk.residual_stderr,
                    chk.max_rel_error))
    run.detail(PLOT_KINDS["t-derivative"], rows)
    run.plot("t-derivative", rows)


def _do_dobrushin(run: _Run):
    cfg = run.cfg
    rep = uniqueness_check(run.kernel, cfg.kappa)
    run.add("kernel_sum", rep.kernel_sum, None, "")
    run.add("kappa1", rep.kappa1, None, "")
    run.add("inside", rep.inside, None, "")
    run.add("max_row_sum", rep.max_row_sum, None, "")
    run.add("correlation_length", correlation_length(run.kernel, cfg.kappa), None, "sites")
    rows = sorted((list(k) + [v]) for k, v in run.kernel.values.items())
    run.detail([f"dx{i}" for i in range(cfg.d)] + ["K"], rows)


def _do_fluctuations(run: _Run):
    cfg = run.cfg
    geometry = cfg.geometry()
    engine = _ensemble_engine(cfg, geometry)
    ens = fluctuations.ensemble_pressures(geometry, cfg.params(), cfg.n_samples, engine,
                                          run.kernel, cfg.seed, cfg.system, run.mapper,
                                          _mc_options(cfg))
    run.add("mean_pressure", ens.mean, math.sqrt(ens.variance / len(ens.values)))
    run.add("rescaled_variance", ens.rescaled_variance, geometry.volume * ens.variance_stderr, "nat^2")
    run.detail(("sample_index", "pressure"), ens.entries)
    if cfg.n_samples >= 100:
        rep = fluctuations.clt_test(ens)
        run.add("clt_degenerate", rep.degenerate, None, "")
        if not rep.degenerate:
            run.add("ks_distance", rep.ks_distance, None, "")
            run.add("ks_pvalue", rep.ks_pvalue, None, "")
            run.add("skewness", rep.skewness, None, "")
            run.add("excess_kurtosis", rep.excess_kurtosis, None, "")
            scaled = ens.rescaled()
            run.plot("histogram", fluctuations.histogram_rows(scaled, cfg.bins))
            run.plot("qq", fluctuations.qq_rows(scaled))
    if cfg.sizes:
        rep = fluctuations.variance_scaling([cfg.geometry(n) for n in cfg.sizes], cfg.params(),
                                            cfg.n_samples, engine, run.kernel, cfg.seed,
                                            cfg.system, run.mapper)
        run.add("scaling_degenerate", rep.degenerate, None, "")
        run.add("variance_slope", rep.slope, rep.slope_stderr, "")
        run.plot("variance-scaling", rep.table_rows())


def _do_gamma(run: _Run):
    cfg = run.cfg
    qbar = cfg.q
    if qbar == 0.0 and cfg.h != 0.0 and cfg.beta > 0.0:
        est = rs.EstimatorConfig(cfg.geometry(), run.kernel, cfg.n_samples, cfg.seed,
                                 {"exact": "auto"}.get(cfg.engine, cfg.engine))
        fp = rs.fixed_point_qbar(cfg.kappa, cfg.beta, cfg.h, est, tol=1e-6)
        qbar = fp.q
        run.plot("fixed-point", list(enumerate(fp.trajectory)))
    g = fluctuations.estimate_gamma(cfg.kappa, cfg.beta, cfg.h, qbar, cfg.buffer, cfg.n_outer,
                                    cfg.n_inner, run.kernel if cfg.d == 1 else None, cfg.seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        pred = fluctuations.variance_prediction(g, cfg.beta, qbar)
    run.add("qbar", qbar, None, "")
    run.add("Gamma", g.gamma.mean, g.gamma.stderr, "nat^2")
    run.add("variance_prediction", pred, g.gamma.stderr, "nat^2")
    run.add("prediction_positive", pred > 0, None, "")
    run.add("estimator_warning", bool(caught), None, "")
    run.detail(("quantity", "value"), [("buffer", g.buffer), ("n_outer", g.n_outer),
                                       ("n_inner", g.n_inner)])


def _do_mc_validate(run: _Run):
    cfg = run.cfg
    geometry = cfg.geometry()
    n = geometry.volume
    if n > exact.SINGLE_CAP:
        raise ConfigError(f"field 'N': mc-validate compares with enumeration, at most {exact.SINGLE_CAP} sites")
    params = cfg.params()
    rows, worst = [], 0.0
    for k in range(cfg.n_samples):
        model = interpolating_model(params, sample_disorder(geometry, cfg.seed, k), run.kernel, geometry)
        ex = exact.enumerate_model(model)
        m_exact = float(ex.magnetizations.mean())
        e_exact = float(model.expectation(ex.correlations, ex.magnetizations)) / n
        m_mc = mc.estimate_expectation(lambda S: S.mean(axis=1), model, 1.0, cfg.burn_in,
                                       cfg.n_sweeps, cfg.seed, ("validate", k))
        e_mc = mc.estimate_expectation(lambda S: model.energy(S) / n, model, 1.0, cfg.burn_in,
                                       cfg.n_sweeps, cfg.seed, ("validate", k))
        zm = (m_mc.mean - m_exact) / m_mc.stderr if m_mc.stderr > 0 else 0.0
        ze = (e_mc.mean - e_exact) / e_mc.stderr if e_mc.stderr > 0 else 0.0
        worst = max(worst, abs(zm), abs(ze))
        rows.append((k, m_exact, m_mc.mean, m_mc.stderr, e_exact, e_mc.mean, e_mc.stderr))
    run.add("max_abs_z", worst, None, "")
    run.add("within_3_stderr", worst <= 3.0, None, "")
    run.detail(("sample_index", "m_exact", "m_mc", "m_stderr", "e_exact", "e_mc", "e_stderr"), rows)


_HANDLERS = {
    "pressure": _do_pressure,
    "rs-solve": _do_rs_solve,
    "interpolate-check": _do_interpolate_check,
    "dobrushin": _do_dobrushin,
    "fluctuations": _do_fluctuations,
    "gamma": _do_gamma,
    "mc-validate": _do_mc_validate,
}


def resolve_out_dir(cfg: ExperimentConfig, flag: str | None = None) -> Path:
    return Path(flag or os.environ.get(OUT_ENV) or cfg.out)


def run(cfg: ExperimentConfig, out_dir=None) -> int:
    """Execute ``cfg`` and write its result files; returns the exit status."""
    started = time.time()
    try:
        validate(cfg)
        r = _Run(cfg)
        try:
            _HANDLERS[cfg.subcommand](r)
        finally:
            r.close()
        r.write(Path(out_dir) if out_dir else resolve_out_dir(cfg), started)
    except ConvergenceError as exc:
        print(f"isk {cfg.subcommand}: no convergence: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, DegenerateError, ValueError) as exc:
        print(f"isk {cfg.subcommand}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="isk", description="Ising-SK model laboratory")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="key = value config file")
    parser.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    parser.add_argument("--workers", type=int, help="worker processes for ensemble loops")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--print-config", action="store_true",
                        help="print the effective config and exit")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.subcommand, seed=args.seed, workers=args.workers)
    except (ConfigError, ValueError) as exc:
        print(f"isk {args.subcommand}: {exc}", file=sys.stderr)
        return 1
    if args.print_config:
        sys.stdout.write(cfg.dumps())
        print(f"# config_hash = {cfg.config_hash()}")
        return 0
    return run(cfg, resolve_out_dir(cfg, args.out))


if __name__ == "__main__":
    sys.exit(main())
