"""The replica-symmetric functional F(q) = p^RFIM(kappa, h, beta sqrt(q)) + beta^2/4 (1-q)^2.

p^RFIM is estimated by averaging finite-volume pressures over a fixed bank of
field realizations.  The same bank is used for every q (common random
numbers), so differences in q are far less noisy than the values themselves.
By default the bank holds antithetic pairs (J, -J) and is rescaled so that
its pooled second moment is exactly one; a *unit* is one antithetic pair and
error bars are computed over units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .disorder import sample_fields
from .errors import ConvergenceError, DegenerateError, DomainError
from .exact import SINGLE_CAP, enumerate_model
from .hamiltonians import rfim_model
from .lattice import BoxGeometry, InteractionKernel
from .mc import estimate_expectation, thermo_integration_pressure
from .stats import EstimateWithError, mean_with_error
from .transfer import chain_log_partition, chain_magnetizations

__all__ = [
    "EstimatorConfig",
    "RSFunctionalPoint",
    "RSSolution",
    "FixedPoint",
    "CurvatureReport",
    "rfim_pressure_units",
    "mean_square_magnetization_units",
    "evaluate_F",
    "minimize_F",
    "fixed_point_qbar",
    "sk_rs_reference",
    "rs_pressure_prediction",
    "curvature_check",
    "solve_rs",
]

ENUMERATION_LIMIT = 20


@dataclass(frozen=True)
class EstimatorConfig:
    """How p^RFIM and the magnetizations are averaged over disorder.

    ``engine`` is one of ``auto``, ``factorized`` (kappa = 0 only),
    ``enumeration``, ``transfer`` or ``mc``.  ``auto`` picks factorized when
    there is no Ising coupling, then enumeration up to 20 sites, then the
    transfer matrix for 1D nearest-neighbour chains, then Monte Carlo.
    """

    geometry: BoxGeometry = field(default_factory=lambda: BoxGeometry.chain(1000))
    kernel: InteractionKernel | None = None
    n_samples: int = 200
    master_seed: int = 0
    engine: str = "auto"
    antithetic: bool = True
    moment_matching: bool = True
    burn_in: int = 1000
    n_sweeps: int = 10_000

    def resolved_kernel(self) -> InteractionKernel:
        return self.kernel or InteractionKernel.nearest_neighbor(self.geometry.d)

    def resolved_engine(self, kappa: float) -> str:
        if self.engine != "auto":
            return self.engine
        kernel = self.resolved_kernel()
        if kappa == 0.0 or not kernel.values:
            return "factorized"
        if self.geometry.volume <= ENUMERATION_LIMIT:
            return "enumeration"
        if kernel.is_nearest_neighbor_chain():
            return "transfer"
        return "mc"


@lru_cache(maxsize=16)
def _field_bank(geometry, master_seed, n_samples, antithetic, moment_matching):
    bank = np.array([sample_fields(geometry, master_seed, k) for k in range(n_samples)])
    if antithetic:
        bank = np.concatenate([bank, -bank])
    if moment_matching:
        bank = bank / math.sqrt(np.mean(bank**2))
    bank.setflags(write=False)
    return bank


def field_bank(config: EstimatorConfig) -> np.ndarray:
    """Fields of every replica-sample, shape (n_samples * (1 + antithetic), |Lambda|)."""
    return _field_bank(config.geometry, config.master_seed, config.n_samples,
                       config.antithetic, config.moment_matching)


def _to_units(values, config):
    values = np.asarray(values, dtype=float)
    if config.antithetic:
        half = len(values) // 2
        return 0.5 * (values[:half] + values[half:])
    return values


def _per_sample(kappa, h, gamma, config, what):
    bank = field_bank(config)
    engine = config.resolved_engine(kappa)
    kernel = config.resolved_kernel()
    geometry = config.geometry
    n = geometry.volume
    b = h + gamma * bank
    if engine == "factorized":
        if kappa != 0.0 and kernel.values:
            raise DomainError("the factorized engine needs kappa = 0")
        if what == "pressure":
            return np.mean(np.logaddexp(b, -b), axis=1)
        return np.mean(np.tanh(b) ** 2, axis=1)
    if engine == "transfer":
        if not kernel.is_nearest_neighbor_chain():
            raise DomainError("the transfer engine needs a 1D nearest-neighbour kernel")
        J = kappa * kernel((1,))
        if what == "pressure":
            return chain_log_partition(b, J) / n
        return np.mean(chain_magnetizations(b, J) ** 2, axis=1)
    out = np.empty(len(bank))
    for k, fields in enumerate(bank):
        model = rfim_model(geometry, kappa, h, gamma, fields, kernel)
        if engine == "enumeration":
            summary = enumerate_model(model, SINGLE_CAP, moments=(what != "pressure"))
            out[k] = summary.pressure if what == "pressure" else np.mean(summary.magnetizations**2)
        elif engine == "mc":
            if what == "pressure":
                out[k] = thermo_integration_pressure(
                    model, burn_in=config.burn_in, n_sweeps=config.n_sweeps,
                    master_seed=config.master_seed, labels=("rs", k)).pressure.mean
            else:
                # E<s_i>^2 = E<s_i^1 s_i^2>: overlap of two independent chains
                out[k] = estimate_expectation(
                    lambda a, c: np.mean(a * c, axis=1), model, 1.0, config.burn_in,
                    config.n_sweeps, config.master_seed, ("rs-q", k), replicas=2).mean
        else:
            raise DomainError(f"unknown engine {engine!r}")
    return out


def rfim_pressure_units(kappa: float, h: float, gamma: float, config: EstimatorConfig) -> np.ndarray:
    """Finite-volume RFIM pressure for each unit of the field bank."""
    return _to_units(_per_sample(kappa, h, gamma, config, "pressure"), config)


def mean_square_magnetization_units(kappa: float, h: float, gamma: float,
                                    config: EstimatorConfig) -> np.ndarray:
    """|Lambda|^-1 sum_i <s_i>^2 for each unit of the field bank."""
    return _to_units(_per_sample(kappa, h, gamma, config, "magnetization"), config)


@dataclass(frozen=True)
class RSFunctionalPoint:
    q: float
    rfim_pressure: float
    stderr: float
    F_value: float
    engine: str
    n_samples: int
    geometry: BoxGeometry


def _F_units(q, kappa, beta, h, config):
    return rfim_pressure_units(kappa, h, beta * math.sqrt(q), config) + 0.25 * beta**2 * (1 - q) ** 2


def evaluate_F(q: float, kappa: float, beta: float, h: float,
               config: EstimatorConfig | None = None) -> RSFunctionalPoint:
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"q must lie in [0, 1], got {q}")
    config = config or EstimatorConfig()
    try:
        units = rfim_pressure_units(kappa, h, beta * math.sqrt(q), config)
    except Exception as exc:
        raise type(exc)(f"evaluating F at q={q}: {exc}") from exc
    est = mean_with_error(units)
    return RSFunctionalPoint(q, est.mean, est.stderr, est.mean + 0.25 * beta**2 * (1 - q) ** 2,
                             config.resolved_engine(kappa), config.n_samples, config.geometry)


@dataclass
class RSSolution:
    qbar: float
    F_min: float
    F_stderr: float
    grid: np.ndarray
    grid_F: np.ndarray
    grid_stderr: np.ndarray
    competitors: list = field(default_factory=list)   # near-degenerate grid minima
    fixed_point_q: float | None = None
    second_derivative_estimate: float | None = None

    @property
    def unique(self) -> bool:
        return not self.competitors

    @property
    def agreement_gap(self) -> float | None:
        if self.fixed_point_q is None:
            return None
        return abs(self.qbar - self.fixed_point_q)

    def curve_rows(self):
        """(q, F(q), stderr) rows for plotting."""
        return list(zip(self.grid.tolist(), self.grid_F.tolist(), self.grid_stderr.tolist()))


def minimize_F(kappa: float, beta: float, h: float, config: EstimatorConfig | None = None,
               grid_step: float = 0.01, tol: float = 1e-4) -> RSSolution:
    """Grid scan of F on [0, 1], then bounded refinement around the best point.

    Grid local minima whose F lies within two standard errors of the best
    (errors of the paired difference) are listed as competitors.
    """
    if beta == 0.0:
        raise DegenerateError("F is flat in q when beta = 0; the minimizer is undefined")
    config = config or EstimatorConfig()
    m = int(round(1.0 / grid_step))
    grid = np.linspace(0.0, 1.0, m + 1)
    units = np.array([_F_units(q, kappa, beta, h, config) for q in grid])
    vals = units.mean(axis=1)
    nu = units.shape[1]
    errs = units.std(axis=1, ddof=1) / math.sqrt(nu) if nu > 1 else np.zeros(len(grid))
    best = int(np.argmin(vals))

    competitors = []
    for i in range(len(grid)):
        if abs(i - best) <= 1:
            continue
        left = vals[i - 1] if i > 0 else np.inf
        right = vals[i + 1] if i < m else np.inf
        if vals[i] <= left and vals[i] <= right:
            diff = units[i] - units[best]
            se = diff.std(ddof=1) / math.sqrt(nu) if nu > 1 else 0.0
            if diff.mean() <= 2.0 * se:
                competitors.append(float(grid[i]))

    lo, hi = grid[max(best - 1, 0)], grid[min(best + 1, m)]
    res = minimize_scalar(lambda q: float(np.mean(_F_units(q, kappa, beta, h, config))),
                          bounds=(lo, hi), method="bounded", options={"xatol": tol})
    if res.fun < vals[best]:
        qbar = float(res.x)
        point = _F_units(qbar, kappa, beta, h, config)
        F_min, F_se = float(point.mean()), float(point.std(ddof=1) / math.sqrt(nu)) if nu > 1 else 0.0
    else:
        qbar, F_min, F_se = float(grid[best]), float(vals[best]), float(errs[best])
    return RSSolution(qbar, F_min, F_se, grid, vals, errs, competitors)


@dataclass
class FixedPoint:
    q: float
    trajectory: list
    converged: bool = True


def fixed_point_qbar(kappa: float, beta: float, h: float, config: EstimatorConfig | None = None,
                     omega: float = 0.5, tol: float = 1e-4, max_iter: int = 200,
                     q0: float | None = None) -> FixedPoint:
    """Solve q = E |Lambda|^-1 sum_i <s_i>^2 for the RFIM at gamma = beta sqrt(q).

    Damped iteration q <- (1 - omega) q + omega Phi(q), projected onto [0, 1],
    starting from Phi(0) unless ``q0`` is given.  Raises ConvergenceError
    (with the trajectory) after ``max_iter`` steps.
    """
    if beta < 0:
        raise DomainError("beta must be non-negative")
    config = config or EstimatorConfig()

    def phi(q):
        return float(np.mean(mean_square_magnetization_units(kappa, h, beta * math.sqrt(q), config)))

    q = phi(0.0) if q0 is None else float(q0)
    trajectory = [q]
    for _ in range(max_iter):
        new = min(max((1.0 - omega) * q + omega * phi(q), 0.0), 1.0)
        trajectory.append(new)
        if abs(new - q) < tol:
            return FixedPoint(new, trajectory)
        q = new
    raise ConvergenceError(f"fixed point not reached in {max_iter} iterations", trajectory)


def _gauss_normal(order):
    z, w = np.polynomial.hermite_e.hermegauss(order)
    return z, w / w.sum()


def sk_rs_reference(beta: float, h: float, order: int = 80, omega: float = 0.5,
                    tol: float = 1e-14, max_iter: int = 100_000):
    """kappa = 0 reference: root of q = E tanh^2(h + beta sqrt(q) z) and the RS pressure.

    Returns (q_root, p_rs) with p_rs = log 2 + E log cosh(h + beta sqrt(q) z)
    + beta^2/4 (1 - q)^2, expectations by Gauss-Hermite quadrature.
    """
    if order < 40:
        raise DomainError("use at least 40 Gauss-Hermite nodes")
    z, w = _gauss_normal(order)
    q = math.tanh(h) ** 2 if (h != 0.0 or beta <= 1.0) else 0.5
    trajectory = [q]
    for _ in range(max_iter):
        new = (1.0 - omega) * q + omega * float(w @ np.tanh(h + beta * math.sqrt(q) * z) ** 2)
        trajectory.append(new)
        if abs(new - q) < tol:
            q = new
            break
        q = new
    else:
        raise ConvergenceError("SK replica-symmetric iteration did not converge", trajectory)
    x = h + beta * math.sqrt(q) * z
    log_cosh = np.logaddexp(x, -x) - math.log(2.0)
    return q, math.log(2.0) + float(w @ log_cosh) + 0.25 * beta**2 * (1 - q) ** 2


def rs_pressure_prediction(kappa: float, beta: float, h: float,
                           config: EstimatorConfig | None = None, **grid) -> EstimateWithError:
    """inf over q in [0, 1] of F: the predicted infinite-volume pressure."""
    config = config or EstimatorConfig()
    if beta == 0.0:
        pt = evaluate_F(0.0, kappa, beta, h, config)
        return EstimateWithError(pt.F_value, pt.stderr, config.n_samples)
    sol = minimize_F(kappa, beta, h, config, **grid)
    return EstimateWithError(sol.F_min, sol.F_stderr, config.n_samples)


@dataclass(frozen=True)
class CurvatureReport:
    value: float
    stderr: float
    at_boundary: bool
    degenerate: bool


def curvature_check(kappa: float, beta: float, h: float, qbar: float,
                    config: EstimatorConfig | None = None, step: float = 0.02,
                    degenerate_tol: float | None = None) -> CurvatureReport:
    """Second difference of F at qbar with common random numbers.

    Interior points use the central stencil; within ``step`` of an endpoint
    the second-order one-sided stencil (2, -5, 4, -1) is used and the report
    is flagged ``at_boundary``.  The curvature counts as degenerate when its
    magnitude is below max(3 stderr, degenerate_tol), with degenerate_tol
    defaulting to 0.02 beta^2.
    """
    config = config or EstimatorConfig()
    if degenerate_tol is None:
        degenerate_tol = 0.02 * beta**2
    if step <= qbar <= 1.0 - step:
        pts, coef, boundary = [qbar - step, qbar, qbar + step], [1.0, -2.0, 1.0], False
    else:
        sign = 1.0 if qbar < step else -1.0
        pts = [qbar + sign * k * step for k in range(4)]
        coef, boundary = [2.0, -5.0, 4.0, -1.0], True
        if min(pts) < -1e-12 or max(pts) > 1.0 + 1e-12:
            raise DomainError("step too large for a one-sided stencil")
        pts = [min(max(p, 0.0), 1.0) for p in pts]
    units = sum(c * _F_units(p, kappa, beta, h, config) for c, p in zip(coef, pts)) / step**2
    est = mean_with_error(units)
    degenerate = abs(est.mean) <= max(3.0 * est.stderr, degenerate_tol)
    return CurvatureReport(est.mean, est.stderr, boundary, degenerate)


def solve_rs(kappa: float, beta: float, h: float, config: EstimatorConfig | None = None,
             fixed_point_config: EstimatorConfig | None = None, **kw) -> RSSolution:
    """Minimizer, fixed point and curvature in one report."""
    config = config or EstimatorConfig()
    sol = minimize_F(kappa, beta, h, config)
    fp = fixed_point_qbar(kappa, beta, h, fixed_point_config or config, **kw)
    sol.fixed_point_q = fp.q
    if 0.0 < sol.qbar < 1.0:
        sol.second_derivative_estimate = curvature_check(kappa, beta, h, sol.qbar, config).value
    return sol
