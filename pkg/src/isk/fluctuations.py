"""Sample-to-sample fluctuations of the pressure.

Ensembles of per-sample pressures, a normality test for the rescaled
fluctuations, the field-driven variance Gamma, the martingale increments of
the RFIM pressure along the lexicographic site order, and the scaling of the
variance with volume.

Functions that loop over disorder samples take a ``mapper`` argument with the
contract of the builtin ``map`` (ordered results); passing a process pool's
``map`` parallelizes them without changing any number.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy import stats

from .disorder import derive_rng, sample_disorder
from .errors import DegenerateError, DomainError, SizeError, UnsupportedError
from .exact import all_configurations, enumerate_model
from .hamiltonians import ModelParams, interpolating_model, rfim_model
from .lattice import BoxGeometry, InteractionKernel, correlation_length, uniqueness_check
from .mc import thermo_integration_pressure
from .stats import EstimateWithError, mean_with_error

__all__ = [
    "PressureEnsemble",
    "CLTReport",
    "GammaEstimate",
    "ScalingReport",
    "ensemble_pressures",
    "clt_test",
    "tilt_log_moment",
    "estimate_gamma",
    "variance_prediction",
    "martingale_increments",
    "martingale_conditional_mean",
    "variance_scaling",
    "histogram_rows",
    "qq_rows",
]

MARTINGALE_CAP = 10


def _gauss_normal(order):
    z, w = np.polynomial.hermite_e.hermegauss(order)
    return z, w / w.sum()


def _log_2cosh(x):
    return np.logaddexp(x, -x)


# ----------------------------------------------------------------- ensembles

@dataclass(frozen=True)
class PressureEnsemble:
    params: ModelParams
    geometry: BoxGeometry
    indices: np.ndarray
    values: np.ndarray
    engine: str
    system: str = "isk"

    @property
    def entries(self):
        return list(zip(self.indices.tolist(), self.values.tolist()))

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    @property
    def variance(self) -> float:
        return float(self.values.var(ddof=1))

    @property
    def rescaled_variance(self) -> float:
        return self.geometry.volume * self.variance

    @property
    def variance_stderr(self) -> float:
        """Standard error of the sample variance from the fourth central moment."""
        x = self.values - self.values.mean()
        m = len(x)
        m2, m4 = np.mean(x**2), np.mean(x**4)
        return float(math.sqrt(max(m4 - m2**2 * (m - 3) / (m - 1), 0.0) / m))

    def rescaled(self) -> np.ndarray:
        """sqrt(|Lambda|) (p - mean)."""
        return math.sqrt(self.geometry.volume) * (self.values - self.values.mean())


def _one_pressure(idx, geometry, params, kernel, engine, system, master_seed, mc_options):
    sample = sample_disorder(geometry, master_seed, idx)
    if system == "isk":
        model = interpolating_model(params, sample, kernel, geometry)
    elif system == "rfim":
        model = rfim_model(geometry, params.kappa, params.h, params.gamma, sample.fields, kernel)
    else:
        raise DomainError(f"unknown system {system!r}")
    if engine == "exact":
        return enumerate_model(model, moments=False).log_partition / geometry.volume
    if engine == "mc":
        return thermo_integration_pressure(model, master_seed=master_seed,
                                           labels=("ensemble", idx), **mc_options).pressure.mean
    raise DomainError(f"unknown engine {engine!r}")


def ensemble_pressures(geometry: BoxGeometry, params: ModelParams, n_samples: int,
                       engine: str = "exact", kernel: InteractionKernel | None = None,
                       master_seed: int = 0, system: str = "isk", mapper=map,
                       mc_options: dict | None = None) -> PressureEnsemble:
    """Per-sample pressures for samples 0 .. n_samples-1.

    ``system="isk"`` uses the interpolating Hamiltonian at ``params`` (the
    full model at t = 1); ``system="rfim"`` uses kappa, h and gamma only.
    """
    if n_samples < 2:
        raise DomainError("an ensemble needs at least two samples")
    kernel = kernel or InteractionKernel.nearest_neighbor(geometry.d)
    task = partial(_one_pressure, geometry=geometry, params=params, kernel=kernel, engine=engine,
                   system=system, master_seed=master_seed, mc_options=mc_options or {})
    values = np.fromiter(mapper(task, range(n_samples)), dtype=float, count=n_samples)
    return PressureEnsemble(params, geometry, np.arange(n_samples), values, engine, system)


# ----------------------------------------------------------------- normality

@dataclass(frozen=True)
class CLTReport:
    ks_distance: float
    ks_pvalue: float
    skewness: float
    excess_kurtosis: float
    n: int
    degenerate: bool = False

    def normal_at(self, level: float = 0.01) -> bool:
        return not self.degenerate and self.ks_pvalue >= level


def clt_test(ensemble: PressureEnsemble | np.ndarray) -> CLTReport:
    """KS test of the standardized fluctuations against N(0, 1).

    Accepts an ensemble or a plain array.  The scale is the sample standard
    deviation, so the p-value is slightly conservative.
    """
    x = ensemble.rescaled() if isinstance(ensemble, PressureEnsemble) else np.asarray(ensemble, float)
    n = len(x)
    if n < 100:
        raise DomainError("the normality test needs at least 100 values")
    sd = x.std(ddof=1)
    if sd == 0.0 or not np.isfinite(sd):
        return CLTReport(math.nan, math.nan, math.nan, math.nan, n, degenerate=True)
    z = (x - x.mean()) / sd
    ks = stats.kstest(z, "norm")
    return CLTReport(float(ks.statistic), float(ks.pvalue), float(stats.skew(z)),
                     float(stats.kurtosis(z)), n)


def histogram_rows(values, bins: int = 40):
    """(left edge, right edge, count) rows."""
    counts, edges = np.histogram(np.asarray(values, float), bins=bins)
    return [(float(edges[i]), float(edges[i + 1]), int(c)) for i, c in enumerate(counts)]


def qq_rows(values):
    """(normal quantile, ordered standardized value) rows."""
    x = np.sort(np.asarray(values, float))
    z = (x - x.mean()) / x.std(ddof=1)
    probs = (np.arange(1, len(x) + 1) - 0.5) / len(x)
    return list(zip(stats.norm.ppf(probs).tolist(), z.tolist()))


# ----------------------------------------------------------------- Gamma

def tilt_log_moment(c, m0):
    """log <exp(c s)> = log(cosh c + m0 sinh c) for a +-1 spin with mean m0."""
    c = np.asarray(c, dtype=float)
    m0 = np.asarray(m0, dtype=float)
    if np.any(np.abs(m0) > 1.0 + 1e-12):
        raise DomainError("a spin magnetization must lie in [-1, 1]")
    m0 = np.clip(m0, -1.0, 1.0)
    with np.errstate(divide="ignore"):
        out = np.logaddexp(c + np.log1p(m0) - math.log(2.0), -c + np.log1p(-m0) - math.log(2.0))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GammaEstimate:
    gamma: EstimateWithError
    qbar_used: float
    buffer: int
    n_outer: int
    n_inner: int


def _cavity_field(b, coupling):
    """Effective field on the next site from a chain with fields b (rows: draws, cols: far to near)."""
    u = np.zeros(b.shape[0])
    t = math.tanh(coupling)
    for j in range(b.shape[1]):
        u = np.arctanh(t * np.tanh(b[:, j] + u))
    return u


def estimate_gamma(kappa: float, beta: float, h: float, qbar: float, buffer: int = 8,
                   n_outer: int = 200, n_inner: int = 200, kernel: InteractionKernel | None = None,
                   master_seed: int = 0, quad_order: int = 40) -> GammaEstimate:
    """Nested estimate of Gamma on a chain of 2 buffer + 1 sites centred at 0.

    With c = beta sqrt(qbar) (J'_0 - J_0) and m_0 the centre magnetization,

        Gamma = E_{J_i, i >= 0} ( E_{J'_0, J_i, i < 0} log <exp(c s_0)> )^2.

    J_0 and J'_0 are integrated by Gauss-Hermite quadrature; the fields to
    the right (outer) and left (inner) of the centre are sampled.  The
    squared inner mean is corrected by its own sampling variance.
    """
    kernel = kernel or InteractionKernel.nearest_neighbor(1)
    if not kernel.is_nearest_neighbor_chain() and kappa != 0.0:
        raise UnsupportedError("estimate_gamma supports 1D nearest-neighbour chains")
    if qbar < 0 or qbar > 1 or beta < 0:
        raise DomainError("need beta >= 0 and qbar in [0, 1]")
    report = uniqueness_check(kernel, kappa)
    if not report.inside:
        raise DomainError(f"kappa = {kappa} lies outside the uniqueness region (kappa1 = {report.kappa1})")
    xi = correlation_length(kernel, kappa)
    if buffer < 3.0 * xi:
        raise DomainError(f"buffer {buffer} is shorter than 3 correlation lengths ({3 * xi:.3g})")
    if n_outer < 2 or n_inner < 2:
        raise DomainError("need at least two outer and two inner draws")

    g = beta * math.sqrt(qbar)
    if g == 0.0:
        return GammaEstimate(EstimateWithError(0.0, 0.0, n_outer), qbar, buffer, n_outer, n_inner)
    coupling = kappa * kernel((1,)) if kernel.values else 0.0
    z, w = _gauss_normal(quad_order)
    rng_out = derive_rng(master_seed, "gamma", "outer")
    rng_in = derive_rng(master_seed, "gamma", "inner")
    # right: sites 1..buffer, fed from the far end; left: sites -buffer..-1
    right = h + g * rng_out.standard_normal((n_outer, buffer))
    left = h + g * rng_in.standard_normal((n_inner, buffer))
    u_right = _cavity_field(right[:, ::-1], coupling)
    u_left = _cavity_field(left, coupling)

    b0 = h + g * z                                   # centre field per J_0 node
    c = g * (z[None, :] - z[:, None])                 # (J_0 node, J'_0 node)
    per_outer = np.empty(n_outer)
    for r in range(n_outer):
        m0 = np.tanh(b0[:, None] + u_right[r] + u_left[None, :])     # (J_0 node, inner)
        y = tilt_log_moment(c[:, None, :], m0[..., None]) @ w        # average over J'_0
        inner_mean = y.mean(axis=1)
        inner_var = y.var(axis=1, ddof=1)
        per_outer[r] = (inner_mean**2 - inner_var / n_inner) @ w     # average over J_0
    est = mean_with_error(per_outer)
    value = max(est.mean, 0.0)
    return GammaEstimate(EstimateWithError(value, est.stderr, n_outer), qbar, buffer, n_outer, n_inner)


def variance_prediction(gamma: GammaEstimate, beta: float, qbar: float) -> float:
    """Gamma - beta^2 qbar^2 / 2, the predicted limit of |Lambda| Var(p).

    Warns when a nontrivial estimate comes out non-positive.
    """
    value = gamma.gamma.mean - 0.5 * beta**2 * qbar**2
    if value <= 0.0 and (gamma.gamma.mean > 0.0 or beta * qbar > 0.0):
        warnings.warn(f"non-positive variance prediction {value:.3g}: the Gamma estimate is unreliable",
                      RuntimeWarning, stacklevel=2)
    return value


# ----------------------------------------------------------------- martingale

def _fields_of(sample):
    return np.asarray(sample.fields if hasattr(sample, "fields") else sample, dtype=float)


def _site_magnetizations(states, site, kappa, h, gamma, geometry, kernel):
    """<s_site> for each row of J-field configurations ``states`` (B, n) by enumeration."""
    n = geometry.volume
    S = all_configurations(n)
    W = kappa * kernel.matrix(geometry)
    base = 0.5 * np.einsum("ai,ij,aj->a", S, W, S) + h * S.sum(axis=1)
    logits = base[None, :] + gamma * states @ S.T
    logits -= logits.max(axis=1, keepdims=True)
    p = np.exp(logits)
    p /= p.sum(axis=1, keepdims=True)
    return p @ S[:, site]


def _future_points(m, order, max_points, n_mc, rng):
    if m == 0:
        return np.zeros((1, 0)), np.ones(1)
    if order**m <= max_points:
        z, w = _gauss_normal(order)
        grids = np.meshgrid(*([z] * m), indexing="ij")
        weights = np.prod(np.meshgrid(*([w] * m), indexing="ij"), axis=0)
        return np.stack([g.ravel() for g in grids], axis=1), weights.ravel()
    return rng.standard_normal((n_mc, m)), np.full(n_mc, 1.0 / n_mc)


def _increment(J, k, kappa, h, gamma, geometry, kernel, quad_order, future_order, max_points,
               n_mc, rng):
    n = len(J)
    z, w = _gauss_normal(quad_order)
    if kappa == 0.0 or not kernel.values:
        lc = _log_2cosh(h + gamma * J[k])
        return (lc - w @ _log_2cosh(h + gamma * z)) / math.sqrt(n)
    pts, pw = _future_points(n - k - 1, future_order, max_points, n_mc, rng)
    states = np.repeat(J[None, :], len(pts), axis=0)
    states[:, k + 1:] = pts
    m0 = _site_magnetizations(states, k, kappa, h, gamma, geometry, kernel)
    tilt = tilt_log_moment(gamma * (z[None, :] - J[k]), m0[:, None]) @ w
    return -float(pw @ tilt) / math.sqrt(n)


def martingale_increments(sample, kappa: float, h: float, gamma: float, geometry: BoxGeometry,
                          kernel: InteractionKernel | None = None, quad_order: int = 60,
                          future_order: int = 6, max_points: int = 50_000, n_mc: int = 4000,
                          master_seed: int = 0) -> np.ndarray:
    """xi_k = -n^-1/2 E_{J'_k, J_l: l > k} log <exp(gamma (J'_k - J_k) s_k)>, k in site order.

    The bracket is the RFIM Gibbs measure with the actual fields at sites
    l <= k.  At kappa = 0 the increments are in closed form; for kappa > 0
    (at most 10 sites) the future fields are integrated by a tensor
    Gauss-Hermite rule when it has at most ``max_points`` nodes, else by
    ``n_mc`` Monte Carlo draws.  The increments sum to sqrt(n) (p - E p).
    """
    kernel = kernel or InteractionKernel.nearest_neighbor(geometry.d)
    J = _fields_of(sample)
    n = geometry.volume
    if len(J) != n:
        raise DomainError("fields do not match the geometry")
    if kappa != 0.0 and kernel.values and n > MARTINGALE_CAP:
        raise SizeError(f"the kappa > 0 decomposition is limited to {MARTINGALE_CAP} sites")
    rng = derive_rng(master_seed, "martingale")
    return np.array([_increment(J, k, kappa, h, gamma, geometry, kernel, quad_order,
                                future_order, max_points, n_mc, rng) for k in range(n)])


def martingale_conditional_mean(sample, k: int, kappa: float, h: float, gamma: float,
                                geometry: BoxGeometry, kernel: InteractionKernel | None = None,
                                order: int = 81, **kw) -> float:
    """E[xi_k | J_l, l < k], integrating J_k by a Gauss-Hermite rule of ``order`` nodes."""
    kernel = kernel or InteractionKernel.nearest_neighbor(geometry.d)
    J = _fields_of(sample).copy()
    z, w = _gauss_normal(order)
    rng = derive_rng(kw.pop("master_seed", 0), "martingale")
    defaults = dict(quad_order=60, future_order=6, max_points=50_000, n_mc=4000)
    defaults.update(kw)
    total = 0.0
    for zi, wi in zip(z, w):
        J[k] = zi
        total += wi * _increment(J, k, kappa, h, gamma, geometry, kernel, rng=rng, **defaults)
    return float(total)


# ----------------------------------------------------------------- scaling

@dataclass(frozen=True)
class ScalingReport:
    volumes: np.ndarray
    variances: np.ndarray
    variance_stderrs: np.ndarray
    slope: float
    slope_stderr: float
    intercept: float
    degenerate: bool = False

    def table_rows(self):
        """(|Lambda|, Var, stderr) rows in increasing volume."""
        return list(zip(self.volumes.tolist(), self.variances.tolist(),
                        self.variance_stderrs.tolist()))


def variance_scaling(geometries, params: ModelParams, n_samples: int, engine: str = "exact",
                     kernel: InteractionKernel | None = None, master_seed: int = 0,
                     system: str = "isk", mapper=map) -> ScalingReport:
    """Least-squares slope of log Var(p) against log |Lambda|."""
    geometries = sorted(geometries, key=lambda g: g.volume)
    if len(geometries) < 3:
        raise DomainError("the scaling fit needs at least three sizes")
    ens = [ensemble_pressures(g, params, n_samples, engine, kernel, master_seed, system, mapper)
           for g in geometries]
    vols = np.array([g.volume for g in geometries], dtype=float)
    var = np.array([e.variance for e in ens])
    err = np.array([e.variance_stderr for e in ens])
    if np.any(var <= 0.0):
        return ScalingReport(vols, var, err, math.nan, math.nan, math.nan, degenerate=True)
    fit = stats.linregress(np.log(vols), np.log(var))
    return ScalingReport(vols, var, err, float(fit.slope), float(fit.stderr), float(fit.intercept))
