"""Exact evaluation by enumeration: partition functions, Gibbs averages,
two-replica systems and the replica generating function.

Single-replica sums split the spins into two halves A and B; the exponent
over all configurations is then the matrix

    E[a, b] = e_A(a) + e_B(b) + s_A(a)^T W_AB s_B(b)

whose cross term is one BLAS product.  Two-replica sums are done directly over
pair states, grouped by the overlap (every coupling used here depends on the
pair only through q12).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .disorder import DisorderSample
from .errors import DomainError, SizeError, UnsupportedError
from .hamiltonians import (EnergyModel, ModelParams, interpolating_model,
                           interpolation_slope_model, rfim_model)
from .lattice import BoxGeometry, InteractionKernel
from .transfer import chain_log_partition

__all__ = [
    "SINGLE_CAP",
    "PAIR_CAP",
    "GibbsSummary",
    "OverlapDistribution",
    "all_configurations",
    "enumerate_model",
    "partition_function",
    "pressure",
    "rfim_partition",
    "transfer_matrix_rfim_pressure",
    "overlap_distribution",
    "gibbs_expectation",
    "overlap_moment",
    "interpolation_derivative",
    "interpolation_derivative_check",
    "coupled_partition",
    "replica_generating_function",
    "tilted_overlap_mean",
]

SINGLE_CAP = 24
PAIR_CAP = 12


def all_configurations(n: int) -> np.ndarray:
    """All 2**n spin vectors, shape (2**n, n), as floats."""
    idx = np.arange(2**n)[:, None]
    return (((idx >> np.arange(n)) & 1) * 2 - 1).astype(float)


@dataclass(frozen=True, eq=False)
class GibbsSummary:
    log_partition: float
    volume: int
    magnetizations: np.ndarray | None = None
    correlations: np.ndarray | None = None

    @property
    def pressure(self) -> float:
        return self.log_partition / self.volume

    # -- product measure <.>^{(x)2} built from one replica ------------------
    def overlap_mean(self) -> float:
        """<q12> under two independent replicas."""
        return float(np.mean(self.magnetizations**2))

    def overlap_second_moment(self) -> float:
        """<q12^2> under two independent replicas."""
        return float(np.sum(self.correlations**2)) / self.volume**2

    def overlap_moment(self, order: int, center: float) -> float:
        if order == 1:
            return self.overlap_mean() - center
        if order == 2:
            return self.overlap_second_moment() - 2 * center * self.overlap_mean() + center**2
        raise DomainError("order must be 1 or 2")


def _check_cap(n, cap, what="spins"):
    if n > cap:
        raise SizeError(
            f"{n} {what} exceed the enumeration cap of {cap}; use the Monte Carlo engine (isk.mc)")


def enumerate_model(model: EnergyModel, cap: int = SINGLE_CAP, moments: bool = True) -> GibbsSummary:
    """log Z and (optionally) one- and two-point functions of exp(-H)."""
    n = model.n
    _check_cap(n, cap)
    na = (n + 1) // 2
    nb = n - na
    A, B = slice(0, na), slice(na, n)
    SA, SB = all_configurations(na), all_configurations(nb)
    W, b = model.W, model.b
    eA = 0.5 * np.einsum("ai,ij,aj->a", SA, W[A, A], SA) + SA @ b[A]
    eB = 0.5 * np.einsum("ai,ij,aj->a", SB, W[B, B], SB) + SB @ b[B]
    E = (SA @ W[A, B]) @ SB.T
    E += eA[:, None]
    E += eB[None, :]
    top = E.max()
    E -= top
    np.exp(E, out=E)
    total = E.sum()
    log_z = float(top + math.log(total) + model.c)
    if not moments:
        return GibbsSummary(log_z, n)
    E /= total
    pA, pB = E.sum(axis=1), E.sum(axis=0)
    mag = np.concatenate([SA.T @ pA, SB.T @ pB])
    corr = np.empty((n, n))
    corr[A, A] = SA.T @ (pA[:, None] * SA)
    corr[B, B] = SB.T @ (pB[:, None] * SB)
    corr[A, B] = SA.T @ E @ SB
    corr[B, A] = corr[A, B].T
    return GibbsSummary(log_z, n, np.clip(mag, -1.0, 1.0), corr)


def partition_function(geometry: BoxGeometry, params: ModelParams, sample: DisorderSample,
                       kernel: InteractionKernel, cap: int = SINGLE_CAP) -> float:
    """log Z^(t) (log Z_N itself at the default t = 1)."""
    model = interpolating_model(params, sample, kernel, geometry)
    return enumerate_model(model, cap, moments=False).log_partition


def pressure(geometry, params, sample, kernel, cap: int = SINGLE_CAP) -> float:
    return partition_function(geometry, params, sample, kernel, cap) / geometry.volume


def rfim_partition(geometry: BoxGeometry, kappa: float, h: float, gamma: float,
                   sample: DisorderSample | np.ndarray, kernel: InteractionKernel,
                   cap: int = SINGLE_CAP) -> float:
    """log of sum_s exp(-kappa H^I + sum_i s_i (h + gamma J_i))."""
    fields = sample.fields if isinstance(sample, DisorderSample) else sample
    model = rfim_model(geometry, kappa, h, gamma, fields, kernel)
    return enumerate_model(model, cap, moments=False).log_partition


def transfer_matrix_rfim_pressure(length: int, kappa: float, h: float, gamma: float, fields,
                                  kernel: InteractionKernel | None = None):
    """Exact per-site RFIM pressure of an open nearest-neighbour chain.

    ``fields`` may be a batch of shape (B, length); the result then has
    shape (B,).
    """
    if kernel is None:
        coupling = 1.0
    elif kernel.is_nearest_neighbor_chain():
        coupling = kernel((1,))
    else:
        raise UnsupportedError("the transfer matrix handles 1D nearest-neighbour kernels only")
    fields = np.asarray(fields, dtype=float)
    if fields.shape[-1] != length:
        raise DomainError("fields do not match the chain length")
    return chain_log_partition(h + gamma * fields, kappa * coupling) / length


# -- two replicas -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OverlapDistribution:
    """Law of q12 under two independent replicas of one Gibbs measure.

    ``log_weights[k]`` is log P(q12 = overlaps[k]); ``log_partition`` is log Z
    of a single replica.
    """

    overlaps: np.ndarray
    log_weights: np.ndarray
    log_partition: float
    volume: int

    def reweighted_log_mass(self, extra) -> float:
        """log < exp(extra(q12)) >^{(x)2}."""
        return float(logsumexp(self.log_weights + extra(self.overlaps)))

    def mean(self, func, extra=None) -> float:
        lw = self.log_weights if extra is None else self.log_weights + extra(self.overlaps)
        w = np.exp(lw - logsumexp(lw))
        return float(np.sum(w * func(self.overlaps)))


def overlap_distribution(model: EnergyModel, cap: int = PAIR_CAP, chunk: int = 256) -> OverlapDistribution:
    """Exact law of the overlap by direct summation over all pair states."""
    n = model.n
    _check_cap(n, cap, "spins per replica")
    S = all_configurations(n)
    e = -model.energy(S)
    top = e.max()
    w = np.exp(e - top)
    Si = S.astype(np.int8)
    mass = np.zeros(n + 1)
    for start in range(0, len(S), chunk):
        block = Si[start:start + chunk].astype(np.int32) @ Si.T.astype(np.int32)
        k = (block + n) // 2
        mass += np.bincount(k.ravel(), weights=np.outer(w[start:start + chunk], w).ravel(),
                            minlength=n + 1)
    total = mass.sum()
    with np.errstate(divide="ignore"):
        log_w = np.log(mass / total)
    overlaps = (2.0 * np.arange(n + 1) - n) / n
    log_z = float(top + 0.5 * math.log(total))
    return OverlapDistribution(overlaps, log_w, log_z, n)


def _pair_log_weights(model: EnergyModel, S, quad: float, lin: float, q: float):
    e = -model.energy(S)
    n = model.n

    def pair(i0, i1):
        q12 = (S[i0:i1] @ S.T) / n
        return e[i0:i1, None] + e[None, :] + quad * (q12 - q) ** 2 + lin * (q12 - q)
    return pair


def gibbs_expectation(observable, geometry: BoxGeometry, params: ModelParams,
                      sample: DisorderSample, kernel: InteractionKernel,
                      replicas: int = 1, cap: int | None = None, chunk: int = 256) -> float:
    """Exact Gibbs average for the interpolating system at ``params``.

    ``replicas=1``: ``observable(S)`` maps a batch of configurations (M, n) to
    (M,) values, averaged under <.>_t.

    ``replicas=2``: the pair measure with weight
    exp(-H^(t)(s1) - H^(t)(s2) + (beta^2/2)|Lambda| lam (q12-q)^2 + mu |Lambda| (q12-q)).
    ``observable(S1, S2)`` maps two aligned batches to values.  Passing a pair
    ``(A, B)`` of single-replica observables with lam = mu = 0 uses the
    product structure <A><B> and no pair enumeration.
    """
    model = interpolating_model(params, sample, kernel, geometry)
    n = model.n
    if replicas == 1:
        _check_cap(n, cap or SINGLE_CAP)
        S = all_configurations(n)
        e = -model.energy(S)
        w = np.exp(e - logsumexp(e))
        return float(w @ observable(S))
    if replicas != 2:
        raise DomainError("replicas must be 1 or 2")
    if isinstance(observable, tuple):
        if params.lam or params.mu:
            raise DomainError("factorized observables need lam = mu = 0")
        a, b = observable
        return (gibbs_expectation(a, geometry, params, sample, kernel, 1, cap)
                * gibbs_expectation(b, geometry, params, sample, kernel, 1, cap))
    _check_cap(n, cap or PAIR_CAP, "spins per replica")
    S = all_configurations(n)
    quad = 0.5 * params.beta**2 * n * params.lam
    pair = _pair_log_weights(model, S, quad, params.mu * n, params.q)
    chunks = []
    for i0 in range(0, len(S), chunk):
        lw = pair(i0, i0 + chunk)
        m = len(lw)
        s1 = np.repeat(S[i0:i0 + m], len(S), axis=0)
        s2 = np.tile(S, (m, 1))
        chunks.append((lw.ravel(), observable(s1, s2)))
    lw = np.concatenate([c[0] for c in chunks])
    vals = np.concatenate([c[1] for c in chunks])
    return float(np.sum(np.exp(lw - logsumexp(lw)) * vals))


def overlap_moment(order: int, center: float, geometry: BoxGeometry, params: ModelParams,
                   sample: DisorderSample, kernel: InteractionKernel,
                   measure: str = "product") -> float:
    """< (q12 - center)^order > under the selected two-replica measure.

    ``measure`` is ``"product"`` (<.>_t^{(x)2}), ``"coupled"`` (<.>_{t,lam})
    or ``"tilted"`` (<.>^{(mu)} of the RFIM with gamma = beta sqrt(q)).
    """
    if order not in (1, 2):
        raise DomainError("order must be 1 or 2")
    if measure == "product":
        model = interpolating_model(params, sample, kernel, geometry)
        return enumerate_model(model).overlap_moment(order, center)
    if measure == "coupled":
        model = interpolating_model(params, sample, kernel, geometry)
        dist = overlap_distribution(model)
        quad = 0.5 * params.beta**2 * geometry.volume * params.lam
        return dist.mean(lambda x: (x - center) ** order, lambda x: quad * (x - params.q) ** 2)
    if measure == "tilted":
        gamma = params.beta * math.sqrt(params.q)
        model = rfim_model(geometry, params.kappa, params.h, gamma, sample.fields, kernel)
        dist = overlap_distribution(model)
        mu_n = params.mu * geometry.volume
        return dist.mean(lambda x: (x - center) ** order, lambda x: mu_n * (x - params.q))
    raise DomainError(f"unknown measure {measure!r}")


# -- Gaussian interpolation ---------------------------------------------------

def interpolation_derivative(geometry: BoxGeometry, params: ModelParams, sample: DisorderSample,
                             kernel: InteractionKernel):
    """(d/dt log Z(t), <(q12 - q)^2>_t^{(x)2}) at ``params.t``.

    The derivative is <-dH^(t)/dt>_t evaluated from exact correlations.
    """
    model = interpolating_model(params, sample, kernel, geometry)
    summary = enumerate_model(model)
    slope = interpolation_slope_model(params, sample, geometry)
    dlogz = -slope.expectation(summary.correlations, summary.magnetizations)
    return dlogz, summary.overlap_moment(2, params.q)


@dataclass(frozen=True)
class DerivativeCheck:
    t: np.ndarray
    analytic: np.ndarray          # (T, S) d/dt log Z per t and sample
    finite_difference: np.ndarray  # (T, S) central differences, NaN when skipped
    mean_lhs: np.ndarray          # mean over samples of d/dt p_N(t)
    mean_rhs: np.ndarray          # mean of beta^2/4 (1-q)^2 - beta^2/4 <(q12-q)^2>
    residual: np.ndarray          # mean of lhs - rhs
    residual_stderr: np.ndarray

    @property
    def max_rel_error(self) -> np.ndarray:
        """Per t, worst pointwise |a - fd| / max(|a|, |fd|) over samples."""
        a, fd = self.analytic, self.finite_difference
        scale = np.maximum(np.abs(a), np.abs(fd))
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(scale > 0, np.abs(a - fd) / scale, 0.0)
        return np.nanmax(rel, axis=1) if rel.size else rel

    @property
    def normwise_rel_error(self) -> np.ndarray:
        """Per sample, max_t |a - fd| / max_t |a| (the derivative as a curve in t)."""
        a, fd = self.analytic, self.finite_difference
        scale = np.abs(a).max(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(scale > 0, np.nanmax(np.abs(a - fd), axis=0) / scale, 0.0)

    @property
    def z_scores(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.residual_stderr > 0, self.residual / self.residual_stderr,
                            np.where(self.residual == 0, 0.0, np.inf))


def interpolation_derivative_check(t_grid, q: float, geometry: BoxGeometry, params: ModelParams,
                                   samples, kernel: InteractionKernel, step: float = 1e-4,
                                   finite_difference: bool = True) -> DerivativeCheck:
    """Check d/dt p_N(t) = beta^2/4 (1-q)^2 - beta^2/4 E<(q12-q)^2>_t^{(x)2}.

    Per sample the analytic derivative is compared to a central difference of
    log Z(t); across samples the residual lhs - rhs is averaged with its
    standard error.
    """
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if np.any(t_grid - step <= 0.0) or np.any(t_grid + step >= 1.0):
        raise DomainError("t grid must stay inside (0, 1); the endpoints are singular")
    samples = list(samples)
    n = geometry.volume
    beta = params.beta
    T, S = len(t_grid), len(samples)
    analytic = np.empty((T, S))
    fdiff = np.full((T, S), np.nan)
    lhs_m, rhs_m, res_m, res_se = [], [], [], []
    for i, t in enumerate(t_grid):
        p = params.with_(t=float(t), q=q)
        rhs = np.empty(S)
        for j, s in enumerate(samples):
            dlogz, m2 = interpolation_derivative(geometry, p, s, kernel)
            analytic[i, j] = dlogz
            rhs[j] = 0.25 * beta**2 * (1 - q) ** 2 - 0.25 * beta**2 * m2
            if finite_difference:
                up = partition_function(geometry, p.with_(t=t + step), s, kernel)
                dn = partition_function(geometry, p.with_(t=t - step), s, kernel)
                fdiff[i, j] = (up - dn) / (2 * step)
        lhs = analytic[i] / n
        r = lhs - rhs
        lhs_m.append(lhs.mean())
        rhs_m.append(rhs.mean())
        res_m.append(r.mean())
        res_se.append(r.std(ddof=1) / math.sqrt(S) if S > 1 else 0.0)
    return DerivativeCheck(t_grid, analytic, fdiff, np.array(lhs_m), np.array(rhs_m),
                           np.array(res_m), np.array(res_se))


def coupled_partition(t: float, lam: float, q: float, geometry: BoxGeometry, params: ModelParams,
                      sample: DisorderSample, kernel: InteractionKernel) -> float:
    """log Z^(2)(t, lam) for two replicas coupled by +(beta^2/2)|Lambda| lam (q12-q)^2."""
    if lam < 0:
        raise DomainError("lam must be non-negative")
    p = params.with_(t=t, q=q, lam=lam)
    dist = overlap_distribution(interpolating_model(p, sample, kernel, geometry))
    quad = 0.5 * p.beta**2 * geometry.volume * lam
    return 2.0 * dist.log_partition + dist.reweighted_log_mass(lambda x: quad * (x - q) ** 2)


def _rfim_overlaps(geometry, kappa, h, gamma, sample, kernel):
    fields = sample.fields if isinstance(sample, DisorderSample) else sample
    return overlap_distribution(rfim_model(geometry, kappa, h, gamma, fields, kernel))


def replica_generating_function(mu, q: float, geometry: BoxGeometry, kappa: float, gamma: float,
                                sample, kernel: InteractionKernel, *, h: float,
                                distribution: OverlapDistribution | None = None):
    """alpha_N(mu; J) = (2|Lambda|)^-1 log <exp(mu |Lambda| (q12 - q))>^{(x)2}.

    The two replicas follow the RFIM at (kappa, h, gamma).  ``mu`` may be an
    array; pass ``distribution`` to reuse one enumeration across calls.
    """
    dist = distribution or _rfim_overlaps(geometry, kappa, h, gamma, sample, kernel)
    n = geometry.volume
    mus = np.atleast_1d(np.asarray(mu, dtype=float))
    out = np.array([dist.reweighted_log_mass(lambda x, m=m: m * n * (x - q)) for m in mus]) / (2 * n)
    return out if np.ndim(mu) else float(out[0])


def tilted_overlap_mean(mu: float, geometry, kappa, gamma, sample, kernel, q: float, *,
                        h: float, distribution: OverlapDistribution | None = None) -> float:
    """<q12>^{(mu)}; the mu-derivative of alpha_N is (<q12>^{(mu)} - q) / 2."""
    dist = distribution or _rfim_overlaps(geometry, kappa, h, gamma, sample, kernel)
    n = geometry.volume
    return dist.mean(lambda x: x, lambda x: mu * n * (x - q))
