"""Single-spin-flip Metropolis sampling and thermodynamic integration.

Chains sweep the sites in lexicographic order against exp(-s H).  The
per-site local fields are cached and updated after every accepted flip, so a
flip costs O(n).  Uniform variates come from the labelled streams of
:mod:`isk.disorder`; the compiled kernel only does arithmetic, which keeps
trajectories reproducible from (seed, labels).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.integrate import simpson
from scipy.stats import linregress

from .disorder import derive_rng, sample_disorder
from .errors import DomainError
from .exact import enumerate_model
from .hamiltonians import EnergyModel, ModelParams, interpolating_model
from .lattice import BoxGeometry, InteractionKernel
from .stats import EstimateWithError, blocked_stderr, mean_with_error

__all__ = [
    "ChainState",
    "EstimateWithError",
    "metropolis_acceptance",
    "new_chain",
    "sweep",
    "run_chain",
    "sweep_transition_matrix",
    "estimate_expectation",
    "ThermoIntegration",
    "thermo_integration_pressure",
    "OverlapProbe",
    "overlap_concentration_probe",
]

MC = "mc"  # stream label


@njit(cache=True)
def _sweeps(spins, fields, W, s, uniforms, record):
    n_sweeps, n = uniforms.shape
    accepted = 0
    for t in range(n_sweeps):
        for i in range(n):
            de = 2.0 * spins[i] * fields[i]
            if de <= 0.0 or uniforms[t, i] < math.exp(-s * de):
                spins[i] = -spins[i]
                step = 2.0 * spins[i]
                for j in range(n):
                    fields[j] += W[j, i] * step
                accepted += 1
        for i in range(n):
            record[t, i] = spins[i]
    return accepted


def metropolis_acceptance(delta_e, s: float):
    """min(1, exp(-s dE)), the rule applied by :func:`sweep`."""
    return np.minimum(1.0, np.exp(-s * np.asarray(delta_e, dtype=float)))


@dataclass
class ChainState:
    configuration: np.ndarray
    local_fields: np.ndarray
    rng: np.random.Generator = field(repr=False)
    sweep_count: int = 0
    labels: tuple = ()

    def copy(self) -> "ChainState":
        rng = np.random.Generator(type(self.rng.bit_generator)())
        rng.bit_generator.state = self.rng.bit_generator.state
        return ChainState(self.configuration.copy(), self.local_fields.copy(), rng,
                          self.sweep_count, self.labels)


def new_chain(model: EnergyModel, master_seed: int, *labels, initial=None) -> ChainState:
    """A chain started from ``initial`` or from a uniformly random configuration."""
    rng = derive_rng(master_seed, MC, *labels)
    if initial is None:
        spins = rng.choice([-1.0, 1.0], size=model.n)
    else:
        spins = np.array(initial, dtype=float)
    return ChainState(spins, model.local_fields(spins), rng, 0, (master_seed,) + labels)


def _advance(state: ChainState, model: EnergyModel, s: float, n_sweeps: int, chunk: int = 4096):
    n = model.n
    out = np.empty((n_sweeps, n), dtype=np.int8)
    W = np.ascontiguousarray(model.W, dtype=float)
    done = 0
    while done < n_sweeps:
        m = min(chunk, n_sweeps - done)
        u = state.rng.random((m, n))
        if s == 0.0:
            # every flip is accepted at s = 0, which makes the sweep periodic;
            # the target law is uniform there, so draw it directly
            block = np.where(u < 0.5, -1, 1).astype(np.int8)
            out[done:done + m] = block
            state.configuration[:] = block[-1]
            state.local_fields[:] = model.local_fields(state.configuration)
            done += m
            continue
        _sweeps(state.configuration, state.local_fields, W, float(s), u, out[done:done + m])
        done += m
    state.sweep_count += n_sweeps
    return out


def sweep(state: ChainState, model: EnergyModel, s: float = 1.0, n_sweeps: int = 1) -> ChainState:
    """Return the state after ``n_sweeps`` lexicographic Metropolis sweeps."""
    new = state.copy()
    _advance(new, model, s, n_sweeps)
    return new


def run_chain(model: EnergyModel, s: float, n_sweeps: int, burn_in: int = 1000,
              master_seed: int = 0, labels=(), initial=None):
    """Configurations after each measurement sweep, shape (n_sweeps, n), int8."""
    state = new_chain(model, master_seed, *labels, initial=initial)
    if burn_in:
        _advance(state, model, s, burn_in)
    return _advance(state, model, s, n_sweeps), state


def sweep_transition_matrix(model: EnergyModel, s: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Exact one-sweep transition matrix over all 2**n states and the Gibbs law.

    States are indexed as in :func:`isk.exact.all_configurations`.
    """
    from .exact import all_configurations
    n = model.n
    S = all_configurations(n)
    index = {tuple(row): k for k, row in enumerate(S)}
    P = np.eye(len(S))
    for i in range(n):
        Pi = np.zeros_like(P)
        for k, row in enumerate(S):
            acc = float(metropolis_acceptance(model.flip_delta(row, i), s))
            flipped = row.copy()
            flipped[i] = -flipped[i]
            Pi[k, index[tuple(flipped)]] += acc
            Pi[k, k] += 1.0 - acc
        P = P @ Pi
    e = -s * model.energy(S)
    pi = np.exp(e - e.max())
    return P, pi / pi.sum()


def estimate_expectation(observable, model: EnergyModel, s: float = 1.0, burn_in: int = 1000,
                         n_sweeps: int = 10_000, master_seed: int = 0, labels=(),
                         replicas: int = 1) -> EstimateWithError:
    """Time average of ``observable`` over one chain (or two independent ones).

    ``observable`` maps a batch of configurations (M, n) to M values, or two
    aligned batches to M values when ``replicas=2``.
    """
    if burn_in < 0 or n_sweeps <= 0:
        raise DomainError("need burn_in >= 0 and n_sweeps > 0")
    runs = [run_chain(model, s, n_sweeps, burn_in, master_seed, tuple(labels) + (r,))[0]
            for r in range(replicas)]
    series = np.asarray(observable(*[r.astype(float) for r in runs]), dtype=float)
    if series.ndim == 0:
        series = np.full(n_sweeps, float(series))
    se, tau, _ = blocked_stderr(series)
    return EstimateWithError(float(series.mean()), se, n_sweeps, tau)


@dataclass(frozen=True)
class ThermoIntegration:
    pressure: EstimateWithError
    nodes: np.ndarray
    node_means: np.ndarray
    node_stderrs: np.ndarray
    statistical_error: float
    quadrature_error: float

    def trace_rows(self):
        """(s, <-H>_s / |Lambda|, stderr) rows for plotting."""
        return list(zip(self.nodes.tolist(), self.node_means.tolist(), self.node_stderrs.tolist()))


def _simpson_weights(x):
    return np.array([simpson(np.eye(len(x))[k], x=x) for k in range(len(x))])


def thermo_integration_pressure(model: EnergyModel, nodes=None, burn_in: int = 1000,
                                n_sweeps: int = 10_000, master_seed: int = 0,
                                labels=()) -> ThermoIntegration:
    """p = log 2 + int_0^1 <-H>_s / |Lambda| ds with Simpson's rule.

    The statistical error combines the per-node blocked errors with the
    Simpson weights; the quadrature error is |S(all) - S(every other)| / 15.
    """
    nodes = np.linspace(0.0, 1.0, 21) if nodes is None else np.asarray(nodes, dtype=float)
    if len(nodes) < 3 or np.any(np.diff(nodes) <= 0) or nodes[0] != 0.0 or nodes[-1] != 1.0:
        raise DomainError("nodes must increase strictly from 0 to 1")
    n = model.n
    means, errs = [], []
    for k, s in enumerate(nodes):
        est = estimate_expectation(lambda S: -model.energy(S) / n, model, s, burn_in, n_sweeps,
                                   master_seed, tuple(labels) + ("ti", k))
        means.append(est.mean)
        errs.append(est.stderr)
    means, errs = np.array(means), np.array(errs)
    w = _simpson_weights(nodes)
    integral = float(w @ means)
    stat = float(math.sqrt(np.sum((w * errs) ** 2)))
    if len(nodes) % 2 == 1 and len(nodes) >= 5:
        coarse = float(_simpson_weights(nodes[::2]) @ means[::2])
        quad = abs(integral - coarse) / 15.0
    else:
        quad = abs(integral - float(np.trapezoid(means, nodes)))
    est = EstimateWithError(math.log(2.0) + integral, math.hypot(stat, quad), n_sweeps * len(nodes))
    return ThermoIntegration(est, nodes, means, errs, stat, quad)


@dataclass(frozen=True)
class OverlapProbe:
    volumes: np.ndarray
    values: np.ndarray        # |Lambda| E <(q12 - qbar)^2>_t^{(x)2}
    stderrs: np.ndarray
    slope: float              # d log(value) / d log |Lambda|
    bounded: bool


def overlap_concentration_probe(t: float, qbar: float, geometries, params: ModelParams,
                                n_samples: int, kernel: InteractionKernel, master_seed: int = 0,
                                engine: str = "mc", burn_in: int = 1000, n_sweeps: int = 10_000,
                                slope_limit: float = 0.2) -> OverlapProbe:
    """|Lambda| E<(q12 - qbar)^2>_t^{(x)2} across box sizes.

    ``engine="exact"`` enumerates; ``"mc"`` runs two independent chains per
    disorder sample.  The sequence counts as bounded when the log-log slope
    does not exceed ``slope_limit``.
    """
    p = params.with_(t=t, q=qbar)
    vols, vals, errs = [], [], []
    for geometry in geometries:
        n = geometry.volume
        per_sample = []
        for idx in range(n_samples):
            sample = sample_disorder(geometry, master_seed, idx)
            model = interpolating_model(p, sample, kernel, geometry)
            if engine == "exact":
                per_sample.append(enumerate_model(model).overlap_moment(2, qbar))
            elif engine == "mc":
                est = estimate_expectation(
                    lambda a, b: (np.mean(a * b, axis=1) - qbar) ** 2, model, 1.0, burn_in,
                    n_sweeps, master_seed, ("probe", n, idx), replicas=2)
                per_sample.append(est.mean)
            else:
                raise DomainError(f"unknown engine {engine!r}")
        est = mean_with_error(per_sample)
        vols.append(n)
        vals.append(n * est.mean)
        errs.append(n * est.stderr)
    vols, vals, errs = np.array(vols), np.array(vals), np.array(errs)
    if len(vols) >= 2 and np.all(vals > 0):
        slope = float(linregress(np.log(vols), np.log(vals)).slope)
    else:
        slope = 0.0
    return OverlapProbe(vols, vals, errs, slope, slope <= slope_limit)
