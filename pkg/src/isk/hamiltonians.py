"""Energy functions of the Ising-SK model and its interpolations.

Energies (not Boltzmann exponents) are the currency here: every Gibbs weight
in the package is ``exp(-H)``.  All Hamiltonians in the model are quadratic in
the spins, so each one can be packed into an :class:`EnergyModel`

    H(sigma) = -1/2 sigma^T W sigma - b . sigma - c

with W symmetric and zero on the diagonal (sigma_i^2 = 1 terms live in c).
The engines only ever see ``EnergyModel`` instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .disorder import DisorderSample
from .errors import DomainError
from .lattice import BoxGeometry, InteractionKernel

__all__ = [
    "ModelParams",
    "EnergyModel",
    "as_spins",
    "ising_energy",
    "sk_energy",
    "field_energy",
    "interpolating_energy",
    "overlap",
    "coupled_replica_energy",
    "ising_model",
    "rfim_model",
    "interpolating_model",
    "interpolation_slope_model",
]


@dataclass(frozen=True)
class ModelParams:
    """Couplings of the model and of its interpolation.

    ``sk_diagonal`` keeps the i = j terms of the SK double sum (the model as
    written).  Switching it off drops the spin-independent constant
    sum_i J_ii / sqrt(2|Lambda|), which is irrelevant for every Gibbs average
    but adds beta^2 / (2 |Lambda|^2) to Var(p_N).
    """

    kappa: float = 0.0
    beta: float = 0.0
    h: float = 0.0
    gamma: float = 0.0
    t: float = 1.0
    q: float = 0.0
    lam: float = 0.0
    mu: float = 0.0
    sk_diagonal: bool = True

    def __post_init__(self):
        for name in ("kappa", "beta", "gamma", "lam"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative")
        if not 0.0 <= self.t <= 1.0:
            raise DomainError(f"t must lie in [0, 1], got {self.t}")
        if not 0.0 <= self.q <= 1.0:
            raise DomainError(f"q must lie in [0, 1], got {self.q}")

    def with_(self, **kw) -> "ModelParams":
        return replace(self, **kw)


@dataclass(frozen=True, eq=False)
class EnergyModel:
    W: np.ndarray
    b: np.ndarray
    c: float = 0.0

    @property
    def n(self) -> int:
        return len(self.b)

    def energy(self, spins) -> np.ndarray:
        s = np.asarray(spins, dtype=float)
        return -0.5 * np.einsum("...i,ij,...j->...", s, self.W, s) - s @ self.b - self.c

    def local_fields(self, spins) -> np.ndarray:
        """f_i = sum_j W_ij s_j + b_i; flipping s_i changes H by 2 s_i f_i."""
        s = np.asarray(spins, dtype=float)
        return s @ self.W + self.b

    def flip_delta(self, spins, i: int) -> float:
        s = np.asarray(spins, dtype=float)
        return 2.0 * s[i] * (self.W[i] @ s + self.b[i])

    def expectation(self, corr, mag) -> float:
        """<H> from the two-point matrix <s_i s_j> and magnetizations <s_i>."""
        return float(-0.5 * np.sum(self.W * corr) - self.b @ mag - self.c)

    def __add__(self, other: "EnergyModel") -> "EnergyModel":
        return EnergyModel(self.W + other.W, self.b + other.b, self.c + other.c)

    def scaled(self, s: float) -> "EnergyModel":
        return EnergyModel(s * self.W, s * self.b, s * self.c)


def as_spins(values, n: int | None = None) -> np.ndarray:
    s = np.asarray(values, dtype=float)
    if n is not None and s.shape[-1] != n:
        raise DomainError(f"configuration has length {s.shape[-1]}, expected {n}")
    if not np.all(np.abs(s) == 1.0):
        raise DomainError("spins must be +1 or -1")
    return s


def _quad(s, A):
    return np.einsum("...i,ij,...j->...", s, A, s)


def ising_energy(sigma, kernel: InteractionKernel, geometry: BoxGeometry):
    """H^I = -1/2 sum_{i,j} K(i - j) s_i s_j over the box (free boundary)."""
    s = as_spins(sigma, geometry.volume)
    return -0.5 * _quad(s, kernel.matrix(geometry))


def sk_energy(sigma, sample: DisorderSample, geometry: BoxGeometry, diagonal: bool = True):
    """H^SK = -(2|Lambda|)^(-1/2) sum_{i,j} J_ij s_i s_j, all ordered pairs."""
    s = as_spins(sigma, geometry.volume)
    J = sample.couplings if diagonal else sample.couplings - np.diag(np.diag(sample.couplings))
    return -_quad(s, J) / math.sqrt(2.0 * geometry.volume)


def field_energy(sigma, h: float, gamma: float, sample: DisorderSample):
    s = as_spins(sigma, len(sample.fields))
    return -(s @ (h + gamma * sample.fields))


def interpolating_energy(sigma, params: ModelParams, sample: DisorderSample,
                         kernel: InteractionKernel, geometry: BoxGeometry):
    """H^(t) = kappa H^I + beta sqrt(t) H^SK - sum_i s_i (h + beta sqrt(q(1-t)) J_i)."""
    p = params
    e = p.kappa * ising_energy(sigma, kernel, geometry)
    if p.beta:
        e = e + p.beta * math.sqrt(p.t) * sk_energy(sigma, sample, geometry, p.sk_diagonal)
    return e + field_energy(sigma, p.h, p.beta * math.sqrt(p.q * (1.0 - p.t)), sample)


def overlap(sigma1, sigma2):
    s1 = np.asarray(sigma1, dtype=float)
    s2 = np.asarray(sigma2, dtype=float)
    if s1.shape[-1] != s2.shape[-1]:
        raise DomainError("replicas have different lengths")
    return np.sum(s1 * s2, axis=-1) / s1.shape[-1]


def coupled_replica_energy(sigma1, sigma2, params: ModelParams, sample: DisorderSample,
                           kernel: InteractionKernel, geometry: BoxGeometry):
    """H^(t)(s1) + H^(t)(s2) - (beta^2/2) |Lambda| lam (q12 - q)^2."""
    p = params
    q12 = overlap(sigma1, sigma2)
    coupling = 0.5 * p.beta**2 * geometry.volume * p.lam * (q12 - p.q) ** 2
    return (interpolating_energy(sigma1, p, sample, kernel, geometry)
            + interpolating_energy(sigma2, p, sample, kernel, geometry) - coupling)


# -- quadratic forms ----------------------------------------------------------

def _split_symmetric(A):
    """(W, c) with 1/2 s^T W s + c == s^T A s for every spin vector s."""
    W = A + A.T
    c = float(np.trace(A))
    np.fill_diagonal(W, 0.0)
    return W, c


def ising_model(geometry: BoxGeometry, kernel: InteractionKernel, kappa: float = 1.0) -> EnergyModel:
    """kappa H^I as an EnergyModel."""
    K = kernel.matrix(geometry)
    W, c = _split_symmetric(0.5 * kappa * K)
    return EnergyModel(W, np.zeros(geometry.volume), c)


def rfim_model(geometry: BoxGeometry, kappa: float, h: float, gamma: float,
               fields, kernel: InteractionKernel) -> EnergyModel:
    """kappa H^I - sum_i s_i (h + gamma J_i)."""
    m = ising_model(geometry, kernel, kappa)
    return EnergyModel(m.W, h + gamma * np.asarray(fields, dtype=float), m.c)


def _sk_form(sample: DisorderSample, scale: float, diagonal: bool):
    J = sample.couplings
    n = J.shape[0]
    W, c = _split_symmetric(scale * J / math.sqrt(2.0 * n))
    return W, (c if diagonal else 0.0)


def interpolating_model(params: ModelParams, sample: DisorderSample,
                        kernel: InteractionKernel, geometry: BoxGeometry) -> EnergyModel:
    p = params
    base = rfim_model(geometry, p.kappa, p.h, p.beta * math.sqrt(p.q * (1.0 - p.t)),
                      sample.fields, kernel)
    if p.beta == 0.0 or p.t == 0.0:
        return base
    W, c = _sk_form(sample, p.beta * math.sqrt(p.t), p.sk_diagonal)
    return EnergyModel(base.W + W, base.b, base.c + c)


def interpolation_slope_model(params: ModelParams, sample: DisorderSample,
                              geometry: BoxGeometry) -> EnergyModel:
    """d/dt H^(t) as an EnergyModel, valid for 0 < t < 1."""
    p = params
    if not 0.0 < p.t < 1.0:
        raise DomainError("the t-derivative is only defined for 0 < t < 1")
    W, c = _sk_form(sample, p.beta / (2.0 * math.sqrt(p.t)), p.sk_diagonal)
    b = -p.beta * math.sqrt(p.q) / (2.0 * math.sqrt(1.0 - p.t)) * sample.fields
    return EnergyModel(W, b, c)
