"""Box geometry, the Ising interaction kernel and Dobrushin diagnostics."""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SizeError

__all__ = [
    "BoxGeometry",
    "InteractionKernel",
    "DobrushinReport",
    "enumerate_sites",
    "kernel_sum",
    "dobrushin_coefficient_bound",
    "uniqueness_check",
    "correlation_length",
    "load_kernel",
]


@dataclass(frozen=True)
class BoxGeometry:
    """The box {-N, ..., N}^d with sites in lexicographic order.

    ``lengths`` overrides the side lengths for boxes that are not of the
    form 2N+1 (e.g. an 8-site chain).  Coordinates along an axis of length
    L run from -(L // 2) to -(L // 2) + L - 1.
    """

    d: int
    N: int = 0
    lengths: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.d < 1:
            raise DomainError(f"dimension must be >= 1, got {self.d}")
        if self.N < 0:
            raise DomainError(f"box radius must be >= 0, got {self.N}")
        if self.lengths is None:
            object.__setattr__(self, "lengths", (2 * self.N + 1,) * self.d)
        else:
            lengths = tuple(int(n) for n in self.lengths)
            if len(lengths) != self.d or min(lengths) < 1:
                raise DomainError(f"bad side lengths {self.lengths} for d={self.d}")
            object.__setattr__(self, "lengths", lengths)

    @classmethod
    def chain(cls, length: int) -> "BoxGeometry":
        """One-dimensional box with ``length`` sites."""
        return cls(1, (length - 1) // 2, (length,))

    @property
    def volume(self) -> int:
        return math.prod(self.lengths)

    @property
    def lower(self) -> np.ndarray:
        return np.array([-(n // 2) for n in self.lengths])

    @property
    def sites(self) -> np.ndarray:
        return enumerate_sites(self)

    @property
    def is_cube(self) -> bool:
        return self.lengths == (2 * self.N + 1,) * self.d

    def index_of(self, coords) -> np.ndarray:
        """Lexicographic index of each coordinate row; -1 outside the box."""
        coords = np.atleast_2d(np.asarray(coords, dtype=np.int64))
        offset = coords - self.lower
        lengths = np.array(self.lengths)
        inside = np.all((offset >= 0) & (offset < lengths), axis=1)
        strides = np.ones(self.d, dtype=np.int64)
        for a in range(self.d - 2, -1, -1):
            strides[a] = strides[a + 1] * lengths[a + 1]
        idx = offset @ strides
        return np.where(inside, idx, -1)

    def contains(self, coords) -> bool:
        return bool(self.index_of(coords)[0] >= 0)

    def describe(self) -> str:
        if self.is_cube:
            return f"d={self.d} N={self.N}"
        return f"d={self.d} lengths={'x'.join(map(str, self.lengths))}"


def enumerate_sites(geometry: BoxGeometry) -> np.ndarray:
    """All sites of the box, shape (volume, d), in strict lexicographic order."""
    volume = geometry.volume
    if volume * geometry.d > np.iinfo(np.intp).max:
        raise SizeError(f"box volume {volume} exceeds the platform index range")
    axes = [np.arange(lo, lo + n) for lo, n in zip(geometry.lower, geometry.lengths)]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


@dataclass(frozen=True)
class InteractionKernel:
    """Symmetric, finitely supported Ising kernel with a decay certificate.

    ``values`` maps a nonzero displacement (tuple of ints) to K(i).  The
    certificate |K(i)| <= C1 exp(-C2 |i|) is checked on construction, as are
    K(i) = K(-i) and K(0) = 0.
    """

    d: int
    values: dict = field(default_factory=dict)
    decay_constants: tuple[float, float] = (math.e, 1.0)

    def __post_init__(self):
        vals = {}
        for disp, v in self.values.items():
            disp = tuple(int(x) for x in disp)
            if len(disp) != self.d:
                raise DomainError(f"displacement {disp} has wrong dimension")
            if v == 0.0:
                continue
            vals[disp] = float(v)
        for disp, v in vals.items():
            if not any(disp):
                raise DomainError("K(0) must vanish")
            mirror = tuple(-x for x in disp)
            if vals.get(mirror) != v:
                raise DomainError(f"kernel not symmetric at {disp}")
        c1, c2 = self.decay_constants
        if c1 <= 0 or c2 <= 0:
            raise DomainError("decay constants must be positive")
        for disp, v in vals.items():
            bound = c1 * math.exp(-c2 * math.hypot(*disp))
            if abs(v) > bound * (1 + 1e-12):
                raise DomainError(
                    f"|K{disp}| = {abs(v):g} violates the decay bound {bound:g}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def nearest_neighbor(cls, d: int, value: float = 1.0) -> "InteractionKernel":
        vals = {}
        for a in range(d):
            for sign in (1, -1):
                disp = [0] * d
                disp[a] = sign
                vals[tuple(disp)] = value
        return cls(d, vals, (abs(value) * math.e if value else 1.0, 1.0))

    @classmethod
    def exponential(cls, d: int, c1: float, c2: float, radius: float) -> "InteractionKernel":
        """K(i) = c1 exp(-c2 |i|) for 0 < |i| <= radius (Euclidean norm)."""
        r = int(math.floor(radius))
        vals = {}
        for disp in itertools.product(range(-r, r + 1), repeat=d):
            dist = math.hypot(*disp)
            if 0 < dist <= radius:
                vals[disp] = c1 * math.exp(-c2 * dist)
        return cls(d, vals, (c1, c2))

    @classmethod
    def zero(cls, d: int) -> "InteractionKernel":
        return cls(d, {})

    @property
    def range(self) -> float:
        if not self.values:
            return 0.0
        return max(math.hypot(*disp) for disp in self.values)

    def __call__(self, disp) -> float:
        return self.values.get(tuple(int(x) for x in disp), 0.0)

    def is_nearest_neighbor_chain(self) -> bool:
        return self.d == 1 and set(self.values) <= {(1,), (-1,)}

    def matrix(self, geometry: BoxGeometry) -> np.ndarray:
        """K(i - j) for all pairs of box sites (free boundary)."""
        if geometry.d != self.d:
            raise DomainError("kernel and geometry dimensions differ")
        sites = enumerate_sites(geometry)
        n = len(sites)
        mat = np.zeros((n, n))
        for disp, v in self.values.items():
            # row i, column j with i - j = disp
            j = geometry.index_of(sites - np.array(disp))
            ok = j >= 0
            mat[np.arange(n)[ok], j[ok]] = v
        return mat


@dataclass(frozen=True)
class DobrushinReport:
    kernel_sum: float
    kappa1: float
    kappa: float
    inside: bool
    max_row_sum: float


def kernel_sum(kernel: InteractionKernel) -> float:
    """Sum of |K(i)| over nonzero displacements."""
    return float(sum(abs(v) for v in kernel.values.values()))


def dobrushin_coefficient_bound(kernel: InteractionKernel, kappa: float, displacement) -> float:
    """Upper bound |tanh(2 kappa K(k - i))| on the influence of site k on site i."""
    displacement = tuple(int(x) for x in np.atleast_1d(displacement))
    if not any(displacement):
        raise DomainError("self-influence is undefined (zero displacement)")
    return abs(math.tanh(2.0 * kappa * kernel(displacement)))


def uniqueness_check(kernel: InteractionKernel, kappa: float) -> DobrushinReport:
    if kappa < 0:
        raise DomainError("kappa must be non-negative")
    total = kernel_sum(kernel)
    kappa1 = math.inf if total == 0 else 1.0 / (2.0 * total)
    row = sum(abs(math.tanh(2.0 * kappa * v)) for v in kernel.values.values())
    return DobrushinReport(total, kappa1, kappa, kappa < kappa1, row)


def correlation_length(kernel: InteractionKernel, kappa: float) -> float:
    """Decay length implied by the Dobrushin row sum, in lattice units.

    Influence propagates at most ``kernel.range`` per step and is damped by
    the row sum ``a`` at each step, so correlations fall off like
    a**(r / range).  Returns inf outside the uniqueness region.
    """
    a = uniqueness_check(kernel, kappa).max_row_sum
    if a == 0.0:
        return 0.0
    if a >= 1.0:
        return math.inf
    return kernel.range / -math.log(a)


def load_kernel(spec: str, d: int) -> InteractionKernel:
    """Build a kernel from ``nn``, ``exp:C1:C2:R`` or a kernel file path.

    Kernel files have one entry per line, ``dx dy ... value``; ``#`` starts a
    comment.  Only the listed displacements are nonzero, so both signs must
    be present.
    """
    if spec == "nn":
        return InteractionKernel.nearest_neighbor(d)
    if spec == "zero":
        return InteractionKernel.zero(d)
    if spec.startswith("exp:"):
        try:
            _, c1, c2, r = spec.split(":")
            return InteractionKernel.exponential(d, float(c1), float(c2), float(r))
        except ValueError as exc:
            raise DomainError(f"bad exponential kernel spec {spec!r}") from exc
    if not os.path.exists(spec):
        raise DomainError(f"unknown kernel {spec!r}")
    vals = {}
    with open(spec) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != d + 1:
                raise DomainError(f"{spec}:{lineno}: expected {d} offsets and a value")
            vals[tuple(int(p) for p in parts[:d])] = float(parts[d])
    # tightest C1 for the default rate C2 = 1
    c1 = max((abs(v) * math.exp(math.hypot(*k)) for k, v in vals.items()), default=1.0)
    return InteractionKernel(d, vals, (c1, 1.0))


def write_kernel(kernel: InteractionKernel, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# d={kernel.d} C1={kernel.decay_constants[0]!r} C2={kernel.decay_constants[1]!r}\n")
        for disp in sorted(kernel.values):
            value = np.format_float_positional(kernel.values[disp], unique=True, trim="0")
            fh.write(" ".join(str(x) for x in disp) + f" {value}\n")
