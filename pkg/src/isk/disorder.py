"""Quenched Gaussian disorder with label-addressed seeding.

Every random quantity in the package is drawn from a stream identified by
``(master_seed, purpose tag, labels...)``.  Streams come from
:class:`numpy.random.SeedSequence` with the labels as spawn key, feeding a
PCG64 generator; Gaussians are produced by ``Generator.standard_normal``
(ziggurat).  Both are fixed for a given numpy release, which is what the
bit-exact replay contract relies on.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .lattice import BoxGeometry

__all__ = [
    "DisorderSample",
    "derive_rng",
    "derive_seed",
    "sample_disorder",
    "sample_fields",
    "resample_site_field",
    "dump_disorder",
    "load_disorder",
]

# purpose tags
FIELDS = 0
COUPLINGS = 1
RESAMPLE = 2

_MASK64 = (1 << 64) - 1


def _label(x) -> int:
    if isinstance(x, str):
        return zlib.crc32(x.encode()) | (1 << 32)  # keep clear of small int tags
    x = int(x)
    if x < 0:
        raise DomainError(f"stream labels must be non-negative, got {x}")
    return x


def derive_rng(master_seed: int, *labels) -> np.random.Generator:
    """Generator for the stream named by ``labels`` under ``master_seed``."""
    ss = np.random.SeedSequence(int(master_seed) & _MASK64,
                                spawn_key=tuple(_label(x) for x in labels))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(master_seed: int, *labels) -> int:
    """64-bit integer seed for the stream named by ``labels``."""
    ss = np.random.SeedSequence(int(master_seed) & _MASK64,
                                spawn_key=tuple(_label(x) for x in labels))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True, eq=False)
class DisorderSample:
    """One realization of the pair couplings J_ij and site fields J_i.

    ``couplings[i, j]`` is J_ij for sites i, j in lexicographic order; all
    ordered pairs including the diagonal are independent.
    """

    couplings: np.ndarray
    fields: np.ndarray
    master_seed: int
    sample_index: int
    geometry: BoxGeometry

    def __post_init__(self):
        n = self.geometry.volume
        if self.couplings.shape != (n, n) or self.fields.shape != (n,):
            raise DomainError("disorder arrays do not match the geometry")

    def with_fields(self, fields) -> "DisorderSample":
        return DisorderSample(self.couplings, np.asarray(fields, dtype=float),
                              self.master_seed, self.sample_index, self.geometry)

    def negated(self) -> "DisorderSample":
        """The antithetic partner (-J_ij, -J_i)."""
        return DisorderSample(-self.couplings, -self.fields, self.master_seed,
                              self.sample_index, self.geometry)


def sample_fields(geometry: BoxGeometry, master_seed: int, sample_index: int) -> np.ndarray:
    """The site fields J_i of ``sample_disorder`` without drawing couplings."""
    return derive_rng(master_seed, FIELDS, sample_index).standard_normal(geometry.volume)


def sample_disorder(geometry: BoxGeometry, master_seed: int, sample_index: int) -> DisorderSample:
    n = geometry.volume
    fields = sample_fields(geometry, master_seed, sample_index)
    couplings = derive_rng(master_seed, COUPLINGS, sample_index).standard_normal((n, n))
    return DisorderSample(couplings, fields, int(master_seed), int(sample_index), geometry)


def resample_site_field(sample: DisorderSample, site, aux_seed: int) -> float:
    """An independent copy J'_site, reproducible from (sample, site, aux_seed)."""
    idx = int(sample.geometry.index_of(site)[0])
    if idx < 0:
        raise DomainError(f"site {tuple(np.atleast_1d(site))} is outside the box")
    rng = derive_rng(sample.master_seed, RESAMPLE, sample.sample_index, idx, aux_seed)
    return float(rng.standard_normal())


def dump_disorder(sample: DisorderSample, path) -> None:
    """Write a text table that :func:`load_disorder` replays exactly."""
    g = sample.geometry
    with open(path, "w") as fh:
        fh.write(f"# master_seed {sample.master_seed}\n")
        fh.write(f"# sample_index {sample.sample_index}\n")
        fh.write(f"# geometry {g.d} {g.N} {' '.join(map(str, g.lengths))}\n")
        fh.write("# couplings: i j value\n")
        n = g.volume
        for i in range(n):
            for j in range(n):
                fh.write(f"{i} {j} {float(sample.couplings[i, j])!r}\n")
        fh.write("# fields: i value\n")
        for i in range(n):
            fh.write(f"{i} {float(sample.fields[i])!r}\n")


def load_disorder(path) -> DisorderSample:
    header = {}
    pairs, singles = [], []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                parts = line[1:].split()
                if parts and parts[0] in ("master_seed", "sample_index", "geometry"):
                    header[parts[0]] = [int(p) for p in parts[1:]]
                continue
            parts = line.split()
            if len(parts) == 3:
                pairs.append((int(parts[0]), int(parts[1]), float(parts[2])))
            elif len(parts) == 2:
                singles.append((int(parts[0]), float(parts[1])))
    d, N, *lengths = header["geometry"]
    geometry = BoxGeometry(d, N, tuple(lengths))
    n = geometry.volume
    couplings = np.zeros((n, n))
    fields = np.zeros(n)
    for i, j, v in pairs:
        couplings[i, j] = v
    for i, v in singles:
        fields[i] = v
    return DisorderSample(couplings, fields, header["master_seed"][0],
                          header["sample_index"][0], geometry)
