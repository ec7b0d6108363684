"""Occupation configurations on rings and intervals.

A configuration on ``L`` sites is stored as a packed integer: site ``x``
(1-indexed) lives in bit ``x - 1``.  As a string it is written with site 1
leftmost, so ``"100"`` has a particle on site 1 and packs to ``0b001 == 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Optional

import numpy as np

MAX_SITES = 64

PERIODIC = "periodic"
OPEN = "open"


@dataclass(frozen=True)
class Lattice:
    """Sites ``1..L`` with periodic or open boundary."""

    L: int
    boundary: str = OPEN

    def __post_init__(self):
        if not 1 <= self.L <= MAX_SITES:
            raise ValueError(f"lattice length must be in 1..{MAX_SITES}, got {self.L}")
        if self.boundary not in (PERIODIC, OPEN):
            raise ValueError(f"unknown boundary {self.boundary!r}")

    @property
    def periodic(self) -> bool:
        return self.boundary == PERIODIC

    def site(self, x: int) -> int:
        """Reduce ``x`` into ``1..L`` (periodic) or validate it (open)."""
        if self.periodic:
            return (x - 1) % self.L + 1
        if not 1 <= x <= self.L:
            raise ValueError(f"site {x} outside [1, {self.L}]")
        return x


@dataclass(frozen=True)
class Configuration:
    lattice: Lattice
    bits: int

    def __post_init__(self):
        if self.bits < 0 or self.bits >> self.lattice.L:
            raise ValueError("bits do not fit the lattice")

    @classmethod
    def from_string(cls, s: str, boundary: str = OPEN) -> "Configuration":
        return cls(Lattice(len(s), boundary), pack(s))

    def __getitem__(self, x: int) -> int:
        return (self.bits >> (self.lattice.site(x) - 1)) & 1

    def __str__(self) -> str:
        return unpack(self.bits, self.lattice.L)

    @property
    def n_particles(self) -> int:
        return self.bits.bit_count()


# ``None`` is the empty configuration: raising an occupied site or lowering an
# empty one yields it, and every further map sends it to itself.
MaybeConfiguration = Optional[Configuration]


def pack(s: str) -> int:
    """Bitstring (site 1 leftmost) to packed integer."""
    if set(s) - {"0", "1"}:
        raise ValueError(f"not a bitstring: {s!r}")
    return int(s[::-1], 2) if s else 0


def unpack(bits: int, L: int) -> str:
    return "".join("1" if (bits >> i) & 1 else "0" for i in range(L))


def popcount(a: np.ndarray) -> np.ndarray:
    """Vectorized popcount for uint64 arrays."""
    return np.bitwise_count(a.astype(np.uint64)).astype(np.int64)


def enumerate_sector(lattice: Lattice, n_particles: int) -> np.ndarray:
    """All configurations with ``n_particles`` particles, ascending packed value.

    Returns a uint64 array of length ``C(L, n_particles)``.
    """
    L = lattice.L
    if not 0 <= n_particles <= L:
        raise ValueError(f"particle number {n_particles} outside 0..{L}")
    if L <= 24:
        words = np.arange(1 << L, dtype=np.uint64)
        return words[popcount(words) == n_particles]
    # Gosper's hack: next larger word with the same popcount.
    out = np.empty(comb(L, n_particles), dtype=np.uint64)
    if n_particles == 0:
        out[0] = 0
        return out
    v = (1 << n_particles) - 1
    for i in range(len(out)):
        out[i] = v
        c = v & -v
        r = v + c
        v = (((r ^ v) >> 2) // c) | r
    return out


def sector_configurations(lattice: Lattice, n_particles: int) -> list[Configuration]:
    return [Configuration(lattice, int(b)) for b in enumerate_sector(lattice, n_particles)]


def electrostatic_energy(mu: Configuration) -> int:
    """Number of occupied pairs at distance two.

    Open chains count ``x = 1..L-2``; rings count every ``x`` with wraparound.
    """
    lat = mu.lattice
    if lat.periodic:
        return sum(mu[x] * mu[x + 2] for x in range(1, lat.L + 1))
    return sum(mu[x] * mu[x + 2] for x in range(1, lat.L - 1))


def electrostatic_energy_array(words: np.ndarray, lattice: Lattice) -> np.ndarray:
    words = words.astype(np.uint64)
    L = lattice.L
    e = np.zeros(len(words), dtype=np.int64)
    xs = range(1, L + 1) if lattice.periodic else range(1, L - 1)
    for x in xs:
        a = (words >> np.uint64(x - 1)) & np.uint64(1)
        b = (words >> np.uint64(lattice.site(x + 2) - 1)) & np.uint64(1)
        e += (a & b).astype(np.int64)
    return e


def center_of_mass(bits: int, lattice: Lattice) -> int:
    """``sum x * mu_x``, reduced mod ``L`` on rings."""
    s = sum(x for x in range(1, lattice.L + 1) if (bits >> (x - 1)) & 1)
    return s % lattice.L if lattice.periodic else s


def center_of_mass_array(words: np.ndarray, lattice: Lattice) -> np.ndarray:
    words = words.astype(np.uint64)
    s = np.zeros(len(words), dtype=np.int64)
    for x in range(1, lattice.L + 1):
        s += x * ((words >> np.uint64(x - 1)) & np.uint64(1)).astype(np.int64)
    return s % lattice.L if lattice.periodic else s


def _flip(mu: MaybeConfiguration, x: int, want: int) -> MaybeConfiguration:
    if mu is None:
        return None
    if not 1 <= x <= mu.lattice.L:
        raise ValueError(f"site {x} outside [1, {mu.lattice.L}]")
    if mu[x] != want:
        return None
    return Configuration(mu.lattice, mu.bits ^ (1 << (x - 1)))


def raise_(mu: MaybeConfiguration, x: int) -> MaybeConfiguration:
    """Occupy site ``x``; ``None`` if it was already occupied."""
    return _flip(mu, x, 0)


def lower(mu: MaybeConfiguration, x: int) -> MaybeConfiguration:
    """Empty site ``x``; ``None`` if it was already empty."""
    return _flip(mu, x, 1)
