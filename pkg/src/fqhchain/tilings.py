"""Void/monomer/dimer tilings and their boundary-tile extensions.

A tiling is an ordered tuple of tile names covering the lattice.  On a ring
the first tile is the one covering site 1 and ``offset`` counts how many of its
sites lie before site 1 (wrapping around from site ``L``).
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from functools import lru_cache

from .configspace import OPEN, PERIODIC, Configuration, Lattice, pack, unpack

logger = logging.getLogger(__name__)

PATTERNS = {
    "V": "0",
    "M": "100",
    "D": "011000",
    "B_l": "11000",
    "M_1": "1",
    "M_2": "10",
    "D_1": "0110",
    "D_2": "01100",
    "B_r": "011",
}
ALIASES = {"M_3": "M", "D_3": "D"}

BULK = ("V", "M", "D")
LEFT = ("B_l",)
RIGHT = ("M_1", "M_2", "D_1", "D_2", "B_r")
DIMERS = ("D", "D_1", "D_2")
MONOMERS = ("M", "M_1", "M_2")

# (monomer, terminal monomer) -> dimer, for the replacement rules
# (100)(100) <-> (011000), (100)(10) <-> (01100), (100)(1) <-> (0110).
MERGE = {("M", "M"): "D", ("M", "M_2"): "D_2", ("M", "M_1"): "D_1"}
SPLIT = {v: k for k, v in MERGE.items()}

MIN_RING = 6  # smallest ring on which the tile classification is a theorem


def width(kind: str) -> int:
    return len(PATTERNS[kind])


def _canon(kind: str) -> str:
    kind = ALIASES.get(kind, kind)
    if kind not in PATTERNS:
        raise ValueError(f"unknown tile {kind!r}")
    return kind


@dataclass(frozen=True)
class Tiling:
    lattice: Lattice
    kinds: tuple
    offset: int = 0

    def __post_init__(self):
        kinds = tuple(_canon(k) for k in self.kinds)
        object.__setattr__(self, "kinds", kinds)
        if sum(width(k) for k in kinds) != self.lattice.L:
            raise ValueError(f"tiles {kinds} do not cover {self.lattice.L} sites")
        if self.lattice.periodic:
            if any(k not in BULK for k in kinds):
                raise ValueError("boundary tiles are not allowed on a ring")
            if not 0 <= self.offset < width(kinds[0]):
                raise ValueError("offset must lie inside the first tile")
        else:
            if self.offset:
                raise ValueError("open tilings have no offset")
            for j, k in enumerate(kinds):
                if k in LEFT and j != 0:
                    raise ValueError(f"{k} only at the left boundary")
                if k in RIGHT and j != len(kinds) - 1:
                    raise ValueError(f"{k} only at the right boundary")

    def starts(self) -> list[int]:
        """Start site of every tile, reduced into ``1..L``."""
        L = self.lattice.L
        pos = 1 - self.offset
        out = []
        for k in self.kinds:
            out.append((pos - 1) % L + 1)
            pos += width(k)
        return out

    @property
    def bits(self) -> int:
        s = "".join(PATTERNS[k] for k in self.kinds)
        if self.offset:
            s = s[self.offset:] + s[: self.offset]
        return pack(s)

    @property
    def n_dimers(self) -> int:
        return sum(k in DIMERS for k in self.kinds)

    def __str__(self) -> str:
        s = ",".join(self.kinds)
        return f"{s};offset={self.offset}" if self.offset else s


def parse_tiling(text: str, lattice: Lattice) -> Tiling:
    names, _, off = text.partition(";offset=")
    return Tiling(lattice, tuple(names.split(",")), int(off) if off else 0)


def tiling_to_configuration(t: Tiling) -> Configuration:
    return Configuration(t.lattice, t.bits)


def _placements_to_tiling(lattice: Lattice, placed: list) -> Tiling:
    """Cyclic list of ``(kind, start)`` on a ring -> normalized tiling."""
    L = lattice.L
    for j, (k, s) in enumerate(placed):
        s = (s - 1) % L + 1
        if s == 1 or s + width(k) - 1 > L:
            rot = placed[j:] + placed[:j]
            return Tiling(lattice, tuple(k for k, _ in rot), 0 if s == 1 else L - s + 1)
    raise AssertionError("no tile covers site 1")


# --- classification -------------------------------------------------------


def satisfies_conditions(mu: Configuration) -> bool:
    """Local criterion for a configuration to come from a tiling.

    Checks, with ring arithmetic or (open) treating requirements on sites
    outside the chain as met:

    1. an occupied site with an empty neighbour on one side has an empty
       site at distance two on that side;
    2. around every occupied nearest-neighbour pair, (a) the three sites on
       each side are empty and (b) if the fourth site on a side is occupied,
       the fifth on that side is empty.
    """
    lat = mu.lattice
    L = lat.L
    inside = (lambda y: True) if lat.periodic else (lambda y: 1 <= y <= L)

    def occ(y):
        return inside(y) and mu[y] == 1

    def empty(y):
        return not inside(y) or mu[y] == 0

    for x in range(1, L + 1):
        if not occ(x):
            continue
        for sgn in (1, -1):
            if empty(x + sgn) and inside(x + sgn) and not empty(x + 2 * sgn):
                return False
        if occ(x + 1):
            # pair at (x, x+1): sites x-3..x-1 and x+2..x+4 empty
            if not all(empty(y) for y in (x - 3, x - 2, x - 1, x + 2, x + 3, x + 4)):
                return False
            if occ(x + 5) and not empty(x + 6):
                return False
            if occ(x - 4) and not empty(x - 5):
                return False
    return True


def _parse_open(s: str) -> list[tuple]:
    """Every tile sequence (open placement rules) whose patterns spell ``s``."""
    n = len(s)

    @lru_cache(maxsize=None)
    def go(p):
        if p == n:
            return [()]
        out = []
        for k, pat in PATTERNS.items():
            w = len(pat)
            if s[p:p + w] != pat:
                continue
            if k in LEFT and p != 0:
                continue
            if k in RIGHT and p + w != n:
                continue
            out.extend((k,) + rest for rest in go(p + w))
        return out

    return go(0)


def _parse_ring(s: str) -> list[tuple]:
    L = len(s)
    found = []
    for off in range(max(width(k) for k in BULK)):
        if off >= L:
            break
        r = s[L - off:] + s[:L - off] if off else s

        @lru_cache(maxsize=None)
        def go(p):
            if p == L:
                return [()]
            out = []
            for k in BULK:
                pat = PATTERNS[k]
                if r[p:p + len(pat)] == pat:
                    out.extend((k,) + rest for rest in go(p + len(pat)))
            return out

        for kinds in go(0):
            if width(kinds[0]) > off:
                found.append((kinds, off))
    return found


def all_tilings_of(mu: Configuration) -> list[Tiling]:
    """Every tiling whose configuration is ``mu`` (at most one by injectivity)."""
    s = str(mu)
    if mu.lattice.periodic:
        return [Tiling(mu.lattice, k, off) for k, off in _parse_ring(s)]
    return [Tiling(mu.lattice, k) for k in _parse_open(s)]


def classify_configuration(mu: Configuration) -> Tiling | None:
    """The unique tiling with configuration ``mu``, or ``None``.

    Rings shorter than six sites are outside the regime where this
    classification is a theorem; the result is still computed.
    """
    if mu.lattice.periodic and mu.lattice.L < MIN_RING:
        logger.debug("classifying on a ring of %d < %d sites", mu.lattice.L, MIN_RING)
    if not satisfies_conditions(mu):
        return None
    found = all_tilings_of(mu)
    if len(found) > 1:
        raise AssertionError(f"configuration {mu} has {len(found)} tilings")
    return found[0] if found else None


# --- enumeration ----------------------------------------------------------


def enumerate_tilings(lattice: Lattice, roots_only: bool = False) -> list[Tiling]:
    """All (root) tilings of the lattice, sorted by configuration value."""
    L = lattice.L
    out = []
    if lattice.periodic:
        kinds_ok = ("V", "M") if roots_only else BULK

        def go(rem):
            if rem == 0:
                yield ()
                return
            for k in kinds_ok:
                if width(k) <= rem:
                    for rest in go(rem - width(k)):
                        yield (k,) + rest

        for first in kinds_ok:
            w = width(first)
            if w > L:
                continue
            for off in range(w):
                for rest in go(L - w):
                    out.append(Tiling(lattice, (first,) + rest, off))
    else:
        allowed = [k for k in PATTERNS if not (roots_only and k in DIMERS)]

        def go(p):
            if p == L:
                yield ()
                return
            for k in allowed:
                w = width(k)
                if p + w > L or (k in LEFT and p != 0) or (k in RIGHT and p + w != L):
                    continue
                for rest in go(p + w):
                    yield (k,) + rest

        out = [Tiling(lattice, kinds) for kinds in go(0)]
    out.sort(key=lambda t: t.bits)
    return out


def enumerate_roots(lattice: Lattice) -> list[Tiling]:
    return enumerate_tilings(lattice, roots_only=True)


def is_root(t: Tiling) -> bool:
    return not any(k in DIMERS for k in t.kinds)


def tiling_configurations(lattice: Lattice) -> list[int]:
    """Packed configurations of every tiling, ascending."""
    return [t.bits for t in enumerate_tilings(lattice)]


# --- replacement rule -----------------------------------------------------


def replacement_moves(t: Tiling) -> list[Tiling]:
    """Tilings one forward or backward replacement away from ``t``."""
    lat = t.lattice
    kinds = list(t.kinds)
    n = len(kinds)
    out = []
    if lat.periodic:
        placed = list(zip(kinds, t.starts()))
        if n >= 2:
            for j in range(n):
                (a, sa), (b, _) = placed[j], placed[(j + 1) % n]
                if (a, b) in MERGE:
                    if j + 1 < n:
                        new = placed[:j] + [(MERGE[a, b], sa)] + placed[j + 2:]
                    else:
                        new = [(MERGE[a, b], sa)] + placed[1:-1]
                    out.append(_placements_to_tiling(lat, new))
        for j, (k, s) in enumerate(placed):
            if k in SPLIT:
                m1, m2 = SPLIT[k]
                new = placed[:j] + [(m1, s), (m2, s + 3)] + placed[j + 1:]
                out.append(_placements_to_tiling(lat, new))
    else:
        for j in range(n - 1):
            if (kinds[j], kinds[j + 1]) in MERGE:
                out.append(Tiling(lat, tuple(kinds[:j] + [MERGE[kinds[j], kinds[j + 1]]] + kinds[j + 2:])))
        for j, k in enumerate(kinds):
            if k in SPLIT:
                out.append(Tiling(lat, tuple(kinds[:j] + list(SPLIT[k]) + kinds[j + 1:])))
    uniq = {u.bits: u for u in out}
    return [uniq[b] for b in sorted(uniq)]


def equivalence_class(root: Tiling) -> list[Tiling]:
    """Breadth-first closure of ``root`` under replacements, sorted by configuration."""
    seen = {root.bits: root}
    queue = deque([root])
    while queue:
        for nb in replacement_moves(queue.popleft()):
            if nb.bits not in seen:
                seen[nb.bits] = nb
                queue.append(nb)
    return [seen[b] for b in sorted(seen)]


def root_of(t: Tiling) -> Tiling:
    """Replace every dimer by its monomer pair."""
    if t.lattice.periodic:
        placed = []
        for k, s in zip(t.kinds, t.starts()):
            if k in SPLIT:
                placed += [(SPLIT[k][0], s), (SPLIT[k][1], s + 3)]
            else:
                placed.append((k, s))
        return _placements_to_tiling(t.lattice, placed)
    kinds = []
    for k in t.kinds:
        kinds.extend(SPLIT.get(k, (k,)))
    return Tiling(t.lattice, tuple(kinds))


# --- restriction and monomer tails ----------------------------------------


def restrict_tiling(t: Tiling, a: int, b: int) -> Tiling:
    """The open tiling of ``[a, b]`` whose configuration is that of ``t`` there.

    On a ring ``b`` may exceed ``L``; sites are read modulo ``L``.
    """
    L = t.lattice.L
    if not (1 <= a <= b and b - a + 1 <= L and (t.lattice.periodic or b <= L)):
        raise ValueError(f"[{a}, {b}] is not a subinterval of the lattice")
    full = unpack(t.bits, L)
    sub = "".join(full[(y - 1) % L] for y in range(a, b + 1))
    r = classify_configuration(Configuration(Lattice(len(sub), OPEN), pack(sub)))
    if r is None:
        raise ValueError(f"restriction {sub} of {t} to [{a}, {b}] is not a tiling")
    return r


def is_mm_root(r: Tiling) -> bool:
    """Whether an open root ends in a monomer followed by a terminal monomer."""
    if r.lattice.periodic:
        raise ValueError("monomer tails are defined for open chains only")
    k = r.kinds
    return len(k) >= 2 and k[-2] == "M" and k[-1] in MONOMERS


def mm_split(r: Tiling) -> tuple[tuple, int, int]:
    """Split a monomer-tailed root into ``(head, n, i)``.

    ``head`` is the tile tuple before the maximal monomer tail
    ``(M, ..., M, M_i)`` of ``n`` monomers; it does not end in a monomer.
    """
    if not is_mm_root(r):
        raise ValueError(f"{r} does not end in two monomers")
    kinds = r.kinds
    i = {"M_1": 1, "M_2": 2, "M": 3}[kinds[-1]]
    j = len(kinds) - 1
    while j > 0 and kinds[j - 1] == "M":
        j -= 1
    return kinds[:j], len(kinds) - j, i


def tt_root(n: int, i: int) -> Tiling:
    """The all-monomer root ``(M, ..., M, M_i)`` with ``n`` monomers."""
    if n < 1 or i not in (1, 2, 3):
        raise ValueError("need n >= 1 and i in {1, 2, 3}")
    last = {1: "M_1", 2: "M_2", 3: "M"}[i]
    return Tiling(Lattice(3 * (n - 1) + i, OPEN), ("M",) * (n - 1) + (last,))


__all__ = [
    "PATTERNS", "Tiling", "parse_tiling", "tiling_to_configuration", "satisfies_conditions",
    "classify_configuration", "all_tilings_of", "enumerate_tilings", "enumerate_roots",
    "is_root", "replacement_moves", "equivalence_class", "root_of", "restrict_tiling",
    "is_mm_root", "mm_split", "tt_root", "tiling_configurations", "PERIODIC", "OPEN",
]
