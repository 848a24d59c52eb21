"""Geometry of the quasi-1D zig-zag lattice.

Sites are labelled ``(i, j)`` with rung index ``i`` in ``1..N`` and leg index
``j`` in ``1..L``. The flat site id is row-major by rung, so all ``L`` sites of
a rung are contiguous: ``site = (i - 1) * L + (j - 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

BondKind = Literal["rung", "leg", "diagonal"]
Boundary = Literal["open", "periodic"]

BOUNDARIES = ("open", "periodic")


@dataclass(frozen=True)
class SpinLattice:
    """``N x L`` lattice with independent boundary conditions along rungs and legs.

    Periodic rungs with ``L = 2`` and periodic legs with ``N = 2`` coincide with
    the open case (the wrap bond would duplicate an existing one), so both are
    normalized to ``"open"`` on construction.
    """

    N: int
    L: int
    bc_rung: Boundary = "open"
    bc_leg: Boundary = "open"

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N!r}")
        if int(self.L) != self.L or self.L < 2:
            raise ValueError(f"L must be an integer >= 2, got {self.L!r}")
        for name in ("bc_rung", "bc_leg"):
            if getattr(self, name) not in BOUNDARIES:
                raise ValueError(f"{name} must be one of {BOUNDARIES}, got {getattr(self, name)!r}")
        if self.L == 2 and self.bc_rung == "periodic":
            object.__setattr__(self, "bc_rung", "open")
        if self.N == 2 and self.bc_leg == "periodic":
            object.__setattr__(self, "bc_leg", "open")

    @property
    def num_sites(self) -> int:
        return self.N * self.L

    def site_index(self, i: int, j: int) -> int:
        return site_index(i, j, self.N, self.L)

    def site_coords(self, site: int) -> tuple[int, int]:
        return site_coords(site, self.N, self.L)

    def rung_sites(self, i: int) -> list[int]:
        """Flat ids of the sites on rung ``i``, ordered by leg."""
        return [self.site_index(i, j) for j in range(1, self.L + 1)]

    def bonds(self, kind: BondKind) -> list[tuple[int, int]]:
        return bonds(self, kind)

    def rung_bonds_of(self, i: int) -> list[tuple[int, int]]:
        """Rung bonds of rung ``i`` only, as flat site pairs."""
        base = (i - 1) * self.L
        if not 1 <= i <= self.N:
            raise ValueError(f"rung {i} outside 1..{self.N}")
        return [(base + a, base + b) for a, b in rung_pairs(self.L, self.bc_rung)]

    def receiver(self, i: int, r: int) -> int:
        """Rung reached from ``i`` after ``r`` steps along the legs."""
        if not 1 <= i <= self.N:
            raise ValueError(f"sender rung {i} outside 1..{self.N}")
        if r < 0:
            raise ValueError(f"distance must be non-negative, got {r}")
        target = i + r
        if self.bc_leg == "periodic":
            return (target - 1) % self.N + 1
        if target > self.N:
            raise ValueError(f"receiver rung {target} outside 1..{self.N} for open legs")
        return target


def site_index(i: int, j: int, N: int, L: int) -> int:
    if not (1 <= i <= N and 1 <= j <= L):
        raise ValueError(f"site ({i}, {j}) outside lattice {N}x{L}")
    return (i - 1) * L + (j - 1)


def site_coords(site: int, N: int, L: int) -> tuple[int, int]:
    """Inverse of :func:`site_index`."""
    if not 0 <= site < N * L:
        raise ValueError(f"site id {site} outside 0..{N * L - 1}")
    return site // L + 1, site % L + 1


def _steps(n: int, bc: str) -> list[tuple[int, int]]:
    # 1-based (k, k+1) neighbour pairs along one direction
    last = n if bc == "periodic" else n - 1
    return [(k, k % n + 1) for k in range(1, last + 1)]


def rung_pairs(L: int, bc_rung: str) -> list[tuple[int, int]]:
    """0-based leg pairs coupled inside a single rung of ``L`` sites."""
    if L == 2:
        bc_rung = "open"
    return [(min(j, jj) - 1, max(j, jj) - 1) for j, jj in _steps(L, bc_rung)]


def bonds(lattice: SpinLattice, kind: BondKind) -> list[tuple[int, int]]:
    """Unordered site pairs ``(a, b)`` with ``a < b`` for one bond family."""
    N, L = lattice.N, lattice.L
    idx = lattice.site_index
    rung_steps = _steps(L, lattice.bc_rung)
    leg_steps = _steps(N, lattice.bc_leg)
    if kind == "rung":
        pairs = [(idx(i, j), idx(i, jj)) for i in range(1, N + 1) for j, jj in rung_steps]
    elif kind == "leg":
        pairs = [(idx(i, j), idx(ii, j)) for i, ii in leg_steps for j in range(1, L + 1)]
    elif kind == "diagonal":
        pairs = []
        for i, ii in leg_steps:
            for j, jj in rung_steps:
                pairs.append((idx(i, jj), idx(ii, j)))
                pairs.append((idx(i, j), idx(ii, jj)))
    else:
        raise ValueError(f"unknown bond kind {kind!r}")
    out = [(min(a, b), max(a, b)) for a, b in pairs]
    assert len(set(out)) == len(out) and all(a != b for a, b in out)
    return out
