"""Magnetization-sector Hilbert spaces on bitmask configurations.

A configuration is an integer whose bit ``s`` is the spin on flat site ``s``:
bit 0 is ``|0>`` (sigma^z = +1), bit 1 is ``|1>`` (sigma^z = -1). The
Heisenberg Hamiltonian conserves the number of set bits, so all states with at
most ``k_max`` excitations form an invariant subspace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

# Above this many sites the configurations no longer fit an int64 and are
# kept as Python integers in an object array.
_INT64_SITES = 62
DENSE_LIMIT = 4096


class SectorBasis:
    """Basis of all configurations on ``num_sites`` sites with ``<= k_max`` set bits.

    Configurations are ordered by excitation count, then by integer value.
    """

    def __init__(self, num_sites: int, k_max: int = 1):
        if num_sites < 1:
            raise ValueError(f"num_sites must be >= 1, got {num_sites}")
        if not 0 <= k_max <= num_sites:
            raise ValueError(f"k_max must lie in 0..{num_sites}, got {k_max}")
        self.num_sites = int(num_sites)
        self.k_max = int(k_max)
        configs: list[int] = []
        for k in range(k_max + 1):
            configs.extend(sorted(sum(1 << s for s in c) for c in combinations(range(num_sites), k)))
        dtype = np.int64 if num_sites <= _INT64_SITES else object
        self.configs = np.array(configs, dtype=dtype)
        self.lookup: dict[int, int] = {c: n for n, c in enumerate(configs)}

    @property
    def dim(self) -> int:
        return len(self.configs)

    def __len__(self) -> int:
        return self.dim

    def __repr__(self) -> str:
        return f"SectorBasis(num_sites={self.num_sites}, k_max={self.k_max}, dim={self.dim})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, SectorBasis):
            return NotImplemented
        return self.num_sites == other.num_sites and self.k_max == other.k_max

    def __hash__(self) -> int:
        return hash((self.num_sites, self.k_max))

    def index(self, config: int) -> int:
        try:
            return self.lookup[int(config)]
        except KeyError:
            raise KeyError(f"configuration {config:b} is not in {self!r}") from None

    def bits(self, site: int) -> np.ndarray:
        """Spin (0 or 1) on ``site`` for every basis configuration."""
        self._check_site(site)
        return ((self.configs >> site) & 1).astype(np.int8)

    def excitations(self) -> np.ndarray:
        return np.array([bin(int(c)).count("1") for c in self.configs])

    def basis_state(self, config: int) -> "SectorState":
        amps = np.zeros(self.dim, dtype=complex)
        amps[self.index(config)] = 1.0
        return SectorState(self, amps)

    def _check_site(self, site: int):
        if not 0 <= site < self.num_sites:
            raise ValueError(f"site {site} outside 0..{self.num_sites - 1}")


def build_basis(num_sites: int, k_max: int = 1) -> SectorBasis:
    basis = SectorBasis(num_sites, k_max)
    assert basis.dim == sum(comb(num_sites, k) for k in range(k_max + 1))
    return basis


@dataclass
class SectorState:
    """Complex amplitude vector over a :class:`SectorBasis`."""

    basis: SectorBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.basis.dim,):
            raise ValueError(
                f"amplitudes have shape {self.amplitudes.shape}, basis dimension is {self.basis.dim}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "SectorState":
        return SectorState(self.basis, self.amplitudes.copy())

    def overlap(self, other: "SectorState") -> complex:
        """``<self|other>``."""
        _check_same_basis(self.basis, other.basis)
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def _check_same_basis(a: SectorBasis, b: SectorBasis):
    if a != b:
        raise ValueError(f"basis mismatch: {a!r} vs {b!r}")


@dataclass(frozen=True)
class Eigensystem:
    values: np.ndarray
    vectors: np.ndarray

    def propagator(self, t: float) -> np.ndarray:
        """Dense ``exp(-i H t)``."""
        return (self.vectors * np.exp(-1j * self.values * t)) @ self.vectors.conj().T


@dataclass(eq=False)
class SectorOperator:
    """Hermitian operator on a sector basis, stored as a sparse CSR matrix.

    The eigendecomposition is computed on first use and cached.
    """

    basis: SectorBasis
    matrix: sp.csr_matrix
    _eig: Eigensystem | None = field(default=None, repr=False)

    def __post_init__(self):
        self.matrix = sp.csr_matrix(self.matrix, dtype=complex)
        d = self.basis.dim
        if self.matrix.shape != (d, d):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match basis dimension {d}")

    @property
    def dim(self) -> int:
        return self.basis.dim

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def hermiticity_error(self) -> float:
        diff = self.matrix - self.matrix.conj().T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def eigh(self) -> Eigensystem:
        if self._eig is None:
            from .propagation import diagonalize

            self._eig = diagonalize(self)
        return self._eig

    def __matmul__(self, vec):
        if isinstance(vec, SectorState):
            _check_same_basis(self.basis, vec.basis)
            return SectorState(self.basis, self.matrix @ vec.amplitudes)
        return self.matrix @ vec

    def __add__(self, other: "SectorOperator") -> "SectorOperator":
        _check_same_basis(self.basis, other.basis)
        return SectorOperator(self.basis, self.matrix + other.matrix)

    def expectation(self, state: SectorState) -> float:
        return float(np.vdot(state.amplitudes, self.matrix @ state.amplitudes).real)


def xxz_operator(
    basis: SectorBasis,
    bonds: Iterable[tuple[int, int, float, float]],
    fields: Mapping[int, float] | Sequence[float] | None = None,
) -> SectorOperator:
    """Sum of ``jxy (XX + YY) + jzz ZZ`` over bonds plus ``sum_s fields[s] Z_s``.

    ``bonds`` yields ``(a, b, jxy, jzz)`` with Pauli-matrix normalization, so
    ``XX + YY`` flips an anti-aligned pair with amplitude ``2 jxy``.
    """
    d = basis.dim
    configs = basis.configs
    diag = np.zeros(d)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for a, b, jxy, jzz in bonds:
        basis._check_site(a)
        basis._check_site(b)
        if a == b:
            raise ValueError(f"self-bond on site {a}")
        ba = basis.bits(a)
        bb = basis.bits(b)
        if jzz:
            diag += jzz * np.where(ba == bb, 1.0, -1.0)
        if jxy:
            mask = 1 << a | 1 << b
            for n in np.flatnonzero(ba != bb):
                rows.append(basis.lookup[int(configs[n]) ^ mask])
                cols.append(int(n))
                vals.append(2.0 * jxy)
    if fields is not None:
        items = fields.items() if isinstance(fields, Mapping) else enumerate(fields)
        for s, h in items:
            if h:
                diag += h * (1.0 - 2.0 * basis.bits(s))
    offdiag = sp.coo_matrix((vals, (rows, cols)), shape=(d, d))
    return SectorOperator(basis, sp.diags(diag) + offdiag)


def heisenberg_operator(
    basis: SectorBasis,
    bonds: Iterable[tuple[int, int, float]],
    field: float | Sequence[float] = 0.0,
) -> SectorOperator:
    """``sum (coef / 4) sigma_a . sigma_b - (w / 2) sum sigma^z`` in a sector.

    ``field`` is either a uniform ``w`` or one value per site.
    """
    if np.ndim(field) == 0:
        fields = [-0.5 * float(field)] * basis.num_sites
    else:
        if len(field) != basis.num_sites:
            raise ValueError(f"expected {basis.num_sites} field values, got {len(field)}")
        fields = [-0.5 * float(w) for w in field]
    return xxz_operator(basis, ((a, b, c / 4, c / 4) for a, b, c in bonds), fields)


def _amplitudes(state):
    return state.amplitudes if isinstance(state, SectorState) else np.asarray(state)


def _wrap(state, amps):
    return SectorState(state.basis, amps) if isinstance(state, SectorState) else amps


def apply_diagonal_phase(state: SectorState, site: int, angle: float, basis: SectorBasis | None = None):
    """Apply ``exp(-i angle sigma^z)`` on one site.

    Accepts a :class:`SectorState`, or a raw amplitude array (optionally a
    stack with the basis on the last axis) together with ``basis``.
    """
    basis = state.basis if isinstance(state, SectorState) else basis
    phase = np.where(basis.bits(site) == 0, np.exp(-1j * angle), np.exp(1j * angle))
    return _wrap(state, _amplitudes(state) * phase)


def apply_local_pauli_z(state: SectorState, site: int, basis: SectorBasis | None = None):
    basis = state.basis if isinstance(state, SectorState) else basis
    sign = 1.0 - 2.0 * basis.bits(site)
    return _wrap(state, _amplitudes(state) * sign)


class Bipartition:
    """Index maps that split basis configurations into ``(subset, rest)`` parts.

    ``subset_index[n]`` is the configuration of the subset sites for basis
    state ``n``, read as a binary number with the first listed site as the most
    significant bit (the tensor-product order of a dense subset vector).
    ``group`` assigns each basis state to its rest configuration.
    """

    def __init__(self, basis: SectorBasis, subset: Sequence[int]):
        subset = [int(s) for s in subset]
        if not subset:
            raise ValueError("subset must not be empty")
        if len(set(subset)) != len(subset):
            raise ValueError(f"subset has repeated sites: {subset}")
        for s in subset:
            basis._check_site(s)
        self.basis = basis
        self.subset = subset
        m = len(subset)
        sub = np.zeros(basis.dim, dtype=np.int64)
        for k, s in enumerate(subset):
            sub |= basis.bits(s).astype(np.int64) << (m - 1 - k)
        self.subset_index = sub
        mask = sum(1 << s for s in subset)
        rest = [int(c) & ~mask for c in basis.configs]
        keys: dict[int, int] = {}
        self.group = np.array([keys.setdefault(c, len(keys)) for c in rest], dtype=np.int64)
        self.num_groups = len(keys)
        self.sub_dim = 1 << m
        self.indicator = sp.csr_matrix(
            (np.ones(basis.dim), (self.group, np.arange(basis.dim))),
            shape=(self.num_groups, basis.dim),
        )

    def amplitude_matrix(self, amps: np.ndarray) -> np.ndarray:
        """``M[..., rest, a]`` so that ``rho = M^T conj(M)`` summed over rest."""
        amps = np.asarray(amps)
        out = np.zeros(amps.shape[:-1] + (self.num_groups, self.sub_dim), dtype=complex)
        out[..., self.group, self.subset_index] = amps
        return out

    def reduced(self, amps: np.ndarray) -> np.ndarray:
        m = self.amplitude_matrix(amps)
        return np.einsum("...ga,...gb->...ab", m, m.conj())

    def fidelity(self, amps: np.ndarray, ref: np.ndarray) -> np.ndarray:
        """``<ref| rho_subset |ref>`` for one state or a stack of states."""
        ref = np.asarray(ref, dtype=complex)
        weights = ref.conj()[self.subset_index]
        proj = (self.indicator @ (np.asarray(amps) * weights).T).T
        return np.sum(np.abs(proj) ** 2, axis=-1)


def reduced_density_matrix(state: SectorState, subset: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on ``subset`` (first listed site most significant)."""
    return Bipartition(state.basis, subset).reduced(state.amplitudes)


def embed_product(
    basis: SectorBasis,
    blocks: Sequence[tuple[Sequence[int], np.ndarray]],
) -> np.ndarray:
    """Amplitudes of a product of local vectors, all other sites in ``|0>``.

    Each block is ``(sites, vector)`` with the vector over ``2**len(sites)``
    entries in tensor-product order. Raises if the product has weight outside
    the basis.
    """
    amps = {0: 1.0 + 0j}
    for sites, vec in blocks:
        vec = np.asarray(vec, dtype=complex)
        m = len(sites)
        if vec.shape != (1 << m,):
            raise ValueError(f"block on {m} sites needs {1 << m} amplitudes, got {vec.shape}")
        new: dict[int, complex] = {}
        for a in np.flatnonzero(vec):
            bits = sum(1 << s for k, s in enumerate(sites) if (a >> (m - 1 - k)) & 1)
            for c, x in amps.items():
                new[c | bits] = new.get(c | bits, 0) + x * vec[a]
        amps = new
    out = np.zeros(basis.dim, dtype=complex)
    for c, x in amps.items():
        if c not in basis.lookup:
            if abs(x) > 0:
                raise ValueError(f"product state has weight on {c:b}, outside {basis!r}")
            continue
        out[basis.lookup[c]] = x
    return out
