"""Spin-1/2 chain Hilbert spaces: full, blockade-constrained and parity-resolved bases,
plus bipartitions and partial traces.

Bit layout (fixed for the whole package): site j lives on bit j-1 of the
configuration integer, bit value 0 means spin up, 1 means spin down. The full
basis is ordered by ascending integer value, so index == configuration there.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
import scipy.sparse

MAX_SITES = 24


class DimensionCapError(RuntimeError):
    """Requested Hilbert space or dense operator exceeds the configured cap."""


class BasisKind(Enum):
    FULL = "full"
    PXP = "pxp"
    PARITY = "parity"


def reflect_bits(configs, n_sites: int):
    """Reverse the n_sites-bit pattern of each configuration (chain reflection)."""
    c = np.asarray(configs, dtype=np.int64)
    out = np.zeros_like(c)
    for j in range(n_sites):
        out |= ((c >> j) & 1) << (n_sites - 1 - j)
    return out if out.ndim else np.int64(out)


def _pxp_configs(n_sites: int) -> np.ndarray:
    # Adjacent up spins are adjacent 0-bits; keep configs where the up-mask
    # has no two neighbouring 1s.
    all_configs = np.arange(1 << n_sites, dtype=np.int64)
    up_mask = ~all_configs & ((1 << n_sites) - 1)
    return all_configs[(up_mask & (up_mask >> 1)) == 0]


@dataclass(frozen=True)
class SpinBasis:
    """Ordered computational basis of an N-site spin-1/2 chain (or a subspace of it).

    For the parity kind each basis element is either a reflection-invariant
    configuration or the normalized combination (|s> + parity*|R(s)>)/sqrt(2);
    ``configs`` then holds the representative s = min(s, R(s)) and ``partners``
    holds R(s).
    """

    n_sites: int
    kind: BasisKind
    configs: np.ndarray
    parity: Optional[int] = None
    partners: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return len(self.configs)

    @property
    def full_dim(self) -> int:
        return 1 << self.n_sites

    def index_of(self, configs):
        """Map configuration integers (representatives, for parity bases) to positions."""
        idx = np.searchsorted(self.configs, configs)
        idx_arr = np.atleast_1d(idx)
        conf_arr = np.atleast_1d(np.asarray(configs, dtype=np.int64))
        valid = (idx_arr < self.dim) & (self.configs[np.minimum(idx_arr, self.dim - 1)] == conf_arr)
        if not valid.all():
            raise KeyError(f"configuration(s) {conf_arr[~valid]} not in basis")
        return idx

    def embedding_matrix(self) -> scipy.sparse.csr_matrix:
        """Isometry B (full_dim x dim) whose columns are the basis elements in the full space."""
        d = self.dim
        if self.kind is BasisKind.FULL:
            return scipy.sparse.identity(d, dtype=np.float64, format="csr")
        if self.kind is BasisKind.PXP:
            return scipy.sparse.csr_matrix(
                (np.ones(d), (self.configs, np.arange(d))), shape=(self.full_dim, d)
            )
        rows, cols, vals = [], [], []
        for k in range(d):
            s, r = int(self.configs[k]), int(self.partners[k])
            if s == r:
                rows.append(s)
                cols.append(k)
                vals.append(1.0)
            else:
                rows += [s, r]
                cols += [k, k]
                vals += [1 / np.sqrt(2), self.parity / np.sqrt(2)]
        return scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(self.full_dim, d))


def build_basis(n_sites: int, kind: BasisKind, parity: Optional[int] = None,
                max_sites: int = MAX_SITES) -> SpinBasis:
    """Construct the ordered basis of the requested kind.

    Full bases hold all 2^N configurations; the blockade-constrained basis
    excludes adjacent up spins (dimension Fib(N+2) for an open chain); parity
    bases resolve reflection about the chain center into the +1/-1 sector.
    """
    if not 2 <= n_sites <= max_sites:
        raise DimensionCapError(f"n_sites={n_sites} outside supported range [2, {max_sites}]")
    if kind is BasisKind.FULL:
        return SpinBasis(n_sites, kind, np.arange(1 << n_sites, dtype=np.int64))
    if kind is BasisKind.PXP:
        return SpinBasis(n_sites, kind, _pxp_configs(n_sites))
    if kind is BasisKind.PARITY:
        if parity not in (+1, -1):
            raise ValueError(f"parity must be +1 or -1, got {parity!r}")
        all_configs = np.arange(1 << n_sites, dtype=np.int64)
        reflected = reflect_bits(all_configs, n_sites)
        if parity == +1:
            keep = all_configs <= reflected
        else:
            keep = all_configs < reflected
        reps = all_configs[keep]
        return SpinBasis(n_sites, kind, reps, parity=parity, partners=reflected[keep])
    raise ValueError(f"unknown basis kind {kind!r}")


@dataclass(frozen=True)
class PureState:
    """Normalized amplitude vector over a SpinBasis."""

    basis: SpinBasis
    amplitudes: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.amplitudes)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def embed_state(state: PureState, target: SpinBasis) -> PureState:
    """Place the amplitudes of a constrained/sector state at the matching full-space
    configurations; norm is preserved."""
    if target.kind is not BasisKind.FULL:
        raise ValueError("embedding target must be a full basis")
    if target.n_sites != state.basis.n_sites:
        raise ValueError(
            f"site-count mismatch: state has N={state.basis.n_sites}, target N={target.n_sites}"
        )
    if state.basis.kind is BasisKind.FULL:
        return PureState(target, state.amplitudes.copy())
    full = state.basis.embedding_matrix() @ state.amplitudes
    return PureState(target, np.asarray(full))


def project_state(state: PureState, sub_basis: SpinBasis) -> PureState:
    """Adjoint of embed_state: restrict a full-space vector to a sub-basis."""
    if state.basis.kind is not BasisKind.FULL:
        raise ValueError("projection source must live on a full basis")
    if state.basis.n_sites != sub_basis.n_sites:
        raise ValueError("site-count mismatch between state and sub-basis")
    reduced = sub_basis.embedding_matrix().conj().T @ state.amplitudes
    return PureState(sub_basis, np.asarray(reduced))


@dataclass(frozen=True)
class Bipartition:
    """Contiguous block A of a chain plus its complement B.

    ``a_start`` is 1-based; block A covers sites a_start .. a_start+n_a-1 and
    therefore bits a_start-1 .. a_start+n_a-2 of the configuration integer.
    """

    n_sites: int
    a_start: int
    n_a: int

    def __post_init__(self):
        if not (1 <= self.a_start and self.a_start + self.n_a - 1 <= self.n_sites):
            raise ValueError(f"block [{self.a_start}, {self.a_start + self.n_a - 1}] "
                             f"outside chain of {self.n_sites} sites")

    @property
    def a_sites(self) -> tuple:
        return tuple(range(self.a_start, self.a_start + self.n_a))

    @property
    def b_sites(self) -> tuple:
        return tuple(j for j in range(1, self.n_sites + 1) if j not in self.a_sites)

    @property
    def d_a(self) -> int:
        return 1 << self.n_a

    @property
    def d_b(self) -> int:
        return 1 << (self.n_sites - self.n_a)


def half_chain(n_sites: int) -> Bipartition:
    """Default bipartition: A is the left half, sites 1..ceil(N/2)."""
    return Bipartition(n_sites, 1, (n_sites + 1) // 2)


def centered_block(n_sites: int, n_a: int) -> Bipartition:
    """A is a block of n_a sites centered on the chain."""
    return Bipartition(n_sites, (n_sites - n_a) // 2 + 1, n_a)


def _split_amplitudes(psi: np.ndarray, bipart: Bipartition) -> np.ndarray:
    """Reshape a full-space vector into the (d_a, d_b) amplitude matrix M with
    M[a, b] the amplitude of the configuration whose A-part is a and B-part is b."""
    n_low = bipart.a_start - 1
    n_high = bipart.n_sites - n_low - bipart.n_a
    m = psi.reshape(1 << n_high, bipart.d_a, 1 << n_low)
    return np.moveaxis(m, 1, 0).reshape(bipart.d_a, bipart.d_b)


def pure_partial_trace(state: PureState, bipart: Bipartition, keep: str = "a") -> np.ndarray:
    """Reduced density matrix of a pure full-space state on block A (or on B with keep='b')."""
    if state.basis.kind is not BasisKind.FULL:
        raise ValueError("partial trace expects a state on the full basis; embed it first")
    if state.dim != bipart.d_a * bipart.d_b:
        raise ValueError(f"state dimension {state.dim} does not match bipartition "
                         f"{bipart.d_a}x{bipart.d_b}")
    nrm = state.norm()
    if abs(nrm - 1.0) > 1e-10:
        raise ValueError(f"state norm {nrm} deviates from 1 beyond 1e-10")
    m = _split_amplitudes(state.amplitudes, bipart)
    if keep == "a":
        return m @ m.conj().T
    if keep == "b":
        return m.T @ m.conj()
    raise ValueError("keep must be 'a' or 'b'")


def reduced_density_sum(vectors: np.ndarray, weights: np.ndarray, bipart: Bipartition,
                        basis: SpinBasis, chunk_bytes: int = 1 << 28) -> np.ndarray:
    """sum_n w_n Tr_B |v_n><v_n| accumulated column-chunk-wise.

    ``vectors`` holds the v_n as columns over ``basis``; sector/constrained
    vectors are embedded into the full space per chunk, so memory stays at
    O(chunk * 2^N) instead of O(D * 2^N).
    """
    w = np.asarray(weights, dtype=np.float64)
    n_vec = vectors.shape[1]
    if w.shape != (n_vec,):
        raise ValueError("one weight per vector column required")
    embed = None
    if basis.kind is not BasisKind.FULL:
        embed = basis.embedding_matrix()
    chunk = max(1, int(chunk_bytes // max(1, 16 * basis.full_dim)))
    rho = np.zeros((bipart.d_a, bipart.d_a), dtype=np.complex128)
    n_low = bipart.a_start - 1
    n_high = bipart.n_sites - n_low - bipart.n_a
    for start in range(0, n_vec, chunk):
        cols = vectors[:, start:start + chunk]
        if embed is not None:
            cols = embed @ cols
        k = cols.shape[1]
        block = np.ascontiguousarray(cols.T).reshape(k, 1 << n_high, bipart.d_a, 1 << n_low)
        block = np.moveaxis(block, 2, 1).reshape(k, bipart.d_a, bipart.d_b)
        scaled = block * w[start:start + k, None, None]
        rho += np.tensordot(scaled, block.conj(), axes=([0, 2], [0, 2]))
    return rho
