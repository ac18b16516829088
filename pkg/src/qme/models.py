"""Dense spin-chain operators: the mixed-field Ising chain, the random
cross-product/Heisenberg chain, the blockade-constrained flip model, the
next-nearest-neighbour XXZ chain, and the kicked-Ising one-period unitary.

All builders are pure functions of (basis, params, seed) and record their
inputs as provenance on the returned operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Optional

import numpy as np

from .hilbert import BasisKind, DimensionCapError, SpinBasis, reflect_bits

DENSE_DIM_CAP = 20_000

GOLDEN_H_Z = (1 + np.sqrt(5)) / 4
GOLDEN_H_X = (np.sqrt(5) + 5) / 8


@dataclass(frozen=True)
class MFIMParams:
    j_zz: float = 1.0
    h_x: float = GOLDEN_H_X
    h_z: float = GOLDEN_H_Z
    boundary_dh1: float = 0.25
    boundary_dhN: float = -0.25


@dataclass(frozen=True)
class RandomModelParams:
    seed: int
    w: float = 1.0
    j_h: float = -4.0

    def __post_init__(self):
        if self.w <= 0:
            raise ValueError("disorder half-width w must be positive")


@dataclass(frozen=True)
class KickedIsingParams:
    j_zz: float = 1.0
    h_x: float = GOLDEN_H_X
    h_z: float = GOLDEN_H_Z
    t1: float = 0.5
    t2: float = 0.5

    def __post_init__(self):
        if self.t1 <= 0 or self.t2 <= 0:
            raise ValueError("half-periods t1, t2 must be positive")

    @staticmethod
    def dual_unitary(h_z: float = -0.15) -> "KickedIsingParams":
        """Self-dual point j_zz = -h_x = pi/4 with a small longitudinal field."""
        return KickedIsingParams(j_zz=np.pi / 4, h_x=-np.pi / 4, h_z=h_z)


@dataclass(frozen=True)
class XXZNNNParams:
    j1: float = 1.0
    j2: float = 1.0
    delta1: float = 0.5
    delta2: float = 0.5


@dataclass(frozen=True)
class HermitianOperator:
    basis: SpinBasis
    matrix: np.ndarray = field(repr=False)
    provenance: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class UnitaryOperator:
    basis: SpinBasis
    matrix: np.ndarray = field(repr=False)
    provenance: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _check_cap(basis: SpinBasis, dim_cap: int):
    if basis.dim > dim_cap:
        raise DimensionCapError(
            f"dense operator of dimension {basis.dim} exceeds cap {dim_cap}; "
            f"raise dim_cap explicitly to attempt it"
        )


def _z_values(configs: np.ndarray, site: int) -> np.ndarray:
    """sigma^z eigenvalues (+1 for up) of each configuration at the given site."""
    return 1.0 - 2.0 * ((configs >> (site - 1)) & 1)


def _pauli_step(configs, site, which):
    """Map input configurations through a single-site Pauli; returns (rows, amplitudes)."""
    if which == "z":
        return configs, _z_values(configs, site).astype(np.complex128)
    rows = configs ^ (1 << (site - 1))
    if which == "x":
        return rows, np.ones(len(configs), dtype=np.complex128)
    if which == "y":
        return rows, 1j * _z_values(configs, site)
    raise ValueError(f"unknown Pauli label {which!r}")


def _add_pauli_product(h, configs, coeff, *site_ops):
    """Accumulate coeff * prod_k sigma^{p_k}_{j_k} into the dense matrix h."""
    rows = configs
    amps = np.full(len(configs), coeff, dtype=np.complex128)
    for site, which in site_ops:
        rows, step = _pauli_step(rows, site, which)
        amps = amps * step
    h[rows, configs] += amps


def build_mfim(basis: SpinBasis, p: MFIMParams = MFIMParams(),
               dim_cap: int = DENSE_DIM_CAP) -> HermitianOperator:
    """Ising chain with transverse and longitudinal fields on an open chain.

    The bulk longitudinal field acts on sites 2..N-1 only; the edge sites carry
    just the boundary fields (which break reflection symmetry when nonzero).
    Accepts a parity-sector basis only when both boundary fields vanish.
    """
    if basis.kind is BasisKind.PXP:
        raise ValueError("mixed-field Ising chain is not defined on the constrained basis")
    if basis.kind is BasisKind.PARITY:
        if p.boundary_dh1 != 0 or p.boundary_dhN != 0:
            raise ValueError("nonzero boundary fields break reflection; use the full basis")
        if basis.full_dim > dim_cap:
            raise DimensionCapError(
                f"sector construction goes through the full space of dimension "
                f"{basis.full_dim}, above cap {dim_cap}"
            )
    _check_cap(basis, dim_cap)
    n = basis.n_sites
    configs = np.arange(1 << n, dtype=np.int64)
    h = np.zeros(((1 << n), (1 << n)), dtype=np.float64)
    diag = np.zeros(1 << n, dtype=np.float64)
    for i in range(1, n):
        diag += p.j_zz * _z_values(configs, i) * _z_values(configs, i + 1)
    for i in range(2, n):
        diag += p.h_z * _z_values(configs, i)
    diag += p.boundary_dh1 * _z_values(configs, 1)
    diag += p.boundary_dhN * _z_values(configs, n)
    h[configs, configs] = diag
    for i in range(1, n + 1):
        h[configs ^ (1 << (i - 1)), configs] += p.h_x
    prov = {"model": "mfim", "n_sites": n, "basis": _basis_tag(basis), **vars(p)}
    if basis.kind is BasisKind.PARITY:
        b = basis.embedding_matrix()
        h = np.asarray((b.T @ (b.T @ h).T).T)  # B^T H B through two sparse products
    return HermitianOperator(basis, h, prov)


def build_random_model(basis: SpinBasis, p: RandomModelParams,
                       dim_cap: int = DENSE_DIM_CAP) -> HermitianOperator:
    """Chain of cross-product bond terms with random axes plus a uniform
    Heisenberg coupling; breaks every global symmetry for generic draws."""
    if basis.kind is not BasisKind.FULL:
        raise ValueError("random model requires the full basis")
    _check_cap(basis, dim_cap)
    n = basis.n_sites
    configs = np.arange(1 << n, dtype=np.int64)
    h = np.zeros(((1 << n), (1 << n)), dtype=np.complex128)
    vs = bond_vectors(p, n)
    # (sigma_i x sigma_{i+1}) . v expanded through the Levi-Civita symbol
    cross_terms = {
        "x": (("y", "z"), ("z", "y")),
        "y": (("z", "x"), ("x", "z")),
        "z": (("x", "y"), ("y", "x")),
    }
    for i in range(1, n):
        v = vs[i - 1]
        for c_idx, axis in enumerate("xyz"):
            (a_pos, b_pos), (a_neg, b_neg) = cross_terms[axis]
            if v[c_idx] != 0.0:
                _add_pauli_product(h, configs, v[c_idx], (i, a_pos), (i + 1, b_pos))
                _add_pauli_product(h, configs, -v[c_idx], (i, a_neg), (i + 1, b_neg))
        for axis in "xyz":
            _add_pauli_product(h, configs, p.j_h, (i, axis), (i + 1, axis))
    prov = {"model": "random_cross_heisenberg", "n_sites": n, "basis": _basis_tag(basis),
            "w": p.w, "j_h": p.j_h, "seed": p.seed}
    return HermitianOperator(basis, h, prov)


def bond_vectors(p: RandomModelParams, n_sites: int) -> np.ndarray:
    """Per-bond axis vectors, components uniform in [-w, w], reproducible from the seed."""
    rng = np.random.default_rng(p.seed)
    return rng.uniform(-p.w, p.w, size=(n_sites - 1, 3))


def build_pxp(basis: SpinBasis, omega: float = 1.0,
              dim_cap: int = DENSE_DIM_CAP) -> HermitianOperator:
    """Constrained flip model: spin j flips with amplitude omega when both
    neighbours point down (open boundaries: edge sites need only one neighbour down)."""
    if basis.kind is not BasisKind.PXP:
        raise ValueError("constrained flip model requires the blockade-constrained basis")
    _check_cap(basis, dim_cap)
    n = basis.n_sites
    configs = basis.configs
    h = np.zeros((basis.dim, basis.dim), dtype=np.float64)
    cols = np.arange(basis.dim)
    for j in range(1, n + 1):
        ok = np.ones(basis.dim, dtype=bool)
        if j > 1:
            ok &= ((configs >> (j - 2)) & 1) == 1
        if j < n:
            ok &= ((configs >> j) & 1) == 1
        flipped = configs[ok] ^ (1 << (j - 1))
        h[basis.index_of(flipped), cols[ok]] += omega
    prov = {"model": "pxp", "n_sites": n, "basis": _basis_tag(basis), "omega": omega}
    return HermitianOperator(basis, h, prov)


def build_xxz_nnn(basis: SpinBasis, p: XXZNNNParams = XXZNNNParams(),
                  dim_cap: int = DENSE_DIM_CAP) -> HermitianOperator:
    """XXZ chain plus next-nearest-neighbour copy; conserves total magnetization."""
    if basis.kind is not BasisKind.FULL:
        raise ValueError("XXZ-NNN model requires the full basis")
    _check_cap(basis, dim_cap)
    n = basis.n_sites
    configs = np.arange(1 << n, dtype=np.int64)
    h = np.zeros(((1 << n), (1 << n)), dtype=np.complex128)
    for i in range(1, n):
        for axis, fac in (("x", 1.0), ("y", 1.0), ("z", p.delta1)):
            _add_pauli_product(h, configs, p.j1 * fac, (i, axis), (i + 1, axis))
    for i in range(1, n - 1):
        for axis, fac in (("x", 1.0), ("y", 1.0), ("z", p.delta2)):
            _add_pauli_product(h, configs, p.j2 * fac, (i, axis), (i + 2, axis))
    assert np.max(np.abs(h.imag)) < 1e-12
    prov = {"model": "xxz_nnn", "n_sites": n, "basis": _basis_tag(basis), **vars(p)}
    return HermitianOperator(basis, np.ascontiguousarray(h.real), prov)


def build_kicked_ising(basis: SpinBasis, p: KickedIsingParams = KickedIsingParams(),
                       dim_cap: int = DENSE_DIM_CAP) -> UnitaryOperator:
    """One-period unitary: a diagonal Ising+longitudinal phase for time t1
    followed by (i.e. applied after) a uniform transverse kick of duration t2."""
    if basis.kind is not BasisKind.FULL:
        raise ValueError("kicked Ising unitary requires the full basis")
    _check_cap(basis, dim_cap)
    n = basis.n_sites
    configs = np.arange(1 << n, dtype=np.int64)
    diag = np.zeros(1 << n, dtype=np.float64)
    for i in range(1, n):
        diag += p.j_zz * _z_values(configs, i) * _z_values(configs, i + 1)
    for i in range(1, n + 1):
        diag += p.h_z * _z_values(configs, i)
    a = p.t2 * p.h_x
    u2 = np.array([[np.cos(a), -1j * np.sin(a)], [-1j * np.sin(a), np.cos(a)]])
    kick = reduce(np.kron, [u2] * n)
    u = np.exp(-1j * p.t1 * diag)[:, None] * kick
    prov = {"model": "kicked_ising", "n_sites": n, "basis": _basis_tag(basis), **vars(p)}
    return UnitaryOperator(basis, u, prov)


def random_two_site_generator(basis: SpinBasis, seed: int,
                              dim_cap: int = DENSE_DIM_CAP) -> HermitianOperator:
    """Sum of independent random Hermitian two-site blocks, one per bond.

    Block entries are standard complex normals, Hermitian-symmetrized; used to
    weakly entangle product states by short-time evolution.
    """
    if basis.kind is not BasisKind.FULL:
        raise ValueError("random entangler requires the full basis")
    _check_cap(basis, dim_cap)
    n = basis.n_sites
    rng = np.random.default_rng(seed)
    h = np.zeros((basis.dim, basis.dim), dtype=np.complex128)
    for i in range(1, n):
        g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        block = (g + g.conj().T) / 2
        left = np.eye(1 << (n - i - 1))
        right = np.eye(1 << (i - 1))
        h += np.kron(left, np.kron(block, right))
    prov = {"model": "random_two_site_sum", "n_sites": n, "basis": _basis_tag(basis),
            "seed": seed}
    return HermitianOperator(basis, h, prov)


def reflection_operator(basis: SpinBasis) -> np.ndarray:
    """Permutation matrix reversing the chain, in the full computational basis."""
    if basis.kind is not BasisKind.FULL:
        raise ValueError("reflection operator defined on the full basis")
    d = basis.dim
    perm = reflect_bits(basis.configs, basis.n_sites)
    r = np.zeros((d, d))
    r[perm, np.arange(d)] = 1.0
    return r


def _basis_tag(basis: SpinBasis) -> str:
    if basis.kind is BasisKind.PARITY:
        return f"parity{basis.parity:+d}"
    return basis.kind.value
