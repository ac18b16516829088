"""Exact quench evolution in the energy eigenbasis (stroboscopic for Floquet
operators) and diagonal-ensemble construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import Bipartition, PureState, SpinBasis, reduced_density_sum
from .spectral import EigenSystem

_TIME_SLACK = 1e-9


@dataclass(frozen=True)
class QuenchSetup:
    """Eigensystem + initial state + time grid, with the eigenbasis overlaps
    c_n = <E_n|psi> precomputed."""

    eigensystem: EigenSystem
    initial: PureState
    overlaps: np.ndarray
    times: np.ndarray

    @property
    def basis(self) -> SpinBasis:
        return self.initial.basis

    @property
    def floquet(self) -> bool:
        return self.eigensystem.kind == "unitary"

    @property
    def weights(self) -> np.ndarray:
        return np.abs(self.overlaps) ** 2


@dataclass(frozen=True)
class DiagonalEnsemble:
    weights: np.ndarray
    rho_a: np.ndarray
    bipartition: Bipartition


def make_quench(eigs: EigenSystem, state: PureState, times) -> QuenchSetup:
    """Prepare a quench; times must be strictly increasing (integer periods for
    Floquet eigensystems)."""
    t = np.asarray(times, dtype=np.float64)
    if t.ndim != 1 or len(t) < 1 or np.any(np.diff(t) <= 0):
        raise ValueError("time grid must be one-dimensional and strictly increasing")
    if eigs.dim != state.dim:
        raise ValueError(f"eigensystem dim {eigs.dim} != state dim {state.dim}")
    if eigs.kind == "unitary" and np.max(np.abs(t - np.round(t))) > _TIME_SLACK:
        raise ValueError("Floquet evolution is stroboscopic; times must be integer periods")
    c = eigs.vectors.conj().T @ state.amplitudes
    total = float(np.sum(np.abs(c) ** 2))
    if abs(total - 1.0) > 1e-10:
        raise ValueError(f"overlap weights sum to {total}, expected 1 within 1e-10")
    return QuenchSetup(eigs, state, c, t)


def time_grid(t_max: float, dt: float, t_start: float = 0.0) -> np.ndarray:
    n = int(round((t_max - t_start) / dt))
    return t_start + dt * np.arange(n + 1)


def _phases(setup: QuenchSetup, t) -> np.ndarray:
    vals = setup.eigensystem.values
    if setup.floquet:
        return np.exp(1j * np.multiply.outer(vals, np.round(np.asarray(t))))
    return np.exp(-1j * np.multiply.outer(vals, np.asarray(t)))


def evolve(setup: QuenchSetup, t: float) -> PureState:
    """State at time t (Hamiltonian) or after t whole periods (Floquet)."""
    if not (setup.times[0] - _TIME_SLACK <= t <= setup.times[-1] + _TIME_SLACK):
        raise ValueError(f"t={t} outside the configured grid "
                         f"[{setup.times[0]}, {setup.times[-1]}]")
    if setup.floquet and abs(t - round(t)) > _TIME_SLACK:
        raise ValueError(f"Floquet time must be an integer period count, got {t}")
    amps = setup.eigensystem.vectors @ (setup.overlaps * _phases(setup, t))
    return PureState(setup.basis, amps)


def evolve_all(setup: QuenchSetup, times=None) -> np.ndarray:
    """States at every grid time as columns of a (dim, n_times) array."""
    t = setup.times if times is None else np.asarray(times, dtype=np.float64)
    return setup.eigensystem.vectors @ (setup.overlaps[:, None] * _phases(setup, t))


def diagonal_ensemble(setup: QuenchSetup, bipart: Bipartition) -> DiagonalEnsemble:
    """Dephased reference state reduced to block A:
    sum_n |c_n|^2 Tr_B |E_n><E_n|, accumulated without forming the full matrix."""
    rho = reduced_density_sum(setup.eigensystem.vectors, setup.weights, bipart, setup.basis)
    return DiagonalEnsemble(setup.weights, rho, bipart)


def reduced_densities(setup: QuenchSetup, bipart: Bipartition, times=None,
                      chunk_bytes: int = 1 << 28):
    """Yield (t, rho_A(t)) along the grid; constrained/sector states are
    embedded into the full space chunk by chunk."""
    t = setup.times if times is None else np.asarray(times, dtype=np.float64)
    embed = None
    if setup.basis.kind.value != "full":
        embed = setup.basis.embedding_matrix()
    n_low = bipart.a_start - 1
    n_high = bipart.n_sites - n_low - bipart.n_a
    chunk = max(1, int(chunk_bytes // max(1, 16 * setup.basis.full_dim)))
    for start in range(0, len(t), chunk):
        cols = evolve_all(setup, t[start:start + chunk])
        if embed is not None:
            cols = embed @ cols
        block = np.ascontiguousarray(cols.T).reshape(-1, 1 << n_high, bipart.d_a, 1 << n_low)
        block = np.moveaxis(block, 2, 1).reshape(block.shape[0], bipart.d_a, bipart.d_b)
        for k in range(block.shape[0]):
            m = block[k]
            yield t[start + k], m @ m.conj().T
