"""Scalar relaxation diagnostics on states, reduced density matrices and
eigenbasis overlaps, plus small helpers for analysing distance-vs-time curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.signal

EIGENVALUE_FLOOR = 1e-14


def _check_density_pair(rho: np.ndarray, sigma: np.ndarray):
    if rho.shape != sigma.shape or rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    for m in (rho, sigma):
        if abs(np.trace(m) - 1.0) > 1e-8 or np.max(np.abs(m - m.conj().T)) > 1e-8:
            raise ValueError("inputs must be Hermitian with unit trace (1e-8)")


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Half the sum of absolute eigenvalues of rho - sigma; in [0, 1]."""
    _check_density_pair(rho, sigma)
    diff = rho - sigma
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


def frobenius_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """sqrt(1 - min(1, 2 Tr[rho sigma] / Tr[rho^2 + sigma^2])); in [0, 1]."""
    _check_density_pair(rho, sigma)
    cross = float(np.real(np.trace(rho @ sigma)))
    norms = float(np.real(np.trace(rho @ rho) + np.trace(sigma @ sigma)))
    return math.sqrt(1.0 - min(1.0, 2.0 * cross / norms))


def _entropy_of_eigenvalues(evals: np.ndarray) -> float:
    if evals.min() < -1e-10:
        raise ValueError(f"density matrix has negative eigenvalue {evals.min()}")
    p = evals[evals > EIGENVALUE_FLOOR]
    return float(-np.sum(p * np.log(p)))


def von_neumann_entropy(rho: np.ndarray) -> float:
    """-Tr[rho ln rho] with eigenvalues below the floor treated as exact zeros."""
    return _entropy_of_eigenvalues(np.linalg.eigvalsh(rho))


def relative_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Tr[rho (ln rho - ln sigma)]; +inf when rho has weight outside sigma's support."""
    _check_density_pair(rho, sigma)
    s_vals, s_vecs = np.linalg.eigh(sigma)
    rho_in_sigma = s_vecs.conj().T @ rho @ s_vecs
    diag = np.real(np.diag(rho_in_sigma))
    outside = s_vals <= EIGENVALUE_FLOOR
    if float(diag[outside].sum()) > 1e-10:
        return math.inf
    cross = float(np.sum(diag[~outside] * np.log(s_vals[~outside])))
    return -von_neumann_entropy(rho) - cross


def subsystem_charges(n_a: int) -> np.ndarray:
    """Eigenvalues of the block magnetization sum_{i in A} sigma^z_i along the
    computational basis of the block (bit 0 means up)."""
    return n_a - 2 * np.bitwise_count(np.arange(1 << n_a, dtype=np.uint64)).astype(np.int64)


def charge_dephase(rho_a: np.ndarray, n_a: int) -> np.ndarray:
    """Project out coherences between different block-magnetization sectors."""
    q = subsystem_charges(n_a)
    if rho_a.shape[0] != len(q):
        raise ValueError(f"matrix dim {rho_a.shape[0]} is not 2^{n_a}")
    mask = q[:, None] == q[None, :]
    return np.where(mask, rho_a, 0.0)


def entanglement_asymmetry(rho_a: np.ndarray, n_a: int) -> float:
    """Entropy gained by dephasing the reduced state over block-magnetization
    sectors; zero iff the state is block diagonal in the charge eigenbasis."""
    return von_neumann_entropy(charge_dephase(rho_a, n_a)) - von_neumann_entropy(rho_a)


def ipr(overlaps: np.ndarray) -> float:
    """sum_n |c_n|^4 over normalized eigenbasis overlaps; in [1/D, 1]."""
    w = np.abs(np.asarray(overlaps)) ** 2
    total = float(w.sum())
    if abs(total - 1.0) > 1e-8:
        raise ValueError(f"overlaps are unnormalized: sum |c|^2 = {total}")
    return float(np.sum(w**2))


def energy_moments(overlaps: np.ndarray, values: np.ndarray) -> tuple:
    """(mean, variance) of the quench energy distribution, from overlaps."""
    w = np.abs(np.asarray(overlaps)) ** 2
    vals = np.asarray(values, dtype=np.float64)
    mean = float(np.sum(w * vals))
    return mean, float(np.sum(w * vals**2) - mean**2)


@dataclass(frozen=True)
class OverlapSpectrum:
    """Eigenbasis weights |c_n|^2 against eigenvalues, with the smoothing width
    and the reference (ground) energy for the frequency axis."""

    energies: np.ndarray
    weights: np.ndarray
    sigma: float
    e0: Optional[float] = None

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("broadening width must be positive")
        if abs(float(np.sum(self.weights)) - 1.0) > 1e-8:
            raise ValueError("overlap weights must sum to 1")


def default_broadening(values: np.ndarray, n_sites: int) -> float:
    """Smoothing width 0.05 * spectral span / N."""
    vals = np.asarray(values)
    return 0.05 * float(vals.max() - vals.min()) / n_sites


def overlap_spectral_function(spectrum: OverlapSpectrum, omega_grid: np.ndarray) -> np.ndarray:
    """Gaussian-smoothed weight density over frequencies measured from the
    reference energy; integrates to ~1 on a wide enough grid."""
    e0 = spectrum.e0 if spectrum.e0 is not None else float(np.min(spectrum.energies))
    omega = np.asarray(omega_grid, dtype=np.float64)
    gaps = np.asarray(spectrum.energies, dtype=np.float64) - e0
    norm = 1.0 / (spectrum.sigma * math.sqrt(2 * math.pi))
    out = np.zeros_like(omega)
    chunk = max(1, int(2_000_000 // max(1, len(gaps))))
    for start in range(0, len(omega), chunk):
        d = omega[start:start + chunk, None] - gaps[None, :]
        out[start:start + chunk] = np.exp(-0.5 * (d / spectrum.sigma) ** 2) @ spectrum.weights
    return norm * out


def count_prominent_peaks(series: np.ndarray, prominence: float) -> int:
    peaks, _ = scipy.signal.find_peaks(np.asarray(series), prominence=prominence)
    return len(peaks)


def inverted_run_fraction(times: np.ndarray, first: np.ndarray, second: np.ndarray) -> float:
    """Longest contiguous stretch with second < first, as a fraction of the window.

    Intended for curves with second(t=0) >= first(t=0): a large value means the
    initial ordering genuinely inverts rather than the curves merely touching.
    """
    t = np.asarray(times, dtype=np.float64)
    below = np.asarray(second) < np.asarray(first)
    longest = 0.0
    start = None
    for k, flag in enumerate(below):
        if flag and start is None:
            start = k
        elif not flag and start is not None:
            longest = max(longest, t[k - 1] - t[start])
            start = None
    if start is not None:
        longest = max(longest, t[-1] - t[start])
    return float(longest / (t[-1] - t[0]))


def first_crossing_time(times: np.ndarray, first: np.ndarray, second: np.ndarray,
                        min_run_fraction: float = 0.05) -> Optional[float]:
    """Earliest time where `second` drops below `first` and stays below for at
    least min_run_fraction of the window; None if that never happens."""
    t = np.asarray(times, dtype=np.float64)
    d = np.asarray(second) - np.asarray(first)
    window = t[-1] - t[0]
    k = 0
    while k + 1 < len(t):
        if d[k] >= 0 and d[k + 1] < 0:
            j = k + 1
            while j + 1 < len(t) and d[j + 1] < 0:
                j += 1
            if (t[j] - t[k + 1]) >= min_run_fraction * window:
                if d[k + 1] == d[k]:
                    return float(t[k + 1])
                frac = d[k] / (d[k] - d[k + 1])
                return float(t[k] + frac * (t[k + 1] - t[k]))
            k = j
        k += 1
    return None
