"""Independent brute-force reference implementations used by the tests.

Everything here is built from first principles (explicit Kronecker products,
index loops, dense matrix exponentials) and deliberately shares no code with
the package internals it is used to check.
"""

from functools import reduce

import numpy as np

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
ID2 = np.eye(2, dtype=complex)


def kron_chain(ops_by_site):
    """Full-space operator from a list of 2x2 matrices, ops_by_site[0] on site 1.

    Site j occupies bit j-1, so site 1 must be the least significant kron factor.
    """
    return reduce(np.kron, reversed(list(ops_by_site)))


def site_operator(n, j, op):
    ops = [ID2] * n
    ops[j - 1] = op
    return kron_chain(ops)


def two_site_operator(n, i, op_i, j, op_j):
    ops = [ID2] * n
    ops[i - 1] = op_i
    ops[j - 1] = op_j
    return kron_chain(ops)


def mfim_dense(n, j_zz, h_x, h_z, dh1=0.0, dhn=0.0):
    """Mixed-field Ising chain assembled term by term with explicit krons."""
    h = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(1, n):
        h += j_zz * two_site_operator(n, i, SIGMA_Z, i + 1, SIGMA_Z)
    for i in range(1, n + 1):
        h += h_x * site_operator(n, i, SIGMA_X)
    for i in range(2, n):
        h += h_z * site_operator(n, i, SIGMA_Z)
    h += dh1 * site_operator(n, 1, SIGMA_Z)
    h += dhn * site_operator(n, n, SIGMA_Z)
    return h


def product_state_dense(n, theta, phi):
    """Uniform Bloch product state assembled with explicit krons."""
    v = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
    return kron_chain([v] * n)


def partial_trace_loops(psi, n, a_start, n_a):
    """Reduced density matrix on the contiguous block via explicit index loops."""
    d_a = 2**n_a
    n_low = a_start - 1
    n_rest = n - n_a
    rho = np.zeros((d_a, d_a), dtype=complex)
    low_mask = (1 << n_low) - 1
    for a in range(d_a):
        for ap in range(d_a):
            acc = 0.0
            for b in range(2**n_rest):
                low = b & low_mask
                high = b >> n_low
                idx = low | (a << n_low) | (high << (n_low + n_a))
                idxp = low | (ap << n_low) | (high << (n_low + n_a))
                acc += psi[idx] * np.conj(psi[idxp])
            rho[a, ap] = acc
    return rho


def amplitude_matrices_loops(vectors, n, a_start, n_a):
    """Block/environment amplitude matrices of each column vector, built by
    explicit per-index bit arithmetic (no reshape tricks)."""
    n_low = a_start - 1
    d_a = 2**n_a
    d_b = 2 ** (n - n_a)
    mats = []
    for k in range(vectors.shape[1]):
        m = np.zeros((d_a, d_b), dtype=complex)
        for idx in range(2**n):
            low = idx & ((1 << n_low) - 1)
            a = (idx >> n_low) & (d_a - 1)
            high = idx >> (n_low + n_a)
            m[a, low | (high << n_low)] = vectors[idx, k]
        mats.append(m)
    return mats


def offdiagonal_distance_loops(energies, vectors, overlaps, t, n, a_start, n_a):
    """Half the trace norm of the explicitly summed off-diagonal (n != m) part
    of the time-evolved projector, reduced to the block: the pair-sum route to
    the distance from the dephased ensemble."""
    mats = amplitude_matrices_loops(vectors, n, a_start, n_a)
    d = len(energies)
    total = np.zeros((2**n_a, 2**n_a), dtype=complex)
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            phase = np.exp(-1j * (energies[i] - energies[j]) * t)
            coeff = overlaps[i] * np.conj(overlaps[j]) * phase
            total += coeff * (mats[i] @ mats[j].conj().T)
    herm = (total + total.conj().T) / 2
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(herm))))


def mps_amplitudes_brute(n, theta, left=None, right=None):
    """Amplitudes of the bond-dimension-2 family by multiplying the per-site
    matrices configuration by configuration."""
    a_dn = np.array([[np.cos(theta), 0], [np.sin(theta), 0]], dtype=complex)
    a_up = np.array([[0, -1j], [0, 0]], dtype=complex)
    l = np.array([1, 0], dtype=complex) if left is None else np.asarray(left, dtype=complex)
    r = np.array([1, 0], dtype=complex) if right is None else np.asarray(right, dtype=complex)
    amps = np.zeros(2**n, dtype=complex)
    for c in range(2**n):
        m = np.eye(2, dtype=complex)
        for site in range(1, n + 1):
            bit = (c >> (site - 1)) & 1
            m = m @ (a_up if bit == 0 else a_dn)
        amps[c] = l.conj() @ m @ r
    return amps
