"""Initial-state constructors: Bloch product states, axis-tilted ferromagnets,
random-angle ensembles, finite truncations of the bond-dimension-2 family,
blockaded pattern states, and randomly entangled product states.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import scipy.optimize

from .hilbert import BasisKind, PureState, SpinBasis
from .models import MFIMParams, random_two_site_generator


@dataclass(frozen=True)
class ProductStateSpec:
    """Per-site Bloch angles; theta in [0, pi], phi in [0, 2 pi)."""

    thetas: np.ndarray
    phis: np.ndarray

    def __post_init__(self):
        th = np.asarray(self.thetas, dtype=np.float64)
        ph = np.asarray(self.phis, dtype=np.float64)
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "phis", ph)
        if th.shape != ph.shape or th.ndim != 1:
            raise ValueError("thetas and phis must be 1-d arrays of equal length")
        if np.any((th < 0) | (th > np.pi)):
            raise ValueError("theta out of range [0, pi]")
        if np.any((ph < 0) | (ph >= 2 * np.pi)):
            raise ValueError("phi out of range [0, 2 pi)")

    @staticmethod
    def uniform(n_sites: int, theta: float, phi: float = 0.0) -> "ProductStateSpec":
        return ProductStateSpec(np.full(n_sites, theta), np.full(n_sites, phi))


@dataclass(frozen=True)
class MPSStateSpec:
    """Single-angle bond-dimension-2 family, truncated to an open chain with
    fixed boundary vectors and post-normalization."""

    theta: float
    left: Tuple[complex, complex] = (1.0, 0.0)
    right: Tuple[complex, complex] = (1.0, 0.0)


def product_state(basis: SpinBasis, spec: ProductStateSpec) -> PureState:
    """Amplitude of each configuration is the product over sites of
    cos(theta_i/2) for up and e^{i phi_i} sin(theta_i/2) for down."""
    if basis.kind is not BasisKind.FULL:
        raise ValueError("product states live on the full basis")
    n = basis.n_sites
    if len(spec.thetas) != n:
        raise ValueError(f"spec has {len(spec.thetas)} sites, basis has {n}")
    configs = basis.configs
    amps = np.ones(basis.dim, dtype=np.complex128)
    for j in range(1, n + 1):
        bit = (configs >> (j - 1)) & 1
        up = np.cos(spec.thetas[j - 1] / 2)
        down = np.exp(1j * spec.phis[j - 1]) * np.sin(spec.thetas[j - 1] / 2)
        amps *= np.where(bit == 0, up, down)
    return PureState(basis, amps)


def uniform_product_state(basis: SpinBasis, theta: float, phi: float = 0.0) -> PureState:
    return product_state(basis, ProductStateSpec.uniform(basis.n_sites, theta, phi))


def tilted_fm(basis: SpinBasis, axis: str, theta: float) -> PureState:
    """Ferromagnet rotated by theta about the given axis; equals a uniform
    product state with the per-axis Bloch angles (z gives back the up state,
    global phase dropped)."""
    if axis == "z":
        return uniform_product_state(basis, 0.0, 0.0)
    if axis == "y":
        return uniform_product_state(basis, theta, 0.0)
    if axis == "x":
        # exp(-i theta/2 sigma^x)|up> = cos(theta/2)|up> - i sin(theta/2)|down>
        return uniform_product_state(basis, theta, 3 * np.pi / 2)
    raise ValueError(f"axis must be one of x, y, z, got {axis!r}")


def random_angle_spec(n_sites: int, f: float, seed: int) -> ProductStateSpec:
    """Independent per-site angles drawn uniformly from the lower fraction f of
    each domain: theta_i ~ U[0, f pi], phi_i ~ U[0, f 2 pi)."""
    if not 0 < f <= 1:
        raise ValueError(f"fraction f must lie in (0, 1], got {f}")
    rng = np.random.default_rng(seed)
    thetas = rng.uniform(0, f * np.pi, n_sites)
    phis = rng.uniform(0, f * 2 * np.pi, n_sites)
    return ProductStateSpec(thetas, phis)


def random_angle_state(basis: SpinBasis, f: float, seed: int) -> PureState:
    return product_state(basis, random_angle_spec(basis.n_sites, f, seed))


def _mps_matrices(theta: float):
    a_down = np.array([[np.cos(theta), 0.0], [np.sin(theta), 0.0]], dtype=np.complex128)
    a_up = np.array([[0.0, -1j], [0.0, 0.0]], dtype=np.complex128)
    return a_up, a_down


def mps_state(basis: SpinBasis, spec: MPSStateSpec) -> PureState:
    """Contract the per-site 2x2 matrices against the boundary vectors for every
    configuration at once (right-to-left sweep), then normalize.

    The up-up product of the matrices vanishes, so amplitudes on configurations
    with adjacent up spins are exactly zero.
    """
    if basis.kind is not BasisKind.FULL:
        raise ValueError("finite MPS truncations are built over the full basis")
    a_up, a_down = _mps_matrices(spec.theta)
    l = np.asarray(spec.left, dtype=np.complex128)
    r = np.asarray(spec.right, dtype=np.complex128)
    configs = basis.configs
    vecs = np.broadcast_to(r, (basis.dim, 2)).copy()
    for site in range(basis.n_sites, 0, -1):
        bit = (configs >> (site - 1)) & 1
        up_branch = vecs @ a_up.T
        down_branch = vecs @ a_down.T
        vecs = np.where((bit == 0)[:, None], up_branch, down_branch)
    amps = vecs @ l.conj()
    norm = np.linalg.norm(amps)
    if norm < 1e-12:
        raise ValueError("boundary vectors annihilate the chain; zero norm")
    return PureState(basis, amps / norm)


def blockaded_pattern_state(basis: SpinBasis, name: str) -> PureState:
    """Computational pattern states on the constrained basis: 'vacuum' (all
    down), 'z2' (up on even sites), 'z4' (up on every fourth site)."""
    if basis.kind is not BasisKind.PXP:
        raise ValueError("pattern states are defined on the blockade-constrained basis")
    n = basis.n_sites
    if name == "vacuum":
        up_sites = set()
    elif name == "z2":
        up_sites = {j for j in range(1, n + 1) if j % 2 == 0}
    elif name == "z4":
        up_sites = {j for j in range(1, n + 1) if j % 4 == 0}
    else:
        raise ValueError(f"unknown pattern {name!r}")
    config = 0
    for j in range(1, n + 1):
        if j not in up_sites:
            config |= 1 << (j - 1)
    amps = np.zeros(basis.dim)
    amps[basis.index_of(config)] = 1.0
    return PureState(basis, amps)


def product_energy_density(p: MFIMParams, theta: float, phi: float) -> float:
    """Bulk energy per site of the uniform Bloch state under the mixed-field
    Ising chain: j_zz cos^2(theta) + h_x sin(theta) cos(phi) + h_z cos(theta)."""
    return (p.j_zz * np.cos(theta) ** 2
            + p.h_x * np.sin(theta) * np.cos(phi)
            + p.h_z * np.cos(theta))


def iso_energy_contour(p: MFIMParams, e_target: float,
                       theta_grid: Sequence[float]) -> List[Tuple[float, float]]:
    """Points (theta, phi) of the per-site energy surface at the target energy.

    For each theta with a solution, phi in [0, pi] is found by bracketed root
    finding to 1e-10; thetas without a solution are skipped.
    """
    points = []
    scale = max(abs(p.j_zz), abs(p.h_x), abs(p.h_z), 1.0)
    for theta in theta_grid:
        amp = p.h_x * np.sin(theta)
        base = p.j_zz * np.cos(theta) ** 2 + p.h_z * np.cos(theta)
        if abs(amp) < 1e-14:
            if abs(base - e_target) <= 1e-10 * scale:
                points.append((float(theta), 0.0))
            continue
        g = lambda phi: product_energy_density(p, theta, phi) - e_target
        g0, gpi = g(0.0), g(np.pi)
        if abs(g0) <= 1e-10 * scale:
            points.append((float(theta), 0.0))
            continue
        if abs(gpi) <= 1e-10 * scale:
            points.append((float(theta), float(np.pi)))
            continue
        if g0 * gpi > 0:
            continue
        phi = scipy.optimize.brentq(g, 0.0, np.pi, xtol=1e-12, rtol=8.9e-16)
        points.append((float(theta), float(phi)))
    if not points:
        raise ValueError(f"energy contour at {e_target} is empty over the given thetas")
    return points


def entangler_eigensystem(basis: SpinBasis, seed: int):
    """Diagonalized random two-site generator chain, reusable across states
    and durations for one seed."""
    gen = random_two_site_generator(basis, seed)
    return np.linalg.eigh(gen.matrix)


def entangle_with(state: PureState, dt: float, evals: np.ndarray,
                  evecs: np.ndarray) -> PureState:
    """Evolve a state for time dt in the eigenbasis of a prepared generator."""
    if dt < 0:
        raise ValueError("entangling duration must be nonnegative")
    if dt == 0:
        return PureState(state.basis, state.amplitudes.copy())
    coeffs = evecs.conj().T @ state.amplitudes
    return PureState(state.basis, evecs @ (coeffs * np.exp(-1j * evals * dt)))


def entangle_randomly(state: PureState, dt: float, seed: int) -> PureState:
    """Evolve for time dt under a chain of independent random two-site
    Hermitian generators; dt = 0 returns the input unchanged."""
    return entangle_family(state, [dt], seed)[0]


def entangle_family(state: PureState, dts: Sequence[float], seed: int) -> List[PureState]:
    """entangle_randomly for several durations sharing one generator draw and
    one diagonalization."""
    if state.basis.kind is not BasisKind.FULL:
        raise ValueError("random entangling acts on full-basis states")
    evals, evecs = entangler_eigensystem(state.basis, seed)
    return [entangle_with(state, dt, evals, evecs) for dt in dts]
