import numpy as np
import pytest
import scipy.linalg

from qme.dynamics import (
    diagonal_ensemble,
    evolve,
    evolve_all,
    make_quench,
    reduced_densities,
    time_grid,
)
from qme.hilbert import BasisKind, PureState, build_basis, half_chain, pure_partial_trace
from qme.models import (
    KickedIsingParams,
    MFIMParams,
    RandomModelParams,
    build_kicked_ising,
    build_mfim,
    build_random_model,
)
from qme.spectral import eig_hermitian, eig_unitary
from qme.states import uniform_product_state

from oracles import offdiagonal_distance_loops


@pytest.fixture(scope="module")
def mfim6():
    basis = build_basis(6, BasisKind.FULL)
    op = build_mfim(basis, MFIMParams())
    return basis, op, eig_hermitian(op)


def test_time_grid():
    t = time_grid(20.0, 0.05)
    assert len(t) == 401
    assert t[0] == 0.0 and t[-1] == pytest.approx(20.0)


def test_evolve_at_zero_is_identity(mfim6):
    basis, _, eigs = mfim6
    state = uniform_product_state(basis, 0.9, 0.7)
    setup = make_quench(eigs, state, time_grid(10.0, 0.1))
    out = evolve(setup, 0.0)
    assert np.allclose(out.amplitudes, state.amplitudes, atol=1e-12)


def test_eigenstate_is_stationary(mfim6):
    basis, _, eigs = mfim6
    state = PureState(basis, eigs.vectors[:, 12].astype(complex))
    setup = make_quench(eigs, state, time_grid(10.0, 0.5))
    for t in (1.0, 4.5, 10.0):
        overlap = abs(np.vdot(state.amplitudes, evolve(setup, t).amplitudes))
        assert overlap == pytest.approx(1.0, abs=1e-12)


def test_evolution_matches_expm_oracle(mfim6):
    basis, op, eigs = mfim6
    rng = np.random.default_rng(8)
    state = uniform_product_state(basis, float(rng.uniform(0.2, 2.9)), float(rng.uniform(0, 6)))
    setup = make_quench(eigs, state, time_grid(5.0, 0.1))
    t = 1.7
    propagator = scipy.linalg.expm(-1j * op.matrix * t)
    expected = propagator @ state.amplitudes
    assert np.max(np.abs(evolve(setup, t).amplitudes - expected)) < 1e-8


def test_norm_and_energy_conserved_along_grid(mfim6):
    basis, op, eigs = mfim6
    state = uniform_product_state(basis, 1.3, 0.4)
    setup = make_quench(eigs, state, time_grid(20.0, 2.0))
    cols = evolve_all(setup)
    norms = np.linalg.norm(cols, axis=0)
    assert np.max(np.abs(norms - 1)) < 1e-10
    energies = np.real(np.sum(cols.conj() * (op.matrix @ cols), axis=0))
    scale = max(1.0, abs(energies[0]))
    assert np.max(np.abs(energies - energies[0])) < 1e-9 * scale


def test_evolve_outside_grid_rejected(mfim6):
    basis, _, eigs = mfim6
    state = uniform_product_state(basis, 1.0, 0.0)
    setup = make_quench(eigs, state, time_grid(5.0, 0.5))
    with pytest.raises(ValueError):
        evolve(setup, 6.0)


def test_floquet_evolution_is_repeated_application():
    n = 6
    basis = build_basis(n, BasisKind.FULL)
    op = build_kicked_ising(basis, KickedIsingParams())
    eigs = eig_unitary(op)
    state = uniform_product_state(basis, 0.8, 0.3)
    setup = make_quench(eigs, state, np.arange(0, 9, dtype=float))
    psi = state.amplitudes.copy()
    for k in range(9):
        out = evolve(setup, float(k))
        assert np.max(np.abs(out.amplitudes - psi)) < 1e-8
        psi = op.matrix @ psi
    with pytest.raises(ValueError):
        evolve(setup, 2.5)
    with pytest.raises(ValueError):
        make_quench(eigs, state, np.array([0.0, 1.5, 3.0]))


def test_quench_validation(mfim6):
    basis, _, eigs = mfim6
    state = uniform_product_state(basis, 1.0, 0.0)
    with pytest.raises(ValueError):
        make_quench(eigs, state, np.array([0.0, 0.0, 1.0]))
    bad = PureState(basis, state.amplitudes * 1.5)
    with pytest.raises(ValueError):
        make_quench(eigs, bad, time_grid(1.0, 0.5))


def test_diagonal_ensemble_eigenstate_and_constant_distance(mfim6):
    basis, _, eigs = mfim6
    bp = half_chain(6)
    state = PureState(basis, eigs.vectors[:, 20].astype(complex))
    setup = make_quench(eigs, state, time_grid(8.0, 1.0))
    de = diagonal_ensemble(setup, bp)
    direct = pure_partial_trace(state, bp)
    assert np.max(np.abs(de.rho_a - direct)) < 1e-10
    from qme.diagnostics import trace_distance
    dists = [trace_distance(rho, de.rho_a) for _, rho in reduced_densities(setup, bp)]
    assert np.max(np.abs(np.array(dists) - dists[0])) < 1e-10


def test_diagonal_ensemble_uniform_weights_is_maximally_mixed(mfim6):
    basis, _, eigs = mfim6
    bp = half_chain(6)
    d = eigs.dim
    psi = eigs.vectors @ np.full(d, d**-0.5, dtype=complex)
    setup = make_quench(eigs, PureState(basis, psi), time_grid(1.0, 0.5))
    de = diagonal_ensemble(setup, bp)
    assert np.allclose(de.rho_a, np.eye(bp.d_a) / bp.d_a, atol=1e-10)
    assert de.weights.sum() == pytest.approx(1.0, abs=1e-10)
    assert np.all(de.weights >= 0)


def test_diagonal_ensemble_psd_trace_one(mfim6):
    basis, _, eigs = mfim6
    bp = half_chain(6)
    state = uniform_product_state(basis, 1.1, 0.5)
    setup = make_quench(eigs, state, time_grid(1.0, 0.5))
    rho = diagonal_ensemble(setup, bp).rho_a
    assert np.max(np.abs(rho - rho.conj().T)) < 1e-12
    assert np.linalg.eigvalsh(rho).min() > -1e-12
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)


def test_long_time_average_dephases_to_diagonal_ensemble():
    # needs a realization with nondegenerate gaps: a strong uniform coupling
    # (j_h = -4) leaves quasi-degenerate multiplets at this size whose pair
    # frequencies do not dephase by T = 1e3
    n = 8
    basis = build_basis(n, BasisKind.FULL)
    op = build_random_model(basis, RandomModelParams(seed=4, w=4.0, j_h=0.0))
    eigs = eig_hermitian(op)
    from qme.states import random_angle_state
    state = random_angle_state(basis, 1.0, seed=504)
    bp = half_chain(n)
    times = np.arange(0.0, 1000.0 + 0.02, 0.04)  # spacing well below 2 pi / span
    setup = make_quench(eigs, state, times)
    de = diagonal_ensemble(setup, bp)
    avg = np.zeros((bp.d_a, bp.d_a), dtype=complex)
    for _, rho in reduced_densities(setup, bp):
        avg += rho
    avg /= len(times)
    from qme.diagnostics import trace_distance
    assert trace_distance(avg, de.rho_a) < 1e-3


def test_trace_distance_equals_offdiagonal_sum_oracle():
    n = 5
    basis = build_basis(n, BasisKind.FULL)
    op = build_mfim(basis, MFIMParams())
    eigs = eig_hermitian(op)
    state = uniform_product_state(basis, 1.2, 0.8)
    bp = half_chain(n)
    setup = make_quench(eigs, state, time_grid(6.0, 3.0))
    de = diagonal_ensemble(setup, bp)
    from qme.diagnostics import trace_distance
    for t in (0.0, 3.0, 6.0):
        rho_t = pure_partial_trace(evolve(setup, t), bp)
        direct = trace_distance(rho_t, de.rho_a)
        oracle = offdiagonal_distance_loops(
            eigs.values, eigs.vectors, setup.overlaps, t, n, bp.a_start, bp.n_a)
        assert direct == pytest.approx(oracle, abs=1e-10)


def test_reduced_densities_chunking_consistency(mfim6):
    basis, _, eigs = mfim6
    state = uniform_product_state(basis, 0.5, 1.5)
    bp = half_chain(6)
    setup = make_quench(eigs, state, time_grid(3.0, 0.5))
    big = list(reduced_densities(setup, bp))
    small = list(reduced_densities(setup, bp, chunk_bytes=2048))
    assert len(big) == len(small)
    for (ta, ra), (tb, rb) in zip(big, small):
        assert ta == tb
        assert np.allclose(ra, rb, atol=1e-13)
