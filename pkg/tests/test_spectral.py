import numpy as np
import pytest

from qme.hilbert import BasisKind, build_basis
from qme.models import (
    HermitianOperator,
    KickedIsingParams,
    MFIMParams,
    UnitaryOperator,
    build_kicked_ising,
    build_mfim,
)
from qme.spectral import (
    EigenSystem,
    cache_get,
    cache_put,
    effective_beta,
    eig_hermitian,
    eig_hermitian_cached,
    eig_unitary,
    r_statistic,
    source_hash,
    thermal_mean_energy,
)

POISSON_R = 2 * np.log(2) - 1  # 0.3863
GOE_R = 0.5307


def _toy_hermitian(matrix):
    basis = build_basis(2, BasisKind.FULL)
    m = np.asarray(matrix, dtype=np.float64)
    return HermitianOperator(basis, m, {"model": "toy", "bytes": m.tobytes().hex()})


def test_eigh_diagonal_permutation():
    eigs = eig_hermitian(_toy_hermitian(np.diag([3.0, 1.0, 2.0, 0.0])))
    assert np.allclose(eigs.values, [0.0, 1.0, 2.0, 3.0])
    # columns are permutation vectors
    assert np.allclose(np.abs(eigs.vectors), np.eye(4)[:, [3, 1, 2, 0]])


def test_eigh_sigma_x():
    m = np.zeros((4, 4))
    m[:2, :2] = [[0, 1], [1, 0]]
    eigs = eig_hermitian(_toy_hermitian(m))
    assert np.allclose(eigs.values, [-1.0, 0.0, 0.0, 1.0])
    vec_minus = eigs.vectors[:2, 0]
    vec_plus = eigs.vectors[:2, 3]
    assert np.allclose(np.abs(vec_minus), [1 / np.sqrt(2)] * 2, atol=1e-12)
    assert np.allclose(np.abs(vec_plus), [1 / np.sqrt(2)] * 2, atol=1e-12)
    # the two vectors differ by the relative sign of the components
    assert vec_minus[0] * vec_minus[1] < 0
    assert vec_plus[0] * vec_plus[1] > 0


def test_eigh_rejects_non_hermitian():
    basis = build_basis(2, BasisKind.FULL)
    m = np.arange(16.0).reshape(4, 4)
    with pytest.raises(ValueError):
        eig_hermitian(HermitianOperator(basis, m, {}))


def test_eigh_trace_identity_and_residuals():
    basis = build_basis(10, BasisKind.FULL)
    op = build_mfim(basis, MFIMParams())
    eigs = eig_hermitian(op)
    trace = float(np.trace(op.matrix))
    scale = max(1.0, abs(trace))
    assert abs(eigs.values.sum() - trace) < 1e-8 * scale
    norm2 = np.max(np.abs(eigs.values))
    residual = np.max(np.linalg.norm(op.matrix @ eigs.vectors - eigs.vectors * eigs.values, axis=0))
    assert residual < 1e-9 * norm2
    gram = eigs.vectors.conj().T @ eigs.vectors
    assert np.max(np.abs(gram - np.eye(eigs.dim))) < 1e-10


def test_eigh_reconstruction():
    rng = np.random.default_rng(2)
    m = rng.standard_normal((200, 200))
    m = (m + m.T) / 2
    basis = build_basis(2, BasisKind.FULL)
    eigs = eig_hermitian(HermitianOperator(basis, m, {}))
    recon = (eigs.vectors * eigs.values) @ eigs.vectors.conj().T
    assert np.max(np.abs(recon - m)) < 1e-8 * np.max(np.abs(m))


def _toy_unitary(matrix):
    basis = build_basis(2, BasisKind.FULL)
    return UnitaryOperator(basis, np.asarray(matrix, dtype=complex), {})


def test_eig_unitary_identity_and_phases():
    eigs = eig_unitary(_toy_unitary(np.eye(4)))
    assert np.allclose(eigs.values, 0.0)
    m = np.diag([np.exp(1j * np.pi / 3), np.exp(-1j * np.pi / 3), 1.0, 1.0])
    eigs = eig_unitary(_toy_unitary(m))
    assert eigs.values[0] == pytest.approx(-np.pi / 3, abs=1e-12)
    assert eigs.values[-1] == pytest.approx(np.pi / 3, abs=1e-12)


def test_eig_unitary_rejects_non_unitary():
    with pytest.raises(ValueError):
        eig_unitary(_toy_unitary(np.diag([2.0, 1.0, 1.0, 1.0])))


def test_eig_unitary_kicked_ising_determinant():
    basis = build_basis(8, BasisKind.FULL)
    op = build_kicked_ising(basis, KickedIsingParams())
    eigs = eig_unitary(op)
    det = np.linalg.det(op.matrix)
    assert abs(abs(det) - 1.0) < 1e-9
    phase_sum = np.exp(1j * eigs.values.sum())
    det_phase = det / abs(det)
    assert abs(phase_sum - det_phase) < 1e-8
    residual = np.max(np.linalg.norm(
        op.matrix @ eigs.vectors - eigs.vectors * np.exp(1j * eigs.values), axis=0))
    assert residual < 1e-9


def test_r_statistic_equally_spaced_is_one():
    assert r_statistic(np.arange(200.0)) == pytest.approx(1.0, abs=1e-12)


def test_r_statistic_poisson_reference():
    rng = np.random.default_rng(10)
    vals = rng.uniform(0, 1, 100_000)
    assert r_statistic(vals) == pytest.approx(POISSON_R, abs=0.01)


def test_r_statistic_goe_reference():
    rng = np.random.default_rng(20)
    rs = []
    for _ in range(8):
        a = rng.standard_normal((1000, 1000))
        rs.append(r_statistic(np.linalg.eigvalsh((a + a.T) / np.sqrt(2))))
    assert np.mean(rs) == pytest.approx(GOE_R, abs=0.01)


def test_r_statistic_affine_invariance_and_size_check():
    rng = np.random.default_rng(30)
    vals = np.sort(rng.uniform(0, 1, 500))
    assert r_statistic(3.7 * vals + 11.0) == pytest.approx(r_statistic(vals), abs=1e-12)
    with pytest.raises(ValueError):
        r_statistic(np.arange(50.0))


def test_effective_beta_at_mean_is_zero():
    vals = np.array([-2.0, -1.0, 0.5, 2.5])
    assert effective_beta(vals, float(vals.mean())) == 0.0


def test_effective_beta_two_level_closed_form():
    vals = np.array([-1.0, 1.0])
    beta = effective_beta(vals, -np.tanh(1.0))
    assert beta == pytest.approx(1.0, abs=1e-10)
    assert thermal_mean_energy(vals, 1.0) == pytest.approx(-np.tanh(1.0), abs=1e-14)


def test_effective_beta_monotone_and_edge_behavior():
    rng = np.random.default_rng(4)
    vals = np.sort(rng.standard_normal(200))
    span = vals[-1] - vals[0]
    energies = np.linspace(vals[0] + 0.05 * span, vals[-1] - 0.05 * span, 7)
    betas = [effective_beta(vals, e) for e in energies]
    assert all(b1 > b2 for b1, b2 in zip(betas, betas[1:]))
    assert effective_beta(vals, vals[0] + 1e-3 * span) > 2.0
    with pytest.raises(ValueError):
        effective_beta(vals, vals[0] - 1.0)
    with pytest.raises(ValueError):
        effective_beta(vals, vals[-1])


def test_cache_round_trip_bit_exact(tmp_path):
    basis = build_basis(6, BasisKind.FULL)
    op = build_mfim(basis, MFIMParams())
    eigs = eig_hermitian(op)
    cache_put(eigs, cache_dir=tmp_path)
    loaded = cache_get(eigs.source_hash, cache_dir=tmp_path)
    assert loaded is not None
    assert loaded.values.tobytes() == eigs.values.tobytes()
    assert loaded.vectors.tobytes() == eigs.vectors.tobytes()
    assert loaded.kind == "hermitian"


def test_cache_round_trip_unitary(tmp_path):
    basis = build_basis(5, BasisKind.FULL)
    op = build_kicked_ising(basis, KickedIsingParams())
    eigs = eig_unitary(op)
    cache_put(eigs, cache_dir=tmp_path)
    loaded = cache_get(eigs.source_hash, cache_dir=tmp_path)
    assert loaded.kind == "unitary"
    assert loaded.vectors.tobytes() == eigs.vectors.tobytes()


def test_cache_miss_on_empty_and_corruption(tmp_path):
    assert cache_get("deadbeef", cache_dir=tmp_path) is None
    basis = build_basis(4, BasisKind.FULL)
    eigs = eig_hermitian(build_mfim(basis, MFIMParams()))
    path = cache_put(eigs, cache_dir=tmp_path)
    raw = bytearray(path.read_bytes())
    raw[len(raw) // 2] ^= 0xFF
    path.write_bytes(bytes(raw))
    assert cache_get(eigs.source_hash, cache_dir=tmp_path) is None
    path.write_bytes(b"OLDFMT\n" + bytes(raw))
    assert cache_get(eigs.source_hash, cache_dir=tmp_path) is None


def test_cache_through_wrapper(tmp_path):
    basis = build_basis(6, BasisKind.FULL)
    op = build_mfim(basis, MFIMParams())
    first = eig_hermitian_cached(op, cache_dir=tmp_path)
    second = eig_hermitian_cached(op, cache_dir=tmp_path)
    assert first.values.tobytes() == second.values.tobytes()
    assert len(list(tmp_path.glob("*.eig"))) == 1


def test_source_hash_sensitive_to_single_ulp():
    basis = build_basis(4, BasisKind.FULL)
    hashes = set()
    h_x = MFIMParams().h_x
    for bump in range(6):
        p = MFIMParams(h_x=h_x)
        hashes.add(source_hash(build_mfim(basis, p)))
        h_x = np.nextafter(h_x, 2.0)
    assert len(hashes) == 6


def test_source_hash_distinct_across_param_grid():
    basis = build_basis(4, BasisKind.FULL)
    hashes = set()
    count = 0
    for j in (0.9, 1.0, 1.1):
        for hx in (0.3, 0.6):
            for hz in (0.2, 0.4):
                op = build_mfim(basis, MFIMParams(j_zz=j, h_x=hx, h_z=hz))
                hashes.add(source_hash(op))
                count += 1
    assert len(hashes) == count


def test_cache_requires_source_hash(tmp_path):
    eigs = EigenSystem(np.array([0.0]), np.eye(1), source_hash=None)
    with pytest.raises(ValueError):
        cache_put(eigs, cache_dir=tmp_path)
