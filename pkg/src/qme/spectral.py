"""Eigensystems of Hermitian and unitary operators, level statistics, the
thermal-energy inversion, and a checksummed on-disk eigensystem cache.
"""

from __future__ import annotations

import hashlib
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import scipy.linalg

from .models import HermitianOperator, UnitaryOperator

CACHE_ENV_VAR = "QME_CACHE_DIR"
_MAGIC = b"QMEEIG1\n"


class NumericalError(RuntimeError):
    """Eigensolver failed to converge or produced out-of-contract residuals."""


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues ascending (eigenphases in (-pi, pi] for unitaries) plus the
    orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray
    source_hash: Optional[str] = None
    kind: str = "hermitian"

    @property
    def dim(self) -> int:
        return len(self.values)


def source_hash(op: Union[HermitianOperator, UnitaryOperator]) -> str:
    """Content hash of an operator: canonicalized provenance when present
    (exact to the last float bit), otherwise the raw matrix bytes."""
    sha = hashlib.sha256()
    sha.update(repr(op.matrix.shape).encode())
    if op.provenance:
        for key in sorted(op.provenance):
            val = op.provenance[key]
            if isinstance(val, (float, np.floating)):
                token = float(val).hex()
            elif isinstance(val, (int, np.integer, str, bool)):
                token = repr(val)
            else:
                token = repr(val)
            sha.update(f"{key}={token};".encode())
    else:
        sha.update(np.ascontiguousarray(op.matrix).tobytes())
    return sha.hexdigest()


def eig_hermitian(op: HermitianOperator) -> EigenSystem:
    """Full dense eigendecomposition, eigenvalues ascending."""
    h = op.matrix
    if np.max(np.abs(h - h.conj().T)) > 1e-10:
        raise ValueError("operator is not Hermitian within 1e-10")
    try:
        values, vectors = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"hermitian eigensolver failed: {exc}") from exc
    return EigenSystem(values, vectors, source_hash=source_hash(op), kind="hermitian")


def eig_unitary(op: UnitaryOperator) -> EigenSystem:
    """Eigenphases and eigenvectors of a unitary via the complex Schur form
    (diagonal for normal matrices), phases sorted ascending in (-pi, pi]."""
    u = op.matrix
    d = u.shape[0]
    if np.max(np.abs(u.conj().T @ u - np.eye(d))) > 1e-10:
        raise ValueError("operator is not unitary within 1e-10")
    try:
        t, q = scipy.linalg.schur(u.astype(np.complex128), output="complex")
    except Exception as exc:
        raise NumericalError(f"unitary eigensolver failed: {exc}") from exc
    phases = np.angle(np.diag(t))
    order = np.argsort(phases, kind="stable")
    phases = phases[order]
    vectors = q[:, order]
    residual = np.max(np.linalg.norm(u @ vectors - vectors * np.exp(1j * phases), axis=0))
    if residual > 1e-9:
        raise NumericalError(f"unitary eigenvector residual {residual:.2e} exceeds 1e-9")
    return EigenSystem(phases, vectors, source_hash=source_hash(op), kind="unitary")


def r_statistic(values: np.ndarray, window: float = 0.6) -> float:
    """Mean adjacent-gap ratio <min(s_n, s_n+1)/max(s_n, s_n+1)> over the
    central fraction of the spectrum; degenerate levels are merged first."""
    vals = np.sort(np.asarray(values, dtype=np.float64))
    if len(vals) < 100:
        raise ValueError(f"need at least 100 levels, got {len(vals)}")
    span = vals[-1] - vals[0]
    gaps = np.diff(vals)
    keep = np.concatenate(([True], gaps > 1e-12 * span))
    vals = vals[keep]
    m = len(vals)
    lo = int(np.floor(m * (1 - window) / 2))
    vals = vals[lo:m - lo]
    s = np.diff(vals)
    r = np.minimum(s[:-1], s[1:]) / np.maximum(s[:-1], s[1:])
    return float(np.mean(r))


def thermal_mean_energy(values: np.ndarray, beta: float) -> float:
    """Gibbs mean sum E_n exp(-beta E_n) / sum exp(-beta E_n), overflow-safe."""
    vals = np.asarray(values, dtype=np.float64)
    ref = vals.min() if beta >= 0 else vals.max()
    w = np.exp(-beta * (vals - ref))
    return float(np.sum(vals * w) / np.sum(w))


def effective_beta(eigs_or_values, energy: float, *, residual_tol: float = 1e-8,
                   beta_tol: float = 1e-12, max_bracket: float = 1e6) -> float:
    """Invert the Gibbs mean-energy curve: the inverse temperature at which the
    thermal ensemble over the given spectrum has the requested mean energy.

    The map beta -> <E>_beta is strictly decreasing, so plain bisection works;
    energy at the spectral mean returns exactly 0.
    """
    values = getattr(eigs_or_values, "values", eigs_or_values)
    vals = np.asarray(values, dtype=np.float64)
    span = vals.max() - vals.min()
    if not (vals.min() < energy < vals.max()):
        raise ValueError(
            f"energy {energy} outside the open spectral interval ({vals.min()}, {vals.max()})"
        )
    mean = float(vals.mean())
    if abs(energy - mean) <= 1e-14 * max(span, 1.0):
        return 0.0
    lo, hi = (0.0, 1.0) if energy < mean else (-1.0, 0.0)
    # expand until the bracket straddles the target
    while thermal_mean_energy(vals, hi) > energy:
        hi *= 2
        if hi > max_bracket:
            raise ValueError("energy too close to the spectral edge to invert")
    while thermal_mean_energy(vals, lo) < energy:
        lo *= 2
        if lo < -max_bracket:
            raise ValueError("energy too close to the spectral edge to invert")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if thermal_mean_energy(vals, mid) > energy:
            lo = mid
        else:
            hi = mid
        if hi - lo < beta_tol * max(1.0, abs(mid)):
            break
    beta = 0.5 * (lo + hi)
    if abs(thermal_mean_energy(vals, beta) - energy) > residual_tol * span:
        raise NumericalError("bisection failed to reach the requested energy residual")
    return beta


def _resolve_cache_dir(cache_dir=None) -> Path:
    if cache_dir is not None:
        return Path(cache_dir)
    env = os.environ.get(CACHE_ENV_VAR)
    return Path(env) if env else Path(".qme_cache")


def _cache_path(source: str, cache_dir=None) -> Path:
    return _resolve_cache_dir(cache_dir) / f"{source}.eig"


def cache_put(eigs: EigenSystem, cache_dir=None) -> Path:
    """Serialize an eigensystem under its source hash; atomic last-writer-wins."""
    if not eigs.source_hash:
        raise ValueError("eigensystem has no source hash; cannot cache")
    directory = _resolve_cache_dir(cache_dir)
    directory.mkdir(parents=True, exist_ok=True)
    values = np.ascontiguousarray(eigs.values, dtype="<f8")
    vectors = np.ascontiguousarray(eigs.vectors)
    dtag = {"float64": b"f8", "complex128": b"c16"}.get(vectors.dtype.name)
    if dtag is None:
        raise ValueError(f"unsupported vector dtype {vectors.dtype}")
    header = _MAGIC + b"<" + (b"U" if eigs.kind == "unitary" else b"H") + dtag.ljust(4)
    header += struct.pack("<QQ", vectors.shape[0], vectors.shape[1])
    payload = header + values.tobytes() + vectors.tobytes()
    digest = hashlib.sha256(payload).digest()
    path = _cache_path(eigs.source_hash, cache_dir)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
            fh.write(digest)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def cache_get(source: str, cache_dir=None) -> Optional[EigenSystem]:
    """Load a cached eigensystem; any format/version/checksum problem is a miss."""
    path = _cache_path(source, cache_dir)
    try:
        raw = path.read_bytes()
    except OSError:
        return None
    header_len = len(_MAGIC) + 1 + 1 + 4 + 16
    if len(raw) < header_len + 32 or not raw.startswith(_MAGIC):
        return None
    payload, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(payload).digest() != digest:
        return None
    off = len(_MAGIC)
    endian = payload[off:off + 1]
    kind = payload[off + 1:off + 2]
    dtag = payload[off + 2:off + 6].rstrip()
    rows, cols = struct.unpack("<QQ", payload[off + 6:off + 22])
    if endian != b"<" or kind not in (b"H", b"U"):
        return None
    dtype = {b"f8": np.dtype("<f8"), b"c16": np.dtype("<c16")}.get(dtag)
    if dtype is None:
        return None
    body = payload[header_len:]
    nval = rows * 8
    nvec = rows * cols * dtype.itemsize
    if len(body) != nval + nvec:
        return None
    values = np.frombuffer(body[:nval], dtype="<f8").copy()
    vectors = np.frombuffer(body[nval:], dtype=dtype).reshape(rows, cols).copy()
    return EigenSystem(values, vectors, source_hash=source,
                       kind="unitary" if kind == b"U" else "hermitian")


def eig_hermitian_cached(op: HermitianOperator, cache_dir=None) -> EigenSystem:
    """Cache-through wrapper around eig_hermitian."""
    key = source_hash(op)
    hit = cache_get(key, cache_dir)
    if hit is not None:
        return hit
    eigs = eig_hermitian(op)
    cache_put(eigs, cache_dir)
    return eigs


def eig_unitary_cached(op: UnitaryOperator, cache_dir=None) -> EigenSystem:
    """Cache-through wrapper around eig_unitary."""
    key = source_hash(op)
    hit = cache_get(key, cache_dir)
    if hit is not None:
        return hit
    eigs = eig_unitary(op)
    cache_put(eigs, cache_dir)
    return eigs
