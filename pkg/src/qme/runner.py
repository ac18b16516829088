"""Scenario execution: config validation, seeded multi-realization pipelines,
parallel workers, and CSV/JSON artifact emission.
"""

from __future__ import annotations

import concurrent.futures
import copy
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .diagnostics import (
    OverlapSpectrum,
    default_broadening,
    energy_moments,
    entanglement_asymmetry,
    frobenius_distance,
    ipr,
    overlap_spectral_function,
    relative_entropy,
    trace_distance,
    von_neumann_entropy,
)
from .dynamics import diagonal_ensemble, make_quench, reduced_densities, time_grid
from .hilbert import (
    BasisKind,
    Bipartition,
    DimensionCapError,
    build_basis,
    centered_block,
    half_chain,
    project_state,
    pure_partial_trace,
)
from .models import (
    KickedIsingParams,
    MFIMParams,
    RandomModelParams,
    XXZNNNParams,
    build_kicked_ising,
    build_mfim,
    build_pxp,
    build_random_model,
    build_xxz_nnn,
)
from .spectral import (
    NumericalError,
    effective_beta,
    eig_hermitian_cached,
    eig_unitary_cached,
)
from .states import (
    MPSStateSpec,
    blockaded_pattern_state,
    entangle_with,
    entangler_eigensystem,
    iso_energy_contour,
    mps_state,
    product_energy_density,
    product_state,
    random_angle_spec,
    tilted_fm,
    uniform_product_state,
)


class ConfigError(ValueError):
    """Configuration fails schema validation; message names the offending key."""


# substream purposes for named seeding
SEED_MODEL = 0
SEED_ANGLES = 1
SEED_ENTANGLER = 2

SERIES_DIAGNOSTICS = (
    "trace_distance",
    "frobenius_distance",
    "entanglement_entropy",
    "relative_entropy_de",
    "entanglement_asymmetry",
)
SCALAR_DIAGNOSTICS = (
    "ipr",
    "energy_mean",
    "energy_variance",
    "effective_beta",
    "trace_distance0",
    "entanglement_entropy0",
)
GRID_QUANTITIES = (
    "trace_distance0",
    "frobenius_distance0",
    "ipr",
    "log_ipr",
    "energy_variance",
    "energy_per_site",
    "effective_beta",
)

_MODEL_FIELDS = {
    "mfim": {"j_zz": 1.0, "h_x": MFIMParams().h_x, "h_z": MFIMParams().h_z,
             "boundary_dh1": 0.25, "boundary_dhN": -0.25},
    "random": {"w": 1.0, "j_h": -4.0},
    "pxp": {"omega": 1.0},
    "xxz_nnn": {"j1": 1.0, "j2": 1.0, "delta1": 0.5, "delta2": 0.5},
    "kicked_ising": {"j_zz": 1.0, "h_x": KickedIsingParams().h_x,
                     "h_z": KickedIsingParams().h_z, "t1": 0.5, "t2": 0.5},
}

_STATE_FIELDS = {
    "product": {"theta": None, "phi": 0.0},
    "tilted_fm": {"axis": None, "theta": None},
    "random_angles": {"f": None},
    "mps": {"theta": None},
    "pxp_z2": {},
    "pxp_z4": {},
    "pxp_vacuum": {},
    "entangled": {"axis": "y", "theta": None, "dt": None},
    "iso_contour": {"count": 5, "e_target": "auto",
                    "theta_min": 0.15, "theta_max": float(np.pi) - 0.15},
}


def _reject_unknown(table: dict, allowed, where: str):
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in [{where}]")


def _need(table: dict, key: str, where: str):
    if key not in table or table[key] is None:
        raise ConfigError(f"missing required key '{key}' in [{where}]")
    return table[key]


def _as_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{path}' must be a number, got {value!r}")
    return float(value)


def validate_config(raw: dict) -> dict:
    """Normalize a raw config table: apply defaults, reject unknown keys, and
    cross-check model/basis/time-grid consistency."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a table")
    _reject_unknown(raw, ("scenario", "mode", "system", "model", "bipartition",
                          "time_grid", "states", "diagnostics", "grid", "run"), "root")
    cfg = {"scenario": str(raw.get("scenario", "custom")),
           "mode": str(raw.get("mode", "quench"))}
    if cfg["mode"] not in ("quench", "grid"):
        raise ConfigError(f"'mode' must be 'quench' or 'grid', got {cfg['mode']!r}")

    system = dict(raw.get("system") or {})
    _reject_unknown(system, ("n_sites", "basis", "dim_cap"), "system")
    n_sites = _need(system, "n_sites", "system")
    if not isinstance(n_sites, int):
        raise ConfigError("'system.n_sites' must be an integer")
    basis_name = str(system.get("basis", "full"))
    if basis_name not in ("full", "pxp", "parity+", "parity-"):
        raise ConfigError(f"'system.basis' must be full/pxp/parity+/parity-, got {basis_name!r}")
    cfg["system"] = {"n_sites": n_sites, "basis": basis_name,
                     "dim_cap": int(system.get("dim_cap", 20_000))}

    model = dict(raw.get("model") or {})
    kind = str(_need(model, "kind", "model"))
    if kind not in _MODEL_FIELDS:
        raise ConfigError(f"'model.kind' must be one of {sorted(_MODEL_FIELDS)}, got {kind!r}")
    fields = _MODEL_FIELDS[kind]
    _reject_unknown(model, ("kind",) + tuple(fields), "model")
    cfg["model"] = {"kind": kind}
    for key, default in fields.items():
        cfg["model"][key] = _as_number(model.get(key, default), f"model.{key}")

    bipart = dict(raw.get("bipartition") or {})
    _reject_unknown(bipart, ("kind", "size"), "bipartition")
    bp_kind = str(bipart.get("kind", "half"))
    if bp_kind not in ("half", "centered", "left"):
        raise ConfigError(f"'bipartition.kind' must be half/centered/left, got {bp_kind!r}")
    bp_size = bipart.get("size")
    if bp_kind in ("centered", "left"):
        if not isinstance(bp_size, int) or not 1 <= bp_size < n_sites:
            raise ConfigError("'bipartition.size' must be an integer in [1, n_sites)")
    cfg["bipartition"] = {"kind": bp_kind, "size": bp_size}

    floquet = kind == "kicked_ising"
    tg = dict(raw.get("time_grid") or {})
    _reject_unknown(tg, ("t_start", "t_max", "dt", "periods"), "time_grid")
    if cfg["mode"] == "quench":
        if floquet:
            periods = _need(tg, "periods", "time_grid")
            if not isinstance(periods, int) or periods < 1:
                raise ConfigError("'time_grid.periods' must be a positive integer")
            cfg["time_grid"] = {"periods": periods}
        else:
            t_max = _as_number(_need(tg, "t_max", "time_grid"), "time_grid.t_max")
            dt = _as_number(_need(tg, "dt", "time_grid"), "time_grid.dt")
            t_start = _as_number(tg.get("t_start", 0.0), "time_grid.t_start")
            if dt <= 0 or t_max <= t_start:
                raise ConfigError("'time_grid' must satisfy dt > 0 and t_max > t_start")
            cfg["time_grid"] = {"t_start": t_start, "t_max": t_max, "dt": dt}
    else:
        cfg["time_grid"] = {}

    states = raw.get("states") or []
    if cfg["mode"] == "quench":
        if not isinstance(states, list) or not states:
            raise ConfigError("'states' must be a non-empty list of state tables")
        cfg["states"] = [_validate_state(dict(s), i, cfg) for i, s in enumerate(states)]
    elif states:
        raise ConfigError("'states' is not allowed in grid mode")
    else:
        cfg["states"] = []

    diags = dict(raw.get("diagnostics") or {})
    _reject_unknown(diags, ("series", "scalars", "overlap_histogram", "histogram_bins",
                            "spectral_function", "omega_points", "sigma_omega",
                            "peak_prominence", "entropy_fit_window"), "diagnostics")
    series = list(diags.get("series", ["trace_distance"]))
    for name in series:
        if name not in SERIES_DIAGNOSTICS:
            raise ConfigError(f"unknown series diagnostic {name!r}; "
                              f"choose from {SERIES_DIAGNOSTICS}")
    scalars = list(diags.get("scalars", ["ipr"]))
    for name in scalars:
        if name not in SCALAR_DIAGNOSTICS:
            raise ConfigError(f"unknown scalar diagnostic {name!r}; "
                              f"choose from {SCALAR_DIAGNOSTICS}")
    sigma_omega = diags.get("sigma_omega", "auto")
    if sigma_omega != "auto":
        sigma_omega = _as_number(sigma_omega, "diagnostics.sigma_omega")
    cfg["diagnostics"] = {
        "series": series,
        "scalars": scalars,
        "overlap_histogram": bool(diags.get("overlap_histogram", False)),
        "histogram_bins": int(diags.get("histogram_bins", 60)),
        "spectral_function": bool(diags.get("spectral_function", False)),
        "omega_points": int(diags.get("omega_points", 400)),
        "sigma_omega": sigma_omega,
        "peak_prominence": _as_number(diags.get("peak_prominence", 0.005),
                                      "diagnostics.peak_prominence"),
        "entropy_fit_window": int(diags.get("entropy_fit_window", 10)),
    }

    grid = dict(raw.get("grid") or {})
    if cfg["mode"] == "grid":
        _reject_unknown(grid, ("theta_points", "phi_points", "quantities"), "grid")
        quantities = list(grid.get("quantities", ["trace_distance0", "log_ipr"]))
        for q in quantities:
            if q not in GRID_QUANTITIES:
                raise ConfigError(f"unknown grid quantity {q!r}; choose from {GRID_QUANTITIES}")
        cfg["grid"] = {"theta_points": int(grid.get("theta_points", 21)),
                       "phi_points": int(grid.get("phi_points", 21)),
                       "quantities": quantities}
        if kind != "mfim":
            raise ConfigError("grid mode requires 'model.kind' = mfim")
    elif grid:
        raise ConfigError("'grid' table is only allowed in grid mode")
    else:
        cfg["grid"] = {}

    run = dict(raw.get("run") or {})
    _reject_unknown(run, ("realizations", "master_seed", "outdir", "threads", "cache_dir"),
                    "run")
    realizations = run.get("realizations", 1)
    if not isinstance(realizations, int) or realizations < 1:
        raise ConfigError("'run.realizations' must be a positive integer")
    cfg["run"] = {
        "realizations": realizations,
        "master_seed": int(run.get("master_seed", 1234)),
        "outdir": str(run.get("outdir", "runs")),
        "threads": int(run.get("threads", 1)),
        "cache_dir": run.get("cache_dir"),
    }

    _cross_validate(cfg)
    return cfg


def _validate_state(entry: dict, index: int, cfg: dict) -> dict:
    where = f"states[{index}]"
    kind = str(_need(entry, "kind", where))
    if kind not in _STATE_FIELDS:
        raise ConfigError(f"unknown state kind {kind!r} in [{where}]; "
                          f"choose from {sorted(_STATE_FIELDS)}")
    fields = _STATE_FIELDS[kind]
    _reject_unknown(entry, ("kind", "label") + tuple(fields), where)
    out = {"kind": kind}
    for key, default in fields.items():
        value = entry.get(key, default)
        if value is None:
            raise ConfigError(f"missing required key '{key}' in [{where}]")
        if key == "axis":
            if value not in ("x", "y", "z"):
                raise ConfigError(f"'{where}.axis' must be x/y/z, got {value!r}")
            out[key] = value
        elif key == "count":
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"'{where}.count' must be a positive integer")
            out[key] = value
        elif key == "e_target" and value == "auto":
            out[key] = "auto"
        else:
            out[key] = _as_number(value, f"{where}.{key}")
    label = entry.get("label")
    if label is not None:
        label = str(label)
        if any(ch in label for ch in ",\n\r"):
            raise ConfigError(f"'{where}.label' must not contain commas or newlines")
    out["label"] = label
    return out


def _cross_validate(cfg: dict):
    kind = cfg["model"]["kind"]
    basis = cfg["system"]["basis"]
    if kind == "pxp" and basis != "pxp":
        raise ConfigError("'model.kind' pxp requires 'system.basis' = pxp")
    if kind != "pxp" and basis == "pxp":
        raise ConfigError("'system.basis' pxp requires 'model.kind' = pxp")
    if basis.startswith("parity"):
        if kind != "mfim":
            raise ConfigError("parity-sector bases are supported for 'model.kind' = mfim only")
        if cfg["model"]["boundary_dh1"] != 0.0 or cfg["model"]["boundary_dhN"] != 0.0:
            raise ConfigError("parity sectors need zero 'model.boundary_dh1'/'boundary_dhN'")
    for i, state in enumerate(cfg["states"]):
        if state["kind"].startswith("pxp_") and basis != "pxp":
            raise ConfigError(f"states[{i}] pattern state requires 'system.basis' = pxp")
        if state["kind"] == "iso_contour":
            if kind != "mfim":
                raise ConfigError(f"states[{i}] iso_contour requires 'model.kind' = mfim")
            if cfg["run"]["realizations"] > 1:
                raise ConfigError(f"states[{i}] iso_contour cannot be combined with "
                                  f"multiple realizations")
        if state["kind"] == "entangled" and basis != "full":
            raise ConfigError(f"states[{i}] entangled states require the full basis")
    if kind == "random" and basis != "full":
        raise ConfigError("'model.kind' random requires 'system.basis' = full")


def config_hash(cfg: dict) -> str:
    """Hash of the physics-determining part of a validated config (volatile
    run keys like outdir/threads/cache_dir are excluded)."""
    hashed = copy.deepcopy(cfg)
    for key in ("outdir", "threads", "cache_dir"):
        hashed.get("run", {}).pop(key, None)
    blob = json.dumps(hashed, sort_keys=True, default=repr).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def substream_seed(master_seed: int, realization: int, purpose: int) -> int:
    """Named deterministic substream: one integer per (master, realization, purpose)."""
    ss = np.random.SeedSequence((int(master_seed), int(realization), int(purpose)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _resolve_basis(cfg: dict):
    name = cfg["system"]["basis"]
    n = cfg["system"]["n_sites"]
    if name == "full":
        return build_basis(n, BasisKind.FULL)
    if name == "pxp":
        return build_basis(n, BasisKind.PXP)
    return build_basis(n, BasisKind.PARITY, parity=+1 if name.endswith("+") else -1)


def _resolve_bipartition(cfg: dict) -> Bipartition:
    n = cfg["system"]["n_sites"]
    bp = cfg["bipartition"]
    if bp["kind"] == "half":
        return half_chain(n)
    if bp["kind"] == "centered":
        return centered_block(n, bp["size"])
    return Bipartition(n, 1, bp["size"])


def _model_params(cfg: dict, realization: int):
    m = cfg["model"]
    if m["kind"] == "mfim":
        return MFIMParams(j_zz=m["j_zz"], h_x=m["h_x"], h_z=m["h_z"],
                          boundary_dh1=m["boundary_dh1"], boundary_dhN=m["boundary_dhN"])
    if m["kind"] == "random":
        seed = substream_seed(cfg["run"]["master_seed"], realization, SEED_MODEL)
        return RandomModelParams(seed=seed, w=m["w"], j_h=m["j_h"])
    if m["kind"] == "xxz_nnn":
        return XXZNNNParams(j1=m["j1"], j2=m["j2"], delta1=m["delta1"], delta2=m["delta2"])
    if m["kind"] == "kicked_ising":
        return KickedIsingParams(j_zz=m["j_zz"], h_x=m["h_x"], h_z=m["h_z"],
                                 t1=m["t1"], t2=m["t2"])
    return None  # pxp: omega handled in _build_operator


def _build_operator(cfg: dict, basis, realization: int):
    m = cfg["model"]
    cap = cfg["system"]["dim_cap"]
    params = _model_params(cfg, realization)
    try:
        if m["kind"] == "mfim":
            return build_mfim(basis, params, dim_cap=cap)
        if m["kind"] == "random":
            return build_random_model(basis, params, dim_cap=cap)
        if m["kind"] == "pxp":
            return build_pxp(basis, omega=m["omega"], dim_cap=cap)
        if m["kind"] == "xxz_nnn":
            return build_xxz_nnn(basis, params, dim_cap=cap)
        return build_kicked_ising(basis, params, dim_cap=cap)
    except DimensionCapError:
        raise
    except ValueError as exc:
        raise ConfigError(f"model/basis combination rejected: {exc}") from exc


def _eigensystem(cfg: dict, op, cache_dir):
    if cfg["model"]["kind"] == "kicked_ising":
        return eig_unitary_cached(op, cache_dir)
    return eig_hermitian_cached(op, cache_dir)


def _times(cfg: dict) -> np.ndarray:
    tg = cfg["time_grid"]
    if "periods" in tg:
        return np.arange(0, tg["periods"] + 1, dtype=np.float64)
    return time_grid(tg["t_max"], tg["dt"], tg["t_start"])


def _auto_contour_target(cfg: dict, eigs, params: MFIMParams) -> float:
    """Halfway between the per-site spectral mean and minimum, clamped into the
    reachable band of the product-state energy surface."""
    n = cfg["system"]["n_sites"]
    target = 0.5 * (float(eigs.values.mean()) + float(eigs.values.min())) / n
    thetas = np.linspace(0.01, np.pi - 0.01, 181)
    surface = [product_energy_density(params, t, p)
               for t in thetas for p in (0.0, np.pi)]
    lo, hi = min(surface), max(surface)
    margin = 0.08 * (hi - lo)
    return float(np.clip(target, lo + margin, hi - margin))


def _expand_states(cfg: dict, eigs, params) -> list:
    """Turn state tables into concrete (label, spec) plans; contour entries
    expand into several product states."""
    plans = []
    for entry in cfg["states"]:
        if entry["kind"] != "iso_contour":
            label = entry["label"] or _default_label(entry)
            plans.append({**entry, "label": label})
            continue
        e_target = entry["e_target"]
        if e_target == "auto":
            e_target = _auto_contour_target(cfg, eigs, params)
        thetas = np.linspace(entry["theta_min"], entry["theta_max"], 181)
        points = iso_energy_contour(params, e_target, thetas)
        if len(points) < entry["count"]:
            raise ConfigError(
                f"iso-energy contour at {e_target:.4f} has only {len(points)} points, "
                f"need {entry['count']}")
        picks = np.linspace(0, len(points) - 1, entry["count"]).round().astype(int)
        for k in sorted(set(picks)):
            theta, phi = points[k]
            plans.append({"kind": "product", "theta": theta, "phi": phi,
                          "label": f"iso_t{theta:.3f}", "e_target": e_target})
    labels = [p["label"] for p in plans]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"state labels must be unique, got {labels}")
    return plans


def _default_label(entry: dict) -> str:
    kind = entry["kind"]
    if kind == "product":
        return f"t{entry['theta']:g}_p{entry['phi']:g}"
    if kind == "tilted_fm":
        return f"{entry['axis']}tilt_t{entry['theta']:g}"
    if kind == "random_angles":
        return f"f{entry['f']:g}"
    if kind == "mps":
        return f"mps_t{entry['theta']:g}"
    if kind == "entangled":
        return f"ent_t{entry['theta']:g}_dt{entry['dt']:g}"
    return kind.replace("pxp_", "")


def _build_state(plan: dict, basis, full_basis, cfg: dict, realization: int,
                 entangler=None):
    kind = plan["kind"]
    if kind.startswith("pxp_"):
        return blockaded_pattern_state(basis, kind.replace("pxp_", ""))
    if kind == "product":
        state = uniform_product_state(full_basis, plan["theta"], plan["phi"])
    elif kind == "tilted_fm":
        state = tilted_fm(full_basis, plan["axis"], plan["theta"])
    elif kind == "random_angles":
        seed = substream_seed(cfg["run"]["master_seed"], realization, SEED_ANGLES)
        state = product_state(full_basis,
                              random_angle_spec(full_basis.n_sites, plan["f"], seed))
    elif kind == "mps":
        state = mps_state(full_basis, MPSStateSpec(theta=plan["theta"]))
    elif kind == "entangled":
        base = tilted_fm(full_basis, plan["axis"], plan["theta"])
        evals, evecs = entangler
        state = entangle_with(base, plan["dt"], evals, evecs)
    else:
        raise ConfigError(f"unhandled state kind {kind!r}")
    if basis is not full_basis:
        projected = project_state(state, basis)
        if abs(projected.norm() - 1.0) > 1e-10:
            raise ConfigError(
                f"state '{plan['label']}' loses norm {1 - projected.norm():.2e} when "
                f"projected into the {cfg['system']['basis']} basis")
        return projected
    return state


def _needs_diagonal_ensemble(cfg: dict) -> bool:
    wanted = set(cfg["diagnostics"]["series"]) | set(cfg["diagnostics"]["scalars"])
    return bool(wanted & {"trace_distance", "frobenius_distance", "relative_entropy_de",
                          "trace_distance0"})


def _state_job(cfg: dict, plan: dict, basis, full_basis, eigs, bipart, times,
               realization: int, entangler=None) -> dict:
    """All diagnostics for one (state, realization): the unit of parallel work."""
    state = _build_state(plan, basis, full_basis, cfg, realization, entangler)
    setup = make_quench(eigs, state, times)
    diag_cfg = cfg["diagnostics"]
    de = diagonal_ensemble(setup, bipart) if _needs_diagonal_ensemble(cfg) else None
    series = {name: np.empty(len(times)) for name in diag_cfg["series"]}
    n_a = bipart.n_a
    for k, (_, rho) in enumerate(reduced_densities(setup, bipart)):
        for name in diag_cfg["series"]:
            if name == "trace_distance":
                series[name][k] = trace_distance(rho, de.rho_a)
            elif name == "frobenius_distance":
                series[name][k] = frobenius_distance(rho, de.rho_a)
            elif name == "entanglement_entropy":
                series[name][k] = von_neumann_entropy(rho)
            elif name == "relative_entropy_de":
                series[name][k] = relative_entropy(rho, de.rho_a)
            else:
                series[name][k] = entanglement_asymmetry(rho, n_a)
    scalars = {}
    hermitian = eigs.kind == "hermitian"
    for name in diag_cfg["scalars"]:
        if name == "ipr":
            scalars[name] = ipr(setup.overlaps)
        elif name == "energy_mean" and hermitian:
            scalars[name] = energy_moments(setup.overlaps, eigs.values)[0]
        elif name == "energy_variance" and hermitian:
            scalars[name] = energy_moments(setup.overlaps, eigs.values)[1]
        elif name == "effective_beta" and hermitian:
            energy = energy_moments(setup.overlaps, eigs.values)[0]
            try:
                scalars[name] = effective_beta(eigs.values, energy)
            except ValueError:
                scalars[name] = math.nan
        elif name == "trace_distance0":
            rho0 = pure_partial_trace(_embed_if_needed(setup), bipart)
            scalars[name] = trace_distance(rho0, de.rho_a)
        elif name == "entanglement_entropy0":
            rho0 = pure_partial_trace(_embed_if_needed(setup), bipart)
            scalars[name] = von_neumann_entropy(rho0)
    out = {"series": series, "scalars": scalars}
    if diag_cfg["overlap_histogram"]:
        out["overlaps"] = (eigs.values.copy(), setup.weights)
    if diag_cfg["spectral_function"]:
        out["spectrum"] = (eigs.values.copy(), setup.weights)
    return out


def _embed_if_needed(setup):
    from .dynamics import evolve
    from .hilbert import embed_state
    state = evolve(setup, float(setup.times[0]))
    if state.basis.kind is not BasisKind.FULL:
        full = build_basis(state.basis.n_sites, BasisKind.FULL)
        return embed_state(state, full)
    return state


@dataclass
class RunRecord:
    scenario: str
    config: dict
    config_hash: str
    out_dir: Path
    times: np.ndarray = field(repr=False, default=None)
    series: dict = field(repr=False, default_factory=dict)
    scalars: dict = field(default_factory=dict)
    extras: dict = field(repr=False, default_factory=dict)
    seed_ledger: dict = field(default_factory=dict)
    wall_seconds: float = 0.0
    files: list = field(default_factory=list)


def run_scenario(config: dict, outdir: Optional[str] = None, threads: Optional[int] = None,
                 master_seed: Optional[int] = None, write: bool = True) -> RunRecord:
    """Execute one scenario config end to end and emit its artifact files."""
    cfg = validate_config(config)
    if outdir is not None:
        cfg["run"]["outdir"] = str(outdir)
    if threads is not None:
        cfg["run"]["threads"] = int(threads)
    if master_seed is not None:
        cfg["run"]["master_seed"] = int(master_seed)
    started = time.time()
    basis = _resolve_basis(cfg)
    if basis.kind is BasisKind.FULL:
        full_basis = basis
    else:
        full_basis = build_basis(basis.n_sites, BasisKind.FULL)
    bipart = _resolve_bipartition(cfg)
    record = RunRecord(
        scenario=cfg["scenario"], config=cfg, config_hash=config_hash(cfg),
        out_dir=Path(cfg["run"]["outdir"]) / cfg["scenario"] / config_hash(cfg),
    )
    cache_dir = cfg["run"]["cache_dir"]
    if cache_dir is None:
        cache_dir = Path(cfg["run"]["outdir"]) / ".eigcache"
    if cfg["mode"] == "grid":
        _run_grid(cfg, basis, bipart, cache_dir, record)
    else:
        _run_quench(cfg, basis, full_basis, bipart, cache_dir, record)
    record.wall_seconds = time.time() - started
    if write:
        _write_outputs(cfg, record)
    return record


def _run_quench(cfg, basis, full_basis, bipart, cache_dir, record):
    times = _times(cfg)
    realizations = cfg["run"]["realizations"]
    master = cfg["run"]["master_seed"]
    random_model = cfg["model"]["kind"] == "random"
    shared_op = None if random_model else _build_operator(cfg, basis, 0)
    shared_eigs = None if random_model else _eigensystem(cfg, shared_op, cache_dir)
    plans = _expand_states(cfg, shared_eigs, _model_params(cfg, 0))
    needs_entangler = any(p["kind"] == "entangled" for p in plans)

    def worker(r: int) -> dict:
        eigs = shared_eigs
        if random_model:
            eigs = _eigensystem(cfg, _build_operator(cfg, basis, r), cache_dir)
        entangler = None
        if needs_entangler:
            entangler = entangler_eigensystem(
                full_basis, substream_seed(master, r, SEED_ENTANGLER))
        return {si: _state_job(cfg, plan, basis, full_basis, eigs, bipart, times, r,
                               entangler)
                for si, plan in enumerate(plans)}

    per_real = _run_pool(worker, realizations, cfg["run"]["threads"])

    record.times = times
    labels = [p["label"] for p in plans]
    for name in cfg["diagnostics"]["series"]:
        cols = {}
        for si, label in enumerate(labels):
            stack = np.stack([per_real[r][si]["series"][name] for r in range(realizations)])
            cols[label] = _mean_se(stack)
        record.series[name] = cols
    for si, label in enumerate(labels):
        entry = {}
        for name in cfg["diagnostics"]["scalars"]:
            vals = [per_real[r][si]["scalars"].get(name) for r in range(realizations)]
            vals = [v for v in vals if v is not None]
            if vals:
                arr = np.asarray(vals, dtype=np.float64)
                entry[name] = float(arr.mean())
                if realizations > 1:
                    entry[name + "_se"] = float(arr.std(ddof=1) / np.sqrt(len(arr)))
        record.scalars[label] = entry
    if cfg["diagnostics"]["overlap_histogram"]:
        record.extras["overlap_histogram"] = _reduce_histograms(cfg, per_real, labels)
    if cfg["diagnostics"]["spectral_function"]:
        record.extras["spectral_function"] = _reduce_spectra(cfg, per_real, labels)
    record.seed_ledger = _seed_ledger(cfg, realizations, random_model, needs_entangler,
                                      any(p["kind"] == "random_angles" for p in plans))


def _run_pool(worker, realizations: int, threads: int) -> dict:
    if threads <= 1 or realizations == 1:
        return {r: worker(r) for r in range(realizations)}
    out = {}
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {pool.submit(worker, r): r for r in range(realizations)}
        for fut in concurrent.futures.as_completed(futures):
            out[futures[fut]] = fut.result()
    return out


def _mean_se(stack: np.ndarray):
    mean = stack.mean(axis=0)
    se = None
    if stack.shape[0] > 1:
        se = stack.std(axis=0, ddof=1) / np.sqrt(stack.shape[0])
    return mean, se


def _reduce_histograms(cfg, per_real, labels):
    bins = cfg["diagnostics"]["histogram_bins"]
    out = {}
    for si, label in enumerate(labels):
        pairs = [per_real[r][si]["overlaps"] for r in per_real]
        lo = min(float(v.min()) for v, _ in pairs)
        hi = max(float(v.max()) for v, _ in pairs)
        edges = np.linspace(lo, hi, bins + 1)
        stacks = np.stack([
            np.histogram(vals, bins=edges, weights=weights)[0]
            for vals, weights in pairs
        ])
        centers = 0.5 * (edges[:-1] + edges[1:])
        mean, se = _mean_se(stacks)
        out[label] = (centers, mean, se)
    return out


def _reduce_spectra(cfg, per_real, labels):
    diag_cfg = cfg["diagnostics"]
    out = {}
    for si, label in enumerate(labels):
        pairs = [per_real[r][si]["spectrum"] for r in per_real]
        curves = []
        omega = None
        for vals, weights in pairs:
            sigma = diag_cfg["sigma_omega"]
            if sigma == "auto":
                sigma = default_broadening(vals, cfg["system"]["n_sites"])
            span = float(vals.max() - vals.min())
            if omega is None:
                omega = np.linspace(-4 * sigma, span + 4 * sigma,
                                    diag_cfg["omega_points"])
            spec = OverlapSpectrum(vals, weights, sigma=sigma, e0=float(vals.min()))
            curves.append(overlap_spectral_function(spec, omega))
        mean, se = _mean_se(np.stack(curves))
        out[label] = (omega, mean, se)
    return out


def _seed_ledger(cfg, realizations, random_model, needs_entangler, random_angles):
    master = cfg["run"]["master_seed"]
    ledger = {"master_seed": master}
    per = {}
    for r in range(realizations):
        entry = {}
        if random_model:
            entry["model"] = substream_seed(master, r, SEED_MODEL)
        if random_angles:
            entry["angles"] = substream_seed(master, r, SEED_ANGLES)
        if needs_entangler:
            entry["entangler"] = substream_seed(master, r, SEED_ENTANGLER)
        if entry:
            per[str(r)] = entry
    if per:
        ledger["realizations"] = per
    return ledger


def _run_grid(cfg, basis, bipart, cache_dir, record):
    params = _model_params(cfg, 0)
    op = _build_operator(cfg, basis, 0)
    eigs = _eigensystem(cfg, op, cache_dir)
    gq = cfg["grid"]["quantities"]
    thetas = np.linspace(0.0, np.pi, cfg["grid"]["theta_points"])
    phis = np.linspace(0.0, 2 * np.pi, cfg["grid"]["phi_points"], endpoint=False)
    n = cfg["system"]["n_sites"]
    needs_de = bool(set(gq) & {"trace_distance0", "frobenius_distance0"})
    pairs = [(t, p) for t in thetas for p in phis]

    def worker(idx: int) -> dict:
        theta, phi = pairs[idx]
        state = uniform_product_state(basis, theta, phi)
        setup = make_quench(eigs, state, np.array([0.0, 1.0]))
        row = {}
        de = diagonal_ensemble(setup, bipart) if needs_de else None
        if needs_de:
            rho0 = pure_partial_trace(state, bipart)
        for q in gq:
            if q == "trace_distance0":
                row[q] = trace_distance(rho0, de.rho_a)
            elif q == "frobenius_distance0":
                row[q] = frobenius_distance(rho0, de.rho_a)
            elif q == "ipr":
                row[q] = ipr(setup.overlaps)
            elif q == "log_ipr":
                row[q] = math.log(ipr(setup.overlaps))
            elif q == "energy_variance":
                row[q] = energy_moments(setup.overlaps, eigs.values)[1]
            elif q == "energy_per_site":
                row[q] = energy_moments(setup.overlaps, eigs.values)[0] / n
            elif q == "effective_beta":
                try:
                    row[q] = effective_beta(
                        eigs.values, energy_moments(setup.overlaps, eigs.values)[0])
                except ValueError:
                    row[q] = math.nan
        return row

    rows = _run_pool(worker, len(pairs), cfg["run"]["threads"])
    record.extras = {
        "points": pairs,
        "quantities": gq,
        "rows": [rows[i] for i in range(len(pairs))],
    }
    record.seed_ledger = {"master_seed": cfg["run"]["master_seed"]}


def _fmt(x: float) -> str:
    return f"{x:.12e}"


def _write_outputs(cfg, record: RunRecord):
    out = record.out_dir
    out.mkdir(parents=True, exist_ok=True)
    if record.times is not None:
        for name, cols in record.series.items():
            path = out / f"series_{name}.csv"
            labels = list(cols)
            header = ["t"] + labels + [f"{lab}_se" for lab in labels
                                       if cols[lab][1] is not None]
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(",".join(header) + "\n")
                for k, t in enumerate(record.times):
                    row = [_fmt(t)] + [_fmt(cols[lab][0][k]) for lab in labels]
                    row += [_fmt(cols[lab][1][k]) for lab in labels
                            if cols[lab][1] is not None]
                    fh.write(",".join(row) + "\n")
            record.files.append(path)
    if record.scalars:
        path = out / "scalars.csv"
        names = sorted({k for v in record.scalars.values() for k in v})
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(["state"] + names) + "\n")
            for label, entry in record.scalars.items():
                row = [label] + [_fmt(entry[name]) if name in entry else ""
                                 for name in names]
                fh.write(",".join(row) + "\n")
        record.files.append(path)
    extra = record.extras
    if "overlap_histogram" in extra:
        for label, (centers, mean, se) in extra["overlap_histogram"].items():
            path = out / f"overlaps_{_safe(label)}.csv"
            _write_columns(path, ("energy", "weight") + (("weight_se",) if se is not None else ()),
                           (centers, mean) + ((se,) if se is not None else ()))
            record.files.append(path)
    if "spectral_function" in extra:
        for label, (omega, mean, se) in extra["spectral_function"].items():
            path = out / f"spectral_{_safe(label)}.csv"
            _write_columns(path, ("omega", "weight") + (("weight_se",) if se is not None else ()),
                           (omega, mean) + ((se,) if se is not None else ()))
            record.files.append(path)
    if "points" in extra:
        path = out / "grid.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(["theta", "phi"] + extra["quantities"]) + "\n")
            for (theta, phi), row in zip(extra["points"], extra["rows"]):
                cells = [_fmt(theta), _fmt(phi)] + [_fmt(row[q]) for q in extra["quantities"]]
                fh.write(",".join(cells) + "\n")
        record.files.append(path)
    meta = {
        "scenario": record.scenario,
        "config": record.config,
        "config_hash": record.config_hash,
        "package_version": __version__,
        "seed_ledger": record.seed_ledger,
        "wall_seconds": round(record.wall_seconds, 3),
        "scalars": record.scalars,
        "files": [p.name for p in record.files],
    }
    meta_path = out / "meta.json"
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n",
                         encoding="utf-8")
    record.files.append(meta_path)


def _safe(label: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "._-=" else "_" for ch in label)


def _write_columns(path, names, arrays):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*arrays):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def set_config_value(cfg: dict, dotted: str, value):
    """Assign into a nested config dict along a dotted path (list indices allowed)."""
    parts = dotted.split(".")
    node = cfg
    for part in parts[:-1]:
        if isinstance(node, list):
            node = node[_list_index(part, dotted, len(node))]
        elif part in node:
            node = node[part]
        else:
            raise ConfigError(f"axis '{dotted}': no key '{part}'")
    last = parts[-1]
    if isinstance(node, list):
        idx = _list_index(last, dotted, len(node))
        node[idx] = value
    elif last in node:
        node[last] = value
    else:
        raise ConfigError(f"axis '{dotted}': no key '{last}'")


def get_config_value(cfg: dict, dotted: str):
    node = cfg
    for part in dotted.split("."):
        if isinstance(node, list):
            node = node[_list_index(part, dotted, len(node))]
        elif isinstance(node, dict) and part in node:
            node = node[part]
        else:
            raise ConfigError(f"axis '{dotted}': no key '{part}'")
    return node


def _list_index(part: str, dotted: str, length: int) -> int:
    try:
        idx = int(part)
    except ValueError:
        raise ConfigError(f"axis '{dotted}': expected a list index, got '{part}'") from None
    if not 0 <= idx < length:
        raise ConfigError(f"axis '{dotted}': index {idx} out of range")
    return idx


def sweep(config: dict, axis: str, values, outdir: Optional[str] = None,
          threads: Optional[int] = None, master_seed: Optional[int] = None) -> list:
    """Re-run one scenario for each value of a numeric config key and write a
    combined per-state scalar summary keyed by the swept value."""
    base = validate_config(config)
    current = get_config_value(base, axis)
    if isinstance(current, bool) or not isinstance(current, (int, float)):
        raise ConfigError(f"axis '{axis}' must name a numeric key, found {current!r}")
    records = []
    for value in values:
        cfg = copy.deepcopy(base)
        set_config_value(cfg, axis, float(value))
        records.append(run_scenario(cfg, outdir=outdir, threads=threads,
                                    master_seed=master_seed))
    summary_dir = records[0].out_dir.parent
    summary_dir.mkdir(parents=True, exist_ok=True)
    names = sorted({f"{label}:{key}" for rec in records
                    for label, entry in rec.scalars.items() for key in entry})
    if any(":" in label for rec in records for label in rec.scalars):
        raise ConfigError("state labels must not contain ':' when sweeping")
    path = summary_dir / f"sweep_{_safe(axis.replace('.', '_'))}.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join([axis] + names) + "\n")
        for value, rec in zip(values, records):
            cells = [_fmt(float(value))]
            for name in names:
                label, key = name.rsplit(":", 1)
                entry = rec.scalars.get(label, {})
                cells.append(_fmt(entry[key]) if key in entry else "")
            fh.write(",".join(cells) + "\n")
    for rec in records:
        rec.files.append(path)
    return records
