"""Built-in scenario registry: one runnable default config per studied setup,
with a short description and the corresponding figure artifact."""

from __future__ import annotations

import math

GOLDEN_H_Z = (1 + math.sqrt(5)) / 4
GOLDEN_H_X = (math.sqrt(5) + 5) / 8

TYPE1_THETAS = (0.2, 0.5, 0.8, 1.1, 1.4)


def _mfim_block(n_sites, boundary=True, h_x=GOLDEN_H_X, h_z=GOLDEN_H_Z):
    model = {"kind": "mfim", "j_zz": 1.0, "h_x": h_x, "h_z": h_z}
    if not boundary:
        model.update(boundary_dh1=0.0, boundary_dhN=0.0)
    return {"system": {"n_sites": n_sites, "basis": "full"}, "model": model}


def fig1_type1():
    cfg = _mfim_block(12)
    cfg.update({
        "scenario": "fig1_type1",
        "time_grid": {"t_max": 20.0, "dt": 0.05},
        "states": [{"kind": "product", "theta": t, "phi": 0.0, "label": f"theta={t:g}"}
                   for t in TYPE1_THETAS],
        "diagnostics": {"series": ["trace_distance"],
                        "scalars": ["ipr", "energy_mean", "effective_beta",
                                    "trace_distance0"]},
    })
    return cfg


def fig1_type2():
    cfg = _mfim_block(12)
    cfg.update({
        "scenario": "fig1_type2",
        "time_grid": {"t_max": 20.0, "dt": 0.05},
        "states": [{"kind": "iso_contour", "count": 5}],
        "diagnostics": {"series": ["trace_distance"],
                        "scalars": ["ipr", "energy_mean", "trace_distance0"]},
    })
    return cfg


def fig2_grid():
    cfg = _mfim_block(10)
    cfg.update({
        "scenario": "fig2_grid",
        "mode": "grid",
        "grid": {"theta_points": 21, "phi_points": 21,
                 "quantities": ["trace_distance0", "log_ipr"]},
    })
    return cfg


def fig3_random():
    return {
        "scenario": "fig3_random",
        "system": {"n_sites": 8, "basis": "full"},
        "model": {"kind": "random", "w": 1.0, "j_h": -4.0},
        "time_grid": {"t_max": 20.0, "dt": 0.05},
        "states": [{"kind": "random_angles", "f": f, "label": f"f={f:g}"}
                   for f in (0.2, 0.5, 1.0)],
        "diagnostics": {"series": ["trace_distance"],
                        "scalars": ["ipr", "energy_mean", "trace_distance0"],
                        "overlap_histogram": True},
        "run": {"realizations": 100},
    }


def fig4_floquet_ed():
    return {
        "scenario": "fig4_floquet_ed",
        "system": {"n_sites": 10, "basis": "full"},
        "model": {"kind": "kicked_ising", "j_zz": 1.0, "h_x": GOLDEN_H_X,
                  "h_z": GOLDEN_H_Z, "t1": 0.5, "t2": 0.5},
        "time_grid": {"periods": 150},
        "states": [{"kind": "mps", "theta": t, "label": f"mps_theta={t:g}"}
                   for t in (0.1, 0.3, 0.5)],
        "diagnostics": {"series": ["entanglement_entropy", "trace_distance"],
                        "scalars": ["ipr"]},
    }


def fig5_pxp():
    return {
        "scenario": "fig5_pxp",
        "system": {"n_sites": 16, "basis": "pxp"},
        "model": {"kind": "pxp", "omega": 1.0},
        "time_grid": {"t_max": 20.0, "dt": 0.05},
        "states": [{"kind": "pxp_z2", "label": "z2"},
                   {"kind": "pxp_z4", "label": "z4"},
                   {"kind": "pxp_vacuum", "label": "vacuum"}],
        "diagnostics": {"series": ["trace_distance", "entanglement_entropy"],
                        "scalars": ["ipr", "trace_distance0"],
                        "spectral_function": True},
    }


def fig5b_prethermal_inset():
    return {
        "scenario": "fig5b_prethermal_inset",
        "system": {"n_sites": 10, "basis": "full"},
        "model": {"kind": "kicked_ising", "j_zz": math.pi / 4, "h_x": -math.pi / 4,
                  "h_z": -0.15, "t1": 0.5, "t2": 0.5},
        "time_grid": {"periods": 150},
        "bipartition": {"kind": "centered", "size": 3},
        "states": [{"kind": "product", "theta": math.pi / 2, "phi": 0.0,
                    "label": "product_xy"},
                   {"kind": "mps", "theta": math.pi / 4, "label": "mps"}],
        "diagnostics": {"series": ["entanglement_entropy"], "scalars": ["ipr"]},
    }


def sm_xxz_asymmetry():
    return {
        "scenario": "sm_xxz_asymmetry",
        "system": {"n_sites": 10, "basis": "full"},
        "model": {"kind": "xxz_nnn", "j1": 1.0, "j2": 1.0, "delta1": 0.5, "delta2": 0.5},
        "time_grid": {"t_max": 20.0, "dt": 0.05},
        "states": [{"kind": "tilted_fm", "axis": "y", "theta": t,
                    "label": f"theta={t:g}"} for t in (0.3, 0.6, 0.9)],
        "diagnostics": {"series": ["entanglement_asymmetry", "trace_distance",
                                   "entanglement_entropy"],
                        "scalars": ["ipr", "trace_distance0"]},
    }


def sm_frobenius():
    cfg = _mfim_block(10)
    cfg.update({
        "scenario": "sm_frobenius",
        "time_grid": {"t_max": 20.0, "dt": 0.05},
        "states": [{"kind": "product", "theta": t, "phi": 0.0, "label": f"theta={t:g}"}
                   for t in TYPE1_THETAS],
        "diagnostics": {"series": ["frobenius_distance", "trace_distance"],
                        "scalars": ["ipr", "trace_distance0"]},
    })
    return cfg


def sm_variance():
    cfg = _mfim_block(10)
    cfg.update({
        "scenario": "sm_variance",
        "mode": "grid",
        "grid": {"theta_points": 21, "phi_points": 21,
                 "quantities": ["ipr", "log_ipr", "energy_variance"]},
    })
    return cfg


def sm_other_states():
    cfg = _mfim_block(10)
    states = []
    for theta in (0.5, 1.0):
        for phi in (0.2, 0.8, 1.4, 2.0):
            states.append({"kind": "product", "theta": theta, "phi": phi,
                           "label": f"theta={theta:g}_phi={phi:g}"})
    cfg.update({
        "scenario": "sm_other_states",
        "time_grid": {"t_max": 20.0, "dt": 0.05},
        "states": states,
        "diagnostics": {"series": ["trace_distance"],
                        "scalars": ["ipr", "energy_mean", "trace_distance0"]},
    })
    return cfg


def sm_weak_entanglement():
    cfg = _mfim_block(10)
    states = []
    for dt in (0.2, 0.3, 0.5):
        for theta in (0.3, 0.6, 0.9):
            states.append({"kind": "entangled", "axis": "y", "theta": theta, "dt": dt,
                           "label": f"theta={theta:g}_dt={dt:g}"})
    cfg.update({
        "scenario": "sm_weak_entanglement",
        "time_grid": {"t_max": 20.0, "dt": 0.05},
        "states": states,
        "diagnostics": {"series": ["trace_distance", "entanglement_entropy"],
                        "scalars": ["ipr", "trace_distance0"]},
        "run": {"realizations": 20},
    })
    return cfg


def sm_fixed_state():
    return {
        "scenario": "sm_fixed_state",
        "system": {"n_sites": 8, "basis": "full"},
        "model": {"kind": "random", "w": 1.0, "j_h": -4.0},
        "time_grid": {"t_max": 20.0, "dt": 0.05},
        "states": [{"kind": "product", "theta": 0.0, "phi": 0.0, "label": "fm"}],
        "diagnostics": {"series": ["trace_distance"],
                        "scalars": ["ipr", "energy_mean", "trace_distance0"],
                        "overlap_histogram": True},
        "run": {"realizations": 50},
    }


def sm_strong_weak():
    return {
        "scenario": "sm_strong_weak",
        "system": {"n_sites": 10, "basis": "parity+"},
        "model": {"kind": "mfim", "j_zz": 1.0, "h_x": -1.5, "h_z": 0.5,
                  "boundary_dh1": 0.0, "boundary_dhN": 0.0},
        "time_grid": {"t_max": 20.0, "dt": 0.05},
        "bipartition": {"kind": "centered", "size": 3},
        "states": [{"kind": "tilted_fm", "axis": "x", "theta": t,
                    "label": f"theta={t:g}"}
                   for t in (0.0, 0.4, 0.8, 1.2, round(math.pi / 2, 6))],
        "diagnostics": {"series": ["trace_distance", "entanglement_entropy"],
                        "scalars": ["ipr", "effective_beta", "trace_distance0"]},
    }


SCENARIOS = {
    "fig1_type1": ("tilted-ferromagnet quench family with rising temperature; "
                   "distance-curve crossings", "Fig. 1b main", fig1_type1),
    "fig1_type2": ("iso-energy quench family; control case with no crossings",
                   "Fig. 1b inset", fig1_type2),
    "fig2_grid": ("Bloch-angle grid of initial distance and log-IPR",
                  "Fig. 2a-b", fig2_grid),
    "fig3_random": ("random-coupling chain, angle-ensemble average over realizations",
                    "Fig. 3a-b", fig3_random),
    "fig4_floquet_ed": ("kicked chain, finite-size bond-dimension-2 initial states; "
                        "entropy growth and IPR", "Fig. 4a-b (finite-N surrogate)",
                        fig4_floquet_ed),
    "fig5_pxp": ("blockade-constrained chain: pattern-state quenches, overlap "
                 "spectral functions", "End Matter Fig. 5a-b", fig5_pxp),
    "fig5b_prethermal_inset": ("self-dual kicked chain, product vs entangled initial "
                               "state, central 3-site block", "End Matter Fig. 5b inset",
                               fig5b_prethermal_inset),
    "sm_xxz_asymmetry": ("magnetization-conserving chain: asymmetry vs distance "
                         "diagnostics", "Fig. S1", sm_xxz_asymmetry),
    "sm_frobenius": ("overlap-based distance alongside the trace distance",
                     "Fig. S2", sm_frobenius),
    "sm_variance": ("energy variance and IPR over the Bloch grid", "Fig. S3",
                    sm_variance),
    "sm_other_states": ("phi-rotated product-state families at fixed theta",
                        "Fig. S4", sm_other_states),
    "sm_weak_entanglement": ("randomly entangled tilted states, seed-averaged",
                             "Fig. S5", sm_weak_entanglement),
    "sm_fixed_state": ("fixed polarized state under the random chain; sweep the "
                       "uniform coupling for the effect", "Fig. S6", sm_fixed_state),
    "sm_strong_weak": ("strong vs weak thermalization as a distance-crossing effect, "
                       "parity sector, central block", "Fig. S7", sm_strong_weak),
}


def scenario_config(scenario_id: str) -> dict:
    if scenario_id not in SCENARIOS:
        raise KeyError(f"unknown scenario '{scenario_id}'; known: {', '.join(SCENARIOS)}")
    return SCENARIOS[scenario_id][2]()


def registry_lines() -> list:
    width = max(len(name) for name in SCENARIOS)
    lines = []
    for name, (desc, figure, _) in SCENARIOS.items():
        lines.append(f"{name:<{width}}  {figure:<32}  {desc}")
    return lines
