"""End-to-end analysis: surface -> curvature -> multiplier -> flux ->
residues -> potentials (optional) -> expansion -> classification.

``run_pipeline`` executes the chain on one or more refinement levels,
aggregates convergence orders, and writes a versioned JSON report plus CSV
radial profiles.  Any stage failure is re-raised with the stage named.

Report files (schema_version 1):
    report.json            config, per-level records, convergence orders,
                           residues, classification
    delta_profile.csv      columns r, delta
    energy_profile.csv     columns r, energy_density (circle mean)
    residual_profile.csv   columns r, strong_rms, div_rms (circle rms)
    w_profile.csv          columns r, abs_W_1 .. abs_W_m (circle means)
"""

from __future__ import annotations

import csv
import json
import time
from pathlib import Path
from typing import Optional

import numpy as np

from willmore.classify import classify, pmc_detect
from willmore.curvature import (curvature, delta_profile, gauss_bonnet_check,
                                weingarten_constant, willmore_energy)
from willmore.expansion import fit_H, fit_phi, verify_constants
from willmore.grid import PolarGrid, circle_mean, fit_order
from willmore.multiplier import (MultiplierSpec, matrix_field, pmc_multiplier,
                                 sample_multiplier, special_fields)
from willmore.potentials import potentials_SR, solve_gG, verify_system
from willmore.residual import equivalence_check, flux, strong_residual
from willmore.residues import (ResidueReport, branch_order, first_residue,
                               modified_residue, potential_L, second_residue,
                               tangent_vector, w_field)
from willmore.surface import (REGULAR_ENTRIES, catalog_surface,
                              conformal_factor, frame_and_gauss,
                              load_samples_csv)

SCHEMA_VERSION = 1


class PipelineError(RuntimeError):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"stage {stage!r} failed: {exc}")
        self.stage = stage
        self.cause = exc


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, exc) from exc


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        if np.iscomplexobj(v):
            return [_jsonable(x) for x in v.tolist()]
        return v.tolist()
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v


def _resolve_multiplier(config) -> tuple[Optional[MultiplierSpec], str, int]:
    doc = config.get("multiplier")
    if doc is None or doc == "zero":
        return MultiplierSpec.zero_spec(), "zero", +1
    if isinstance(doc, dict) and doc.get("mode") == "pmc":
        return None, "pmc", int(doc.get("sign", +1))
    return MultiplierSpec.from_json(doc), "spec", +1


def _build_field(config, grid):
    surf = config["surface"]
    if "csv" in surf:
        field = load_samples_csv(surf["csv"])
        return field, False
    name = surf["name"]
    field = catalog_surface(name, surf.get("params", {}), grid,
                            int(surf.get("ambient_dim", 3)))
    return field, True


def _default_tolerances(config) -> dict:
    tol = {"tol_zero": 1e-6, "defect_threshold": 1e-6,
           "pmc_threshold": 5e-3, "winding_gate": 0.2}
    name = config.get("surface", {}).get("name", "")
    if name == "synthetic_th4":
        # the planted template is conformal only asymptotically; its outer
        # rows carry an O(1) defect by construction. The measured defect is
        # still recorded in every level of the report.
        tol["defect_threshold"] = 2.0
    tol.update(config.get("tolerances", {}))
    return tol


def analyze_level(config, grid: PolarGrid, with_potentials: bool = False,
                  with_expansion: bool = True) -> dict:
    """One refinement level of the full chain; returns the level record."""
    tol = _default_tolerances(config)
    spec, mult_mode, pmc_sign = _resolve_multiplier(config)

    field, _ = _stage("surface", _build_field, config, grid)
    grid = field.grid
    frame = _stage("conformal_factor", conformal_factor, field)
    level = {"grid": grid.to_json(),
             "conformal_defect": float(np.max(frame.defect))}
    frame = _stage("frame_and_gauss", frame_and_gauss, field, frame,
                   tol["defect_threshold"])

    br = _stage("branch_order", branch_order, frame)
    frame = frame.with_branch(br.theta0, br.u, br.u0)
    level["theta0"] = br.theta0
    level["slope_raw"] = br.slope
    level["u0"] = br.u0

    curv = _stage("curvature", curvature, field, frame)
    level["willmore_energy"] = _stage("energy", willmore_energy, curv)
    # the Gauss-map energy is recorded, never silently rescaled away
    from willmore.curvature import gauss_map_energy_density
    from willmore.grid import integrate
    gm_energy = _stage("gauss_map_energy", integrate, grid,
                       gauss_map_energy_density(frame))
    level["gauss_map_energy"] = gm_energy
    level["warnings"] = []
    if gm_energy > 4.0 * np.pi:
        level["warnings"].append(
            f"Gauss-map energy {gm_energy:.3f} exceeds 4 pi: the smallness "
            "normalization behind the asymptotics is not met on this annulus")
    prof = _stage("delta_profile", delta_profile, frame)
    level["delta_square_integral"] = prof["square_integral"]
    level["delta_profile"] = {"r": prof["r"], "delta": prof["delta"]}
    level["energy_profile"] = circle_mean(curv.energy_density)
    level["liouville"] = _stage("gauss_bonnet", gauss_bonnet_check, curv,
                                frame)
    level["weingarten_constant"] = weingarten_constant(curv, frame)

    td = _stage("tangent_vector", tangent_vector, field, frame, br)
    level["A"] = td.A
    level["A_isotropy_defect"] = td.isotropy_defect
    level["A_normal_defect"] = td.normal_defect

    if mult_mode == "pmc":
        out = _stage("pmc_multiplier", pmc_multiplier, curv, frame, pmc_sign)
        f_field = out["f_pmc"]
        level["multiplier"] = {"mode": "pmc", "sign": pmc_sign,
                               "antiholomorphy_defect":
                                   out["antiholomorphy_defect"]}
    else:
        f_field, _ = _stage("sample_multiplier", sample_multiplier, spec, grid)
        level["multiplier"] = {"mode": mult_mode,
                               "spec": spec.to_json() if spec else None}
    M_f = matrix_field(f_field) if np.any(f_field) else None
    f_arg = f_field if np.any(f_field) else None

    sr = _stage("strong_residual", strong_residual, curv, frame, f_arg,
                0.1, 0.9)
    level["strong_norms"] = sr["norms"]
    fl = _stage("flux", flux, curv, frame, f_arg, M_f, None, field)
    level["div_norms"] = fl.div_norms(0.1, 0.9)
    rms = lambda f: np.sqrt(circle_mean(np.sum(np.abs(f) ** 2, axis=-1)))
    level["residual_profile"] = {"r": grid.r, "strong_rms": rms(sr["field"]),
                                 "div_rms": rms(fl.div_defect)}
    eq = _stage("equivalence", equivalence_check, curv, frame, f_arg, M_f,
                field, 0.1, 0.9)
    level["equivalence_norms"] = eq["identity_norms"]

    fr = _stage("first_residue", first_residue, fl)
    beta0 = fr["beta0"]
    level["beta0"] = beta0
    level["rho_spread"] = fr["rho_spread"]
    gamma0 = _stage("modified_residue", modified_residue, beta0, br.theta0,
                    spec, td.A, br.u0)
    level["gamma0"] = gamma0

    fl_corr = _stage("flux_corrected", flux, curv, frame, f_arg, M_f, beta0,
                     field)
    L, ldef = _stage("potential_L", potential_L, fl_corr)
    level["loop_defect"] = ldef

    F_mu = None
    if spec is not None and not spec.is_zero:
        sf = _stage("special_fields", special_fields, spec, br.theta0, br.u0,
                    td.A, field, frame)
        F_mu = sf.F_mu
        level["special_fields_mismatch"] = sf.mismatch
    W = _stage("w_field", w_field, L, curv.H, beta0, F_mu, grid)
    # phase noise on the winding circles: local holonomy + path mismatch of L
    inner = max(4, grid.n_r // 4)
    noise = 0.5 * float(np.max(ldef["noise_profile"][:inner]))
    srw = _stage("second_residue", second_residue, W, grid,
                 gate=tol["winding_gate"], noise_floor=noise)
    level["gamma"] = srw.gamma
    level["a"] = srw.a
    level["winding_raw"] = srw.raw
    level["winding_degenerate"] = srw.degenerate
    level["w_profile"] = {
        "r": grid.r,
        "abs_mean": np.stack([circle_mean(np.abs(W[..., j]))
                              for j in range(W.shape[-1])], axis=-1)}

    report = ResidueReport(
        br.theta0, br.u0, td.A, beta0, fr["rho_spread"], gamma0,
        srw.gamma, srw.a,
        diagnostics={"per_circle_beta0": fr["per_circle"],
                     "circle_radii": fr["radii"],
                     "winding_raw": srw.raw})
    level["pmc_detect"] = _stage("pmc_detect", pmc_detect, curv, frame,
                                 report, tol["pmc_threshold"],
                                 tol["tol_zero"])

    if with_potentials:
        pots = _stage("solve_gG", solve_gG, beta0, field)
        pots = _stage("potentials_SR", potentials_SR, L, field, curv, pots)
        level["potential_loop_defects"] = pots.loop_defects
        level["system_residuals"] = _stage("verify_system", verify_system,
                                           pots, frame, field, 0.15, 0.85)

    if with_expansion:
        fit = _stage("fit_phi", fit_phi, field, br.theta0, srw.a, br.u0)
        hfit = _stage("fit_H", fit_H, curv, br.theta0, srw.a, br.u0)
        level["expansion"] = fit.to_json()
        level["expansion_H"] = {
            "E_a": hfit["E_a"], "gamma0": hfit["gamma0"],
            "eta_exponent": hfit["eta_exponent"],
            "at_floor": hfit["at_floor"]}
        level["constants"] = _stage(
            "verify_constants", verify_constants, fit, br.theta0, srw.a,
            br.u0, gamma0, hfit["E_a"])

    level["_report"] = report
    level["_curv"] = curv
    level["_frame"] = frame
    return level


def run_pipeline(config: dict, out_dir=None) -> dict:
    """Full analysis across refinement levels; writes report and profiles."""
    t0 = time.time()
    tol = _default_tolerances(config)
    spec, mult_mode, _ = _resolve_multiplier(config)
    base_grid = PolarGrid.from_json(config["grid"]) if "grid" in config else \
        PolarGrid(1e-3, 1.0, 96, 64)
    n_levels = int(config.get("levels", 1))
    if "csv" in config.get("surface", {}) and n_levels > 1:
        raise PipelineError("surface", ValueError(
            "CSV-imported samples cannot be refined; use levels = 1"))

    levels = []
    grid = base_grid
    for i in range(n_levels):
        levels.append(analyze_level(config, grid,
                                    config.get("with_potentials", False),
                                    config.get("with_expansion", True)))
        if i + 1 < n_levels:
            grid = grid.refined()

    convergence = {}
    if len(levels) >= 2:
        hs = [lv["grid"]["n_r"] for lv in levels]
        hs = [1.0 / h for h in hs]
        for key, label in (("strong_norms", "strong_order"),
                           ("div_norms", "div_order"),
                           ("equivalence_norms", "equivalence_order")):
            errs = [lv[key]["rms"] for lv in levels]
            convergence[label] = fit_order(hs, errs)
        convergence["beta0_drift"] = float(np.linalg.norm(
            np.asarray(levels[-1]["beta0"]) - np.asarray(levels[-2]["beta0"])))

    final = levels[-1]
    report: ResidueReport = final["_report"]
    surf = config.get("surface", {})
    regular = bool(config.get("regular",
                              surf.get("name") in REGULAR_ENTRIES))
    pmc_flag = bool(mult_mode == "pmc" and final["pmc_detect"]["pmc"])
    verdict = classify(report, spec, pmc=pmc_flag, regular=regular,
                       tol_zero=tol["tol_zero"])

    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": {k: v for k, v in config.items() if not k.startswith("_")},
        "elapsed_seconds": time.time() - t0,
        "levels": [{k: v for k, v in lv.items() if not k.startswith("_")}
                   for lv in levels],
        "convergence": convergence,
        "residues": report.to_json(),
        "classification": verdict.to_json(),
    }
    doc = _jsonable(doc)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "report.json", "w") as fh:
            json.dump(doc, fh, indent=1)
        _write_profiles(out, levels[-1])
    doc["_classification"] = verdict
    return doc


def _write_profiles(out: Path, level: dict) -> None:
    dp = level.get("delta_profile")
    if dp is not None:
        with open(out / "delta_profile.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "delta"])
            for r, d in zip(dp["r"], dp["delta"]):
                w.writerow([repr(float(r)), repr(float(d))])
    wp = level.get("w_profile")
    if wp is not None:
        m = np.asarray(wp["abs_mean"]).shape[-1]
        with open(out / "w_profile.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r"] + [f"abs_W_{j + 1}" for j in range(m)])
            for r, row in zip(wp["r"], np.asarray(wp["abs_mean"])):
                w.writerow([repr(float(r))] + [repr(float(v)) for v in row])
    ep = level.get("energy_profile")
    if ep is not None:
        radii = np.asarray(level["delta_profile"]["r"])
        with open(out / "energy_profile.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "energy_density"])
            for r, v in zip(radii, np.asarray(ep)):
                w.writerow([repr(float(r)), repr(float(v))])
    rp = level.get("residual_profile")
    if rp is not None:
        with open(out / "residual_profile.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "strong_rms", "div_rms"])
            for r, s_, d_ in zip(np.asarray(rp["r"]),
                                 np.asarray(rp["strong_rms"]),
                                 np.asarray(rp["div_rms"])):
                w.writerow([repr(float(r)), repr(float(s_)), repr(float(d_))])


def exit_code(doc: dict) -> int:
    return 2 if doc["classification"]["verdict"] == "inconsistent" else 0
