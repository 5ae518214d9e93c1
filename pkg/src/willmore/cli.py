"""Command-line interface.

Subcommands:
    generate   sample a catalog surface to CSV (r, theta, phi_1..phi_m)
    analyze    full pipeline: residues, expansions, classification, report
    residues   residue extraction only, JSON to stdout or --out
    energy     Willmore energy of the configured surface
    fit        expansion fit only
    classify   re-derive the verdict from a saved report.json

Configs are JSON documents:
    {"surface": {"name": ..., "params": {...}, "ambient_dim": m},
     "grid": {"r_min": ..., "r_max": ..., "n_r": ..., "n_theta": ...},
     "multiplier": null | {"mu": ..., "a_mu": [re, im], "f0": [[re, im], ...],
                           "zero": false} | {"mode": "pmc", "sign": 1},
     "levels": 1, "with_potentials": false,
     "tolerances": {"tol_zero": 1e-6, "defect_threshold": 1e-6}}
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np


def _load_config(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _apply_overrides(config, args) -> dict:
    if getattr(args, "levels", None) is not None:
        config["levels"] = args.levels
    if getattr(args, "tol_zero", None) is not None:
        config.setdefault("tolerances", {})["tol_zero"] = args.tol_zero
    if getattr(args, "with_potentials", False):
        config["with_potentials"] = True
    return config


def cmd_generate(args) -> int:
    from willmore.pipeline import _build_field
    from willmore.grid import PolarGrid
    from willmore.surface import save_samples_csv

    config = _load_config(args.config)
    grid = PolarGrid.from_json(config["grid"])
    field, _ = _build_field(config, grid)
    save_samples_csv(field, args.out)
    print(f"wrote {field.grid.n_r * field.grid.n_theta} samples to {args.out}")
    return 0


def cmd_analyze(args) -> int:
    from willmore.pipeline import exit_code, run_pipeline

    config = _apply_overrides(_load_config(args.config), args)
    doc = run_pipeline(config, out_dir=args.out)
    verdict = doc["classification"]
    print(f"theta0 = {doc['residues']['theta0']}, a = {doc['residues']['a']}")
    print(f"beta0 = {doc['residues']['beta0']} "
          f"(spread {doc['residues']['rho_spread']:.2e})")
    print(f"gamma = {doc['residues']['gamma']}")
    print(f"verdict: {verdict['verdict']}")
    for cite in verdict["citations"]:
        print(f"  - {cite}")
    if args.out:
        print(f"report written to {Path(args.out) / 'report.json'}")
    return exit_code(doc)


def cmd_residues(args) -> int:
    from willmore.pipeline import analyze_level, _jsonable
    from willmore.grid import PolarGrid

    config = _apply_overrides(_load_config(args.config), args)
    grid = PolarGrid.from_json(config["grid"])
    level = analyze_level(config, grid, with_potentials=False,
                          with_expansion=False)
    doc = _jsonable(level["_report"].to_json())
    text = json.dumps(doc, indent=1)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return 0


def cmd_energy(args) -> int:
    from willmore.curvature import curvature, willmore_energy
    from willmore.grid import PolarGrid
    from willmore.pipeline import _build_field
    from willmore.surface import conformal_factor, frame_and_gauss

    config = _load_config(args.config)
    grid = PolarGrid.from_json(config["grid"])
    field, _ = _build_field(config, grid)
    frame = frame_and_gauss(field, conformal_factor(field))
    w = willmore_energy(curvature(field, frame))
    print(f"willmore energy over the sampled annulus: {w:.12g}")
    return 0


def cmd_fit(args) -> int:
    from willmore.pipeline import analyze_level, _jsonable
    from willmore.grid import PolarGrid

    config = _apply_overrides(_load_config(args.config), args)
    grid = PolarGrid.from_json(config["grid"])
    level = analyze_level(config, grid, with_potentials=False,
                          with_expansion=True)
    doc = _jsonable({"expansion": level["expansion"],
                     "expansion_H": level["expansion_H"],
                     "constants": level["constants"]})
    text = json.dumps(doc, indent=1)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return 0


def cmd_classify(args) -> int:
    from willmore.classify import classify
    from willmore.multiplier import MultiplierSpec
    from willmore.residues import ResidueReport

    with open(args.report) as fh:
        doc = json.load(fh)
    res = doc["residues"]
    rep = ResidueReport(
        theta0=int(res["theta0"]), u0=float(res["u0"]),
        A=np.array([complex(re, im) for re, im in res["A"]]),
        beta0=np.array(res["beta0"]), rho_spread=float(res["rho_spread"]),
        gamma0=np.array(res["gamma0"]), gamma=np.array(res["gamma"]),
        a=int(res["a"]))
    mult = doc.get("config", {}).get("multiplier")
    spec = None
    if mult and mult != "zero" and mult.get("mode") != "pmc":
        spec = MultiplierSpec.from_json(mult)
    elif mult is None or mult == "zero":
        spec = MultiplierSpec.zero_spec()
    cond = doc.get("classification", {}).get("conditions", {})
    verdict = classify(rep, spec, pmc=bool(cond.get("pmc", False)),
                       regular=bool(cond.get("regular", False)),
                       tol_zero=args.tol_zero or 1e-6)
    print(json.dumps(verdict.to_json(), indent=1))
    return 2 if verdict.verdict == "inconsistent" else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="willmore",
        description="Branch-point analysis of conformal immersions: "
                    "residues, expansions, removability")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a catalog surface to CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("analyze", help="full pipeline with report")
    p.add_argument("--config", required=True)
    p.add_argument("--levels", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--tol-zero", dest="tol_zero", type=float, default=None)
    p.add_argument("--with-potentials", action="store_true")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("residues", help="residue extraction only")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--tol-zero", dest="tol_zero", type=float, default=None)
    p.set_defaults(fn=cmd_residues)

    p = sub.add_parser("energy", help="Willmore energy of the sampled annulus")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=cmd_energy)

    p = sub.add_parser("fit", help="asymptotic expansion fit")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--tol-zero", dest="tol_zero", type=float, default=None)
    p.set_defaults(fn=cmd_fit)

    p = sub.add_parser("classify", help="re-classify from a saved report")
    p.add_argument("--report", required=True)
    p.add_argument("--tol-zero", dest="tol_zero", type=float, default=None)
    p.set_defaults(fn=cmd_classify)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
