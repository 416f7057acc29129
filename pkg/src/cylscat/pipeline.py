"""Pipeline stages, CSV persistence, and the run manifest.

Stages run in dependency order (spectrum before smatrix, smatrix before
timedelay); every output file carries the scenario hash in its header and the
manifest is written last as the atomic completion marker.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .channels import grid_of
from .config import build_scenario, config_hash, load_config
from .cross_section import spectrum_csv_rows
from .errors import (ConfigError, CylscatError, NonConvergedError,
                     PrerequisiteError)
from .fitting import holder_exponent
from .hamiltonian import (assemble_full, conjugate_operator, detect_eigenvalues,
                          mourre_compression, weighted_resolvent_probe)
from .scenario import validate_decay
from .scattering import smatrix_ode, smatrix_stationary
from .timedelay import (build_incoming_state, propagate_full,
                        symmetrized_time_delay)

STAGES = ("spectrum", "smatrix", "lap", "mourre", "propagate", "timedelay")
STAGE_PREREQUISITES = {"timedelay": ("smatrix",)}


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, (np.floating,)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path, header_cols, rows, scenario_hash):
    with open(path, "w") as fh:
        fh.write(f"# cylscat {__version__} scenario={scenario_hash}\n")
        fh.write(",".join(header_cols) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return os.path.basename(path)


def _stage_spectrum(scenario, tree, outdir, jobs, scenario_hash):
    ts = scenario.spectrum
    files = [write_csv(os.path.join(outdir, "spectrum.csv"),
                       ("component", "local_index", "merged_index", "tau",
                        "convergence"),
                       spectrum_csv_rows(ts), scenario_hash)]
    orders = [c.measured_order for c in ts.per_component]
    ok = all(1.5 <= o <= 2.5 or not np.isfinite(o) for o in orders)
    return {"files": files, "ok": bool(ok),
            "detail": {"thresholds": ts.thresholds[:scenario.n_channels].tolist(),
                       "orders": orders}}


def _lam_grid(tree, scenario, n_default=12):
    stage = tree.get("stages", {}).get("smatrix", {})
    taus = scenario.thresholds
    lo = float(stage.get("lam_min", taus.min() + 0.3))
    hi = float(stage.get("lam_max", lo + 2.0))
    n = int(stage.get("n_samples", n_default))
    return np.linspace(lo, hi, n)


def _stage_smatrix(scenario, tree, outdir, jobs, scenario_hash):
    stage = tree.get("stages", {}).get("smatrix", {})
    method = stage.get("method", "ode")
    lams = _lam_grid(tree, scenario)
    rows = []
    defects = []

    def compute(lam):
        out = []
        if method in ("ode", "both"):
            out.append(smatrix_ode(scenario, float(lam)))
        if method in ("stationary", "both"):
            out.append(smatrix_stationary(scenario, float(lam)))
        return out

    with ThreadPoolExecutor(max_workers=max(jobs, 1)) as pool:
        results = list(pool.map(compute, lams))
    ok = True
    for batch in results:
        for s in batch:
            rows.extend(s.csv_rows())
            defects.append((s.lam, s.provenance, s.defect))
            if s.meta.get("flag"):
                ok = False
    files = [write_csv(os.path.join(outdir, "smatrix.csv"),
                       ("lambda", "row_end", "row_channel", "col_end",
                        "col_channel", "re", "im", "unitarity_defect",
                        "provenance"),
                       rows, scenario_hash)]
    detail = {"defects": [(float(l), p, float(d)) for l, p, d in defects]}
    if method == "both":
        gaps = []
        for batch in results:
            gaps.append(float(np.max(np.abs(batch[0].matrix - batch[1].matrix)))
                        if len(batch) == 2 else np.nan)
        detail["dual_gap_max"] = float(np.nanmax(gaps))
    return {"files": files, "ok": bool(ok), "detail": detail}


def _stage_lap(scenario, tree, outdir, jobs, scenario_hash):
    stage = tree.get("stages", {}).get("lap", {})
    taus = scenario.thresholds
    lams = stage.get("lambdas", [float(taus.min()) + 0.5])
    s = float(stage.get("s", 1.0))
    ells = stage.get("ells", [1])
    eps0 = float(stage.get("eps0", 0.4))
    levels = int(stage.get("levels", 6))
    h = assemble_full(scenario)
    rows, limits, ok = [], [], True
    for lam in lams:
        for ell in ells:
            probe = weighted_resolvent_probe(scenario, h, float(lam), s,
                                             ell=int(ell), eps0=eps0,
                                             levels=levels)
            rows.extend(probe.csv_rows())
            limits.append((probe.lam, probe.s, probe.ell, probe.side,
                           probe.extrapolated,
                           float(np.median(probe.cauchy_ratios)),
                           int(probe.converged)))
            ok = ok and probe.converged
    files = [
        write_csv(os.path.join(outdir, "lap_probes.csv"),
                  ("lambda", "s", "ell", "epsilon", "norm", "side"),
                  rows, scenario_hash),
        write_csv(os.path.join(outdir, "lap_limits.csv"),
                  ("lambda", "s", "ell", "side", "limit", "cauchy_ratio",
                   "converged"),
                  limits, scenario_hash),
    ]
    return {"files": files, "ok": bool(ok), "detail": {"n_probes": len(limits)}}


def _stage_mourre(scenario, tree, outdir, jobs, scenario_hash):
    stage = tree.get("stages", {}).get("mourre", {})
    taus = scenario.thresholds
    lams = stage.get("lambdas", [float(taus.min()) + 0.5])
    delta = float(stage.get("delta", 0.05))
    h = assemble_full(scenario)
    a = conjugate_operator(scenario)
    rows, ok = [], True
    for lam in lams:
        rep = mourre_compression(scenario, h, a, float(lam), delta)
        for ev in rep.eigenvalues:
            rows.append((rep.lam, rep.delta, rep.dim, rep.a_bound, float(ev),
                         rep.count_below, rep.rank_budget, int(rep.verified)))
        ok = ok and rep.verified
    files = [write_csv(os.path.join(outdir, "mourre.csv"),
                       ("lambda", "delta", "dim", "a_bound", "eigenvalue",
                        "count_below", "rank_budget", "verified"),
                       rows, scenario_hash)]
    crit = detect_eigenvalues(h, (float(stage.get("detect_min", -5.0)), -1e-8),
                              scenario)
    files.append(write_csv(os.path.join(outdir, "critical_set.csv"),
                           ("value", "kind", "multiplicity"),
                           crit.csv_rows(), scenario_hash))
    return {"files": files, "ok": bool(ok),
            "detail": {"critical_values": [float(v) for v in crit.values]}}


def _stage_propagate(scenario, tree, outdir, jobs, scenario_hash):
    stage = tree.get("stages", {}).get("propagate", {})
    band = (float(stage.get("band_center", scenario.thresholds.min() + 1.0)),
            float(stage.get("band_width", 0.4)))
    packet = build_incoming_state(scenario, band[0], band[1],
                                  profile=stage.get("profile", "gauss-bump"))
    h = assemble_full(scenario)
    t_end = float(stage.get("t_end", 5.0))
    out, cert = propagate_full(h, packet, t_end)
    rows = [(t_end, cert["dt"], cert["norm_drift"],
             cert["richardson_step_error"], out.norm())]
    files = [write_csv(os.path.join(outdir, "propagation.csv"),
                       ("t_end", "dt", "norm_drift", "richardson_step_error",
                        "final_norm"),
                       rows, scenario_hash)]
    from .channels import packet_csv_rows

    rep_header, pkt_rows = packet_csv_rows(out)
    path = os.path.join(outdir, "packet_final.csv")
    with open(path, "w") as fh:
        fh.write(f"# cylscat {__version__} scenario={scenario_hash}\n")
        fh.write(rep_header + "\n")
        fh.write("x,channel,re,im\n")
        for row in pkt_rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    files.append("packet_final.csv")
    ok = cert["norm_drift"] < 1e-8
    return {"files": files, "ok": bool(ok), "detail": cert}


def _stage_timedelay(scenario, tree, outdir, jobs, scenario_hash, force=False):
    stage = tree.get("stages", {}).get("timedelay", {})
    report = validate_decay(scenario)
    if not report.admissible_time_delay and not force:
        raise NonConvergedError(
            f"time-delay stage refused: the decay assumption must hold with "
            f"mu > 4, declared mu = {scenario.mu} (use --force to override)")
    band = (float(stage.get("band_center", scenario.thresholds.min() + 1.0)),
            float(stage.get("band_width", 0.6)))
    packet = build_incoming_state(scenario, band[0], band[1],
                                  profile=stage.get("profile", "gauss-bump"))
    r_values = np.arange(float(stage.get("r_min", 4.0)),
                         float(stage.get("r_max", 12.0)) + 1e-9,
                         float(stage.get("r_step", 0.5)))
    rep = symmetrized_time_delay(scenario, packet, r_values, force=force)
    files = [write_csv(os.path.join(outdir, "sojourn.csv"),
                       ("r", "T_r0_phi", "T_r0_Sphi", "T_r1", "T2", "tau_r",
                        "tau_r_in"),
                       rep.csv_rows(), scenario_hash)]
    summary = {
        "tau_extrapolated": rep.tau_extrapolated,
        "fit_residual": rep.fit_residual,
        "ew_value": rep.ew_value,
        "ew_hermiticity_defect": rep.ew_hermiticity_defect,
        "discrepancy": rep.discrepancy,
        "unsym_slope": rep.unsym_slope,
        "unsym_slope_se": rep.unsym_slope_se,
        "certificates": rep.certificates,
    }
    with open(os.path.join(outdir, "timedelay.json"), "w") as fh:
        json.dump({"scenario": scenario_hash, **summary}, fh, indent=2,
                  default=float)
    files.append("timedelay.json")
    ok = rep.certificates.get("scattering_state", {}).get("converged", True)
    return {"files": files, "ok": bool(ok), "detail": summary}


_STAGE_FUNCS = {
    "spectrum": _stage_spectrum,
    "smatrix": _stage_smatrix,
    "lap": _stage_lap,
    "mourre": _stage_mourre,
    "propagate": _stage_propagate,
    "timedelay": _stage_timedelay,
}


def run_pipeline(config_path, stages, outdir, jobs=1, seed=None, force=False):
    """Run the requested stages; returns (manifest, exit_code)."""
    t_start = time.time()
    tree = load_config(config_path)
    scenario = build_scenario(tree)
    if seed is not None:
        scenario.seed = int(seed)
    scenario_hash = config_hash(config_path)
    os.makedirs(outdir, exist_ok=True)
    requested = list(STAGES) if "all" in stages else [s for s in STAGES
                                                      if s in stages]
    for st in stages:
        if st not in STAGES and st != "all":
            raise ConfigError("stages", f"unknown stage {st!r}")
    manifest = {
        "tool": "cylscat",
        "version": __version__,
        "scenario_hash": scenario_hash,
        "config": os.path.abspath(str(config_path)),
        "seed": scenario.seed,
        "stages": {},
        "files": [],
    }
    exit_code = 0
    done = set()
    for name in requested:
        if name == "timedelay" and not force:
            # admissibility refusal precedes pipeline-state checks
            report = validate_decay(scenario)
            if not report.admissible_time_delay:
                raise NonConvergedError(
                    f"time-delay stage refused: the decay assumption must "
                    f"hold with mu > 4, declared mu = {scenario.mu} "
                    f"(use --force to override)")
        for pre in STAGE_PREREQUISITES.get(name, ()):
            if pre not in done and not os.path.exists(
                    os.path.join(outdir, "smatrix.csv")):
                raise PrerequisiteError(
                    f"stage '{name}' needs stage '{pre}' (run it first or "
                    f"request both)")
        t0 = time.time()
        try:
            if name == "timedelay":
                res = _STAGE_FUNCS[name](scenario, tree, outdir, jobs,
                                         scenario_hash, force=force)
            else:
                res = _STAGE_FUNCS[name](scenario, tree, outdir, jobs,
                                         scenario_hash)
            status = "passed" if res["ok"] else "flagged"
            if not res["ok"]:
                exit_code = 3
        except CylscatError as exc:
            manifest["stages"][name] = {"status": "failed",
                                        "error": str(exc),
                                        "wallclock_s": time.time() - t0}
            exit_code = 3
            break
        manifest["stages"][name] = {
            "status": status,
            "wallclock_s": time.time() - t0,
            "detail": res.get("detail", {}),
        }
        manifest["files"].extend(res["files"])
        done.add(name)
    manifest["total_wallclock_s"] = time.time() - t_start
    # atomic completion marker: manifest written last
    tmp = os.path.join(outdir, ".run_manifest.json.tmp")
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=2, default=float)
    os.replace(tmp, os.path.join(outdir, "run_manifest.json"))
    return manifest, exit_code
