"""Summary report: figures and a digest regenerated from persisted CSVs.

The report never recomputes; it reads the delimited outputs of earlier
stages, renders static images next to them, and writes a structured summary.
Missing stages leave flagged gaps instead of failing the report.
"""

from __future__ import annotations

import json
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def _read_csv(path):
    if not os.path.exists(path):
        return None, None
    with open(path) as fh:
        header_comment = fh.readline()
        cols = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    return cols, rows


def _col(cols, rows, name, conv=float):
    idx = cols.index(name)
    return np.array([conv(r[idx]) for r in rows])


def _fig_thresholds(outdir, gaps):
    cols, rows = _read_csv(os.path.join(outdir, "spectrum.csv"))
    if cols is None:
        gaps.append("spectrum")
        return None
    tau = _col(cols, rows, "tau")
    comp = _col(cols, rows, "component", int)
    fig, ax = plt.subplots(figsize=(5, 3))
    for c in np.unique(comp):
        sel = comp == c
        ax.plot(np.nonzero(sel)[0], tau[sel], "o", label=f"component {c}")
    ax.set_xlabel("merged index")
    ax.set_ylabel(r"threshold $\tau_j$")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    path = os.path.join(outdir, "thresholds.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return os.path.basename(path)


def _fig_unitarity(outdir, gaps):
    cols, rows = _read_csv(os.path.join(outdir, "smatrix.csv"))
    if cols is None:
        gaps.append("smatrix")
        return None
    lam = _col(cols, rows, "lambda")
    defect = _col(cols, rows, "unitarity_defect")
    prov = _col(cols, rows, "provenance", str)
    fig, ax = plt.subplots(figsize=(5, 3))
    for p in np.unique(prov):
        sel = prov == p
        lu, du = [], []
        for l in np.unique(lam[sel]):
            lu.append(l)
            du.append(defect[sel][lam[sel] == l][0])
        ax.semilogy(lu, np.maximum(du, 1e-17), "o-", label=p, ms=3)
    ax.set_xlabel(r"$\lambda$")
    ax.set_ylabel(r"$\|S^*S - I\|$")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    path = os.path.join(outdir, "unitarity.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return os.path.basename(path)


def _fig_lap(outdir, gaps):
    cols, rows = _read_csv(os.path.join(outdir, "lap_probes.csv"))
    if cols is None:
        gaps.append("lap")
        return None
    lam = _col(cols, rows, "lambda")
    eps = _col(cols, rows, "epsilon")
    norm = _col(cols, rows, "norm")
    ell = _col(cols, rows, "ell", lambda s: int(float(s)))
    fig, ax = plt.subplots(figsize=(5, 3))
    for l in np.unique(lam):
        for e in np.unique(ell):
            sel = (lam == l) & (ell == e)
            if sel.any():
                ax.loglog(eps[sel], norm[sel], "o-", ms=3,
                          label=rf"$\lambda$={l:g}, $\ell$={e}")
    ax.set_xlabel(r"$\varepsilon$")
    ax.set_ylabel("weighted resolvent norm")
    ax.legend(frameon=False, fontsize=7)
    fig.tight_layout()
    path = os.path.join(outdir, "lap.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return os.path.basename(path)


def _fig_mourre(outdir, gaps):
    cols, rows = _read_csv(os.path.join(outdir, "mourre.csv"))
    if cols is None:
        gaps.append("mourre")
        return None
    lam = _col(cols, rows, "lambda")
    ev = _col(cols, rows, "eigenvalue")
    bound = _col(cols, rows, "a_bound")
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.plot(lam, ev, "o", ms=4, label="compressed spectrum")
    for l in np.unique(lam):
        b = bound[lam == l][0]
        ax.hlines(b, l - 0.02, l + 0.02, color="tab:red")
    ax.plot([], [], color="tab:red", label="Mourre bound a")
    ax.set_xlabel(r"$\lambda$")
    ax.set_ylabel("compressed commutator eigenvalues")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    path = os.path.join(outdir, "mourre.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return os.path.basename(path)


def _fig_timedelay(outdir, gaps):
    cols, rows = _read_csv(os.path.join(outdir, "sojourn.csv"))
    jpath = os.path.join(outdir, "timedelay.json")
    if cols is None or not os.path.exists(jpath):
        gaps.append("timedelay")
        return None
    with open(jpath) as fh:
        summary = json.load(fh)
    r = _col(cols, rows, "r")
    tau = _col(cols, rows, "tau_r")
    tau_in = _col(cols, rows, "tau_r_in")
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.plot(r, tau, "o-", ms=3, label=r"$\tau_r$")
    ax.plot(r, tau_in, "s--", ms=3, label=r"$\tau_r^{\mathrm{in}}$")
    ax.axhline(summary["ew_value"], color="tab:red", lw=1,
               label="Eisenbud-Wigner")
    ax.set_xlabel("r")
    ax.set_ylabel("time delay")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    path = os.path.join(outdir, "timedelay.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return os.path.basename(path)


def emit_report(outdir):
    """Render figures and the summary digest from the persisted outputs."""
    manifest_path = os.path.join(outdir, "run_manifest.json")
    if not os.path.exists(manifest_path):
        raise FileNotFoundError(
            f"no run manifest in {outdir}; run the pipeline first")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    gaps = []
    figures = [f for f in (
        _fig_thresholds(outdir, gaps),
        _fig_unitarity(outdir, gaps),
        _fig_lap(outdir, gaps),
        _fig_mourre(outdir, gaps),
        _fig_timedelay(outdir, gaps),
    ) if f]
    summary = {
        "scenario_hash": manifest.get("scenario_hash"),
        "stages": {k: v.get("status") for k, v in manifest.get("stages", {}).items()},
        "figures": figures,
        "gaps": gaps,
    }
    td = manifest.get("stages", {}).get("timedelay", {}).get("detail")
    if td:
        summary["timedelay"] = {k: td[k] for k in
                                ("tau_extrapolated", "ew_value", "discrepancy")
                                if k in td}
    with open(os.path.join(outdir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    lines = [f"cylscat report  (scenario {summary['scenario_hash']})"]
    for k, v in summary["stages"].items():
        lines.append(f"  stage {k:10s} {v}")
    if gaps:
        lines.append(f"  missing stages: {', '.join(gaps)}")
    if "timedelay" in summary:
        t = summary["timedelay"]
        lines.append(f"  tau_inf = {t.get('tau_extrapolated'):.6g}   "
                     f"EW = {t.get('ew_value'):.6g}   "
                     f"discrepancy = {t.get('discrepancy'):.3%}")
    text = "\n".join(lines) + "\n"
    with open(os.path.join(outdir, "summary.txt"), "w") as fh:
        fh.write(text)
    return summary
