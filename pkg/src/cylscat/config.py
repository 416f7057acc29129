"""Scenario configuration: a TOML tree with explicit units.

Lengths are in manifold length units L, energies in 1/L^2, times in L^2.
The exact grammar is documented in the README; parsing errors carry the
offending key path.
"""

from __future__ import annotations

import hashlib

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:                      # Python 3.10
    import tomli as tomllib

from .cross_section import ComponentSpec, CrossSectionSpec
from .errors import ConfigError
from .scenario import (FULL_LINE, JUNCTION, Discretization, JunctionCore,
                       PerturbationBlock, Scenario, barrier, constant_block,
                       gaussian_well, load_block_table, power_tail,
                       sample_table)


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(str(path), "config file not found")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"TOML parse error: {exc}")


def config_hash(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()[:12]


def _get(tree, path, default=None, required=False):
    node = tree
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            if required:
                raise ConfigError(path, "missing required key")
            return default
        node = node[part]
    return node


def _component(tree, idx) -> ComponentSpec:
    where = f"cross_section.component[{idx}]"
    kind = tree.get("kind", "circle")
    resolution = int(tree.get("resolution", 128))
    density = None
    dens_tree = tree.get("density")
    if dens_tree is not None:
        form = dens_tree.get("form")
        if form == "cosine":
            n = resolution
            theta = 2 * np.pi * np.arange(n) / n
            density = 1.0 + dens_tree.get("eps", 0.1) * np.cos(
                dens_tree.get("mode", 1) * theta)
        elif form == "samples":
            density = np.asarray(dens_tree["values"], dtype=float)
        else:
            raise ConfigError(where + ".density.form",
                              f"unknown density form {form!r}")
    try:
        if kind == "circle":
            return ComponentSpec("circle", float(tree.get("radius", 1.0)),
                                 resolution, density)
        if kind in ("interval-periodic", "ring-graph"):
            length = float(tree.get("length", 2 * np.pi))
            return ComponentSpec(kind, length / (2 * np.pi), resolution, density)
        raise ConfigError(where + ".kind", f"unknown component kind {kind!r}")
    except ValueError as exc:
        raise ConfigError(where, str(exc))


def _matrix(entries, where) -> np.ndarray:
    try:
        rows = []
        for row in entries:
            out = []
            for cell in row:
                if isinstance(cell, (list, tuple)):
                    out.append(complex(cell[0], cell[1]))
                else:
                    out.append(complex(cell))
            rows.append(out)
        return np.array(rows, dtype=complex)
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigError(where, f"bad matrix: {exc}")


def _block(tree, range_class, idx, base_dir=".") -> PerturbationBlock:
    where = f"perturbation.{range_class}_range.block[{idx}]"
    form = tree.get("form")
    target = tree.get("target", "V")
    if target not in ("V", "A"):
        raise ConfigError(where + ".target", "target must be 'V' or 'A'")
    mat = _matrix(tree.get("matrix", [[1.0]]), where + ".matrix")
    rc = "long" if range_class == "long" else "short"
    try:
        if form == "gaussian-well":
            return gaussian_well(mat, amplitude=tree.get("amplitude", 1.0),
                                 center=tree.get("center", 0.0),
                                 width=tree.get("width", 1.0),
                                 target=target, range_class=rc)
        if form == "power-tail":
            return power_tail(mat, exponent=tree["exponent"],
                              amplitude=tree.get("amplitude", 1.0),
                              target=target, range_class=rc)
        if form == "barrier":
            return barrier(mat, left=tree["left"], right=tree["right"],
                           amplitude=tree.get("amplitude", 1.0),
                           target=target, range_class=rc)
        if form == "constant":
            return constant_block(mat, amplitude=tree.get("amplitude", 1.0),
                                  target=target, range_class=rc)
        if form == "samples":
            return sample_table(mat, tree["x"], tree["values"],
                                target=target, range_class=rc)
        if form == "csv-table":
            import os

            path = tree["file"]
            if not os.path.isabs(path):
                path = os.path.join(base_dir, path)
            return load_block_table(path, target=target, range_class=rc)
    except KeyError as exc:
        raise ConfigError(where, f"missing parameter {exc}")
    except (ValueError, OSError) as exc:
        raise ConfigError(where, str(exc))
    raise ConfigError(where + ".form", f"unknown block form {form!r}")


def build_scenario(tree: dict, label: str = "scenario",
                   base_dir: str = ".") -> Scenario:
    comps = _get(tree, "cross_section.component", required=True)
    if not isinstance(comps, list) or not comps:
        raise ConfigError("cross_section.component",
                          "need at least one [[cross_section.component]]")
    cs = CrossSectionSpec(tuple(_component(c, i) for i, c in enumerate(comps)))

    blocks = []
    for rc in ("long", "short"):
        for i, b in enumerate(_get(tree, f"perturbation.{rc}_range.block") or []):
            blocks.append(_block(b, rc, i, base_dir))

    disc_tree = _get(tree, "discretization", required=True)
    try:
        disc = Discretization(
            x_max=float(disc_tree["x_max"]),
            n_nodes=int(disc_tree["n_nodes"]),
            absorber_fraction=float(disc_tree.get("absorber_fraction", 0.2)),
        )
    except KeyError as exc:
        raise ConfigError("discretization", f"missing {exc}")
    except ValueError as exc:
        raise ConfigError("discretization", str(exc))

    realization = _get(tree, "realization.kind", FULL_LINE)
    core = None
    if realization == JUNCTION:
        core_tree = _get(tree, "realization.core", required=True)
        core = JunctionCore(
            matrix=_matrix(core_tree["matrix"], "realization.core.matrix"),
            coupling=float(core_tree.get("coupling", 1.0)),
            n_ends=int(core_tree.get("n_ends", 2)),
        )
    elif realization != FULL_LINE:
        raise ConfigError("realization.kind",
                          f"unknown realization {realization!r}")

    density_ratio = None
    dens = _get(tree, "densities.block")
    if dens is not None:
        density_ratio = _block(dens, "long", 0, base_dir)

    try:
        return Scenario(
            cross_section=cs,
            blocks=tuple(blocks),
            mu_long=float(_get(tree, "perturbation.long_range.mu", 9.0)),
            mu_short=float(_get(tree, "perturbation.short_range.mu", 9.0)),
            discretization=disc,
            n_channels=int(_get(tree, "channels.n_modes", required=True)),
            realization=realization,
            core=core,
            density_ratio=density_ratio,
            threshold_window=float(_get(tree, "channels.threshold_window", 1e-3)),
            band_buffer_gaps=float(_get(tree, "channels.band_buffer_gaps", 3.0)),
            seed=int(tree.get("seed", 0)),
            label=label,
        )
    except ValueError as exc:
        raise ConfigError("scenario", str(exc))


def scenario_from_file(path) -> Scenario:
    import os

    tree = load_config(path)
    label = os.path.splitext(os.path.basename(str(path)))[0]
    return build_scenario(tree, label=label,
                          base_dir=os.path.dirname(os.path.abspath(str(path))))
