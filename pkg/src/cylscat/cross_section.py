"""Transverse eigenproblem on the compact cross-section.

The cross-section is a disjoint union of one-dimensional closed components
(circles, periodic intervals, ring graphs).  Each component carries a strictly
positive metric density sampled on a periodic grid; the Laplace-Beltrami
operator is discretized in divergence form and solved densely, with Richardson
extrapolation over grid doubling supplying the accuracy certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

COMPONENT_KINDS = ("circle", "interval-periodic", "ring-graph")


@dataclass(frozen=True)
class ComponentSpec:
    """One closed 1-D component of the cross-section.

    ``scale`` is the radius for a circle and the total length divided by 2*pi
    for the other kinds, so the arclength element is scale * density(theta).
    """

    kind: str
    scale: float
    resolution: int
    density: np.ndarray | None = None  # samples on the theta grid, default 1

    def __post_init__(self):
        if self.kind not in COMPONENT_KINDS:
            raise ValueError(f"unknown component kind {self.kind!r}")
        if not self.scale > 0:
            raise ValueError("geometric parameter must be strictly positive")
        if self.resolution < 8:
            raise ValueError("grid resolution must be >= 8")
        if self.density is not None:
            dens = np.asarray(self.density, dtype=float)
            bad = np.nonzero(~(dens > 0))[0]
            if bad.size:
                raise ValueError(
                    f"non-positive metric density sample at node {bad[0]}"
                )

    def density_samples(self, n: int) -> np.ndarray:
        """Density resampled on an n-point grid (trig interpolation)."""
        if self.density is None:
            return np.ones(n)
        dens = np.asarray(self.density, dtype=float)
        if dens.size == n:
            return dens.copy()
        # resample via Fourier interpolation on the periodic grid
        coeff = np.fft.rfft(dens)
        out = np.fft.irfft(coeff, n) * (n / dens.size)
        if not np.all(out > 0):
            raise ValueError("resampled metric density lost positivity")
        return out


def circle(radius: float = 1.0, resolution: int = 128,
           density: np.ndarray | None = None) -> ComponentSpec:
    return ComponentSpec("circle", radius, resolution, density)


def periodic_interval(length: float, resolution: int = 128,
                      density: np.ndarray | None = None) -> ComponentSpec:
    return ComponentSpec("interval-periodic", length / (2 * np.pi), resolution, density)


def ring_graph(length: float, resolution: int = 128,
               density: np.ndarray | None = None) -> ComponentSpec:
    return ComponentSpec("ring-graph", length / (2 * np.pi), resolution, density)


@dataclass(frozen=True)
class CrossSectionSpec:
    components: tuple[ComponentSpec, ...]

    def __post_init__(self):
        if len(self.components) == 0:
            raise ValueError("cross-section needs at least one component")

    @staticmethod
    def of(*components: ComponentSpec) -> "CrossSectionSpec":
        return CrossSectionSpec(tuple(components))


def build_component_operator(comp: ComponentSpec, resolution: int | None = None):
    """Divergence-form stiffness/mass pair for one component.

    Returns (K, w): K symmetric PSD stiffness, w the node weights of the
    discrete measure, so the operator is W^{-1} K and eigenpairs come from the
    generalized problem K v = tau W v.
    """
    n = resolution or comp.resolution
    dtheta = 2 * np.pi / n
    rho = comp.scale * comp.density_samples(n)
    bad = np.nonzero(~(rho > 0))[0]
    if bad.size:
        raise ValueError(f"non-positive metric density sample at node {bad[0]}")
    w = rho * dtheta
    # edge conductances 1/(rho_mid * dtheta), periodic closure
    rho_mid = 0.5 * (rho + np.roll(rho, -1))
    cond = 1.0 / (rho_mid * dtheta)
    K = np.zeros((n, n))
    idx = np.arange(n)
    nxt = np.roll(idx, -1)
    K[idx, idx] += cond
    K[nxt, nxt] += cond
    K[idx, nxt] -= cond
    K[nxt, idx] -= cond
    return K, w


def build_cross_section(spec: CrossSectionSpec):
    """Discrete Laplace-Beltrami operators for every component."""
    return [build_component_operator(c) for c in spec.components]


@dataclass
class ComponentSpectrum:
    eigenvalues: np.ndarray          # ascending, Richardson extrapolated
    modes: np.ndarray                # columns, orthonormal w.r.t. weights
    weights: np.ndarray              # discrete measure on the finest grid
    convergence: np.ndarray          # per-eigenvalue extrapolation residual
    measured_order: float            # observed convergence order


@dataclass
class TransverseSpectrum:
    """Merged transverse spectrum of the whole cross-section."""

    per_component: list[ComponentSpectrum]
    thresholds: np.ndarray                   # ascending with multiplicity
    back_map: list[tuple[int, int]]          # merged index -> (component, local)

    def threshold(self, j: int) -> float:
        return float(self.thresholds[j])

    @property
    def count(self) -> int:
        return self.thresholds.size


def _fix_mode_signs(modes: np.ndarray) -> np.ndarray:
    out = modes.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        sig = col[np.abs(col) > 1e-8 * np.abs(col).max()]
        if sig.size and sig[0] < 0:
            out[:, k] = -col
    return out


def _component_eigtill(comp: ComponentSpec, k_max: int, n: int):
    K, w = build_component_operator(comp, n)
    vals, vecs = scipy.linalg.eigh(K, np.diag(w))
    return vals[: k_max], vecs[:, : k_max], w


def transverse_spectrum(spec: CrossSectionSpec, k_max: int) -> TransverseSpectrum:
    """First k_max transverse eigenpairs per component, Richardson extrapolated.

    Eigensolves run on the base grid and two doublings; the two-level
    extrapolation removes the h^2 and h^4 error terms and the residual is
    stored as the convergence estimate.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    specs = []
    for comp in spec.components:
        if k_max > comp.resolution / 4:
            raise ValueError(
                f"k_max={k_max} exceeds resolution/4 for component "
                f"(resolution {comp.resolution}); refine the grid"
            )
        n0 = comp.resolution
        lam1, _, _ = _component_eigtill(comp, k_max, n0)
        lam2, _, _ = _component_eigtill(comp, k_max, 2 * n0)
        lam4, vecs4, w4 = _component_eigtill(comp, k_max, 4 * n0)
        # Richardson: second order leading error
        r12 = lam2 + (lam2 - lam1) / 3.0
        r24 = lam4 + (lam4 - lam2) / 3.0
        best = r24 + (r24 - r12) / 15.0
        conv = np.abs(best - r24)
        # zero modes of a closed component are exact constants
        best = np.where(np.abs(best) < 1e-10, 0.0, best)
        with np.errstate(divide="ignore", invalid="ignore"):
            num = np.abs(lam1 - lam2)
            den = np.abs(lam2 - lam4)
            orders = np.log2(num / den)
        good = np.isfinite(orders) & (np.abs(best) > 1e-9)
        order = float(np.median(orders[good])) if good.any() else 2.0
        # extrapolation noise can swap degenerate pairs; restore ascending order
        perm = np.argsort(best, kind="stable")
        specs.append(
            ComponentSpectrum(
                eigenvalues=best[perm],
                modes=_fix_mode_signs(vecs4[:, perm]),
                weights=w4,
                convergence=conv[perm],
                measured_order=order,
            )
        )
    merged, back = merge_thresholds([s.eigenvalues for s in specs])
    return TransverseSpectrum(per_component=specs, thresholds=merged, back_map=back)


def merge_thresholds(per_component: list[np.ndarray]):
    """Stable ascending merge with a total injective back-map."""
    for lst in per_component:
        arr = np.asarray(lst)
        if arr.size and np.any(np.diff(arr) < -1e-12):
            raise ValueError("component threshold list is not ascending")
    tagged = []
    for ell, lst in enumerate(per_component):
        tagged.extend((float(t), ell, k) for k, t in enumerate(lst))
    tagged.sort(key=lambda item: (item[0], item[1], item[2]))
    merged = np.array([t for t, _, _ in tagged])
    back = [(ell, k) for _, ell, k in tagged]
    return merged, back


def spectrum_csv_rows(ts: TransverseSpectrum):
    """Rows (component, local index, merged index, tau, convergence)."""
    rows = []
    for j, (ell, k) in enumerate(ts.back_map):
        conv = ts.per_component[ell].convergence[k]
        rows.append((ell, k, j, float(ts.thresholds[j]), float(conv)))
    return rows
