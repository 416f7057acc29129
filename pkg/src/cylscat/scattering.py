"""Multichannel S-matrix by coupled-channel matching and by the stationary
resolvent formula.

Fiber convention (shared with the spectral transform): the incoming basis is
indexed by (direction, open mode) with direction "-" for left-movers, which
enter from the right end, and "+" for right-movers entering from the left.
Transmission is diagonal in this indexing, so the free S-matrix is the
identity.  Matching waves are flux normalized with the (lam - tau)^(-1/4)
weights; phases are referenced to x = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .channels import (ChannelSet, discrete_group_velocity, discrete_momentum,
                       flux_weight, local_gap, open_channels)
from .errors import MatchRadiusError, NonConvergedError, ThresholdProximityError
from .hamiltonian import (DiscreteOperator, absorbing_potential, assemble_free,
                          assemble_full, grid_of, identification_matrix,
                          phi_weight_operator)
from .scenario import FULL_LINE, JUNCTION, Scenario


@dataclass
class SMatrix:
    lam: float
    open_indices: np.ndarray
    matrix: np.ndarray              # (2m, 2m), rows/cols (direction, mode)
    provenance: str                 # "ode" | "stationary"
    defect: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def labels(self):
        out = []
        for d in ("-", "+"):
            out.extend((d, int(j)) for j in self.open_indices)
        return out

    def block(self, d_out: str, d_in: str) -> np.ndarray:
        m = self.open_indices.size
        r = 0 if d_out == "-" else m
        c = 0 if d_in == "-" else m
        return self.matrix[r:r + m, c:c + m]

    def csv_rows(self):
        rows = []
        labels = self.labels
        for a, (dr, jr) in enumerate(labels):
            for b, (dc, jc) in enumerate(labels):
                v = self.matrix[a, b]
                rows.append((self.lam, dr, jr, dc, jc, v.real, v.imag,
                             self.defect, self.provenance))
        return rows


def unitarity_defect(matrix: np.ndarray) -> float:
    """Spectral-norm distance of S*S from the identity."""
    m = np.asarray(matrix)
    g = m.conj().T @ m - np.eye(m.shape[0])
    return float(np.linalg.norm(g, 2))


# ---------------------------------------------------------------------------
# coupled-channel log-derivative marching
# ---------------------------------------------------------------------------

def coupling_norms(scenario: Scenario, x: np.ndarray) -> np.ndarray:
    a = scenario.a_eff(x)
    v = scenario.v_eff(x)
    return np.linalg.norm(a, axis=(1, 2)) + np.linalg.norm(v, axis=(1, 2))


def matching_radius(scenario: Scenario, tol: float = 1e-8) -> float:
    """Smallest radius beyond which the two-sided coupling norm stays < tol."""
    x_edge = scenario.discretization.x_max * (
        1.0 - scenario.discretization.absorber_fraction)
    r = np.linspace(0.0, x_edge, 600)
    tot = coupling_norms(scenario, r) + coupling_norms(scenario, -r)
    ok = tot < tol
    if not ok[-1]:
        raise MatchRadiusError(
            f"coupling norm stays above {tol} at radius {x_edge:.1f} "
            f"(value {tot[-1]:.3e}); long-range tail needs the WKB path")
    idx = len(ok) - 1
    while idx > 0 and ok[idx - 1]:
        idx -= 1
    return float(max(r[idx], 3.0))


@dataclass
class LogDerivativeSolution:
    lam: float
    x_match: float
    y_end: np.ndarray          # K x K log-derivative at +x_match
    backward: np.ndarray       # u(-x_match) = backward @ u(+x_match)
    step: float
    n_sectors: int


def _sector_funcs(w_vals, u, h):
    """tanh/cosh propagator blocks from the eigen-decomposition of W.

    Returns (U1, U2, SE, CO) = (sqrt(W) tanh, tanh / sqrt(W), sech, cosh) of
    sqrt(W) h.  The log-derivative update carries a cosh conjugation,
    Y(b) = CO [U1 + Y(a)][I + U2 Y(a)]^{-1} SE, which only drops out when the
    channels commute.
    """
    sq = np.sqrt(w_vals.astype(complex))
    arg = sq * h
    small = np.abs(arg) < 1e-8
    tanh = np.tanh(arg)
    safe_sq = np.where(small, 1.0, sq)
    u1 = np.where(small, w_vals * h, sq * tanh)
    u2 = np.where(small, h, tanh / safe_sq)
    cosh = np.cosh(arg)
    mk = lambda d: (u * d) @ u.conj().T
    return mk(u1), mk(u2), mk(1.0 / cosh), mk(cosh)


def solve_coupled_channel(scenario: Scenario, lam: float,
                          step: float | None = None,
                          x_match: float | None = None,
                          match_tol: float = 1e-8,
                          mirror: bool = False) -> LogDerivativeSolution:
    """Riccati log-derivative march across [-x_match, x_match].

    The log-derivative Y = (I + A_eff) u' u^{-1} starts on the left-outgoing
    subspace and is propagated with constant-midpoint sectors in the
    tanh/sech form, which saturates instead of overflowing on evanescent
    channels.  The bounded backward value map u(-X) <- u(+X) is accumulated
    alongside for the transmission amplitudes.
    """
    taus = scenario.thresholds
    k = taus.size
    chans = open_channels(lam, taus, scenario.threshold_window)
    check_channel_buffer(scenario, chans)
    if x_match is None:
        x_match = matching_radius(scenario, match_tol)
    if step is None:
        kmax = math.sqrt(max(lam - taus.min(), 1e-6))
        step = min(0.02 / max(kmax, 1.0), 0.02)
    # sector edges aligned to envelope discontinuities keep O(h^2) intact
    brk = [b for b in scenario.breakpoints() if -x_match < b < x_match]
    edges = [-x_match] + brk + [x_match]
    xs_list, hs_list = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nseg = max(int(math.ceil((b - a) / step)), 2)
        hseg = (b - a) / nseg
        xs_list.append(a + hseg * (np.arange(nseg) + 0.5))
        hs_list.append(np.full(nseg, hseg))
    xs = np.concatenate(xs_list)
    hs = np.concatenate(hs_list)
    n_sectors = xs.size
    if mirror:
        xs = -xs[::-1]
        hs = hs[::-1]
        # marching still runs left to right over the mirrored profile
        a_mid = scenario.a_eff(-xs)
        v_mid = scenario.v_eff(-xs)
    else:
        a_mid = scenario.a_eff(xs)
        v_mid = scenario.v_eff(xs)
    eye = np.eye(k)
    tau_mat = np.diag(taus).astype(complex)
    diag = np.zeros(k, dtype=complex)
    diag[chans.open_indices] = -1j * chans.momenta
    diag[chans.closed_indices] = chans.evanescent_rates
    y = np.diag(diag)
    backward = np.eye(k, dtype=complex)
    for i in range(n_sectors):
        q = tau_mat + v_mid[i] - lam * eye
        if np.abs(a_mid[i]).max() > 1e-14:
            b = eye + a_mid[i]
            bv, bu = np.linalg.eigh(b)
            b_half = (bu * np.sqrt(bv)) @ bu.conj().T
            b_ihalf = (bu * (1.0 / np.sqrt(bv))) @ bu.conj().T
            w_t = b_ihalf @ q @ b_ihalf
            yz = b_ihalf @ y @ b_ihalf
        else:
            b_half = b_ihalf = None
            w_t = q
            yz = y
        w_t = 0.5 * (w_t + w_t.conj().T)
        wv, wu = np.linalg.eigh(w_t)
        u1, u2, se, co = _sector_funcs(wv, wu, hs[i])
        lhs = eye + u2 @ yz
        y_new = co @ ((u1 + yz) @ np.linalg.inv(lhs)) @ se
        bz = np.linalg.solve(lhs, se)     # z(a) = (I + U2 Yz)^-1 sech z(b)
        if b_half is not None:
            y = b_half @ y_new @ b_half
            bstep = b_ihalf @ bz @ b_half
        else:
            y = y_new
            bstep = bz
        backward = backward @ bstep
    return LogDerivativeSolution(lam, x_match, y, backward, float(hs.max()),
                                 n_sectors)


def check_channel_buffer(scenario: Scenario, chans: ChannelSet):
    """Retained modes must cover the closed-channel buffer above lam."""
    taus = scenario.thresholds
    full = scenario.spectrum.thresholds
    gap = local_gap(full, chans.lam)
    lam_buf = chans.lam + scenario.band_buffer_gaps * gap
    needed = int(np.sum(full <= lam_buf))
    if needed > taus.size and full.size > taus.size:
        raise ThresholdProximityError(
            f"retained channel count {taus.size} does not cover the "
            f"closed-channel buffer up to {lam_buf:.3f} "
            f"(needs {needed}); raise n_channels")


def _wkb_phases(scenario: Scenario, chans: ChannelSet, x_match: float) -> np.ndarray:
    """One WKB phase per open channel over [x_match, x_max] (diagonal tails)."""
    x_out = np.linspace(x_match, scenario.discretization.x_max, 400)
    v = scenario.v_eff(x_out)
    a = scenario.a_eff(x_out)
    phases = np.zeros(chans.n_open)
    for i, j in enumerate(chans.open_indices):
        vloc = v[:, j, j].real
        aloc = a[:, j, j].real
        k_loc = np.sqrt(np.maximum(
            (chans.lam - chans.thresholds[j] - vloc) / (1.0 + aloc), 1e-12))
        phases[i] = np.trapezoid(k_loc - chans.momenta[i], x_out)
    return phases


def _is_symmetric(scenario: Scenario) -> bool:
    x = scenario.x
    a = scenario.a_eff(x)
    v = scenario.v_eff(x)
    return (np.allclose(a, a[::-1], atol=1e-14)
            and np.allclose(v, v[::-1], atol=1e-14))


def smatrix_ode(scenario: Scenario, lam: float, step: float | None = None,
                match_tol: float = 1e-8, richardson: bool = True) -> SMatrix:
    """S(lambda) from interior marching matched to flux-normalized waves."""
    if scenario.realization == JUNCTION:
        return smatrix_junction(scenario, lam)
    taus = scenario.thresholds
    k = taus.size
    chans = open_channels(lam, taus, scenario.threshold_window)
    m = chans.n_open
    long_range = scenario.mu <= 2.0
    used_wkb = False
    try:
        x_match = matching_radius(scenario, match_tol)
        wkb = np.zeros(m)
    except MatchRadiusError:
        if not long_range:
            raise
        x_match = scenario.discretization.x_max * (
            1.0 - scenario.discretization.absorber_fraction)
        wkb = _wkb_phases(scenario, chans, x_match)
        used_wkb = True
    if step is None:
        kmax = math.sqrt(max(lam - taus.min(), 1e-6))
        step = min(0.02 / max(kmax, 1.0), 0.02)

    def assemble(step_used: float) -> np.ndarray:
        def one_side(mirror: bool):
            sol = solve_coupled_channel(scenario, lam, step=step_used,
                                        x_match=x_match, match_tol=match_tol,
                                        mirror=mirror)
            y, p, xm = sol.y_end, sol.backward, sol.x_match
            nu = flux_weight(lam, taus[chans.open_indices])
            kap = chans.evanescent_rates
            f_in = np.zeros((k, m), dtype=complex)
            df_in = np.zeros((k, m), dtype=complex)
            for i, j in enumerate(chans.open_indices):
                f_in[j, i] = nu[i] * np.exp(-1j * chans.momenta[i] * xm)
                df_in[j, i] = -1j * chans.momenta[i] * f_in[j, i]
            f_out = np.zeros((k, k), dtype=complex)
            df_out = np.zeros((k, k), dtype=complex)
            for i, j in enumerate(chans.open_indices):
                f_out[j, j] = nu[i] * np.exp(1j * chans.momenta[i] * xm)
                df_out[j, j] = 1j * chans.momenta[i] * f_out[j, j]
            for i, j in enumerate(chans.closed_indices):
                f_out[j, j] = 1.0
                df_out[j, j] = -kap[i]
            lhs = df_out - y @ f_out
            cond = np.linalg.cond(lhs)
            refl = np.linalg.solve(lhs, -(df_in - y @ f_in))
            u_right = f_in + f_out @ refl
            u_left = p @ u_right
            g_out = np.zeros(k, dtype=complex)
            for i, j in enumerate(chans.open_indices):
                g_out[j] = nu[i] * np.exp(1j * chans.momenta[i] * xm)
            for i, j in enumerate(chans.closed_indices):
                g_out[j] = 1.0
            trans = u_left / g_out[:, None]
            return refl[chans.open_indices, :], trans[chans.open_indices, :], cond

        r, t, cond = one_side(False)
        if _is_symmetric(scenario):
            rp, tp = r, t
        else:
            rp, tp, cond2 = one_side(True)
            cond = max(cond, cond2)
        s = np.zeros((2 * m, 2 * m), dtype=complex)
        s[:m, :m] = t
        s[m:, :m] = r
        s[:m, m:] = rp
        s[m:, m:] = tp
        return s, cond

    s_c, cond = assemble(step)
    meta = {"step": step, "x_match": x_match, "wkb": used_wkb,
            "condition": cond}
    if richardson:
        s_f, cond_f = assemble(step / 2)
        meta["richardson_gap"] = float(np.max(np.abs(s_f - s_c)))
        meta["condition"] = max(cond, cond_f)
        meta["step"] = step / 2
        s_c = (4.0 * s_f - s_c) / 3.0
    if used_wkb:
        ph = np.exp(1j * np.concatenate([wkb, wkb]))
        s_c = np.diag(ph) @ s_c @ np.diag(ph)
    if meta["condition"] > 1e12:
        meta["flag"] = "ill-conditioned-matching"
    return SMatrix(lam, chans.open_indices, s_c, "ode",
                   unitarity_defect(s_c), meta)


# ---------------------------------------------------------------------------
# junction-core realization: direct mode-matching solve
# ---------------------------------------------------------------------------

def smatrix_junction(scenario: Scenario, lam: float) -> SMatrix:
    """Mode matching with discrete-dispersion waves on each half-line end.

    The S-matrix is indexed by (end, open mode); a free two-end junction with
    a transparent core transmits, so the free pattern is the end swap.
    """
    from .hamiltonian import _assemble_junction

    h = _assemble_junction(scenario)
    taus = scenario.thresholds
    chans = open_channels(lam, taus, scenario.threshold_window)
    k = taus.size
    m = chans.n_open
    nh = h.meta["half_nodes"]
    n_ends = h.meta["n_ends"]
    d_core = h.meta["core_dim"]
    dx = grid_of(scenario).dx
    kd = np.zeros(k)
    kapd = np.zeros(k)
    vd = np.ones(k)
    kd[chans.open_indices] = discrete_momentum(lam, taus[chans.open_indices], dx)
    vd[chans.open_indices] = discrete_group_velocity(
        lam, taus[chans.open_indices], dx)
    kapd[chans.closed_indices] = np.arccosh(
        1.0 + (taus[chans.closed_indices] - lam) * dx * dx / 2.0) / dx
    # matching node: beyond the sampled coupling support, inside the grid
    xh = scenario.x[scenario.x >= 0]
    tail = coupling_norms(scenario, xh) < 1e-10
    if not tail[-3]:
        raise MatchRadiusError("junction coupling has not decayed on the ends")
    n_c = int(np.argmax(tail)) + 2
    n_c = min(max(n_c, 8), nh - 4)

    def wave_out(j, node):
        x = node * dx
        if taus[j] <= lam:
            return vd[j] ** -0.5 * np.exp(1j * kd[j] * x)
        return np.exp(-kapd[j] * (x - n_c * dx))

    def wave_in(j, node):
        return vd[j] ** -0.5 * np.exp(-1j * kd[j] * node * dx)

    a_mat = (h.matrix - lam * sp.eye(h.dim)).tocsr()
    unk, ans = [], []
    for e in range(n_ends):
        base = e * nh * k
        unk.extend(range(base, base + n_c * k))
        # only the first two ansatz layers enter the kept equations
        ans.extend(range(base + n_c * k, base + (n_c + 2) * k))
    core0 = n_ends * nh * k
    unk.extend(range(core0, core0 + d_core))
    rows = []
    for e in range(n_ends):
        base = e * nh * k
        rows.extend(range(base, base + (n_c + 1) * k))
    rows.extend(range(core0, core0 + d_core))
    unk = np.array(unk)
    ans = np.array(ans)
    rows = np.array(rows)
    a_ru = a_mat[rows][:, unk]
    a_ra = a_mat[rows][:, ans].toarray()

    n_out = n_ends * k
    w_out = np.zeros((ans.size, n_out), dtype=complex)
    for ci in range(n_out):
        e, j = divmod(ci, k)
        for ai, col in enumerate(ans):
            ee = col // (nh * k)
            node = (col % (nh * k)) // k
            cc = col % k
            if ee == e and cc == j:
                w_out[ai, ci] = wave_out(j, node)
    big = sp.bmat([[a_ru, sp.csr_matrix(a_ra @ w_out)]], format="csc")
    lu = spla.splu(big)

    s_mat = np.zeros((n_ends * m, n_ends * m), dtype=complex)
    for col_i in range(n_ends * m):
        e_in, i_local = divmod(col_i, m)
        j_in = chans.open_indices[i_local]
        w_in = np.zeros(ans.size, dtype=complex)
        for ai, col in enumerate(ans):
            ee = col // (nh * k)
            node = (col % (nh * k)) // k
            cc = col % k
            if ee == e_in and cc == j_in:
                w_in[ai] = wave_in(j_in, node)
        sol = lu.solve(-(a_ra @ w_in))
        b = sol[unk.size:]
        for e in range(n_ends):
            for i2, j2 in enumerate(chans.open_indices):
                s_mat[e * m + i2, col_i] = b[e * k + j2]
    return SMatrix(lam, chans.open_indices, s_mat, "ode",
                   unitarity_defect(s_mat),
                   {"junction": True, "ends": n_ends, "match_node": n_c})


# ---------------------------------------------------------------------------
# stationary formula
# ---------------------------------------------------------------------------

def transparent_resolvent_matrix(h: DiscreteOperator, scenario: Scenario,
                                 lam: float, eps: float) -> sp.spmatrix:
    """(H - lam - i eps) with exact discrete outgoing closures at both edges.

    Outgoing waves satisfy psi(edge +/- 1) = exp(i k~ dx) psi(edge) per
    channel, with k~ from the grid dispersion at the complex energy; this
    removes the truncation reflection that a soft absorber leaves behind.
    """
    taus = scenario.thresholds
    k = taus.size
    n = h.grid.n
    dx = h.grid.dx
    edge_x = h.grid.x[[0, -1]]
    if np.max(coupling_norms(scenario, edge_x)) > 1e-10:
        raise MatchRadiusError("perturbation has not decayed at the grid edge; "
                               "transparent closure unavailable")
    z = lam + 1j * eps
    mu = np.exp(1j * np.lib.scimath.arccos(1.0 - (z - taus) * dx * dx / 2.0))
    if np.any(mu.imag < -1e-12) or np.any(np.abs(mu) > 1.0 + 1e-12):
        mu = np.where(np.abs(mu) > 1.0, 1.0 / mu, mu)
    rows = np.concatenate([np.arange(k), (n - 1) * k + np.arange(k)])
    vals = np.concatenate([mu, mu]) / dx**2
    corr = sp.csr_matrix((-vals, (rows, rows)), shape=(h.dim, h.dim))
    return (h.matrix + corr - z * sp.eye(h.dim)).tocsc()


def _neville_extrapolate(values: list[np.ndarray], eps: np.ndarray):
    """Polynomial-in-eps extrapolation to 0 with a Cauchy certificate."""
    tab = [v.copy() for v in values]
    n = len(tab)
    diffs = []
    for m in range(1, n):
        new = []
        for i in range(n - m):
            num = tab[i + 1] + (tab[i + 1] - tab[i]) * eps[i + m] / (eps[i] - eps[i + m])
            new.append(num)
        diffs.append(float(np.max(np.abs(new[-1] - tab[-1]))))
        tab = new
    return tab[0], np.array(diffs)


def default_weight_exponents(mu: float) -> tuple[float, float, float]:
    """Admissible (s1, s2, s3) in (1/2, mu - 1/2)."""
    s = 0.5 + 0.45 * min(mu - 1.0, 2.0)
    return (s, s, s)


def smatrix_stationary(scenario: Scenario, lam: float,
                       s_exponents: tuple[float, float, float] | None = None,
                       eps0: float | None = None, levels: int = 5,
                       h: DiscreteOperator | None = None,
                       h0: DiscreteOperator | None = None,
                       richardson: bool = True) -> SMatrix:
    """S(lambda) assembled from the weighted-defect data and the resolvent
    boundary value, independently of the marching route.

    The result is expressed in the same (direction, mode) fiber convention as
    smatrix_ode; plane waves carry the discrete dispersion momentum so the
    formula reproduces the S-matrix of the assembled grid operators, and one
    grid-halving Richardson step removes the leading dx^2 dispersion error.
    """
    if richardson:
        import dataclasses

        coarse = smatrix_stationary(scenario, lam, s_exponents, eps0, levels,
                                    h, h0, richardson=False)
        d = scenario.discretization
        fine_disc = type(d)(d.x_max, 2 * (d.n_nodes - 1) + 1,
                            d.absorber_fraction)
        fine_scen = dataclasses.replace(scenario, discretization=fine_disc)
        fine = smatrix_stationary(fine_scen, lam, s_exponents, eps0, levels,
                                  richardson=False)
        mat = (4.0 * fine.matrix - coarse.matrix) / 3.0
        meta = dict(fine.meta)
        meta["grid_richardson_gap"] = float(np.max(np.abs(fine.matrix - coarse.matrix)))
        return SMatrix(lam, fine.open_indices, mat, "stationary",
                       unitarity_defect(mat), meta)
    if scenario.realization != FULL_LINE:
        raise NonConvergedError("stationary formula implemented for the "
                                "full-line realization only")
    if scenario.mu <= 1.0:
        raise ThresholdProximityError(
            f"stationary formula needs mu > 1 (declared mu = {scenario.mu})")
    if s_exponents is None:
        s_exponents = default_weight_exponents(scenario.mu)
    s1, s2, s3 = s_exponents
    for s in s_exponents:
        if not 0.5 < s < scenario.mu - 0.5:
            raise ValueError(f"weight exponent {s} outside (1/2, mu-1/2)")
    grid = grid_of(scenario)
    taus = scenario.thresholds
    k = taus.size
    dx = grid.dx
    chans = open_channels(lam, taus, scenario.threshold_window)
    check_channel_buffer(scenario, chans)
    m = chans.n_open
    if m == 0:
        return SMatrix(lam, chans.open_indices, np.zeros((0, 0), complex),
                       "stationary")
    if eps0 is None:
        # slow channels need a proportionally finer epsilon schedule
        eps0 = float(min(0.05, 0.1 * np.min(chans.momenta) ** 2))
    if h is None:
        h = assemble_full(scenario)
    if h0 is None:
        h0 = assemble_free(grid, taus, bc=h.meta.get("bc", "dirichlet"))
    j_r = identification_matrix(scenario, "right")
    j_l = identification_matrix(scenario, "left")
    t_r = (h.matrix @ j_r - j_r @ h0.matrix).tocsr()
    t_l = (h.matrix @ j_l - j_l @ h0.matrix).tocsr()
    t_ops = {"R": t_r, "L": t_l}
    j_ops = {"R": j_r, "L": j_l}

    kd = discrete_momentum(lam, taus[chans.open_indices], dx)
    vd = discrete_group_velocity(lam, taus[chans.open_indices], dx)
    x = grid.x

    def plane(j_local: int, d: float) -> np.ndarray:
        vals = np.zeros((grid.n, k), dtype=complex)
        j = chans.open_indices[j_local]
        vals[:, j] = (2 * np.pi) ** -0.5 * vd[j_local] ** -0.5 * np.exp(
            1j * d * kd[j_local] * x)
        return vals.reshape(-1)

    # fiber labels per end: (E, j_local, d)
    dirs = (-1.0, 1.0)
    labels = [(e, jl, d) for e in ("R", "L") for jl in range(m) for d in dirs]
    n_lab = len(labels)
    p_vecs = {(jl, d): plane(jl, d) for jl in range(m) for d in dirs}
    w1 = phi_weight_operator(scenario, s1)
    w2 = phi_weight_operator(scenario, s2)
    w3 = phi_weight_operator(scenario, s3)
    w1_inv = phi_weight_operator(scenario, -s1)
    w2_inv = phi_weight_operator(scenario, -s2)
    w3_inv = phi_weight_operator(scenario, -s3)

    tp = {}           # T_E p vectors
    for (e, jl, d) in labels:
        tp[(e, jl, d)] = t_ops[e] @ p_vecs[(jl, d)]

    # term 1: -2 pi i < J_E' p', W1^-1 (W1 T_E p) >
    term1 = np.zeros((n_lab, n_lab), dtype=complex)
    for col, (e, jl, d) in enumerate(labels):
        vec = w1_inv @ (w1 @ tp[(e, jl, d)])
        for row, (e2, jl2, d2) in enumerate(labels):
            jp = j_ops[e2] @ p_vecs[(jl2, d2)]
            term1[row, col] = -2j * np.pi * dx * np.vdot(jp, vec)

    # term 2: +2 pi i < W2 T_E' p', W2^-1 R(lam + i0) W3^-1 (W3 T_E p) >
    cols_in = [i for i, (e, jl, d) in enumerate(labels) if d < 0]
    rhs = np.stack([w3_inv @ (w3 @ tp[labels[i][0], labels[i][1], labels[i][2]])
                    for i in cols_in], axis=1)
    eps = eps0 * 0.5 ** np.arange(levels)
    mats = []
    for e_val in eps:
        shifted = transparent_resolvent_matrix(h, scenario, lam, e_val)
        lu = spla.splu(shifted)
        sol = lu.solve(rhs)
        m2 = np.zeros((n_lab, len(cols_in)), dtype=complex)
        for row, (e2, jl2, d2) in enumerate(labels):
            lhsv = w2_inv @ (w2 @ tp[(e2, jl2, d2)])
            m2[row] = 2j * np.pi * dx * (np.conj(lhsv) @ sol)
        mats.append(m2)
    term2, cert = _neville_extrapolate(mats, eps)
    converged = bool(cert.size and cert[-1] <= cert[0] + 1e-14)

    full = term1[:, cols_in] + term2
    # fold to the (direction, mode) convention shared with smatrix_ode
    s_mat = np.zeros((2 * m, 2 * m), dtype=complex)
    leak = 0.0
    for row, (e2, jl2, d2) in enumerate(labels):
        for ci, col in enumerate(cols_in):
            e, jl, d = labels[col]
            c_idx = jl if e == "R" else m + jl
            if d2 > 0:
                r_idx = m + jl2 if e2 == "R" else jl2
                s_mat[r_idx, c_idx] = full[row, ci]
            else:
                leak = max(leak, abs(full[row, ci]))
    meta = {"s_exponents": s_exponents, "eps0": eps0, "levels": levels,
            "extrapolation_certificate": cert.tolist(),
            "incoming_row_leak": leak, "converged": converged}
    if not converged:
        meta["flag"] = "non-converged-resolvent-extrapolation"
    return SMatrix(lam, chans.open_indices, s_mat, "stationary",
                   unitarity_defect(s_mat), meta)


# ---------------------------------------------------------------------------
# S-matrix grids and lambda-regularity
# ---------------------------------------------------------------------------

@dataclass
class SMatrixGrid:
    lam_values: np.ndarray
    smatrices: list
    order: int
    derivatives: np.ndarray | None     # k-th lambda-derivative per sample
    holder_exponent: float             # two-scale exponent of the k-th derivative
    defects: np.ndarray

    def derivative_at(self, lam: float) -> np.ndarray:
        idx = int(np.argmin(np.abs(self.lam_values - lam)))
        return self.derivatives[idx]


def smatrix_grid(scenario: Scenario, lam_values, order: int = 0,
                 method: str = "ode", **kwargs) -> SMatrixGrid:
    """Sampled S(lambda) inside one band with finite-difference derivatives.

    The samples must not straddle a threshold, and the declared decay must
    satisfy mu > order + 1 for the order-th derivative claim.
    """
    from .fitting import holder_exponent

    lam_values = np.sort(np.asarray(lam_values, dtype=float))
    taus = scenario.spectrum.thresholds
    inside = (taus > lam_values[0]) & (taus < lam_values[-1])
    if np.any(inside):
        raise ThresholdProximityError(
            f"samples straddle the threshold(s) {taus[inside]}")
    if order > 0 and scenario.mu <= order + 1:
        raise ValueError(
            f"k-th derivative claim needs mu > {order + 1}; declared "
            f"mu = {scenario.mu}")
    compute = smatrix_ode if method == "ode" else smatrix_stationary
    mats = [compute(scenario, float(lam), **kwargs) for lam in lam_values]
    m0 = mats[0].open_indices
    for s in mats:
        if not np.array_equal(s.open_indices, m0):
            raise ThresholdProximityError("open-channel set changed inside "
                                          "the sample band")
    stack = np.array([s.matrix for s in mats])
    deriv = stack
    for _ in range(order):
        deriv = np.gradient(deriv, lam_values, axis=0)
    alpha = holder_exponent(lam_values, deriv)
    return SMatrixGrid(lam_values, mats, order,
                       deriv if order > 0 else stack,
                       float(alpha),
                       np.array([s.defect for s in mats]))
