import numpy as np
import pytest
import scipy.sparse as sp

from cylscat import hamiltonian as ham
from cylscat.channels import gaussian_packet, grid_of, to_representation
from cylscat.cross_section import CrossSectionSpec, circle
from cylscat.errors import ThresholdProximityError
from cylscat.fitting import decay_power, holder_exponent
from cylscat.scenario import (Discretization, Scenario, cutoff_j,
                              gaussian_well)
from cylscat.timedelay import CrankNicolson


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def test_free_periodic_annihilates_constants(free_one_channel):
    grid = grid_of(free_one_channel)
    h0 = ham.assemble_free(grid, free_one_channel.thresholds, bc="periodic")
    const = np.ones(h0.dim)
    assert np.max(np.abs(h0.matrix @ const)) == 0.0


def test_free_plane_wave_symbol(free_one_channel):
    grid = grid_of(free_one_channel)
    h0 = ham.assemble_free(grid, free_one_channel.thresholds, bc="periodic")
    n, dx = grid.n, grid.dx
    m = 17
    k = 2 * np.pi * m / (n * dx)
    pw = np.exp(1j * k * np.arange(n) * dx)
    symbol = (2 - 2 * np.cos(k * dx)) / dx ** 2
    assert np.max(np.abs(h0.matrix @ pw - symbol * pw)) < 1e-9


def test_hermiticity_defects(mixing_scenario):
    h = ham.assemble_full(mixing_scenario)
    a = ham.conjugate_operator(mixing_scenario)
    c = ham.commutator_form(h, a)
    assert h.hermiticity_defect() <= 1e-12 * np.abs(h.matrix.data).max()
    assert a.hermiticity_defect() <= 1e-12 * np.abs(a.matrix.data).max()
    assert c.hermiticity_defect() <= 1e-10 * max(np.abs(c.matrix.data).max(), 1)


def test_zero_perturbation_bit_identical(free_scenario):
    grid = grid_of(free_scenario)
    h = ham.assemble_full(free_scenario)
    h0 = ham.assemble_free(grid, free_scenario.thresholds)
    assert (h.matrix != h0.matrix).nnz == 0


def test_constant_well_binds(circle_section):
    scen = Scenario(cross_section=circle_section,
                    blocks=(gaussian_well(np.array([[1.0]]), amplitude=-2.0,
                                          width=1.0),),
                    mu_long=9.0, mu_short=6.0,
                    discretization=Discretization(30.0, 1501), n_channels=1)
    h = ham.assemble_full(scen)
    vals = np.sort(np.linalg.eigvalsh(h.matrix.toarray()))
    assert vals[0] < -0.5


# ---------------------------------------------------------------------------
# defect operator
# ---------------------------------------------------------------------------

def test_defect_zero_for_trivial_identification(free_one_channel):
    # degenerate config: cutoff identically one makes J the identity
    grid = grid_of(free_one_channel)
    h = ham.assemble_full(free_one_channel)
    h0 = ham.assemble_free(grid, free_one_channel.thresholds)
    ident = sp.eye(h.dim)
    t = h.matrix @ ident - ident @ h0.matrix
    assert np.max(np.abs(t.toarray())) == 0.0


def test_defect_annihilates_far_states(free_one_channel):
    t = ham.defect_operator(free_one_channel)
    pkt = gaussian_packet(grid_of(free_one_channel), k0=1.0, x0=15.0, width=1.0)
    vals = pkt.values.copy()
    vals[np.abs(grid_of(free_one_channel).x - 15.0) > 10.0] = 0.0
    out = t.matrix @ ham.flatten(vals)
    assert np.max(np.abs(out)) <= 1e-10


def test_defect_decay_under_free_flight(circle_section):
    from cylscat.channels import free_evolve, grid_dispersion
    from cylscat.scenario import barrier
    from cylscat.timedelay import build_incoming_state

    scen = Scenario(
        cross_section=circle_section,
        blocks=(barrier(np.array([[1.0]]), left=-0.5, right=0.5,
                        amplitude=1.0),),
        mu_long=9.0, mu_short=2.0,
        discretization=Discretization(120.0, 6001), n_channels=1)
    grid = grid_of(scen)
    t = ham.defect_operator(scen)
    # bump-profile packet: polynomial-weight regularity, measurable tails
    pkt = build_incoming_state(scen, 2.0, 0.6, certify=False)
    disp = grid_dispersion(grid)
    times = np.array([6.0, 9.0, 13.5, 20.0, 30.0])
    norms = []
    for tt in times:
        ev = free_evolve(pkt, -tt, scen.thresholds, disp)
        out = t.matrix @ ham.flatten(to_representation(ev, "position").values)
        norms.append(np.linalg.norm(out) * np.sqrt(grid.dx))
    # envelope decays; the bump's oscillatory tails wobble around it
    power = decay_power(1.0 + times, np.array(norms))
    assert power >= 1.0          # declared mu = 2, packet-limited in truth


# ---------------------------------------------------------------------------
# conjugate operator and commutators
# ---------------------------------------------------------------------------

def _far_supported_packet(scen, x0=15.0, width=1.5, k0=0.8):
    grid = grid_of(scen)
    pkt = gaussian_packet(grid, k0=k0, x0=x0, width=width)
    vals = pkt.values.copy()
    vals[grid.x < 3.0] = 0.0
    return vals


def test_conjugate_matches_dilation_far_out(free_one_channel):
    scen = free_one_channel
    a = ham.conjugate_operator(scen)
    a0 = ham.dilation_generator(grid_of(scen), 1)
    v = ham.flatten(_far_supported_packet(scen))
    assert np.max(np.abs(a.matrix @ v - a0.matrix @ v)) <= 1e-10


def test_conjugate_expectation_vanishes_on_real_states(free_one_channel):
    scen = free_one_channel
    a = ham.conjugate_operator(scen)
    v = ham.flatten(np.abs(_far_supported_packet(scen, k0=0.0)))
    val = np.vdot(v, a.matrix @ v) * grid_of(scen).dx
    assert abs(val) <= 1e-12


def test_free_commutator_is_twice_kinetic(free_one_channel):
    scen = free_one_channel
    grid = grid_of(scen)
    h0 = ham.assemble_free(grid, scen.thresholds)
    a0 = ham.dilation_generator(grid, 1)
    c = ham.commutator_form(h0, a0)
    v = ham.flatten(_far_supported_packet(scen))
    lhs = np.vdot(v, c.matrix @ v).real * grid.dx
    d1 = ham._central_difference(grid.n, grid.dx, "dirichlet")
    pv = d1 @ v
    rhs = 2 * np.vdot(pv, pv).real * grid.dx
    assert abs(lhs - rhs) <= 1e-8 * max(rhs, 1.0)


def test_commutator_difference_local(free_one_channel):
    scen = free_one_channel
    grid = grid_of(scen)
    h = ham.assemble_full(scen)
    h0 = ham.assemble_free(grid, scen.thresholds)
    a = ham.conjugate_operator(scen)
    a0 = ham.dilation_generator(grid, 1)
    c = ham.commutator_form(h, a).matrix
    c0 = ham.commutator_form(h0, a0).matrix
    jr = ham.identification_matrix(scen, "right")
    jl = ham.identification_matrix(scen, "left")
    transported = jr @ c0 @ jr.getH() + jl @ c0 @ jl.getH()
    v = ham.flatten(_far_supported_packet(scen))
    assert np.max(np.abs((c - transported) @ v)) <= 1e-10


# ---------------------------------------------------------------------------
# Mourre window reports
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def mourre_scenario(circle_section):
    return Scenario(cross_section=circle_section, blocks=(),
                    mu_long=9.0, mu_short=9.0,
                    discretization=Discretization(60.0, 1501), n_channels=2)


def test_mourre_free_midband(mourre_scenario):
    h = ham.assemble_free(grid_of(mourre_scenario), mourre_scenario.thresholds)
    a = ham.conjugate_operator(mourre_scenario)
    rep = ham.mourre_compression(mourre_scenario, h, a, 0.5, 0.05)
    assert rep.dim > 0
    assert np.all(rep.eigenvalues >= 2 * (0.5 - 0.05) - 1e-6)
    assert rep.count_below == 0 and rep.verified


def test_mourre_free_above_second_threshold(mourre_scenario):
    h = ham.assemble_free(grid_of(mourre_scenario), mourre_scenario.thresholds)
    a = ham.conjugate_operator(mourre_scenario)
    rep = ham.mourre_compression(mourre_scenario, h, a, 1.3, 0.05)
    assert np.all(rep.eigenvalues >= 2 * (1.3 - 0.05 - 1.0) - 1e-6)


def test_mourre_perturbed_rank_budget(circle_section):
    def build(n):
        return Scenario(
            cross_section=circle_section,
            blocks=(gaussian_well(np.array([[1.0, 0.3], [0.3, 0.5]]),
                                  amplitude=-1.0, width=1.0),),
            mu_long=9.0, mu_short=6.0,
            discretization=Discretization(60.0, n), n_channels=2)

    counts = []
    for n in (1201, 2401):
        scen = build(n)
        h = ham.assemble_full(scen)
        a = ham.conjugate_operator(scen)
        rep = ham.mourre_compression(scen, h, a, 0.5, 0.05)
        assert rep.verified
        counts.append(rep.count_below)
    assert abs(counts[0] - counts[1]) <= 1     # stable under one refinement


def test_mourre_threshold_proximity_refused(mourre_scenario):
    h = ham.assemble_free(grid_of(mourre_scenario), mourre_scenario.thresholds)
    a = ham.conjugate_operator(mourre_scenario)
    with pytest.raises(ThresholdProximityError):
        ham.mourre_compression(mourre_scenario, h, a, 1.0 + 1e-9, 0.05)


def test_virial_identity_on_detected_eigenvector(well_scenario):
    h = ham.assemble_full(well_scenario)
    a = ham.conjugate_operator(well_scenario)
    vals, vecs = np.linalg.eigh(h.matrix.toarray())
    u = vecs[:, 0]
    c = ham.commutator_form(h, a)
    quad = abs(np.vdot(u, c.matrix @ u))
    bound = 1e-6 * np.abs(c.matrix.data).max()
    assert quad <= bound


# ---------------------------------------------------------------------------
# weighted resolvent probes
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def lap_scenario(circle_section):
    return Scenario(cross_section=circle_section, blocks=(),
                    mu_long=9.0, mu_short=9.0,
                    discretization=Discretization(120.0, 3001,
                                                  absorber_fraction=0.25),
                    n_channels=1)


def test_free_lap_converges_and_matches_kernel(lap_scenario):
    h = ham.assemble_free(grid_of(lap_scenario), lap_scenario.thresholds)
    probe = ham.weighted_resolvent_probe(lap_scenario, h, 0.5, 1.0,
                                         eps0=0.4, levels=6)
    assert probe.converged
    assert np.all(probe.cauchy_ratios < 1.0)
    # closed-form free kernel oracle on the same weight
    x = grid_of(lap_scenario).x
    k0 = np.sqrt(0.5)
    phi = lap_scenario.phi_weight()
    w = (1 + phi ** 2) ** -0.5
    kern = (w[:, None] * w[None, :]) * (
        -(1 / (2j * k0)) * np.exp(1j * k0 * np.abs(x[:, None] - x[None, :]))
    ) * grid_of(lap_scenario).dx
    oracle = np.linalg.norm(kern, 2)
    assert abs(probe.extrapolated - oracle) / oracle < 0.05


def test_lap_diverges_at_threshold(lap_scenario):
    h = ham.assemble_free(grid_of(lap_scenario), lap_scenario.thresholds)
    probe = ham.weighted_resolvent_probe(lap_scenario, h, 0.0, 1.0,
                                         eps0=0.4, levels=6)
    assert not probe.converged
    assert probe.norms[-1] > 2.0 * probe.norms[0]


def test_lap_second_order_matches_derivative(lap_scenario):
    scen = lap_scenario
    h = ham.assemble_free(grid_of(scen), scen.thresholds)
    lam, step, s = 0.5, 2e-3, 1.6
    w = ham.phi_weight_operator(scen, s)
    eps_list = 0.4 * 0.5 ** np.arange(6)
    rng = np.random.default_rng(1)
    v_batch = rng.standard_normal((h.dim, 8)) + 1j * rng.standard_normal((h.dim, 8))

    def boundary(lam_val, ell):
        import scipy.sparse.linalg as spla

        cap = ham.absorbing_potential(grid_of(scen), 1, 0.25, None,
                                      2 * np.sqrt(lam_val))
        outs = []
        for e in eps_list:
            shifted = (h.matrix - (lam_val + 1j * e) * sp.eye(h.dim)
                       - 1j * cap).tocsc()
            lu = spla.splu(shifted)
            out = w @ v_batch
            for _ in range(ell):
                out = lu.solve(out)
            outs.append(w @ out)
        tab = list(outs)
        es = list(eps_list)
        for m in range(1, len(tab)):
            for i in range(len(tab) - m):
                tab[i] = tab[i + 1] + (tab[i + 1] - tab[i]) * es[i + m] / (
                    es[i] - es[i + m])
        return tab[0]

    b2 = boundary(lam, 2)
    fd = (boundary(lam + step, 1) - boundary(lam - step, 1)) / (2 * step)
    rel = np.linalg.norm(fd - b2) / np.linalg.norm(b2)
    assert rel < 0.01


def test_lap_flagged_at_point_spectrum(well_scenario):
    h = ham.assemble_full(well_scenario)
    crit = ham.detect_eigenvalues(h, (-3.0, -1e-8), well_scenario)
    ev = float(crit.eigenvalues[0])
    probe = ham.weighted_resolvent_probe(well_scenario, h, ev, 1.0,
                                         eps0=0.4, levels=6)
    assert not probe.converged


def test_lap_holder_diagnostic(lap_scenario):
    h = ham.assemble_free(grid_of(lap_scenario), lap_scenario.thresholds)
    lams = np.linspace(0.35, 0.65, 16)
    limits = []
    for lam in lams:
        probe = ham.weighted_resolvent_probe(lap_scenario, h, float(lam), 1.0,
                                             eps0=0.4, levels=5)
        limits.append(probe.extrapolated)
    alpha = holder_exponent(lams, np.array(limits)[:, None])
    assert alpha >= 0.5


# ---------------------------------------------------------------------------
# eigenvalue detection
# ---------------------------------------------------------------------------

def test_no_spurious_negative_eigenvalues(free_one_channel):
    h = ham.assemble_full(free_one_channel)
    crit = ham.detect_eigenvalues(h, (-2.0, -1e-8), free_one_channel)
    assert crit.eigenvalues.size == 0


def test_attractive_well_detected(well_scenario):
    h = ham.assemble_full(well_scenario)
    crit = ham.detect_eigenvalues(h, (-3.0, -1e-8), well_scenario)
    assert crit.eigenvalues.size >= 1
    assert np.all(crit.eigenvalues < 0)


def test_interior_count_stable_under_refinement(circle_section):
    counts = []
    for n in (1201, 2401):
        scen = Scenario(
            cross_section=circle_section,
            blocks=(gaussian_well(np.array([[1.0]]), amplitude=-0.4,
                                  width=1.0),),
            mu_long=9.0, mu_short=6.0,
            discretization=Discretization(30.0, n), n_channels=1)
        h = ham.assemble_full(scen)
        crit = ham.detect_eigenvalues(h, (-1.0, -1e-8), scen)
        counts.append(crit.eigenvalues.size)
    assert counts[0] == counts[1]
