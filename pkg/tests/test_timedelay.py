import numpy as np
import pytest

from cylscat.channels import (free_evolve, grid_dispersion, grid_of,
                              momentum_sign_mass, to_representation)
from cylscat.cross_section import CrossSectionSpec, circle
from cylscat.errors import NonConvergedError, ThresholdProximityError
from cylscat.fitting import decay_power
from cylscat.hamiltonian import assemble_full, flatten
from cylscat.scenario import Discretization, Scenario, gaussian_well
from cylscat.timedelay import (CrankNicolson, build_incoming_state,
                               propagate_full, scattering_state, sojourn_free,
                               sojourn_full, symmetrized_time_delay,
                               wave_operator_cauchy_probe)


@pytest.fixture(scope="module")
def big_free(circle_section):
    return Scenario(cross_section=circle_section, blocks=(),
                    mu_long=9.0, mu_short=9.0,
                    discretization=Discretization(240.0, 9601),
                    n_channels=1)


# ---------------------------------------------------------------------------
# incoming states
# ---------------------------------------------------------------------------

def test_incoming_state_left_moving(big_free):
    pkt = build_incoming_state(big_free, 2.0, 0.5)
    assert momentum_sign_mass(pkt, "+") <= 1e-10
    assert pkt.norm() == pytest.approx(1.0, abs=1e-12)


def test_incoming_state_d3_certificate(big_free):
    pkt = build_incoming_state(big_free, 2.0, 0.9, profile="gauss-bump")
    assert pkt.flags["d3_certified"]
    assert pkt.flags["d3_refinement_drift"] < 0.01


def test_incoming_state_linearity(big_free):
    # synthesis is linear: two disjoint bumps equal the sum of the packets
    from cylscat.channels import synthesize_from_fiber
    from cylscat.timedelay import smooth_bump

    taus = big_free.thresholds
    grid = grid_of(big_free)
    disp = grid_dispersion(grid)

    def bump_at(center):
        def fib(lam):
            out = np.zeros((1, 2), dtype=complex)
            out[0, 0] = smooth_bump(np.array([(lam - center) / 0.25]))[0]
            return out
        return fib

    def both(lam):
        return bump_at(1.7)(lam) + bump_at(2.6)(lam)

    a = synthesize_from_fiber(grid, taus, bump_at(1.7), 1, disp)
    b = synthesize_from_fiber(grid, taus, bump_at(2.6), 1, disp)
    direct = synthesize_from_fiber(grid, taus, both, 1, disp)
    gap = np.linalg.norm(direct.values - a.values - b.values)
    assert gap <= 1e-10 * np.linalg.norm(direct.values)


def test_incoming_state_rejects_threshold_contact(free_scenario):
    # two retained modes: the band [0.7, 1.7] touches the threshold at 1
    with pytest.raises(ThresholdProximityError):
        build_incoming_state(free_scenario, 1.2, 0.5)


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------

def test_crank_nicolson_matches_free_evolution(circle_section):
    scen = Scenario(cross_section=circle_section, blocks=(),
                    mu_long=9.0, mu_short=9.0,
                    discretization=Discretization(60.0, 8001),
                    n_channels=1)
    from cylscat.channels import gaussian_packet

    grid = grid_of(scen)
    pkt = gaussian_packet(grid, k0=0.6, x0=-8.0, width=5.0)
    h = assemble_full(scen)
    out, cert = propagate_full(h, pkt, 10.0, dt=0.0015)
    # exact propagator of the same discrete generator
    exact = free_evolve(pkt, 10.0, scen.thresholds, grid_dispersion(grid))
    err = np.linalg.norm(out.values - exact.values) * np.sqrt(grid.dx)
    assert err < 1e-6
    # unitary stepping: total drift over ~6700 steps stays at roundoff
    assert cert["norm_drift"] < 1e-11


def test_crank_nicolson_norm_drift_long_run(big_free):
    from cylscat.channels import gaussian_packet

    grid = grid_of(big_free)
    pkt = gaussian_packet(grid, k0=1.0, x0=0.0, width=3.0)
    h = assemble_full(big_free)
    cn = CrankNicolson(h, 0.01)
    flat = flatten(pkt.values).astype(complex)
    n0 = np.linalg.norm(flat)
    for _ in range(10_000):
        flat = cn.step(flat)
    assert abs(np.linalg.norm(flat) - n0) / n0 < 1e-8


def test_crank_nicolson_time_reversal(big_free):
    from cylscat.channels import gaussian_packet

    grid = grid_of(big_free)
    pkt = gaussian_packet(grid, k0=1.0, x0=0.0, width=3.0)
    h = assemble_full(big_free)
    cn = CrankNicolson(h, 0.01)
    fwd = cn.evolve(pkt.values, 4.0)
    back = cn.evolve(fwd, -4.0)
    assert np.linalg.norm(back - pkt.values) * np.sqrt(grid.dx) < 1e-8


# ---------------------------------------------------------------------------
# sojourn times
# ---------------------------------------------------------------------------

def test_sojourn_free_ballistic_scaling(big_free):
    pkt = build_incoming_state(big_free, 2.0, 0.6, profile="gauss-bump")
    r = np.array([20.0, 40.0])
    t_r0, cert = sojourn_free(pkt, r, big_free.thresholds)
    k_bar = np.sqrt(2.0)
    # T_r ~ 2 r / (2 k) per unit norm at large r
    assert t_r0[1] / t_r0[0] == pytest.approx(2.0, abs=0.1)
    assert t_r0[1] == pytest.approx(2 * r[1] / (2 * k_bar), rel=0.02)


def test_sojourn_free_zero_packet(big_free):
    from cylscat.channels import WavePacket

    grid = grid_of(big_free)
    pkt = WavePacket(grid, np.zeros((grid.n, 1), dtype=complex), "position")
    t_r0, cert = sojourn_free(pkt, np.array([5.0]), big_free.thresholds,
                              t_horizon=10.0)
    assert t_r0[0] == 0.0


def test_sojourn_free_horizon_robust(big_free):
    pkt = build_incoming_state(big_free, 2.0, 0.6, profile="gauss-bump")
    r = np.array([10.0])
    base, _ = sojourn_free(pkt, r, big_free.thresholds, t_horizon=60.0)
    double, _ = sojourn_free(pkt, r, big_free.thresholds, t_horizon=120.0)
    assert abs(double[0] - base[0]) / base[0] < 1e-3


# ---------------------------------------------------------------------------
# scattering states / wave operators
# ---------------------------------------------------------------------------

def test_scattering_state_free_is_identity(big_free):
    pkt = build_incoming_state(big_free, 2.0, 0.9, profile="gauss-bump")
    h = assemble_full(big_free)
    psi, rec = scattering_state(big_free, pkt, h)
    assert rec.converged
    assert abs(rec.norm_ratio - 1.0) <= 1e-4
    gap = np.linalg.norm(psi.values - pkt.values) * np.sqrt(grid_of(big_free).dx)
    assert gap < 1e-3


def test_scattering_state_rejects_outgoing(big_free):
    pkt = build_incoming_state(big_free, 2.0, 0.5, certify=False)
    pos = to_representation(pkt, "position")
    # spatial reflection flips the momentum sign on the symmetric grid
    out = type(pos)(pos.grid, pos.values[::-1].copy(), "position", {})
    with pytest.raises(ValueError, match="left-moving"):
        scattering_state(big_free, out, assemble_full(big_free))


def test_wave_operator_vanishes_on_outgoing(circle_section):
    # right-movers escape the identification cutoff in the far past
    scen = Scenario(cross_section=circle_section, blocks=(),
                    mu_long=9.0, mu_short=9.0,
                    discretization=Discretization(160.0, 6401), n_channels=1)
    pkt = build_incoming_state(scen, 2.0, 0.6, profile="gauss-bump",
                               certify=False)
    pos = to_representation(pkt, "position")
    flipped = type(pos)(pos.grid, pos.values[::-1].copy(), "position", {})
    h = assemble_full(scen)
    dt = 0.015
    cn = CrankNicolson(h, dt)
    from cylscat.scenario import apply_J

    t0 = -30.0
    disp = grid_dispersion(grid_of(scen))
    ev = free_evolve(flipped, t0, scen.thresholds, disp, cayley_dt=dt)
    seed = apply_J(scen, to_representation(ev, "position").values)
    out = cn.evolve(seed, -t0)
    norm = np.linalg.norm(out) * np.sqrt(grid_of(scen).dx)
    assert norm <= 1e-3


# ---------------------------------------------------------------------------
# full sojourns and the delay report
# ---------------------------------------------------------------------------

def test_sojourn_full_free_matches_reference(big_free):
    pkt = build_incoming_state(big_free, 2.0, 0.9, profile="gauss-bump")
    h = assemble_full(big_free)
    psi, rec = scattering_state(big_free, pkt, h, dt=0.0125)
    r = np.array([50.0, 100.0])
    t_r1, t_2, cert = sojourn_full(big_free, psi, r, h, dt_step=0.0125)
    t_r0, _ = sojourn_free(pkt, r, big_free.thresholds,
                           dispersion=grid_dispersion(grid_of(big_free)),
                           cayley_dt=0.0125)
    assert np.all(t_r1 >= 0) and t_2 >= 0
    # exact free identity: the slab weight excludes exactly the core dwell
    assert np.max(np.abs(t_r1 + t_2 - t_r0) / t_r0) < 2e-3
    # at large slabs the core dwell is a small fraction
    assert abs(t_r1[-1] - t_r0[-1]) / t_r0[-1] < 0.02
    # T2 counts the dwell in the compact region of the free packet
    w_core = 1.0 - big_free.jj_star_weight()
    from cylscat.channels import free_evolve as fe

    ts = np.arange(-40.0, 40.0, 0.2)
    disp = grid_dispersion(grid_of(big_free))
    core = 0.0
    for t in ts:
        ev = fe(pkt, float(t), big_free.thresholds, disp, cayley_dt=0.0125)
        vals = to_representation(ev, "position").values
        core += np.sum(w_core * np.abs(vals[:, 0]) ** 2) \
            * grid_of(big_free).dx * 0.2
    assert t_2 == pytest.approx(core, rel=0.02)


def test_free_time_delay_vanishes(big_free):
    pkt = build_incoming_state(big_free, 2.0, 0.9, profile="gauss-bump")
    rep = symmetrized_time_delay(big_free, pkt, np.array([6.0, 8.0, 10.0, 12.0]))
    assert abs(rep.tau_extrapolated) <= 1e-3
    assert abs(rep.ew_value) <= 1e-6
    assert rep.ew_hermiticity_defect <= 1e-6


def test_time_delay_refuses_low_mu(circle_section):
    scen = Scenario(
        cross_section=circle_section,
        blocks=(gaussian_well(np.array([[1.0]]), amplitude=-0.5, width=1.0),),
        mu_long=2.0, mu_short=2.0,
        discretization=Discretization(160.0, 6401), n_channels=1)
    pkt = build_incoming_state(scen, 2.0, 0.5, certify=False)
    with pytest.raises(NonConvergedError, match="mu > 4"):
        symmetrized_time_delay(scen, pkt, np.array([6.0, 8.0, 10.0]))
