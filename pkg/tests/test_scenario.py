import numpy as np
import pytest

from cylscat.channels import grid_of
from cylscat.errors import EllipticityError
from cylscat.scenario import (Discretization, Scenario, apply_J, apply_J_star,
                              constant_block, cutoff_j, gaussian_well,
                              power_tail, validate_decay)
from cylscat.cross_section import CrossSectionSpec, circle


def test_cutoff_endpoint_values():
    assert cutoff_j(0.5) == 0.0
    assert cutoff_j(1.0) == 0.0
    assert cutoff_j(2.0) == 1.0
    assert cutoff_j(3.0) == 1.0
    assert cutoff_j(1.5) == pytest.approx(0.5, abs=1e-14)


def test_cutoff_monotone_in_range():
    x = np.linspace(-1, 4, 1001)
    j = cutoff_j(x)
    assert np.all(np.diff(j) >= -1e-15)
    assert j.min() >= 0.0 and j.max() <= 1.0


def _scenario(blocks, mu_long=9.0, mu_short=9.0, n=2001, x_max=40.0, k=1):
    return Scenario(cross_section=CrossSectionSpec.of(circle(1.0, 64)),
                    blocks=blocks, mu_long=mu_long, mu_short=mu_short,
                    discretization=Discretization(x_max, n), n_channels=k)


def test_decay_fit_power_tail():
    scen = _scenario((power_tail(np.array([[1.0]]), exponent=2.0,
                                 range_class="short"),), mu_short=2.0)
    rep = validate_decay(scen)
    zero_order = [f for f in rep.fits if f.order == 0][0]
    assert abs(zero_order.fitted_exponent - 2.0) <= 0.1
    assert rep.all_passed
    assert rep.admissible_scattering
    assert not rep.admissible_time_delay


def test_decay_zero_perturbation():
    rep = validate_decay(_scenario(()))
    assert rep.fits == []
    assert rep.admissible_time_delay


def test_decay_zero_block_reports_exact():
    blk = gaussian_well(np.array([[1.0]]), amplitude=0.0)
    rep = validate_decay(_scenario((blk,), mu_short=5.0))
    assert all("exactly decaying" in f.note for f in rep.fits)


def test_decay_constant_block_fails():
    scen = _scenario((constant_block(np.array([[1.0]]), amplitude=0.5),),
                     mu_long=1.0)
    rep = validate_decay(scen)
    zero_order = [f for f in rep.fits if f.order == 0][0]
    assert abs(zero_order.fitted_exponent) <= 0.05
    assert not zero_order.passed


def test_decay_rejects_non_hermitian_samples():
    blk = gaussian_well(np.array([[1.0, 0.2], [0.2, 0.5]]), amplitude=1.0)
    object.__setattr__(blk, "matrix", np.array([[1.0, 0.5], [0.2, 0.5]]))
    scen = _scenario((blk,), k=2)
    with pytest.raises(ValueError, match="node"):
        validate_decay(scen)


def test_decay_needs_tail_samples():
    scen = _scenario((), n=17, x_max=4.0)
    with pytest.raises(ValueError, match="8"):
        validate_decay(scen)


def _packet_at(scen, center, width=0.4):
    x = scen.x
    vals = np.exp(-((x - center) ** 2) / (2 * width ** 2)).astype(complex)
    return vals[:, None]


def test_apply_J_isometric_on_far_support(free_one_channel):
    scen = free_one_channel
    vals = _packet_at(scen, 4.0, 0.3)
    vals[np.abs(scen.x - 4.0) > 1.0] = 0.0     # hard support in [3, 5]
    out = apply_J(scen, vals)
    ratio = np.linalg.norm(out) / np.linalg.norm(vals)
    assert abs(ratio - 1.0) <= 1e-10


def test_apply_J_kills_left_support(free_one_channel):
    scen = free_one_channel
    vals = _packet_at(scen, -5.0, 1.0)
    vals[scen.x > 0.0] = 0.0
    assert np.max(np.abs(apply_J(scen, vals))) == 0.0


def test_apply_J_adjoint(free_one_channel):
    scen = free_one_channel
    rng = np.random.default_rng(0)
    n = scen.x.size
    phi = rng.standard_normal((n, 1)) + 1j * rng.standard_normal((n, 1))
    psi = rng.standard_normal((n, 1)) + 1j * rng.standard_normal((n, 1))
    dx = scen.dx
    for end in ("right", "left"):
        lhs = np.sum(np.conj(apply_J(scen, phi, end)) * psi) * dx
        rhs = np.sum(np.conj(phi) * apply_J_star(scen, psi, end)) * dx
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_jj_star_identity_far_out(free_one_channel):
    scen = free_one_channel
    w = scen.jj_star_weight()
    far = np.abs(scen.x) >= 2.0 + scen.dx
    assert np.max(np.abs(w[far] - 1.0)) == 0.0


def test_j_star_j_weight_matches_cutoff(free_one_channel):
    scen = free_one_channel
    # per-end J^*J - 1 = (j^2 - 1), supported left of 2
    w = scen.j_weight("right") ** 2
    expect = cutoff_j(scen.x) ** 2
    assert np.max(np.abs(w - expect)) == 0.0
    assert np.max(np.abs(w[scen.x >= 2.0] - 1.0)) == 0.0


def test_identification_norm_one(free_one_channel):
    # largest singular value of the diagonal map is max |weight| = 1
    w = free_one_channel.j_weight("right")
    assert abs(np.max(np.abs(w)) - 1.0) <= 1e-8


def test_ellipticity_guard():
    scen = _scenario((constant_block(np.array([[1.0]]), amplitude=-2.0),),
                     mu_long=0.0)
    with pytest.raises(EllipticityError):
        scen.check_ellipticity()


def test_block_table_round_trip(tmp_path):
    from cylscat.scenario import load_block_table

    x = np.linspace(-5, 5, 21)
    vals = np.zeros((21, 2, 2), dtype=complex)
    vals[:, 0, 0] = np.exp(-x ** 2)
    vals[:, 0, 1] = np.exp(-x ** 2) * (0.3 + 0.1j)
    vals[:, 1, 0] = np.conj(vals[:, 0, 1])
    rows = np.zeros((21, 9))
    rows[:, 0] = x
    flat = vals.reshape(21, 4)
    rows[:, 1::2] = flat.real
    rows[:, 2::2] = flat.imag
    path = tmp_path / "table.csv"
    np.savetxt(path, rows, delimiter=",")
    blk = load_block_table(path)
    got = blk.evaluate(np.array([0.0]), 2)[0]
    assert abs(got[0, 1] - (0.3 + 0.1j)) < 1e-12
    assert np.max(np.abs(got - got.conj().T)) < 1e-12
