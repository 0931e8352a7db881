import math
import warnings

import numpy as np
import pytest

from scottshift.errors import DomainError
from scottshift.thomasfermi import (GAMMA_TF, TF_LENGTH, RadialDensity, electron_potential,
                                    enclosed_charge, exchange_hole, hellmann_density,
                                    hellmann_occupation, hellmann_support, max_angular_momentum,
                                    profile_csv, radial_charge, radial_grid, tf_minimize,
                                    tf_ode_solve, tf_potential)

# initial slope -chi'(0) of the universal neutral-atom profile (classical value)
TF_SLOPE = 1.588071022611375


@pytest.fixture(scope="module")
def ode():
    return tf_ode_solve()


@pytest.fixture(scope="module")
def mini():
    return tf_minimize()


def test_constants():
    assert GAMMA_TF == pytest.approx((3 * math.pi ** 2) ** (2 / 3) / 2, rel=1e-15)
    assert TF_LENGTH == pytest.approx(0.5 * (3 * math.pi / 4) ** (2 / 3), rel=1e-15)


def test_ode_slope_and_energy(ode):
    assert -ode.slope == pytest.approx(TF_SLOPE, abs=1e-8)
    # virial: E = (3/7) chi'(0) / b
    assert ode.energy == pytest.approx(-3 / 7 * TF_SLOPE / TF_LENGTH, rel=1e-8)
    assert ode.density.total_charge == pytest.approx(1.0, abs=5e-3)
    # the functional evaluated on the ODE density agrees with the closed form
    assert ode.details["functional_energy"] == pytest.approx(ode.energy, rel=2e-3)


def test_minimizer_matches_ode(ode, mini):
    assert mini.energy == pytest.approx(ode.energy, rel=2e-3)
    assert mini.density.total_charge == pytest.approx(1.0, abs=5e-3)
    d = mini.details
    # neutral-atom identities: K = -E, U_ee = -U_ne / 7
    assert d["virial_ratio"] == pytest.approx(1.0, abs=5e-3)
    assert d["repulsion_ratio"] == pytest.approx(1 / 7, rel=1e-2)
    assert np.all(mini.density.values >= 0)


def test_step_policies_agree(mini):
    fixed = tf_minimize(step_policy="fixed")
    assert fixed.energy == pytest.approx(mini.energy, rel=1e-5)


@pytest.mark.parametrize("Z", [2.0, 10.0])
def test_charge_scaling(Z, ode):
    sol = tf_minimize(Z=Z)
    assert sol.energy_per_z73 == pytest.approx(ode.energy, rel=2e-3)
    assert sol.density.total_charge == pytest.approx(Z, rel=5e-3)
    big = tf_ode_solve(Z=Z)
    assert big.energy == pytest.approx(ode.energy * Z ** (7 / 3), rel=1e-12)


def test_potential_shape(ode, mini):
    r = np.geomspace(1e-4, 30, 200)
    phi = tf_potential(ode, r)
    assert np.all(phi > 0) and np.all(np.diff(phi) < 0)
    assert np.all(phi <= 1 / r)
    # screening: phi r -> Z at the nucleus, phi -> 0 outside
    assert tf_potential(ode, 1e-7) * 1e-7 == pytest.approx(1.0, abs=1e-6)
    # approach to the 144 b^3 / r^4 asymptote from below
    big = np.geomspace(5, 40, 20)
    q = tf_potential(ode, big) * big ** 4 / (144 * TF_LENGTH ** 3)
    assert np.all(q < 1) and np.all(np.diff(q) > 0) and q[-1] > 0.5
    # the two routes agree away from the confinement radius
    mid = np.geomspace(1e-2, 10, 100)
    rel = np.abs(tf_potential(mini, mid) / tf_potential(ode, mid) - 1)
    assert np.max(rel) < 5e-3
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        tf_potential(ode, 500.0)
    assert w
    with pytest.raises(DomainError):
        tf_potential(ode, 0.0)


def test_potential_rescaling(ode):
    r = np.array([0.01, 0.3, 2.0])
    z = 50.0
    ref = z ** (4 / 3) * tf_potential(ode, r * z ** (1 / 3))
    assert np.allclose(tf_potential(ode, r, Z=z), ref, rtol=1e-14)


def test_electron_potential_at_nucleus(ode):
    # chi(x) = 1 - B x + (4/3) x^{3/2} + O(x^2), so Z/r - phi = (B - (4/3) x^{1/2}) / b
    for r in (2e-5, 1e-4):
        x = r / TF_LENGTH
        ref = (TF_SLOPE - 4 / 3 * math.sqrt(x)) / TF_LENGTH
        assert electron_potential(ode, r) == pytest.approx(ref, rel=2e-4)


def test_exchange_hole(ode):
    R, L = exchange_hole(ode, 0.0)
    assert enclosed_charge(ode, 0.0, R) == pytest.approx(0.5, abs=1e-9)
    # half the charge sits inside R, so its potential is at least 1/(2R) and
    # at most the full electronic potential
    assert 0.5 / R <= L <= electron_potential(ode, 1e-6)
    R1, L1 = exchange_hole(ode, 1.0)
    assert enclosed_charge(ode, 1.0, R1) == pytest.approx(0.5, abs=1e-9)
    assert 0.5 / R1 <= L1 <= electron_potential(ode, 1.0)
    qs = [enclosed_charge(ode, 0.5, x) for x in (0.1, 0.5, 1.0, 3.0)]
    assert all(a < b for a, b in zip(qs, qs[1:]))
    with pytest.raises(DomainError):
        exchange_hole(ode, -1.0)


def test_enclosed_charge_at_origin_matches_radial_charge(ode):
    r = ode.r_nodes
    R = 2.0
    keep = r <= R
    direct = radial_charge(r[keep], ode.density.values[keep])
    assert enclosed_charge(ode, 0.0, R) == pytest.approx(direct, rel=2e-3)


def test_hellmann_density_formula(ode):
    r = np.array([0.05, 0.5, 2.0])
    phi = tf_potential(ode, r)
    for l in (0, 1):
        ref = 2 * (2 * l + 1) / math.pi * np.sqrt(2 * np.maximum(phi - (l + .5) ** 2 / (2 * r * r), 0))
        assert np.allclose(hellmann_density(ode, l, r), ref, rtol=1e-14)
    # occupation factor (1 - a / sqrt(Z))^{2/3} multiplies phi
    z = 100.0
    a = 2.0
    nz = (1 - a / 10) ** (2 / 3)
    phz = tf_potential(ode, r, Z=z)
    ref = 2 / math.pi * np.sqrt(2 * np.maximum(nz * phz - 0.125 / r ** 2, 0))
    assert np.allclose(hellmann_density(ode, 0, r, a=a, Z=z), ref, rtol=1e-14)
    with pytest.raises(DomainError):
        hellmann_density(ode, 0, r, a=11.0, Z=z)
    with pytest.raises(DomainError):
        hellmann_density(ode, 0.5, r)


def test_hellmann_support_and_occupation(ode):
    z = 100.0
    sup = hellmann_support(ode, 1, Z=z)
    assert sup is not None
    r1, r2 = sup
    inside = np.linspace(r1, r2, 50)[1:-1]
    assert np.all(hellmann_density(ode, 1, inside, Z=z) > 0)
    assert hellmann_density(ode, 1, r1 * 0.9, Z=z) == 0
    assert hellmann_density(ode, 1, r2 * 1.1, Z=z) == 0
    occ = hellmann_occupation(ode, 1, Z=z)
    assert 0 < occ < math.inf
    assert hellmann_occupation(ode, 1, a=3.0, Z=z) < occ


@pytest.mark.parametrize("Z", [10.0, 100.0, 1000.0])
def test_max_angular_momentum(ode, Z):
    k = max_angular_momentum(ode, Z=Z)
    assert hellmann_support(ode, k, Z=Z) is None
    assert k == 0 or hellmann_support(ode, k - 1, Z=Z) is not None
    # the largest occupied l grows like Z^{1/3}
    assert 0.5 < k / Z ** (1 / 3) < 1.5


def test_profile_csv_and_density_validation(ode):
    text = profile_csv(ode)
    lines = text.split("\n")
    assert lines[0] == "r,rho,phi_TF" and len(lines) == ode.r_nodes.size + 2
    with pytest.raises(DomainError):
        RadialDensity.from_values([1.0, 0.5], [1.0, 1.0])
    with pytest.raises(DomainError):
        RadialDensity.from_values([0.5, 1.0], [1.0, -1.0])


def test_solver_validation():
    with pytest.raises(DomainError):
        tf_minimize(radial_grid=radial_grid(1e-5, 50, 100))
    with pytest.raises(DomainError):
        tf_minimize(radial_grid=radial_grid(1e-3, 50, 800))
    with pytest.raises(DomainError):
        tf_minimize(step_policy="newton")
    with pytest.raises(DomainError):
        tf_ode_solve(shoot_tolerance=1e-3)
    with pytest.raises(DomainError):
        tf_ode_solve(Z=0.0)
