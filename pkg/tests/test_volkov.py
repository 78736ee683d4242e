import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from slvw.fields import AtomPosition, BeamKind, local_expansion
from slvw.volkov import (
    MomentumPoint,
    QuadratureError,
    k_shift,
    kinematic_momentum,
    phase_closed,
    phase_harmonic,
    phase_numeric,
)

from conftest import ALL_BEAMS, OMEGA_IR, make_beam

PERIOD = 2 * math.pi / OMEGA_IR
T3 = np.linspace(0, 3 * PERIOD, 61)


def beam_by_name(name, angle_deg=20.0, **extra):
    spec = dict(ALL_BEAMS[name])
    spec.update(extra)
    return make_beam(spec.pop("kind"), angle_deg=angle_deg, **spec)


def test_momentum_point_validation():
    with pytest.raises(ValueError):
        MomentumPoint(0.0, 0.1, 0.0)
    with pytest.raises(ValueError):
        MomentumPoint(1.0, 4.0, 0.0)
    pt = MomentumPoint(1.2, 0.3, -0.5)
    assert 0 <= pt.phi_p < 2 * math.pi
    assert np.linalg.norm(pt.vector) == pytest.approx(1.2)
    assert MomentumPoint.from_energy(0.72, 0.1, 0.2).p == pytest.approx(1.2)


def test_zero_field_phase_is_kinetic():
    beam = make_beam(BeamKind.VORTEX_PARALLEL, A0=0.0, m=2, angle_deg=20)
    pos = AtomPosition(3 / beam.q_perp, 0.4)
    pt = MomentumPoint(0.9, 1.0, 2.0)
    exp = local_expansion(beam, pos)
    for res in (phase_numeric(exp, pt, T3), phase_closed(beam, pos, pt, T3)):
        np.testing.assert_array_equal(res.S, pt.energy * T3)
    np.testing.assert_array_equal(kinematic_momentum(exp, pt, T3), np.tile(pt.vector, (61, 1)))
    np.testing.assert_array_equal(k_shift(exp, pt, T3), 0.0)


def test_uniform_circular_reduction():
    beam = make_beam(BeamKind.UNIFORM_CIRCULAR, A0=0.2, angle_deg=0.0)
    pt = MomentumPoint(1.1, 0.7, 0.9)
    A0, p, w, qz = beam.A0, pt.p, beam.omega, beam.q_z
    th, ph = pt.theta_p, pt.phi_p
    expected = ((pt.energy + A0**2 / 2) * T3
                - (A0 * p / w) * (1 + qz * p * math.cos(th) / w) * math.sin(th)
                * np.sin(ph - w * T3))
    for rho0 in (0.0, 1e3, 5e4):
        pos = AtomPosition(rho0, 1.3)
        np.testing.assert_allclose(phase_closed(beam, pos, pt, T3).S, expected,
                                   rtol=0, atol=1e-10)
        np.testing.assert_allclose(phase_numeric(local_expansion(beam, pos), pt, T3).S,
                                   expected, rtol=0, atol=1e-9)


@pytest.mark.parametrize("name", sorted(ALL_BEAMS))
def test_closed_matches_quadrature(name, rng):
    for angle in (1.0, 28.0):
        beam = beam_by_name(name, angle)
        for _ in range(4):
            rho0 = rng.uniform(0, min(3 / beam.q_perp, beam.radius_limit))
            pos = AtomPosition(rho0, rng.uniform(0, 2 * np.pi))
            pt = MomentumPoint(rng.uniform(0.2, 2), rng.uniform(0, np.pi),
                               rng.uniform(0, 2 * np.pi))
            closed = phase_closed(beam, pos, pt, T3)
            numeric = phase_numeric(local_expansion(beam, pos), pt, T3)
            assert np.abs(closed.S - numeric.S).max() < 1e-6
            for key in ("secular", "field", "gradient"):
                assert np.abs(closed.breakdown[key] - numeric.breakdown[key]).max() < 1e-6


def test_breakdown_sums_to_total(any_beam):
    pos = AtomPosition(0.5 / any_beam.q_perp if any_beam.q_perp else 0.0, 0.3)
    pt = MomentumPoint(0.8, 1.1, 4.0)
    for res in (phase_closed(any_beam, pos, pt, T3),
                phase_numeric(local_expansion(any_beam, pos), pt, T3, include_ma=True)):
        assert np.abs(sum(res.breakdown.values()) - res.S).max() < 1e-12


def test_parallel_m1_quadrature_tight():
    beam = make_beam(BeamKind.VORTEX_PARALLEL, m=1, A0=0.3, angle_deg=10)
    pos = AtomPosition(2 / beam.q_perp, 1.0)
    pt = MomentumPoint(1.0, 0.8, 0.2)
    diff = phase_closed(beam, pos, pt, T3).S - phase_numeric(local_expansion(beam, pos), pt, T3).S
    assert np.abs(diff).max() < 1e-8


def test_avb_node_at_matching_azimuth():
    beam = make_beam(BeamKind.AZIMUTHAL, angle_deg=10)
    pos = AtomPosition(2 / beam.q_perp, 0.8)
    pt = MomentumPoint(0.9, 1.2, 0.8)
    res = phase_closed(beam, pos, pt, T3)
    assert np.abs(res.oscillatory).max() < 1e-12
    np.testing.assert_allclose(res.S, res.breakdown["secular"], atol=1e-12)


def test_rvb_on_axis_limit():
    beam = make_beam(BeamKind.RADIAL, A0=0.15, angle_deg=28)
    pt = MomentumPoint(1.0, 0.6, 1.4)
    qp, qz, w = beam.q_perp, beam.q_z, beam.omega
    limit = -(2 * beam.A0 * qp * pt.p / (qz * w)) * math.cos(pt.theta_p) * np.cos(w * T3)
    res = phase_closed(beam, AtomPosition(0.0, 0.0), pt, T3)
    np.testing.assert_allclose(res.breakdown["field"], limit, atol=1e-12)
    near = AtomPosition(1e-4 / qp, 2.0)
    closed = phase_closed(beam, near, pt, T3)
    numeric = phase_numeric(local_expansion(beam, near), pt, T3)
    np.testing.assert_allclose(closed.S, numeric.S, rtol=0, atol=1e-8)
    np.testing.assert_allclose(closed.breakdown["field"], limit, atol=1e-3 * np.abs(limit).max())


def test_skyrmion_matches_quadrature_one_cycle():
    beam = make_beam(BeamKind.SKYRMION, m1=3, m2=1, alpha=7.0, beta=1.0, A0=0.03, angle_deg=10)
    pos = AtomPosition(3 / beam.q_perp, 0.9)
    t = np.linspace(0, PERIOD, 41)
    for theta in (0.3, 1.5, 2.7):
        pt = MomentumPoint(1.5, theta, 5.0)
        diff = (phase_closed(beam, pos, pt, t).S
                - phase_numeric(local_expansion(beam, pos), pt, t).S)
        assert np.abs(diff).max() < 1e-6


def test_large_radius_convergence_of_vortex_classes():
    par = make_beam(BeamKind.VORTEX_PARALLEL, m=1, angle_deg=10)
    anti = make_beam(BeamKind.VORTEX_ANTIPARALLEL, m=-1, angle_deg=10)
    assert par.sigma == anti.sigma == 1
    pt = MomentumPoint(1.0, 0.9, 0.4)
    diffs = []
    for k in (5, 10, 20, 40):
        pos = AtomPosition(k / par.q_perp, 0.0)
        a = np.abs(phase_closed(par, pos, pt, T3).oscillatory).max()
        b = np.abs(phase_closed(anti, pos, pt, T3).oscillatory).max()
        diffs.append(abs(a - b) / a)
    assert all(x > y for x, y in zip(diffs, diffs[1:]))


def test_gradient_term_linear_in_charge():
    pt = MomentumPoint(1.2, math.pi / 2, 0.7)
    rho0 = 0.8 / make_beam(BeamKind.VORTEX_PARALLEL, m=1, angle_deg=20).q_perp
    t = np.linspace(0, PERIOD, 4001)
    scaled = []
    for m in (1, 2, 3):
        beam = make_beam(BeamKind.VORTEX_PARALLEL, m=m, angle_deg=20)
        res = phase_closed(beam, AtomPosition(rho0, 0.2), pt, t)
        amp = np.abs(res.breakdown["gradient"]).max() / (beam.q_perp * rho0) ** m
        scaled.append(amp)
    w = OMEGA_IR
    expected = [m * 0.1 * pt.p**2 / (w**2 * rho0) for m in (1, 2, 3)]
    np.testing.assert_allclose(scaled, expected, rtol=1e-3)


@pytest.mark.parametrize("name", ["parallel+1", "parallel-2", "antiparallel+1", "antiparallel+3"])
def test_vortex_phase_covariant_under_joint_rotation(name):
    # rotating atom and momentum together only shifts the phase in time
    beam = beam_by_name(name, 15)
    pt = MomentumPoint(0.9, 0.5, 1.0)
    rho0 = 1.5 / beam.q_perp
    ref = phase_harmonic(local_expansion(beam, AtomPosition(rho0, 0.0)), pt)
    for phi0 in (0.7, 2.0, 5.5):
        turned = MomentumPoint(pt.p, pt.theta_p, pt.phi_p + phi0)
        other = phase_harmonic(local_expansion(beam, AtomPosition(rho0, phi0)), turned)
        assert abs(other.Z) == pytest.approx(abs(ref.Z), rel=1e-12)
        assert other.rate == pytest.approx(ref.rate, rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(name=st.sampled_from(["azimuthal", "radial", "skyrmion"]),
       phi0=st.floats(0, 2 * np.pi), phi_p=st.floats(0, 2 * np.pi), theta=st.floats(0, np.pi))
def test_azimuthal_periodicity(name, phi0, phi_p, theta):
    beam = beam_by_name(name, 10)
    rho0 = 1.2 / beam.q_perp
    pt = MomentumPoint(0.8, theta, phi_p)
    base = phase_closed(beam, AtomPosition(rho0, phi0), pt, T3).S
    shifted_p = phase_closed(beam, AtomPosition(rho0, phi0),
                             MomentumPoint(0.8, theta, phi_p + 2 * np.pi), T3).S
    shifted_0 = phase_closed(beam, AtomPosition(rho0, phi0 + 2 * np.pi), pt, T3).S
    np.testing.assert_allclose(shifted_p, base, atol=1e-9)
    np.testing.assert_allclose(shifted_0, base, atol=1e-9)


def test_oscillatory_parts_are_periodic(any_beam):
    pos = AtomPosition(0.7 / any_beam.q_perp if any_beam.q_perp else 0.0, 2.2)
    pt = MomentumPoint(1.3, 2.0, 3.0)
    t = np.linspace(0, PERIOD, 17)
    a = phase_closed(any_beam, pos, pt, t)
    b = phase_closed(any_beam, pos, pt, t + PERIOD)
    for key in ("field", "gradient"):
        np.testing.assert_allclose(a.breakdown[key], b.breakdown[key], rtol=0, atol=1e-12)
    exp = local_expansion(any_beam, pos)
    a = phase_numeric(exp, pt, t)
    b = phase_numeric(exp, pt, t + 2 * PERIOD)
    for key in ("field", "gradient"):
        np.testing.assert_allclose(a.breakdown[key], b.breakdown[key], rtol=0, atol=1e-12)


def test_harmonic_form_matches_closed(any_beam):
    pos = AtomPosition(0.9 / any_beam.q_perp if any_beam.q_perp else 0.0, 4.0)
    pt = MomentumPoint(0.7, 0.4, 0.1)
    harm = phase_harmonic(local_expansion(any_beam, pos), pt)
    np.testing.assert_allclose(harm(T3), phase_closed(any_beam, pos, pt, T3).S,
                               rtol=1e-13, atol=1e-10)


def test_uniform_shift_is_longitudinal_only():
    beam = make_beam(BeamKind.UNIFORM_CIRCULAR, A0=0.1, angle_deg=0.0)
    exp = local_expansion(beam, AtomPosition(0.0, 0.0))
    pt = MomentumPoint(1.0, 0.5, 0.3)
    K = k_shift(exp, pt, T3)
    np.testing.assert_array_equal(K[:, :2], 0.0)
    assert np.abs(K[:, 2]).max() == pytest.approx(beam.q_z * pt.p * math.sin(0.5)
                                                  * beam.A0 / beam.omega, rel=1e-3)
    pi = kinematic_momentum(exp, pt, T3)
    np.testing.assert_allclose(pi[:, :2], pt.vector[:2] + exp.vector_potential(T3)[:, :2],
                               atol=1e-15)


def test_shift_is_purely_oscillatory():
    beam = make_beam(BeamKind.VORTEX_PARALLEL, m=1, A0=0.3, angle_deg=20)
    exp = local_expansion(beam, AtomPosition(2 / beam.q_perp, 0.5))
    pt = MomentumPoint(1.0, 1.0, 1.0)
    x, w = np.polynomial.legendre.leggauss(40)
    t = 0.5 * PERIOD * (x + 1)
    avg = 0.5 * np.tensordot(w, k_shift(exp, pt, t), axes=1)
    assert np.abs(avg).max() < 1e-14 * max(1.0, np.abs(k_shift(exp, pt, t)).max())


def test_kinematic_momentum_follows_equation_of_motion():
    beam = make_beam(BeamKind.VORTEX_PARALLEL, m=1, A0=0.05, angle_deg=5)
    exp = local_expansion(beam, AtomPosition(2 / beam.q_perp, 0.4))
    pt = MomentumPoint(1.1, 0.9, 2.5)
    w = beam.omega
    C, G = exp.amplitude, exp.gradient

    def rhs(t, pi):
        dadt = (-1j * w * C * np.exp(-1j * w * t)).real
        return dadt - exp.gradient_matrix(t) @ pi

    pi0 = kinematic_momentum(exp, pt, 0.0)
    sol = solve_ivp(rhs, (0, 3 * PERIOD), pi0, t_eval=T3, rtol=1e-12, atol=1e-14,
                    method="DOP853")
    pi = kinematic_momentum(exp, pt, T3)
    err = np.linalg.norm(sol.y.T - pi, axis=1) / np.linalg.norm(pi, axis=1)
    assert err.max() < 1e-6


def test_ma_audit_matches_analytic_terms():
    beam = make_beam(BeamKind.VORTEX_ANTIPARALLEL, m=1, A0=0.3, angle_deg=25)
    exp = local_expansion(beam, AtomPosition(1.3 / beam.q_perp, 0.6))
    pt = MomentumPoint(0.9, 1.1, 2.0)
    res = phase_numeric(exp, pt, T3, include_ma=True)
    C, G, w, p = exp.amplitude, exp.gradient, beam.omega, pt.vector
    d = 0.5 * (G @ np.conj(C)).real
    e2 = np.exp(-2j * w * T3)
    expected = (-(p @ d) * T3**2 / 2 + (p @ G @ C * e2).real / (8 * w**2)
                - (1j * np.conj(C) @ G @ p).real * T3 / (2 * w)
                + (C @ G @ p * e2).real / (4 * w**2))
    np.testing.assert_allclose(res.breakdown["gradient_field"], expected, atol=1e-10)
    base = phase_numeric(exp, pt, T3)
    np.testing.assert_allclose(res.S - res.breakdown["gradient_field"], base.S, atol=1e-11)


def test_quadrature_failure_is_reported():
    beam = make_beam(BeamKind.VORTEX_PARALLEL, m=3, A0=0.3, angle_deg=28)
    exp = local_expansion(beam, AtomPosition(1 / beam.q_perp, 0.1))
    with pytest.raises(QuadratureError):
        phase_numeric(exp, MomentumPoint(1.0, 1.0, 1.0), T3, nodes=2)
