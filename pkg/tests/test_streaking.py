import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slvw.atom import DipoleTable
from slvw.fields import AtomPosition, BeamKind, BeamSpec, complex_amplitude
from slvw.ionization import SpotProfile
from slvw.streaking import (
    StreakingScan,
    XuvPulse,
    circular_rms,
    default_delays,
    extract_coe,
    extract_peak,
    profile_mean_radius,
    reconstruct_field,
    spot_weighted_scan,
    streaked_spectrum,
    write_reconstruction_json,
    write_scans_csv,
)
from slvw.units import ev_to_au, intensity_to_field

from conftest import OMEGA_IR

PULSE = XuvPulse(ev_to_au(100.0), 10)


@pytest.fixture(scope="module")
def table():
    return DipoleTable(e_min=1.8, e_max=3.8, n_energy=24)


def uniform(A0):
    return BeamSpec.from_angle(BeamKind.UNIFORM_CIRCULAR, A0, OMEGA_IR, math.radians(1.0))


def energy_grid(table, half=1.0, n=161):
    e0 = PULSE.omega - table.ionization_energy
    return e0 + np.linspace(-half, half, n) * PULSE.bandwidth


def coe_shift(beam, phi, delays, table):
    """COE relative to the field-free line for an emitter on the detector axis."""
    E = energy_grid(table)
    pos = AtomPosition(1e-3, phi)
    win = (E[0], E[-1])
    ref = extract_coe(E, streaked_spectrum(uniform(0.0), PULSE, pos, phi, [0.0], E, table), win)
    return extract_coe(E, streaked_spectrum(beam, PULSE, pos, phi, delays, E, table), win) - ref[0]


def classical_shift(beam, phi, delays, table):
    p0 = math.sqrt(2 * (PULSE.omega - table.ionization_energy))
    n = np.array([math.cos(phi), math.sin(phi), 0.0])
    a = (n @ complex_amplitude(beam, np.zeros(3)) * np.exp(-1j * beam.omega * delays)).real
    return 0.5 * (p0 - a) ** 2 - 0.5 * p0**2


# -- pulse and estimators ---------------------------------------------------


def test_pulse_envelope():
    t = np.linspace(-2, 2, 401) * PULSE.half_duration
    f = PULSE.envelope(t)
    assert f.max() == pytest.approx(1.0)
    assert np.all(f[np.abs(t) > PULSE.half_duration] == 0)
    assert PULSE.envelope(PULSE.half_duration) == pytest.approx(0.0, abs=1e-15)
    assert PULSE.field == pytest.approx(intensity_to_field(2e14))


def test_pulse_validation():
    with pytest.raises(ValueError):
        XuvPulse(0.0)
    with pytest.raises(ValueError):
        XuvPulse(1.0, 0)


def test_coe_of_gaussian():
    E = np.linspace(0, 4, 4001)
    P = np.exp(-((E - 1.7) ** 2) / 0.02)
    assert extract_coe(E, P) == pytest.approx(1.7, abs=1e-10)
    assert extract_coe(E, P, (1.0, 2.4)) == pytest.approx(1.7, abs=1e-10)


def test_coe_zero_norm():
    with pytest.raises(ValueError):
        extract_coe(np.linspace(0, 1, 11), np.zeros(11))


def test_peak_of_parabola():
    E = np.linspace(0, 1, 21)
    P = 1 - (E - 0.4321) ** 2
    assert extract_peak(E, P)[0] == pytest.approx(0.4321, abs=1e-12)


class FlatTable:
    """Energy-independent dipole: D0 = 1, D1 = 0."""

    ionization_energy = 0.9

    def elements(self, energy, theta, phi, eps):
        e = np.asarray(energy, dtype=float)
        return np.ones(e.shape, complex), np.zeros(e.shape + (3,), complex)


def test_unstreaked_line_flat_dipole():
    table = FlatTable()
    E = energy_grid(table, half=2.0, n=2001)
    e0 = PULSE.omega - table.ionization_energy
    for phi in (0.0, 1.1, 4.0):
        P = streaked_spectrum(uniform(0.0), PULSE, AtomPosition(1e-3, phi), phi, [0.0, 7.0], E, table)
        np.testing.assert_allclose(P[0], P[1], rtol=0, atol=1e-12 * P.max())
        assert extract_coe(E, P[0]) == pytest.approx(e0, abs=1e-6)
        assert extract_peak(E, P[0])[0] == pytest.approx(e0, abs=1e-6)


def test_unstreaked_line(table):
    E = energy_grid(table, n=401)
    e0 = PULSE.omega - table.ionization_energy
    peaks = []
    for phi in (0.0, 1.1, 4.0):
        P = streaked_spectrum(uniform(0.0), PULSE, AtomPosition(1e-3, phi), phi, [0.0, 7.0], E, table)
        np.testing.assert_allclose(P[0], P[1], rtol=0, atol=1e-12 * P.max())
        peaks.append(extract_peak(E, P[0])[0])
    # the falling He dipole pulls the peak below the line centre
    assert -0.1 * PULSE.bandwidth < peaks[0] - e0 < 0
    np.testing.assert_allclose(peaks, peaks[0], atol=1e-10)


# -- uniform-field streaking ------------------------------------------------


@pytest.mark.parametrize("phi", [0.0, 1.3, 4.4])
def test_classical_streaking(table, phi):
    beam = uniform(0.005)
    d = default_delays(OMEGA_IR, 24, 1)
    coe = coe_shift(beam, phi, d, table)
    cl = classical_shift(beam, phi, d, table)
    assert np.max(np.abs(coe - cl)) < 0.02 * np.ptp(cl)


def test_streaking_periodic(table):
    beam = uniform(0.005)
    d = default_delays(OMEGA_IR, 24, 2)
    coe = coe_shift(beam, 0.7, d, table)
    depth = np.ptp(coe)
    np.testing.assert_allclose(coe[:24], coe[24:], atol=0.01 * depth)
    other = coe_shift(beam, 0.7 + 2 * np.pi, d[:24], table)
    np.testing.assert_allclose(other, coe[:24], atol=0.01 * depth)


def harmonic(y, d):
    return 2 * np.mean(y * np.exp(1j * OMEGA_IR * d))


def test_uniform_amplitude_independent_of_azimuth(table):
    beam = uniform(0.005)
    d = default_delays(OMEGA_IR, 24, 1)
    h = [harmonic(coe_shift(beam, phi, d, table), d) for phi in (0.0, 2.0, 3.5)]
    np.testing.assert_allclose(np.abs(h), abs(h[0]), rtol=1e-6)
    # the harmonic phase follows the field direction
    np.testing.assert_allclose(np.angle(h[1] / h[0]), 2.0, atol=1e-6)


def test_linear_in_field(table):
    d = default_delays(OMEGA_IR, 24, 1)
    depth = {a: abs(harmonic(coe_shift(uniform(a), 0.4, d, table), d)) for a in (0.005, 0.01, 0.02)}
    assert depth[0.01] / depth[0.005] == pytest.approx(2.0, rel=0.05)
    assert depth[0.02] / depth[0.01] == pytest.approx(2.0, rel=0.05)


# -- reconstruction ---------------------------------------------------------


def uniform_scans(table, A0=0.005, n_phi=8):
    phis = 2 * np.pi * np.arange(n_phi) / n_phi
    prof = SpotProfile("rvb-donut", 50.0)
    E = energy_grid(table, n=121)
    return spot_weighted_scan(uniform(A0), PULSE, prof, phis, default_delays(OMEGA_IR, 16, 1),
                              table, energies=E, n_rho=3)


def test_reconstruct_uniform(table):
    scans = uniform_scans(table)
    p0 = math.sqrt(2 * (PULSE.omega - table.ionization_energy))
    rec = reconstruct_field(scans, OMEGA_IR, p0)
    # C_rho = A0 exp(i phi) for the uniform circular field
    assert np.ptp(rec.amplitude) < 1e-4 * rec.amplitude.mean()
    assert rec.amplitude.mean() == pytest.approx(0.005, rel=0.03)
    assert circular_rms(rec.phase, rec.phi_p) < 1e-3
    assert not rec.flagged.any()


def test_reconstruct_zero_field(table):
    scans = uniform_scans(table, A0=0.0)
    rec = reconstruct_field(scans, OMEGA_IR, 1.0)
    assert rec.flagged.all()
    np.testing.assert_array_equal(rec.amplitude, 0.0)


def test_reconstruct_needs_eight_azimuths():
    d = np.linspace(0, 100, 10)
    scans = [StreakingScan(d, k, np.ones(10), np.ones(10)) for k in range(7)]
    with pytest.raises(ValueError):
        reconstruct_field(scans, OMEGA_IR, 1.0)


def test_reconstruct_synthetic_harmonic():
    d = default_delays(OMEGA_IR, 48, 2)
    p0 = 1.5
    phis = 2 * np.pi * np.arange(24) / 24
    truth = 0.01 * np.exp(3j * phis) * (1.2 + np.cos(phis))
    scans = [StreakingScan(d, f, 2.0 - p0 * (c * np.exp(-1j * OMEGA_IR * d)).real, 0 * d)
             for f, c in zip(phis, truth)]
    rec = reconstruct_field(scans[::-1], OMEGA_IR, p0)
    np.testing.assert_allclose(rec.field, truth, atol=1e-12)
    np.testing.assert_allclose(rec.residual, 0, atol=1e-12)
    np.testing.assert_allclose(rec.interpolate(phis + 2 * np.pi), truth, atol=1e-12)
    mid = rec.interpolate(phis + 0.5 * phis[1])
    exact = 0.01 * np.exp(3j * (phis + 0.5 * phis[1])) * (1.2 + np.cos(phis + 0.5 * phis[1]))
    assert np.max(np.abs(mid - exact)) < 0.01 * 0.01
    np.testing.assert_allclose(rec.value_at_delay(10.0),
                               (truth * np.exp(-1j * OMEGA_IR * 10.0)).real, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(-10, 10), st.lists(st.floats(-3, 3), min_size=3, max_size=20))
def test_circular_rms_offset_invariant(offset, phases):
    a = np.array(phases)
    assert circular_rms(a + offset, a) < 1e-9
    assert circular_rms(a, a + 2 * np.pi) < 1e-9


def test_profile_mean_radius():
    # weight rho |f|^2 = w x^3 exp(-2 x^2) for the donut
    w = 3.0
    expected = w * (3 / 32 * math.sqrt(math.pi / 2)) / (1 / 8)
    assert profile_mean_radius(SpotProfile("rvb-donut", w)) == pytest.approx(expected, rel=1e-10)


def test_export(table, tmp_path):
    scans = uniform_scans(table)
    rec = reconstruct_field(scans, OMEGA_IR, 1.6)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_scans_csv(scans, a)
    write_scans_csv(scans[::-1], b)
    assert a.read_bytes() == b.read_bytes()
    rows = list(csv.reader(a.open()))
    assert rows[0] == ["delay_au", "phi_p_rad", "coe_au", "coe_peak_au"]
    assert len(rows) == 1 + sum(len(s.delays) for s in scans)
    write_reconstruction_json(rec, tmp_path / "r.json")
    report = json.loads((tmp_path / "r.json").read_text())
    assert len(report["amplitude"]) == len(scans)
    assert report["mean_radius_au"] == pytest.approx(rec.mean_radius)
