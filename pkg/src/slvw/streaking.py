"""Attosecond streaking of XUV photoelectrons by a structured IR field.

An attosecond XUV pulse ``E_X f(t - dt) cos(w_X (t - dt))`` ionizes an atom
at ``r0`` while the IR field dresses the outgoing electron.  For each emitter
the dressed integrand ``g(E, t)`` is independent of the delay, so a whole
delay scan is one matrix product with the shifted envelopes ``f(t - dt)``.
The center of energy (COE) of the spectrum follows the projected vector
potential, ``p(dt) ~ sqrt(2 (w_X + E_i)) - A(dt) . p_hat``; fitting its
fundamental IR harmonic per detector azimuth recovers the local field.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .atom import DipoleTable, Polarization, polarization_vector
from .fields import AtomPosition, BeamSpec, complex_amplitude, complex_gradient
from .ionization import SpotProfile
from .units import intensity_to_field

__all__ = [
    "XuvPulse",
    "StreakingScan",
    "Reconstruction",
    "dressed_integrand",
    "streaked_spectrum",
    "extract_coe",
    "extract_peak",
    "spot_weighted_scan",
    "reconstruct_field",
    "profile_mean_radius",
    "default_delays",
    "circular_rms",
    "write_scans_csv",
    "write_reconstruction_json",
]


@dataclass(frozen=True)
class XuvPulse:
    """``cos^2(w_X t / (2 n))`` pulse on ``|t| <= n pi / w_X``."""

    omega: float
    n_cycles: int = 7
    intensity: float = 2e14  # W/cm^2

    def __post_init__(self):
        if not self.omega > 0 or not self.n_cycles > 0:
            raise ValueError("pulse needs positive frequency and cycle count")

    @property
    def half_duration(self):
        return self.n_cycles * math.pi / self.omega

    @property
    def field(self):
        return float(intensity_to_field(self.intensity))

    @property
    def bandwidth(self):
        """Distance from line centre to the first zero of the spectrum."""
        return 2.0 * self.omega / self.n_cycles

    def envelope(self, t):
        t = np.asarray(t, dtype=float)
        inside = np.abs(t) <= self.half_duration
        return np.where(inside, np.cos(self.omega * t / (2 * self.n_cycles)) ** 2, 0.0)


@dataclass
class StreakingScan:
    """COE trace over delays for one detector azimuth (``theta_p = pi / 2``)."""

    delays: np.ndarray
    phi_p: float
    coe: np.ndarray
    coe_peak: np.ndarray
    metadata: dict = field(default_factory=dict)


@dataclass
class Reconstruction:
    """Per-azimuth complex estimate of the radial field component.

    ``field[k]`` approximates ``C_rho`` (``A_rho = Re[C_rho exp(-i w t)]``) at
    the emission radius; ``residual[k]`` is the RMS misfit of the harmonic
    model for that azimuth.
    """

    phi_p: np.ndarray
    field: np.ndarray
    residual: np.ndarray
    omega: float
    p0: float
    mean_radius: float | None = None
    delay: float | None = None
    flagged: np.ndarray | None = None

    @property
    def amplitude(self):
        return np.abs(self.field)

    @property
    def phase(self):
        return np.angle(self.field)

    def value_at_delay(self, delay):
        return (self.field * np.exp(-1j * self.omega * delay)).real

    def interpolate(self, phi):
        """Periodic cubic interpolation of the complex field estimate."""
        x = np.append(self.phi_p, self.phi_p[0] + 2 * np.pi)
        y = np.append(self.field, self.field[0])
        spline = CubicSpline(x, np.column_stack([y.real, y.imag]), bc_type="periodic")
        v = spline(np.mod(np.asarray(phi) - self.phi_p[0], 2 * np.pi) + self.phi_p[0])
        return v[..., 0] + 1j * v[..., 1]


# --------------------------------------------------------------------------
# spectra


def _dressing(beam, pos, phi_p, energies, table, eps):
    """Delay-independent pieces of the dressed integrand."""
    energies = np.asarray(energies, dtype=float)
    C = complex_amplitude(beam, pos.vector)
    G = complex_gradient(beam, pos.vector)
    w = beam.omega
    U = 0.25 * float(np.vdot(C, C).real)
    n_hat = np.array([math.cos(phi_p), math.sin(phi_p), 0.0])
    pvec = np.sqrt(2 * energies)[:, None] * n_hat
    P1 = pvec @ C
    P2 = np.einsum("ei,ij,ej->e", pvec, G, pvec)
    Z = 1j * P1 / w + P2 / w**2
    V = C[None, :] - 1j * (pvec @ G.T) / w
    D0, D1 = table.elements(energies, math.pi / 2, phi_p, eps)
    rate = energies + U + table.ionization_energy
    # Re[V e^{-iwt}] . D1 for complex D1
    vd = np.einsum("ei,ei->e", V, D1)
    vbd = np.einsum("ei,ei->e", np.conj(V), D1)
    return w, rate, Z, D0, vd, vbd


def _evaluate(dress, t):
    w, rate, Z, D0, vd, vbd = dress
    col = (slice(None),) + (None,) * np.ndim(t)
    carrier = np.exp(-1j * w * np.asarray(t))
    phase = np.multiply.outer(rate, t) + np.multiply.outer(Z, carrier).real
    shift = 0.5 * (vd[col] * carrier + vbd[col] * np.conj(carrier))
    return np.exp(1j * phase) * (D0[col] - 1j * shift)


def dressed_integrand(beam: BeamSpec, pos: AtomPosition, phi_p, energies, t, table: DipoleTable,
                      eps):
    """Dressed transition integrand without the XUV carrier and envelope.

    Returns ``g[E, t] = exp(i S(E, t) + i I_p t) (D0 - i (A - K) . D1)`` at
    ``theta_p = pi / 2``; multiplying by ``exp(-i w_X t)`` and the envelope
    gives the amplitude integrand.
    """
    return _evaluate(_dressing(beam, pos, phi_p, energies, table, eps), t)


def streaked_spectrum(beam: BeamSpec, pulse: XuvPulse, pos: AtomPosition, phi_p, delays,
                      energies, table: DipoleTable, polarization=Polarization.LINEAR_RADIAL,
                      n_tau=401):
    """Photoelectron probability ``P[delay, E]`` at ``theta_p = pi / 2``.

    The XUV is in rotating-wave form with linear polarisation along the
    emitter's radial direction by default.
    """
    delays = np.atleast_1d(np.asarray(delays, dtype=float))
    # integrate over tau = t - delay on one grid so every delay sees the same rule
    tau = np.linspace(-pulse.half_duration, pulse.half_duration, n_tau)
    wt = pulse.envelope(tau) * (tau[1] - tau[0]) * np.exp(-1j * pulse.omega * tau)
    eps = polarization_vector(polarization, pos.phi0)
    dress = _dressing(beam, pos, phi_p, energies, table, eps)
    amp = np.empty((len(delays), len(energies)), dtype=complex)
    for k, d in enumerate(delays):
        amp[k] = _evaluate(dress, d + tau) @ wt
    amp *= -1j * pulse.field
    return np.abs(amp) ** 2


def extract_coe(energies, spectrum, window=None):
    """First moment ``int E P dE / int P dE`` (optionally inside ``window``)."""
    energies = np.asarray(energies, dtype=float)
    spectrum = np.asarray(spectrum, dtype=float)
    if window is not None:
        sel = (energies >= window[0]) & (energies <= window[1])
        energies, spectrum = energies[sel], spectrum[..., sel]
    norm = np.trapezoid(spectrum, energies, axis=-1)
    if np.any(norm <= 0):
        raise ValueError("spectrum has zero norm")
    return np.trapezoid(spectrum * energies, energies, axis=-1) / norm


def extract_peak(energies, spectrum):
    """Peak position from a parabola through the maximum and its neighbours."""
    energies = np.asarray(energies, dtype=float)
    spectrum = np.atleast_2d(spectrum)
    out = np.empty(spectrum.shape[0])
    h = energies[1] - energies[0]
    for i, row in enumerate(spectrum):
        k = int(np.clip(np.argmax(row), 1, len(row) - 2))
        a, b, c = row[k - 1], row[k], row[k + 1]
        den = a - 2 * b + c
        out[i] = energies[k] + (0.5 * h * (a - c) / den if den != 0 else 0.0)
    return out


# --------------------------------------------------------------------------
# scans


def profile_mean_radius(profile: SpotProfile, n=400):
    """Mean emitter radius weighted by ``rho |f(rho)|^2`` over ``[0, 4 w]``."""
    x, w = np.polynomial.legendre.leggauss(n)
    rho = 0.5 * profile.cutoff * (x + 1)
    wt = w * rho * profile(rho) ** 2
    return float(np.sum(wt * rho) / np.sum(wt))


def default_delays(omega_l, per_cycle=48, cycles=2):
    return 2 * np.pi / omega_l * np.arange(per_cycle * cycles) / per_cycle


def spot_weighted_scan(beam: BeamSpec, pulse: XuvPulse, profile: SpotProfile, phi_grid, delays,
                       table: DipoleTable, energies=None, n_rho=24, emitter="radial",
                       phi0=None, polarization=Polarization.LINEAR_RADIAL):
    """Emitter-averaged COE scans, one per detector azimuth.

    Spectra are summed over emitter radii with weight ``rho |f(rho)|^2``.
    ``emitter="radial"`` ties the emitter azimuth to the detector azimuth;
    ``emitter="fixed"`` keeps every emitter at azimuth ``phi0``.
    """
    delays = np.asarray(delays, dtype=float)
    e0 = pulse.omega - table.ionization_energy
    if energies is None:
        energies = e0 + np.linspace(-1, 1, 121) * pulse.bandwidth
    energies = np.asarray(energies, dtype=float)
    window = (e0 - pulse.bandwidth, e0 + pulse.bandwidth)
    x, w = np.polynomial.legendre.leggauss(n_rho)
    rho = 0.5 * profile.cutoff * (x + 1)
    wt = 0.5 * profile.cutoff * w * rho * profile(rho) ** 2
    mean_radius = profile_mean_radius(profile)
    scans = []
    for phi_p in np.asarray(phi_grid, dtype=float):
        az = phi_p if emitter == "radial" else float(phi0 or 0.0)
        total = np.zeros((len(delays), len(energies)))
        for r, weight in zip(rho, wt):
            spec = streaked_spectrum(beam, pulse, AtomPosition(r, az), phi_p, delays, energies,
                                     table, polarization=polarization)
            total += weight * spec
        scans.append(StreakingScan(
            delays, float(phi_p), extract_coe(energies, total, window),
            extract_peak(energies, total),
            {"profile": profile.kind.value, "width": profile.width, "emitter": emitter,
             "mean_radius": mean_radius, "n_rho": n_rho},
        ))
    return scans


# --------------------------------------------------------------------------
# reconstruction


def reconstruct_field(scans, omega_l, p0, delay=None, detrend=True, noise_floor=1e-12):
    """Fit ``COE = c0 [+ c1 dt] + Re[h exp(-i w dt)] + Re[h2 exp(-2 i w dt)]`` per azimuth.

    The second harmonic absorbs the ``A^2 / 2`` part of the energy shift.
    The classical streaking relation ``dE = -p0 A_rho(dt)`` gives the field
    estimate ``-h / p0``.  Azimuths whose harmonic amplitude is below
    ``noise_floor`` are flagged and their phase is left undefined (NaN).
    """
    if len(scans) < 8:
        raise ValueError("reconstruction needs at least 8 azimuth samples")
    scans = sorted(scans, key=lambda s: s.phi_p)
    phi = np.array([s.phi_p for s in scans])
    out = np.empty(len(scans), dtype=complex)
    res = np.empty(len(scans))
    flagged = np.zeros(len(scans), dtype=bool)
    for k, s in enumerate(scans):
        d = np.asarray(s.delays, dtype=float)
        cols = [np.ones_like(d), np.cos(omega_l * d), np.sin(omega_l * d),
                np.cos(2 * omega_l * d), np.sin(2 * omega_l * d)]
        if detrend:
            cols.append(d - d.mean())
        X = np.column_stack(cols)
        coef, *_ = np.linalg.lstsq(X, s.coe, rcond=None)
        h = coef[1] + 1j * coef[2]
        res[k] = float(np.sqrt(np.mean((X @ coef - s.coe) ** 2)))
        if abs(h) <= noise_floor:
            flagged[k] = True
            out[k] = 0.0
        else:
            out[k] = -h / p0
    mean_radius = scans[0].metadata.get("mean_radius")
    rec = Reconstruction(phi, out, res, omega_l, p0, mean_radius, delay, flagged)
    return rec


def circular_rms(a, b):
    """RMS of the wrapped difference of two phase arrays after removing the mean offset."""
    d = np.angle(np.exp(1j * (np.asarray(a) - np.asarray(b))))
    offset = np.angle(np.mean(np.exp(1j * d)))
    d = np.angle(np.exp(1j * (d - offset)))
    return float(np.sqrt(np.mean(d**2)))


# --------------------------------------------------------------------------
# export


def write_scans_csv(scans, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delay_au", "phi_p_rad", "coe_au", "coe_peak_au"])
        for s in sorted(scans, key=lambda s: s.phi_p):
            for d, c, cp in zip(s.delays, s.coe, s.coe_peak):
                writer.writerow([f"{d:.12g}", f"{s.phi_p:.12g}", f"{c:.12g}", f"{cp:.12g}"])


def write_reconstruction_json(rec: Reconstruction, path, extra=None):
    report = {
        "phi_p": rec.phi_p.tolist(),
        "amplitude": rec.amplitude.tolist(),
        "phase": [None if f else float(v) for v, f in zip(rec.phase, rec.flagged)],
        "residual": rec.residual.tolist(),
        "mean_radius_au": rec.mean_radius,
        "omega_au": rec.omega,
        "p0_au": rec.p0,
        **(extra or {}),
    }
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
