"""Laser-assisted XUV photoionization with structured-light Volkov final states.

For an atom at ``r0`` the transition amplitude is

    A_p(r0) = -i int dt E_X f(t) exp(i S(t) - i (w_X + E_i) t)
              <Psi_p^-| exp(-i (A - K) . r) eps . r |i>,

with ``S`` the truncated Volkov phase of :mod:`slvw.volkov`.  The shift factor
is kept to first order, which gives ``D0 - i (A - K_p) . D1`` with
``D0 = <Psi_p^-|eps.r|i>`` and ``D1_j = <Psi_p^-|r_j eps.r|i>``.

In the continuous-wave limit ``exp(i Re[Z exp(-i w t)])`` is expanded with the
Jacobi-Anger identity, ``sum_n i^n J_n(|Z|) exp(-i n arg Z) exp(i n w t)``,
and the time integral collapses onto discrete sidebands
``E_N = w_X + E_i + N w - U`` with ``U = |C|^2 / 4``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy.special import jv

from .atom import DipoleTable, Polarization, polarization_vector
from .fields import AtomPosition, BeamSpec, complex_amplitude, complex_gradient, local_expansion
from .volkov import MomentumPoint, k_shift, phase_harmonic

__all__ = [
    "XuvSpec",
    "AmplitudeGrid",
    "SidebandWindow",
    "SidebandPacket",
    "SpotProfile",
    "ProfileKind",
    "ConvergenceError",
    "angular_grid",
    "sideband_energy",
    "cw_sideband",
    "cw_amplitude_grid",
    "amplitude",
    "pulsed_amplitude_grid",
    "sideband_project",
    "expected_Lz",
    "spot_average",
    "orbital_dichroism",
    "angular_centroid",
    "write_csv",
    "grid_metadata",
]


class ConvergenceError(RuntimeError):
    """A quadrature or series gate was not met."""


@dataclass(frozen=True)
class XuvSpec:
    """XUV pulse in rotating-wave form ``E_X f(t) eps exp(-i w_X t)``.

    ``envelope`` is only used by the time-domain path; ``None`` means a flat
    (continuous-wave) window.
    """

    omega: float
    polarization: Polarization = Polarization.CIRCULAR_PLUS
    field: float = 1e-3
    envelope: Callable | None = None

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("XUV frequency must be positive")
        object.__setattr__(self, "polarization", Polarization(self.polarization))

    def vector(self, phi0=0.0):
        return polarization_vector(self.polarization, phi0)


def angular_grid(n_theta=32, n_phi=32):
    """Gauss-Legendre nodes in ``cos theta`` (ascending ``theta``) and uniform ``phi``.

    Returns ``theta, theta_weights, phi`` where the weights integrate
    ``sin theta d theta``.
    """
    x, w = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(x)[::-1]
    return theta, w[::-1].copy(), 2 * np.pi * np.arange(n_phi) / n_phi


def sideband_energy(order, xuv: XuvSpec, omega_l, e_i, ponderomotive=0.0):
    return xuv.omega + e_i + order * omega_l - ponderomotive


# --------------------------------------------------------------------------
# grids and windows


@dataclass
class AmplitudeGrid:
    """Complex amplitudes on an ``(E, theta, phi)`` grid.

    In continuous-wave mode ``orders`` lists the sideband index of each energy
    row and ``energy_weights`` is ``None``: each row is a discrete line and
    ``|value|^2`` is a probability per solid angle.  In pulsed mode rows are
    samples of a continuous spectrum with quadrature weights.
    """

    energies: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    values: np.ndarray
    theta_weights: np.ndarray
    position: AtomPosition
    orders: tuple | None = None
    energy_weights: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("energies", "theta", "phi"):
            axis = np.asarray(getattr(self, name))
            if axis.ndim != 1 or np.any(np.diff(axis) <= 0):
                raise ValueError(f"{name} axis must be strictly increasing")
        shape = (len(self.energies), len(self.theta), len(self.phi))
        if self.values.shape != shape:
            raise ValueError(f"values have shape {self.values.shape}, expected {shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("amplitudes must be finite")

    @property
    def probability(self):
        return np.abs(self.values) ** 2

    def angular_weights(self):
        dphi = 2 * np.pi / len(self.phi)
        return np.outer(self.theta_weights, np.full(len(self.phi), dphi))

    def angular_yield(self):
        """Per-row yield integrated over all emission directions."""
        return np.tensordot(self.probability, self.angular_weights(), axes=([1, 2], [0, 1]))


@dataclass(frozen=True)
class SidebandWindow:
    """Energy window ``[E_n - eps, E_n + eps]`` around sideband ``n``."""

    n: int
    center: float
    half_width: float

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("sideband half-width must be positive")
        if not self.center - self.half_width > 0:
            raise ValueError("sideband window reaches below threshold")

    @classmethod
    def for_order(cls, n, xuv: XuvSpec, omega_l, e_i, half_width=None, ponderomotive=0.0):
        if half_width is None:
            half_width = omega_l / 4
        if half_width >= omega_l / 2:
            raise ValueError("windows of adjacent sidebands would overlap")
        return cls(n, sideband_energy(n, xuv, omega_l, e_i, ponderomotive), half_width)

    def contains(self, energy):
        return np.abs(np.asarray(energy) - self.center) <= self.half_width


@dataclass(frozen=True)
class SidebandPacket:
    """Amplitudes of one sideband on its energy shell(s) with quadrature weights."""

    values: np.ndarray
    weights: np.ndarray
    n_phi: int
    window: SidebandWindow

    @property
    def norm(self):
        return float(np.sum(self.weights * np.abs(self.values) ** 2))

    def m_spectrum(self):
        """Weight of each azimuthal quantum number ``m`` (index order of ``fftfreq``)."""
        coef = np.fft.fft(self.values, axis=-1) / self.n_phi
        w = self.weights[..., :1] * self.n_phi
        return np.fft.fftfreq(self.n_phi, 1.0 / self.n_phi).astype(int), \
            np.sum(w * np.abs(coef) ** 2, axis=tuple(range(coef.ndim - 1)))


# --------------------------------------------------------------------------
# continuous-wave sidebands


def _bessel_coef(n, u, chi):
    return (1j) ** n * jv(n, u) * np.exp(-1j * n * chi)


def _momentum_vectors(p, theta, phi):
    st = np.sin(theta)
    return p * np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta) + 0 * phi], axis=-1)


def _cw_core(C, G, omega, order, energy, theta, phi, D0, D1):
    pvec = _momentum_vectors(math.sqrt(2 * energy), theta, phi)
    P1 = pvec @ C
    P2 = np.einsum("...i,ij,...j->...", pvec, G, pvec)
    Z = 1j * P1 / omega + P2 / omega**2
    u, chi = np.abs(Z), np.angle(Z)
    V = C - 1j * np.einsum("ij,...j->...i", G, pvec) / omega
    vd = np.sum(V * D1, axis=-1)
    vbd = np.sum(np.conj(V) * D1, axis=-1)
    return (_bessel_coef(-order, u, chi) * D0
            - 0.5j * vd * _bessel_coef(-order + 1, u, chi)
            - 0.5j * vbd * _bessel_coef(-order - 1, u, chi))


def cw_sideband(beam: BeamSpec, pos: AtomPosition, xuv: XuvSpec, table: DipoleTable, order,
                theta, phi):
    """Amplitude of sideband ``order`` for emission directions ``(theta, phi)``.

    Returns ``(energy, amplitude)``; ``|amplitude|^2`` is the line strength per
    solid angle (the common ``2 pi delta`` factor of the continuous-wave limit
    is kept as ``-2 pi i``).
    """
    C = complex_amplitude(beam, pos.vector)
    G = complex_gradient(beam, pos.vector)
    U = 0.25 * float(np.vdot(C, C).real)
    energy = sideband_energy(order, xuv, beam.omega, -table.ionization_energy, U)
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    if energy <= 0:
        return energy, np.zeros(theta.shape, dtype=complex)
    D0, D1 = table.elements(energy, theta, phi, xuv.vector(pos.phi0))
    T = _cw_core(C, G, beam.omega, order, energy, theta, phi, D0, D1)
    return energy, -2j * np.pi * xuv.field * T


def cw_amplitude_grid(beam, pos, xuv, table, orders=range(-2, 3), n_theta=32, n_phi=32):
    theta, tw, phi = angular_grid(n_theta, n_phi)
    TH, PH = np.meshgrid(theta, phi, indexing="ij")
    orders = tuple(sorted(orders))
    energies, rows = [], []
    for n in orders:
        e, a = cw_sideband(beam, pos, xuv, table, n, TH, PH)
        energies.append(e)
        rows.append(a)
    meta = {"mode": "cw", "beam": _beam_meta(beam), "xuv": _xuv_meta(xuv)}
    return AmplitudeGrid(np.array(energies), theta, phi, np.array(rows), tw, pos,
                         orders=orders, metadata=meta)


# --------------------------------------------------------------------------
# time-domain amplitude


def _pulse_integrand(exp, pt, xuv, table, t):
    harm = phase_harmonic(exp, pt)
    D0, D1 = table.elements(pt.energy, pt.theta_p, pt.phi_p, xuv.vector(exp.position.phi0))
    shift = exp.vector_potential(t) - k_shift(exp, pt, t, field_term=False)
    env = 1.0 if xuv.envelope is None else xuv.envelope(t)
    e_i = -table.ionization_energy
    return (xuv.field * env * np.exp(1j * harm(t) - 1j * (xuv.omega + e_i) * t)
            * (D0 - 1j * shift @ D1))


def amplitude(pt: MomentumPoint, pos: AtomPosition, beam: BeamSpec, xuv: XuvSpec, t_grid,
              table: DipoleTable):
    """Time-domain amplitude by trapezoidal quadrature over ``t_grid``."""
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 3 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be a strictly increasing 1-d array")
    exp = local_expansion(beam, pos)
    return -1j * np.trapezoid(_pulse_integrand(exp, pt, xuv, table, t), t)


def pulsed_amplitude_grid(beam, pos, xuv, table, energies, t_grid, n_theta=16, n_phi=16):
    theta, tw, phi = angular_grid(n_theta, n_phi)
    energies = np.asarray(energies, dtype=float)
    exp = local_expansion(beam, pos)
    t = np.asarray(t_grid, dtype=float)
    vals = np.empty((len(energies), n_theta, n_phi), dtype=complex)
    for i, e in enumerate(energies):
        for j, th in enumerate(theta):
            for k, ph in enumerate(phi):
                pt = MomentumPoint(math.sqrt(2 * e), th, ph)
                vals[i, j, k] = -1j * np.trapezoid(_pulse_integrand(exp, pt, xuv, table, t), t)
    ew = np.gradient(energies) if len(energies) > 1 else np.ones(1)
    meta = {"mode": "pulsed", "beam": _beam_meta(beam), "xuv": _xuv_meta(xuv)}
    return AmplitudeGrid(energies, theta, phi, vals, tw, pos, energy_weights=ew, metadata=meta)


# --------------------------------------------------------------------------
# sideband projection and observables


def sideband_project(grid: AmplitudeGrid, win: SidebandWindow) -> SidebandPacket:
    """Restrict ``grid`` to the energy window ``win`` (coherent sideband packet)."""
    rows = np.nonzero(win.contains(grid.energies))[0]
    if grid.orders is not None:
        rows = [i for i in rows if grid.orders[i] == win.n] or list(rows)
    if len(rows) == 0:
        raise ValueError(f"window around E={win.center:.4g} contains no grid energies")
    ang = grid.angular_weights()
    ew = np.ones(len(rows)) if grid.energy_weights is None else grid.energy_weights[rows]
    weights = ew[:, None, None] * ang[None]
    return SidebandPacket(grid.values[rows], weights, len(grid.phi), win)


def expected_Lz(sb: SidebandPacket, tail_tol=1e-6):
    """``<L_z>`` in units of hbar from the azimuthal Fourier content of the packet.

    Each emission direction contributes ``-i d/d phi`` of the amplitude, which
    equals ``sum_m m |c_lm|^2 / sum |c_lm|^2`` over partial waves.
    """
    m, weight = sb.m_spectrum()
    total = weight.sum()
    if not total > 0:
        raise ValueError("sideband packet has zero norm")
    edge = np.abs(m) >= sb.n_phi // 2 - 1
    if weight[edge].sum() > tail_tol * total:
        raise ConvergenceError("azimuthal grid too coarse for the sideband's OAM content")
    return float(np.sum(m * weight) / total)


# --------------------------------------------------------------------------
# spot averaging


class ProfileKind(str, Enum):
    GAUSSIAN_XUV = "gaussian-xuv"
    RVB_DONUT = "rvb-donut"


@dataclass(frozen=True)
class SpotProfile:
    """Transverse XUV profile: ``exp(-(rho/(2w))^2)`` or ``(rho/w) exp(-rho^2/w^2)``."""

    kind: ProfileKind
    width: float

    def __post_init__(self):
        object.__setattr__(self, "kind", ProfileKind(self.kind))
        if not self.width > 0:
            raise ValueError("profile width must be positive")

    def __call__(self, rho):
        x = np.asarray(rho, dtype=float) / self.width
        if self.kind == ProfileKind.GAUSSIAN_XUV:
            return np.exp(-0.25 * x**2)
        return x * np.exp(-x**2)

    @property
    def cutoff(self):
        return 4.0 * self.width


def _ring_yield(beam, xuv, table, order, rho0, theta, phi_p, n_phi0):
    """``int d phi0 |A|^2`` at radius ``rho0`` for directions ``(theta, phi_p)``."""
    total = np.zeros(np.broadcast(theta, phi_p).shape)
    for phi0 in 2 * np.pi * np.arange(n_phi0) / n_phi0:
        _, a = cw_sideband(beam, AtomPosition(rho0, phi0), xuv, table, order, theta, phi_p)
        total += np.abs(a) ** 2
    return total * 2 * np.pi / n_phi0


def spot_average(beam: BeamSpec, xuv: XuvSpec, profile: SpotProfile, table: DipoleTable, order,
                 theta, phi_p=0.0, n_phi0=16, tol=1e-4, nodes=16, max_nodes=512):
    """Spot-averaged sideband yield ``int rho0 d rho0 d phi0 |f(rho0) A_p(rho0, phi0)|^2``.

    The radial integral runs over ``[0, 4 w]`` with Gauss-Legendre rules that
    double until successive results agree to ``tol`` (relative to the peak).
    """
    theta = np.asarray(theta, dtype=float)
    cutoff = profile.cutoff

    def rule(n):
        x, w = np.polynomial.legendre.leggauss(n)
        rho = 0.5 * cutoff * (x + 1)
        out = 0.0
        for r, wt in zip(rho, w):
            ring = _ring_yield(beam, xuv, table, order, r, theta, phi_p, n_phi0)
            out = out + 0.5 * cutoff * wt * r * profile(r) ** 2 * ring
        return out

    prev = rule(nodes)
    while nodes < max_nodes:
        nodes *= 2
        cur = rule(nodes)
        if np.max(np.abs(cur - prev)) <= tol * max(np.max(np.abs(cur)), 1e-300):
            return cur
        prev = cur
    raise ConvergenceError(f"spot average not converged with {max_nodes} radial nodes")


def orbital_dichroism(W_plus, W_minus):
    """``(W+ - W-) / (W+ + W-)``."""
    wp, wm = np.asarray(W_plus, dtype=float), np.asarray(W_minus, dtype=float)
    den = wp + wm
    if np.any(den <= 0):
        raise ValueError("dichroism needs a positive total yield")
    out = (wp - wm) / den
    return float(out) if out.ndim == 0 else out


def angular_centroid(grid: AmplitudeGrid, row, fold=False):
    """Probability-weighted mean polar angle of one energy row.

    With ``fold=True`` the angle is measured from the nearer pole,
    ``min(theta, pi - theta)``, which separates on-axis from transverse emission
    when the two hemispheres mirror each other.
    """
    prob = grid.probability[row] * grid.angular_weights()
    total = prob.sum()
    if not total > 0:
        raise ValueError("row has zero probability")
    theta = np.minimum(grid.theta, np.pi - grid.theta) if fold else grid.theta
    return float(np.sum(prob.sum(axis=1) * theta) / total)


# --------------------------------------------------------------------------
# export


def _beam_meta(beam):
    return {"kind": beam.kind.value, "A0": beam.A0, "omega": beam.omega,
            "q_perp": beam.q_perp, "q_z": beam.q_z, "m": beam.m, "sigma": beam.sigma,
            "m1": beam.m1, "m2": beam.m2, "alpha": beam.alpha, "beta": beam.beta,
            "rvb_order": beam.rvb_order}


def _xuv_meta(xuv):
    return {"omega": xuv.omega, "polarization": xuv.polarization.value, "field": xuv.field,
            "pulsed": xuv.envelope is not None}


def grid_metadata(grid: AmplitudeGrid):
    """JSON-ready description of ``grid`` (atomic units)."""
    return {
        **grid.metadata,
        "position": {"rho0": grid.position.rho0, "phi0": grid.position.phi0},
        "orders": list(grid.orders) if grid.orders is not None else None,
        "energies": [float(e) for e in grid.energies],
        "n_theta": len(grid.theta),
        "n_phi": len(grid.phi),
    }


def write_csv(grid: AmplitudeGrid, path, json_path=None):
    """Write ``E, theta, phi, re, im, prob`` rows in grid order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["E", "theta", "phi", "re", "im", "prob"])
        for i, e in enumerate(grid.energies):
            for j, th in enumerate(grid.theta):
                for k, ph in enumerate(grid.phi):
                    a = grid.values[i, j, k]
                    writer.writerow([f"{e:.12g}", f"{th:.12g}", f"{ph:.12g}",
                                     f"{a.real:.12g}", f"{a.imag:.12g}", f"{abs(a) ** 2:.12g}"])
    if json_path is not None:
        with open(json_path, "w") as fh:
            json.dump(grid_metadata(grid), fh, indent=2, sort_keys=True)
