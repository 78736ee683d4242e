"""Kinematic momenta and structured-light Volkov phases.

Conventions
-----------
The field at the atom is ``A(t) = Re[C exp(-i w t)]`` and its gradient
``M(t) = Re[G exp(-i w t)]`` with ``G[i, j] = d C_j / d r_i``.  The shift
vector is ``K(t) = int^t M(tau) . (p + A(tau)) dtau`` where
``(M . v)_i = M_ij v_j``.

The phase keeps

* the secular part ``(E_p + <A^2>/2) t``,
* the oscillatory field term ``int p . A``,
* the gradient term ``-int p . K_p`` with ``K_p = int M . p``,

and drops ``A . K``, ``K^2`` and the ``M . A`` part of ``K`` unless
``include_ma=True``.  All indefinite integrals are the purely oscillatory
antiderivatives, so with ``P1 = p . C`` and ``P2 = p . G . p``::

    S = (E_p + |C|^2 / 4) t + Re[(i P1 / w + P2 / w^2) exp(-i w t)]
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import AtomPosition, BeamKind, BeamSpec, LocalExpansion

__all__ = [
    "MomentumPoint",
    "PhaseResult",
    "QuadratureError",
    "PhaseHarmonic",
    "phase_harmonic",
    "kinematic_momentum",
    "k_shift",
    "phase_numeric",
    "phase_closed",
]


class QuadratureError(RuntimeError):
    """Raised when the phase quadrature misses its tolerance."""


@dataclass(frozen=True)
class MomentumPoint:
    """Asymptotic photoelectron momentum in spherical form (atomic units)."""

    p: float
    theta_p: float
    phi_p: float

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError(f"momentum magnitude must be positive, got {self.p}")
        if not 0.0 <= self.theta_p <= math.pi:
            raise ValueError(f"theta_p must lie in [0, pi], got {self.theta_p}")
        object.__setattr__(self, "phi_p", float(self.phi_p) % (2 * math.pi))

    @classmethod
    def from_energy(cls, energy, theta_p, phi_p):
        return cls(math.sqrt(2.0 * energy), theta_p, phi_p)

    @property
    def energy(self):
        return 0.5 * self.p**2

    @property
    def vector(self):
        st = math.sin(self.theta_p)
        return self.p * np.array(
            [st * math.cos(self.phi_p), st * math.sin(self.phi_p), math.cos(self.theta_p)]
        )


@dataclass(frozen=True)
class PhaseResult:
    """Phase value with its named contributions.

    ``breakdown`` holds ``secular`` (kinetic plus ponderomotive), ``field``
    (the oscillatory ``p . A`` term) and ``gradient`` (the ``M . p`` term);
    ``gradient_field`` appears when the ``M . A`` correction is switched on.
    """

    S: np.ndarray | float
    breakdown: dict = field(default_factory=dict)

    @property
    def oscillatory(self):
        return self.S - self.breakdown["secular"]


@dataclass(frozen=True)
class PhaseHarmonic:
    """``S(t) = rate * t + Re[Z exp(-i w t)]`` for a single-frequency field."""

    Z: complex
    rate: float
    omega: float
    P1: complex
    P2: complex

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.rate * t + (self.Z * np.exp(-1j * self.omega * t)).real


def _as_time(t):
    return np.asarray(t, dtype=float)


def phase_harmonic(exp: LocalExpansion, pt: MomentumPoint) -> PhaseHarmonic:
    """Closed harmonic form of the truncated phase built from ``exp``."""
    p = pt.vector
    C, G, w = exp.amplitude, exp.gradient, exp.omega
    P1 = complex(p @ C)
    P2 = complex(p @ G @ p)
    Z = 1j * P1 / w + P2 / w**2
    rate = pt.energy + 0.25 * float(np.vdot(C, C).real)
    return PhaseHarmonic(Z, rate, w, P1, P2)


# --------------------------------------------------------------------------
# kinematics


def _ma_parts(exp):
    """DC vector and complex 2w amplitude of ``M(t) . A(t)``."""
    C, G = exp.amplitude, exp.gradient
    return 0.5 * (G @ np.conj(C)).real, 0.5 * (G @ C)


def k_shift(exp: LocalExpansion, pt: MomentumPoint, t, drift=False, field_term=True):
    """Shift vector ``K(p, t) = int^t M . (p + A)``.

    Parameters
    ----------
    exp, pt
        Local field expansion and photoelectron momentum.
    t : float or array
        Times; a leading axis is added for arrays.
    drift : bool
        The DC part of ``M . A`` integrates to a term linear in ``t``.  With
        ``drift=False`` it is dropped and ``K`` is purely oscillatory; with
        ``drift=True`` it is integrated from ``t = 0``.
    field_term : bool
        ``False`` keeps only ``int M . p``, the part consistent with the
        default phase truncation.
    """
    t = _as_time(t)
    w = exp.omega
    G = exp.gradient
    p = pt.vector
    e1 = np.exp(-1j * w * t)[..., None]
    K = (1j * (G @ p) * e1).real / w
    if not field_term:
        return K
    dc, two = _ma_parts(exp)
    e2 = np.exp(-2j * w * t)[..., None]
    K = K + (1j * two * e2).real / (2 * w)
    if drift:
        K = K + np.multiply.outer(t, dc)
    return K


def kinematic_momentum(exp: LocalExpansion, pt: MomentumPoint, t):
    """``pi(p, t) = p + A(r0, t) - K(p, t)``.

    The DC part of ``M . A`` is kept as a drift integrated from ``t = 0`` so
    that the result follows the classical equation of motion
    ``d pi / dt = -E - M . pi`` to first order in the gradient.
    """
    t = _as_time(t)
    return pt.vector + exp.vector_potential(t) - k_shift(exp, pt, t, drift=True)


# --------------------------------------------------------------------------
# quadrature


def _periodic_check(exp):
    w = exp.omega
    for _, freq, _ in (*exp.a_terms, *exp.m_terms):
        ratio = freq / w
        if abs(ratio - round(ratio)) > 1e-12 or round(ratio) < 1:
            raise ValueError("phase quadrature needs harmonics of the carrier frequency")


def _osc_antiderivative(f, t, period, nodes):
    """Zero-mean antiderivative of a zero-mean ``period``-periodic function.

    ``F(t) = int_0^t f - (1/T) int_0^T (T - s) f(s) ds`` evaluated with
    Gauss-Legendre rules on ``[0, t mod T]`` and ``[0, T]``.
    """
    x, wts = np.polynomial.legendre.leggauss(nodes)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    tr = np.mod(t, period)
    u = 0.5 * np.multiply.outer(tr, x + 1.0)
    fu = f(u.ravel())
    fu = fu.reshape(u.shape + fu.shape[1:])
    head = 0.5 * np.tensordot(wts, np.moveaxis(fu, 1, 0), axes=1)
    head = head * tr.reshape(tr.shape + (1,) * (head.ndim - 1))
    s = 0.5 * period * (x + 1.0)
    fs = f(s)
    shift = 0.5 * period * np.tensordot(wts * (period - s), fs, axes=1) / period
    return head - shift


def _mean(f, period, nodes):
    x, wts = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * period * (x + 1.0)
    return 0.5 * np.tensordot(wts, f(s), axes=1)


def _numeric_parts(exp, pt, t, nodes, include_ma):
    T = 2 * math.pi / exp.omega
    p = pt.vector

    # the default terms only need p . A and p . M . p, so project once
    pa_terms = [(float(amp @ p), f, ph) for amp, f, ph in exp.a_terms]
    pmp_terms = [(float(p @ amp @ p), f, ph) for amp, f, ph in exp.m_terms]

    def mp(u):
        return exp.gradient_matrix(u) @ p

    def kp(u):
        return _osc_antiderivative(mp, u, T, nodes)

    def p_dot_a(u):
        return exp._sum(pa_terms, u)

    def p_dot_kp(u):
        return _osc_antiderivative(lambda s: exp._sum(pmp_terms, s), u, T, nodes)

    parts = {
        "secular": (pt.energy + 0.5 * _mean(lambda u: np.sum(exp.vector_potential(u) ** 2, axis=-1),
                                            T, nodes)) * t,
        "field": _osc_antiderivative(p_dot_a, t, T, nodes),
        "gradient": -_osc_antiderivative(p_dot_kp, t, T, nodes),
    }
    if include_ma:
        def ma(u):
            return np.einsum("...ij,...j->...i", exp.gradient_matrix(u), exp.vector_potential(u))

        dc = _mean(ma, T, nodes)

        def ka(u):
            return _osc_antiderivative(lambda s: ma(s) - dc, u, T, nodes)

        def cross(u):
            a = exp.vector_potential(u)
            return ka(u) @ p + np.sum(a * kp(u), axis=-1)

        cross_dc = _mean(cross, T, nodes)
        parts["gradient_field"] = (
            -(p @ dc) * t**2 / 2 - cross_dc * t
            - _osc_antiderivative(lambda u: cross(u) - cross_dc, t, T, nodes)
        )
    return parts


def phase_numeric(exp: LocalExpansion, pt: MomentumPoint, t, nodes=32, tol=1e-10,
                  include_ma=False) -> PhaseResult:
    """Truncated phase ``(1/2) int pi^2`` by Gauss-Legendre quadrature.

    Each oscillatory integral is evaluated with ``nodes`` and ``2 * nodes``
    points; a relative disagreement above ``tol`` raises
    :class:`QuadratureError`.  ``include_ma`` adds the ``M . A`` and
    ``A . K`` terms that the default truncation drops, reported under
    ``gradient_field`` (its DC part is integrated from ``t = 0``).
    """
    _periodic_check(exp)
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    coarse = _numeric_parts(exp, pt, t, nodes, include_ma)
    fine = _numeric_parts(exp, pt, t, 2 * nodes, include_ma)
    for name in fine:
        err = np.max(np.abs(fine[name] - coarse[name]))
        scale = max(1.0, float(np.max(np.abs(fine[name]))))
        if err > tol * scale:
            raise QuadratureError(f"{name} term did not converge: {err:.3g}")
    if scalar:
        fine = {k: float(v[0]) for k, v in fine.items()}
    return PhaseResult(sum(fine.values()), fine)


# --------------------------------------------------------------------------
# closed forms


def _powers(w, n):
    return w**n if n >= 0 else 0.0


def _parallel_terms(A0, qp, qz, n, s, x, y, p):
    """P1, P2 and ponderomotive rate of a parallel-class vortex of charge ``s * n``."""
    c = A0 * qp**n * (1.0 if s > 0 else (-1.0) ** n)
    W = x + 1j * s * y
    pt_ = p[0] + 1j * s * p[1]
    P1 = c * _powers(W, n) * pt_
    P2 = c * (n * _powers(W, n - 1) * pt_**2 + 1j * qz * p[2] * _powers(W, n) * pt_)
    rate = 0.5 * A0**2 * (qp * math.hypot(x, y)) ** (2 * n)
    return P1, P2, rate


def _antiparallel_terms(A0, qp, qz, m, x, y, p):
    n, s = abs(m), (1 if m > 0 else -1)
    c = A0 * qp**n * (1.0 if s > 0 else (-1.0) ** n)
    W = x + 1j * s * y
    plus = p[0] + 1j * s * p[1]
    minus = p[0] - 1j * s * p[1]
    lon = 2j * n / qz
    P1 = c * (_powers(W, n) * minus + lon * _powers(W, n - 1) * p[2])
    trans = c * (n * _powers(W, n - 1) * plus * minus
                 + lon * (n - 1) * _powers(W, n - 2) * plus * p[2])
    P2 = trans + 1j * qz * p[2] * P1
    qr = qp * math.hypot(x, y)
    rate = 0.5 * A0**2 * qr ** (2 * n) + n**2 * A0**2 * (qp / qz) ** 2 * _powers(qr, 2 * n - 2)
    return P1, P2, rate


def _azimuthal_terms(A0, qp, qz, x, y, p):
    P1 = -1j * A0 * qp * (x * p[1] - y * p[0])
    P2 = 1j * qz * p[2] * P1
    rate = 0.25 * (A0 * qp) ** 2 * (x * x + y * y)
    return P1, P2, rate


def _radial_terms(A0, qp, qz, order, x, y, p):
    c3 = 1.0 if order == 3 else 0.0
    rho2 = x * x + y * y
    h = 1.0 - c3 * qp**2 * rho2 / 8
    g = 1.0 - c3 * qp**2 * rho2 / 4
    rp = x * p[0] + y * p[1]
    perp2 = p[0] ** 2 + p[1] ** 2
    lon = 2j * qp / qz
    P1 = A0 * (qp * h * rp + lon * g * p[2])
    trans = A0 * (qp * (h * perp2 - c3 * qp**2 * rp**2 / 4)
                  + lon * (-c3 * qp**2 * rp / 2) * p[2])
    P2 = trans + 1j * qz * p[2] * P1
    rate = 0.25 * A0**2 * ((qp * h) ** 2 * rho2 + abs(lon * g) ** 2)
    return P1, P2, rate


def _closed_terms(beam, pos, p):
    A0, qp, qz = beam.A0, beam.q_perp, beam.q_z
    x, y = pos.rho0 * math.cos(pos.phi0), pos.rho0 * math.sin(pos.phi0)
    kind = beam.kind
    if kind == BeamKind.UNIFORM_CIRCULAR:
        return _parallel_terms(A0, qp, qz, 0, beam.sigma, x, y, p)
    if kind == BeamKind.VORTEX_PARALLEL:
        return _parallel_terms(A0, qp, qz, abs(beam.m), int(np.sign(beam.m)), x, y, p)
    if kind == BeamKind.VORTEX_ANTIPARALLEL:
        return _antiparallel_terms(A0, qp, qz, beam.m, x, y, p)
    if kind == BeamKind.AZIMUTHAL:
        return _azimuthal_terms(A0, qp, qz, x, y, p)
    if kind == BeamKind.RADIAL:
        return _radial_terms(A0, qp, qz, beam.rvb_order, x, y, p)
    if kind == BeamKind.SKYRMION:
        total = [0j, 0j, 0.0]
        for weight, n, s in ((beam.alpha, beam.m1, 1), (beam.beta, beam.m2, -1)):
            if weight == 0:
                continue
            P1, P2, rate = _parallel_terms(A0, qp, qz, n, s, x, y, p)
            total[0] += weight * P1
            total[1] += weight * P2
            total[2] += weight**2 * rate
        return tuple(total)
    raise ValueError(f"no closed-form phase for beam kind {kind}")


def phase_closed(beam: BeamSpec, pos: AtomPosition, pt: MomentumPoint, t) -> PhaseResult:
    """Closed-form truncated phase for any supported beam kind.

    The expressions are written directly in terms of the atom coordinates and
    the momentum components, so they do not share code with the field module.
    Every power of ``rho0`` that multiplies a negative power of ``W`` carries
    a zero prefactor, so the on-axis limit is exact.
    """
    t = _as_time(t)
    p = pt.vector
    w = beam.omega
    P1, P2, rate = _closed_terms(beam, pos, p)
    phase = np.exp(-1j * w * t)
    parts = {
        "secular": (pt.energy + rate) * t,
        "field": (1j * P1 * phase).real / w,
        "gradient": (P2 * phase).real / w**2,
    }
    if np.ndim(t) == 0:
        parts = {k: float(v) for k, v in parts.items()}
    return PhaseResult(sum(parts.values()), parts)
