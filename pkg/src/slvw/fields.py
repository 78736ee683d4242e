"""Near-axis vector potentials of structured laser beams.

Every beam is represented by a complex, time-independent amplitude ``C(r)``
such that the physical vector potential is

    A(r, t) = Re[C(r) exp(-i omega t)]

with the propagation factor ``exp(i q_z z)`` already folded into ``C``.
Radial profiles are the near-axis power laws ``F_m(rho) = (q_perp rho)^m``.

Two independent code paths exist on purpose.  :func:`complex_amplitude`
evaluates each beam literally in its cylindrical (or Cartesian) form, while
:func:`complex_gradient` differentiates a holomorphic decomposition in
``w = x + i s y``.  The finite-difference tests tie the two together.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .units import C_AU

__all__ = [
    "BeamKind",
    "BeamSpec",
    "AtomPosition",
    "LocalExpansion",
    "FieldError",
    "ValidityWarning",
    "beam_diagnostics",
    "complex_amplitude",
    "complex_gradient",
    "eval_vector_potential",
    "eval_gradient",
    "check_divergence",
    "local_expansion",
]


class FieldError(ValueError):
    """Invalid beam definition or evaluation point."""


class ValidityWarning(UserWarning):
    """Evaluation outside the near-axis region where the power-law profiles hold."""


class BeamKind(str, Enum):
    VORTEX_PARALLEL = "VortexParallel"
    VORTEX_ANTIPARALLEL = "VortexAntiparallel"
    AZIMUTHAL = "Azimuthal"
    RADIAL = "Radial"
    SKYRMION = "Skyrmion"
    UNIFORM_CIRCULAR = "UniformCircular"


_VORTEX_KINDS = (BeamKind.VORTEX_PARALLEL, BeamKind.VORTEX_ANTIPARALLEL)
DISPERSION_RTOL = 1e-12
DEFAULT_VALIDITY = 25.0  # in units of 1/q_L


def _default_sigma(kind, m):
    if kind == BeamKind.VORTEX_PARALLEL:
        return int(np.sign(m)) or 1
    if kind == BeamKind.VORTEX_ANTIPARALLEL:
        return -int(np.sign(m)) or 1
    return 1


def beam_diagnostics(kind, A0, omega, q_perp, q_z, m=0, sigma=None, m1=0, m2=0,
                     alpha=1.0, beta=0.0, rvb_order=3, validity="error"):
    """List every invariant a candidate beam violates (empty when valid)."""
    out = []
    try:
        kind = BeamKind(kind)
    except ValueError:
        return [f"kind: unknown beam kind {kind!r}"]
    if not omega > 0:
        out.append("omega: must be positive")
    if not q_z > 0:
        out.append("q_z: must be positive")
    if kind == BeamKind.UNIFORM_CIRCULAR:
        if not q_perp >= 0:
            out.append("q_perp: must be non-negative")
    elif not q_perp > 0:
        out.append("q_perp: must be positive")
    if not A0 >= 0:
        out.append("A0: must be non-negative")
    if omega > 0:
        q_l2 = (omega / C_AU) ** 2
        if abs(q_perp**2 + q_z**2 - q_l2) > DISPERSION_RTOL * q_l2:
            out.append(
                "dispersion: q_perp^2 + q_z^2 must equal (omega/c)^2 "
                f"(got {q_perp**2 + q_z**2:.6e}, expected {q_l2:.6e})"
            )
    if sigma is not None and sigma not in (1, -1):
        out.append("sigma: helicity must be +1 or -1")
    if kind in _VORTEX_KINDS:
        if int(m) != m or m == 0:
            out.append("m: vortex kinds need a non-zero integer topological charge")
        elif sigma in (1, -1):
            if kind == BeamKind.VORTEX_PARALLEL and sigma != np.sign(m):
                out.append("sigma: parallel class requires sign(sigma) == sign(m)")
            if kind == BeamKind.VORTEX_ANTIPARALLEL and sigma != -np.sign(m):
                out.append("sigma: antiparallel class requires sign(sigma) == -sign(m)")
    if kind == BeamKind.SKYRMION:
        for name, val in (("m1", m1), ("m2", m2)):
            if int(val) != val or val < 0:
                out.append(f"{name}: winding magnitude must be a non-negative integer")
    if kind == BeamKind.RADIAL and rvb_order not in (1, 3):
        out.append("rvb_order: truncation order must be 1 or 3")
    if validity not in ("error", "warn", "ignore"):
        out.append("validity: must be 'error', 'warn' or 'ignore'")
    return out


@dataclass(frozen=True)
class BeamSpec:
    """A structured beam in atomic units.

    ``m`` is the signed topological charge of the vortex kinds; ``m1``/``m2``
    are the winding magnitudes of the two vortices forming a skyrmion, which is
    ``alpha * VortexParallel(m1) + beta * VortexParallel(-m2)``.  ``sigma``
    defaults to the value implied by the OAM/SAM class.
    """

    kind: BeamKind
    A0: float
    omega: float
    q_perp: float
    q_z: float
    m: int = 0
    sigma: int | None = None
    m1: int = 0
    m2: int = 0
    alpha: float = 1.0
    beta: float = 0.0
    rvb_order: int = 3
    validity_radius: float | None = None
    validity: str = "error"

    def __post_init__(self):
        try:
            kind = BeamKind(self.kind)
        except ValueError:
            raise FieldError(f"unknown beam kind {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)
        if self.sigma is None:
            object.__setattr__(self, "sigma", _default_sigma(kind, self.m))
        problems = beam_diagnostics(
            kind, self.A0, self.omega, self.q_perp, self.q_z, self.m, self.sigma,
            self.m1, self.m2, self.alpha, self.beta, self.rvb_order, self.validity,
        )
        if problems:
            raise FieldError("; ".join(problems))

    @classmethod
    def from_angle(cls, kind, A0, omega, angle, **kw):
        """Build from the focusing angle ``tan(angle) = q_perp / q_z``."""
        q_l = omega / C_AU
        return cls(kind, A0, omega, q_l * math.sin(angle), q_l * math.cos(angle), **kw)

    @classmethod
    def from_waist(cls, kind, A0, omega, waist, **kw):
        """Build from the beam waist, ``q_perp = 1 / waist``."""
        q_l = omega / C_AU
        q_perp = 1.0 / waist
        if q_perp >= q_l:
            raise FieldError(f"waist {waist:.4g} a.u. is below the diffraction limit 1/q_L")
        return cls(kind, A0, omega, q_perp, math.sqrt(q_l**2 - q_perp**2), **kw)

    @property
    def q_L(self):
        return self.omega / C_AU

    @property
    def focusing_angle(self):
        return math.atan2(self.q_perp, self.q_z)

    @property
    def radius_limit(self):
        if self.validity_radius is not None:
            return self.validity_radius
        return DEFAULT_VALIDITY / self.q_L

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class AtomPosition:
    """Atom in the focal plane (z0 = 0) at axial distance ``rho0``, azimuth ``phi0``."""

    rho0: float
    phi0: float = 0.0

    def __post_init__(self):
        if not self.rho0 >= 0:
            raise FieldError("rho0 must be non-negative")
        object.__setattr__(self, "phi0", float(self.phi0) % (2 * np.pi))

    @classmethod
    def from_cartesian(cls, x0, y0):
        return cls(math.hypot(x0, y0), math.atan2(y0, x0))

    @property
    def vector(self):
        return np.array([self.rho0 * math.cos(self.phi0), self.rho0 * math.sin(self.phi0), 0.0])


# --------------------------------------------------------------------------
# direct (printed-form) evaluation


def _check_point(beam, r):
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise FieldError("evaluation point must be a 3-vector")
    if beam.kind == BeamKind.UNIFORM_CIRCULAR or beam.validity == "ignore":
        return r
    rho = math.hypot(r[0], r[1])
    if rho > beam.radius_limit:
        msg = (f"rho = {rho:.4g} a.u. exceeds the near-axis validity radius "
               f"{beam.radius_limit:.4g} a.u.")
        if beam.validity == "error":
            raise FieldError(msg)
        warnings.warn(msg, ValidityWarning, stacklevel=3)
    return r


def _cyl_basis(phi):
    e_rho = np.array([math.cos(phi), math.sin(phi), 0.0])
    e_phi = np.array([-math.sin(phi), math.cos(phi), 0.0])
    return e_rho, e_phi


def complex_amplitude(beam: BeamSpec, r) -> np.ndarray:
    """Complex amplitude ``C(r)`` with ``A(r, t) = Re[C(r) exp(-i omega t)]``."""
    x, y, z = _check_point(beam, r)
    rho = math.hypot(x, y)
    phi = math.atan2(y, x)
    e_rho, e_phi = _cyl_basis(phi)
    e_z = np.array([0.0, 0.0, 1.0])
    prop = np.exp(1j * beam.q_z * z)
    qr = beam.q_perp * rho
    A0 = beam.A0
    kind = beam.kind

    def e_circ(s):
        return (e_rho + 1j * s * e_phi) * np.exp(1j * s * phi)

    if kind == BeamKind.UNIFORM_CIRCULAR:
        return A0 * prop * e_circ(beam.sigma)
    if kind == BeamKind.VORTEX_PARALLEL:
        n, s = abs(beam.m), int(np.sign(beam.m))
        sign = 1.0 if s > 0 else (-1.0) ** n
        return sign * A0 * qr**n * np.exp(1j * s * n * phi) * prop * e_circ(s)
    if kind == BeamKind.VORTEX_ANTIPARALLEL:
        n, s = abs(beam.m), int(np.sign(beam.m))
        sign = 1.0 if s > 0 else (-1.0) ** n
        bracket = qr**n * e_circ(-s) + (
            2j * n * beam.q_perp / beam.q_z * qr ** (n - 1) * np.exp(-1j * s * phi) * e_z
        )
        return sign * A0 * np.exp(1j * s * n * phi) * prop * bracket
    if kind == BeamKind.AZIMUTHAL:
        # A0 q_perp rho sin(q_z z - omega t) e_phi
        return -1j * A0 * qr * prop * e_phi
    if kind == BeamKind.RADIAL:
        c3 = 1.0 if beam.rvb_order == 3 else 0.0
        f = qr - c3 * qr**3 / 8
        g = 1.0 - c3 * qr**2 / 4
        return A0 * prop * (f * e_rho + 2j * beam.q_perp / beam.q_z * g * e_z)
    if kind == BeamKind.SKYRMION:
        m1, m2 = beam.m1, beam.m2
        a = beam.alpha * np.exp(1j * (m1 + m2 + 2) * phi) * qr**m1
        b = beam.beta * (-qr) ** m2
        phase = np.exp(-1j * (m2 + 1) * phi) * prop
        return A0 * phase * ((a + b) * e_rho + 1j * (a - b) * e_phi)
    raise FieldError(f"unsupported beam kind {kind}")


# --------------------------------------------------------------------------
# analytic gradients


def _holomorphic_terms(beam):
    """Decompose C into terms ``coef * (q_perp w_s)^n * vec``, ``w_s = x + i s y``."""
    A0, kind = beam.A0, beam.kind
    if kind == BeamKind.UNIFORM_CIRCULAR:
        s = beam.sigma
        return [(A0, s, 0, np.array([1, 1j * s, 0]))]
    if kind in _VORTEX_KINDS:
        n, s = abs(beam.m), int(np.sign(beam.m))
        c = A0 * (1.0 if s > 0 else (-1.0) ** n)
        if kind == BeamKind.VORTEX_PARALLEL:
            return [(c, s, n, np.array([1, 1j * s, 0]))]
        return [
            (c, s, n, np.array([1, -1j * s, 0])),
            (c * 2j * n * beam.q_perp / beam.q_z, s, n - 1, np.array([0, 0, 1.0 + 0j])),
        ]
    if kind == BeamKind.SKYRMION:
        terms = []
        if beam.alpha != 0:
            terms.append((beam.alpha * A0, 1, beam.m1, np.array([1, 1j, 0])))
        if beam.beta != 0:
            terms.append((beam.beta * A0 * (-1.0) ** beam.m2, -1, beam.m2, np.array([1, -1j, 0])))
        return terms
    return None


def complex_gradient(beam: BeamSpec, r) -> np.ndarray:
    """Complex gradient ``G[i, j] = d C_j / d r_i`` at ``r``."""
    x, y, z = _check_point(beam, r)
    qp = beam.q_perp
    prop = np.exp(1j * beam.q_z * z)
    G = np.zeros((3, 3), dtype=complex)
    C = np.zeros(3, dtype=complex)
    terms = _holomorphic_terms(beam)
    if terms is not None:
        for coef, s, n, vec in terms:
            w = qp * (x + 1j * s * y)
            C += coef * w**n * vec
            if n > 0:
                dw = coef * n * qp * w ** (n - 1) * vec
                G[0] += dw
                G[1] += 1j * s * dw
        C *= prop
        G[:2] *= prop
    elif beam.kind == BeamKind.AZIMUTHAL:
        k = -1j * beam.A0 * qp * prop
        C = k * np.array([-y, x, 0.0])
        G[0] = k * np.array([0.0, 1.0, 0.0])
        G[1] = k * np.array([-1.0, 0.0, 0.0])
    elif beam.kind == BeamKind.RADIAL:
        c3 = 1.0 if beam.rvb_order == 3 else 0.0
        rho2 = x * x + y * y
        h = 1.0 - c3 * qp**2 * rho2 / 8
        g = 1.0 - c3 * qp**2 * rho2 / 4
        lon = 2j * qp / beam.q_z
        k = beam.A0 * prop
        C = k * np.array([qp * h * x, qp * h * y, lon * g])
        for i, xi in enumerate((x, y)):
            dh = -c3 * qp**2 * xi / 4
            dg = -c3 * qp**2 * xi / 2
            unit = np.zeros(3)
            unit[i] = 1.0
            G[i] = k * (qp * (dh * np.array([x, y, 0.0]) + h * unit)
                        + lon * dg * np.array([0.0, 0.0, 1.0]))
    else:
        raise FieldError(f"unsupported beam kind {beam.kind}")
    G[2] = 1j * beam.q_z * C
    return G


def _real_part(amplitude, omega, t):
    t = np.asarray(t, dtype=float)
    phase = np.exp(-1j * omega * t)
    return np.real(np.multiply.outer(phase, amplitude))


def eval_vector_potential(beam: BeamSpec, r, t) -> np.ndarray:
    """Physical vector potential at ``r``; ``t`` may be an array (time axis first)."""
    return _real_part(complex_amplitude(beam, r), beam.omega, t)


def eval_gradient(beam: BeamSpec, r, t) -> np.ndarray:
    """Analytic ``M[i, j] = d A_j / d r_i`` at ``r``."""
    return _real_part(complex_gradient(beam, r), beam.omega, t)


def check_divergence(beam: BeamSpec, r, t) -> float:
    """div A evaluated from the analytic gradient."""
    return np.trace(eval_gradient(beam, r, t), axis1=-2, axis2=-1)


# --------------------------------------------------------------------------
# local first-order expansion


@dataclass(frozen=True)
class LocalExpansion:
    """``A(r0, t)`` and ``M(t)`` at an atom as sums of ``amp * cos(freq t + phase)``.

    The complex amplitude and gradient are kept alongside the sinusoid lists so
    that downstream phase bookkeeping can stay exact.
    """

    a_terms: tuple
    m_terms: tuple
    omega: float
    amplitude: np.ndarray
    gradient: np.ndarray
    position: AtomPosition

    @staticmethod
    def _sum(terms, t):
        t = np.asarray(t, dtype=float)
        out = 0.0
        for amp, freq, phase in terms:
            out = out + np.multiply.outer(np.cos(freq * t + phase), amp)
        return out

    def vector_potential(self, t):
        return self._sum(self.a_terms, t)

    def gradient_matrix(self, t):
        return self._sum(self.m_terms, t)

    @property
    def mean_square_potential(self):
        """Cycle average of A(r0, t)^2."""
        return 0.5 * float(np.vdot(self.amplitude, self.amplitude).real)


def local_expansion(beam: BeamSpec, pos: AtomPosition) -> LocalExpansion:
    r0 = pos.vector
    C = complex_amplitude(beam, r0)
    G = complex_gradient(beam, r0)
    w = beam.omega
    # Re[X e^{-i w t}] = Re X cos(w t) + Im X cos(w t - pi/2)
    a_terms = ((C.real, w, 0.0), (C.imag, w, -np.pi / 2))
    m_terms = ((G.real, w, 0.0), (G.imag, w, -np.pi / 2))
    return LocalExpansion(a_terms, m_terms, w, C, G, pos)
