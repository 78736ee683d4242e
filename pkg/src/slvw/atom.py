"""Single-active-electron helium: model potential, 1s state, continuum waves
and XUV dipole matrix elements.

Radial equations are solved with Numerov's method on a log-linear grid
``x = ln r + r / beta``, which is dense near the nucleus and close to uniform
at large radius.  With ``u(r) = sqrt(dr/dx) y(x)`` the radial equation
``u'' = -Q u``, ``Q = 2 (E - V) - l (l + 1) / r^2``, becomes
``y'' = -(r_x^2 Q + S / 2) y`` where ``S`` is the Schwarzian term of the map.

Continuum waves are energy normalised, ``u -> sqrt(2 / (pi k)) sin(k r -
l pi / 2 - eta ln 2kr + sigma_l + delta_l)``, and the incoming-wave state is

    Psi_p^- = sum_lm i^l exp(-i (sigma_l + delta_l)) u_l(r) / r Y*_lm(p) Y_lm(r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import mpmath
import numba
import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import loggamma, sph_harm_y

__all__ = [
    "ModelPotential",
    "HELIUM_TONG_LIN",
    "model_potential",
    "RadialGrid",
    "BoundState",
    "ContinuumWave",
    "SolverError",
    "Polarization",
    "solve_bound_1s",
    "solve_continuum",
    "coulomb_phase",
    "polarization_vector",
    "xuv_matrix_element",
    "DipoleTable",
]


class SolverError(RuntimeError):
    """Eigenvalue search or continuum matching failed."""


# --------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class ModelPotential:
    """``V(r) = -[Zc + a1 exp(-a2 r) + a3 r exp(-a4 r) + a5 exp(-a6 r)] / r``."""

    Zc: float = 1.0
    a1: float = 0.0
    a2: float = 1.0
    a3: float = 0.0
    a4: float = 1.0
    a5: float = 0.0
    a6: float = 1.0
    name: str = "custom"

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise ValueError("model potential needs r > 0")
        return -self.effective_charge(r) / r

    def effective_charge(self, r):
        r = np.asarray(r, dtype=float)
        return (self.Zc + self.a1 * np.exp(-self.a2 * r) + self.a3 * r * np.exp(-self.a4 * r)
                + self.a5 * np.exp(-self.a6 * r))

    @property
    def origin_charge(self):
        """``-lim r V(r)`` as ``r -> 0``."""
        return self.Zc + self.a1 + self.a5

    @property
    def is_free(self):
        return self.origin_charge == 0 and self.Zc == 0

    @classmethod
    def coulomb(cls, Z=1.0):
        return cls(Zc=Z, name=f"coulomb(Z={Z:g})")

    @classmethod
    def free(cls):
        return cls(Zc=0.0, name="free")


# Tong and Lin, J. Phys. B 38, 2593 (2005), Table 1, He
HELIUM_TONG_LIN = ModelPotential(
    Zc=1.0, a1=1.231, a2=0.662, a3=-1.325, a4=1.236, a5=-0.231, a6=0.480, name="He (Tong-Lin)"
)


def model_potential(r, potential: ModelPotential = HELIUM_TONG_LIN):
    """Evaluate ``potential`` (helium by default) at ``r > 0``."""
    return potential(r)


# --------------------------------------------------------------------------
# grid and integrators


@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid in ``x = ln r + r / beta``."""

    r_min: float = 1e-5
    r_max: float = 150.0
    n: int = 20001
    beta: float = 1.0
    r: np.ndarray = field(init=False, repr=False, compare=False)
    dr_dx: np.ndarray = field(init=False, repr=False, compare=False)
    h: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 < self.r_min < self.r_max:
            raise ValueError("grid needs 0 < r_min < r_max")
        if self.n < 100 or self.n % 2 == 0:
            raise ValueError("grid needs an odd point count of at least 100")
        b = self.beta
        x = np.linspace(math.log(self.r_min) + self.r_min / b,
                        math.log(self.r_max) + self.r_max / b, self.n)
        # Newton in s = ln r on the convex s + exp(s) / b = x, started above the root
        s = np.where(x > 0, np.minimum(x, np.log(b * np.maximum(x, 1e-300))), x)
        for _ in range(200):
            e = np.exp(s) / b
            step = (s + e - x) / (1.0 + e)
            s = s - step
            if np.max(np.abs(step)) < 1e-15:
                break
        r = np.exp(s)
        r[0], r[-1] = self.r_min, self.r_max
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "dr_dx", r * b / (b + r))
        object.__setattr__(self, "h", x[1] - x[0])

    @property
    def schwarzian(self):
        b, r = self.beta, self.r
        return b**3 * (-0.5 * b - 2.0 * r) / (b + r) ** 4

    def numerov_g(self, potential, energy, l):
        """Coefficient ``g`` of ``y'' = g y`` in the grid variable."""
        r, rp = self.r, self.dr_dx
        Q = 2.0 * (energy - potential(r)) - l * (l + 1) / r**2
        return -(rp**2 * Q + 0.5 * self.schwarzian)

    def integrate(self, f):
        """``int f(r) dr`` for samples of ``f`` on the grid (Simpson rule)."""
        from scipy.integrate import simpson

        return simpson(f * self.dr_dx, dx=self.h)


@numba.njit(cache=True)
def _numerov(g, h, y0, y1, out, start, stop, step):
    """Numerov sweep from ``start`` towards ``stop``; returns the node count."""
    c = h * h / 12.0
    out[start] = y0
    out[start + step] = y1
    nodes = 0
    i = start + step
    while i != stop:
        j = i + step
        out[j] = (2.0 * out[i] * (1.0 + 5.0 * c * g[i]) - out[i - step] * (1.0 - c * g[i - step])) \
            / (1.0 - c * g[j])
        if out[j] * out[i] < 0.0:
            nodes += 1
        if abs(out[j]) > 1e200:
            k = start
            while k != j + step:
                out[k] *= 1e-200
                k += step
        i = j
    return nodes


def _start_values(grid, potential, l, energy):
    """Near-origin series ``u = r^(l+1) [1 - Z0 r / (l+1)]`` mapped to ``y``."""
    r, rp = grid.r[:2], grid.dr_dx[:2]
    z0 = potential.origin_charge
    u = r ** (l + 1) * (1.0 - z0 * r / (l + 1))
    return u / np.sqrt(rp)


# --------------------------------------------------------------------------
# bound state


@dataclass(frozen=True)
class BoundState:
    """Normalised s-state radial function ``u(r)`` on ``grid``."""

    energy: float
    u: np.ndarray
    grid: RadialGrid
    potential: ModelPotential
    l: int = 0
    m: int = 0

    @property
    def norm(self):
        return float(self.grid.integrate(self.u**2))

    @property
    def nodes(self):
        inner = self.u[self.grid.r < 0.8 * self.grid.r_max]
        return int(np.sum(inner[1:] * inner[:-1] < 0))


def solve_bound_1s(potential: ModelPotential = HELIUM_TONG_LIN, grid: RadialGrid | None = None,
                   tol=1e-13) -> BoundState:
    """Lowest ``l = 0`` eigenstate by node-count bisection and two-sided matching."""
    if grid is None:
        grid = RadialGrid(r_max=60.0, n=20001)
    z0 = potential.origin_charge
    if z0 <= 0:
        raise SolverError("potential has no bound state")
    y = np.empty(grid.n)
    y0, y1 = _start_values(grid, potential, 0, 0.0)
    lo, hi = -z0**2, 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g = grid.numerov_g(potential, mid, 0)
        nodes = _numerov(g, grid.h, y0, y1, y, 0, grid.n - 1, 1)
        if nodes >= 1:
            hi = mid
        else:
            lo = mid
        if hi - lo < tol * max(1.0, abs(mid)):
            break
    else:
        raise SolverError("bound-state bisection did not converge")
    energy = 0.5 * (lo + hi)
    if hi == 0.0 and energy > -1e-8:
        raise SolverError("no bound s state below threshold")
    g = grid.numerov_g(potential, energy, 0)
    out = np.empty(grid.n)
    _numerov(g, grid.h, y0, y1, out, 0, grid.n - 1, 1)
    # classical turning point, then inward integration from the tail
    veff = potential(grid.r) - energy
    outside = np.nonzero(veff > 0)[0]
    turn = int(outside[0]) if outside.size else grid.n // 2
    match = min(max(turn + 50, 10), grid.n - 10)
    inward = np.empty(grid.n)
    _numerov(g, grid.h, 0.0, 1e-300, inward, grid.n - 1, match - 1, -1)
    inward[match:] *= out[match] / inward[match]
    y_full = np.concatenate([out[:match], inward[match:]])
    u = y_full * np.sqrt(grid.dr_dx)
    u /= math.sqrt(grid.integrate(u**2))
    if u[np.argmax(np.abs(u))] < 0:
        u = -u
    return BoundState(energy, u, grid, potential)


# --------------------------------------------------------------------------
# continuum


def coulomb_phase(l, k, Z=1.0):
    """Coulomb phase ``sigma_l = arg Gamma(l + 1 + i eta)`` with ``eta = -Z / k``."""
    eta = -Z / k
    return float(np.imag(loggamma(l + 1 + 1j * eta)))


@dataclass(frozen=True)
class ContinuumWave:
    """Energy-normalised incoming-wave partial waves at one energy.

    ``coulomb[l]`` is the Coulomb phase of the asymptotic charge and
    ``short_range[l]`` the extra shift from the model potential; the
    incoming-wave coefficient of channel ``l`` is ``i^l exp(-i total[l])``.
    """

    energy: float
    u: np.ndarray
    short_range: np.ndarray
    coulomb: np.ndarray
    grid: RadialGrid
    potential: ModelPotential
    boundary: str = "incoming"

    @property
    def k(self):
        return math.sqrt(2.0 * self.energy)

    @property
    def l_max(self):
        return len(self.short_range) - 1

    @property
    def total(self):
        return self.coulomb + self.short_range

    @property
    def coefficients(self):
        ls = np.arange(self.l_max + 1)
        return (1j) ** ls * np.exp(-1j * self.total)


def _asymptotic_pair(l, eta, rho):
    F = float(mpmath.coulombf(l, eta, rho))
    G = float(mpmath.coulombg(l, eta, rho))
    return F, G


def solve_continuum(potential: ModelPotential, energy, l_max=12, grid: RadialGrid | None = None,
                    match_offset=400) -> ContinuumWave:
    """Partial waves ``l = 0..l_max`` matched to Coulomb functions at large ``r``."""
    if not energy > 0:
        raise ValueError("continuum energy must be positive")
    if grid is None:
        grid = RadialGrid()
    k = math.sqrt(2.0 * energy)
    eta = -potential.Zc / k
    i1, i2 = grid.n - 1, grid.n - 1 - match_offset
    r1, r2 = grid.r[i1], grid.r[i2]
    us = np.empty((l_max + 1, grid.n))
    delta = np.empty(l_max + 1)
    sigma = np.empty(l_max + 1)
    y = np.empty(grid.n)
    norm = math.sqrt(2.0 / (math.pi * k))
    sq = np.sqrt(grid.dr_dx)
    for l in range(l_max + 1):
        g = grid.numerov_g(potential, energy, l)
        y0, y1 = _start_values(grid, potential, l, energy)
        if y0 == 0.0:
            y0 = 1e-300
        _numerov(g, grid.h, y0, y1, y, 0, grid.n - 1, 1)
        u = y * sq
        F1, G1 = _asymptotic_pair(l, eta, k * r1)
        F2, G2 = _asymptotic_pair(l, eta, k * r2)
        det = F1 * G2 - F2 * G1
        if abs(det) < 1e-8:
            raise SolverError(f"matching points are degenerate for l={l}")
        a = (u[i1] * G2 - u[i2] * G1) / det
        b = (F1 * u[i2] - F2 * u[i1]) / det
        amp = math.hypot(a, b)
        if not np.isfinite(amp) or amp == 0:
            raise SolverError(f"continuum matching failed for l={l}")
        delta[l] = math.atan2(b, a)
        us[l] = u * norm / amp
        sigma[l] = coulomb_phase(l, k, potential.Zc) if potential.Zc else 0.0
    return ContinuumWave(energy, us, delta, sigma, grid, potential)


# --------------------------------------------------------------------------
# dipole matrix elements


class Polarization(str, Enum):
    CIRCULAR_PLUS = "circular+"
    CIRCULAR_MINUS = "circular-"
    LINEAR_Z = "linear-z"
    LINEAR_RADIAL = "linear-radial"


def polarization_vector(pol, phi0=0.0):
    """Unit (complex) XUV polarisation vector."""
    pol = Polarization(pol)
    if pol == Polarization.CIRCULAR_PLUS:
        return np.array([1.0, 1j, 0.0]) / math.sqrt(2.0)
    if pol == Polarization.CIRCULAR_MINUS:
        return np.array([1.0, -1j, 0.0]) / math.sqrt(2.0)
    if pol == Polarization.LINEAR_Z:
        return np.array([0.0, 0.0, 1.0 + 0j])
    return np.array([math.cos(phi0), math.sin(phi0), 0.0 + 0j])


CHANNELS = [(l, m) for l in range(3) for m in range(-l, l + 1)]


@lru_cache(maxsize=1)
def _angular_tensors():
    """``<Y_lm | n_i | Y_00>`` and ``<Y_lm | n_i n_j | Y_00>`` for l <= 2."""
    x, w = np.polynomial.legendre.leggauss(16)
    nphi = 16
    phi = 2 * np.pi * np.arange(nphi) / nphi
    theta = np.arccos(x)
    TH, PH = np.meshgrid(theta, phi, indexing="ij")
    W = np.outer(w, np.full(nphi, 2 * np.pi / nphi))
    n = np.stack([np.sin(TH) * np.cos(PH), np.sin(TH) * np.sin(PH), np.cos(TH)])
    y00 = 1.0 / math.sqrt(4 * math.pi)
    one = {}
    two = {}
    for l, m in CHANNELS:
        ylm = np.conj(sph_harm_y(l, m, TH, PH)) * y00 * W
        one[l, m] = np.einsum("ab,iab->i", ylm, n)
        two[l, m] = np.einsum("ab,iab,jab->ij", ylm, n, n)
    return one, two


def _clean(z, eps=1e-13):
    z = np.asarray(z, dtype=complex)
    return np.where(np.abs(z.real) < eps, 0.0, z.real) + 1j * np.where(np.abs(z.imag) < eps, 0.0, z.imag)


def radial_integral(bound: BoundState, cont: ContinuumWave, l, power):
    """``int u_bound(r) r^power u_El(r) dr``."""
    if cont.grid is not bound.grid and not np.array_equal(cont.grid.r, bound.grid.r):
        raise ValueError("bound and continuum states must share a grid")
    r = bound.grid.r
    return float(bound.grid.integrate(bound.u * cont.u[l] * r**power))


def xuv_matrix_element(bound: BoundState, cont: ContinuumWave, pol, phi0=0.0, operator="dipole"):
    """Channel amplitudes ``(l, m) -> (-i)^l e^{i delta_l} R_l <Y_lm|angular|Y_00>``.

    ``operator="dipole"`` gives ``<Psi^-|eps.r|1s>`` (l = 1 only).  With
    ``operator="quadrupole"`` each entry is the vector
    ``<Psi^-| r_i (eps.r) |1s>`` channel (l = 0 and 2).
    """
    eps = polarization_vector(pol, phi0)
    one, two = _angular_tensors()
    out = {}
    if cont.l_max < 2:
        raise ValueError("continuum needs at least l_max = 2")
    for l, m in CHANNELS:
        coef = (-1j) ** l * np.exp(1j * cont.total[l])
        if operator == "dipole":
            ang = _clean(one[l, m] @ eps)
            power = 1
        elif operator == "quadrupole":
            ang = _clean(two[l, m] @ eps)
            power = 2
        else:
            raise ValueError(f"unknown operator {operator!r}")
        if np.all(ang == 0):
            out[l, m] = ang * 0.0
            continue
        out[l, m] = coef * radial_integral(bound, cont, l, power) * ang
    return out


class DipoleTable:
    """Dipole and second-moment matrix elements interpolated over energy.

    ``D0(p_hat) = <Psi_p^-|eps.r|i>`` and ``D1_i(p_hat) = <Psi_p^-|r_i eps.r|i>``
    need only ``l <= 2``; the radial integrals and phases are tabulated on an
    energy grid and splined.
    """

    def __init__(self, potential: ModelPotential = HELIUM_TONG_LIN, e_min=0.05, e_max=3.0,
                 n_energy=48, grid: RadialGrid | None = None, bound: BoundState | None = None):
        self.grid = grid or RadialGrid()
        self.potential = potential
        if bound is None:
            bound = solve_bound_1s(potential, grid=self.grid)
        self.bound = bound
        self.energies = np.linspace(e_min, e_max, n_energy)
        r = self.grid.r
        rad = np.empty((n_energy, 3))
        phases = np.empty((n_energy, 3))
        for i, e in enumerate(self.energies):
            cont = solve_continuum(potential, e, l_max=2, grid=self.grid)
            for l in range(3):
                power = 1 if l == 1 else 2
                rad[i, l] = self.grid.integrate(bound.u * cont.u[l] * r**power)
            phases[i] = cont.total
        phases = np.unwrap(phases, axis=0)
        self._rad = CubicSpline(self.energies, rad, axis=0)
        self._phase = CubicSpline(self.energies, phases, axis=0)

    @property
    def ionization_energy(self):
        return -self.bound.energy

    def radial(self, energy):
        return self._rad(energy)

    def phases(self, energy):
        return self._phase(energy)

    def _check(self, energy):
        e = np.asarray(energy)
        if np.any(e < self.energies[0] - 1e-12) or np.any(e > self.energies[-1] + 1e-12):
            raise ValueError(
                f"energy outside tabulated range [{self.energies[0]}, {self.energies[-1]}]")

    def channel_factors(self, energy):
        """``(-i)^l e^{i delta_l} R_l(E)`` for ``l = 0, 1, 2``."""
        self._check(energy)
        ls = np.arange(3)
        return (-1j) ** ls * np.exp(1j * self.phases(energy)) * self.radial(energy)

    def elements(self, energy, theta, phi, eps):
        """Return ``(D0, D1)`` for momenta ``(energy, theta, phi)`` and polarisation ``eps``.

        Arguments broadcast; ``D1`` gets a trailing axis of length 3.
        """
        energy, theta, phi = np.broadcast_arrays(*(np.asarray(a, dtype=float)
                                                    for a in (energy, theta, phi)))
        one, two = _angular_tensors()
        fac = self.channel_factors(energy)
        D0 = np.zeros(energy.shape, dtype=complex)
        D1 = np.zeros(energy.shape + (3,), dtype=complex)
        for l, m in CHANNELS:
            y = sph_harm_y(l, m, theta, phi)
            if l == 1:
                D0 = D0 + fac[..., 1] * y * (one[l, m] @ eps)
            else:
                D1 = D1 + (fac[..., l] * y)[..., None] * (two[l, m] @ eps)
        return D0, D1
