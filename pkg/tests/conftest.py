import math

import numpy as np
import pytest

from slvw.fields import BeamKind, BeamSpec
from slvw.units import ev_to_au

OMEGA_IR = float(ev_to_au(1.55))


def make_beam(kind, A0=0.1, angle_deg=1.0, **kw):
    return BeamSpec.from_angle(kind, A0, OMEGA_IR, math.radians(angle_deg), **kw)


ALL_BEAMS = {
    "parallel+1": dict(kind=BeamKind.VORTEX_PARALLEL, m=1),
    "parallel-2": dict(kind=BeamKind.VORTEX_PARALLEL, m=-2),
    "antiparallel+1": dict(kind=BeamKind.VORTEX_ANTIPARALLEL, m=1),
    "antiparallel-1": dict(kind=BeamKind.VORTEX_ANTIPARALLEL, m=-1),
    "antiparallel+3": dict(kind=BeamKind.VORTEX_ANTIPARALLEL, m=3),
    "azimuthal": dict(kind=BeamKind.AZIMUTHAL),
    "radial": dict(kind=BeamKind.RADIAL),
    "radial-o1": dict(kind=BeamKind.RADIAL, rvb_order=1),
    "skyrmion": dict(kind=BeamKind.SKYRMION, m1=3, m2=1, alpha=7.0, beta=1.0),
    "uniform": dict(kind=BeamKind.UNIFORM_CIRCULAR),
}


@pytest.fixture(params=sorted(ALL_BEAMS))
def any_beam(request):
    spec = dict(ALL_BEAMS[request.param])
    return make_beam(spec.pop("kind"), angle_deg=20.0, **spec)


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


def random_points(beam, rng, n, frac=0.9):
    """Points in a cylinder of radius frac * validity radius, |z| of the same order."""
    rmax = frac * beam.radius_limit
    rho = rmax * np.sqrt(rng.uniform(0, 1, n))
    phi = rng.uniform(0, 2 * np.pi, n)
    z = rng.uniform(-1, 1, n) * 0.1 * rmax
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


ACCEPTANCE_LINES = []


def record_acceptance(number, passed, detail):
    """Print and keep one pass/fail line per acceptance criterion."""
    line = f"ACCEPTANCE {number}: {'PASS' if passed else 'FAIL'} | {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
