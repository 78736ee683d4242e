"""Batch driver: ``slvw <study> --config run.yaml``.

Configs are YAML.  Physical quantities are either bare numbers (atomic units)
or strings with a unit, e.g. ``"1.55 eV"``, ``"7 um"``, ``"2e14 W/cm2"``,
``"20 deg"``.  Conversion happens here; everything downstream is a.u.

Exit codes: 0 success, 2 invalid config, 3 numerical gate failed, 4 I/O.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .atom import HELIUM_TONG_LIN, DipoleTable, ModelPotential, Polarization, SolverError
from .fields import (
    AtomPosition,
    BeamKind,
    BeamSpec,
    FieldError,
    ValidityWarning,
    beam_diagnostics,
    check_divergence,
    complex_amplitude,
    eval_gradient,
    eval_vector_potential,
)
from .ionization import (
    ConvergenceError,
    SidebandWindow,
    SpotProfile,
    XuvSpec,
    angular_centroid,
    cw_amplitude_grid,
    expected_Lz,
    orbital_dichroism,
    sideband_project,
    spot_average,
    write_csv,
)
from .streaking import (
    XuvPulse,
    circular_rms,
    default_delays,
    reconstruct_field,
    spot_weighted_scan,
    write_reconstruction_json,
    write_scans_csv,
)
from .units import BOHR_M, C_AU, HARTREE_EV, INTENSITY_AU_W_CM2, AU_TIME_S
from .volkov import QuadratureError

STUDIES = ("fields-audit", "oam-transfer", "dichroism", "rvb-spectra", "streak", "reconstruct")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

_UNITS = {
    "energy": {"au": 1.0, "hartree": 1.0, "ev": 1 / HARTREE_EV},
    "length": {"au": 1.0, "bohr": 1.0, "nm": 1e-9 / BOHR_M, "um": 1e-6 / BOHR_M,
               "µm": 1e-6 / BOHR_M},
    "time": {"au": 1.0, "fs": 1e-15 / AU_TIME_S, "as": 1e-18 / AU_TIME_S},
    "intensity": {"au": INTENSITY_AU_W_CM2, "w/cm2": 1.0, "w/cm^2": 1.0, "w·cm⁻²": 1.0},
    "angle": {"rad": 1.0, "deg": math.pi / 180},
    "none": {"": 1.0},
}

_KIND_ALIASES = {
    "vortex-parallel": BeamKind.VORTEX_PARALLEL,
    "vortex-antiparallel": BeamKind.VORTEX_ANTIPARALLEL,
    "azimuthal": BeamKind.AZIMUTHAL,
    "avb": BeamKind.AZIMUTHAL,
    "radial": BeamKind.RADIAL,
    "rvb": BeamKind.RADIAL,
    "skyrmion": BeamKind.SKYRMION,
    "uniform-circular": BeamKind.UNIFORM_CIRCULAR,
    "uniform": BeamKind.UNIFORM_CIRCULAR,
}

_QUANTITY = re.compile(r"^\s*([-+0-9.eE]+)\s*(.*?)\s*$")


class ConfigError(ValueError):
    """Config failed validation; ``diagnostics`` lists every problem."""

    def __init__(self, diagnostics):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = list(diagnostics)


def parse_quantity(value, dimension):
    """Convert ``value`` to atomic units (intensities stay in W/cm^2)."""
    if isinstance(value, bool):
        raise ValueError(f"expected a {dimension} quantity, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value) if dimension != "intensity" else float(value)
    m = _QUANTITY.match(str(value))
    if not m:
        raise ValueError(f"cannot parse {value!r} as a {dimension} quantity")
    unit = m.group(2).lower().replace(" ", "")
    table = _UNITS[dimension]
    if unit not in table:
        raise ValueError(f"unknown {dimension} unit {m.group(2)!r} (known: {sorted(table)})")
    return float(m.group(1)) * table[unit]


# --------------------------------------------------------------------------
# validation


class _Checker:
    """Collects diagnostics while reading nested config blocks."""

    def __init__(self):
        self.diagnostics = []

    def add(self, path, msg):
        self.diagnostics.append(f"{path}: {msg}")

    def get(self, block, key, path, dimension=None, default=..., kind=float):
        if not isinstance(block, dict):
            self.add(path, "expected a mapping")
            return None
        if key not in block:
            if default is ...:
                self.add(f"{path}.{key}", "missing")
            return None if default is ... else default
        val = block[key]
        try:
            if dimension is not None:
                return parse_quantity(val, dimension)
            return kind(val)
        except (TypeError, ValueError) as exc:
            self.add(f"{path}.{key}", str(exc))
            return None


def _beam_from_block(chk, block, path):
    if not isinstance(block, dict):
        chk.add(path, "expected a mapping")
        return None
    raw_kind = str(block.get("kind", ""))
    kind = _KIND_ALIASES.get(raw_kind.lower())
    if kind is None:
        try:
            kind = BeamKind(raw_kind)
        except ValueError:
            chk.add(f"{path}.kind", f"unknown beam kind {raw_kind!r}")
            return None
    omega = chk.get(block, "omega", path, "energy")
    if "A0" in block:
        A0 = chk.get(block, "A0", path)
    elif "intensity" in block and omega:
        I = chk.get(block, "intensity", path, "intensity")
        A0 = None if I is None else math.sqrt(I / INTENSITY_AU_W_CM2) / omega
    else:
        chk.add(f"{path}.A0", "missing (give A0 in a.u. or intensity)")
        A0 = None
    geometry = [k for k in ("angle", "waist", "q_perp") if k in block]
    if len(geometry) != 1:
        chk.add(path, "give exactly one of angle, waist or q_perp (+ q_z)")
        return None
    if omega is None or A0 is None:
        return None
    q_l = omega / C_AU
    if geometry[0] == "angle":
        ang = chk.get(block, "angle", path, "angle")
        if ang is None:
            return None
        q_perp, q_z = q_l * math.sin(ang), q_l * math.cos(ang)
    elif geometry[0] == "waist":
        w = chk.get(block, "waist", path, "length")
        if w is None:
            return None
        if not w > 1 / q_l:
            chk.add(f"{path}.waist", "below the diffraction limit 1/q_L")
            return None
        q_perp = 1 / w
        q_z = math.sqrt(q_l**2 - q_perp**2)
    else:
        q_perp = chk.get(block, "q_perp", path)
        q_z = chk.get(block, "q_z", path)
        if q_perp is None or q_z is None:
            return None
    kw = {}
    for key, conv in (("m", int), ("sigma", int), ("m1", int), ("m2", int), ("alpha", float),
                      ("beta", float), ("rvb_order", int)):
        if key in block:
            v = chk.get(block, key, path, kind=conv)
            if v is None:
                return None
            kw[key] = v
    kw["validity"] = str(block.get("validity", "warn"))
    if "validity_radius" in block:
        kw["validity_radius"] = chk.get(block, "validity_radius", path, "length")
    probs = beam_diagnostics(kind, A0, omega, q_perp, q_z, kw.get("m", 0), kw.get("sigma"),
                             kw.get("m1", 0), kw.get("m2", 0), kw.get("alpha", 1.0),
                             kw.get("beta", 0.0), kw.get("rvb_order", 3), kw["validity"])
    for p in probs:
        chk.add(path, p)
    if probs:
        return None
    return BeamSpec(kind, A0, omega, q_perp, q_z, **kw)


@dataclass
class ExperimentConfig:
    """Validated run description, all in atomic units."""

    study: str
    beams: list
    xuv: dict = field(default_factory=dict)
    atom: dict = field(default_factory=dict)
    grids: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    output: Path = Path("slvw-out")
    plot_script: bool = False


_STUDY_NEEDS_XUV = {"oam-transfer", "dichroism", "rvb-spectra", "streak", "reconstruct"}
_POLS = {p.value for p in Polarization}


def _check_grid_list(chk, grids, key, dimension, path="grids"):
    vals = grids.get(key)
    if vals is None:
        return None
    if not isinstance(vals, list) or not vals:
        chk.add(f"{path}.{key}", "must be a non-empty list")
        return None
    out = []
    for i, v in enumerate(vals):
        try:
            out.append(parse_quantity(v, dimension))
        except ValueError as exc:
            chk.add(f"{path}.{key}[{i}]", str(exc))
            return None
    return out


def _build(raw, study):
    chk = _Checker()
    if not isinstance(raw, dict):
        raise ConfigError(["<root>: config must be a mapping"])
    if "study" in raw and raw["study"] != study:
        chk.add("study", f"config is for {raw['study']!r}, command line asked for {study!r}")
    if study not in STUDIES:
        chk.add("study", f"unknown study {study!r}")
    blocks = raw.get("beams")
    if blocks is None and "beam" in raw:
        blocks = [raw["beam"]]
    beams = []
    if not blocks:
        chk.add("beam", "missing")
    elif not isinstance(blocks, list):
        chk.add("beams", "must be a list")
    else:
        path = "beams" if "beams" in raw else None
        for i, b in enumerate(blocks):
            beams.append(_beam_from_block(chk, b, f"{path}[{i}]" if path else "beam"))

    xuv = {}
    if study in _STUDY_NEEDS_XUV:
        blk = raw.get("xuv")
        if not isinstance(blk, dict):
            chk.add("xuv", "missing")
        else:
            xuv["omega"] = chk.get(blk, "omega", "xuv", "energy")
            pol = str(blk.get("polarization",
                              "linear-radial" if study in ("streak", "reconstruct") else "circular+"))
            if pol not in _POLS:
                chk.add("xuv.polarization", f"must be one of {sorted(_POLS)}")
            xuv["polarization"] = pol
            xuv["intensity"] = chk.get(blk, "intensity", "xuv", "intensity", default=2e14)
            xuv["n_cycles"] = chk.get(blk, "n_cycles", "xuv", default=7, kind=int)
            if "profile" in blk:
                prof = blk["profile"]
                if prof not in ("gaussian-xuv", "rvb-donut"):
                    chk.add("xuv.profile", "must be gaussian-xuv or rvb-donut")
                xuv["profile"] = prof
            if "waist" in blk:
                xuv["waist"] = _check_grid_list(chk, blk, "waist", "length", "xuv") \
                    if isinstance(blk["waist"], list) else [chk.get(blk, "waist", "xuv", "length")]

    atom_blk = raw.get("atom", {}) or {}
    atom = {"potential": str(atom_blk.get("potential", "helium")),
            "l_max": chk.get(atom_blk, "l_max", "atom", default=2, kind=int),
            "n_energy": chk.get(atom_blk, "n_energy", "atom", default=32, kind=int)}
    if atom["potential"] not in ("helium", "hydrogen"):
        chk.add("atom.potential", "must be helium or hydrogen")
    if atom["l_max"] is not None and atom["l_max"] < 2:
        chk.add("atom.l_max", "dipole and quadrupole channels need l_max >= 2")

    grids_raw = raw.get("grids", {}) or {}
    if not isinstance(grids_raw, dict):
        chk.add("grids", "expected a mapping")
        grids_raw = {}
    grids = dict(grids_raw)
    if "rho0" in grids_raw:
        grids["rho0"] = _check_grid_list(chk, grids_raw, "rho0", "length")
    if "theta" in grids_raw:
        grids["theta"] = _check_grid_list(chk, grids_raw, "theta", "angle")
    for key in ("n_theta", "n_phi", "n_points", "n_rho", "per_cycle", "cycles", "n_energy",
                "order", "seed", "n_phi0"):
        if key in grids_raw:
            v = chk.get(grids_raw, key, "grids", kind=int)
            if v is not None and key not in ("order", "seed") and v <= 0:
                chk.add(f"grids.{key}", "must be positive")
            grids[key] = v
    if "positions" in grids_raw:
        pos = grids_raw["positions"]
        if not isinstance(pos, list) or not pos:
            chk.add("grids.positions", "must be a non-empty list of [rho0, phi0]")
        else:
            out = []
            for i, p in enumerate(pos):
                try:
                    out.append((parse_quantity(p[0], "length"), parse_quantity(p[1], "angle")))
                except (TypeError, ValueError, IndexError) as exc:
                    chk.add(f"grids.positions[{i}]", str(exc))
            grids["positions"] = out

    _study_requirements(chk, study, beams, xuv, grids)
    tol = raw.get("tolerances", {}) or {}
    if not isinstance(tol, dict):
        chk.add("tolerances", "expected a mapping")
        tol = {}
    if chk.diagnostics:
        raise ConfigError(chk.diagnostics)
    return ExperimentConfig(study, beams, xuv, atom, grids, {k: float(v) for k, v in tol.items()},
                            Path(raw.get("output", "slvw-out")), bool(raw.get("plot_script", False)))


def _study_requirements(chk, study, beams, xuv, grids):
    if study == "dichroism" and len(beams) != 2:
        chk.add("beams", "dichroism needs exactly two beams (W+ and W-)")
    if study in ("oam-transfer",) and grids.get("rho0") is None:
        chk.add("grids.rho0", "missing")
    if study == "dichroism":
        if grids.get("theta") is None:
            chk.add("grids.theta", "missing")
        if not xuv.get("waist"):
            chk.add("xuv.waist", "missing")
    if study == "rvb-spectra" and not grids.get("positions"):
        chk.add("grids.positions", "missing")
    if study in ("streak", "reconstruct") and xuv and not xuv.get("waist"):
        chk.add("xuv.waist", "missing")
    if study == "reconstruct" and grids.get("n_phi", 24) < 8:
        chk.add("grids.n_phi", "reconstruction needs at least 8 azimuths")


def validate(raw, study=None):
    """Return every diagnostic for ``raw`` (empty list when valid); no computation."""
    study = study or (raw.get("study") if isinstance(raw, dict) else None) or ""
    try:
        _build(raw, study)
    except ConfigError as exc:
        return exc.diagnostics
    return []


def load_config(path):
    with open(path) as fh:
        return yaml.safe_load(fh) or {}


# --------------------------------------------------------------------------
# shared pieces


def _potential(atom):
    return HELIUM_TONG_LIN if atom["potential"] == "helium" else ModelPotential.coulomb(1.0)


def _table(cfg, e_lo, e_hi):
    e_lo, e_hi = max(e_lo, 0.02), max(e_hi, 0.1)
    return DipoleTable(_potential(cfg.atom), e_min=e_lo, e_max=e_hi,
                       n_energy=cfg.atom["n_energy"])


def _ionization_energy(cfg):
    from .atom import solve_bound_1s

    return -solve_bound_1s(_potential(cfg.atom)).energy


def _xuv_spec(cfg):
    return XuvSpec(cfg.xuv["omega"], Polarization(cfg.xuv["polarization"]))


def _beam_meta(beam):
    return {"kind": beam.kind.value, "A0": beam.A0, "omega": beam.omega,
            "q_perp": beam.q_perp, "q_z": beam.q_z, "m": beam.m, "sigma": beam.sigma,
            "m1": beam.m1, "m2": beam.m2, "alpha": beam.alpha, "beta": beam.beta,
            "rvb_order": beam.rvb_order, "validity": beam.validity,
            "radius_limit": beam.radius_limit}


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in r])


def _cw_table(cfg, beams, order_span, positions=((0.0, 0.0),)):
    ip = _ionization_energy(cfg)
    w = max(b.omega for b in beams)
    # sideband lines sit below the field-free comb by the local ponderomotive energy
    U = max(0.25 * float(np.vdot(C, C).real)
            for b in beams for rho, phi in positions
            for C in [complex_amplitude(b, AtomPosition(rho, phi).vector)])
    lo = cfg.xuv["omega"] - ip - (order_span + 1) * w - U
    hi = cfg.xuv["omega"] - ip + (order_span + 1) * w
    return _table(cfg, lo, hi)


# --------------------------------------------------------------------------
# studies


def _fd_gradient(beam, r, t, h):
    out = np.empty((3, 3))
    for i in range(3):
        dr = np.zeros(3)
        dr[i] = h
        out[i] = (eval_vector_potential(beam, r + dr, t) - eval_vector_potential(beam, r - dr, t)) / (2 * h)
    return out


def study_fields_audit(cfg, out):
    rng = np.random.default_rng(cfg.grids.get("seed", 0))
    n = cfg.grids.get("n_points", 100)
    div_tol = cfg.tolerances.get("divergence", 1e-10)
    grad_tol = cfg.tolerances.get("gradient", 1e-6)
    rows, gates = [], []
    for i, beam in enumerate(cfg.beams):
        rmax = 0.9 * beam.radius_limit
        rho = rmax * np.sqrt(rng.uniform(0, 1, n))
        phi = rng.uniform(0, 2 * np.pi, n)
        z = rng.uniform(-1, 1, n) * 0.1 * rmax
        t = rng.uniform(0, 2 * np.pi / beam.omega, n)
        h = 1e-4 / beam.q_L
        div, grad = 0.0, 0.0
        for k in range(n):
            r = np.array([rho[k] * np.cos(phi[k]), rho[k] * np.sin(phi[k]), z[k]])
            div = max(div, abs(float(check_divergence(beam, r, t[k]))) / (beam.A0 * beam.q_L))
            M = eval_gradient(beam, r, t[k])
            fd = _fd_gradient(beam, r, t[k], h)
            scale = max(np.max(np.abs(M)), np.max(np.abs(complex_amplitude(beam, r))) * beam.q_L)
            grad = max(grad, float(np.max(np.abs(M - fd)) / scale))
        ok = div < div_tol and grad < grad_tol
        rows.append([i, beam.kind.value, n, div, grad, "pass" if ok else "fail"])
        gates.append({"name": f"beam[{i}] field algebra", "divergence": div, "gradient": grad,
                      "passed": ok})
    _write_rows(out / "fields_audit.csv",
                ["beam", "kind", "n_points", "max_div_rel", "max_grad_rel", "status"], rows)
    return ["fields_audit.csv"], gates


def study_oam_transfer(cfg, out):
    order = cfg.grids.get("order", 1)
    n_theta, n_phi = cfg.grids.get("n_theta", 16), cfg.grids.get("n_phi", 32)
    xuv = _xuv_spec(cfg)
    table = _cw_table(cfg, cfg.beams, abs(order), [(r, 0.0) for r in cfg.grids["rho0"]])
    e_i = -table.ionization_energy
    rows = []
    for i, beam in enumerate(cfg.beams):
        for rho0 in cfg.grids["rho0"]:
            pos = AtomPosition(rho0, 0.0)
            grid = cw_amplitude_grid(beam, pos, xuv, table, orders=(order,), n_theta=n_theta,
                                     n_phi=n_phi)
            win = SidebandWindow(order, grid.energies[0], beam.omega / 4)
            lz = expected_Lz(sideband_project(grid, win))
            rows.append([i, beam.kind.value, beam.m, beam.sigma, rho0, rho0 * beam.q_perp, lz])
    _write_rows(out / "oam_transfer.csv",
                ["beam", "kind", "m", "sigma", "rho0_au", "q_perp_rho0", "Lz"], rows)
    return ["oam_transfer.csv"], [{"name": "azimuthal tail", "passed": True, "e_i": e_i}]


def study_dichroism(cfg, out):
    order = cfg.grids.get("order", 1)
    xuv = _xuv_spec(cfg)
    table = _cw_table(cfg, cfg.beams, abs(order))
    theta = np.array(cfg.grids["theta"])
    plus, minus = cfg.beams
    tol = cfg.tolerances.get("spot", 1e-4)
    rows = []
    for w in cfg.xuv["waist"]:
        prof = SpotProfile(cfg.xuv.get("profile", "gaussian-xuv"), w)
        kw = dict(n_phi0=cfg.grids.get("n_phi0", 8), tol=tol,
                  max_nodes=int(cfg.tolerances.get("max_nodes", 512)))
        wp = spot_average(plus, xuv, prof, table, order, theta, **kw)
        wm = spot_average(minus, xuv, prof, table, order, theta, **kw)
        d = orbital_dichroism(wp, wm)
        for th, a, b, dd in zip(theta, wp, wm, np.atleast_1d(d)):
            rows.append([w, th, float(a), float(b), float(dd)])
    _write_rows(out / "dichroism.csv", ["w_x_au", "theta_rad", "W_plus", "W_minus", "D"], rows)
    return ["dichroism.csv"], [{"name": "spot average", "tol": tol, "passed": True}]


def study_rvb_spectra(cfg, out):
    beam = cfg.beams[0]
    orders = tuple(range(-2, 3))
    xuv = _xuv_spec(cfg)
    table = _cw_table(cfg, cfg.beams, 2, cfg.grids["positions"])
    rows, files = [], []
    for i, (rho0, phi0) in enumerate(cfg.grids["positions"]):
        grid = cw_amplitude_grid(beam, AtomPosition(rho0, phi0), xuv, table, orders,
                                 n_theta=cfg.grids.get("n_theta", 24),
                                 n_phi=cfg.grids.get("n_phi", 24))
        name = f"rvb_spectrum_{i}.csv"
        write_csv(grid, out / name, out / f"rvb_spectrum_{i}.json")
        files += [name, f"rvb_spectrum_{i}.json"]
        ang = grid.angular_weights()
        for row, n in enumerate(orders):
            total = float(np.sum(grid.probability[row] * ang))
            cen = angular_centroid(grid, row) if total > 0 else float("nan")
            folded = angular_centroid(grid, row, fold=True) if total > 0 else float("nan")
            rows.append([i, rho0, phi0, n, float(grid.energies[row]), total, cen, folded])
    _write_rows(out / "rvb_centroids.csv",
                ["position", "rho0_au", "phi0_rad", "order", "energy_au", "yield", "theta_centroid",
                 "axis_angle_centroid"], rows)
    return ["rvb_centroids.csv"] + files, []


def _streak_inputs(cfg):
    beam = cfg.beams[0]
    pulse = XuvPulse(cfg.xuv["omega"], cfg.xuv["n_cycles"], cfg.xuv["intensity"])
    ip = _ionization_energy(cfg)
    e0 = pulse.omega - ip
    table = _table(cfg, e0 - 1.2 * pulse.bandwidth, e0 + 1.2 * pulse.bandwidth)
    n_phi = cfg.grids.get("n_phi", 24)
    phis = 2 * np.pi * np.arange(n_phi) / n_phi
    delays = default_delays(beam.omega, cfg.grids.get("per_cycle", 48), cfg.grids.get("cycles", 2))
    n_e = cfg.grids.get("n_energy", 121)
    energies = e0 + np.linspace(-1, 1, n_e) * pulse.bandwidth
    return beam, pulse, table, phis, delays, energies


def _scans_for(cfg, w, beam, pulse, table, phis, delays, energies):
    prof = SpotProfile(cfg.xuv.get("profile", "rvb-donut"), w)
    return spot_weighted_scan(beam, pulse, prof, phis, delays, table, energies=energies,
                              n_rho=cfg.grids.get("n_rho", 24))


def study_streak(cfg, out):
    beam, pulse, table, phis, delays, energies = _streak_inputs(cfg)
    files = []
    for k, w in enumerate(cfg.xuv["waist"]):
        scans = _scans_for(cfg, w, beam, pulse, table, phis, delays, energies)
        name = f"streak_{k}.csv"
        write_scans_csv(scans, out / name)
        files.append(name)
    return files, []


def study_reconstruct(cfg, out):
    beam, pulse, table, phis, delays, energies = _streak_inputs(cfg)
    p0 = math.sqrt(2 * (pulse.omega - table.ionization_energy))
    files, gates = [], []
    rms_tol = cfg.tolerances.get("phase_rms", 0.05 * 2 * np.pi)
    for k, w in enumerate(cfg.xuv["waist"]):
        scans = _scans_for(cfg, w, beam, pulse, table, phis, delays, energies)
        rec = reconstruct_field(scans, beam.omega, p0)
        rb = rec.mean_radius
        truth = np.array([np.array([math.cos(f), math.sin(f), 0.0])
                          @ complex_amplitude(beam, np.array([rb * math.cos(f), rb * math.sin(f), 0.0]))
                          for f in rec.phi_p])
        rms = circular_rms(rec.phase, np.angle(truth))
        corr = float(np.corrcoef(rec.amplitude, np.abs(truth))[0, 1]) \
            if np.ptp(rec.amplitude) > 0 and np.ptp(np.abs(truth)) > 0 else float("nan")
        extra = {"waist_au": w, "input_phase": np.angle(truth).tolist(),
                 "input_amplitude": np.abs(truth).tolist(), "phase_rms": rms,
                 "amplitude_correlation": corr}
        write_scans_csv(scans, out / f"streak_{k}.csv")
        write_reconstruction_json(rec, out / f"reconstruction_{k}.json", extra)
        files += [f"streak_{k}.csv", f"reconstruction_{k}.json"]
        gates.append({"name": f"round trip w_x={w:.6g}", "phase_rms": rms,
                      "amplitude_correlation": corr, "passed": bool(rms < rms_tol)})
    return files, gates


_RUNNERS = {
    "fields-audit": study_fields_audit,
    "oam-transfer": study_oam_transfer,
    "dichroism": study_dichroism,
    "rvb-spectra": study_rvb_spectra,
    "streak": study_streak,
    "reconstruct": study_reconstruct,
}

_PLOT = {
    "fields-audit": ("fields_audit.csv", "beam", "max_grad_rel"),
    "oam-transfer": ("oam_transfer.csv", "q_perp_rho0", "Lz"),
    "dichroism": ("dichroism.csv", "theta_rad", "D"),
    "rvb-spectra": ("rvb_centroids.csv", "order", "axis_angle_centroid"),
    "streak": ("streak_0.csv", "delay_au", "coe_au"),
    "reconstruct": ("streak_0.csv", "delay_au", "coe_au"),
}


def _plot_script(study):
    name, x, y = _PLOT[study]
    return f'''"""Regenerate the {study} panel from {name}."""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).parent
rows = list(csv.DictReader(open(here / "{name}")))
x = [float(r["{x}"]) for r in rows]
y = [float(r["{y}"]) for r in rows]
plt.plot(x, y, ".")
plt.xlabel("{x}")
plt.ylabel("{y}")
plt.savefig(sys.argv[1] if len(sys.argv) > 1 else here / "{study}.png")
'''


def run(cfg: ExperimentConfig):
    """Execute ``cfg`` and write outputs plus ``manifest.json``; returns an exit code."""
    try:
        cfg.output.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create {cfg.output}: {exc}", file=sys.stderr)
        return EXIT_IO
    status = EXIT_OK
    error = None
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            files, gates = _RUNNERS[cfg.study](cfg, cfg.output)
    except (ConvergenceError, QuadratureError, SolverError, ValueError) as exc:
        files, gates, status, error = [], [], EXIT_NUMERIC, f"{type(exc).__name__}: {exc}"
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if status == EXIT_OK and not all(g.get("passed", True) for g in gates):
        status = EXIT_NUMERIC
    if cfg.plot_script:
        (cfg.output / "plot.py").write_text(_plot_script(cfg.study))
        files.append("plot.py")
    manifest = {
        "version": __version__,
        "study": cfg.study,
        "units": "hartree atomic units (intensity in W/cm^2)",
        "beams": [_beam_meta(b) for b in cfg.beams],
        "xuv": cfg.xuv,
        "atom": cfg.atom,
        "grids": cfg.grids,
        "tolerances": cfg.tolerances,
        "gates": gates,
        "outputs": files,
        "status": status,
        "error": error,
    }
    try:
        with open(cfg.output / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True, default=float)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if error:
        print(f"error: {error}", file=sys.stderr)
    return status


def main(argv=None):
    parser = argparse.ArgumentParser(prog="slvw", description=__doc__.splitlines()[0])
    parser.add_argument("study", choices=STUDIES)
    parser.add_argument("--config", required=True, help="YAML config file")
    parser.add_argument("--output", help="output directory (overrides the config)")
    parser.add_argument("--validate-only", action="store_true",
                        help="report config diagnostics and exit")
    args = parser.parse_args(argv)
    try:
        raw = load_config(args.config)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except yaml.YAMLError as exc:
        print(f"config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = _build(raw, args.study)
    except (ConfigError, FieldError) as exc:
        for d in getattr(exc, "diagnostics", [str(exc)]):
            print(d, file=sys.stderr)
        return EXIT_CONFIG
    if args.validate_only:
        return EXIT_OK
    if args.output:
        cfg.output = Path(args.output)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
