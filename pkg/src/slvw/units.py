"""Atomic-unit constants and boundary conversions.

The numerical core works exclusively in Hartree atomic units.  Anything
laboratory-flavoured (eV, µm, W/cm², fs) is converted here, at the edge.
"""

import numpy as np

C_AU = 137.035999
HARTREE_EV = 27.211386245988
BOHR_M = 5.29177210903e-11
AU_TIME_S = 2.4188843265857e-17
# intensity of a field with E = 1 a.u. (cycle-averaged, linear polarization)
INTENSITY_AU_W_CM2 = 3.50944758e16


def ev_to_au(energy_ev):
    return np.asarray(energy_ev) / HARTREE_EV


def au_to_ev(energy_au):
    return np.asarray(energy_au) * HARTREE_EV


def um_to_au(length_um):
    return np.asarray(length_um) * 1e-6 / BOHR_M


def nm_to_au(length_nm):
    return np.asarray(length_nm) * 1e-9 / BOHR_M


def au_to_um(length_au):
    return np.asarray(length_au) * BOHR_M / 1e-6


def fs_to_au(time_fs):
    return np.asarray(time_fs) * 1e-15 / AU_TIME_S


def wavelength_nm_to_omega(wavelength_nm):
    """Angular frequency (a.u.) of light with the given vacuum wavelength."""
    return 2 * np.pi * C_AU / nm_to_au(wavelength_nm)


def intensity_to_field(intensity_w_cm2):
    """Peak electric field E0 = sqrt(I / I_au) in atomic units."""
    return np.sqrt(np.asarray(intensity_w_cm2) / INTENSITY_AU_W_CM2)


def intensity_to_a0(intensity_w_cm2, omega):
    """Vector-potential amplitude A0 = E0 / omega for a peak intensity."""
    return intensity_to_field(intensity_w_cm2) / omega
