"""Atomic-physics primitives for the two-line ytterbium level scheme.

Unit conventions used throughout the package:

* natural linewidths and cavity rates are angular frequencies (rad/s),
* detunings, Zeeman shifts and Doppler widths are ordinary frequencies (Hz),
* magnetic fields are in gauss, intensities in W/m^2.

The conversion between the two frequency conventions happens exactly once,
inside the formulas that mix them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import constants as sc

# Bohr magneton over Planck constant, in Hz per gauss.
MU_B_HZ_PER_GAUSS = sc.physical_constants["Bohr magneton in Hz/T"][0] * 1e-4

# 174Yb atomic mass (no hyperfine structure, nuclear spin 0).
MASS_YB174 = 173.9388664 * sc.atomic_mass  # kg

_GAUSSIAN_FWHM = 2.0 * np.sqrt(2.0 * np.log(2.0))


@dataclass(frozen=True)
class TransitionSpec:
    """One optical transition out of the ground state.

    Attributes
    ----------
    label : str
        Either ``green_556`` (narrow intercombination line used for pumping
        and lasing) or ``blue_399`` (broad line driven by the trap beams).
    wavelength : float
        Vacuum wavelength in m.
    linewidth : float
        Natural linewidth, angular (rad/s).
    saturation_intensity : float
        W/m^2; the factories fill this in from the closed form below.
    lande_g_upper : float
        Lande factor of the upper level.
    sublevels_upper : tuple of int
        Magnetic quantum numbers of the upper level (J=1 here).
    """

    label: str
    wavelength: float
    linewidth: float
    saturation_intensity: float
    lande_g_upper: float
    sublevels_upper: tuple = (-1, 0, 1)

    def __post_init__(self):
        if self.wavelength <= 0 or self.linewidth <= 0:
            raise ValueError("wavelength and linewidth must be positive")
        if self.saturation_intensity <= 0:
            raise ValueError("saturation_intensity must be positive")

    @classmethod
    def green_556(cls, wavelength=556e-9, linewidth=2 * np.pi * 182e3,
                  lande_g_upper=1.5):
        return cls("green_556", wavelength, linewidth,
                   _saturation_intensity(wavelength, linewidth), lande_g_upper)

    @classmethod
    def blue_399(cls, wavelength=399e-9, linewidth=2 * np.pi * 29e6,
                 lande_g_upper=1.0):
        return cls("blue_399", wavelength, linewidth,
                   _saturation_intensity(wavelength, linewidth), lande_g_upper)


@dataclass(frozen=True)
class AtomEnsemble:
    """Trapped cloud: size, temperature and species mass.

    ``cloud_radius_rms`` is the per-axis rms radius of the (isotropic)
    Gaussian density profile.
    """

    total_atoms: float
    cloud_radius_rms: float    # m
    temperature: float         # K
    species_mass: float = MASS_YB174  # kg

    def __post_init__(self):
        if self.total_atoms < 0:
            raise ValueError("total_atoms must be >= 0")
        if self.cloud_radius_rms <= 0:
            raise ValueError("cloud_radius_rms must be positive")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")


def _saturation_intensity(wavelength, linewidth):
    return 2.0 * np.pi**2 * sc.hbar * sc.c * linewidth / (3.0 * wavelength**3)


def saturation_intensity(transition: TransitionSpec) -> float:
    """Two-level saturation intensity, W/m^2.

    I_sat = 2 pi^2 hbar c Gamma / (3 lambda^3), evaluated from the
    transition's wavelength and natural linewidth.
    """
    if transition.wavelength <= 0 or transition.linewidth <= 0:
        raise ValueError("wavelength and linewidth must be positive")
    return _saturation_intensity(transition.wavelength, transition.linewidth)


def saturation_parameter(power: float, waist_radius: float, i_sat: float) -> float:
    """Saturation parameter s of a Gaussian beam.

    Uses the mean-intensity convention s = (P / (pi w^2)) / I_sat rather
    than the peak-intensity one (2P / pi w^2); the mean convention is what
    reproduces the documented pump drive of ~280 I_sat from 7 mW in a
    2.4 mm beam.
    """
    if power < 0:
        raise ValueError("power must be >= 0")
    if waist_radius <= 0:
        raise ValueError("waist_radius must be positive")
    return power / (np.pi * waist_radius**2) / i_sat


def zeeman_shift(g: float, m: int, b_gauss: float) -> float:
    """Zeeman shift of sublevel m in Hz (signed).

    delta_z = g * m * mu_B * B / h.  Only |m| <= 1 is meaningful for the
    J=1 upper levels of this scheme.
    """
    if abs(m) > 1:
        raise ValueError(f"m={m} outside the J=1 level scheme")
    return g * m * MU_B_HZ_PER_GAUSS * b_gauss


def doppler_sigma(temperature: float, mass: float, wavelength: float) -> float:
    """One-dimensional rms Doppler shift in Hz."""
    if temperature <= 0 or mass <= 0 or wavelength <= 0:
        raise ValueError("temperature, mass and wavelength must be positive")
    return np.sqrt(sc.k * temperature / mass) / wavelength


def excited_population(detuning: float, s: float, gamma: float,
                       doppler_sigma_hz: float = 0.0) -> float:
    """Steady-state excited-state fraction of a driven two-level atom.

    rho_ee = (s/2) / (1 + s + (2 delta_omega / Gamma')^2)

    with delta_omega = 2 pi * detuning and Gamma' the natural linewidth
    with the Doppler FWHM added in quadrature (a pseudo-Voigt shortcut,
    adequate at the precision of this model).  Bounded by 1/2, even in the
    detuning, monotonically decreasing in |detuning|.

    Parameters
    ----------
    detuning : float
        Drive detuning from resonance, Hz (signed).
    s : float
        Saturation parameter (>= 0).
    gamma : float
        Natural linewidth, rad/s.
    doppler_sigma_hz : float
        1D rms Doppler width in Hz; 0 disables the broadening.
    """
    if s < 0:
        raise ValueError("saturation parameter must be >= 0")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if doppler_sigma_hz < 0:
        raise ValueError("doppler_sigma_hz must be >= 0")
    gamma_eff = np.hypot(gamma, 2 * np.pi * doppler_sigma_hz * _GAUSSIAN_FWHM)
    return 0.5 * s / (1.0 + s + (4 * np.pi * detuning / gamma_eff) ** 2)
