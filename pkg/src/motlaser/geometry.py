"""Spatial and polarization layer: trap field, selection rules, mode overlap.

Lab frame
---------
The cavity axis is horizontal and defines x.  The pump beam propagates
vertically (z), which is also the symmetry axis of the trap coils; y
completes the right-handed frame.  The cavity's 45-degree tilt against the
horizontal trap beams lies in the horizontal plane and plays no role for a
vertical pump, so it is ignored here.

Circular-polarization sign table
--------------------------------
Handedness of cavity output light is defined for propagation along +x with
the transverse Jones basis (H, V) = (y, z):

    R  :=  (1, -i)/sqrt(2)      emitted by the sigma- transition at B || +x
    L  :=  (1, +i)/sqrt(2)      emitted by the sigma+ transition at B || +x

The s3 Stokes parameter 2*Im(J_H* J_V) is -1 for R and +1 for L.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .atomics import AtomEnsemble
from .errors import QuantizationAxisError

X_AXIS = np.array([1.0, 0.0, 0.0])
Y_AXIS = np.array([0.0, 1.0, 0.0])
Z_AXIS = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class LabFrame:
    """Right-handed orthonormal frame (cavity axis, y, vertical)."""

    cavity_axis: tuple = (1.0, 0.0, 0.0)
    vertical: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        x = np.asarray(self.cavity_axis, float)
        z = np.asarray(self.vertical, float)
        if not (np.isclose(np.linalg.norm(x), 1.0)
                and np.isclose(np.linalg.norm(z), 1.0)
                and np.isclose(np.dot(x, z), 0.0)):
            raise ValueError("cavity_axis and vertical must be orthonormal")

    @property
    def y(self):
        return np.cross(np.asarray(self.vertical, float),
                        np.asarray(self.cavity_axis, float))


@dataclass(frozen=True)
class MagneticEnvironment:
    """Quadrupole trap field plus a uniform offset.

    ``radial_gradient`` is the gradient along the two radial directions in
    G/cm; the gradient along the (vertical) coil axis is twice that, so a
    quoted axial gradient of 36 G/cm means radial_gradient = 18.
    """

    radial_gradient: float = 18.0        # G/cm
    offset_field: tuple = (0.0, 0.0, 0.0)  # G

    def __post_init__(self):
        if self.radial_gradient < 0:
            raise ValueError("radial_gradient must be >= 0")


@dataclass(frozen=True)
class BeamGeometry:
    """A Gaussian beam: direction, Jones polarization, power, waist, detuning.

    The Jones vector lives in the beam's transverse plane with the basis
    returned by :func:`beam_transverse_basis`; for a vertical beam that
    basis is (x, y), so linear polarization at angle a from the cavity
    axis is (cos a, sin a).
    """

    propagation: tuple
    polarization: tuple           # complex Jones pair, unit norm
    power: float                  # W
    waist_radius: float           # m
    detuning: float = 0.0         # Hz

    def __post_init__(self):
        n = np.asarray(self.propagation, float)
        if not np.isclose(np.linalg.norm(n), 1.0):
            raise ValueError("propagation must be a unit vector")
        j = np.asarray(self.polarization, complex)
        if j.shape != (2,) or not np.isclose(np.linalg.norm(j), 1.0):
            raise ValueError("polarization must be a unit-norm Jones pair")
        if self.power < 0 or self.waist_radius <= 0:
            raise ValueError("power must be >= 0 and waist_radius positive")

    def field_vector(self):
        """Complex 3-vector of the polarization in the lab frame."""
        e1, e2 = beam_transverse_basis(np.asarray(self.propagation, float))
        j = np.asarray(self.polarization, complex)
        return j[0] * e1 + j[1] * e2


@dataclass(frozen=True)
class CavityGeometry:
    """Standing-wave cavity parameters.

    ``kappa`` is the energy decay rate (angular linewidth).  TEM families
    are labelled by the transverse order N = n + m; successive co-resonant
    families are ``family_step`` orders apart and ``family_spacing`` Hz
    apart in frequency.
    """

    axis: tuple = (1.0, 0.0, 0.0)
    waist_radius: float = 90e-6          # m
    length: float = 4.78e-2              # m
    kappa: float = 2 * np.pi * 70e3      # rad/s, energy decay
    single_atom_coupling: float = 2 * np.pi * 30e3  # rad/s
    output_fraction: float = 0.05        # per mirror
    family_spacing: float = 6.9e6        # Hz
    family_step: int = 37

    def __post_init__(self):
        if min(self.waist_radius, self.length, self.kappa,
               self.single_atom_coupling, self.family_spacing) <= 0:
            raise ValueError("cavity dimensions and rates must be positive")
        if not 0 < self.output_fraction <= 1:
            raise ValueError("output_fraction must be in (0, 1]")

    def cooperativity(self, linewidth: float) -> float:
        """Single-atom coupling parameter C = g^2 / (kappa * Gamma)."""
        return self.single_atom_coupling**2 / (self.kappa * linewidth)


@dataclass(frozen=True)
class PolarizationLabel:
    """Classified polarization of light emitted along the cavity axis.

    ``kind`` is one of none / H / V / R / L / linear / elliptical.  Linear
    labels carry the angle from H in degrees; elliptical ones additionally
    carry the handedness sign of s3 (+1 toward L, -1 toward R).
    """

    kind: str
    angle_deg: float | None = None
    handedness: int | None = None

    def __str__(self):
        if self.kind == "linear":
            return f"linear({self.angle_deg:.1f}deg)"
        if self.kind == "elliptical":
            sign = "+" if self.handedness > 0 else "-"
            return f"elliptical({self.angle_deg:.1f}deg,{sign})"
        return self.kind


NO_EMISSION = PolarizationLabel("none")


def beam_transverse_basis(propagation):
    """Deterministic orthonormal basis (e1, e2) of the plane normal to a beam.

    e1 is the projection of the cavity axis when possible (so angles are
    measured from the cavity axis), otherwise the projection of y;
    e2 = propagation x e1 completes a right-handed triple.
    """
    n = np.asarray(propagation, float)
    ref = X_AXIS if abs(np.dot(n, X_AXIS)) < 0.9 else Y_AXIS
    e1 = ref - np.dot(ref, n) * n
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return e1, e2


def jones_linear(angle_deg: float):
    """Jones pair for linear polarization at a given angle from e1."""
    a = np.deg2rad(angle_deg)
    return (complex(np.cos(a)), complex(np.sin(a)))


def jones_circular(handedness: int):
    """Jones pair (1, +-i)/sqrt(2); handedness is the sign of s3."""
    if handedness not in (-1, 1):
        raise ValueError("handedness must be +1 or -1")
    return (complex(1 / np.sqrt(2)), handedness * 1j / np.sqrt(2))


def quadrupole_field(env: MagneticEnvironment, position) -> np.ndarray:
    """Trap magnetic field in gauss at a lab-frame position (m).

    B = b' (x, y, -2z) + offset with b' the radial gradient; the field
    vanishes at the trap center when no offset is applied and is exactly
    divergence-free.
    """
    p = np.asarray(position, float)
    grad_per_m = env.radial_gradient * 100.0  # G/cm -> G/m
    quad = grad_per_m * np.array([p[0], p[1], -2.0 * p[2]])
    return quad + np.asarray(env.offset_field, float)


def _spherical_basis(b_dir):
    """Unit vectors (e_minus, e_zero, e_plus) about the field direction."""
    b = np.asarray(b_dir, float)
    norm = np.linalg.norm(b)
    if norm == 0:
        raise QuantizationAxisError(
            "quantization axis undefined: magnetic field is zero; "
            "supply an offset field")
    b = b / norm
    ref = Z_AXIS if abs(np.dot(b, Z_AXIS)) < 0.9 else X_AXIS
    e1 = ref - np.dot(ref, b) * b
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(b, e1)
    e_plus = -(e1 + 1j * e2) / np.sqrt(2.0)
    e_minus = (e1 - 1j * e2) / np.sqrt(2.0)
    return e_minus, b.astype(complex), e_plus


def pump_excitation_weights(pump: BeamGeometry, b_dir) -> tuple:
    """Drive weights (w_minus, w_zero, w_plus) of the three Zeeman channels.

    The pump polarization is decomposed in the spherical basis about the
    local field direction; w_m = |amplitude_m|^2 and the three weights sum
    to one.  Raises :class:`QuantizationAxisError` on zero field.
    """
    e_minus, e_zero, e_plus = _spherical_basis(b_dir)
    eps = pump.field_vector()
    w = tuple(abs(np.dot(np.conj(e), eps)) ** 2
              for e in (e_minus, e_zero, e_plus))
    return w


def cavity_emission_jones(m: int, b_dir, cavity_axis=X_AXIS):
    """Polarization and relative strength of emission along the cavity axis.

    Classical dipole picture: the pi transition (m = 0) radiates a linear
    dipole along B, the sigma transitions rotating dipoles in the plane
    normal to B.  Projecting onto the plane transverse to the cavity axis
    gives strength sin^2(theta) for pi and (1 + cos^2(theta))/2 for sigma
    (theta = angle between B and the axis), normalized to 1 at the
    respective maxima.  Strength 0 yields the ``none`` label.
    """
    if abs(m) > 1:
        raise ValueError(f"m={m} outside the J=1 level scheme")
    axis = np.asarray(cavity_axis, float)
    axis = axis / np.linalg.norm(axis)
    e_minus, e_zero, e_plus = _spherical_basis(b_dir)
    dipole = {-1: e_minus, 0: e_zero, 1: e_plus}[m]
    transverse = dipole - axis * np.dot(axis, dipole)
    strength = float(np.real(np.vdot(transverse, transverse)))
    if strength < 1e-12:
        return NO_EMISSION, 0.0
    # Jones components in the (H, V) basis of the cavity axis.
    h = np.cross(Z_AXIS, axis)
    h_norm = np.linalg.norm(h)
    if h_norm < 1e-12:
        raise ValueError("cavity axis must not be vertical")
    h /= h_norm
    v = np.cross(axis, h)
    jones = np.array([np.dot(h, transverse), np.dot(v, transverse)])
    return classify_jones(jones), strength


def classify_jones(jones, tol=1e-6) -> PolarizationLabel:
    """Map a transverse Jones vector onto a polarization label."""
    j = np.asarray(jones, complex)
    norm2 = float(np.real(np.vdot(j, j)))
    if norm2 < 1e-12:
        return NO_EMISSION
    jh, jv = j / np.sqrt(norm2)
    s1 = abs(jh) ** 2 - abs(jv) ** 2
    s2 = 2.0 * np.real(np.conj(jh) * jv)
    s3 = 2.0 * np.imag(np.conj(jh) * jv)
    angle = np.rad2deg(0.5 * np.arctan2(s2, s1)) % 180.0
    if abs(s3) >= 1.0 - tol:
        return PolarizationLabel("L" if s3 > 0 else "R")
    if abs(s3) <= tol:
        if abs(angle) < 1e-3 or abs(angle - 180.0) < 1e-3:
            return PolarizationLabel("H", 0.0)
        if abs(angle - 90.0) < 1e-3:
            return PolarizationLabel("V", 90.0)
        return PolarizationLabel("linear", angle)
    return PolarizationLabel("elliptical", angle, 1 if s3 > 0 else -1)


def jones_of_label(label: PolarizationLabel):
    """Jones vector of a pure label (inverse of classify_jones)."""
    if label.kind == "H":
        return np.array([1.0 + 0j, 0.0j])
    if label.kind == "V":
        return np.array([0.0j, 1.0 + 0j])
    if label.kind == "R":
        return np.array([1.0, -1j]) / np.sqrt(2.0)
    if label.kind == "L":
        return np.array([1.0, 1j]) / np.sqrt(2.0)
    if label.kind == "linear":
        a = np.deg2rad(label.angle_deg)
        return np.array([np.cos(a) + 0j, np.sin(a) + 0j])
    raise ValueError(f"label {label} has no unique Jones vector")


# ---------------------------------------------------------------------------
# Transverse mode families
# ---------------------------------------------------------------------------

def transverse_mode_frequency(n_family: int, family_spacing: float = 6.9e6,
                              family_step: int = 37) -> float:
    """Frequency offset of TEM family N from the fundamental, in Hz.

    Families co-resonant with the fundamental ladder upward in steps of
    ``family_step`` transverse orders and ``family_spacing`` Hz; arbitrary
    N interpolates linearly on that ladder.
    """
    if n_family < 0:
        raise ValueError("family index must be >= 0")
    return (n_family / family_step) * family_spacing


def _hermite_functions(n_max: int, xi: np.ndarray) -> np.ndarray:
    """L2-normalized Hermite functions h_n(xi), rows n = 0..n_max.

    Stable three-term recurrence; h_n = H_n(xi) exp(-xi^2/2) /
    sqrt(2^n n! sqrt(pi)).
    """
    out = np.empty((n_max + 1, xi.size))
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * xi**2)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * xi * out[0]
    for n in range(2, n_max + 1):
        out[n] = xi * np.sqrt(2.0 / n) * out[n - 1] \
            - np.sqrt((n - 1) / n) * out[n - 2]
    return out


@lru_cache(maxsize=None)
def _family_profile(n_family: int, waist: float, cloud_sigma: float):
    """(mean intensity over cloud, family peak intensity, fundamental peak).

    The family intensity is the average of |u_n(y) u_m(z)|^2 over the
    N + 1 degenerate Hermite-Gauss modes with n + m = N (each mode
    L2-normalized in 2D).  That sum is exactly radially symmetric, so the
    peak is found on a 1D radial cut; the cloud average factorizes into
    1D integrals against the Gaussian density.
    """
    n = n_family
    extent = max(6.0 * cloud_sigma, 1.8 * waist * np.sqrt(n + 1.0))
    npts = 4001
    y = np.linspace(-extent, extent, 2 * npts - 1)
    h = _hermite_functions(n, np.sqrt(2.0) * y / waist)
    scale = np.sqrt(2.0 / np.pi) / waist  # 1D intensity normalization
    intens = scale * h**2

    pdf = np.exp(-y**2 / (2.0 * cloud_sigma**2)) \
        / np.sqrt(2.0 * np.pi * cloud_sigma**2)
    one_d = np.trapezoid(pdf * intens, y, axis=1)
    mean = sum(one_d[k] * one_d[n - k] for k in range(n + 1)) / (n + 1)

    r = y[npts - 1:]
    h0 = intens[:, npts - 1]          # values at the origin
    radial = intens[:, npts - 1:]
    profile = sum(radial[k] * h0[n - k] for k in range(n + 1)) / (n + 1)
    peak = float(profile.max())
    fundamental_peak = (scale * np.pi**-0.5) ** 2  # |u_0(0)|^4 scaled
    return float(mean), peak, fundamental_peak


def mode_overlap_fraction(ensemble: AtomEnsemble, cavity: CavityGeometry,
                          n_family: int = 0) -> float:
    """Fraction of trapped atoms effectively coupled to TEM family N.

    Each atom is weighted by the transverse family intensity at its
    position, normalized to the family's own antinode; the cloud is the
    Gaussian of :class:`AtomEnsemble`.  Tends to 1 when the waist dwarfs
    the cloud and to (w/2 sigma)^2-scale values in the opposite limit.
    """
    if n_family < 0:
        raise ValueError("family index must be >= 0")
    mean, peak, _ = _family_profile(int(n_family), cavity.waist_radius,
                                    ensemble.cloud_radius_rms)
    return mean / peak


def family_peak_ratio(ensemble: AtomEnsemble, cavity: CavityGeometry,
                      n_family: int) -> float:
    """Antinode intensity of family N relative to the fundamental's.

    Scales the single-photon coupling: g_N = g * sqrt(ratio).  The product
    with :func:`mode_overlap_fraction` is the cloud-averaged family
    intensity in units of the fundamental antinode, which is the quantity
    the collective gain is proportional to.
    """
    mean, peak, fundamental_peak = _family_profile(
        int(n_family), cavity.waist_radius, ensemble.cloud_radius_rms)
    return peak / fundamental_peak
