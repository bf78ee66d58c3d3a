"""Two-photon gain model, thresholds, steady state and parameter scans.

Model
-----
Pumping on the narrow green line populates the Zeeman sublevels of the
upper lasing level; the red-detuned broad-line trap light dresses the
ground state with a short-lived virtual level, and a cavity photon is
emitted in a two-photon step that deposits the atom there.  The per-family
gain rate is a factorized effective model,

    G_m(N) = gain_scale * N_atoms * f_N * g_N^2
             * rho_ee(delta_p - delta_z(m), w_m * s_pump)
             * E_m * s_mot * L(delta_c,N - delta_p - delta_mot) / Gamma_green

with f_N the coupled-atom fraction of TEM family N, g_N the family
antinode coupling, w_m the pump polarization weight of channel m (driving
the channel with its share of the saturation parameter), E_m the relative
dipole emission strength along the cavity axis, and L a unit-peak
Lorentzian whose FWHM is the broad-line width: the virtual level inherits
the width of the level that creates it.  delta_c,N includes the transverse
family frequency offset.  One fitted gain_scale anchors the absolute rate
to the observed atom-number threshold; photon numbers saturate against a
fitted n_sat anchored to the observed intracavity photon number.

Putting the polarization weight inside the saturation argument (rather
than as a prefactor) makes pump-power thresholds scale exactly inversely
with the channel weights, which is what the polarization threshold
measurements show.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants as sc
from scipy.ndimage import label as _ndlabel
from scipy.optimize import brentq, minimize_scalar

from . import atomics, geometry
from .atomics import AtomEnsemble, TransitionSpec
from .errors import CalibrationError, NoThresholdError, SolverError
from .geometry import BeamGeometry, CavityGeometry, MagneticEnvironment

SUBLEVELS = (-1, 0, 1)


@dataclass(frozen=True)
class OperatingPoint:
    """One experimental setting: detunings, drive strengths, field, atoms.

    Detunings are signed and relative to the respective atomic resonances,
    in Hz.  ``pump_polarization`` is the Jones pair in the pump's
    transverse basis; ``b_offset`` is the field at the active region in
    gauss (the quadrupole contribution vanishes at the trap center, so a
    displaced active region is modelled by this offset alone).
    """

    pump_detuning: float = 5e6
    cavity_detuning: float = -30e6
    mot_detuning: float = -35e6
    mot_saturation: float = 3.0
    pump_power: float = 7e-3
    pump_polarization: tuple = geometry.jones_linear(90.0)
    b_offset: tuple = (2.38, 0.0, 0.0)
    total_atoms: float = 20e3

    def __post_init__(self):
        if self.pump_power < 0:
            raise ValueError("pump_power must be >= 0")
        if self.mot_saturation < 0:
            raise ValueError("mot_saturation must be >= 0")
        if self.total_atoms < 0:
            raise ValueError("total_atoms must be >= 0")


@dataclass(frozen=True)
class LaserSystem:
    """Everything about the apparatus that an operating point does not vary."""

    green: TransitionSpec = field(default_factory=TransitionSpec.green_556)
    blue: TransitionSpec = field(default_factory=TransitionSpec.blue_399)
    ensemble: AtomEnsemble = field(default_factory=lambda: AtomEnsemble(
        total_atoms=20e3, cloud_radius_rms=1e-3, temperature=2e-3))
    cavity: CavityGeometry = field(default_factory=CavityGeometry)
    magnetic: MagneticEnvironment = field(default_factory=MagneticEnvironment)
    pump_waist: float = 2.4e-3
    pump_propagation: tuple = (0.0, 0.0, 1.0)
    include_pump_doppler: bool = False

    def pump_beam(self, op: OperatingPoint) -> BeamGeometry:
        return BeamGeometry(self.pump_propagation, op.pump_polarization,
                            op.pump_power, self.pump_waist, op.pump_detuning)

    def pump_doppler_sigma(self) -> float:
        if not self.include_pump_doppler:
            return 0.0
        return atomics.doppler_sigma(self.ensemble.temperature,
                                     self.ensemble.species_mass,
                                     self.green.wavelength)


@dataclass(frozen=True)
class CalibrationConstants:
    """Fitted constants absorbing unmodelled efficiencies.

    ``gain_scale`` anchors the absolute gain, ``n_sat`` the photon number
    at which gain saturation halves the rate, and ``resonance_offset`` is an
    empirical shift of the two-photon resonance (default 0; the apparatus
    shows a small constant offset attributed to light shifts).
    """

    gain_scale: float = 1.0
    n_sat: float = 1.0
    resonance_offset: float = 0.0

    def __post_init__(self):
        if self.gain_scale <= 0 or self.n_sat <= 0:
            raise ValueError("gain_scale and n_sat must be positive")


UNIT_CALIBRATION = CalibrationConstants()


@dataclass(frozen=True)
class GainBreakdown:
    """Per-channel gain rates of one TEM family, 1/s."""

    family: int
    per_channel: dict            # m -> rate
    kappa: float

    @property
    def total(self) -> float:
        return sum(self.per_channel.values())

    @property
    def above_threshold(self) -> bool:
        return self.total >= self.kappa


@dataclass(frozen=True)
class LaserSolution:
    """Steady state of the coupled family rate equations."""

    photons: dict                # N -> photon number
    gains: dict                  # N -> unsaturated gain rate (1/s)
    lasing: dict                 # N -> bool (gain exceeds cavity loss)
    saturation: float            # sum(n)/n_sat at the fixed point
    kappa: float

    @property
    def total_photons(self) -> float:
        return sum(self.photons.values())

    @property
    def lasing_families(self) -> tuple:
        return tuple(sorted(n for n, on in self.lasing.items() if on))


def two_photon_resonance(pump_detuning: float, mot_detuning: float) -> float:
    """Cavity detuning that closes the two-photon cycle, Hz.

    The emitted and absorbed photon energies differ by exactly the trap
    beam detuning, so the resonant cavity detuning is their sum.
    """
    return pump_detuning + mot_detuning


def _lorentzian(delta_hz: float, fwhm_rad: float) -> float:
    hwhm_hz = fwhm_rad / (4.0 * np.pi)
    return hwhm_hz**2 / (delta_hz**2 + hwhm_hz**2)


def mode_gain(op: OperatingPoint, family: int, system: LaserSystem,
              calib: CalibrationConstants = UNIT_CALIBRATION) -> GainBreakdown:
    """Gain rates of the three Zeeman channels for one TEM family.

    Raises :class:`QuantizationAxisError` when the offset field is zero.
    """
    b = np.asarray(op.b_offset, float)
    b_mag = float(np.linalg.norm(b))
    weights = geometry.pump_excitation_weights(system.pump_beam(op), b)
    fraction = geometry.mode_overlap_fraction(system.ensemble, system.cavity,
                                              family)
    peak_ratio = geometry.family_peak_ratio(system.ensemble, system.cavity,
                                            family)
    g_family_sq = system.cavity.single_atom_coupling**2 * peak_ratio
    s_pump = atomics.saturation_parameter(
        op.pump_power, system.pump_waist,
        atomics.saturation_intensity(system.green))
    doppler = system.pump_doppler_sigma()
    family_offset = geometry.transverse_mode_frequency(
        family, system.cavity.family_spacing, system.cavity.family_step)
    delta_two_photon = (op.cavity_detuning + family_offset
                        - op.pump_detuning - op.mot_detuning
                        - calib.resonance_offset)
    lorentz = _lorentzian(delta_two_photon, system.blue.linewidth)

    per_channel = {}
    for m, w in zip(SUBLEVELS, weights):
        shift = atomics.zeeman_shift(system.green.lande_g_upper, m, b_mag)
        rho = atomics.excited_population(op.pump_detuning - shift,
                                         w * s_pump, system.green.linewidth,
                                         doppler)
        _, strength = geometry.cavity_emission_jones(m, b, system.cavity.axis)
        per_channel[m] = (calib.gain_scale * op.total_atoms * fraction
                          * g_family_sq * rho * strength * op.mot_saturation
                          * lorentz / system.green.linewidth)
    return GainBreakdown(family, per_channel, system.cavity.kappa)


def family_gains(op: OperatingPoint, families, system: LaserSystem,
                 calib: CalibrationConstants) -> dict:
    return {n: mode_gain(op, n, system, calib).total for n in families}


# ---------------------------------------------------------------------------
# Steady state
# ---------------------------------------------------------------------------

def _steady_state_from_gains(gains: dict, kappa: float, n_sat: float,
                             max_expansions: int = 200) -> LaserSolution:
    """Fixed point of dn_i/dt = (G_i/(1 + S) - kappa) n_i + G_i, S = sum n/n_sat.

    n_i(S) = G_i / (kappa - G_i/(1+S)) decreases in S, so
    f(S) = S - sum_i n_i(S)/n_sat is strictly increasing and has a unique
    root; it is bracketed and solved with Brent's method.
    """
    g = np.array([gains[n] for n in sorted(gains)])
    names = sorted(gains)
    if np.any(g < 0):
        raise ValueError("gain rates must be >= 0")
    g_max = g.max() if g.size else 0.0

    def photons(s_tot):
        denom = kappa - g / (1.0 + s_tot)
        return g / denom

    def f(s_tot):
        return s_tot - photons(s_tot).sum() / n_sat

    lo = max(0.0, g_max / kappa - 1.0)
    # nudge off the pole where the dominant family's photon number diverges
    step = max(lo * 1e-12, 1e-12)
    lo_probe = lo + step
    tries = 0
    while f(lo_probe) >= 0.0:
        if lo_probe <= lo + 1e-307 or tries > 60:
            break
        step *= 0.25
        lo_probe = lo + step
        tries += 1
    if f(lo_probe) >= 0.0:
        # below-threshold landscape: the root sits essentially at S ~ ASE/n_sat
        s_root = photons(lo_probe).sum() / n_sat
    else:
        hi = max(2.0 * (lo_probe + 1.0), 1.0)
        for _ in range(max_expansions):
            if f(hi) > 0.0:
                break
            hi *= 2.0
        else:
            raise SolverError("saturation fixed point not bracketed",
                              last_iterate=hi)
        s_root = brentq(f, lo_probe, hi, xtol=1e-300, rtol=8.9e-16,
                        maxiter=600)
    n = photons(s_root)
    return LaserSolution(
        photons=dict(zip(names, n.tolist())),
        gains=dict(zip(names, g.tolist())),
        lasing={name: bool(gi >= kappa) for name, gi in zip(names, g)},
        saturation=float(s_root),
        kappa=kappa,
    )


def steady_state(op: OperatingPoint, families, system: LaserSystem,
                 calib: CalibrationConstants) -> LaserSolution:
    """Steady-state photon numbers of the requested TEM families.

    Families with gain below the cavity loss settle on the amplified-
    spontaneous-emission branch n = G/(kappa - G); lasing families clamp
    the shared saturation.
    """
    gains = family_gains(op, families, system, calib)
    return _steady_state_from_gains(gains, system.cavity.kappa, calib.n_sat)


def output_power(n_photons: float, cavity: CavityGeometry,
                 wavelength: float = 556e-9) -> float:
    """Power through one mirror, W: eta * n * kappa * (h c / lambda)."""
    if n_photons < 0:
        raise ValueError("photon number must be >= 0")
    return (cavity.output_fraction * n_photons * cavity.kappa
            * sc.h * sc.c / wavelength)


# ---------------------------------------------------------------------------
# Calibration and thresholds
# ---------------------------------------------------------------------------

def reference_operating_point(op: OperatingPoint, system: LaserSystem,
                              pump_power: float = 7e-3) -> OperatingPoint:
    """The documented calibration anchor derived from an operating point.

    Pump at the documented 90-degree linear polarization and reference
    power, tuned to the Zeeman shift of the m=+1 sublevel at the
    configured offset field; cavity on the two-photon resonance.  Scan
    knobs of the operating point (its detunings, power and polarization)
    do not leak into the anchor, so calibration constants describe the
    apparatus, not one particular scan setting.
    """
    b_mag = float(np.linalg.norm(np.asarray(op.b_offset, float)))
    dp = atomics.zeeman_shift(system.green.lande_g_upper, 1, b_mag)
    return replace(op, pump_detuning=dp,
                   cavity_detuning=two_photon_resonance(dp, op.mot_detuning),
                   pump_power=pump_power,
                   pump_polarization=geometry.jones_linear(90.0))


def calibrate(system: LaserSystem, op: OperatingPoint | None = None,
              reference_atoms: float = 5000.0,
              reference_photons: float = 6e5,
              reference_pump_power: float = 4e-3,
              resonance_offset: float = 0.0) -> CalibrationConstants:
    """Anchor gain_scale and n_sat to the two documented reference points.

    gain_scale makes the fundamental-family gain equal the cavity loss at
    ``reference_atoms`` total atoms under the reference anchor (full 7 mW
    pump at 90 degrees, on the m=+1 resonance); n_sat makes the
    single-family photon number equal ``reference_photons`` at
    ``reference_pump_power`` with the operating point's atom number (the
    observed intracavity photon budget).
    """
    if reference_atoms <= 0:
        raise CalibrationError("reference threshold must be positive")
    op = op or OperatingPoint()
    anchor = replace(reference_operating_point(op, system),
                     total_atoms=reference_atoms)
    probe = CalibrationConstants(1.0, 1.0, resonance_offset)
    g_unit = mode_gain(anchor, 0, system, probe).total
    if not np.isfinite(g_unit) or g_unit <= 0.0:
        raise CalibrationError(
            "calibration failed: gain at the reference point is not positive "
            "(no sign change available for the threshold condition)")
    gain_scale = system.cavity.kappa / g_unit

    photon_anchor = reference_operating_point(op, system,
                                              pump_power=reference_pump_power)
    scaled = CalibrationConstants(gain_scale, 1.0, resonance_offset)
    g_ref = mode_gain(photon_anchor, 0, system, scaled).total
    kappa = system.cavity.kappa
    if g_ref <= kappa:
        raise CalibrationError(
            "calibration failed: photon-budget anchor is below threshold")
    n = reference_photons
    n_sat = n * (kappa * n - g_ref) / ((g_ref - kappa) * n + g_ref)
    if n_sat <= 0:
        raise CalibrationError("calibration failed: negative n_sat")
    return CalibrationConstants(float(gain_scale), float(n_sat),
                                float(resonance_offset))


def threshold_solve(vary: str, op: OperatingPoint, system: LaserSystem,
                    calib: CalibrationConstants, family: int = 0,
                    lo: float | None = None, hi: float | None = None,
                    rtol: float = 1e-9) -> float:
    """Value of ``atoms`` or ``pump_power`` at which family gain meets loss.

    Bisection on G(x) - kappa with bracket expansion; G is monotone in
    both quantities.  Raises :class:`NoThresholdError` when the gain never
    reaches the loss within the search range.
    """
    if vary == "atoms":
        lo = 1.0 if lo is None else lo
        hi = max(op.total_atoms, 10.0 * lo) if hi is None else hi
        make = lambda x: replace(op, total_atoms=x)
        cap = 1e12
    elif vary == "pump_power":
        lo = 1e-12 if lo is None else lo
        hi = max(op.pump_power, 10.0 * lo) if hi is None else hi
        make = lambda x: replace(op, pump_power=x)
        cap = 1e3
    else:
        raise ValueError("vary must be 'atoms' or 'pump_power'")

    def excess(x):
        return mode_gain(make(x), family, system, calib).total \
            - system.cavity.kappa

    while excess(hi) < 0.0:
        hi *= 4.0
        if hi > cap:
            raise NoThresholdError(
                f"no threshold in range: gain stays below the cavity loss "
                f"for {vary} up to {cap:g}")
    if excess(lo) > 0.0:
        raise NoThresholdError(
            f"gain already exceeds the loss at {vary} = {lo:g}")

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if excess(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= rtol * hi:
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Scans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DetuningMap:
    """Power over a (pump, cavity) detuning grid."""

    pump_detunings: np.ndarray
    cavity_detunings: np.ndarray
    total_power: np.ndarray      # W, shape (n_pump, n_cavity); NaN = failed
    family_powers: dict          # N -> same-shape array
    family_lasing: dict          # N -> bool array (gain above loss)
    lasing_any: np.ndarray       # bool, any family gain above loss
    ok: np.ndarray               # bool, cell solved

    def lobes(self):
        """Connected above-threshold regions with their power maxima.

        Returns a list of (pump_center, cavity_center, peak_power), one
        per 4-connected region, sorted by descending peak power.
        """
        labels, count = _ndlabel(self.lasing_any)
        out = []
        for k in range(1, count + 1):
            mask = labels == k
            powers = np.where(mask, self.total_power, -np.inf)
            i, j = np.unravel_index(np.nanargmax(powers), powers.shape)
            out.append((float(self.pump_detunings[i]),
                        float(self.cavity_detunings[j]),
                        float(self.total_power[i, j])))
        return sorted(out, key=lambda t: -t[2])

    def cavity_fwhm(self, pump_value: float) -> float:
        """FWHM in Hz of the power profile along the cavity axis at one
        pump detuning (linear interpolation between grid points)."""
        i = int(np.argmin(np.abs(self.pump_detunings - pump_value)))
        prof = self.total_power[i]
        peak = np.nanmax(prof)
        half = 0.5 * peak
        above = np.where(prof >= half)[0]
        if above.size < 2:
            return 0.0
        lo_i, hi_i = above[0], above[-1]
        x = self.cavity_detunings

        def cross(i0, i1):
            y0, y1 = prof[i0], prof[i1]
            if y1 == y0:
                return x[i0]
            return x[i0] + (half - y0) * (x[i1] - x[i0]) / (y1 - y0)

        left = cross(lo_i - 1, lo_i) if lo_i > 0 else x[0]
        right = cross(hi_i + 1, hi_i) if hi_i < x.size - 1 else x[-1]
        return float(right - left)


def detuning_map(op: OperatingPoint, system: LaserSystem,
                 calib: CalibrationConstants,
                 pump_detunings, cavity_detunings,
                 families=(0, 37, 74, 111), threads: int = 1) -> DetuningMap:
    """Steady-state output power over a detuning grid.

    Solver failures mark single cells as missing (NaN power, ok=False);
    the scan itself never aborts.
    """
    pump = np.asarray(pump_detunings, float)
    cav = np.asarray(cavity_detunings, float)
    families = tuple(families)
    shape = (pump.size, cav.size)
    total = np.full(shape, np.nan)
    fam_p = {n: np.full(shape, np.nan) for n in families}
    fam_las = {n: np.zeros(shape, bool) for n in families}
    lasing = np.zeros(shape, bool)
    ok = np.zeros(shape, bool)

    def solve_row(i):
        row = []
        for j in range(cav.size):
            cell = replace(op, pump_detuning=pump[i], cavity_detuning=cav[j])
            try:
                row.append(steady_state(cell, families, system, calib))
            except SolverError:
                row.append(None)
        return row

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(solve_row, range(pump.size)))
    else:
        rows = [solve_row(i) for i in range(pump.size)]

    for i, row in enumerate(rows):
        for j, sol in enumerate(row):
            if sol is None:
                continue
            ok[i, j] = True
            lasing[i, j] = bool(sol.lasing_families)
            total[i, j] = sum(
                output_power(nn, system.cavity, system.green.wavelength)
                for nn in sol.photons.values())
            for n in families:
                fam_p[n][i, j] = output_power(
                    sol.photons[n], system.cavity, system.green.wavelength)
                fam_las[n][i, j] = sol.lasing[n]
    return DetuningMap(pump, cav, total, fam_p, fam_las, lasing, ok)


@dataclass(frozen=True)
class ScanOptimum:
    x: float
    pump_opt: float | None       # Hz; None when nothing lases at this x
    cavity_opt: float | None     # Hz


@dataclass(frozen=True)
class OptimumScan:
    vary: str
    points: tuple                # of ScanOptimum
    slope: float                 # d(opt)/dx of the primary fitted relation
    intercept: float

    @property
    def valid_points(self):
        return [p for p in self.points if p.pump_opt is not None]


def _argmax_power(op, system, calib, families, pump_lo, pump_hi,
                  cavity_lo, cavity_hi, coarse=25):
    """Coarse grid argmax refined by alternating 1D Brent searches."""

    def power(dp, dc):
        cell = replace(op, pump_detuning=dp, cavity_detuning=dc)
        sol = steady_state(cell, families, system, calib)
        return sum(sol.photons.values()), bool(sol.lasing_families)

    dps = np.linspace(pump_lo, pump_hi, coarse)
    dcs = np.linspace(cavity_lo, cavity_hi, 2 * coarse)
    best = (-np.inf, None, None)
    any_lasing = False
    for dp in dps:
        for dc in dcs:
            p, las = power(dp, dc)
            any_lasing = any_lasing or las
            if p > best[0]:
                best = (p, dp, dc)
    if not any_lasing:
        return None, None
    dp, dc = best[1], best[2]
    span_p = (pump_hi - pump_lo) / (coarse - 1)
    span_c = (cavity_hi - cavity_lo) / (2 * coarse - 1)
    for _ in range(3):
        res = minimize_scalar(
            lambda x: -power(dp, x)[0], method="bounded",
            bounds=(max(cavity_lo, dc - 2 * span_c),
                    min(cavity_hi, dc + 2 * span_c)),
            options={"xatol": 1.0})
        dc = float(res.x)
        res = minimize_scalar(
            lambda x: -power(x, dc)[0], method="bounded",
            bounds=(max(pump_lo, dp - 2 * span_p),
                    min(pump_hi, dp + 2 * span_p)),
            options={"xatol": 1.0})
        dp = float(res.x)
    return dp, dc


def optimum_scan(vary: str, values, op: OperatingPoint, system: LaserSystem,
                 calib: CalibrationConstants, families=(0,),
                 pump_window=None, cavity_halfwidth: float = 25e6) -> OptimumScan:
    """Track the power optimum in (pump, cavity) detuning along a scan.

    ``vary`` is ``b_offset_magnitude`` (gauss, scaled along the operating
    point's field direction; the scan follows the sigma+ lobe) or
    ``mot_detuning`` (Hz).  Points where nothing lases are kept with None
    optima.  The fitted slope/intercept describe pump_opt(B) for the field
    scan and cavity_opt(mot detuning) for the trap-detuning scan.
    """
    b0 = np.asarray(op.b_offset, float)
    if vary == "b_offset_magnitude":
        b_mag0 = np.linalg.norm(b0)
        if b_mag0 == 0:
            raise ValueError("operating point needs a nonzero field direction")
        b_dir = b0 / b_mag0

        def make(x):
            return replace(op, b_offset=tuple(b_dir * x))
    elif vary == "mot_detuning":
        def make(x):
            return replace(op, mot_detuning=x)
    else:
        raise ValueError("vary must be 'b_offset_magnitude' or 'mot_detuning'")

    g_upper = system.green.lande_g_upper
    points = []
    for x in values:
        cell = make(float(x))
        b_mag = float(np.linalg.norm(np.asarray(cell.b_offset, float)))
        zeeman = atomics.zeeman_shift(g_upper, 1, b_mag)
        if pump_window is None:
            plo, phi = 0.25 * zeeman, 2.5 * zeeman + 2e6
        else:
            plo, phi = pump_window
        center = two_photon_resonance(zeeman, cell.mot_detuning)
        dp, dc = _argmax_power(cell, system, calib, families, plo, phi,
                               center - cavity_halfwidth,
                               center + cavity_halfwidth)
        points.append(ScanOptimum(float(x), dp, dc))

    good = [p for p in points if p.pump_opt is not None]
    if len(good) >= 2:
        xs = np.array([p.x for p in good])
        ys = np.array([p.pump_opt if vary == "b_offset_magnitude"
                       else p.cavity_opt for p in good])
        slope, intercept = np.polyfit(xs, ys, 1)
    else:
        slope, intercept = math.nan, math.nan
    return OptimumScan(vary, tuple(points), float(slope), float(intercept))
