"""Run configuration: flat key = value files with SI-unit suffixes.

Every key has a documented default; unknown keys are a hard error so a
typo can never silently fall back to a default.  Values accept unit
suffixes (MHz, mW, G, um, ...) and are normalized to the package's
internal units on load.  The configuration hash that seals a calibration
covers the apparatus keys the calibration constants depend on; scan knobs
and the seed are excluded (see _HASH_EXCLUDED).
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np

from . import geometry
from .atomics import MASS_YB174, AtomEnsemble, TransitionSpec
from .errors import ConfigError
from .gain import LaserSystem, OperatingPoint
from .geometry import CavityGeometry, MagneticEnvironment

_UNIT_SCALE = {
    "": 1.0,
    "hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9,
    "w": 1.0, "mw": 1e-3, "uw": 1e-6, "nw": 1e-9,
    "g": 1.0, "g/cm": 1.0,
    "m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "nm": 1e-9,
    "k": 1.0, "mk": 1e-3, "uk": 1e-6,
    "s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9,
    "deg": 1.0,
}

_VALUE_RE = re.compile(
    r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([a-zA-Zμ/]*)\s*$")


def parse_quantity(text: str) -> float:
    """Parse '7 mW', '-35MHz', '2.38 G' or a bare number to internal units."""
    m = _VALUE_RE.match(str(text))
    if not m:
        raise ConfigError(f"malformed value {text!r}")
    number, unit = m.groups()
    unit = unit.replace("μ", "u").lower()
    if unit not in _UNIT_SCALE:
        raise ConfigError(f"unknown unit {unit!r} in {text!r}")
    return float(number) * _UNIT_SCALE[unit]


def _parse_bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("on", "true", "yes", "1"):
        return True
    if t in ("off", "false", "no", "0"):
        return False
    raise ConfigError(f"expected on/off, got {text!r}")


def _parse_int_list(text: str) -> tuple:
    try:
        return tuple(int(tok) for tok in str(text).split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"malformed integer list {text!r}") from exc


def _parse_polarization(text: str):
    """'linear:ANGLE' (degrees from the cavity axis) or 'circular:left/right'."""
    t = str(text).strip().lower()
    if t.startswith("linear:"):
        return geometry.jones_linear(parse_quantity(t.split(":", 1)[1]))
    if t.startswith("circular:"):
        hand = t.split(":", 1)[1].strip()
        if hand in ("left", "l", "+"):
            return geometry.jones_circular(1)
        if hand in ("right", "r", "-"):
            return geometry.jones_circular(-1)
    raise ConfigError(f"malformed polarization {text!r} "
                      "(use linear:ANGLEdeg or circular:left|right)")


def _fmt_polarization(jones) -> str:
    j = np.asarray(jones, complex)
    if abs(j[1].imag) > 1e-9:
        return "circular:left" if j[1].imag > 0 else "circular:right"
    angle = np.rad2deg(np.arctan2(j[1].real, j[0].real)) % 180.0
    return f"linear:{angle:g}deg"


# key -> (parser, default-as-text, help)
_KEYS = {
    "total_atoms": (parse_quantity, "20e3",
                    "trapped atoms at the operating point (trap holds up to 1e7)"),
    "cloud_radius": (parse_quantity, "1 mm", "rms cloud radius per axis"),
    "temperature": (parse_quantity, "2 mK", "cloud temperature"),
    "atom_mass": (parse_quantity, repr(MASS_YB174), "species mass, kg"),
    "mot_gradient": (parse_quantity, "36 G/cm",
                     "axial quadrupole gradient (radial is half)"),
    "mot_detuning": (parse_quantity, "-35 MHz", "trap beam detuning"),
    "mot_saturation": (parse_quantity, "3.0",
                       "total trap drive, six beams x 0.5 I_sat"),
    "pump_power": (parse_quantity, "7 mW", "pump beam power"),
    "pump_waist": (parse_quantity, "2.4 mm", "pump 1/e^2 radius"),
    "pump_detuning": (parse_quantity, "5 MHz", "pump detuning"),
    "pump_polarization": (_parse_polarization, "linear:90deg",
                          "Jones state in the pump transverse basis"),
    "pump_doppler": (_parse_bool, "off",
                     "include Doppler broadening in the pump response"),
    "cavity_detuning": (parse_quantity, "-30 MHz", "cavity detuning"),
    "cavity_linewidth": (parse_quantity, "70 kHz",
                         "energy decay linewidth (ordinary frequency)"),
    "cavity_waist": (parse_quantity, "90 um", "TEM0 waist radius"),
    "cavity_length": (parse_quantity, "4.78 cm", "mirror spacing"),
    "cavity_coupling": (parse_quantity, "30 kHz",
                        "single-atom coupling (ordinary frequency)"),
    "cavity_output_fraction": (parse_quantity, "0.05",
                               "output power fraction per mirror"),
    "family_spacing": (parse_quantity, "6.9 MHz",
                       "frequency spacing of co-resonant TEM families"),
    "families": (_parse_int_list, "0,37,74,111",
                 "TEM families included in steady-state solves"),
    "b_offset_x": (parse_quantity, "2.38 G", "offset field, cavity axis"),
    "b_offset_y": (parse_quantity, "0 G", "offset field, y"),
    "b_offset_z": (parse_quantity, "0 G", "offset field, vertical"),
    "green_wavelength": (parse_quantity, "556 nm", "narrow-line wavelength"),
    "green_linewidth": (parse_quantity, "182 kHz",
                        "narrow-line natural width (ordinary frequency)"),
    "blue_wavelength": (parse_quantity, "399 nm", "broad-line wavelength"),
    "blue_linewidth": (parse_quantity, "29 MHz",
                       "broad-line natural width (ordinary frequency)"),
    "lande_g": (parse_quantity, "1.5", "upper-level Lande factor"),
    "laser_ripple": (parse_quantity, "0.01",
                     "relative rms intensity ripple of the laser regime"),
    "seed": (lambda t: int(t), "1", "master seed for all stochastic output"),
}

# The calibration hash covers exactly the keys the calibration constants
# depend on: the apparatus.  Scan knobs (detunings, pump power and
# polarization, family selection, ripple) and the seed vary between runs
# of a calibrated setup and must not invalidate it.
_HASH_EXCLUDED = {"seed", "pump_detuning", "cavity_detuning", "pump_power",
                  "pump_polarization", "families", "laser_ripple"}


@dataclass(frozen=True)
class RunConfig:
    """Typed view of a configuration; build with :func:`load_config`."""

    values: tuple  # sorted (key, value) pairs

    def __getitem__(self, key):
        return dict(self.values)[key]

    def as_dict(self):
        return dict(self.values)

    # -- factories for domain objects ------------------------------------

    def green(self) -> TransitionSpec:
        return TransitionSpec.green_556(self["green_wavelength"],
                                        2 * np.pi * self["green_linewidth"],
                                        self["lande_g"])

    def blue(self) -> TransitionSpec:
        return TransitionSpec.blue_399(self["blue_wavelength"],
                                       2 * np.pi * self["blue_linewidth"])

    def ensemble(self) -> AtomEnsemble:
        return AtomEnsemble(self["total_atoms"], self["cloud_radius"],
                            self["temperature"], self["atom_mass"])

    def cavity(self) -> CavityGeometry:
        return CavityGeometry(
            waist_radius=self["cavity_waist"], length=self["cavity_length"],
            kappa=2 * np.pi * self["cavity_linewidth"],
            single_atom_coupling=2 * np.pi * self["cavity_coupling"],
            output_fraction=self["cavity_output_fraction"],
            family_spacing=self["family_spacing"])

    def magnetic(self) -> MagneticEnvironment:
        return MagneticEnvironment(
            radial_gradient=self["mot_gradient"] / 2.0,
            offset_field=(self["b_offset_x"], self["b_offset_y"],
                          self["b_offset_z"]))

    def system(self) -> LaserSystem:
        return LaserSystem(green=self.green(), blue=self.blue(),
                           ensemble=self.ensemble(), cavity=self.cavity(),
                           magnetic=self.magnetic(),
                           pump_waist=self["pump_waist"],
                           include_pump_doppler=self["pump_doppler"])

    def operating_point(self) -> OperatingPoint:
        return OperatingPoint(
            pump_detuning=self["pump_detuning"],
            cavity_detuning=self["cavity_detuning"],
            mot_detuning=self["mot_detuning"],
            mot_saturation=self["mot_saturation"],
            pump_power=self["pump_power"],
            pump_polarization=self["pump_polarization"],
            b_offset=(self["b_offset_x"], self["b_offset_y"],
                      self["b_offset_z"]),
            total_atoms=self["total_atoms"])

    def families(self) -> tuple:
        return self["families"]

    def seed(self) -> int:
        return self["seed"]

    # -- canonical text and hashing --------------------------------------

    def canonical_lines(self) -> list:
        out = []
        for key, value in self.values:
            if key == "pump_polarization":
                text = _fmt_polarization(value)
            elif key == "families":
                text = ",".join(str(v) for v in value)
            elif isinstance(value, bool):
                text = "on" if value else "off"
            elif isinstance(value, int):
                text = str(value)
            else:
                text = repr(float(value))
            out.append(f"{key} = {text}")
        return out

    def config_hash(self) -> str:
        lines = [ln for ln in self.canonical_lines()
                 if ln.split(" = ")[0] not in _HASH_EXCLUDED]
        return hashlib.sha256("\n".join(lines).encode()).hexdigest()

    def replace(self, **overrides) -> "RunConfig":
        vals = self.as_dict()
        for key, value in overrides.items():
            if key not in _KEYS:
                raise ConfigError(f"unknown configuration key {key!r}")
            vals[key] = value
        return RunConfig(tuple(sorted(vals.items())))


def default_config() -> RunConfig:
    vals = {key: parser(default) for key, (parser, default, _) in _KEYS.items()}
    return RunConfig(tuple(sorted(vals.items())))


def parse_config_text(text: str) -> RunConfig:
    vals = {key: parser(default) for key, (parser, default, _) in _KEYS.items()}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', "
                              f"got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        parser = _KEYS[key][0]
        try:
            vals[key] = parser(value)
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") \
                from exc
    return RunConfig(tuple(sorted(vals.items())))


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def describe_keys() -> str:
    width = max(len(k) for k in _KEYS)
    lines = [f"{key:<{width}}  default {default:<12}  {help_}"
             for key, (_, default, help_) in _KEYS.items()]
    return "\n".join(lines)
