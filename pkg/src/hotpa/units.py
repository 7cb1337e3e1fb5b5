# units.py
#
# Single source of truth for physical constants and unit conversions.
# Everything inside the engine is in Hartree atomic units (hbar = m_e =
# e = 1); this module is the only place where external units (cm^-1, eV,
# kelvin, femtoseconds, W/cm^2, angstrom, nm) are touched.
#
# Values are pinned to the CODATA-2022 adjustment; the revision tag below
# is recorded in every output manifest so results stay traceable to a
# constants release.

from __future__ import annotations

import math

CONSTANTS_REVISION = "CODATA-2022"

# Energy
HARTREE_TO_CM1 = 219474.63136314      # E_h <-> cm^-1
HARTREE_TO_EV = 27.211386245981
KB_AU = 3.1668115634564068e-06          # Boltzmann constant, E_h / K
HARTREE_TO_KELVIN = 1.0 / KB_AU

# Length
BOHR_TO_ANGSTROM = 0.529177210544

# Time
AU_TIME_SECONDS = 2.4188843265864e-17
FS_TO_AU = 1.0e-15 / AU_TIME_SECONDS        # 41.3413733352...
NS_TO_AU = 1.0e-9 / AU_TIME_SECONDS

# Mass
AMU_TO_AU = 1822.888486283

# Field / intensity.  Cycle-averaged convention: I = (1/2) eps0 c E0^2,
# so E0[a.u.] = sqrt(I / INTENSITY_AU_W_CM2).
INTENSITY_AU_W_CM2 = 3.509445527731e16

# hc in nm * hartree: photon energy E[E_h] = NM_HARTREE / lambda[nm]
NM_HARTREE = 1.0e7 / HARTREE_TO_CM1

_TO_HARTREE = {
    "hartree": 1.0,
    "au": 1.0,
    "cm-1": 1.0 / HARTREE_TO_CM1,
    "ev": 1.0 / HARTREE_TO_EV,
    "kelvin": KB_AU,
    "k": KB_AU,
}

_TO_BOHR = {
    "bohr": 1.0,
    "angstrom": 1.0 / BOHR_TO_ANGSTROM,
}

_TO_AU_TIME = {
    "au": 1.0,
    "fs": FS_TO_AU,
    "ns": NS_TO_AU,
}

_FAMILIES = {**{k: ("energy", v) for k, v in _TO_HARTREE.items()},
             **{k: ("length", v) for k, v in _TO_BOHR.items()},
             **{k: ("time", v) for k, v in _TO_AU_TIME.items()}}
# "au" is the atomic unit of whichever family the other unit fixes
_FAMILIES.pop("au")


def convert(value, from_unit: str, to_unit: str):
    """Convert ``value`` between two units of the same physical family.

    Unit names are case-insensitive; "au" denotes the atomic unit of the
    family fixed by the other unit (or the identity when both are "au").
    Raises ValueError for unknown units or a cross-family conversion.
    """
    fu, tu = from_unit.lower(), to_unit.lower()
    if fu == "au" and tu == "au":
        return value
    for u in (fu, tu):
        if u != "au" and u not in _FAMILIES:
            raise ValueError(f"unknown unit {u!r}")
    fam_f, fac_f = _FAMILIES[fu] if fu != "au" else (None, 1.0)
    fam_t, fac_t = _FAMILIES[tu] if tu != "au" else (None, 1.0)
    if fam_f is not None and fam_t is not None and fam_f != fam_t:
        raise ValueError(f"cannot convert {from_unit!r} ({fam_f}) to {to_unit!r} ({fam_t})")
    return value * (fac_f / fac_t)


def beta_from_kelvin(temperature_k: float) -> float:
    """Inverse temperature 1/(k_B T) in 1/hartree."""
    if temperature_k <= 0.0:
        raise ValueError("temperature must be positive")
    return 1.0 / (KB_AU * temperature_k)


def field_from_intensity(intensity_w_cm2: float) -> float:
    """Peak field amplitude E0 in a.u. from peak intensity in W/cm^2."""
    if intensity_w_cm2 < 0.0:
        raise ValueError("intensity must be nonnegative")
    return math.sqrt(intensity_w_cm2 / INTENSITY_AU_W_CM2)


def omega_from_nm(lambda_nm: float) -> float:
    """Photon energy (hartree) of central wavelength lambda [nm]."""
    if lambda_nm <= 0.0:
        raise ValueError("wavelength must be positive")
    return NM_HARTREE / lambda_nm
