# curves.py
#
# Ingestion, validation, interpolation and transformation of all
# R-dependent input data: potential energy curves, one-photon transition
# dipoles, the two-photon transition moment profile, polarizability
# traces, and the diabatic coupling of the two upper Pi_u channels.
#
# Curves arrive either as sampled tables (text files, see load_curve for
# the format) or as analytic model records.  Everything is converted to
# atomic units at load time and is immutable afterwards, so curve sets
# can be shared freely across workers.
#
# The engine does not compute any of these profiles from electronic
# structure; ab initio data are input files.  A self-contained analytic
# "model-Mg2" set is shipped for testing and for qualitative
# reproductions (see model_mg2 below).

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import units
from .grid import RadialGrid


class CurveFormatError(ValueError):
    """Malformed curve file (header, units, or sample ordering)."""


class ExtrapolationError(ValueError):
    """Requested evaluation below the first sampled R."""


@dataclass(frozen=True)
class PotentialCurve:
    """One R-dependent profile: sampled table or analytic model.

    Sampled curves carry strictly increasing R (bohr) and values V
    (hartree, or plain a.u. for moment/polarizability profiles).
    Beyond the last sample the curve continues with a dispersion tail
    asymptote - sum C_n / R^n when long-range coefficients are present,
    and holds the asymptote otherwise.  Analytic models evaluate in
    closed form for any R > 0.
    """

    label: str
    asymptote: float = 0.0
    r_samples: np.ndarray | None = None
    v_samples: np.ndarray | None = None
    long_range: dict | None = None          # {n: C_n} in a.u.
    model: dict | None = None               # {"kind": ..., parameters...}
    _spline: CubicSpline | None = field(init=False, default=None, repr=False,
                                        compare=False)

    def __post_init__(self):
        if (self.r_samples is None) != (self.v_samples is None):
            raise CurveFormatError("r and v samples must be given together")
        if self.r_samples is not None:
            r = np.asarray(self.r_samples, dtype=float)
            v = np.asarray(self.v_samples, dtype=float)
            if r.ndim != 1 or r.shape != v.shape or r.size < 2:
                raise CurveFormatError("need two equally long 1-d sample columns")
            dr = np.diff(r)
            if np.any(dr <= 0.0):
                row = int(np.argmax(dr <= 0.0)) + 2
                raise CurveFormatError(f"R samples not strictly increasing at data row {row}")
            if not (np.all(np.isfinite(r)) and np.all(np.isfinite(v))):
                raise CurveFormatError("non-finite sample values")
            r.setflags(write=False)
            v.setflags(write=False)
            object.__setattr__(self, "r_samples", r)
            object.__setattr__(self, "v_samples", v)
            object.__setattr__(self, "_spline",
                               CubicSpline(r, v, bc_type="natural", extrapolate=False))
        elif self.model is None:
            raise CurveFormatError("curve needs samples or an analytic model")

    def __call__(self, r):
        """Evaluate at r (scalar or array, bohr)."""
        r = np.asarray(r, dtype=float)
        if self.model is not None:
            return _eval_model(self.model, self.asymptote, r)
        lo, hi = self.r_samples[0], self.r_samples[-1]
        if np.any(r < lo):
            raise ExtrapolationError(
                f"curve {self.label!r}: evaluation at R < first sample ({lo} bohr)")
        out = np.empty(r.shape, dtype=float)
        inside = r <= hi
        out[inside] = self._spline(r[inside])
        if np.any(~inside):
            out[~inside] = self._tail(r[~inside])
        return out if out.shape else float(out)

    def _tail(self, r):
        v = np.full(r.shape, self.asymptote)
        if self.long_range:
            for n, cn in self.long_range.items():
                v -= cn / r ** int(n)
        return v


def _eval_model(model: dict, asymptote: float, r):
    kind = model["kind"]
    if kind == "morse":
        u = np.exp(-model["a"] * (r - model["r_e"]))
        return asymptote + model["d_e"] * ((1.0 - u) ** 2 - 1.0)
    if kind == "constant":
        return np.full_like(r, model["value"], dtype=float)
    if kind == "lorentzian":
        w = model["width"]
        return model["area"] / math.pi * w / ((r - model["center"]) ** 2 + w**2)
    if kind == "gaussian_bump":
        w = model["width"]
        amp = model["area"] / (w * math.sqrt(2.0 * math.pi))
        return amp * np.exp(-0.5 * ((r - model["center"]) / w) ** 2)
    raise CurveFormatError(f"unknown analytic model kind {kind!r}")


def morse_curve(d_e: float, r_e: float, a: float, asymptote: float = 0.0,
                label: str = "morse") -> PotentialCurve:
    """V(R) = asymptote + D_e [(1 - exp(-a (R - R_e)))^2 - 1]."""
    if d_e <= 0.0 or a <= 0.0:
        raise ValueError("Morse needs d_e > 0 and a > 0")
    return PotentialCurve(label=label, asymptote=asymptote,
                          model={"kind": "morse", "d_e": d_e, "r_e": r_e, "a": a})


def constant_profile(value: float, label: str = "const") -> PotentialCurve:
    return PotentialCurve(label=label, asymptote=value,
                          model={"kind": "constant", "value": value})


def lorentzian_profile(area: float, center: float, width: float,
                       label: str = "lorentzian") -> PotentialCurve:
    """Lorentzian with given integral over the whole axis (for tau(R))."""
    return PotentialCurve(label=label, asymptote=0.0,
                          model={"kind": "lorentzian", "area": area,
                                 "center": center, "width": width})


def gaussian_bump_profile(area: float, center: float, width: float,
                          label: str = "gaussian") -> PotentialCurve:
    """Gaussian with given integral; decays fast enough that the rotation
    angle saturates before repulsive walls amplify any residual mixing."""
    return PotentialCurve(label=label, asymptote=0.0,
                          model={"kind": "gaussian_bump", "area": area,
                                 "center": center, "width": width})


# -- file I/O ----------------------------------------------------------------

_R_UNITS = {"bohr", "angstrom"}
_V_UNITS = {"hartree", "cm-1", "ev", "au"}


def load_curve(path) -> PotentialCurve:
    """Read a curve/profile file.

    Format: UTF-8 text; '#'-prefixed header lines of the form
    '# key = value'; required keys label, unit_R (bohr|angstrom), unit_V
    (hartree|cm-1|eV|au); optional keys asymptote (in unit_V) and C6,
    C8, C10 (atomic units); data lines are two whitespace-separated
    floats R V in ascending R.
    """
    header: dict[str, str] = {}
    rows: list[tuple[float, float]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if "=" in body:
                    key, _, val = body.partition("=")
                    header[key.strip().lower()] = val.strip()
                continue
            parts = line.split()
            if len(parts) != 2:
                raise CurveFormatError(f"{path}: line {lineno}: expected 'R V'")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise CurveFormatError(f"{path}: line {lineno}: {exc}") from None

    for key in ("label", "unit_r", "unit_v"):
        if key not in header:
            raise CurveFormatError(f"{path}: missing required header key {key}")
    unit_r = header["unit_r"].lower()
    unit_v = header["unit_v"].lower()
    if unit_r not in _R_UNITS:
        raise CurveFormatError(f"{path}: unknown unit_R tag {unit_r!r}")
    if unit_v not in _V_UNITS:
        raise CurveFormatError(f"{path}: unknown unit_V tag {unit_v!r}")
    if not rows:
        raise CurveFormatError(f"{path}: no data rows")

    r = units.convert(np.array([p[0] for p in rows]), unit_r, "bohr")
    v = units.convert(np.array([p[1] for p in rows]), unit_v, "hartree")
    asym = units.convert(float(header["asymptote"]), unit_v, "hartree") \
        if "asymptote" in header else float(v[-1])
    long_range = {}
    for n in (6, 8, 10):
        if f"c{n}" in header:
            long_range[n] = float(header[f"c{n}"])
    return PotentialCurve(label=header["label"], asymptote=asym,
                          r_samples=r, v_samples=v,
                          long_range=long_range or None)


def write_curve(curve: PotentialCurve, path, r_grid: np.ndarray | None = None):
    """Write a curve in atomic units.  Analytic curves require r_grid."""
    if curve.r_samples is not None:
        r, v = curve.r_samples, curve.v_samples
    else:
        if r_grid is None:
            raise ValueError("sampling grid required to write an analytic curve")
        r = np.asarray(r_grid, dtype=float)
        v = curve(r)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# label = {curve.label}\n")
        fh.write("# unit_R = bohr\n# unit_V = hartree\n")
        fh.write(f"# asymptote = {float(curve.asymptote)!r}\n")
        if curve.long_range:
            for n, cn in sorted(curve.long_range.items()):
                fh.write(f"# C{n} = {float(cn)!r}\n")
        for ri, vi in zip(r, v):
            fh.write(f"{float(ri)!r} {float(vi)!r}\n")


def interpolate(profile: PotentialCurve, grid: RadialGrid) -> np.ndarray:
    """Profile values on the grid points (see PotentialCurve.__call__)."""
    vals = np.asarray(profile(grid.r), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"profile {profile.label!r} not finite on the grid")
    return vals


# -- diabatization -----------------------------------------------------------

def diabatize(v_ad_1: PotentialCurve, v_ad_2: PotentialCurve,
              tau: PotentialCurve, grid: RadialGrid,
              tau_edge_tol: float = 1e-3):
    """Rotate an ordered adiabatic pair into diabatic potentials.

    The mixing angle is zeta(R) = int_R^inf tau(R') dR', evaluated by a
    trapezoid sum inward from the grid end (zeta(r_max) = 0; tau must
    have decayed there, which is validated against tau_edge_tol times
    its maximum).  Returns (V11, V22, V12) arrays with

        V11 = c^2 V1 + s^2 V2,  V22 = s^2 V1 + c^2 V2,
        V12 = c s (V2 - V1),    c = cos zeta, s = sin zeta.
    """
    v1 = interpolate(v_ad_1, grid)
    v2 = interpolate(v_ad_2, grid)
    t = interpolate(tau, grid)
    if np.any(v2 - v1 < -1e-12):
        raise ValueError("adiabatic curves must satisfy V1 <= V2 pointwise")
    tmax = np.max(np.abs(t))
    if tmax > 0.0 and abs(t[-1]) > tau_edge_tol * tmax:
        raise ValueError("tau has not decayed at the grid end; enlarge the box")

    h = grid.spacing
    seg = 0.5 * (t[1:] + t[:-1]) * h
    zeta = np.zeros(grid.n_points)
    zeta[:-1] = np.cumsum(seg[::-1])[::-1]

    c, s = np.cos(zeta), np.sin(zeta)
    v11 = c**2 * v1 + s**2 * v2
    v22 = s**2 * v1 + c**2 * v2
    v12 = c * s * (v2 - v1)
    return v11, v22, v12


# -- curve sets ---------------------------------------------------------------

ROLES = ("ground", "excited", "upper1", "upper2", "upper3", "M",
         "alpha_g", "alpha_e", "alpha_11", "alpha_22", "alpha_12",
         "mu1", "mu2", "mu3", "V12", "tau")

# accepted and ignored by the dynamics; slots reserved for the triplet
# manifold and its spin-orbit couplings
RESERVED_ROLES = ("triplet1", "triplet2", "triplet3", "W1", "W2", "W3")


@dataclass(frozen=True)
class CurveSet:
    """All R-dependent inputs for one molecule, in atomic units.

    upper holds the two Pi_u-block curves plus the Sigma_u+ curve.  When
    upper_representation == "adiabatic" the first two are adiabatic and
    diabatic_block() rotates them with nonadiabatic_tau; when "diabatic"
    they are used as-is together with diabatic_coupling.
    """

    label: str
    reduced_mass: float                 # a.u. (electron masses)
    omega_l: float                      # hartree; frequency tag of M and alpha
    ground: PotentialCurve
    excited: PotentialCurve
    upper: tuple
    two_photon_moment: PotentialCurve
    stark_traces: dict                  # keys g, e, 11, 22, 12
    dipoles: tuple                      # mu1, mu2, mu3
    diabatic_coupling: PotentialCurve | None = None
    nonadiabatic_tau: PotentialCurve | None = None
    upper_representation: str = "diabatic"

    def __post_init__(self):
        if self.reduced_mass <= 0.0:
            raise ValueError("reduced mass must be positive")
        if len(self.upper) != 3 or len(self.dipoles) != 3:
            raise ValueError("need three upper curves and three dipole profiles")
        for key in ("g", "e", "11", "22", "12"):
            if key not in self.stark_traces:
                raise ValueError(f"missing polarizability trace {key!r}")
        if self.upper_representation == "diabatic":
            if self.diabatic_coupling is None:
                raise ValueError("diabatic upper block needs a V12 profile")
        elif self.upper_representation == "adiabatic":
            if self.nonadiabatic_tau is None:
                raise ValueError("adiabatic upper block needs a tau profile")
        else:
            raise ValueError("upper_representation must be adiabatic or diabatic")

    def diabatic_block(self, grid: RadialGrid):
        """(V11, V22, V12) arrays of the upper Pi_u block on the grid."""
        if self.upper_representation == "diabatic":
            return (interpolate(self.upper[0], grid),
                    interpolate(self.upper[1], grid),
                    interpolate(self.diabatic_coupling, grid))
        return diabatize(self.upper[0], self.upper[1],
                         self.nonadiabatic_tau, grid)

    def max_asymptote(self) -> float:
        return max(self.ground.asymptote, self.excited.asymptote,
                   *(c.asymptote for c in self.upper))


def load_curve_set(manifest_path) -> CurveSet:
    """Read a curve-set manifest: 'role = path' lines plus scalar keys.

    Scalar keys: label, reduced_mass_amu, omega_l_nm.  Role keys are the
    entries of ROLES; RESERVED_ROLES are accepted and ignored.  Paths
    are relative to the manifest file.
    """
    import os

    entries: dict[str, str] = {}
    with open(manifest_path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise CurveFormatError(f"{manifest_path}: line {lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            entries[key.strip()] = val.strip()

    base = os.path.dirname(os.path.abspath(manifest_path))

    def curve_for(role, required=True):
        if role not in entries:
            if required:
                raise CurveFormatError(f"{manifest_path}: missing role {role!r}")
            return None
        return load_curve(os.path.join(base, entries[role]))

    for key in ("reduced_mass_amu", "omega_l_nm"):
        if key not in entries:
            raise CurveFormatError(f"{manifest_path}: missing key {key!r}")

    has_v12 = "V12" in entries
    has_tau = "tau" in entries
    if not has_v12 and not has_tau:
        raise CurveFormatError(f"{manifest_path}: need V12 (diabatic) or tau (adiabatic)")

    known = set(ROLES) | set(RESERVED_ROLES) | {"label", "reduced_mass_amu", "omega_l_nm"}
    unknown = [k for k in entries if k not in known]
    if unknown:
        raise CurveFormatError(f"{manifest_path}: unknown roles {unknown}")

    return CurveSet(
        label=entries.get("label", "user"),
        reduced_mass=float(entries["reduced_mass_amu"]) * units.AMU_TO_AU,
        omega_l=units.omega_from_nm(float(entries["omega_l_nm"])),
        ground=curve_for("ground"),
        excited=curve_for("excited"),
        upper=(curve_for("upper1"), curve_for("upper2"), curve_for("upper3")),
        two_photon_moment=curve_for("M"),
        stark_traces={"g": curve_for("alpha_g"), "e": curve_for("alpha_e"),
                      "11": curve_for("alpha_11"), "22": curve_for("alpha_22"),
                      "12": curve_for("alpha_12")},
        dipoles=(curve_for("mu1"), curve_for("mu2"), curve_for("mu3")),
        diabatic_coupling=curve_for("V12", required=False),
        nonadiabatic_tau=curve_for("tau", required=False),
        upper_representation="diabatic" if has_v12 else "adiabatic",
    )


# -- shipped analytic model ----------------------------------------------------

CM1 = 1.0 / units.HARTREE_TO_CM1

# Mg atomic excitation energies (cm^-1) used to anchor the model asymptotes
_MG_1P = 35051.264          # 3s3p 1P
_MG_3P = 21870.464          # 3s3p 3P1
_MG_2S = 43503.333          # 3s4s 1S

MG2_REDUCED_MASS = 0.5 * 23.985041697 * units.AMU_TO_AU

# Ground-well Morse steepness fitted so the J=0 curve supports exactly 19
# bound levels (sqrt(2 m D_e)/a ~ 19.25)
_MODEL_A_X = 0.4808


def model_mg2() -> CurveSet:
    """Analytic model curve set for the magnesium dimer.

    The X well matches the literature depth and position (D_e = 430
    cm^-1 at R_e = 7.33 bohr) with the Morse steepness fitted to 19
    bound levels; the excited and upper wells take literature depths and
    positions with synthetic Morse shapes; the moment and polarizability
    profiles are constants of representative magnitude; the Pi_u pair is
    given adiabatically with a narrow Gaussian radial coupling (area
    pi/2 at the 8.2 bohr avoided crossing), so the diabatic block is
    produced by the production diabatize() path.  Figure-level
    reproductions with this set are qualitative.
    """
    return CurveSet(
        label="model-mg2",
        reduced_mass=MG2_REDUCED_MASS,
        omega_l=units.omega_from_nm(840.0),
        ground=morse_curve(430 * CM1, 7.33, _MODEL_A_X, 0.0, label="X1Sg+"),
        excited=morse_curve(18077 * CM1, 5.10, 0.50, _MG_1P * CM1, label="(1)1Pig"),
        upper=(
            morse_curve(5395 * CM1, 5.50, 0.70, _MG_1P * CM1, label="(1)1Piu"),
            morse_curve(8500 * CM1, 5.75, 0.80, 2 * _MG_3P * CM1, label="(2)1Piu"),
            morse_curve(8262 * CM1, 5.57, 0.75, _MG_2S * CM1, label="(2)1Su+"),
        ),
        two_photon_moment=constant_profile(60.0, label="M"),
        stark_traces={"g": constant_profile(150.0, label="alpha_g"),
                      "e": constant_profile(300.0, label="alpha_e"),
                      "11": constant_profile(250.0, label="alpha_11"),
                      "22": constant_profile(250.0, label="alpha_22"),
                      "12": constant_profile(20.0, label="alpha_12")},
        dipoles=(constant_profile(2.5, label="mu1"),
                 constant_profile(1.5, label="mu2"),
                 constant_profile(1.0, label="mu3")),
        nonadiabatic_tau=gaussian_bump_profile(math.pi / 2, 8.2, 0.25, label="tau"),
        upper_representation="adiabatic",
    )
