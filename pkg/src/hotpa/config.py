# config.py
#
# Flat "block.key = value" run configuration.  Diff-friendly text, no
# schema engine; every field has a documented default except the curve
# source and the temperature, which a run must state.

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields

from . import units


class ConfigError(ValueError):
    """Malformed or incomplete run configuration."""


@dataclass
class GridConfig:
    r_min: float = 1.0
    r_max: float = 200.0
    n_points: int = 0            # 0: auto from the kinetic-headroom formula
    kinetic_factor: float = 4.0  # auto rule: E_kin_max >= factor*kT + |V_min|


@dataclass
class PulseConfig:
    intensity_w_cm2: float = 5e12
    e0: float = 0.0              # nonzero overrides intensity (a.u. field)
    fwhm_fs: float = 100.0
    lambda_nm: float = 840.0
    t_center_fs: float = 0.0
    phase: str = "transform_limited"
    window_fwhms: float = 6.0    # propagate t_center +- window_fwhms * fwhm
    dt_fraction: float = 200.0   # dt = fwhm / dt_fraction


@dataclass
class EnsembleConfig:
    temperature_k: float = 0.0   # required
    n_realizations: int = 200
    j_max: int = 200
    j_stride: int = 5
    method: str = "eigen"
    filter: str = "all"
    seed: int = 1
    weight_cutoff: float = 1e-8
    r0: float = 35.0
    z_mode: str = "auto"


@dataclass
class ScalingConfig:
    density_cm3: float = 4.8e16


@dataclass
class CapConfig:
    r_start_frac: float = 0.85
    strength: float = 1e-3
    order: int = 2


@dataclass
class ResonanceConfig:
    j_min: int = 1
    j_max: int = 120
    j_stride: int = 1
    lifetime_cutoff_ns: float = 10.0


@dataclass
class ToleranceConfig:
    cheb: float = 1e-12
    norm_drift: float = 1e-5
    projection_residual: float = 1e-3
    n_m: int = 64                # initial excited-basis size (auto-grown)
    v_clip: float = 0.5          # rotating-frame diagonal ceiling, hartree
    partition_tail: float = 1e-3
    z_samples: int = 48


@dataclass
class OutputConfig:
    directory: str = "out"
    deterministic: bool = False


@dataclass
class RunSection:
    workers: int = 0             # 0: machine parallelism


@dataclass
class RunConfig:
    curves_source: str = ""      # "model-mg2" or a manifest path; required
    grid: GridConfig = field(default_factory=GridConfig)
    pulse: PulseConfig = field(default_factory=PulseConfig)
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    scaling: ScalingConfig = field(default_factory=ScalingConfig)
    cap: CapConfig = field(default_factory=CapConfig)
    resonances: ResonanceConfig = field(default_factory=ResonanceConfig)
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    outputs: OutputConfig = field(default_factory=OutputConfig)
    run: RunSection = field(default_factory=RunSection)
    raw_text: str = ""

    def validate(self):
        if not self.curves_source:
            raise ConfigError("curves.source is required (model-mg2 or manifest path)")
        if self.ensemble.temperature_k <= 0.0:
            raise ConfigError("ensemble.temperature_k is required and must be positive")
        if self.grid.r_min <= 0.0 or self.grid.r_max <= self.grid.r_min:
            raise ConfigError("grid must satisfy 0 < r_min < r_max")
        if self.pulse.fwhm_fs <= 0.0 or self.pulse.lambda_nm <= 0.0:
            raise ConfigError("pulse needs positive fwhm_fs and lambda_nm")
        if self.pulse.phase != "transform_limited":
            raise ConfigError("only transform_limited pulses are configurable here")
        return self

    def digest(self) -> str:
        return hashlib.sha256(self.raw_text.encode()).hexdigest()[:16]


_BLOCKS = {
    "grid": GridConfig, "pulse": PulseConfig, "ensemble": EnsembleConfig,
    "scaling": ScalingConfig, "cap": CapConfig, "resonances": ResonanceConfig,
    "tolerances": ToleranceConfig, "outputs": OutputConfig, "run": RunSection,
}

_FIELD_ALIASES = {("ensemble", "n"): "n_realizations"}


def _coerce(text: str, target_type):
    if target_type is bool:
        t = text.strip().lower()
        if t in ("true", "yes", "1", "on"):
            return True
        if t in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if target_type is int:
        return int(float(text))
    if target_type is float:
        return float(text)
    return text


def parse_config(text: str) -> RunConfig:
    """Parse 'block.key = value' lines into a validated RunConfig."""
    cfg = RunConfig(raw_text=text)
    block_fields = {name: {f.name: f.type for f in fields(klass)}
                    for name, klass in _BLOCKS.items()}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'block.key = value'")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key == "curves.source":
            cfg.curves_source = val
            continue
        if "." not in key:
            raise ConfigError(f"line {lineno}: key {key!r} needs a block prefix")
        block, _, name = key.partition(".")
        if block not in _BLOCKS:
            raise ConfigError(f"line {lineno}: unknown block {block!r}")
        name = _FIELD_ALIASES.get((block, name), name)
        if name not in block_fields[block]:
            raise ConfigError(f"line {lineno}: unknown key {block}.{name}")
        section = getattr(cfg, block)
        current = getattr(section, name)
        try:
            setattr(section, name, _coerce(val, type(current)))
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    return cfg.validate()


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def default_config_text(temperature_k: float = 1000.0,
                        curves: str = "model-mg2") -> str:
    """Config template with the documented defaults filled in."""
    return (
        f"curves.source = {curves}\n"
        f"ensemble.temperature_k = {temperature_k}\n"
    )


def beta_of(cfg: RunConfig) -> float:
    return units.beta_from_kelvin(cfg.ensemble.temperature_k)
