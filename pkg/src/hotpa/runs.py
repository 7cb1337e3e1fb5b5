# runs.py
#
# Run orchestration: turn a RunConfig into ensembles, fan the (k, J)
# propagation jobs over a thread pool, reduce, and write the CSV tables
# and provenance manifests.
#
# Reductions are performed in sorted (J, k) order regardless of worker
# completion order, so a fixed seed gives bitwise-identical tables.

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import units
from .backend import BACKEND
from .config import RunConfig
from .curves import CurveSet, interpolate, load_curve_set, model_mg2
from .grid import RadialGrid, centrifugal_term, make_grid, suggested_n_points
from .hamiltonian import CapSpec, assemble_pa, make_pulse, pa_state
from .observables import (DensityAccumulator, ExperimentScaling,
                          ProjectionResidualError, excited_population,
                          initial_ground_purity, project_excited_eigenbasis)
from .propagator import propagate_pulse
from .spectral import diagonalize_partial_wave, find_shape_resonances
from .thermal import (EnsemblePlan, EnsembleSpec, integer_sum_windows,
                      make_plan, partition_function_box,
                      partition_function_classical, partition_grid,
                      z_ladder_j_values)

_METHOD_ALIASES = {"gaussian": "gaussian-projected"}


def resolve_curves(cfg: RunConfig) -> CurveSet:
    if cfg.curves_source == "model-mg2":
        return model_mg2()
    return load_curve_set(cfg.curves_source)


def resolve_grid(cfg: RunConfig, curves: CurveSet) -> RadialGrid:
    n = cfg.grid.n_points
    if n <= 0:
        probe = np.linspace(cfg.grid.r_min, cfg.grid.r_max, 4096)
        v_min = float(np.min(curves.ground(probe)) - curves.ground.asymptote)
        n = suggested_n_points(cfg.grid.r_min, cfg.grid.r_max, curves.reduced_mass,
                               cfg.ensemble.temperature_k, v_min=v_min,
                               factor=cfg.grid.kinetic_factor)
    return make_grid(cfg.grid.r_min, cfg.grid.r_max, n)


def ensemble_spec(cfg: RunConfig) -> EnsembleSpec:
    e = cfg.ensemble
    method = _METHOD_ALIASES.get(e.method, e.method)
    return EnsembleSpec(temperature_k=e.temperature_k,
                        n_realizations=e.n_realizations, j_max=e.j_max,
                        j_stride=e.j_stride, method=method,
                        weight_cutoff=e.weight_cutoff, state_filter=e.filter,
                        seed=e.seed, r0=e.r0 if method.startswith("gaussian") else None)


def make_pulse_from_config(cfg: RunConfig):
    p = cfg.pulse
    if p.e0 > 0.0:
        return make_pulse(fwhm_fs=p.fwhm_fs, lambda_nm=p.lambda_nm, e0=p.e0,
                          t_center_fs=p.t_center_fs)
    return make_pulse(fwhm_fs=p.fwhm_fs, lambda_nm=p.lambda_nm,
                      intensity_w_cm2=p.intensity_w_cm2,
                      t_center_fs=p.t_center_fs)


def _workers(cfg: RunConfig) -> int:
    return cfg.run.workers if cfg.run.workers > 0 else (os.cpu_count() or 1)


def write_manifest(cfg: RunConfig, outdir: str, name: str, extra: dict = None):
    import scipy

    os.makedirs(outdir, exist_ok=True)
    lines = [
        f"run = {name}",
        f"config_sha256 = {cfg.digest()}",
        f"seed = {cfg.ensemble.seed}",
        f"hotpa_version = {_pkg_version()}",
        f"numpy_version = {np.__version__}",
        f"scipy_version = {scipy.__version__}",
        f"kernel_backend = {BACKEND}",
        f"constants_revision = {units.CONSTANTS_REVISION}",
    ]
    if not cfg.outputs.deterministic:
        import datetime
        lines.append(f"timestamp = {datetime.datetime.now().isoformat()}")
    for k, v in (extra or {}).items():
        lines.append(f"{k} = {v}")
    with open(os.path.join(outdir, "manifest.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    with open(os.path.join(outdir, "config.txt"), "w", encoding="utf-8") as fh:
        fh.write(cfg.raw_text)


def _pkg_version() -> str:
    from . import __version__
    return __version__


def write_csv(path, header_meta: dict, columns: dict):
    """CSV with '#'-prefixed metadata lines; %.17g float formatting."""
    keys = list(columns)
    rows = len(next(iter(columns.values()))) if columns else 0
    with open(path, "w", encoding="utf-8") as fh:
        for k, v in header_meta.items():
            fh.write(f"# {k} = {v}\n")
        fh.write("# " + ",".join(keys) + "\n")
        for i in range(rows):
            cells = []
            for k in keys:
                v = columns[k][i]
                if isinstance(v, (int, np.integer)):
                    cells.append(str(int(v)))
                else:
                    cells.append("%.17g" % float(v))
            fh.write(",".join(cells) + "\n")


def ensemble_sidecar(plan: EnsemblePlan, outdir: str):
    spec = plan.spec
    path = os.path.join(outdir, "ensemble_manifest.txt")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"method = {spec.method}\n")
        fh.write(f"filter = {spec.state_filter}\n")
        fh.write(f"seed = {spec.seed}\n")
        fh.write(f"n_realizations = {spec.n_realizations}\n")
        fh.write(f"temperature_k = {spec.temperature_k}\n")
        fh.write(f"weight_cutoff = {spec.weight_cutoff}\n")
        fh.write(f"z_mode = {plan.z_mode}\n")
        fh.write(f"z_total = {plan.z_total!r}\n")
        fh.write("j_values = " + ",".join(str(int(j)) for j in spec.j_values) + "\n")


# -- runs -----------------------------------------------------------------------

def run_partition(cfg: RunConfig, outdir: str | None = None):
    """Quantum box partition function vs the classical closed form."""
    curves = resolve_curves(cfg)
    outdir = outdir or os.path.join(cfg.outputs.directory, "partition")
    t_k = cfg.ensemble.temperature_k
    beta = units.beta_from_kelvin(t_k)
    mass = curves.reduced_mass
    r_min, r_max = cfg.grid.r_min, cfg.grid.r_max

    pgrid = partition_grid(r_min, r_max, mass, beta)
    jlad = z_ladder_j_values(r_max, mass, beta, n_samples=cfg.tolerances.z_samples)
    v0 = interpolate(curves.ground, pgrid)
    energies = []
    for j in jlad:
        veff = v0 + centrifugal_term(pgrid, int(j), mass)
        dec = diagonalize_partial_wave(veff, pgrid, mass,
                                       asymptote=curves.ground.asymptote,
                                       want_vectors=False)
        energies.append(dec.energies)
    z_box, z_j = partition_function_box(jlad, energies, t_k,
                                        eps=min(cfg.ensemble.weight_cutoff, 1e-8),
                                        tail_tol=cfg.tolerances.partition_tail)
    z_cl, zj_cl_fn = partition_function_classical(t_k, r_max, mass)
    windows = integer_sum_windows(jlad)
    weights = windows * (2.0 * jlad + 1.0) * z_j / z_box

    write_manifest(cfg, outdir, "partition",
                   {"z_box": repr(z_box), "z_cl": repr(z_cl),
                    "ratio": repr(z_box / z_cl),
                    "partition_grid_points": pgrid.n_points})
    write_csv(os.path.join(outdir, "partition.csv"),
              {"temperature_k": t_k, "r_max": r_max, "z_box": repr(z_box),
               "z_cl": repr(z_cl)},
              {"J": jlad, "window": windows, "z_j_quantum": z_j,
               "z_j_classical": zj_cl_fn(jlad), "weight": weights})
    return {"z_box": z_box, "z_cl": z_cl, "j_values": jlad, "z_j": z_j,
            "weights": weights, "outdir": outdir}


def run_thermal_density(cfg: RunConfig, outdir: str | None = None):
    """Initial thermal pair density rho(R)/R^2 for the configured method."""
    curves = resolve_curves(cfg)
    grid = resolve_grid(cfg, curves)
    spec = ensemble_spec(cfg)
    outdir = outdir or os.path.join(cfg.outputs.directory, "thermal_density")
    os.makedirs(outdir, exist_ok=True)
    plan = make_plan(spec, curves, grid, z_mode=cfg.ensemble.z_mode,
                     z_samples=cfg.tolerances.z_samples)
    plan.lifetime_cutoff_ns = cfg.resonances.lifetime_cutoff_ns
    plan.resonance_cap = CapSpec(cfg.cap.r_start_frac, cfg.cap.strength,
                                 cfg.cap.order)

    dens = np.zeros(grid.n_points)
    weight_rows = []
    for j, window, block in plan.iter_blocks():
        for realz in block:
            amp2 = np.abs(realz.state.amplitudes[0]) ** 2
            dens += (realz.weight * realz.value_scale / spec.n_realizations) * amp2
        weight_rows.append((j, window, block[0].weight))
    rho_r2 = dens / grid.r**2

    write_manifest(cfg, outdir, "thermal-density")
    ensemble_sidecar(plan, outdir)
    write_csv(os.path.join(outdir, "density.csv"),
              {"method": spec.method, "filter": spec.state_filter,
               "temperature_k": spec.temperature_k, "seed": spec.seed},
              {"R_bohr": grid.r, "rho_over_r2": rho_r2})
    write_csv(os.path.join(outdir, "weights.csv"),
              {"z_total": repr(plan.z_total), "z_mode": plan.z_mode},
              {"J": [r[0] for r in weight_rows],
               "window": [r[1] for r in weight_rows],
               "weight": [r[2] for r in weight_rows]})
    return {"r": grid.r, "rho_over_r2": rho_r2, "plan": plan, "outdir": outdir}


@dataclass
class _JBlockResult:
    j: int
    window: float
    p_raw: float
    populations: np.ndarray
    coeffs: list
    n_m: int


def _propagate_block(cfg: RunConfig, curves, grid, plan: EnsemblePlan, pulse,
                     j: int, window: float, block, n_m: int,
                     workers: int, collect_coeffs: bool = True) -> _JBlockResult:
    """Propagate the N realizations of one J through the pump pulse."""
    ham = assemble_pa(j, curves, grid, pulse,
                      v_clip=cfg.tolerances.v_clip)
    t0 = pulse.t_center - cfg.pulse.window_fwhms * pulse.fwhm
    t1 = pulse.t_center + cfg.pulse.window_fwhms * pulse.fwhm
    dt = pulse.fwhm / cfg.pulse.dt_fraction

    def job(realz):
        st = pa_state(grid, j, ground_amps=realz.state.amplitudes[0])
        fin, _ = propagate_pulse(st, ham, t0, t1, dt,
                                 norm_tol=cfg.tolerances.norm_drift,
                                 tolerance=cfg.tolerances.cheb)
        return fin

    if workers > 1 and len(block) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            finals = list(pool.map(job, block))
    else:
        finals = [job(r) for r in block]

    pops = np.array([excited_population(f) for f in finals])
    coeffs = []
    if collect_coeffs:
        edec, n_m = _excited_decomposition(cfg, curves, grid, j, finals, n_m)
        for f in finals:
            c, _ = project_excited_eigenbasis(f, edec, n_m)
            coeffs.append(c)
    p_raw = block[0].weight / window
    return _JBlockResult(j=j, window=window, p_raw=p_raw, populations=pops,
                         coeffs=coeffs, n_m=n_m)


def _excited_decomposition(cfg: RunConfig, curves, grid, j, finals, n_m):
    """Excited-state eigenbasis sized so the projection residual is small."""
    v_e = interpolate(curves.excited, grid) + centrifugal_term(grid, j, curves.reduced_mass)
    tol = cfg.tolerances.projection_residual
    n_try = n_m
    while True:
        edec = diagonalize_partial_wave(v_e, grid, curves.reduced_mass,
                                        asymptote=curves.excited.asymptote,
                                        n_lowest=n_try)
        try:
            for f in finals:
                project_excited_eigenbasis(f, edec, n_try, residual_tol=tol)
            return edec, n_try
        except ProjectionResidualError:
            if n_try >= grid.n_interior or n_try >= 8 * n_m:
                raise
            n_try = min(2 * n_try, grid.n_interior)


def run_photoassociate(cfg: RunConfig, outdir: str | None = None,
                       collect_coeffs: bool = True):
    """Full pump run: ensemble, propagation, yields, purity, coherence."""
    curves = resolve_curves(cfg)
    grid = resolve_grid(cfg, curves)
    spec = ensemble_spec(cfg)
    pulse = make_pulse_from_config(cfg)
    outdir = outdir or os.path.join(cfg.outputs.directory, "photoassociate")
    os.makedirs(outdir, exist_ok=True)
    plan = make_plan(spec, curves, grid, z_mode=cfg.ensemble.z_mode,
                     z_samples=cfg.tolerances.z_samples)
    plan.lifetime_cutoff_ns = cfg.resonances.lifetime_cutoff_ns
    plan.resonance_cap = CapSpec(cfg.cap.r_start_frac, cfg.cap.strength,
                                 cfg.cap.order)
    workers = _workers(cfg)
    scaling = ExperimentScaling(cfg.scaling.density_cm3, grid.r_max)

    acc = DensityAccumulator(spec.n_realizations)
    rows = []
    total_yield = 0.0
    for j, window, block in plan.iter_blocks():
        res = _propagate_block(cfg, curves, grid, plan, pulse, j, window, block,
                               cfg.tolerances.n_m, workers,
                               collect_coeffs=collect_coeffs)
        if collect_coeffs:
            for k, pop in enumerate(res.populations):
                acc.add(j, window, res.p_raw, res.coeffs[k], float(pop))
        pe_mean = float(res.populations.mean())
        pe_err = float(res.populations.std(ddof=1) / np.sqrt(len(res.populations))) \
            if len(res.populations) > 1 else 0.0
        total_yield += window * res.p_raw * pe_mean
        z_pe = res.p_raw * plan.z_total * pe_mean
        rows.append((j, window, window * res.p_raw, pe_mean, pe_err, z_pe))

    weights_eff = np.array([r[2] for r in rows])
    windows = np.array([r[1] for r in rows])
    pg_box, pg = initial_ground_purity(weights_eff, windows, scaling)

    report = {
        "total_yield": total_yield,
        "pg_box": pg_box, "pg_scaled": pg,
        "p_box_sq": scaling.p_box_sq,
        "z_total": plan.z_total,
    }
    dm = None
    if collect_coeffs and total_yield > 0.0:
        dm = acc.finalize(scaling=scaling)
        report.update({
            "purity_box": dm.purity(),
            "purity_scaled": dm.scaled_purity(),
            "coherence": dm.dynamical_coherence(),
            "dm_trace": dm.trace(),
        })
        _write_dm(os.path.join(outdir, "density_matrix.csv"), dm)

    write_manifest(cfg, outdir, "photoassociate",
                   {k: repr(v) for k, v in report.items()})
    ensemble_sidecar(plan, outdir)
    write_csv(os.path.join(outdir, "yield.csv"),
              {"intensity_w_cm2": cfg.pulse.intensity_w_cm2,
               "fwhm_fs": cfg.pulse.fwhm_fs, "z_total": repr(plan.z_total)},
              {"J": [r[0] for r in rows], "window": [r[1] for r in rows],
               "weight": [r[2] for r in rows], "pe_mean": [r[3] for r in rows],
               "pe_stderr": [r[4] for r in rows], "z_pe": [r[5] for r in rows]})
    _write_report(os.path.join(outdir, "report.csv"), report)
    return {"rows": rows, "report": report, "dm": dm, "plan": plan,
            "outdir": outdir, "grid": grid}


def _write_report(path, report: dict):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# quantity,value\n")
        for k, v in report.items():
            if v is None:
                continue
            fh.write("%s,%.17g\n" % (k, float(v)))


def _write_dm(path, dm):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# yield = {dm.yield_!r}\n")
        fh.write("# m,J,m_prime,J_prime,re,im\n")
        for j in sorted(dm.blocks):
            b = dm.blocks[j]
            for m in range(b.shape[0]):
                for mp in range(b.shape[1]):
                    v = b[m, mp]
                    if v != 0.0:
                        fh.write("%d,%d,%d,%d,%.17g,%.17g\n"
                                 % (m, j, mp, j, v.real, v.imag))


def run_resonance_scan(cfg: RunConfig, outdir: str | None = None):
    """Shape resonances (CAP) for every scanned partial wave."""
    from .spectral import resonance_table_csv

    curves = resolve_curves(cfg)
    outdir = outdir or os.path.join(cfg.outputs.directory, "resonances")
    os.makedirs(outdir, exist_ok=True)
    beta = units.beta_from_kelvin(cfg.ensemble.temperature_k)
    mass = curves.reduced_mass
    pgrid = partition_grid(cfg.grid.r_min, cfg.grid.r_max, mass, beta)
    cap = CapSpec(cfg.cap.r_start_frac, cfg.cap.strength, cfg.cap.order)
    v0 = interpolate(curves.ground, pgrid)
    rows = []
    for j in range(cfg.resonances.j_min, cfg.resonances.j_max + 1,
                   cfg.resonances.j_stride):
        veff = v0 + centrifugal_term(pgrid, j, mass)
        rows.extend(find_shape_resonances(veff, pgrid, mass, cap, J=j,
                                          asymptote=curves.ground.asymptote))
    rows = [r for r in rows if r.lifetime_ns < cfg.resonances.lifetime_cutoff_ns]
    write_manifest(cfg, outdir, "resonances",
                   {"n_resonances": len(rows),
                    "resonance_grid_points": pgrid.n_points})
    resonance_table_csv(rows, os.path.join(outdir, "resonances.csv"))
    return {"rows": rows, "outdir": outdir}


def run_purity_scan(cfg: RunConfig, intensities, outdir: str | None = None):
    """Purity and coherence of the photoassociated molecules vs intensity."""
    outdir = outdir or os.path.join(cfg.outputs.directory, "purity_scan")
    os.makedirs(outdir, exist_ok=True)
    import copy

    table = []
    for i_w in intensities:
        sub = copy.deepcopy(cfg)
        sub.pulse.intensity_w_cm2 = float(i_w)
        sub.pulse.e0 = 0.0
        res = run_photoassociate(sub, outdir=os.path.join(outdir, f"I_{i_w:.3e}"))
        rep = res["report"]
        table.append((float(i_w), rep["total_yield"], rep.get("purity_box", np.nan),
                      rep.get("purity_scaled", np.nan), rep.get("coherence", np.nan)))
    write_manifest(cfg, outdir, "purity-scan",
                   {"intensities": ",".join("%g" % i for i in intensities)})
    write_csv(os.path.join(outdir, "purity_scan.csv"),
              {"fwhm_fs": cfg.pulse.fwhm_fs},
              {"intensity_w_cm2": [t[0] for t in table],
               "total_yield": [t[1] for t in table],
               "purity_box": [t[2] for t in table],
               "purity_scaled": [t[3] for t in table],
               "coherence": [t[4] for t in table]})
    return {"table": table, "outdir": outdir}
