import numpy as np
import pytest

from hotpa import grid as G
from hotpa import hamiltonian as H
from hotpa import propagator as P
from hotpa import validation as V
from conftest import random_state


def _flat_ground(grid, mass, v=0.0):
    return H.GroundHamiltonian(grid, mass, 0, np.full(grid.n_points, v))


def test_zero_dt_is_identity(rng):
    g = G.make_grid(1.0, 11.0, 34)
    ham = _flat_ground(g, 50.0)
    st = random_state(g, ("g",), 0, rng)
    out = P.chebyshev_real_step(st, ham, 0.0)
    np.testing.assert_allclose(out.amplitudes, st.amplitudes, atol=1e-12)


def test_eigenstate_acquires_exact_phase(toy_curves):
    from hotpa.spectral import diagonalize_partial_wave
    g = G.make_grid(1.0, 25.0, 66)
    ham = H.assemble_ground(2, toy_curves, g)
    dec = diagonalize_partial_wave(ham.v_eff.real, g, toy_curves.reduced_mass)
    n = 4
    st = G.single_channel_state(g, dec.vectors[n], J=2)
    dt = 35.0
    out = P.chebyshev_real_step(st, ham, dt)
    target = np.exp(-1j * dec.energies[n] * dt) * dec.vectors[n]
    overlap = np.vdot(target, out.amplitudes[0]) * g.spacing
    fidelity = abs(overlap) ** 2
    assert fidelity > 1 - 1e-10
    np.testing.assert_allclose(out.amplitudes[0], target, atol=1e-9)


def test_free_gaussian_spreading_matches_analytic():
    m = 1.0
    g = G.make_grid(1.0, 61.0, 601)
    ham = _flat_ground(g, m)
    s0 = 1.0
    psi = np.exp(-((g.r - 31.0) ** 2) / (4 * s0**2)).astype(complex)
    st = G.normalize(G.single_channel_state(g, psi))
    t_total = 5.6568
    n_steps = 16
    plan = P.real_time_plan(*P.estimate_spectral_range(ham), t_total / n_steps)
    for _ in range(n_steps):
        st = P.chebyshev_real_step(st, ham, t_total / n_steps, plan=plan)
    dens = np.abs(st.amplitudes[0]) ** 2 * g.spacing
    mean = np.sum(g.r * dens)
    width = np.sqrt(np.sum((g.r - mean) ** 2 * dens))
    expected = V.free_gaussian_width(s0, m, t_total)
    assert width == pytest.approx(expected, rel=1e-6)


def test_norm_conservation_per_step(toy_curves, rng):
    g = G.make_grid(1.0, 25.0, 130)
    ham = H.assemble_ground(5, toy_curves, g)
    st = G.normalize(random_state(g, ("g",), 5, rng))
    e0, e1 = P.estimate_spectral_range(ham)
    plan = P.real_time_plan(e0, e1, 25.0)
    worst = 0.0
    for _ in range(50):
        st = P.chebyshev_real_step(st, ham, 25.0, plan=plan)
        worst = max(worst, abs(1.0 - G.norm(st)))
    assert worst <= 1e-9


def test_energy_conservation_static_h(toy_curves, rng):
    g = G.make_grid(1.0, 25.0, 130)
    ham = H.assemble_ground(1, toy_curves, g)
    st = G.normalize(random_state(g, ("g",), 1, rng))
    e_start = G.inner_product(st, ham(st)).real
    e0, e1 = P.estimate_spectral_range(ham)
    plan = P.real_time_plan(e0, e1, 20.0)
    for _ in range(1000):
        st = P.chebyshev_real_step(st, ham, 20.0, plan=plan)
    e_end = G.inner_product(st, ham(st)).real
    assert abs(e_end - e_start) <= 1e-8 * abs(e_start)


def test_imag_time_identity_and_eigenvalue(toy_curves):
    from hotpa.spectral import diagonalize_partial_wave
    g = G.make_grid(1.0, 25.0, 66)
    ham = H.assemble_ground(0, toy_curves, g)
    dec = diagonalize_partial_wave(ham.v_eff.real, g, toy_curves.reduced_mass)
    st = G.single_channel_state(g, dec.vectors[3])
    out0 = P.chebyshev_imag(st, ham, 0.0)
    np.testing.assert_allclose(out0.amplitudes, st.amplitudes, atol=1e-12)
    hb = 40.0
    out = P.chebyshev_imag(st, ham, hb)
    target = np.exp(-hb * dec.energies[3]) * dec.vectors[3]
    np.testing.assert_allclose(out.amplitudes[0], target,
                               atol=1e-10 * abs(target).max())


def test_spectral_range_brackets_dense_eigenvalues(toy_curves, tiny_grid):
    pulse = H.make_pulse(fwhm_fs=1.0, lambda_nm=840.0, intensity_w_cm2=5e12)
    ham = H.assemble_pa(6, toy_curves, tiny_grid, pulse)
    e_min, e_max = P.estimate_spectral_range(ham)
    vals = np.linalg.eigvalsh(V.dense_hamiltonian(ham, pulse.t_center))
    assert vals.min() >= e_min and vals.max() <= e_max
    ham_g = H.assemble_ground(0, toy_curves, tiny_grid)
    e_min, e_max = P.estimate_spectral_range(ham_g)
    vals = np.linalg.eigvalsh(V.dense_hamiltonian(ham_g))
    assert vals.min() >= e_min and vals.max() <= e_max
    # flat potential: E_min <= 0 <= E_max ~ grid kinetic max
    flat = _flat_ground(tiny_grid, 200.0)
    lo, hi = P.estimate_spectral_range(flat)
    assert lo <= 0.0 <= hi
    assert hi == pytest.approx(tiny_grid.max_kinetic_energy(200.0) * 1.05, rel=1e-10)
    # deep well -D: E_min <= -D
    deep = _flat_ground(tiny_grid, 200.0, v=-0.5)
    lo, hi = P.estimate_spectral_range(deep)
    assert lo <= -0.5


def test_plan_truncation_and_order_scaling():
    p1 = P.real_time_plan(-1.0, 1.0, 30.0, tolerance=1e-12)
    import scipy.special
    assert abs(scipy.special.jv(p1.order, 30.0)) < 1e-12
    p2 = P.real_time_plan(-1.0, 1.0, 60.0, tolerance=1e-12)
    assert p2.order < 2.3 * p1.order  # ~linear growth in dt * (E_max - E_min)
    assert p2.order > p1.order


def test_propagate_zero_pulse_leaves_x_population(toy_curves, rng):
    g = G.make_grid(1.0, 13.0, 40)
    pulse = H.PulseParameters(e0=0.0, fwhm=40.0, omega_l=toy_curves.omega_l)
    ham = H.assemble_pa(3, toy_curves, g, pulse)
    amps = np.zeros(g.n_points, complex)
    amps[1:-1] = rng.standard_normal(g.n_interior)
    st = H.pa_state(g, 3, ground_amps=amps)
    st.amplitudes /= G.norm(st)
    p0 = np.vdot(st.amplitudes[0], st.amplitudes[0]).real * g.spacing
    fin, rep = P.propagate_pulse(st, ham, -200.0, 200.0, 10.0)
    p1 = np.vdot(fin.amplitudes[0], fin.amplitudes[0]).real * g.spacing
    assert abs(p1 - p0) < 1e-12
    np.testing.assert_allclose(np.abs(fin.amplitudes[1:]), 0.0, atol=1e-13)


def test_propagate_matches_dense_oracle(toy_curves, tiny_grid, rng):
    pulse = H.make_pulse(fwhm_fs=1.0, lambda_nm=840.0, intensity_w_cm2=5e12)
    ham = H.assemble_pa(12, toy_curves, tiny_grid, pulse)
    st = random_state(tiny_grid, H.CHANNELS, 12, rng)
    st.amplitudes /= G.norm(st)
    t0 = pulse.t_center - 3 * pulse.fwhm
    t1 = pulse.t_center + 3 * pulse.fwhm
    dt = (t1 - t0) / 400
    fin, _ = P.propagate_pulse(st, ham, t0, t1, dt)
    oracle = V.propagate_dense(ham, st.amplitudes, t0, t1, dt_fine=dt / 10)
    a = fin.amplitudes[:, 1:-1].reshape(-1)
    b = oracle[:, 1:-1].reshape(-1)
    fid = abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real)
    assert fid >= 1 - 1e-8


def test_dt_halving_second_order(toy_curves, tiny_grid, rng):
    # midpoint freezing: halving dt shrinks the step error ~4x
    from hotpa.observables import excited_population
    pulse = H.make_pulse(fwhm_fs=1.0, lambda_nm=840.0, intensity_w_cm2=1e12)
    ham = H.assemble_pa(4, toy_curves, tiny_grid, pulse)
    amps = np.zeros(tiny_grid.n_points, complex)
    amps[1:-1] = rng.standard_normal(tiny_grid.n_interior)
    st = H.pa_state(tiny_grid, 4, ground_amps=amps)
    st.amplitudes /= G.norm(st)
    t0, t1 = -3 * pulse.fwhm, 3 * pulse.fwhm
    pe = {}
    for frac in (50, 100, 800):
        fin, _ = P.propagate_pulse(st, ham, t0, t1, pulse.fwhm / frac)
        pe[frac] = excited_population(fin)
    e_coarse = abs(pe[50] - pe[800])
    e_fine = abs(pe[100] - pe[800])
    assert e_fine < e_coarse
    assert e_coarse / e_fine == pytest.approx(4.0, rel=0.5)
    # and the halving change itself is below the declared step tolerance
    assert abs(pe[100] - pe[50]) <= 1e-3 * pe[800]


def test_bounds_violation_detected(toy_curves, rng):
    g = G.make_grid(1.0, 13.0, 66)
    ham = H.assemble_ground(0, toy_curves, g)
    bad_plan = P.real_time_plan(-1e-4, 1e-4, 2000.0)
    st = G.normalize(random_state(g, ("g",), 0, rng))
    with pytest.raises(P.SpectralBoundsError):
        P.chebyshev_real_step(st, ham, 2000.0, plan=bad_plan)


def test_norm_drift_abort(toy_curves, rng):
    g = G.make_grid(1.0, 13.0, 66)
    pulse = H.make_pulse(fwhm_fs=1.0, lambda_nm=840.0, intensity_w_cm2=5e12)
    ham = H.assemble_pa(0, toy_curves, g, pulse)
    st = random_state(g, H.CHANNELS, 0, rng)
    st.amplitudes /= G.norm(st)
    with pytest.raises(P.NormDriftError):
        P.propagate_pulse(st, ham, -3 * pulse.fwhm, 3 * pulse.fwhm,
                          pulse.fwhm / 20, tolerance=5e-4, norm_tol=1e-9)


def test_cap_absorbs_outgoing_packet(toy_curves):
    # outgoing free packet: norm decreases monotonically once the CAP is on
    g = G.make_grid(1.0, 41.0, 257)
    m = toy_curves.reduced_mass
    cap_arr = H.cap_potential(g, r_start=30.0, strength=5e-3, order=2)
    ham = H.GroundHamiltonian(g, m, 0, cap_arr)   # free + CAP
    k0 = 3.0
    psi = np.exp(-((g.r - 15.0) ** 2) / 8.0 + 1j * k0 * g.r)
    st = G.normalize(G.single_channel_state(g, psi))
    e0, e1 = P.estimate_spectral_range(ham)
    plan = P.real_time_plan(e0, e1, 100.0)
    norms = [G.norm(st)]
    for _ in range(80):
        st = P.chebyshev_real_step(st, ham, 100.0, plan=plan)
        norms.append(G.norm(st))
    norms = np.array(norms)
    assert norms[-1] < 0.1                     # most of the packet absorbed
    assert np.all(np.diff(norms) <= 1e-10)     # monotone decay
