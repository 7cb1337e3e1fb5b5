import numpy as np
import pytest

from hotpa import curves as C
from hotpa import grid as G
from hotpa import thermal as TH
from hotpa import units as U
from hotpa import validation as V
from hotpa.hamiltonian import GroundHamiltonian, assemble_ground
from hotpa.spectral import diagonalize_partial_wave


@pytest.fixture(scope="module")
def toy_system():
    """64-interior-point Morse system, light mass, warm."""
    mass = 500.0
    g = G.make_grid(0.5, 20.0, 66)
    curve = C.morse_curve(0.05, 3.0, 1.0, 0.0)
    v = curve(g.r)
    beta = U.beta_from_kelvin(3000.0)
    dec = diagonalize_partial_wave(v, g, mass, asymptote=0.0)
    ham = GroundHamiltonian(g, mass, 0, v)
    return g, mass, v, beta, dec, ham


def test_ensemble_spec_validation():
    with pytest.raises(ValueError):
        TH.EnsembleSpec(temperature_k=100.0, n_realizations=0, j_max=5)
    with pytest.raises(ValueError):
        TH.EnsembleSpec(temperature_k=100.0, n_realizations=1, j_max=5,
                        weight_cutoff=2.0)
    with pytest.raises(ValueError):
        TH.EnsembleSpec(temperature_k=100.0, n_realizations=1, j_max=5,
                        method="bogus")
    with pytest.raises(ValueError):
        TH.EnsembleSpec(temperature_k=100.0, n_realizations=1, j_max=5,
                        method="gaussian-projected")   # needs r0
    spec = TH.EnsembleSpec(temperature_k=100.0, n_realizations=2, j_max=10,
                           j_stride=5)
    assert list(spec.j_values) == [0, 5, 10]


def test_integer_sum_windows_exact_for_constants():
    for js in ([0, 5, 10, 15], [0, 3, 6], [2, 7, 9, 14], [4]):
        w = TH.integer_sum_windows(js)
        # sum over sampled windows reproduces the count of integers J0..JK
        assert np.sum(w) == pytest.approx(js[-1] - js[0] + 1)


def test_classical_zj_closed_form_vs_quadrature():
    m = C.MG2_REDUCED_MASS
    beta = U.beta_from_kelvin(1000.0)
    for j in (0, 10, 100, 300):
        cf = TH.classical_zj(j, beta, m, 200.0)
        qd = V.classical_zj_quadrature(j, beta, m, 200.0)
        assert cf == pytest.approx(qd, rel=1e-8)
    assert TH.classical_zj(0, beta, m, 200.0) == 200.0
    zj = TH.classical_zj(np.arange(0, 3000, 50), beta, m, 200.0)
    assert np.all(np.diff(zj) < 0) and zj[-1] < 0.05 * zj[0]


def test_partition_box_single_state():
    beta = U.beta_from_kelvin(2000.0)
    e0 = 1.5e-3
    z, zj = TH.partition_function_box([3], [np.array([e0])], 2000.0)
    assert z == pytest.approx(7.0 * np.exp(-beta * e0))
    assert zj[0] == pytest.approx(np.exp(-beta * e0))


def test_partition_box_truncation_error():
    energies = [np.array([0.0]), np.array([0.0])]
    with pytest.raises(TH.TruncationError):
        TH.partition_function_box([0, 5], energies, 1000.0, tail_tol=1e-3)


def test_partition_box_eps_insensitive(toy_system):
    g, mass, v, beta, dec, ham = toy_system
    t_k = 3000.0
    z1, _ = TH.partition_function_box([0], [dec.energies], t_k, eps=1e-8,
                                      tail_tol=2.0)
    z2, _ = TH.partition_function_box([0], [dec.energies], t_k, eps=5e-9,
                                      tail_tol=2.0)
    assert abs(z2 - z1) < 1e-3 * z1


def test_grid_random_state_unit_amplitude(toy_system, rng):
    g = toy_system[0]
    st = TH.grid_random_state(4, g, rng)
    np.testing.assert_allclose(np.abs(st.amplitudes[0, 1:-1]), 1.0, atol=1e-14)
    assert st.amplitudes[0, 0] == 0.0 and st.amplitudes[0, -1] == 0.0


def test_grid_random_states_decorrelate_with_resolution():
    # |<psi1|psi2>|/|psi|^2 ~ N_R^(-1/2); compare two resolutions
    overlaps = {}
    for n in (66, 258):
        g = G.make_grid(0.5, 20.0, n)
        vals = []
        for k in range(40):
            a = TH.grid_random_state(0, g, np.random.default_rng(2 * k))
            b = TH.grid_random_state(0, g, np.random.default_rng(2 * k + 1))
            vals.append(abs(G.inner_product(a, b)) / (G.norm(a) * G.norm(b)))
        overlaps[n] = np.mean(vals)
    ratio = overlaps[66] / overlaps[258]
    assert ratio == pytest.approx(2.0, rel=0.35)   # sqrt(256/64) = 2


def test_grid_method_density_matches_eigen_sum(toy_system):
    g, mass, v, beta, dec, ham = toy_system
    n_runs = 250
    h = g.spacing
    dens = np.zeros(g.n_points)
    for k in range(n_runs):
        raw = TH.grid_random_state(0, g, np.random.default_rng(100 + k))
        th = TH.thermalize(raw, ham, beta)
        dens += np.abs(th.amplitudes[0]) ** 2 / (h * n_runs)
    exact = V.exact_thermal_density(dec.energies, dec.vectors, beta)
    mask = exact > 1e-3 * exact.max()
    # MC error ~ 1/sqrt(N); assert within 3 sigma-ish band
    rel = np.abs(dens[mask] - exact[mask]) / exact[mask]
    assert np.mean(rel) < 3.0 / np.sqrt(n_runs)


def test_eigen_realization_boltzmann_amplitudes(toy_system):
    g, mass, v, beta, dec, ham = toy_system
    st = TH.eigen_random_state(0, dec, beta, 1e-9, "all",
                               np.random.default_rng(7))
    c = (dec.vectors @ st.amplitudes[0]) * g.spacing
    w = np.exp(-beta * dec.energies)
    w /= w.sum()
    mask = w > 1e-8
    np.testing.assert_allclose(np.abs(c[mask]) ** 2, w[mask], rtol=1e-8)
    assert abs(G.norm(st) - 1.0) < 1e-8


def test_eigen_single_state_density_seed_independent():
    g = G.make_grid(0.5, 10.0, 34)
    dec = diagonalize_partial_wave(0.02 * (g.r - 5) ** 2, g, 400.0)
    # keep only the ground state by a brutal cutoff
    beta = 1.0 / dec.energies[1] * 60.0
    d = []
    for seed in (1, 2):
        st = TH.eigen_random_state(0, dec, beta, 1e-10, "all",
                                   np.random.default_rng(seed))
        d.append(np.abs(st.amplitudes[0]) ** 2)
    np.testing.assert_allclose(d[0], d[1], atol=1e-12)


def test_eigen_filters_drop_bound_states(toy_system):
    g, mass, v, beta, dec, ham = toy_system
    st = TH.eigen_random_state(0, dec, beta, 1e-9, "no-bound",
                               np.random.default_rng(3))
    bound = dec.energies < 0.0
    c = (dec.vectors @ st.amplitudes[0]) * g.spacing
    np.testing.assert_allclose(np.abs(c[bound]), 0.0, atol=1e-12)
    with pytest.raises(TH.EmptyEnsembleError):
        TH.eigen_random_state(0, dec, beta, 1.0 - 1e-9, "no-bound",
                              np.random.default_rng(3))


def test_phase_average_identity():
    rng = np.random.default_rng(5)
    n_states, n_runs = 12, 4000
    theta = rng.uniform(0, 2 * np.pi, size=(n_runs, n_states))
    phases = np.exp(1j * theta)
    avg = phases.T.conj() @ phases / n_runs   # (1/N) sum_k e^{i(ta-tb)}
    off = avg - np.eye(n_states)
    assert np.abs(np.diag(avg) - 1.0).max() < 1e-12
    assert np.abs(off).max() < 5.0 / np.sqrt(n_runs)


def test_thermal_gaussian_width(model_curves):
    g = G.make_grid(1.0, 60.0, 4097)
    t_k = 1000.0
    m = model_curves.reduced_mass
    amps = TH.thermal_gaussian(g, m, t_k, 35.0)
    sigma = np.sqrt(U.beta_from_kelvin(t_k) / (2 * m))
    dens = np.abs(amps) ** 2 * g.spacing
    mean = np.sum(g.r * dens)
    # |psi|^2 ~ exp(-(R-R0)^2/sigma^2) has std sigma/sqrt(2)
    width = np.sqrt(np.sum((g.r - mean) ** 2 * dens))
    assert mean == pytest.approx(35.0, abs=1e-10)
    assert width == pytest.approx(sigma / np.sqrt(2), rel=1e-9)


def test_gaussian_projected_vs_propagated():
    # needs a mesh fine enough for the thermal momentum width, otherwise
    # aliased packet components leak into the bound states and the two
    # paths (continuum-only vs full propagation) differ
    mass, t_k = 500.0, 3000.0
    g = G.make_grid(0.5, 20.0, 131)
    v = C.morse_curve(0.05, 3.0, 1.8, 0.0)(g.r)
    dec = diagonalize_partial_wave(v, g, mass, asymptote=0.0)
    ham = GroundHamiltonian(g, mass, 0, v)
    r0, tau = 15.0, 3.0e4
    a = TH.gaussian_random_state(0, g, mass, t_k, r0, tau, decomp=dec,
                                 path="projected")
    b = TH.gaussian_random_state(0, g, mass, t_k, r0, tau, ham=ham,
                                 path="propagated")
    da = np.abs(a.amplitudes[0]) ** 2
    db = np.abs(b.amplitudes[0]) ** 2
    np.testing.assert_allclose(da, db, atol=1e-6 * da.max())


def test_gaussian_tau_zero_reproduces_packet():
    mass = 500.0
    g = G.make_grid(0.5, 20.0, 131)
    v = C.morse_curve(0.05, 3.0, 1.8, 0.0)(g.r)
    dec = diagonalize_partial_wave(v, g, mass, asymptote=0.0)
    st = TH.gaussian_random_state(0, g, mass, 3000.0, 15.0, 0.0, decomp=dec)
    ref = TH.thermal_gaussian(g, mass, 3000.0, 15.0)
    # projection onto the box continuum leaves the packet essentially intact
    overlap = abs(np.vdot(ref, st.amplitudes[0]) * g.spacing)
    assert overlap > 0.9999


def test_validate_r0(model_curves):
    TH.validate_r0(model_curves, 35.0, 1000.0)
    with pytest.raises(ValueError, match="interaction region"):
        TH.validate_r0(model_curves, 8.0, 1000.0)


def test_partial_wave_weight_forms():
    beta = U.beta_from_kelvin(1000.0)
    # degeneracy scaling at fixed z_j
    w5 = TH.partial_wave_weight(5, "eigen", z_j=2.0, z_total=100.0)
    w11 = TH.partial_wave_weight(11, "eigen", z_j=2.0, z_total=100.0)
    assert w11 / w5 == pytest.approx(23.0 / 11.0)
    # stride multiplies
    assert TH.partial_wave_weight(5, "eigen", z_j=2.0, z_total=100.0, stride=5.0) \
        == pytest.approx(5 * w5)
    # gaussian: Boltzmann factor at R0, box-volume prefactor
    m = C.MG2_REDUCED_MASS
    wg = TH.partial_wave_weight(100, "gaussian-projected", z_total=1.0, beta=beta,
                                mass=m, r0=35.0, box_length=99.0)
    q1d = TH.momentum_prefactor_1d(beta, m)
    expected = 201.0 * q1d * 99.0 * np.exp(-beta * 100.0**2 / (2 * m * 35.0**2))
    assert wg == pytest.approx(expected, rel=1e-12)


def test_thermal_expectation_identity_and_errors(toy_system):
    g, mass, v, beta, dec, ham = toy_system
    spec = TH.EnsembleSpec(temperature_k=3000.0, n_realizations=6, j_max=2,
                           j_stride=1, method="eigen", weight_cutoff=1e-8,
                           seed=5)
    curves_toy = C.CurveSet(
        label="t", reduced_mass=mass, omega_l=U.omega_from_nm(840.0),
        ground=C.morse_curve(0.05, 3.0, 1.0, 0.0),
        excited=C.morse_curve(0.05, 3.0, 1.0, 0.1),
        upper=(C.morse_curve(0.05, 3.0, 1.0, 0.2),) * 3,
        two_photon_moment=C.constant_profile(1.0),
        stark_traces={k: C.constant_profile(1.0) for k in ("g", "e", "11", "22", "12")},
        dipoles=(C.constant_profile(1.0),) * 3,
        diabatic_coupling=C.constant_profile(0.0),
        upper_representation="diabatic")
    plan = TH.make_plan(spec, curves_toy, g, z_mode="quantum")
    realz = []
    for j, w, block in plan.iter_blocks():
        realz.extend(block)
    ones = np.ones(len(realz))
    total, err = TH.thermal_expectation(realz, ones)
    sum_weights = sum({r.J: r.weight for r in realz}.values())
    assert total == pytest.approx(sum_weights, rel=1e-10)
    assert err == pytest.approx(0.0, abs=1e-14)
    # constant a scales linearly
    total3, _ = TH.thermal_expectation(realz, 3.0 * ones)
    assert total3 == pytest.approx(3 * total, rel=1e-12)
    # weights sum below one plus truncation tolerance
    assert sum_weights <= 1.0 + 1e-6


def test_thermal_pair_density_single_realization(toy_system):
    g, mass, v, beta, dec, ham = toy_system
    st = TH.eigen_random_state(0, dec, beta, 1e-8, "all",
                               np.random.default_rng(2))
    realz = TH.Realization(k=0, J=0, state=st, weight=1.0, window=1.0,
                           method="eigen")
    r, rho = TH.thermal_pair_density([realz], 1)
    np.testing.assert_allclose(rho, np.abs(st.amplitudes[0]) ** 2 / g.r**2,
                               atol=1e-15)


def test_momentum_delta_variant_fails_in_interaction_region(toy_system):
    # documented negative control: kinetic-only Boltzmann weights on momentum
    # modes rebuild the free-region density but miss the interaction-region
    # structure (no e^{-beta V} enhancement, no scattering distortion)
    g, mass, v, beta, dec, ham = toy_system
    n_runs = 150
    dens = np.zeros(g.n_points)
    # sine-mode amplitude convention: a free grid-orthonormal state overlaps
    # one unit-amplitude mode with |<phi|mode>|^2 = (L + h)/2
    mode_norm = (g.box_length + g.spacing) / 2.0
    for k in range(n_runs):
        st = TH.momentum_delta_state(0, g, np.random.default_rng(900 + k),
                                     beta, mass)
        dens += np.abs(st.amplitudes[0]) ** 2 / (mode_norm * n_runs)
    exact = V.exact_thermal_density(dec.energies, dec.vectors, beta)
    # interaction region: within the well; free region: beyond
    well = (g.r > 2.0) & (g.r < 4.5)
    free = (g.r > 10.0) & (g.r < 18.0)
    rel_well = np.abs(dens[well] - exact[well]) / exact[well]
    rel_free = np.abs(dens[free] - exact[free]) / exact[free]
    assert np.mean(rel_free) < 0.25
    assert np.mean(rel_well) > 4 * np.mean(rel_free)


def test_rng_reproducible_per_realization():
    spec = TH.EnsembleSpec(temperature_k=1000.0, n_realizations=4, j_max=10,
                           j_stride=5, seed=42)
    a = spec.rng(5, 2).uniform(size=6)
    b = spec.rng(5, 2).uniform(size=6)
    c = spec.rng(5, 3).uniform(size=6)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
