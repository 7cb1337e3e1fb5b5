import numpy as np
import pytest

from hotpa import curves as C
from hotpa import grid as G
from hotpa import units as U
from hotpa import validation as V
from hotpa.hamiltonian import CapSpec
from hotpa import spectral as S


def test_particle_in_box_levels():
    g = G.make_grid(1.0, 21.0, 202)
    m = 50.0
    dec = S.diagonalize_partial_wave(np.zeros(g.n_points), g, m)
    exact = V.box_levels(12, m, g.box_length)
    np.testing.assert_allclose(dec.energies[:12], exact, rtol=1e-10)
    assert S.count_bound_states(dec, 0.0) == 0


def test_morse_levels_match_analytic():
    m = 800.0
    d_e, a, r_e = 0.05, 0.9, 4.0
    g = G.make_grid(0.5, 30.0, 601)
    c = C.morse_curve(d_e, r_e, a, 0.0)
    dec = S.diagonalize_partial_wave(C.interpolate(c, g), g, m)
    exact = V.morse_levels(d_e, a, m)
    n_check = min(10, len(exact))
    np.testing.assert_allclose(dec.energies[:n_check], exact[:n_check], rtol=1e-6)


def test_orthonormality_and_completeness(rng):
    g = G.make_grid(1.0, 15.0, 66)
    m = 300.0
    v = 0.02 * (g.r - 7.0) ** 2
    dec = S.diagonalize_partial_wave(v, g, m)
    h = g.spacing
    gram = dec.vectors @ dec.vectors.T * h
    np.testing.assert_allclose(gram, np.eye(dec.n_states), atol=1e-10)
    psi = rng.standard_normal(g.n_points) + 1j * rng.standard_normal(g.n_points)
    psi[0] = psi[-1] = 0.0
    coeffs = dec.vectors @ psi * h
    norm2 = np.vdot(psi, psi).real * h
    assert np.sum(np.abs(coeffs) ** 2) == pytest.approx(norm2, rel=1e-8)


def test_spectral_reconstruction_tiny():
    g = G.make_grid(1.0, 9.0, 12)
    m = 150.0
    v = 0.01 * (g.r - 5.0) ** 2
    dec = S.diagonalize_partial_wave(v, g, m)
    h_dense = G.kinetic_matrix_sine(g, m) + np.diag(v[1:-1])
    rebuilt = (dec.vectors[:, 1:-1].T * dec.energies) @ dec.vectors[:, 1:-1] * g.spacing
    np.testing.assert_allclose(rebuilt, h_dense, atol=1e-8)


def test_bound_count_monotone_in_j(model_curves):
    g = G.make_grid(1.0, 120.0, 1201)
    m = model_curves.reduced_mass
    v0 = C.interpolate(model_curves.ground, g)
    counts = []
    for j in (0, 20, 40, 60, 80):
        veff = v0 + G.centrifugal_term(g, j, m)
        dec = S.diagonalize_partial_wave(veff, g, m, e_ceiling=1e-4,
                                         want_vectors=False)
        counts.append(S.count_bound_states(dec, 0.0))
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    assert counts[0] > 0


def test_no_barrier_no_resonances():
    g = G.make_grid(1.0, 30.0, 241)
    m = 500.0
    # purely repulsive
    v_rep = 0.02 * np.exp(-(g.r - 1.0))
    cap = CapSpec(r_start_frac=0.8, strength=1e-3)
    assert S.find_shape_resonances(v_rep, g, m, cap) == []
    # attractive well without a barrier (J=0 Morse)
    v_mor = C.interpolate(C.morse_curve(0.02, 4.0, 0.9, 0.0), g)
    assert S.barrier_top(v_mor, 0.0) is None
    assert S.find_shape_resonances(v_mor, g, m, cap) == []


@pytest.fixture(scope="module")
def synthetic_barrier():
    """Well + Gaussian barrier supporting a few quasi-bound states."""
    m = 1000.0
    def v(r):
        return (-0.02 * np.exp(-((r - 3.0) ** 2) / 2.0)
                + 0.012 * np.exp(-((r - 6.0) ** 2) / 1.2))
    return m, v


def test_cap_resonances_vs_stabilization_oracle(synthetic_barrier):
    m, vf = synthetic_barrier
    g = G.make_grid(0.5, 40.0, 481)
    cap = CapSpec(r_start_frac=0.75, strength=2e-3, order=2)
    rows = S.find_shape_resonances(vf(g.r), g, m, cap)
    assert rows, "CAP finder found no resonance on the synthetic barrier"
    top, _ = S.barrier_top(vf(g.r), 0.0)
    oracle = V.stabilization_resonances(vf, m, 0.5, np.linspace(28.0, 40.0, 25),
                                        321, e_ceiling=top)
    assert oracle, "stabilization oracle found no resonance"
    for e_stab in oracle:
        best = min(rows, key=lambda r: abs(r.e_res - e_stab))
        assert abs(best.e_res - e_stab) < max(0.5 * best.gamma, 2e-5)


def test_cap_resonance_eta_stability(synthetic_barrier):
    m, vf = synthetic_barrier
    g = G.make_grid(0.5, 40.0, 481)
    rows1 = S.find_shape_resonances(vf(g.r), g, m, CapSpec(0.75, 2e-3, 2))
    rows2 = S.find_shape_resonances(vf(g.r), g, m, CapSpec(0.75, 4e-3, 2))
    for r1 in rows1:
        close = [r2 for r2 in rows2 if abs(r2.e_res - r1.e_res) < r1.gamma]
        assert close, f"resonance at {r1.e_res} not stable under eta doubling"
        assert abs(close[0].e_res - r1.e_res) < max(r1.gamma / 4, 5e-7)
    for r in rows1:
        assert r.gamma > 0
        assert np.isfinite(r.lifetime_ns)


def test_resonance_tagging_by_trapping(synthetic_barrier):
    m, vf = synthetic_barrier
    g = G.make_grid(0.5, 40.0, 481)
    v = vf(g.r)
    dec = S.diagonalize_partial_wave(v, g, m, e_ceiling=0.05)
    rows = S.find_shape_resonances(v, g, m, CapSpec(0.75, 2e-3, 2))
    S.tag_resonances(dec, v, resonances=rows, lifetime_cutoff_ns=1e6)
    tagged = np.nonzero(dec.tags == S.TAG_RESONANCE)[0]
    assert len(tagged) >= 1
    # tagged states sit between asymptote and barrier top
    top, _ = S.barrier_top(v, 0.0)
    for n in tagged:
        assert 0.0 < dec.energies[n] < top
    # each tagged state is close to a CAP resonance
    for n in tagged:
        assert min(abs(dec.energies[n] - r.e_res) for r in rows) < 2e-4


def test_model_scan_contiguous_window(model_curves):
    from hotpa.thermal import partition_grid
    m = model_curves.reduced_mass
    beta = U.beta_from_kelvin(1000.0)
    g = partition_grid(1.0, 40.0, m, beta)
    v0 = C.interpolate(model_curves.ground, g)
    cap = CapSpec(0.85, 1e-3, 2)
    found = {}
    for j in range(10, 121, 5):
        veff = v0 + G.centrifugal_term(g, j, m)
        rows = S.find_shape_resonances(veff, g, m, cap, J=j)
        rows = [r for r in rows if r.lifetime_ns < 10.0]
        if rows:
            found[j] = min(r.e_res for r in rows)
    js = sorted(found)
    assert js, "no shape resonances in the scanned window"
    assert js == list(range(js[0], js[-1] + 1, 5)), "window not contiguous"
    positions = [found[j] for j in js]
    assert all(a < b for a, b in zip(positions, positions[1:])), \
        "lowest resonance position not increasing with J"


def test_resonance_csv(tmp_path):
    rows = [S.ResonanceRow(J=40, e_res=1e-4, gamma=1e-6, lifetime_ns=0.02)]
    path = tmp_path / "res.csv"
    S.resonance_table_csv(rows, path)
    text = path.read_text()
    assert "J,E_hartree,E_kelvin,gamma_hartree,lifetime_ns" in text
    assert "40," in text
