import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qarray_chaos.errors import ParameterDomainError
from qarray_chaos.fock_basis import enumerate_sector
from qarray_chaos.hamiltonian import (
    BoseHubbardParams,
    build_bh_with_cr,
    build_bose_hubbard,
    build_coupled_array,
    cr_basis,
    parity_gauge,
    sign_flip_partner,
    subtract_mean_frequency,
    table1_map,
    table1_site,
)
from qarray_chaos.lattice import grid, linear_chain, surface7
from qarray_chaos.qubit_models import CsfqSpec, TransmonSpec, site_spectrum
from qarray_chaos.three_site import ThreeSiteParams, build_three_site_matrix

T = TransmonSpec(0.25, 44.0, 1.17)
F = CsfqSpec(0.054, 301.0, 8.51, 0.35)


def test_three_site_matrix_from_general_builder():
    p = ThreeSiteParams(1.0, 0.7, 0.13, 0.02)
    g = linear_chain(3)
    basis = enumerate_sector(3, 2)
    params = BoseHubbardParams([0.0, p.delta_omega, 0.0], [-p.u, p.u_c, -p.u], [p.j, p.j])
    h = build_bose_hubbard(params, g, basis)
    order = [basis.index(s) for s in [(2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2)]]
    assert np.allclose(h[np.ix_(order, order)], build_three_site_matrix(p), atol=1e-15)


def test_zero_hopping_is_diagonal():
    g = linear_chain(4)
    b = enumerate_sector(4, 3)
    om = np.array([0.1, -0.2, 0.3, 0.05])
    u = np.array([-0.25, 0.3, -0.2, 0.1])
    h = build_bose_hubbard(BoseHubbardParams(om, u, np.zeros(3)), g, b)
    assert np.count_nonzero(h - np.diag(np.diag(h))) == 0
    s = b.states
    assert np.allclose(np.diag(h), s @ om + (s * (s - 1) / 2) @ u)


def test_two_site_single_excitation_closed_form():
    g = linear_chain(2)
    b = enumerate_sector(2, 1)
    h = build_bose_hubbard(BoseHubbardParams([0.3, -0.1], [-0.25, -0.25], [0.07]), g, b)
    w = np.linalg.eigvalsh(h)
    mean, half = 0.1, 0.2
    assert np.allclose(w, [mean - np.hypot(half, 0.07), mean + np.hypot(half, 0.07)])


def test_two_bosons_on_two_sites():
    # basis 20, 11, 02: hop amplitude sqrt(2) J
    g = linear_chain(2)
    b = enumerate_sector(2, 2)
    h = build_bose_hubbard(BoseHubbardParams([0, 0], [-1.0, -1.0], [0.1]), g, b)
    i20, i11 = b.index((2, 0)), b.index((1, 1))
    assert h[i20, i11] == pytest.approx(np.sqrt(2) * 0.1)
    assert h[i20, i20] == pytest.approx(-1.0)


def test_second_order_shift_slope():
    # detuned pair: lower level moves by -J^2 / delta at small J
    g = linear_chain(2)
    b = enumerate_sector(2, 1)
    js = np.array([1e-4, 2e-4, 4e-4, 8e-4])
    shifts = []
    for j in js:
        w = np.linalg.eigvalsh(build_bose_hubbard(BoseHubbardParams([0.0, 0.5], [0, 0], [j]), g, b))
        shifts.append(-w[0])
    slope = np.polyfit(np.log(js), np.log(shifts), 1)[0]
    assert slope == pytest.approx(2.0, abs=1e-3)
    assert shifts[0] == pytest.approx(js[0] ** 2 / 0.5, rel=1e-6)


def test_builder_is_exactly_symmetric():
    g = surface7()
    b = enumerate_sector(7, 4)
    rng = np.random.default_rng(3)
    p = BoseHubbardParams(rng.normal(size=7), rng.normal(size=7), rng.normal(size=g.n_edges))
    h = build_bose_hubbard(p, g, b)
    assert np.array_equal(h, h.T)


def test_size_mismatch_rejected():
    g = linear_chain(4)
    with pytest.raises(ParameterDomainError):
        build_bose_hubbard(BoseHubbardParams(np.zeros(3), np.zeros(3), np.zeros(2)), g, enumerate_sector(4, 2))
    with pytest.raises(ParameterDomainError):
        build_bose_hubbard(BoseHubbardParams(np.zeros(4), np.zeros(4), np.zeros(3)), g, enumerate_sector(5, 2))
    with pytest.raises(ParameterDomainError):
        BoseHubbardParams([0.0, np.nan], [0.0, 0.0], [0.1])


def test_mean_subtraction_shifts_spectrum_uniformly():
    g = linear_chain(5)
    b = enumerate_sector(5, 3)
    p = BoseHubbardParams([5.1, 4.9, 5.3, 5.0, 4.7], [-0.25] * 5, [0.02] * 4)
    w0 = np.linalg.eigvalsh(build_bose_hubbard(p, g, b))
    w1 = np.linalg.eigvalsh(build_bose_hubbard(subtract_mean_frequency(p), g, b))
    assert np.allclose(w0 - w1, 3 * p.omega01.mean(), atol=1e-12)


def test_alternating_constructor():
    g = linear_chain(4)
    p = BoseHubbardParams.alternating(g, 0.0, -0.25, 0.01, eta=2.0)
    assert np.allclose(p.u, [-0.25, 0.5, -0.25, 0.5])


def test_table1_transmon_and_csfq():
    a, om, u = table1_site(T)
    assert (a, om, u) == pytest.approx((22.0, np.sqrt(88.0) - 0.25, -0.25))
    a, om, u = table1_site(F)
    assert u == pytest.approx(0.324)
    assert a == pytest.approx(0.3 * 301 / (4 * 0.054))
    assert om == pytest.approx(np.sqrt(16 * 0.3 * 301 * 0.054) + 0.054 * 1.8 / 0.3)


def test_table1_hopping_geometric_mean():
    g = linear_chain(2)
    p = table1_map([T, F], None, 0.002, g)
    a_t, a_f = table1_site(T)[0], table1_site(F)[0]
    assert p.j_edges[0] == pytest.approx(0.001 * (a_t * a_f) ** 0.25)
    with pytest.raises(ParameterDomainError):
        table1_site(T, -1.0)


def _random_params(rng, graph):
    m = graph.n_sites
    om = rng.normal(scale=0.2, size=m)
    return BoseHubbardParams(om - om.mean(), rng.normal(scale=0.3, size=m), rng.normal(scale=0.1, size=graph.n_edges))


@pytest.mark.parametrize("graph,n", [(linear_chain(6), 3), (surface7(), 3), (grid(3, 3), 2)])
def test_parity_gauge_flips_hopping(graph, n):
    b = enumerate_sector(graph.n_sites, n)
    rng = np.random.default_rng(0)
    p = _random_params(rng, graph)
    s = parity_gauge(b)
    flip = BoseHubbardParams(p.omega01, p.u, -p.j_edges)
    h = build_bose_hubbard(p, graph, b)
    assert np.array_equal(s[:, None] * h * s[None, :], build_bose_hubbard(flip, graph, b))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), which=st.sampled_from(["chain", "surface7", "grid"]))
def test_sign_flip_symmetry(seed, which):
    graph, n = {"chain": (linear_chain(6), 3), "surface7": (surface7(), 3), "grid": (grid(3, 3), 3)}[which]
    b = enumerate_sector(graph.n_sites, n)
    p = _random_params(np.random.default_rng(seed), graph)
    w = np.linalg.eigvalsh(build_bose_hubbard(p, graph, b))
    w2 = np.linalg.eigvalsh(build_bose_hubbard(sign_flip_partner(p), graph, b))
    scale = np.max(np.abs(w))
    assert np.max(np.abs(np.sort(-w2) - w)) <= 1e-9 * scale


def test_coupled_array_zero_coupling_and_single_excitation():
    g = linear_chain(2)
    b = enumerate_sector(2, 1)
    spectra = [site_spectrum(T, 44.0, 3), site_spectrum(T, 45.0, 3)]
    h0 = build_coupled_array(spectra, 0.0, g, b)
    assert np.allclose(sorted(np.diag(h0)), sorted([spectra[0].omega01, spectra[1].omega01]))
    k = 0.003
    h = build_coupled_array(spectra, k, g, b)
    expect = k * abs(spectra[0].charge_elems[1, 0] * spectra[1].charge_elems[1, 0])
    assert abs(h[0, 1]) == pytest.approx(expect, rel=1e-12)
    assert np.array_equal(h, h.T)


def test_coupled_array_close_to_mapped_bose_hubbard():
    # weak coupling: the qubit array and its Bose-Hubbard image share low spectra
    g = linear_chain(3)
    b = enumerate_sector(3, 2)
    ejs = [43.0, 44.0, 45.5]
    spectra = [site_spectrum(T, e, 3) for e in ejs]
    k = 1e-3
    w = np.linalg.eigvalsh(build_coupled_array(spectra, k, g, b))
    p = BoseHubbardParams(
        [s.omega01 for s in spectra], [s.anharm for s in spectra],
        [k * abs(spectra[i].charge_elems[1, 0] * spectra[j].charge_elems[1, 0]) for i, j in g.edges],
    )
    w_bh = np.linalg.eigvalsh(build_bose_hubbard(p, g, b))
    assert np.max(np.abs(w - w_bh)) < 2e-3


def test_coupled_array_needs_enough_levels():
    g = linear_chain(2)
    with pytest.raises(ParameterDomainError):
        build_coupled_array([site_spectrum(T, None, 2)] * 2, 0.01, g, enumerate_sector(2, 2))


def test_cr_block_structure():
    g = linear_chain(5)
    ext = cr_basis(g, 3)
    p = BoseHubbardParams([5.0, 5.1, 4.9, 5.05, 4.95], [-0.25] * 5, [0.02] * 4)
    h = build_bh_with_cr(p, g, ext)
    assert h.shape == (ext.dim, ext.dim)
    assert np.array_equal(h, h.T)
    lab = ext.labels
    r, c = np.nonzero(h)
    assert set(np.abs(lab[r] - lab[c]).tolist()) <= {0, 2}
    d = ext.core.dim
    assert np.allclose(h[:d, :d], build_bose_hubbard(p, g, ext.core))
    # pair creation from |00100> onto |01200> style states: sqrt((n_i+1)(n_j+1)) J
    big = np.max(np.abs(h[np.ix_(lab == 3, lab == 5)]))
    assert big == pytest.approx(0.02 * np.sqrt(3 * 2))


def test_cr_dimensions():
    assert cr_basis(linear_chain(10), 4).dim == 715 + 3930
    with pytest.raises(ParameterDomainError):
        cr_basis(linear_chain(4), 1)
