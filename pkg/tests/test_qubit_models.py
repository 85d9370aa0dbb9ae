import warnings

import numpy as np
import pytest
from scipy.special import mathieu_a, mathieu_b

from qarray_chaos.errors import ConvergenceError, ParameterDomainError
from qarray_chaos.qubit_models import (
    CsfqSpec,
    TransmonSpec,
    approx_omega01_anharm,
    build_csfq_charge_hamiltonian,
    build_transmon_charge_hamiltonian,
    charge_cutoff_converged,
    csfq_seed,
    domega01_de_j,
    match_csfq_parameters,
    qubit_spectrum,
    site_spectrum,
    transmon_targets,
)

T = TransmonSpec(0.25, 44.0, 1.17)


def mathieu_levels(e_c, e_j, n):
    """Transmon levels at zero offset charge from Mathieu characteristic values."""
    q = e_j / (2 * e_c)
    vals = [mathieu_a(0, q)]
    k = 1
    while len(vals) < n:
        vals += [mathieu_b(2 * k, q), mathieu_a(2 * k, q)]
        k += 1
    return np.sort(np.array(vals[:n])) * e_c


def test_transmon_matches_mathieu_oracle():
    got = site_spectrum(T, None, 5).levels
    assert np.allclose(got, mathieu_levels(0.25, 44.0, 5), rtol=0, atol=1e-7)


def test_transmon_frozen_levels():
    got = site_spectrum(T, None, 5).levels
    got = got - got[0]
    assert np.allclose(got, [0, 9.1236519, 17.98018865, 26.55605076, 34.83511067], atol=1e-7)


def test_transmon_anharmonicity_exact_and_leading_order():
    s = site_spectrum(T, None, 3)
    assert s.anharm == pytest.approx(-0.2671151, abs=1e-6)
    # leading order -E_C holds only to about 7 percent at E_J/E_C = 176
    assert abs(s.anharm / -0.25 - 1) < 0.075


def test_free_charging_limit():
    h = build_transmon_charge_hamiltonian(0.25, 0.0, n_cut=5)
    assert np.allclose(np.sort(np.diag(h))[:3], [0, 1, 1])
    s = qubit_spectrum(h, 3)
    assert np.allclose(s.levels - s.levels[0], [0, 1, 1])


def test_charge_hamiltonian_structure():
    h = build_csfq_charge_hamiltonian(0.05, 300.0, 0.35, n_cut=4)
    assert h.shape == (9, 9)
    assert np.allclose(np.diag(h, 1), -300.0)
    assert np.allclose(np.diag(h, 2), 0.35 * 300.0 / 2)
    assert np.allclose(np.diag(h), 4 * 0.05 * np.arange(-4, 5) ** 2)
    assert np.array_equal(h, h.T)


def test_charge_elements_gauge_and_symmetry():
    s = site_spectrum(T, None, 4)
    n = s.charge_elems
    assert np.allclose(n, n.T, atol=1e-12)
    # parity: only neighbouring levels couple at leading order
    assert abs(n[0, 2]) < 1e-8 and abs(n[1, 3]) < 1e-8
    # harmonic-oscillator estimate (E_J / 8 E_C)^(1/4) / sqrt(2)
    assert abs(n[1, 0]) == pytest.approx((44 / 2.0) ** 0.25 / np.sqrt(2), rel=0.02)


def test_cutoff_convergence():
    assert charge_cutoff_converged(T, 50)
    assert not charge_cutoff_converged(TransmonSpec(0.01, 300.0), 5)


def test_validation():
    with pytest.raises(ParameterDomainError):
        TransmonSpec(-0.1, 44.0)
    with pytest.raises(ParameterDomainError):
        build_transmon_charge_hamiltonian(0.25, -1.0)
    with pytest.raises(ParameterDomainError):
        CsfqSpec(0.05, 300.0, 8.0, 0.1)
    with pytest.raises(ParameterDomainError):
        CsfqSpec(0.05, 300.0, 8.0, 0.5)
    CsfqSpec(0.05, 300.0, 8.0, 0.1, allow_nonpositive_u=True)
    with pytest.warns(UserWarning):
        TransmonSpec(1.0, 5.0)


def test_csfq_alpha_zero_reduces_to_transmon():
    # alpha = 0: 4 E_CF n^2 - E_JF cos, i.e. a transmon with E_J = 2 E_JF
    f = CsfqSpec(0.25, 22.0, 0.0, 0.0, allow_nonpositive_u=True)
    assert np.allclose(site_spectrum(f, None, 4).levels, site_spectrum(TransmonSpec(0.25, 44.0), None, 4).levels)


def test_csfq_positive_anharmonicity():
    f = CsfqSpec(0.054, 301.0, 8.51, 0.35)
    s = site_spectrum(f, None, 3)
    assert s.anharm > 0
    assert s.anharm == pytest.approx(0.26715, abs=2e-4)
    assert s.omega01 == pytest.approx(9.12701, abs=2e-4)


def test_approx_formulas():
    om, an = approx_omega01_anharm(T)
    assert om == pytest.approx(9.12417, abs=1e-4)
    assert an == pytest.approx(-0.26499, abs=1e-4)
    s = site_spectrum(T, None, 3)
    assert abs(an / s.anharm - 1) < 0.01
    f = CsfqSpec(0.054, 301.0, 8.51, 0.35)
    om_f, an_f = approx_omega01_anharm(f)
    sf = site_spectrum(f, None, 3)
    assert abs(om_f / sf.omega01 - 1) < 1e-3
    assert abs(an_f / sf.anharm - 1) < 0.07


def test_approx_error_decreases_with_ej_over_ec():
    errs = []
    for r in (50, 100, 200, 400):
        t = TransmonSpec(0.25, 0.25 * r)
        errs.append(abs(approx_omega01_anharm(t)[0] / site_spectrum(t, None, 3).omega01 - 1))
    assert all(a > b for a, b in zip(errs, errs[1:]))


def test_transmon_targets_frozen():
    om, dom, anh = transmon_targets(T)
    assert (om, dom, anh) == pytest.approx((9.1236519, 0.1248255, 0.2671151), abs=2e-6)
    # disorder over anharmonicity matches the quoted 0.47
    assert dom / anh == pytest.approx(0.467, abs=0.002)


def test_domega_de_j_matches_closed_form_slope():
    slope = domega01_de_j(T)
    assert slope == pytest.approx(np.sqrt(8 * 0.25 / 44.0) / 2, rel=0.02)


def test_match_reproduces_published_csfq():
    om, dom, anh = transmon_targets(T)
    f = match_csfq_parameters(om, dom, anh, 0.35)
    assert f.e_cf == pytest.approx(0.054, rel=0.03)
    assert f.e_jf_mean == pytest.approx(301.0, rel=0.03)
    assert f.e_jf_sigma == pytest.approx(8.51, rel=0.03)
    s = site_spectrum(f, None, 3)
    assert s.omega01 == pytest.approx(om, rel=1e-4)
    assert s.anharm == pytest.approx(anh, rel=1e-4)
    assert domega01_de_j(f) * f.e_jf_sigma == pytest.approx(dom, rel=1e-4)


def test_match_trend_over_alpha():
    om, dom, anh = transmon_targets(T)
    ecf, ratio = [], []
    for a in (0.25, 0.3, 0.35, 0.4, 0.45):
        f = match_csfq_parameters(om, dom, anh, a)
        ecf.append(f.e_cf)
        ratio.append(f.e_cf / csfq_seed(om, dom, anh, a)[1])
    assert all(x > y for x, y in zip(ecf, ecf[1:]))
    assert all(x > y > 1 for x, y in zip(ratio, ratio[1:]))


def test_match_fails_loudly_near_lower_alpha():
    om, dom, anh = transmon_targets(T)
    with pytest.raises(ConvergenceError) as info:
        match_csfq_parameters(om, dom, anh, 0.2)
    with pytest.raises(ParameterDomainError):
        match_csfq_parameters(om, dom, anh, 0.1)
